//! Worst-case quadratic penalty active-set solvers for sparse least squares.
//!
//! The elastic net and the ℓ∞,1 group Lasso are rewritten as
//! `min_β max_{γ ∈ D} ‖Xβ − y‖² + λ‖β − γ‖²`. For fixed worst-case `γ` the inner
//! problem is a ridge regression on the active set, solved exactly through an
//! incrementally updated Cholesky factor. The crate also provides gap
//! certificates, coordinate descent and accelerated proximal baselines, and
//! the synthetic benchmark harness.

pub mod baseline;
pub mod chol;
pub mod datagen;
pub mod error;
pub mod gap;
pub mod harness;
pub mod io;
pub mod kkt;
pub mod model;
pub mod oracle;
pub mod solver;

pub use baseline::{BaselineConfig, BaselineMethod};
pub use error::{Error, Result};
pub use gap::{GapCertificate, GapMethod};
pub use kkt::kkt_violation;
pub use model::{evaluate_objective, Family, Groups, Objective, PenaltySpec, ProblemData};
pub use oracle::{GammaValue, UncertaintySet};
pub use solver::{solve, Certify, Method, PathResult, Solution, SolveStatus, SolverConfig};
