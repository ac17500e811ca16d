//! The active-set solver, its configuration and result types, and path drivers.

mod enet;
mod group;
mod path;

use std::time::Instant;

pub use enet::ActiveSetState;
pub use path::{lambda1_grid, lambda1_max, lambda2_grid, solve_path, Grid, PathCell, PathResult};

use crate::baseline::{self, BaselineConfig};
use crate::error::{Error, Result};
use crate::gap::GapCertificate;
use crate::kkt;
use crate::model::{evaluate_objective, Family, Objective, PenaltySpec, ProblemData};

pub(crate) const ZERO_TOL: f64 = 1e-12;

/// When gap certificates are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Certify {
    #[default]
    None,
    Final,
    /// At every `k`-th outer iteration.
    EveryK(usize),
}

impl Certify {
    pub(crate) fn at(self, iter: usize) -> bool {
        matches!(self, Certify::EveryK(k) if k > 0 && iter % k == 0)
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Outer stopping threshold on the worst-case gradient.
    pub tau: f64,
    /// Defaults to `10·p`.
    pub max_outer: Option<usize>,
    pub beta0: Option<Vec<f64>>,
    pub certify: Certify,
    /// Record the user objective after every accepted move.
    pub record_history: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { tau: 1e-2, max_outer: None, beta0: None, certify: Certify::None, record_history: false }
    }
}

impl SolverConfig {
    pub fn with_tau(tau: f64) -> Self {
        Self { tau, ..Self::default() }
    }

    fn validate(&self, problem: &ProblemData, penalty: &PenaltySpec) -> Result<()> {
        if !(self.tau >= 0.0) {
            return Err(Error::Config(format!("tau must be non-negative, got {}", self.tau)));
        }
        if let Some(b) = &self.beta0 {
            problem.check_beta(b)?;
        }
        if self.certify != Certify::None && penalty.lambda2 <= 0.0 {
            return Err(Error::Unsupported("gap certificates require lambda2 > 0".into()));
        }
        if self.certify == Certify::EveryK(0) {
            return Err(Error::Config("every-k certification needs k >= 1".into()));
        }
        penalty.check(problem)
    }

    pub(crate) fn max_outer(&self, p: usize) -> usize {
        self.max_outer.unwrap_or(10 * p).max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    /// The outer iteration budget ran out.
    MaxOuter,
    /// A working set was revisited too often.
    CycleGuard,
    /// A baseline inner loop hit its iteration cap at least once.
    InnerIterationCap,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxOuter => "max_outer",
            SolveStatus::CycleGuard => "cycle_guard",
            SolveStatus::InnerIterationCap => "inner_iteration_cap",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CertificateRecord {
    pub iter: usize,
    pub certificate: GapCertificate,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub beta: Vec<f64>,
    /// Final active coordinates (elastic net) or groups.
    pub active: Vec<usize>,
    pub objective: Objective,
    pub kkt_residual: f64,
    pub n_outer: usize,
    pub n_solves: usize,
    pub n_backtracks: usize,
    pub wall_time: f64,
    pub status: SolveStatus,
    pub certificates: Vec<CertificateRecord>,
    /// User objective after each accepted move, when requested.
    pub history: Vec<f64>,
}

impl Solution {
    pub fn n_active(&self) -> usize {
        self.beta.iter().filter(|b| **b != 0.0).count()
    }
}

/// Which solver fills the active set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Quadratic,
    Baseline(BaselineConfig),
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Quadratic => "quadratic",
            Method::Baseline(b) => b.method.name(),
        }
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct Counters {
    pub outer: usize,
    pub solves: usize,
    pub backtracks: usize,
}

/// Solves with the worst-case quadratic penalty active-set algorithm.
pub fn solve(problem: &ProblemData, penalty: &PenaltySpec, config: &SolverConfig) -> Result<Solution> {
    config.validate(problem, penalty)?;
    match penalty.family {
        Family::ElasticNet => enet::solve(problem, penalty, config),
        Family::GroupLinfOne => group::solve(problem, penalty, config),
    }
}

pub fn solve_with(method: &Method, problem: &ProblemData, penalty: &PenaltySpec, config: &SolverConfig) -> Result<Solution> {
    match method {
        Method::Quadratic => solve(problem, penalty, config),
        Method::Baseline(b) => {
            config.validate(problem, penalty)?;
            baseline::solve(problem, penalty, config, b)
        }
    }
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn finish(
    problem: &ProblemData,
    penalty: &PenaltySpec,
    beta: Vec<f64>,
    active: Vec<usize>,
    counters: Counters,
    status: SolveStatus,
    start: Instant,
    certificates: Vec<CertificateRecord>,
    history: Vec<f64>,
) -> Result<Solution> {
    let wall_time = start.elapsed().as_secs_f64();
    let objective = evaluate_objective(problem, penalty, &beta)?;
    let kkt_residual = kkt::kkt_violation(problem, penalty, &beta);
    Ok(Solution {
        beta,
        active,
        objective,
        kkt_residual,
        n_outer: counters.outer,
        n_solves: counters.solves,
        n_backtracks: counters.backtracks,
        wall_time,
        status,
        certificates,
        history,
    })
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
