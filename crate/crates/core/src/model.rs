//! Problem instances, penalty parametrizations and objective evaluation.
//!
//! Two objective conventions coexist. The user-facing one is
//! `½‖Xβ−y‖² + λ1·Ω(β) + (λ2/2)‖β‖²` with `Ω` the ℓ1 norm or the sum of groupwise
//! ℓ∞ norms. The minimax one is `J_λ(β,γ) = ‖Xβ−y‖² + λ‖β−γ‖²` with `λ = λ2`
//! and `γ` ranging over an uncertainty set of radius `η = λ1/λ2`. Maximizing
//! over `γ` gives twice the user objective plus `λη²·(p or K)`.

use ndarray::{Array1, Array2, ArrayView1, ShapeBuilder};

use crate::error::{Error, Result};
use crate::oracle::{self, UncertaintySet};

/// A partition of the columns into disjoint non-empty groups (0-based).
#[derive(Debug, Clone, PartialEq)]
pub struct Groups {
    members: Vec<Vec<usize>>,
    group_of: Vec<usize>,
}

impl Groups {
    pub fn new(members: Vec<Vec<usize>>, p: usize) -> Result<Self> {
        let mut group_of = vec![usize::MAX; p];
        for (k, g) in members.iter().enumerate() {
            if g.is_empty() {
                return Err(Error::Config(format!("group {k} is empty")));
            }
            for &j in g {
                if j >= p {
                    return Err(Error::Config(format!("group {k}: column {j} out of range (p = {p})")));
                }
                if group_of[j] != usize::MAX {
                    return Err(Error::Config(format!("column {j} appears in more than one group")));
                }
                group_of[j] = k;
            }
        }
        if let Some(j) = group_of.iter().position(|&k| k == usize::MAX) {
            return Err(Error::Config(format!("column {j} belongs to no group")));
        }
        Ok(Self { members, group_of })
    }

    /// Builds a partition from 1-based column indices, as stored in group files.
    pub fn from_one_based(members: Vec<Vec<usize>>, p: usize) -> Result<Self> {
        let mut zero = Vec::with_capacity(members.len());
        for g in members {
            let mut v = Vec::with_capacity(g.len());
            for j in g {
                if j == 0 {
                    return Err(Error::Config("group indices are 1-based; found 0".into()));
                }
                v.push(j - 1);
            }
            zero.push(v);
        }
        Self::new(zero, p)
    }

    /// Consecutive groups of equal size (the last one may be shorter).
    pub fn contiguous(p: usize, size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::Config("group size must be positive".into()));
        }
        let members = (0..p).step_by(size).map(|s| (s..(s + size).min(p)).collect()).collect();
        Self::new(members, p)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn group(&self, k: usize) -> &[usize] {
        &self.members[k]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[usize]> {
        self.members.iter().map(|g| g.as_slice())
    }

    pub fn group_of(&self, j: usize) -> usize {
        self.group_of[j]
    }

    pub fn n_columns(&self) -> usize {
        self.group_of.len()
    }
}

/// Immutable regression instance with a few cached products.
#[derive(Debug, Clone)]
pub struct ProblemData {
    x: Array2<f64>,
    y: Array1<f64>,
    groups: Option<Groups>,
    xty: Array1<f64>,
    col_sq: Array1<f64>,
}

impl ProblemData {
    pub fn new(x: Array2<f64>, y: Array1<f64>) -> Result<Self> {
        let (n, p) = x.dim();
        if n == 0 || p == 0 {
            return Err(Error::Dimension(format!("design must be non-empty, got {n}x{p}")));
        }
        if y.len() != n {
            return Err(Error::Dimension(format!("y has length {} but X has {n} rows", y.len())));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Dimension("X and y must be finite".into()));
        }
        // Column-major storage keeps every column contiguous.
        let mut xf = Array2::<f64>::zeros((n, p).f());
        xf.assign(&x);
        let xty = xf.t().dot(&y);
        let col_sq = Array1::from_iter(xf.columns().into_iter().map(|c| c.dot(&c)));
        Ok(Self { x: xf, y, groups: None, xty, col_sq })
    }

    pub fn with_groups(mut self, groups: Groups) -> Result<Self> {
        if groups.n_columns() != self.p() {
            return Err(Error::Dimension(format!(
                "partition covers {} columns but X has {}",
                groups.n_columns(),
                self.p()
            )));
        }
        self.groups = Some(groups);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }

    pub fn y(&self) -> &Array1<f64> {
        &self.y
    }

    pub fn groups(&self) -> Option<&Groups> {
        self.groups.as_ref()
    }

    /// `Xᵀy`.
    pub fn xty(&self) -> &Array1<f64> {
        &self.xty
    }

    /// Squared column norms `x_jᵀx_j`.
    pub fn col_sq(&self) -> &Array1<f64> {
        &self.col_sq
    }

    pub fn column(&self, j: usize) -> ArrayView1<'_, f64> {
        self.x.column(j)
    }

    /// Contiguous slice of column `j`.
    pub fn col(&self, j: usize) -> &[f64] {
        self.x.column(j).to_slice().expect("columns are contiguous")
    }

    /// `Xβ − y` for a full-length `β`.
    pub fn residual(&self, beta: &[f64]) -> Array1<f64> {
        let mut r = -&self.y;
        for (j, &b) in beta.iter().enumerate() {
            if b != 0.0 {
                r.scaled_add(b, &self.x.column(j));
            }
        }
        r
    }

    /// `X_A β_A − y` for coefficients restricted to `active`.
    pub fn residual_active(&self, active: &[usize], beta_active: &[f64]) -> Array1<f64> {
        let mut r = -&self.y;
        for (&j, &b) in active.iter().zip(beta_active) {
            if b != 0.0 {
                r.scaled_add(b, &self.x.column(j));
            }
        }
        r
    }

    pub fn check_beta(&self, beta: &[f64]) -> Result<()> {
        if beta.len() != self.p() {
            return Err(Error::Dimension(format!("beta has length {} but p = {}", beta.len(), self.p())));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    ElasticNet,
    GroupLinfOne,
}

/// Penalty family and weights in the user-facing convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltySpec {
    pub family: Family,
    pub lambda1: f64,
    pub lambda2: f64,
}

/// Internal parameters `(λ, η)` of the minimax form, or the pure-Lasso signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Parametrization {
    Robust { lambda: f64, eta: f64 },
    /// `λ2 = 0`: only the product `λη = λ1` is defined.
    PureLasso { lambda1: f64 },
}

pub fn parametrization_map(lambda1: f64, lambda2: f64) -> Parametrization {
    if lambda2 > 0.0 {
        Parametrization::Robust { lambda: lambda2, eta: lambda1 / lambda2 }
    } else {
        Parametrization::PureLasso { lambda1 }
    }
}

impl PenaltySpec {
    pub fn new(family: Family, lambda1: f64, lambda2: f64) -> Result<Self> {
        if !(lambda1.is_finite() && lambda2.is_finite()) || lambda1 < 0.0 || lambda2 < 0.0 {
            return Err(Error::Config(format!(
                "penalties must be finite and non-negative, got lambda1 = {lambda1}, lambda2 = {lambda2}"
            )));
        }
        if lambda1 == 0.0 && lambda2 == 0.0 {
            return Err(Error::Config("lambda1 and lambda2 cannot both be zero".into()));
        }
        Ok(Self { family, lambda1, lambda2 })
    }

    pub fn elastic_net(lambda1: f64, lambda2: f64) -> Result<Self> {
        Self::new(Family::ElasticNet, lambda1, lambda2)
    }

    pub fn group(lambda1: f64, lambda2: f64) -> Result<Self> {
        Self::new(Family::GroupLinfOne, lambda1, lambda2)
    }

    pub fn parametrization(&self) -> Parametrization {
        parametrization_map(self.lambda1, self.lambda2)
    }

    /// `η = λ1/λ2`, undefined in pure-Lasso mode.
    pub fn eta(&self) -> Option<f64> {
        match self.parametrization() {
            Parametrization::Robust { eta, .. } => Some(eta),
            Parametrization::PureLasso { .. } => None,
        }
    }

    /// Checks that the instance carries a partition iff the family needs one.
    pub fn check(&self, problem: &ProblemData) -> Result<()> {
        match (self.family, problem.groups()) {
            (Family::GroupLinfOne, None) => {
                Err(Error::Config("group penalty requires a column partition".into()))
            }
            (Family::ElasticNet, Some(_)) => {
                Err(Error::Config("elastic net does not take a column partition".into()))
            }
            _ => Ok(()),
        }
    }

    /// Number of uncertainty blocks: `p` for the elastic net, `K` for groups.
    pub fn n_blocks(&self, problem: &ProblemData) -> usize {
        match self.family {
            Family::ElasticNet => problem.p(),
            Family::GroupLinfOne => problem.groups().map_or(0, Groups::len),
        }
    }

    /// `λη²·(p or K)`, the constant separating the two conventions.
    pub fn constant_offset(&self, problem: &ProblemData) -> Option<f64> {
        self.eta().map(|eta| self.lambda2 * eta * eta * self.n_blocks(problem) as f64)
    }
}

/// `Ω(β)`: ℓ1 norm or sum of groupwise ℓ∞ norms.
pub fn penalty_norm(family: Family, groups: Option<&Groups>, beta: &[f64]) -> f64 {
    match family {
        Family::ElasticNet => beta.iter().map(|b| b.abs()).sum(),
        Family::GroupLinfOne => groups
            .expect("group penalty needs a partition")
            .iter()
            .map(|g| g.iter().fold(0.0_f64, |m, &j| m.max(beta[j].abs())))
            .sum(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Objective {
    pub user_value: f64,
    /// `max_γ J_λ(β, γ)`; `None` in pure-Lasso mode.
    pub minimax_value: Option<f64>,
    pub constant_offset: Option<f64>,
}

/// User objective from a precomputed residual `Xβ − y`.
pub fn user_objective_from_residual(penalty: &PenaltySpec, groups: Option<&Groups>, residual: &[f64], beta: &[f64]) -> f64 {
    let rss: f64 = residual.iter().map(|r| r * r).sum();
    let sq: f64 = beta.iter().map(|b| b * b).sum();
    0.5 * rss + penalty.lambda1 * penalty_norm(penalty.family, groups, beta) + 0.5 * penalty.lambda2 * sq
}

pub fn user_objective(problem: &ProblemData, penalty: &PenaltySpec, beta: &[f64]) -> f64 {
    let r = problem.residual(beta);
    user_objective_from_residual(penalty, problem.groups(), r.as_slice().unwrap(), beta)
}

/// `J_λ(β, γ) = ‖Xβ−y‖² + λ‖β−γ‖²`.
pub fn minimax_objective(problem: &ProblemData, lambda: f64, beta: &[f64], gamma: &[f64]) -> f64 {
    let r = problem.residual(beta);
    let pen: f64 = beta.iter().zip(gamma).map(|(b, g)| (b - g) * (b - g)).sum();
    r.dot(&r) + lambda * pen
}

pub fn evaluate_objective(problem: &ProblemData, penalty: &PenaltySpec, beta: &[f64]) -> Result<Objective> {
    problem.check_beta(beta)?;
    penalty.check(problem)?;
    let r = problem.residual(beta);
    let user_value = user_objective_from_residual(penalty, problem.groups(), r.as_slice().unwrap(), beta);
    let (minimax_value, constant_offset) = match penalty.parametrization() {
        Parametrization::Robust { lambda, eta } => {
            let set = UncertaintySet::new(penalty.family, problem.groups(), eta);
            let gamma = oracle::worst_case_gamma(beta, &set, None);
            let pen: f64 = beta.iter().zip(&gamma.values).map(|(b, g)| (b - g) * (b - g)).sum();
            (Some(r.dot(&r) + lambda * pen), penalty.constant_offset(problem))
        }
        Parametrization::PureLasso { .. } => (None, None),
    };
    Ok(Objective { user_value, minimax_value, constant_offset })
}
