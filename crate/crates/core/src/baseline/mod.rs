//! First-order baselines inside the same active-set wrapper.
//!
//! The wrapper keeps the outer violation logic of the main solver and swaps the
//! inner solve for coordinate descent or accelerated proximal gradient.

mod coordinate;
mod proximal;

use std::time::Instant;

pub use coordinate::{coordinate_descent_inner, soft_threshold};
pub use proximal::{linf_prox, momentum_next, power_iteration, proximal_inner};

use crate::error::{Error, Result};
use crate::model::{user_objective_from_residual, Family, PenaltySpec, ProblemData};
use crate::oracle;
use crate::solver::{finish, Certify, Counters, Solution, SolveStatus, SolverConfig, ZERO_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineMethod {
    Coordinate,
    Proximal,
}

impl BaselineMethod {
    pub fn name(self) -> &'static str {
        match self {
            BaselineMethod::Coordinate => "coordinate",
            BaselineMethod::Proximal => "proximal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineConfig {
    pub method: BaselineMethod,
    pub inner_tol: f64,
    pub inner_max_iter: usize,
    /// Proximal only: reject steps that increase the objective and reset momentum.
    pub restart: bool,
    pub power_iters: usize,
    pub power_tol: f64,
}

impl BaselineConfig {
    /// Benchmark setting: inner tolerance equal to the outer threshold, no restart.
    pub fn benchmark(method: BaselineMethod, tau: f64) -> Self {
        Self { method, inner_tol: tau, inner_max_iter: 100_000, restart: false, power_iters: 30, power_tol: 1e-6 }
    }

    /// Tightly converged setting used as a correctness oracle.
    pub fn oracle(method: BaselineMethod) -> Self {
        Self { method, inner_tol: 1e-12, inner_max_iter: 1_000_000, restart: true, power_iters: 30, power_tol: 1e-6 }
    }

    pub fn validate(&self, penalty: &PenaltySpec) -> Result<()> {
        if !(self.inner_tol > 0.0) {
            return Err(Error::Config(format!("inner_tol must be positive, got {}", self.inner_tol)));
        }
        if self.inner_max_iter == 0 {
            return Err(Error::Config("inner_max_iter must be at least 1".into()));
        }
        if self.method == BaselineMethod::Coordinate && penalty.family == Family::GroupLinfOne {
            return Err(Error::Unsupported("coordinate descent is implemented for the elastic net only".into()));
        }
        Ok(())
    }
}

/// Result of one inner solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InnerReport {
    pub iterations: usize,
    pub hit_cap: bool,
}

pub(crate) fn solve(problem: &ProblemData, penalty: &PenaltySpec, config: &SolverConfig, b: &BaselineConfig) -> Result<Solution> {
    b.validate(penalty)?;
    if config.certify != Certify::None {
        return Err(Error::Unsupported("gap certificates are produced by the quadratic solver only".into()));
    }
    let start = Instant::now();
    let p = problem.p();
    let l1 = penalty.lambda1;
    let groups = problem.groups();
    let units: Vec<Vec<usize>> = match penalty.family {
        Family::ElasticNet => (0..p).map(|j| vec![j]).collect(),
        Family::GroupLinfOne => groups.unwrap().iter().map(<[usize]>::to_vec).collect(),
    };
    let mut beta = config.beta0.clone().unwrap_or_else(|| vec![0.0; p]);
    let mut active: Vec<bool> = units.iter().map(|u| u.iter().any(|&j| beta[j] != 0.0)).collect();
    let remove_tol = ZERO_TOL * (1.0 + l1);
    let max_outer = config.max_outer(p);
    let mut counters = Counters::default();
    let mut history = Vec::new();
    let mut status = SolveStatus::Converged;
    let mut capped = false;

    loop {
        if counters.outer >= max_outer {
            status = SolveStatus::MaxOuter;
            break;
        }
        counters.outer += 1;
        let working: Vec<usize> =
            units.iter().zip(&active).filter(|(_, &a)| a).flat_map(|(u, _)| u.iter().copied()).collect();
        if !working.is_empty() {
            let report = match b.method {
                BaselineMethod::Coordinate => coordinate_descent_inner(problem, penalty, &working, &mut beta, b)?,
                BaselineMethod::Proximal => proximal_inner(problem, penalty, &working, &mut beta, b)?,
            };
            counters.solves += 1;
            capped |= report.hit_cap;
        }
        let r = problem.residual(&beta);
        if config.record_history {
            history.push(user_objective_from_residual(penalty, groups, r.as_slice().unwrap(), &beta));
        }
        let c = oracle::correlations(problem, penalty.lambda2, &beta, &r);
        let scores = oracle::scores_from_correlations(c, penalty.family, groups, l1);
        let unit_score = |k: usize| match &scores.group {
            Some(v) => v[k],
            None => scores.coord[k],
        };

        let mut removed = false;
        for k in 0..units.len() {
            if active[k] && units[k].iter().all(|&j| beta[j] == 0.0) && unit_score(k) <= remove_tol.min(config.tau) {
                active[k] = false;
                removed = true;
            }
        }
        let mut best: Option<(usize, f64)> = None;
        for k in 0..units.len() {
            let s = unit_score(k);
            if !active[k] && s > config.tau && best.is_none_or(|(_, b)| s > b) {
                best = Some((k, s));
            }
        }
        match best {
            Some((k, _)) => active[k] = true,
            None if removed => {}
            None => break,
        }
    }
    if capped && status == SolveStatus::Converged {
        status = SolveStatus::InnerIterationCap;
    }
    let active_units: Vec<usize> = (0..units.len()).filter(|&k| active[k]).collect();
    finish(problem, penalty, beta, active_units, counters, status, start, Vec::new(), history)
}

/// Squared-loss part on `working`: `Xβ − y` with `β` zero elsewhere.
pub(crate) fn working_residual(problem: &ProblemData, working: &[usize], beta: &[f64]) -> Vec<f64> {
    let mut r: Vec<f64> = problem.y().iter().map(|v| -v).collect();
    for &j in working {
        let b = beta[j];
        if b != 0.0 {
            for (ri, xi) in r.iter_mut().zip(problem.col(j)) {
                *ri += b * xi;
            }
        }
    }
    r
}
