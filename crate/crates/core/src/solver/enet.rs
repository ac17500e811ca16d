//! Elastic-net active-set loop.

use std::collections::HashMap;
use std::time::Instant;

use super::{dot, finish, CertificateRecord, Counters, SolveStatus, Solution, SolverConfig, ZERO_TOL};
use crate::chol::Cholesky;
use crate::error::{Error, Result};
use crate::gap;
use crate::model::{user_objective_from_residual, PenaltySpec, ProblemData};
use crate::oracle::{self, UncertaintySet};

/// Working set of the elastic-net loop.
///
/// `gamma` holds the worst-case signs in units of the radius, so `λγ_A` is
/// `λ1·gamma`; this keeps `λ2 = 0` usable.
#[derive(Debug, Clone, Default)]
pub struct ActiveSetState {
    pub active: Vec<usize>,
    pub beta_active: Vec<f64>,
    pub gamma_active: Vec<f64>,
    pub chol: Cholesky,
    is_active: Vec<bool>,
}

impl ActiveSetState {
    pub fn new(p: usize) -> Self {
        Self { is_active: vec![false; p], ..Self::default() }
    }

    pub fn len(&self) -> usize {
        self.active.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.is_active[j]
    }

    /// Appends `j` to the active set and its column to the factor.
    pub fn update_factor_add(&mut self, problem: &ProblemData, lambda2: f64, j: usize, beta_j: f64, gamma_j: f64) -> Result<()> {
        if self.is_active[j] {
            return Err(Error::Contract(format!("column {j} is already active")));
        }
        let xj = problem.col(j);
        let cross: Vec<f64> = self.active.iter().map(|&i| dot(problem.col(i), xj)).collect();
        self.chol
            .push(&cross, problem.col_sq()[j] + lambda2)
            .map_err(|f| Error::Rank { pivot: f.position, column: j, value: f.value })?;
        self.active.push(j);
        self.beta_active.push(beta_j);
        self.gamma_active.push(gamma_j);
        self.is_active[j] = true;
        Ok(())
    }

    /// Drops the active coordinate at position `pos`.
    pub fn update_factor_remove(&mut self, problem: &ProblemData, lambda2: f64, pos: usize) -> Result<()> {
        let j = self.active.remove(pos);
        self.beta_active.remove(pos);
        self.gamma_active.remove(pos);
        self.is_active[j] = false;
        self.chol.remove(pos);
        if !self.chol.is_healthy() {
            self.refactor(problem, lambda2)?;
        }
        Ok(())
    }

    /// Rebuilds the factor of `X_AᵀX_A + λ2·I` from scratch.
    pub fn refactor(&mut self, problem: &ProblemData, lambda2: f64) -> Result<()> {
        let mut ch = Cholesky::new();
        for (k, &j) in self.active.iter().enumerate() {
            let xj = problem.col(j);
            let cross: Vec<f64> = self.active[..k].iter().map(|&i| dot(problem.col(i), xj)).collect();
            ch.push(&cross, problem.col_sq()[j] + lambda2)
                .map_err(|f| Error::Rank { pivot: f.position, column: j, value: f.value })?;
        }
        self.chol = ch;
        Ok(())
    }

    /// `(X_AᵀX_A + λ2 I)⁻¹(X_Aᵀy + λ1·gamma)`.
    pub fn solve_subproblem(&self, problem: &ProblemData, lambda1: f64, gamma: &[f64]) -> Vec<f64> {
        let xty = problem.xty();
        let mut b: Vec<f64> = self.active.iter().zip(gamma).map(|(&j, g)| xty[j] + lambda1 * g).collect();
        self.chol.solve_in_place(&mut b);
        b
    }

    pub fn full_beta(&self, p: usize) -> Vec<f64> {
        let mut beta = vec![0.0; p];
        for (&j, &b) in self.active.iter().zip(&self.beta_active) {
            beta[j] = b;
        }
        beta
    }

    fn visit_key(&self) -> Vec<i64> {
        let mut key: Vec<i64> =
            self.active.iter().zip(&self.gamma_active).map(|(&j, &g)| if g > 0.0 { j as i64 + 1 } else { -(j as i64) - 1 }).collect();
        key.sort_unstable_by_key(|k| k.abs());
        key
    }
}

enum Step2 {
    Coherent,
    Boundary { rho: f64, pos: usize },
}

pub(super) fn solve(problem: &ProblemData, penalty: &PenaltySpec, config: &SolverConfig) -> Result<Solution> {
    let start = Instant::now();
    let p = problem.p();
    let (l1, l2) = (penalty.lambda1, penalty.lambda2);
    let unit = UncertaintySet::boxed(1.0);
    let max_outer = config.max_outer(p);
    let remove_tol = ZERO_TOL * (1.0 + l1);
    let mut counters = Counters::default();
    let mut st = ActiveSetState::new(p);

    if let Some(b0) = &config.beta0 {
        for (j, &b) in b0.iter().enumerate() {
            if b != 0.0 {
                st.update_factor_add(problem, l2, j, b, -b.signum())?;
            }
        }
    }

    let mut visits: HashMap<Vec<i64>, u32> = HashMap::new();
    let mut certificates = Vec::new();
    let mut history = Vec::new();
    let mut status = SolveStatus::Converged;

    loop {
        if counters.outer >= max_outer {
            status = SolveStatus::MaxOuter;
            break;
        }
        counters.outer += 1;

        // Step 1. Zero coordinates take the worst-case sign along the descent direction.
        if st.beta_active.iter().any(|&b| b == 0.0) {
            let r = problem.residual_active(&st.active, &st.beta_active);
            let descent: Vec<f64> = st
                .active
                .iter()
                .zip(&st.beta_active)
                .map(|(&j, &b)| -(problem.column(j).dot(&r) + l2 * b))
                .collect();
            st.gamma_active = oracle::worst_case_gamma(&st.beta_active, &unit, Some(&descent)).values;
        }
        let seen = visits.entry(st.visit_key()).or_insert(0);
        *seen += 1;
        if *seen == 4 {
            st.refactor(problem, l2)?;
        } else if *seen > 4 {
            status = SolveStatus::CycleGuard;
            break;
        }
        let beta_new = st.solve_subproblem(problem, l1, &st.gamma_active);
        counters.solves += 1;

        // Step 2.
        let outcome = if oracle::is_coherent(&beta_new, &st.gamma_active, &unit) {
            st.beta_active = beta_new;
            Step2::Coherent
        } else {
            let bt = oracle::backtrack(&st.beta_active, &beta_new, &st.gamma_active, &unit)?;
            counters.backtracks += 1;
            let pos = bt.boundary_index;
            let mut alt = st.gamma_active.clone();
            alt[pos] = -alt[pos];
            let beta_alt = st.solve_subproblem(problem, l1, &alt);
            counters.solves += 1;
            if oracle::is_coherent(&beta_alt, &alt, &unit) {
                st.beta_active = beta_alt;
                st.gamma_active = alt;
                Step2::Coherent
            } else {
                st.beta_active = bt.beta_at_boundary;
                Step2::Boundary { rho: bt.rho, pos }
            }
        };

        // Step 3.
        let beta = st.full_beta(p);
        let r = problem.residual_active(&st.active, &st.beta_active);
        if config.record_history {
            history.push(user_objective_from_residual(penalty, None, r.as_slice().unwrap(), &beta));
        }
        let c = oracle::correlations(problem, l2, &beta, &r);
        let scores = oracle::scores_from_correlations(c, penalty.family, None, l1);
        if matches!(outcome, Step2::Coherent) && config.certify.at(counters.outer) {
            certificates.extend(certify(problem, penalty, &st, &beta, counters.outer)?);
        }

        let removable = (0..st.len())
            .find(|&i| st.beta_active[i].abs() <= ZERO_TOL && scores.coord[st.active[i]] <= remove_tol);
        if let Some(pos) = removable {
            st.update_factor_remove(problem, l2, pos)?;
            continue;
        }
        if let Step2::Boundary { rho, pos } = outcome {
            // Neither vertex lets the boundary coordinate move: release it.
            if rho == 0.0 {
                st.update_factor_remove(problem, l2, pos)?;
            }
            continue;
        }

        let mut best: Option<(usize, f64)> = None;
        for (j, &g) in scores.coord.iter().enumerate() {
            if !st.contains(j) && g > config.tau && best.is_none_or(|(_, b)| g > b) {
                best = Some((j, g));
            }
        }
        match best {
            Some((j, _)) => {
                let sign = if scores.c[j] < 0.0 { -1.0 } else { 1.0 };
                st.update_factor_add(problem, l2, j, 0.0, sign)?;
            }
            None => break,
        }
    }

    if config.certify == super::Certify::Final {
        let beta = st.full_beta(p);
        certificates.extend(certify(problem, penalty, &st, &beta, counters.outer)?);
    }
    let beta = st.full_beta(p);
    let mut active = st.active.clone();
    active.sort_unstable();
    finish(problem, penalty, beta, active, counters, status, start, certificates, history)
}

fn certify(problem: &ProblemData, penalty: &PenaltySpec, st: &ActiveSetState, beta: &[f64], iter: usize) -> Result<Vec<CertificateRecord>> {
    let eta = penalty.eta().expect("certification requires lambda2 > 0");
    let mut gamma_active = vec![0.0; problem.p()];
    for (&j, &g) in st.active.iter().zip(&st.gamma_active) {
        gamma_active[j] = eta * g;
    }
    let gamma = oracle::complete_gamma_inactive(problem, penalty, beta, &gamma_active, &st.is_active)?;
    let certs = gap::certify_all(problem, penalty, &gamma.values, beta, &st.is_active)?;
    Ok(certs.into_iter().map(|certificate| CertificateRecord { iter, certificate }).collect())
}
