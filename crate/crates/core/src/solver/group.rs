//! ℓ∞,1 group active-set loop.
//!
//! Inside an active group the coordinates reaching the group maximum form a
//! tied block `β_j = s_j·t` sharing one magnitude variable `t`; the others are
//! free with `|β_j| ≤ t`. For such a configuration the subproblem is a ridge
//! regression in `(β_free, t)` whose `t`-columns are `Σ_T s_j x_j`. The
//! worst-case `γ` spreads its budget over the block with weights
//! `w_j = −s_j c_j/λ1`, which must stay non-negative.

use std::collections::HashMap;
use std::time::Instant;

use super::{dot, finish, CertificateRecord, Certify, Counters, SolveStatus, Solution, SolverConfig, ZERO_TOL};
use crate::chol::Cholesky;
use crate::error::{Error, Result};
use crate::gap;
use crate::model::{user_objective_from_residual, Groups, PenaltySpec, ProblemData};
use crate::oracle;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Var {
    Free(usize),
    Mag(usize),
}

#[derive(Debug, Clone)]
struct Block {
    tied: Vec<usize>,
    signs: Vec<f64>,
    free: Vec<usize>,
}

#[derive(Debug, Clone, Copy)]
enum Event {
    Hit { group: usize, coord: usize, sign: f64 },
    Zero { group: usize },
}

struct State<'a> {
    problem: &'a ProblemData,
    groups: &'a Groups,
    lambda2: f64,
    active: Vec<usize>,
    blocks: Vec<Option<Block>>,
    vars: Vec<Var>,
    cols: Vec<Vec<f64>>,
    ridge: Vec<f64>,
    rhs0: Vec<f64>,
    theta: Vec<f64>,
    chol: Cholesky,
}

impl<'a> State<'a> {
    fn new(problem: &'a ProblemData, groups: &'a Groups, lambda2: f64) -> Self {
        Self {
            problem,
            groups,
            lambda2,
            active: Vec::new(),
            blocks: vec![None; groups.len()],
            vars: Vec::new(),
            cols: Vec::new(),
            ridge: Vec::new(),
            rhs0: Vec::new(),
            theta: Vec::new(),
            chol: Cholesky::new(),
        }
    }

    fn column(&self, var: Var) -> (Vec<f64>, f64) {
        match var {
            Var::Free(j) => (self.problem.col(j).to_vec(), self.lambda2),
            Var::Mag(k) => {
                let b = self.blocks[k].as_ref().expect("block of an active group");
                let mut z = vec![0.0; self.problem.n()];
                for (&j, &s) in b.tied.iter().zip(&b.signs) {
                    for (zi, xi) in z.iter_mut().zip(self.problem.col(j)) {
                        *zi += s * xi;
                    }
                }
                (z, self.lambda2 * b.tied.len() as f64)
            }
        }
    }

    fn push_var(&mut self, var: Var, value: f64) -> Result<()> {
        let (col, ridge) = self.column(var);
        let cross: Vec<f64> = self.cols.iter().map(|c| dot(c, &col)).collect();
        let column = match var {
            Var::Free(j) => j,
            Var::Mag(k) => self.blocks[k].as_ref().unwrap().tied[0],
        };
        self.chol
            .push(&cross, dot(&col, &col) + ridge)
            .map_err(|f| Error::Rank { pivot: f.position, column, value: f.value })?;
        self.rhs0.push(dot(&col, self.problem.y().as_slice().unwrap()));
        self.vars.push(var);
        self.cols.push(col);
        self.ridge.push(ridge);
        self.theta.push(value);
        Ok(())
    }

    fn pos(&self, var: Var) -> usize {
        self.vars.iter().position(|&v| v == var).expect("variable is in the working set")
    }

    fn remove_var(&mut self, var: Var) -> Result<f64> {
        let pos = self.pos(var);
        self.vars.remove(pos);
        self.cols.remove(pos);
        self.ridge.remove(pos);
        self.rhs0.remove(pos);
        let value = self.theta.remove(pos);
        self.chol.remove(pos);
        if !self.chol.is_healthy() {
            self.refactor()?;
        }
        Ok(value)
    }

    fn refactor(&mut self) -> Result<()> {
        let mut ch = Cholesky::new();
        for k in 0..self.cols.len() {
            let cross: Vec<f64> = self.cols[..k].iter().map(|c| dot(c, &self.cols[k])).collect();
            ch.push(&cross, dot(&self.cols[k], &self.cols[k]) + self.ridge[k])
                .map_err(|f| Error::Rank { pivot: f.position, column: k, value: f.value })?;
        }
        self.chol = ch;
        Ok(())
    }

    fn solve_subproblem(&self, lambda1: f64) -> Vec<f64> {
        let mut b: Vec<f64> = self
            .vars
            .iter()
            .zip(&self.rhs0)
            .map(|(v, r)| if matches!(v, Var::Mag(_)) { r - lambda1 } else { *r })
            .collect();
        self.chol.solve_in_place(&mut b);
        b
    }

    fn beta_from(&self, theta: &[f64]) -> Vec<f64> {
        let mut beta = vec![0.0; self.problem.p()];
        for (v, &t) in self.vars.iter().zip(theta) {
            match *v {
                Var::Free(j) => beta[j] = t,
                Var::Mag(k) => {
                    let b = self.blocks[k].as_ref().unwrap();
                    for (&j, &s) in b.tied.iter().zip(&b.signs) {
                        beta[j] = s * t;
                    }
                }
            }
        }
        beta
    }

    fn beta(&self) -> Vec<f64> {
        self.beta_from(&self.theta)
    }

    /// Enters group `k` with every coordinate tied, signs opposite to `c`.
    fn add_group(&mut self, k: usize, c: &[f64]) -> Result<()> {
        let tied = self.groups.group(k).to_vec();
        let signs = tied.iter().map(|&j| if c[j] > 0.0 { -1.0 } else { 1.0 }).collect();
        self.blocks[k] = Some(Block { tied, signs, free: Vec::new() });
        self.active.push(k);
        if let Err(e) = self.push_var(Var::Mag(k), 0.0) {
            self.blocks[k] = None;
            self.active.pop();
            return Err(e);
        }
        Ok(())
    }

    fn remove_group(&mut self, k: usize) -> Result<()> {
        let b = self.blocks[k].clone().unwrap();
        for &j in &b.free {
            self.remove_var(Var::Free(j))?;
        }
        self.remove_var(Var::Mag(k))?;
        self.blocks[k] = None;
        self.active.retain(|&g| g != k);
        Ok(())
    }

    /// Moves free coordinate `j` of group `k` into the tied block.
    fn tie(&mut self, k: usize, j: usize, sign: f64) -> Result<()> {
        self.remove_var(Var::Free(j))?;
        let t = self.remove_var(Var::Mag(k))?;
        let b = self.blocks[k].as_mut().unwrap();
        b.free.retain(|&i| i != j);
        b.tied.push(j);
        b.signs.push(sign);
        self.push_var(Var::Mag(k), t)
    }

    /// Releases tied coordinate `j` of group `k`; it keeps its current value.
    fn untie(&mut self, k: usize, j: usize) -> Result<()> {
        let t = self.remove_var(Var::Mag(k))?;
        let b = self.blocks[k].as_mut().unwrap();
        let pos = b.tied.iter().position(|&i| i == j).unwrap();
        b.tied.remove(pos);
        let s = b.signs.remove(pos);
        b.free.push(j);
        self.push_var(Var::Mag(k), t)?;
        self.push_var(Var::Free(j), s * t)
    }

    /// Resets group `k`, currently at zero, to the entering configuration.
    fn reenter(&mut self, k: usize, c: &[f64]) -> Result<()> {
        self.remove_group(k)?;
        self.add_group(k, c)
    }

    /// First constraint `|β_free| ≤ t`, `t ≥ 0` crossed on the way to `theta_new`.
    fn first_blocking(&self, theta_new: &[f64]) -> Option<(f64, Event)> {
        let scale = 1.0 + self.theta.iter().chain(theta_new).fold(0.0_f64, |m, v| m.max(v.abs()));
        let eps = 1e-13 * scale;
        let mut best: Option<(f64, Event)> = None;
        let mut consider = |a: f64, h1: f64, ev: Event| {
            if h1 < -eps {
                let t = if a > 0.0 { (a / (a - h1)).clamp(0.0, 1.0) } else { 0.0 };
                if best.is_none_or(|(b, _)| t < b) {
                    best = Some((t, ev));
                }
            }
        };
        for (pm, v) in self.vars.iter().enumerate() {
            let Var::Mag(k) = *v else { continue };
            let b = self.blocks[k].as_ref().unwrap();
            let (t0, t1) = (self.theta[pm], theta_new[pm]);
            if b.free.is_empty() {
                consider(t0, t1, Event::Zero { group: k });
            }
            for &j in &b.free {
                let pf = self.pos(Var::Free(j));
                let (b0, b1) = (self.theta[pf], theta_new[pf]);
                consider(t0 - b0, t1 - b1, Event::Hit { group: k, coord: j, sign: 1.0 });
                consider(t0 + b0, t1 + b1, Event::Hit { group: k, coord: j, sign: -1.0 });
            }
        }
        best
    }

    /// Most negative block weight `−s_j c_j` among blocks of size ≥ 2.
    fn worst_weight(&self, c: &[f64]) -> Option<(usize, usize, f64)> {
        let mut worst: Option<(usize, usize, f64)> = None;
        for &k in &self.active {
            let b = self.blocks[k].as_ref().unwrap();
            if b.tied.len() < 2 {
                continue;
            }
            for (&j, &s) in b.tied.iter().zip(&b.signs) {
                let m = -s * c[j];
                if worst.is_none_or(|(_, _, w)| m < w) {
                    worst = Some((k, j, m));
                }
            }
        }
        worst
    }

    fn visit_key(&self) -> Vec<i64> {
        let mut groups = self.active.clone();
        groups.sort_unstable();
        let mut key = Vec::new();
        for k in groups {
            key.push(-(k as i64) - 1);
            let b = self.blocks[k].as_ref().unwrap();
            let mut tied: Vec<i64> =
                b.tied.iter().zip(&b.signs).map(|(&j, &s)| if s > 0.0 { j as i64 + 1 } else { -(j as i64) - 1 }).collect();
            tied.sort_unstable_by_key(|v| v.abs());
            key.extend(tied);
        }
        key
    }

    fn is_active_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.problem.p()];
        for &k in &self.active {
            for &j in self.groups.group(k) {
                mask[j] = true;
            }
        }
        mask
    }
}

pub(super) fn solve(problem: &ProblemData, penalty: &PenaltySpec, config: &SolverConfig) -> Result<Solution> {
    let start = Instant::now();
    let groups = problem.groups().expect("checked by the caller");
    let p = problem.p();
    let (l1, l2) = (penalty.lambda1, penalty.lambda2);
    let max_outer = config.max_outer(p);
    let remove_tol = ZERO_TOL * (1.0 + l1);
    let weight_tol = 1e-11 * (1.0 + l1);
    let mut counters = Counters::default();
    let mut st = State::new(problem, groups, l2);

    if let Some(b0) = &config.beta0 {
        warm_start(&mut st, b0)?;
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
        let seen = visits.entry(st.visit_key()).or_insert(0);
        *seen += 1;
        if *seen == 4 {
            st.refactor()?;
        } else if *seen > 4 {
            status = SolveStatus::CycleGuard;
            break;
        }

        // Step 1.
        let theta_new = st.solve_subproblem(l1);
        counters.solves += 1;

        // Step 2.
        if let Some((rho, event)) = st.first_blocking(&theta_new) {
            counters.backtracks += 1;
            st.theta = st.theta.iter().zip(&theta_new).map(|(o, n)| o + rho * (n - o)).collect();
            match event {
                Event::Hit { group, coord, sign } => {
                    let t = st.theta[st.pos(Var::Mag(group))];
                    let pf = st.pos(Var::Free(coord));
                    st.theta[pf] = sign * t;
                    st.tie(group, coord, sign)?;
                }
                Event::Zero { group } => {
                    let pm = st.pos(Var::Mag(group));
                    st.theta[pm] = 0.0;
                    let beta = st.beta();
                    let r = problem.residual(&beta);
                    let c = oracle::correlations(problem, l2, &beta, &r);
                    let cg: Vec<f64> = groups.group(group).iter().map(|&j| c[j]).collect();
                    if oracle::water_level(&cg, l1) <= remove_tol || rho == 0.0 {
                        st.remove_group(group)?;
                    } else {
                        st.reenter(group, &c)?;
                    }
                }
            }
            if config.record_history {
                history.push(penalty_value(penalty, groups, problem, &st.beta()));
            }
            continue;
        }
        st.theta = theta_new;
        let beta = st.beta();
        let r = problem.residual(&beta);
        if config.record_history {
            history.push(user_objective_from_residual(penalty, Some(groups), r.as_slice().unwrap(), &beta));
        }
        let c = oracle::correlations(problem, l2, &beta, &r);
        if let Some((k, j, w)) = st.worst_weight(&c) {
            if w < -weight_tol {
                st.untie(k, j)?;
                continue;
            }
        }

        // Step 3.
        if config.certify.at(counters.outer) {
            certificates.extend(certify(problem, penalty, &st, &beta, &c, counters.outer)?);
        }
        let scores = oracle::scores_from_correlations(c, penalty.family, Some(groups), l1);
        let v = scores.group.as_ref().unwrap();
        let removable = st.active.iter().copied().find(|&k| {
            v[k] <= remove_tol && groups.group(k).iter().all(|&j| beta[j].abs() <= ZERO_TOL)
        });
        if let Some(k) = removable {
            st.remove_group(k)?;
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for (k, &vk) in v.iter().enumerate() {
            if st.blocks[k].is_none() && vk > config.tau && best.is_none_or(|(_, b)| vk > b) {
                best = Some((k, vk));
            }
        }
        match best {
            Some((k, _)) => st.add_group(k, &scores.c)?,
            None => break,
        }
    }

    let beta = st.beta();
    if config.certify == Certify::Final {
        let r = problem.residual(&beta);
        let c = oracle::correlations(problem, l2, &beta, &r);
        certificates.extend(certify(problem, penalty, &st, &beta, &c, counters.outer)?);
    }
    let mut active = st.active.clone();
    active.sort_unstable();
    finish(problem, penalty, beta, active, counters, status, start, certificates, history)
}

fn penalty_value(penalty: &PenaltySpec, groups: &Groups, problem: &ProblemData, beta: &[f64]) -> f64 {
    let r = problem.residual(beta);
    user_objective_from_residual(penalty, Some(groups), r.as_slice().unwrap(), beta)
}

/// Builds the configuration of a warm start: coordinates at the group maximum
/// form the block, the rest are free.
fn warm_start(st: &mut State, beta0: &[f64]) -> Result<()> {
    for k in 0..st.groups.len() {
        let g = st.groups.group(k);
        let m = g.iter().fold(0.0_f64, |m, &j| m.max(beta0[j].abs()));
        if m == 0.0 {
            continue;
        }
        let tol = 1e-10 * (1.0 + m);
        let (mut tied, mut signs, mut free) = (Vec::new(), Vec::new(), Vec::new());
        for &j in g {
            if m - beta0[j].abs() <= tol {
                tied.push(j);
                signs.push(beta0[j].signum());
            } else {
                free.push(j);
            }
        }
        st.blocks[k] = Some(Block { tied, signs, free: free.clone() });
        st.active.push(k);
        st.push_var(Var::Mag(k), m)?;
        for j in free {
            st.push_var(Var::Free(j), beta0[j])?;
        }
    }
    Ok(())
}

fn certify(
    problem: &ProblemData,
    penalty: &PenaltySpec,
    st: &State,
    beta: &[f64],
    c: &[f64],
    iter: usize,
) -> Result<Vec<CertificateRecord>> {
    let mut gamma_active = vec![0.0; problem.p()];
    for &k in &st.active {
        for &j in &st.blocks[k].as_ref().unwrap().tied {
            gamma_active[j] = c[j] / penalty.lambda2;
        }
    }
    let mask = st.is_active_mask();
    let gamma = oracle::complete_gamma_inactive(problem, penalty, beta, &gamma_active, &mask)?;
    let certs = gap::certify_all(problem, penalty, &gamma.values, beta, &mask)?;
    Ok(certs.into_iter().map(|certificate| CertificateRecord { iter, certificate }).collect())
}
