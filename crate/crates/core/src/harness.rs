//! Benchmark scenarios, accuracy metrics and CSV output.
//!
//! Every repetition draws a fresh dataset with its own seed. The reference for
//! objective gaps is the quadratic solver at `τ = 1e-12` on the same grid.

use std::io::Write;

use crate::datagen::{self, DataGenConfig, Dataset};
use crate::error::{Error, Result};
use crate::model::{user_objective, Family, ProblemData};
use crate::solver::{solve_path, Grid, Method, PathResult, Solution, SolverConfig};

pub const REFERENCE_TAU: f64 = 1e-12;

/// How a scenario picks its `λ1` values.
#[derive(Debug, Clone, PartialEq)]
pub enum Lambda1Spec {
    Auto(usize),
    /// Multiples of `λ1max`.
    Fractions(Vec<f64>),
    Values(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    /// Dataset shapes; seeds are filled in per repetition.
    pub datasets: Vec<DataGenConfig>,
    pub lambda1: Lambda1Spec,
    pub lambda2: Grid,
}

impl Scenario {
    /// `p = 100, n = 50, s = 30`, `ρ ∈ {0.1, 0.4, 0.8}`, 50×50 grid.
    pub fn fig3() -> Self {
        Self {
            name: "fig3".into(),
            datasets: [0.1, 0.4, 0.8].iter().map(|&rho| DataGenConfig::new(50, 100, rho, 30, 0)).collect(),
            lambda1: Lambda1Spec::Auto(50),
            lambda2: Grid::Auto(50),
        }
    }

    /// `n = 50, p = 200`, five `λ1` values and `λ2 = 1`.
    pub fn fig2() -> Self {
        Self {
            name: "fig2".into(),
            datasets: vec![DataGenConfig::new(50, 200, 0.5, 30, 0)],
            lambda1: Lambda1Spec::Fractions(vec![0.5, 0.3, 0.2, 0.1, 0.05]),
            lambda2: Grid::Values(vec![1.0]),
        }
    }

    /// Lasso paths with `p = 100, ρ = 0.8, s = 30` and `n ∈ {50, 100, 200}`.
    pub fn accuracy() -> Self {
        Self {
            name: "accuracy".into(),
            datasets: [50, 100, 200].iter().map(|&n| DataGenConfig::new(n, 100, 0.8, 30, 0)).collect(),
            lambda1: Lambda1Spec::Auto(50),
            lambda2: Grid::Values(vec![0.0]),
        }
    }

    pub fn custom(data: DataGenConfig, lambda1: Lambda1Spec, lambda2: Grid) -> Self {
        Self { name: "custom".into(), datasets: vec![data], lambda1, lambda2 }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "fig3" => Ok(Self::fig3()),
            "fig2" => Ok(Self::fig2()),
            "accuracy" => Ok(Self::accuracy()),
            other => Err(Error::Config(format!("unknown scenario {other:?}"))),
        }
    }

    pub fn lambda1_grid(&self, problem: &ProblemData) -> Result<Grid> {
        Ok(match &self.lambda1 {
            Lambda1Spec::Auto(m) => Grid::Auto(*m),
            Lambda1Spec::Values(v) => Grid::Values(v.clone()),
            Lambda1Spec::Fractions(f) => {
                let top = crate::solver::lambda1_max(problem, Family::ElasticNet)?;
                Grid::Values(f.iter().map(|x| x * top).collect())
            }
        })
    }
}

/// Seed of repetition `rep` for dataset `index` of a scenario.
pub fn rep_seed(base: u64, index: usize, rep: usize) -> u64 {
    base.wrapping_add(1_000_003 * index as u64).wrapping_add(rep as u64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub method: String,
    pub lambda1: f64,
    pub lambda2: f64,
    pub rho: f64,
    pub n: usize,
    pub p: usize,
    pub s: usize,
    pub seed: u64,
    pub wall_time_s: f64,
    pub objective_gap: f64,
    pub n_active: usize,
    pub kkt_residual: f64,
    pub mse_test: f64,
    pub support_error_rate: f64,
}

pub const CSV_HEADER: [&str; 14] = [
    "method",
    "lambda1",
    "lambda2",
    "rho",
    "n",
    "p",
    "s",
    "seed",
    "wall_time_s",
    "objective_gap",
    "n_active",
    "kkt_residual",
    "mse_test",
    "support_error_rate",
];

impl BenchRecord {
    fn fields(&self) -> Vec<String> {
        vec![
            self.method.clone(),
            format!("{:?}", self.lambda1),
            format!("{:?}", self.lambda2),
            format!("{:?}", self.rho),
            self.n.to_string(),
            self.p.to_string(),
            self.s.to_string(),
            self.seed.to_string(),
            format!("{:?}", self.wall_time_s),
            format!("{:?}", self.objective_gap),
            self.n_active.to_string(),
            format!("{:?}", self.kkt_residual),
            format!("{:?}", self.mse_test),
            format!("{:?}", self.support_error_rate),
        ]
    }
}

pub fn write_records<W: Write>(writer: W, records: &[BenchRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record(r.fields())?;
    }
    w.flush()?;
    Ok(())
}

/// Fraction of coordinates where `|β̂_j| > threshold` disagrees with `β*_j ≠ 0`.
pub fn support_error_rate(beta_hat: &[f64], beta_star: &[f64], threshold: f64) -> Result<f64> {
    if beta_hat.len() != beta_star.len() {
        return Err(Error::Dimension(format!("lengths differ: {} vs {}", beta_hat.len(), beta_star.len())));
    }
    if beta_hat.is_empty() {
        return Ok(0.0);
    }
    let wrong = beta_hat.iter().zip(beta_star).filter(|(h, s)| (h.abs() > threshold) != (**s != 0.0)).count();
    Ok(wrong as f64 / beta_hat.len() as f64)
}

/// Zero test: exact for the quadratic solver, `1e-8·‖β̂‖_∞` for baselines.
pub fn support_threshold(method: &Method, beta_hat: &[f64]) -> f64 {
    match method {
        Method::Quadratic => 0.0,
        Method::Baseline(_) => 1e-8 * beta_hat.iter().fold(0.0_f64, |m, v| m.max(v.abs())),
    }
}

/// `(1/n)‖y − Xβ‖²` on a held-out problem.
pub fn mse(problem: &ProblemData, beta: &[f64]) -> f64 {
    let r = problem.residual(beta);
    r.dot(&r) / problem.n() as f64
}

/// `√(mean_λ (J_λ(β_ref) − J_λ(β_method))²)` in the user convention, over
/// cells that succeeded in both paths.
pub fn distance_to_optimum(problem: &ProblemData, family: Family, reference: &PathResult, method: &PathResult) -> Result<f64> {
    if reference.lambda1 != method.lambda1 || reference.lambda2 != method.lambda2 {
        return Err(Error::Config("penalty grids differ".into()));
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for (a, b) in reference.cells.iter().zip(&method.cells) {
        if let (Ok(ra), Ok(rb)) = (&a.result, &b.result) {
            let pen = crate::model::PenaltySpec::new(family, a.lambda1, a.lambda2)?;
            let d = user_objective(problem, &pen, &ra.beta) - user_objective(problem, &pen, &rb.beta);
            total += d * d;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::Degenerate("no cell succeeded in both paths".into()));
    }
    Ok((total / count as f64).sqrt())
}

/// Indices `(i2, i1)` of the cells with `λ1` and `λ2` both in the lower half
/// of their grids.
pub fn low_penalty_quadrant(lambda1: &[f64], lambda2: &[f64]) -> Vec<(usize, usize)> {
    let lower = |v: &[f64]| {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        idx.truncate(v.len().div_ceil(2));
        idx
    };
    let l1 = lower(lambda1);
    let l2 = lower(lambda2);
    l2.iter().flat_map(|&i2| l1.iter().map(move |&i1| (i2, i1))).collect()
}

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub methods: Vec<Method>,
    pub reps: usize,
    pub base_seed: u64,
    pub tau: f64,
}

#[allow(clippy::too_many_arguments)]
fn record(
    method: &Method,
    cfg: &DataGenConfig,
    data: &Dataset,
    l1: f64,
    l2: f64,
    sol: Option<&Solution>,
    reference: Option<&Solution>,
) -> BenchRecord {
    let mut rec = BenchRecord {
        method: method.name().to_string(),
        lambda1: l1,
        lambda2: l2,
        rho: cfg.rho,
        n: cfg.n,
        p: cfg.p,
        s: cfg.s,
        seed: cfg.seed,
        wall_time_s: f64::NAN,
        objective_gap: f64::NAN,
        n_active: 0,
        kkt_residual: f64::NAN,
        mse_test: f64::NAN,
        support_error_rate: f64::NAN,
    };
    if let Some(sol) = sol {
        rec.wall_time_s = sol.wall_time;
        rec.n_active = sol.n_active();
        rec.kkt_residual = sol.kkt_residual;
        rec.mse_test = mse(&data.test, &sol.beta);
        rec.support_error_rate =
            support_error_rate(&sol.beta, &data.beta_star, support_threshold(method, &sol.beta)).unwrap_or(f64::NAN);
        if let Some(r) = reference {
            rec.objective_gap = sol.objective.user_value - r.objective.user_value;
        }
    }
    rec
}

/// Runs every method on every dataset shape and repetition.
pub fn run(scenario: &Scenario, options: &BenchOptions) -> Result<Vec<BenchRecord>> {
    let mut out = Vec::new();
    for (index, shape) in scenario.datasets.iter().enumerate() {
        for rep in 0..options.reps {
            let cfg = DataGenConfig { seed: rep_seed(options.base_seed, index, rep), ..*shape };
            let data = datagen::generate(&cfg)?;
            let l1 = scenario.lambda1_grid(&data.train)?;
            let reference = solve_path(
                &data.train,
                Family::ElasticNet,
                &l1,
                &scenario.lambda2,
                &SolverConfig::with_tau(REFERENCE_TAU),
                &Method::Quadratic,
            )?;
            let config = SolverConfig::with_tau(options.tau);
            for method in &options.methods {
                let path = solve_path(&data.train, Family::ElasticNet, &l1, &scenario.lambda2, &config, method)?;
                for (cell, rcell) in path.cells.iter().zip(&reference.cells) {
                    out.push(record(
                        method,
                        &cfg,
                        &data,
                        cell.lambda1,
                        cell.lambda2,
                        cell.result.as_ref().ok(),
                        rcell.result.as_ref().ok(),
                    ));
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn support_error_examples() {
        let star = [2.0, -2.0, 0.0, 0.0, 0.0];
        assert_eq!(support_error_rate(&star, &star, 0.0).unwrap(), 0.0);
        assert_eq!(support_error_rate(&[0.0; 5], &star, 0.0).unwrap(), 2.0 / 5.0);
        assert_eq!(support_error_rate(&[1.0, 0.0, 0.0, 1e-12, 0.0], &star, 1e-8).unwrap(), 1.0 / 5.0);
        assert!(support_error_rate(&[0.0], &star, 0.0).is_err());
    }

    #[test]
    fn quadrant_of_a_fifty_grid_has_625_cells() {
        let l1: Vec<f64> = (0..50).map(|k| 1.0 - k as f64 / 50.0).collect();
        let l2: Vec<f64> = (0..50).map(|k| k as f64).collect();
        let q = low_penalty_quadrant(&l1, &l2);
        assert_eq!(q.len(), 625);
        assert!(q.iter().all(|&(i2, i1)| i2 < 25 && i1 >= 25));
    }

    #[test]
    fn csv_header_matches_fields() {
        let r = BenchRecord {
            method: "quadratic".into(),
            lambda1: 0.1,
            lambda2: 1.0,
            rho: 0.8,
            n: 50,
            p: 100,
            s: 30,
            seed: 7,
            wall_time_s: 1e-3,
            objective_gap: 0.0,
            n_active: 3,
            kkt_residual: -0.5,
            mse_test: 6.25,
            support_error_rate: 0.3,
        };
        let mut buf = Vec::new();
        write_records(&mut buf, std::slice::from_ref(&r)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
        assert_eq!(lines.next().unwrap(), "quadratic,0.1,1.0,0.8,50,100,30,7,0.001,0.0,3,-0.5,6.25,0.3");
    }
}
