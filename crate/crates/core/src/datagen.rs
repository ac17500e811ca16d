//! Equicorrelated Gaussian designs with a sign-balanced sparse signal.
//!
//! Draws come from `ChaCha8Rng::seed_from_u64(seed)` with `rand_distr`'s
//! ziggurat `StandardNormal`. Each row consumes `z, e_1..e_p, ε` in that order;
//! training rows are drawn before test rows.

use std::path::Path;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::io;
use crate::model::ProblemData;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DataGenConfig {
    pub n: usize,
    pub p: usize,
    /// Common pairwise correlation of the features.
    pub rho: f64,
    /// Number of nonzero coefficients; must be even.
    pub s: usize,
    pub r_squared: f64,
    pub seed: u64,
}

impl DataGenConfig {
    pub fn new(n: usize, p: usize, rho: f64, s: usize, seed: u64) -> Self {
        Self { n, p, rho, s, r_squared: 0.8, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 {
            return Err(Error::Config("n and p must be positive".into()));
        }
        if self.s % 2 != 0 || self.s > self.p || self.s == 0 {
            return Err(Error::Config(format!("s must be even with 0 < s <= p, got s = {}", self.s)));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(Error::Config(format!("rho must lie in [0, 1), got {}", self.rho)));
        }
        if !(self.r_squared > 0.0 && self.r_squared < 1.0) {
            return Err(Error::Config(format!("r_squared must lie in (0, 1), got {}", self.r_squared)));
        }
        Ok(())
    }

    pub fn test_size(&self) -> usize {
        10 * self.n
    }
}

/// `(2,…,2, −2,…,−2, 0,…,0)` with `s/2` of each sign.
pub fn beta_star(p: usize, s: usize) -> Vec<f64> {
    (0..p).map(|j| if j < s / 2 { 2.0 } else if j < s { -2.0 } else { 0.0 }).collect()
}

/// `Var(x·β) = (1−ρ)‖β‖² + ρ(Σβ_j)²` under the equicorrelated design.
pub fn signal_variance(rho: f64, beta: &[f64]) -> f64 {
    let sq: f64 = beta.iter().map(|b| b * b).sum();
    let sum: f64 = beta.iter().sum();
    (1.0 - rho) * sq + rho * sum * sum
}

/// `σ²` giving population `R² = r_squared`.
pub fn noise_variance(rho: f64, beta: &[f64], r_squared: f64) -> f64 {
    signal_variance(rho, beta) * (1.0 - r_squared) / r_squared
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub train: ProblemData,
    pub test: ProblemData,
    pub beta_star: Vec<f64>,
    pub sigma: f64,
}

fn draw(rng: &mut ChaCha8Rng, rows: usize, p: usize, rho: f64, beta: &[f64], sigma: f64) -> Result<ProblemData> {
    let (a, b) = (rho.sqrt(), (1.0 - rho).sqrt());
    let mut x = Array2::zeros((rows, p));
    let mut y = Array1::zeros(rows);
    for i in 0..rows {
        let z: f64 = rng.sample(StandardNormal);
        let mut signal = 0.0;
        for j in 0..p {
            let e: f64 = rng.sample(StandardNormal);
            let v = a * z + b * e;
            x[[i, j]] = v;
            signal += v * beta[j];
        }
        let eps: f64 = rng.sample(StandardNormal);
        y[i] = signal + sigma * eps;
    }
    ProblemData::new(x, y)
}

pub fn generate(config: &DataGenConfig) -> Result<Dataset> {
    generate_with_test_size(config, config.test_size())
}

/// As [`generate`] with an explicit number of test rows (at least one).
pub fn generate_with_test_size(config: &DataGenConfig, n_test: usize) -> Result<Dataset> {
    config.validate()?;
    if n_test == 0 {
        return Err(Error::Config("the test set needs at least one row".into()));
    }
    let beta = beta_star(config.p, config.s);
    let sigma = noise_variance(config.rho, &beta, config.r_squared).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let train = draw(&mut rng, config.n, config.p, config.rho, &beta, sigma)?;
    let test = draw(&mut rng, n_test, config.p, config.rho, &beta, sigma)?;
    Ok(Dataset { train, test, beta_star: beta, sigma })
}

/// `1 − ‖y − Xβ‖²/‖y − ȳ‖²`.
pub fn empirical_r_squared(problem: &ProblemData, beta: &[f64]) -> f64 {
    let r = problem.residual(beta);
    let y = problem.y();
    let mean = y.mean().unwrap_or(0.0);
    let sst: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    1.0 - r.dot(&r) / sst
}

#[derive(Serialize)]
struct Meta<'a> {
    config: &'a DataGenConfig,
    sigma: f64,
    sigma_squared: f64,
    n_test: usize,
    rng: &'static str,
    normal: &'static str,
}

/// Writes `train.csv`, `test.csv`, `beta_star.csv` and `meta.json` into `dir`.
pub fn write_dataset(dir: &Path, config: &DataGenConfig, data: &Dataset) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    io::write_problem_csv(&dir.join("train.csv"), data.train.x(), data.train.y())?;
    io::write_problem_csv(&dir.join("test.csv"), data.test.x(), data.test.y())?;
    io::write_vector_csv(&dir.join("beta_star.csv"), "beta_star", &data.beta_star)?;
    let meta = Meta {
        config,
        sigma: data.sigma,
        sigma_squared: data.sigma * data.sigma,
        n_test: data.test.n(),
        rng: "rand_chacha::ChaCha8Rng::seed_from_u64",
        normal: "rand_distr::StandardNormal (ziggurat)",
    };
    std::fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}
