#![allow(dead_code)]

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sparsequad::{Groups, ProblemData};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_problem(rng: &mut ChaCha8Rng, n: usize, p: usize) -> ProblemData {
    let x = Array2::from_shape_fn((n, p), |_| rng.sample::<f64, _>(StandardNormal));
    let y = Array1::from_shape_fn(n, |_| rng.sample::<f64, _>(StandardNormal) * 3.0);
    ProblemData::new(x, y).unwrap()
}

/// Random contiguous partition with blocks of 1..=max_size columns.
pub fn random_groups(rng: &mut ChaCha8Rng, p: usize, max_size: usize) -> Groups {
    let mut members = Vec::new();
    let mut j = 0;
    while j < p {
        let size = rng.random_range(1..=max_size).min(p - j);
        members.push((j..j + size).collect());
        j += size;
    }
    Groups::new(members, p).unwrap()
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + a.abs().max(b.abs()))
}

/// Dense solve by Gaussian elimination with partial pivoting.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for k in 0..n {
        let piv = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
        a.swap(k, piv);
        b.swap(k, piv);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * b[j]).sum();
        b[k] = (b[k] - s) / a[k][k];
    }
    b
}

/// `argmin_β ‖Xβ − y‖² + λ‖β − γ‖²`.
pub fn ridge_minimizer(problem: &ProblemData, lambda: f64, gamma: &[f64]) -> Vec<f64> {
    let x = problem.x();
    let p = problem.p();
    let gram: Vec<Vec<f64>> =
        (0..p).map(|i| (0..p).map(|j| x.column(i).dot(&x.column(j)) + if i == j { lambda } else { 0.0 }).collect()).collect();
    let rhs: Vec<f64> = (0..p).map(|j| x.column(j).dot(problem.y()) + lambda * gamma[j]).collect();
    dense_solve(gram, rhs)
}
