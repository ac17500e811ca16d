use super::{working_residual, BaselineConfig, InnerReport};
use crate::error::Result;
use crate::model::{PenaltySpec, ProblemData};
use crate::solver::dot;

pub fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Cyclic coordinate descent on the elastic net restricted to `working`.
///
/// Stops when the subgradient residual on `working` is at most `inner_tol`,
/// when a sweep leaves `β` unchanged, or at the iteration cap.
pub fn coordinate_descent_inner(
    problem: &ProblemData,
    penalty: &PenaltySpec,
    working: &[usize],
    beta: &mut [f64],
    config: &BaselineConfig,
) -> Result<InnerReport> {
    let (l1, l2) = (penalty.lambda1, penalty.lambda2);
    let col_sq = problem.col_sq();
    // r = y − Xβ
    let mut r: Vec<f64> = working_residual(problem, working, beta).into_iter().map(|v| -v).collect();
    for it in 1..=config.inner_max_iter {
        let mut changed = false;
        for &j in working {
            let xj = problem.col(j);
            let old = beta[j];
            let denom = col_sq[j] + l2;
            if denom == 0.0 {
                continue;
            }
            let z = dot(xj, &r) + col_sq[j] * old;
            let new = soft_threshold(z, l1) / denom;
            if new != old {
                let d = new - old;
                for (ri, xi) in r.iter_mut().zip(xj) {
                    *ri -= d * xi;
                }
                beta[j] = new;
                changed = true;
            }
        }
        let worst = working.iter().fold(0.0_f64, |m, &j| {
            let c = -dot(problem.col(j), &r) + l2 * beta[j];
            let v = if beta[j] != 0.0 { (c + l1 * beta[j].signum()).abs() } else { (c.abs() - l1).max(0.0) };
            m.max(v)
        });
        if worst <= config.inner_tol || !changed {
            return Ok(InnerReport { iterations: it, hit_cap: false });
        }
    }
    Ok(InnerReport { iterations: config.inner_max_iter, hit_cap: true })
}
