use super::{working_residual, BaselineConfig, InnerReport};
use crate::error::{Error, Result};
use crate::model::{penalty_norm, Family, PenaltySpec, ProblemData};
use crate::oracle::water_level;
use crate::solver::dot;

/// `t_{k+1} = (1 + √(1 + 4t_k²))/2`.
pub fn momentum_next(t: f64) -> f64 {
    0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt())
}

/// Largest eigenvalue of `X_WᵀX_W` by power iteration from the all-ones vector.
pub fn power_iteration(problem: &ProblemData, working: &[usize], iters: usize, tol: f64) -> f64 {
    let m = working.len();
    if m == 0 {
        return 0.0;
    }
    let mut v = vec![1.0 / (m as f64).sqrt(); m];
    let mut est = 0.0;
    let mut u = vec![0.0; problem.n()];
    for _ in 0..iters {
        u.iter_mut().for_each(|x| *x = 0.0);
        for (&j, &vj) in working.iter().zip(&v) {
            for (ui, xi) in u.iter_mut().zip(problem.col(j)) {
                *ui += vj * xi;
            }
        }
        let w: Vec<f64> = working.iter().map(|&j| dot(problem.col(j), &u)).collect();
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let new = dot(&u, &u);
        v = w.into_iter().map(|x| x / norm).collect();
        let done = (new - est).abs() <= tol * new;
        est = new;
        if done {
            break;
        }
    }
    est
}

/// Prox of `weight·‖·‖_∞`: `v − proj_{ℓ1 ball of radius weight}(v)`, i.e. `v`
/// clipped at the water level.
pub fn linf_prox(v: &[f64], weight: f64) -> Vec<f64> {
    let theta = water_level(v, weight);
    v.iter().map(|&x| x.signum() * x.abs().min(theta)).collect()
}

fn prox(penalty: &PenaltySpec, problem: &ProblemData, working: &[usize], v: &mut [f64], step: f64) {
    let t = penalty.lambda1 * step;
    match penalty.family {
        Family::ElasticNet => {
            for x in v.iter_mut() {
                *x = super::soft_threshold(*x, t);
            }
        }
        Family::GroupLinfOne => {
            // working is a union of whole groups, listed group by group
            let groups = problem.groups().unwrap();
            let mut i = 0;
            while i < working.len() {
                let size = groups.group(groups.group_of(working[i])).len();
                let out = linf_prox(&v[i..i + size], t);
                v[i..i + size].copy_from_slice(&out);
                i += size;
            }
        }
    }
}

fn objective(penalty: &PenaltySpec, problem: &ProblemData, working: &[usize], x: &[f64], r: &[f64]) -> f64 {
    let mut full = vec![0.0; problem.p()];
    for (&j, &v) in working.iter().zip(x) {
        full[j] = v;
    }
    0.5 * dot(r, r)
        + penalty.lambda1 * penalty_norm(penalty.family, problem.groups(), &full)
        + 0.5 * penalty.lambda2 * dot(x, x)
}

/// FISTA with constant step `1/L` on the coordinates in `working`.
///
/// Stops when the gradient mapping `L·‖z − x⁺‖_∞` is at most `inner_tol`. With
/// `restart`, a step that increases the objective is discarded, the momentum
/// is reset, and `L` is doubled if the discarded step was already plain.
pub fn proximal_inner(
    problem: &ProblemData,
    penalty: &PenaltySpec,
    working: &[usize],
    beta: &mut [f64],
    config: &BaselineConfig,
) -> Result<InnerReport> {
    let l2 = penalty.lambda2;
    let eig = power_iteration(problem, working, config.power_iters, config.power_tol);
    if eig == 0.0 && l2 == 0.0 {
        return Err(Error::Config("proximal step undefined: active columns are all zero".into()));
    }
    // Power iteration approaches the top eigenvalue from below.
    let mut lip = eig * (1.0 + 1e-2) + l2;
    let n = problem.n();
    let m = working.len();
    let apply = |v: &[f64], out: &mut Vec<f64>| {
        out.clear();
        out.extend(problem.y().iter().map(|y| -y));
        for (&j, &vj) in working.iter().zip(v) {
            if vj != 0.0 {
                for (o, xi) in out.iter_mut().zip(problem.col(j)) {
                    *o += vj * xi;
                }
            }
        }
    };
    let mut x: Vec<f64> = working.iter().map(|&j| beta[j]).collect();
    let mut z = x.clone();
    let mut t = 1.0;
    let mut rz = Vec::with_capacity(n);
    let mut rx = working_residual(problem, working, beta);
    let mut fx = objective(penalty, problem, working, &x, &rx);
    let mut cand = vec![0.0; m];
    let mut rc = Vec::with_capacity(n);
    let mut plain = true;
    let mut hit_cap = true;
    let mut iterations = config.inner_max_iter;

    for it in 1..=config.inner_max_iter {
        apply(&z, &mut rz);
        for (k, &j) in working.iter().enumerate() {
            let g = dot(problem.col(j), &rz) + l2 * z[k];
            cand[k] = z[k] - g / lip;
        }
        prox(penalty, problem, working, &mut cand, 1.0 / lip);
        let mapping = z.iter().zip(&cand).fold(0.0_f64, |a, (zi, ci)| a.max((zi - ci).abs())) * lip;

        if config.restart {
            apply(&cand, &mut rc);
            let fc = objective(penalty, problem, working, &cand, &rc);
            if fc > fx {
                if plain {
                    lip *= 2.0;
                }
                z.clone_from(&x);
                t = 1.0;
                plain = true;
                continue;
            }
            fx = fc;
            std::mem::swap(&mut rx, &mut rc);
        }
        let t_next = momentum_next(t);
        let w = (t - 1.0) / t_next;
        let mut moved = false;
        for k in 0..m {
            let step = cand[k] - x[k];
            moved |= step != 0.0;
            z[k] = cand[k] + w * step;
            x[k] = cand[k];
        }
        plain = w == 0.0;
        t = t_next;
        if mapping <= config.inner_tol || (!moved && plain) {
            hit_cap = false;
            iterations = it;
            break;
        }
    }
    for (&j, &v) in working.iter().zip(&x) {
        beta[j] = v;
    }
    Ok(InnerReport { iterations, hit_cap })
}
