//! Worst-case uncertainty values and the quantities derived from them.
//!
//! The elastic-net set is the box `‖γ‖∞ ≤ η`. The group set imposes one ℓ1
//! budget per group, `‖γ_{G_k}‖₁ ≤ η`, whose support function is
//! `η Σ_k ‖β_{G_k}‖∞`.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::model::{Family, Groups, PenaltySpec, ProblemData};

/// `D_γ` for one of the two families, with radius `η`.
#[derive(Debug, Clone, Copy)]
pub struct UncertaintySet<'a> {
    pub family: Family,
    pub groups: Option<&'a Groups>,
    pub radius: f64,
}

impl<'a> UncertaintySet<'a> {
    pub fn new(family: Family, groups: Option<&'a Groups>, radius: f64) -> Self {
        debug_assert!(family == Family::ElasticNet || groups.is_some());
        Self { family, groups, radius }
    }

    /// The box `‖γ‖∞ ≤ radius`, usable on vectors restricted to an active set.
    pub fn boxed(radius: f64) -> Self {
        Self { family: Family::ElasticNet, groups: None, radius }
    }

    /// Set of radius `η = λ1/λ2`; fails in pure-Lasso mode.
    pub fn from_penalty(problem: &'a ProblemData, penalty: &PenaltySpec) -> Result<Self> {
        let eta = penalty
            .eta()
            .ok_or_else(|| Error::Unsupported("uncertainty radius is undefined when lambda2 = 0".into()))?;
        Ok(Self::new(penalty.family, problem.groups(), eta))
    }

    fn groups(&self) -> &'a Groups {
        self.groups.expect("group set needs a partition")
    }

    /// Dual norm `‖γ‖_*`: ℓ∞, or the largest groupwise ℓ1 norm.
    pub fn dual_norm(&self, gamma: &[f64]) -> f64 {
        match self.family {
            Family::ElasticNet => gamma.iter().fold(0.0, |m, g| m.max(g.abs())),
            Family::GroupLinfOne => self
                .groups()
                .iter()
                .map(|g| g.iter().map(|&j| gamma[j].abs()).sum::<f64>())
                .fold(0.0, f64::max),
        }
    }

    /// `max_{g ∈ D} ‖β − g‖²`.
    pub fn max_sq_distance(&self, beta: &[f64]) -> f64 {
        let eta = self.radius;
        match self.family {
            Family::ElasticNet => beta.iter().map(|b| (b.abs() + eta).powi(2)).sum(),
            Family::GroupLinfOne => {
                let groups = self.groups();
                let sq: f64 = beta.iter().map(|b| b * b).sum();
                let linf: f64 = groups.iter().map(|g| g.iter().fold(0.0_f64, |m, &j| m.max(beta[j].abs()))).sum();
                sq + 2.0 * eta * linf + eta * eta * groups.len() as f64
            }
        }
    }
}

/// Carrier of a group vertex: `γ = sign·η·e_index`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Carrier {
    pub group: usize,
    pub index: usize,
    pub sign: f64,
}

/// Hull point of a group set spread over a tied block of coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct TiedBlock {
    pub group: usize,
    pub indices: Vec<usize>,
    /// Signs of `β` on the block; `γ_j = −sign_j·w_j`.
    pub signs: Vec<f64>,
    /// Non-negative weights summing to the radius.
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaValue {
    pub values: Vec<f64>,
    /// Group vertices; empty for the elastic net.
    pub carriers: Vec<Carrier>,
    /// Tied blocks, filled only when `γ` is a hull point.
    pub blocks: Vec<TiedBlock>,
}

impl GammaValue {
    pub fn from_values(values: Vec<f64>) -> Self {
        Self { values, carriers: Vec::new(), blocks: Vec::new() }
    }
}

fn sign_or_plus(v: f64) -> f64 {
    if v < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Worst-case `γ` for `β`, i.e. a maximizer of `‖β − γ‖²` over the set.
///
/// Ties are resolved by moving `β` along `descent` and keeping the vertex that
/// stays worst-case; without a direction the elastic net picks `+η` and
/// groups the lowest index.
pub fn worst_case_gamma(beta: &[f64], set: &UncertaintySet, descent: Option<&[f64]>) -> GammaValue {
    let eta = set.radius;
    if let Some(d) = descent {
        assert_eq!(d.len(), beta.len(), "descent direction length");
    }
    match set.family {
        Family::ElasticNet => {
            let values = beta
                .iter()
                .enumerate()
                .map(|(j, &b)| {
                    if b != 0.0 {
                        -eta * b.signum()
                    } else {
                        eta * sign_or_plus(-descent.map_or(0.0, |d| d[j]))
                    }
                })
                .collect();
            GammaValue::from_values(values)
        }
        Family::GroupLinfOne => {
            let groups = set.groups();
            let mut values = vec![0.0; beta.len()];
            let mut carriers = Vec::with_capacity(groups.len());
            for (k, g) in groups.iter().enumerate() {
                let m = g.iter().fold(0.0_f64, |m, &j| m.max(beta[j].abs()));
                let (index, sign) = if m > 0.0 {
                    let mut best = usize::MAX;
                    let mut best_score = f64::NEG_INFINITY;
                    for &j in g {
                        if beta[j].abs() == m {
                            let score = descent.map_or(0.0, |d| beta[j].signum() * d[j]);
                            if score > best_score {
                                best = j;
                                best_score = score;
                            }
                        }
                    }
                    (best, -beta[best].signum())
                } else {
                    let mut best = g[0];
                    let mut best_score = f64::NEG_INFINITY;
                    for &j in g {
                        let score = descent.map_or(0.0, |d| d[j].abs());
                        if score > best_score {
                            best = j;
                            best_score = score;
                        }
                    }
                    let dj = descent.map_or(0.0, |d| d[best]);
                    (best, if dj != 0.0 { -dj.signum() } else { 1.0 })
                };
                values[index] = sign * eta;
                carriers.push(Carrier { group: k, index, sign });
            }
            GammaValue { values, carriers, blocks: Vec::new() }
        }
    }
}

/// Whether `γ` attains `max_{g ∈ D} ‖β − g‖²` up to `1e-12·(1 + ‖β‖²)`.
pub fn is_coherent(beta: &[f64], gamma: &[f64], set: &UncertaintySet) -> bool {
    let sq: f64 = beta.iter().map(|b| b * b).sum();
    let value: f64 = beta.iter().zip(gamma).map(|(b, g)| (b - g) * (b - g)).sum();
    set.max_sq_distance(beta) - value <= 1e-12 * (1.0 + sq)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacktrackResult {
    pub rho: f64,
    /// Coordinate whose coherence constraint becomes active.
    pub boundary_index: usize,
    pub beta_at_boundary: Vec<f64>,
}

/// Largest step `ρ ∈ [0,1]` along `β_old → β_new` keeping `γ` worst-case.
///
/// `γ` must be a vertex of the set. For groups the constraint is that the
/// carrier keeps the largest magnitude in its group with the sign opposite
/// to `γ`.
pub fn backtrack(beta_old: &[f64], beta_new: &[f64], gamma: &[f64], set: &UncertaintySet) -> Result<BacktrackResult> {
    if beta_old.len() != beta_new.len() || beta_old.len() != gamma.len() {
        return Err(Error::Dimension("backtrack inputs must share a length".into()));
    }
    if !is_coherent(beta_old, gamma, set) {
        return Err(Error::Contract("gamma is not worst-case for beta_old".into()));
    }
    let mut rho = 1.0_f64;
    let mut boundary = usize::MAX;
    // Constraint h(t) = a + t·b ≥ 0, crossed at t = a/(a − h(1)).
    let mut consider = |a: f64, h1: f64, j: usize| {
        if h1 < 0.0 {
            let t = if a > 0.0 { (a / (a - h1)).clamp(0.0, 1.0) } else { 0.0 };
            if t < rho {
                rho = t;
                boundary = j;
            }
        }
    };
    match set.family {
        Family::ElasticNet => {
            for j in 0..gamma.len() {
                // Coherent iff −γ_j·β_j ≥ 0.
                let s = -gamma[j].signum();
                if gamma[j] != 0.0 {
                    consider(s * beta_old[j], s * beta_new[j], j);
                }
            }
        }
        Family::GroupLinfOne => {
            for g in set.groups().iter() {
                let Some(&c) = g.iter().find(|&&j| gamma[j] != 0.0) else { continue };
                let s = -gamma[c].signum();
                let (ac, bc) = (s * beta_old[c], s * beta_new[c]);
                consider(ac, bc, c);
                for &i in g {
                    if i != c {
                        consider(ac - beta_old[i], bc - beta_new[i], i);
                        consider(ac + beta_old[i], bc + beta_new[i], i);
                    }
                }
            }
        }
    }
    let mut beta_at_boundary: Vec<f64> =
        beta_old.iter().zip(beta_new).map(|(o, n)| o + rho * (n - o)).collect();
    if boundary == usize::MAX {
        boundary = 0;
    } else if rho < 1.0 {
        match set.family {
            Family::ElasticNet => beta_at_boundary[boundary] = 0.0,
            Family::GroupLinfOne => {
                let g = set.groups().group(set.groups().group_of(boundary));
                let c = *g.iter().find(|&&j| gamma[j] != 0.0).unwrap();
                if c == boundary {
                    beta_at_boundary[c] = 0.0;
                } else {
                    let m = beta_at_boundary[c].abs();
                    beta_at_boundary[boundary] = m * beta_at_boundary[boundary].signum();
                }
            }
        }
    }
    Ok(BacktrackResult { rho, boundary_index: boundary, beta_at_boundary })
}

/// Unique `v ≥ 0` with `Σ max(|c_j| − v, 0) = budget`, or 0 when `‖c‖₁ ≤ budget`.
pub fn water_level(c: &[f64], budget: f64) -> f64 {
    let total: f64 = c.iter().map(|v| v.abs()).sum();
    if total <= budget {
        return 0.0;
    }
    let mut a: Vec<f64> = c.iter().map(|v| v.abs()).collect();
    a.sort_unstable_by(|x, y| y.total_cmp(x));
    let mut cum = 0.0;
    let mut level = 0.0;
    for (k, &ak) in a.iter().enumerate() {
        cum += ak;
        let v = (cum - budget) / (k + 1) as f64;
        let next = a.get(k + 1).copied().unwrap_or(0.0);
        if v >= next {
            level = v;
            break;
        }
    }
    level.max(0.0)
}

/// Stationarity correlations `c_j = x_jᵀ(Xβ − y) + λ2·β_j`.
pub fn correlations(problem: &ProblemData, lambda2: f64, beta: &[f64], residual: &Array1<f64>) -> Vec<f64> {
    let mut c = problem.x().t().dot(residual).to_vec();
    if lambda2 != 0.0 {
        for (cj, b) in c.iter_mut().zip(beta) {
            *cj += lambda2 * b;
        }
    }
    c
}

/// Worst-case gradient scores.
#[derive(Debug, Clone, PartialEq)]
pub struct Scores {
    pub c: Vec<f64>,
    /// `g_j = max(|c_j| − λ1, 0)`.
    pub coord: Vec<f64>,
    /// Water-filling level per group; `None` for the elastic net.
    pub group: Option<Vec<f64>>,
}

pub fn scores_from_correlations(c: Vec<f64>, family: Family, groups: Option<&Groups>, lambda1: f64) -> Scores {
    let coord = c.iter().map(|v| (v.abs() - lambda1).max(0.0)).collect();
    let group = match family {
        Family::ElasticNet => None,
        Family::GroupLinfOne => {
            let groups = groups.expect("group scores need a partition");
            let mut buf = Vec::new();
            Some(
                groups
                    .iter()
                    .map(|g| {
                        buf.clear();
                        buf.extend(g.iter().map(|&j| c[j]));
                        water_level(&buf, lambda1)
                    })
                    .collect(),
            )
        }
    };
    Scores { c, coord, group }
}

/// Scores at `β` (full length, zero outside the active set).
///
/// The budget `λη` is carried as `λ1`, so this also covers `λ2 = 0`.
pub fn worst_case_gradient(problem: &ProblemData, penalty: &PenaltySpec, beta: &[f64]) -> Scores {
    let r = problem.residual(beta);
    let c = correlations(problem, penalty.lambda2, beta, &r);
    scores_from_correlations(c, penalty.family, problem.groups(), penalty.lambda1)
}

/// Completes `γ` off the active set by zeroing the stationarity residual,
/// `γ_j = c_j/λ` for `j ∉ A`. The result may leave the uncertainty set.
pub fn complete_gamma_inactive(
    problem: &ProblemData,
    penalty: &PenaltySpec,
    beta: &[f64],
    gamma_active: &[f64],
    is_active: &[bool],
) -> Result<GammaValue> {
    if penalty.lambda2 <= 0.0 {
        return Err(Error::Unsupported("gap monitoring requires lambda2 > 0".into()));
    }
    problem.check_beta(beta)?;
    let r = problem.residual(beta);
    let c = correlations(problem, penalty.lambda2, beta, &r);
    let values = (0..problem.p())
        .map(|j| if is_active[j] { gamma_active[j] } else { c[j] / penalty.lambda2 })
        .collect();
    Ok(GammaValue::from_values(values))
}

/// How the noise budget bounds `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseScaling {
    /// `(1/n)‖ε‖ ≤ η_ε`.
    PerObservation,
    /// `‖ε‖ ≤ η_ε`.
    Plain,
}

/// `(Δ*, ε*)` maximizing `‖(X − Δ)β + Xγ + ε − y‖` over `‖Δ‖_F ≤ η_X` and the
/// noise ball, so that the norm equals `‖X(β+γ) − y‖ + η_X‖β‖ + ‖ε*‖`.
pub fn adversarial_perturbation(
    beta: &[f64],
    gamma: &[f64],
    problem: &ProblemData,
    eta_x: f64,
    eta_eps: f64,
    scaling: NoiseScaling,
) -> Result<(Array2<f64>, Array1<f64>)> {
    problem.check_beta(beta)?;
    problem.check_beta(gamma)?;
    let (n, p) = (problem.n(), problem.p());
    let shifted: Vec<f64> = beta.iter().zip(gamma).map(|(b, g)| b + g).collect();
    let r = problem.residual(&shifted);
    let rn = r.dot(&r).sqrt();
    let bn = beta.iter().map(|b| b * b).sum::<f64>().sqrt();
    if eta_x == 0.0 && eta_eps == 0.0 {
        return Ok((Array2::zeros((n, p)), Array1::zeros(n)));
    }
    if rn == 0.0 {
        return Err(Error::Degenerate("residual X(beta + gamma) - y is zero".into()));
    }
    if bn == 0.0 && eta_x != 0.0 {
        return Err(Error::Degenerate("beta is zero".into()));
    }
    let rhat = &r / rn;
    let radius = match scaling {
        NoiseScaling::PerObservation => eta_eps * n as f64,
        NoiseScaling::Plain => eta_eps,
    };
    let mut delta = Array2::zeros((n, p));
    if eta_x != 0.0 {
        // −Δ*β must point along r̂.
        for j in 0..p {
            let bj = beta[j] / bn;
            if bj != 0.0 {
                delta.column_mut(j).scaled_add(-eta_x * bj, &rhat);
            }
        }
    }
    Ok((delta, &rhat * radius))
}
