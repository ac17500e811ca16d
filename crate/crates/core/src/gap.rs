//! Lower bounds on the minimax optimum from an infeasible `γ`.
//!
//! All values are in the minimax convention `J_λ(β, γ) = ‖Xβ−y‖² + λ‖β−γ‖²`,
//! with `λ = λ2` and radius `η = λ1/λ2`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{user_objective, Family, PenaltySpec, ProblemData};
use crate::oracle::{self, UncertaintySet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GapMethod {
    #[serde(rename = "wcq-main")]
    WcqMain,
    #[serde(rename = "wcq-tight")]
    WcqTight,
    #[serde(rename = "fenchel")]
    Fenchel,
}

impl GapMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            GapMethod::WcqMain => "wcq-main",
            GapMethod::WcqTight => "wcq-tight",
            GapMethod::Fenchel => "fenchel",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapCertificate {
    pub method: GapMethod,
    pub lower_bound: f64,
    /// `max_γ J_λ(β, γ)` at the certified `β`.
    pub current_value: f64,
    pub gap: f64,
    /// `‖γ‖_*` of the certifying `γ`.
    pub gamma_norm: f64,
    pub alpha: Option<f64>,
    /// Indices left unscaled by the tight bound.
    pub kept: Option<Vec<usize>>,
}

fn robust(penalty: &PenaltySpec) -> Result<(f64, f64)> {
    match penalty.eta() {
        Some(eta) => Ok((penalty.lambda2, eta)),
        None => Err(Error::Unsupported("gap bounds require lambda2 > 0".into())),
    }
}

/// `max_γ J_λ(β, γ)`, which is twice the user objective plus the offset.
pub fn current_value(problem: &ProblemData, penalty: &PenaltySpec, beta: &[f64]) -> Result<f64> {
    robust(penalty)?;
    problem.check_beta(beta)?;
    let offset = penalty.constant_offset(problem).unwrap_or(0.0);
    Ok(2.0 * user_objective(problem, penalty, beta) + offset)
}

fn sq(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().map(|x| x * x).sum()
}

/// `(η/N)·J − λη(N − η)/N²·‖γ‖²` for `N = ‖γ‖_* > η`, else `J`.
pub fn main_lower(j: f64, lambda: f64, eta: f64, gamma_norm: f64, gamma_sq: f64) -> f64 {
    if gamma_norm <= eta {
        return j;
    }
    let a = eta / gamma_norm;
    a * j - lambda * eta * (gamma_norm - eta) / (gamma_norm * gamma_norm) * gamma_sq
}

/// `α·J − λα(1−α)·‖γ_{S^c}‖²`.
pub fn tight_lower(j: f64, lambda: f64, alpha: f64, gamma_out_sq: f64) -> f64 {
    alpha * j - lambda * alpha * (1.0 - alpha) * gamma_out_sq
}

fn set_of<'a>(problem: &'a ProblemData, penalty: &PenaltySpec, eta: f64) -> UncertaintySet<'a> {
    UncertaintySet::new(penalty.family, problem.groups(), eta)
}

fn certificate(
    method: GapMethod,
    lower_bound: f64,
    current: f64,
    gamma_norm: f64,
    alpha: Option<f64>,
    kept: Option<Vec<usize>>,
) -> GapCertificate {
    GapCertificate { method, lower_bound, current_value: current, gap: current - lower_bound, gamma_norm, alpha, kept }
}

fn check_inputs(problem: &ProblemData, penalty: &PenaltySpec, gamma: &[f64], beta: &[f64]) -> Result<(f64, f64)> {
    let le = robust(penalty)?;
    penalty.check(problem)?;
    problem.check_beta(beta)?;
    problem.check_beta(gamma)?;
    Ok(le)
}

/// Uniform shrinkage bound. `beta` must minimize `J_λ(·, γ)`.
pub fn bound_main(problem: &ProblemData, penalty: &PenaltySpec, gamma: &[f64], beta: &[f64]) -> Result<GapCertificate> {
    let (lambda, eta) = check_inputs(problem, penalty, gamma, beta)?;
    let norm = set_of(problem, penalty, eta).dual_norm(gamma);
    let j = crate::model::minimax_objective(problem, lambda, beta, gamma);
    let lower = main_lower(j, lambda, eta, norm, sq(gamma.iter().copied()));
    let current = current_value(problem, penalty, beta)?;
    Ok(certificate(GapMethod::WcqMain, lower, current, norm, None, None))
}

/// Largest `α ≤ 1` making `(γ_S, αγ_{S^c})` feasible, or `None` if `γ_S` alone is not.
pub fn tight_alpha(penalty: &PenaltySpec, problem: &ProblemData, gamma: &[f64], kept: &[bool]) -> Result<Option<f64>> {
    let (_, eta) = robust(penalty)?;
    let slack = eta * (1.0 + 1e-12);
    let mut alpha = 1.0_f64;
    match penalty.family {
        Family::ElasticNet => {
            for (g, &k) in gamma.iter().zip(kept) {
                if k {
                    if g.abs() > slack {
                        return Ok(None);
                    }
                } else if g.abs() > eta {
                    alpha = alpha.min(eta / g.abs());
                }
            }
        }
        Family::GroupLinfOne => {
            let groups = problem.groups().ok_or_else(|| Error::Config("group penalty requires a column partition".into()))?;
            for g in groups.iter() {
                let a: f64 = g.iter().filter(|&&j| kept[j]).map(|&j| gamma[j].abs()).sum();
                let b: f64 = g.iter().filter(|&&j| !kept[j]).map(|&j| gamma[j].abs()).sum();
                if a > slack {
                    return Ok(None);
                }
                if a + b > eta {
                    alpha = alpha.min(((eta - a) / b).max(0.0));
                }
            }
        }
    }
    Ok(Some(alpha))
}

/// Partial shrinkage bound: only `γ_{S^c}` is scaled by `α`. With `alpha = None`
/// the largest feasible `α` is used; if `γ_S` itself is infeasible this falls
/// back to [`bound_main`].
pub fn bound_tight(
    problem: &ProblemData,
    penalty: &PenaltySpec,
    gamma: &[f64],
    beta: &[f64],
    kept: &[usize],
    alpha: Option<f64>,
) -> Result<GapCertificate> {
    let (lambda, eta) = check_inputs(problem, penalty, gamma, beta)?;
    let mut mask = vec![false; problem.p()];
    for &j in kept {
        if j >= problem.p() {
            return Err(Error::Dimension(format!("kept index {j} out of range for p = {}", problem.p())));
        }
        mask[j] = true;
    }
    let set = set_of(problem, penalty, eta);
    let alpha = match (alpha, tight_alpha(penalty, problem, gamma, &mask)?) {
        (_, None) => {
            let mut c = bound_main(problem, penalty, gamma, beta)?;
            c.method = GapMethod::WcqTight;
            return Ok(c);
        }
        (Some(a), Some(best)) => {
            if !(a > 0.0 && a <= best) {
                return Err(Error::Config(format!("alpha = {a} does not restore feasibility (largest is {best})")));
            }
            a
        }
        (None, Some(best)) => best,
    };
    let norm = set.dual_norm(gamma);
    let j = crate::model::minimax_objective(problem, lambda, beta, gamma);
    let out_sq = sq(gamma.iter().zip(&mask).filter(|(_, &k)| !k).map(|(g, _)| *g));
    let lower = tight_lower(j, lambda, alpha, out_sq);
    let current = current_value(problem, penalty, beta)?;
    Ok(certificate(GapMethod::WcqTight, lower, current, norm, Some(alpha), Some(kept.to_vec())))
}

/// Elastic-net duality gap with the dual point `−α(Xβ−y, √λ β)`.
///
/// `α = min(1, η/‖γ‖_∞)` where `λγ` is the stationarity vector at `beta`; this
/// equals the completed `γ` whenever `beta` solves its subproblem.
pub fn fenchel_gap(problem: &ProblemData, penalty: &PenaltySpec, gamma: &[f64], beta: &[f64]) -> Result<GapCertificate> {
    let (lambda, eta) = check_inputs(problem, penalty, gamma, beta)?;
    if penalty.family != Family::ElasticNet {
        return Err(Error::Unsupported("the Fenchel gap is implemented for the elastic net only".into()));
    }
    let r = problem.residual(beta);
    let c = oracle::correlations(problem, lambda, beta, &r);
    let norm = c.iter().fold(0.0_f64, |m, v| m.max(v.abs())) / lambda;
    let alpha = if norm > eta { eta / norm } else { 1.0 };
    let rty = r.dot(problem.y());
    let quad = r.dot(&r) + lambda * sq(beta.iter().copied());
    let offset = penalty.constant_offset(problem).unwrap_or(0.0);
    let lower = offset - 2.0 * alpha * rty - alpha * alpha * quad;
    let current = current_value(problem, penalty, beta)?;
    Ok(certificate(GapMethod::Fenchel, lower, current, norm, Some(alpha), None))
}

/// Main and tight bounds, plus the Fenchel gap for the elastic net. The tight
/// bound keeps the coordinates flagged in `is_active`.
pub fn certify_all(
    problem: &ProblemData,
    penalty: &PenaltySpec,
    gamma: &[f64],
    beta: &[f64],
    is_active: &[bool],
) -> Result<Vec<GapCertificate>> {
    let kept: Vec<usize> = (0..problem.p()).filter(|&j| is_active[j]).collect();
    let mut out = vec![
        bound_main(problem, penalty, gamma, beta)?,
        bound_tight(problem, penalty, gamma, beta, &kept, None)?,
    ];
    if penalty.family == Family::ElasticNet {
        out.push(fenchel_gap(problem, penalty, gamma, beta)?);
    }
    Ok(out)
}
