//! The common stopping measure shared by every solver.

use crate::model::{Family, PenaltySpec, ProblemData};
use crate::oracle;

/// `max_j |x_jᵀ(y − Xβ) − λ2β_j| − λ1` for the elastic net.
///
/// For groups each group contributes its water-filling level when
/// `‖c_G‖₁ > λ1` and `‖c_G‖₁ − λ1 ≤ 0` otherwise, which reduces to the
/// elastic-net value on singleton groups.
pub fn kkt_violation(problem: &ProblemData, penalty: &PenaltySpec, beta: &[f64]) -> f64 {
    let r = problem.residual(beta);
    let c = oracle::correlations(problem, penalty.lambda2, beta, &r);
    kkt_from_correlations(&c, problem, penalty)
}

pub(crate) fn kkt_from_correlations(c: &[f64], problem: &ProblemData, penalty: &PenaltySpec) -> f64 {
    let l1 = penalty.lambda1;
    match penalty.family {
        Family::ElasticNet => c.iter().fold(f64::NEG_INFINITY, |m, v| m.max(v.abs())) - l1,
        Family::GroupLinfOne => {
            let groups = problem.groups().expect("group penalty needs a partition");
            let mut buf = Vec::new();
            groups
                .iter()
                .map(|g| {
                    buf.clear();
                    buf.extend(g.iter().map(|&j| c[j]));
                    let total: f64 = buf.iter().map(|v| v.abs()).sum();
                    if total > l1 {
                        oracle::water_level(&buf, l1)
                    } else {
                        total - l1
                    }
                })
                .fold(f64::NEG_INFINITY, f64::max)
        }
    }
}
