//! Exact evaluation of the AUC risk, Bayes risk, expected surrogate risk,
//! and the conditional risk machinery over finite discrete distributions.
//!
//! All pair expectations are literal double sums over ordered pairs of
//! instances, diagonal included; this matches an i.i.d. draw of the two
//! instances, with the tie term contributing on the diagonal. The common
//! normalizer is `2 p (1 - p)`, which makes the risks proper conditional
//! expectations: `AUC(f) + R(f) = 1` holds exactly.

use serde::Serialize;

use crate::dist::{DiscreteDistribution, ScoreVector};
use crate::error::ModelError;
use crate::loss::SurrogateLoss;

/// The 0 / 1/2 / 1 loss on an ordered (positive-role, negative-role) pair:
/// full loss when the positive is ranked below the negative, half on ties.
pub fn ranking_loss(alpha: f64) -> f64 {
    if alpha < 0.0 {
        1.0
    } else if alpha == 0.0 {
        0.5
    } else {
        0.0
    }
}

/// Sums `m_i m_j [eta_i (1-eta_j) g(f_i - f_j) + eta_j (1-eta_i) g(f_j - f_i)]`
/// over all ordered pairs and divides by `2 p (1-p)`.
fn pair_expectation(d: &DiscreteDistribution, f: &[f64], g: impl Fn(f64) -> f64) -> f64 {
    let m = d.marginal();
    let eta = d.eta();
    let n = d.len();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let w = m[i] * m[j];
            if w == 0.0 {
                continue;
            }
            let a = eta[i] * (1.0 - eta[j]);
            let b = eta[j] * (1.0 - eta[i]);
            // zero-weight terms are dropped before evaluation so that an
            // overflowing surrogate on the dead side cannot produce 0 * inf
            let mut term = 0.0;
            if a != 0.0 {
                term += a * g(f[i] - f[j]);
            }
            if b != 0.0 {
                term += b * g(f[j] - f[i]);
            }
            acc += w * term;
        }
    }
    let p = d.positive_rate();
    acc / (2.0 * p * (1.0 - p))
}

/// AUC risk `R(f)`: expected ranking loss over cross-class pairs.
pub fn auc_risk(d: &DiscreteDistribution, f: &ScoreVector) -> Result<f64, ModelError> {
    f.check_compatible(d)?;
    Ok(pair_expectation(d, f.values(), ranking_loss))
}

/// AUC computed independently of `auc_risk`: the probability that a random
/// positive is scored above a random negative, ties counted half.
pub fn auc(d: &DiscreteDistribution, f: &ScoreVector) -> Result<f64, ModelError> {
    f.check_compatible(d)?;
    Ok(pair_expectation(d, f.values(), |alpha| {
        if alpha > 0.0 {
            1.0
        } else if alpha == 0.0 {
            0.5
        } else {
            0.0
        }
    }))
}

/// A member of the Bayes-optimal set: scores strictly increasing in `eta`,
/// with instances of equal `eta` sharing a score.
pub fn bayes_score(d: &DiscreteDistribution) -> ScoreVector {
    let eta = d.eta();
    let mut sorted: Vec<f64> = eta.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    sorted.dedup();
    let values = eta
        .iter()
        .map(|e| sorted.partition_point(|s| s < e) as f64)
        .collect();
    ScoreVector::new(values).expect("rank scores are finite")
}

/// Bayes risk `R*`, attained by any eta-consistent ordering.
pub fn bayes_risk(d: &DiscreteDistribution) -> f64 {
    auc_risk(d, &bayes_score(d)).expect("bayes score is compatible by construction")
}

/// Expected surrogate risk `R_phi(f)` as the normalized ordered double sum.
pub fn phi_risk(
    d: &DiscreteDistribution,
    f: &ScoreVector,
    phi: &SurrogateLoss,
) -> Result<f64, ModelError> {
    f.check_compatible(d)?;
    Ok(pair_expectation(d, f.values(), |t| phi.eval(t)))
}

/// Gradient of `R_phi` with respect to the score vector. For kinked losses
/// this is the subgradient assembled from the right-derivative convention.
pub fn phi_risk_gradient(
    d: &DiscreteDistribution,
    f: &ScoreVector,
    phi: &SurrogateLoss,
) -> Result<Vec<f64>, ModelError> {
    f.check_compatible(d)?;
    let m = d.marginal();
    let eta = d.eta();
    let fv = f.values();
    let n = d.len();
    let mut grad = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue; // both directions cancel on the diagonal
            }
            let w = m[i] * m[j];
            if w == 0.0 {
                continue;
            }
            let a = eta[i] * (1.0 - eta[j]);
            let b = eta[j] * (1.0 - eta[i]);
            let da = a * phi.subgradient(fv[i] - fv[j]);
            let db = b * phi.subgradient(fv[j] - fv[i]);
            grad[i] += w * (da - db);
            grad[j] += w * (db - da);
        }
    }
    let p = d.positive_rate();
    let norm = 2.0 * p * (1.0 - p);
    for g in &mut grad {
        *g /= norm;
    }
    Ok(grad)
}

/// Conditional surrogate risk of one ordered pair at score difference `alpha`:
/// `(eta (1-eta') phi(alpha) + eta' (1-eta) phi(-alpha)) / (2 p (1-p))`.
///
/// Requires `0 < p < 1`.
pub fn conditional_phi_risk(
    eta: f64,
    eta_prime: f64,
    alpha: f64,
    phi: &SurrogateLoss,
    p: f64,
) -> f64 {
    conditional_phi_risk_fn(eta, eta_prime, alpha, |t| phi.eval(t), p)
}

/// Same as [`conditional_phi_risk`] for an arbitrary loss function.
pub fn conditional_phi_risk_fn(
    eta: f64,
    eta_prime: f64,
    alpha: f64,
    phi: impl Fn(f64) -> f64,
    p: f64,
) -> f64 {
    assert!(p > 0.0 && p < 1.0, "positive rate must lie in (0, 1), got {p}");
    let a = eta * (1.0 - eta_prime);
    let b = eta_prime * (1.0 - eta);
    let mut acc = 0.0;
    if a != 0.0 {
        acc += a * phi(alpha);
    }
    if b != 0.0 {
        acc += b * phi(-alpha);
    }
    acc / (2.0 * p * (1.0 - p))
}

/// Result of a one-dimensional conditional-risk minimization.
///
/// When the infimum is only approached as `alpha` runs off to the search
/// boundary, `attained` is false and `alpha` holds the clamped boundary point.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConditionalOptimum {
    pub value: f64,
    pub alpha: f64,
    pub attained: bool,
}

/// Search half-width for the scalar minimizations. Matches the optimizer's
/// default score radius; the surrogate values at this distance are far below
/// every tolerance in the test suites.
pub const ALPHA_RADIUS: f64 = 30.0;

/// Golden-section minimization of a convex function on `[lo, hi]`.
///
/// Convexity makes the function unimodal, so the standard interval shrink
/// applies; flat stretches converge to some point of the flat minimum.
fn golden_section(g: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut g1 = g(x1);
    let mut g2 = g(x2);
    while hi - lo > 1e-11 {
        if g1 <= g2 {
            hi = x2;
            x2 = x1;
            g2 = g1;
            x1 = hi - INV_PHI * (hi - lo);
            g1 = g(x1);
        } else {
            lo = x1;
            x1 = x2;
            g1 = g2;
            x2 = lo + INV_PHI * (hi - lo);
            g2 = g(x2);
        }
    }
    let mid = 0.5 * (lo + hi);
    (g(mid), mid)
}

/// Minimizes a convex scalar function over `[lo, hi]`, flagging minima that
/// sit against a boundary as unattained infima.
pub(crate) fn minimize_convex_scalar(
    g: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
) -> ConditionalOptimum {
    let (value, alpha) = golden_section(&g, lo, hi);
    let width = hi - lo;
    let boundary_window = 1e-6 * width;
    let attained = if alpha - lo < boundary_window {
        g(lo) >= g(lo + boundary_window) // still decreasing into the boundary?
    } else if hi - alpha < boundary_window {
        g(hi) >= g(hi - boundary_window)
    } else {
        true
    };
    if attained {
        ConditionalOptimum { value, alpha, attained: true }
    } else {
        let clamped = if alpha - lo < boundary_window { lo } else { hi };
        ConditionalOptimum { value: g(clamped), alpha: clamped, attained: false }
    }
}

/// Optimal conditional risk `H(eta, eta')`: the infimum of the conditional
/// risk over all score differences, with a near-minimizing `alpha`.
pub fn optimal_conditional_risk(
    eta: f64,
    eta_prime: f64,
    phi: &SurrogateLoss,
    p: f64,
) -> ConditionalOptimum {
    optimal_conditional_risk_fn(eta, eta_prime, |t| phi.eval(t), p)
}

/// [`optimal_conditional_risk`] for an arbitrary convex loss function.
pub fn optimal_conditional_risk_fn(
    eta: f64,
    eta_prime: f64,
    phi: impl Fn(f64) -> f64,
    p: f64,
) -> ConditionalOptimum {
    let g = |alpha: f64| conditional_phi_risk_fn(eta, eta_prime, alpha, &phi, p);
    minimize_convex_scalar(g, -ALPHA_RADIUS, ALPHA_RADIUS)
}

/// Restricted optimal conditional risk `H^-(eta, eta')`: the infimum over the
/// wrong-direction half-line `{alpha : alpha (eta - eta') <= 0}`. For
/// `eta = eta'` the constraint is vacuous and this equals `H`.
pub fn restricted_conditional_risk(eta: f64, eta_prime: f64, phi: &SurrogateLoss, p: f64) -> f64 {
    restricted_conditional_risk_fn(eta, eta_prime, |t| phi.eval(t), p)
}

/// [`restricted_conditional_risk`] for an arbitrary convex loss function.
pub fn restricted_conditional_risk_fn(
    eta: f64,
    eta_prime: f64,
    phi: impl Fn(f64) -> f64,
    p: f64,
) -> f64 {
    restricted_conditional_optimum_fn(eta, eta_prime, phi, p).value
}

/// Restricted minimization that also reports a near-minimizing wrong-direction
/// `alpha` (a boundary minimum at `alpha = 0` is still a valid minimizer).
pub fn restricted_conditional_optimum_fn(
    eta: f64,
    eta_prime: f64,
    phi: impl Fn(f64) -> f64,
    p: f64,
) -> ConditionalOptimum {
    let g = |alpha: f64| conditional_phi_risk_fn(eta, eta_prime, alpha, &phi, p);
    if eta == eta_prime {
        return minimize_convex_scalar(g, -ALPHA_RADIUS, ALPHA_RADIUS);
    }
    let (lo, hi) = if eta > eta_prime { (-ALPHA_RADIUS, 0.0) } else { (0.0, ALPHA_RADIUS) };
    let opt = minimize_convex_scalar(g, lo, hi);
    if opt.attained {
        opt
    } else if (opt.alpha - 0.0).abs() < 1e-9 {
        // the half-line minimum sits against the vacuous side of the
        // constraint at alpha = 0, which is an attained constrained minimum
        ConditionalOptimum { value: opt.value, alpha: 0.0, attained: true }
    } else {
        opt
    }
}

/// `E[inf_alpha C]` over ordered instance pairs: the pointwise lower bound on
/// the optimal expected surrogate risk. Equality holds only for losses whose
/// pairwise minimizers can be realized by a single score function.
pub fn pointwise_risk_bound(d: &DiscreteDistribution, phi: &SurrogateLoss) -> f64 {
    let m = d.marginal();
    let eta = d.eta();
    let p = d.positive_rate();
    let n = d.len();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let w = m[i] * m[j];
            if w == 0.0 {
                continue;
            }
            acc += w * optimal_conditional_risk(eta[i], eta[j], phi, p).value;
        }
    }
    acc
}

/// Closed-form `E[inf_alpha C]` for the two losses with exact pointwise
/// attainment. Returns `None` for every other catalogued loss.
pub fn pointwise_risk_bound_closed(d: &DiscreteDistribution, phi: &SurrogateLoss) -> Option<f64> {
    let pair_min: fn(f64, f64) -> f64 = match phi {
        SurrogateLoss::Exponential => |a, b| 2.0 * (a * b).sqrt(),
        SurrogateLoss::Logistic => |a, b| {
            let term = |x: f64, y: f64| if x == 0.0 { 0.0 } else { x * ((x + y) / x).ln() };
            term(a, b) + term(b, a)
        },
        _ => return None,
    };
    let m = d.marginal();
    let eta = d.eta();
    let p = d.positive_rate();
    let n = d.len();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let a = eta[i] * (1.0 - eta[j]);
            let b = eta[j] * (1.0 - eta[i]);
            acc += m[i] * m[j] * pair_min(a, b);
        }
    }
    Some(acc / (2.0 * p * (1.0 - p)))
}

/// Bundled risks and regrets for one (distribution, loss, score) triple.
#[derive(Debug, Clone, Serialize)]
pub struct RiskReport {
    pub auc_risk: f64,
    pub bayes_risk: f64,
    pub phi_risk: f64,
    pub optimal_phi_risk: f64,
    pub auc_regret: f64,
    pub phi_regret: f64,
}
