//! Machine checks separating calibration from consistency.
//!
//! Calibration of a loss is probed on a finite grid of conditional-probability
//! pairs. The inconsistency side is established constructively: two
//! three-point families where the optimal surrogate score vector provably
//! misorders instances, leaving a ranking regret that never vanishes even as
//! the surrogate regret reaches exactly zero.

use serde::Serialize;

use crate::dist::{DiscreteDistribution, ScoreVector};
use crate::error::ModelError;
use crate::loss::SurrogateLoss;
use crate::optim::{minimize_phi_risk, OptimizerConfig};
use crate::risk::{
    self, optimal_conditional_risk_fn, restricted_conditional_optimum_fn,
    restricted_conditional_risk_fn,
};

/// Minimal margin for declaring a sampled grid calibrated.
pub const CALIBRATION_TOL: f64 = 1e-9;

/// Margin of the restricted over the unrestricted optimal conditional risk,
/// sampled over a square grid of (eta, eta') pairs.
#[derive(Debug, Clone, Serialize)]
pub struct CalibrationReport {
    pub loss: SurrogateLoss,
    /// The sampled (eta, eta') pairs with eta != eta'.
    pub grid: Vec<(f64, f64)>,
    /// Minimum of `H^-(eta, eta') - H(eta, eta')` over the grid.
    pub min_margin: f64,
    pub calibrated: bool,
}

/// Evaluates `H` and `H^-` on a `grid_resolution`-per-axis grid over
/// `(0.02, 0.98)^2`, skipping the diagonal. The margin's sign does not depend
/// on the positive rate, which is fixed at 1/2 here.
pub fn calibration_check(phi: &SurrogateLoss, grid_resolution: usize) -> CalibrationReport {
    assert!(grid_resolution >= 3, "calibration grid needs at least 3 points per axis");
    let delta = 0.02;
    let p = 0.5;
    let points: Vec<f64> = (0..grid_resolution)
        .map(|k| delta + (1.0 - 2.0 * delta) * k as f64 / (grid_resolution - 1) as f64)
        .collect();
    let mut grid = Vec::new();
    let mut min_margin = f64::INFINITY;
    for &eta in &points {
        for &eta_prime in &points {
            if eta == eta_prime {
                continue;
            }
            grid.push((eta, eta_prime));
            let h = optimal_conditional_risk_fn(eta, eta_prime, |t| phi.eval(t), p).value;
            let h_minus = restricted_conditional_risk_fn(eta, eta_prime, |t| phi.eval(t), p);
            let margin = h_minus - h;
            if margin < min_margin {
                min_margin = margin;
            }
        }
    }
    CalibrationReport { loss: *phi, grid, min_margin, calibrated: min_margin > CALIBRATION_TOL }
}

/// The full-minimization value against the pointwise lower bound.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Lemma2Gap {
    pub inf_full: f64,
    pub pointwise_bound: f64,
    pub gap: f64,
}

/// Compares `inf_f R_phi(f)` with `E[inf_alpha C]`. A strictly positive gap
/// witnesses that minimizing the expected risk over the whole distribution is
/// not the same problem as minimizing every conditional risk.
pub fn lemma2_gap_check(
    phi: &SurrogateLoss,
    d: &DiscreteDistribution,
    cfg: &OptimizerConfig,
) -> Result<Lemma2Gap, ModelError> {
    let mut distinct: Vec<f64> = d.eta().to_vec();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(ModelError::Unsupported(format!(
            "gap check needs at least 3 distinct eta values, got {}",
            distinct.len()
        )));
    }
    let inf_full = minimize_phi_risk(d, phi, cfg).value;
    let pointwise_bound = risk::pointwise_risk_bound(d, phi);
    Ok(Lemma2Gap { inf_full, pointwise_bound, gap: inf_full - pointwise_bound })
}

/// Verification record for one three-point inconsistency construction.
#[derive(Debug, Clone, Serialize)]
pub struct CounterexampleReport {
    pub construction: CounterexampleKind,
    pub etas: (f64, f64, f64),
    pub constraints_ok: bool,
    pub closed_form_optimum: f64,
    pub numeric_optimum: f64,
    /// Surrogate risk of the equally-spaced configuration `f'`.
    pub suboptimal_value: f64,
    /// `suboptimal_value - numeric_optimum`; positive when the construction
    /// applies.
    pub strict_gap: f64,
    /// Ranking regret of the optimal-surrogate sequence; stays bounded away
    /// from zero even though its surrogate regret is exactly zero.
    pub persistent_auc_regret: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CounterexampleKind {
    Hinge,
    Absolute,
}

impl std::fmt::Display for CounterexampleKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CounterexampleKind::Hinge => write!(f, "hinge"),
            CounterexampleKind::Absolute => write!(f, "absolute"),
        }
    }
}

/// Constants of the uniform three-point expansion of `R_phi`, obtained by
/// direct summation: `kappa1` collects the ordered-pair double counting and
/// the normalizer, `kappa0` the diagonal (score-independent) terms.
pub fn kappa_constants(d: &DiscreteDistribution, phi_at_zero: f64) -> (f64, f64) {
    let m = d.marginal();
    let eta = d.eta();
    let p = d.positive_rate();
    let norm = 2.0 * p * (1.0 - p);
    let kappa1 = 2.0 * m[0] * m[1] / norm;
    let kappa0: f64 = (0..d.len())
        .map(|i| m[i] * m[i] * 2.0 * eta[i] * (1.0 - eta[i]) * phi_at_zero / norm)
        .sum();
    (kappa0, kappa1)
}

fn counterexample_report(
    kind: CounterexampleKind,
    etas: (f64, f64, f64),
    cfg: &OptimizerConfig,
) -> Result<CounterexampleReport, ModelError> {
    let (e1, e2, e3) = etas;
    let ordered = e1 < e2 && e2 < e3 && e1 > 0.0 && e3 < 1.0;
    let (phi, constraints_ok) = match kind {
        CounterexampleKind::Hinge => (
            SurrogateLoss::Hinge,
            ordered && 2.0 * e2 < e1 + e3 && 2.0 * e1 > e2 + e1 * e3,
        ),
        CounterexampleKind::Absolute => {
            (SurrogateLoss::Absolute, ordered && 2.0 * e2 > e1 + e3)
        }
    };
    if !constraints_ok {
        return Ok(CounterexampleReport {
            construction: kind,
            etas,
            constraints_ok: false,
            closed_form_optimum: f64::NAN,
            numeric_optimum: f64::NAN,
            suboptimal_value: f64::NAN,
            strict_gap: f64::NAN,
            persistent_auc_regret: f64::NAN,
        });
    }

    let d = DiscreteDistribution::uniform(vec![e1, e2, e3])?;
    let (kappa0, kappa1) = kappa_constants(&d, phi.eval(0.0));
    let closed_form_optimum = match kind {
        CounterexampleKind::Hinge => {
            kappa0
                + kappa1
                    * (3.0 * e1 + 3.0 * e2
                        - 2.0 * e1 * e2
                        - 2.0 * e1 * e3
                        - 2.0 * e2 * e3)
        }
        CounterexampleKind::Absolute => {
            kappa0
                + kappa1
                    * (4.0 * e1 + e2 + e3 - 2.0 * e1 * e2 - 2.0 * e1 * e3 - 2.0 * e2 * e3)
        }
    };
    let numeric_optimum = minimize_phi_risk(&d, &phi, cfg).value;

    // the equally-spaced configuration is strictly worse for both kinds
    let f_prime = ScoreVector::new(vec![-1.0, 0.0, 1.0])?;
    let suboptimal_value = risk::phi_risk(&d, &f_prime, &phi)?;

    // the optimal-surrogate sequence is constant in n; one member suffices
    let f_star = match kind {
        CounterexampleKind::Hinge => ScoreVector::new(vec![0.0, 0.0, 1.0])?,
        CounterexampleKind::Absolute => ScoreVector::new(vec![0.0, 1.0, 1.0])?,
    };
    let persistent_auc_regret = risk::auc_risk(&d, &f_star)? - risk::bayes_risk(&d);

    Ok(CounterexampleReport {
        construction: kind,
        etas,
        constraints_ok: true,
        closed_form_optimum,
        numeric_optimum,
        suboptimal_value,
        strict_gap: suboptimal_value - numeric_optimum,
        persistent_auc_regret,
    })
}

/// Hinge-loss inconsistency construction: requires `eta1 < eta2 < eta3`,
/// `2 eta2 < eta1 + eta3`, and `2 eta1 > eta2 + eta1 eta3`. The optimal score
/// vector ties the two lowest instances, so the ranking regret stays at
/// `kappa1 (eta2 - eta1) / 2`.
pub fn hinge_counterexample(
    eta1: f64,
    eta2: f64,
    eta3: f64,
    cfg: &OptimizerConfig,
) -> Result<CounterexampleReport, ModelError> {
    counterexample_report(CounterexampleKind::Hinge, (eta1, eta2, eta3), cfg)
}

/// Absolute-loss inconsistency construction: requires `eta1 < eta2 < eta3`
/// and `2 eta2 > eta1 + eta3`. The optimal score vector ties the two highest
/// instances, leaving ranking regret `kappa1 (eta3 - eta2) / 2`.
pub fn absolute_counterexample(
    eta1: f64,
    eta2: f64,
    eta3: f64,
    cfg: &OptimizerConfig,
) -> Result<CounterexampleReport, ModelError> {
    counterexample_report(CounterexampleKind::Absolute, (eta1, eta2, eta3), cfg)
}

/// Closed-form expressions for the strict gap and the persistent regret of a
/// constraint-satisfying construction, in units of the report's own scale.
pub fn counterexample_closed_forms(
    kind: CounterexampleKind,
    d: &DiscreteDistribution,
) -> (f64, f64) {
    let eta = d.eta();
    let (e1, e2, e3) = (eta[0], eta[1], eta[2]);
    let (_, kappa1) = kappa_constants(d, 1.0);
    match kind {
        CounterexampleKind::Hinge => (
            kappa1 * (2.0 * e1 - e2 - e1 * e3),
            kappa1 * (e2 - e1) / 2.0,
        ),
        CounterexampleKind::Absolute => (
            kappa1 * (e1 + e2 - 2.0 * e1 * e3),
            kappa1 * (e3 - e2) / 2.0,
        ),
    }
}

/// Pointwise attainment check for the two losses whose per-pair minimizers
/// are realized by a single score function built from log-odds differences.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AttainmentReport {
    pub constructed_risk: f64,
    pub pointwise_bound: f64,
}

/// Builds the closed-form optimal score vector anchored at instance 0 and
/// compares its risk against `E[inf_alpha C]`. Only exponential and logistic
/// admit the construction; every `eta` must lie strictly inside (0, 1).
pub fn pointwise_attainment(
    d: &DiscreteDistribution,
    phi: &SurrogateLoss,
) -> Result<AttainmentReport, ModelError> {
    let factor = match phi {
        SurrogateLoss::Exponential => 0.5,
        SurrogateLoss::Logistic => 1.0,
        other => {
            return Err(ModelError::Unsupported(format!(
                "pointwise attainment holds only for exp and logistic, not {other}"
            )))
        }
    };
    let eta = d.eta();
    if eta.iter().any(|&e| e <= 0.0 || e >= 1.0) {
        return Err(ModelError::Unsupported(
            "log-odds construction needs every eta strictly inside (0, 1)".into(),
        ));
    }
    let anchor = eta[0];
    let values: Vec<f64> = eta
        .iter()
        .map(|&e| factor * ((e * (1.0 - anchor)) / (anchor * (1.0 - e))).ln())
        .collect();
    let f = ScoreVector::new(values)?;
    let constructed_risk = risk::phi_risk(d, &f, phi)?;
    let pointwise_bound = risk::pointwise_risk_bound_closed(d, phi)
        .expect("closed form exists for exp and logistic");
    Ok(AttainmentReport { constructed_risk, pointwise_bound })
}

/// Outcome of probing one conditional-probability pair for a wrong-direction
/// minimizer of the conditional risk.
#[derive(Debug, Clone, Serialize)]
pub struct NecessityWitness {
    pub eta0: f64,
    pub eta0_prime: f64,
    /// `H^- - H` at the pair; a witness exists when this vanishes.
    pub margin: f64,
    pub witness: bool,
    /// Wrong-direction minimizer used by the witness sequence, when found.
    pub alpha0: Option<f64>,
    /// Ranking regret of the witness sequence (zero when no witness).
    pub auc_regret: f64,
    /// The same regret in closed form: `(eta0 - eta0') / (8 p (1-p))` for a
    /// tie at `alpha0 = 0`, twice that for a strict misordering.
    pub closed_form_regret: f64,
}

/// On the two-point half/half space, checks whether some wrong-direction
/// `alpha0 <= 0` attains the optimal conditional risk. If so the constant
/// sequence `f(x1) = f(x2) + alpha0` drives the surrogate risk to its optimum
/// while its ranking regret stays at a positive constant.
pub fn necessity_witness(
    eta0: f64,
    eta0_prime: f64,
    phi: impl Fn(f64) -> f64,
) -> Result<NecessityWitness, ModelError> {
    if !(eta0 > eta0_prime) {
        return Err(ModelError::Unsupported(format!(
            "necessity witness requires eta0 > eta0', got {eta0} <= {eta0_prime}"
        )));
    }
    let d = DiscreteDistribution::uniform(vec![eta0, eta0_prime])?;
    let p = d.positive_rate();
    let h = optimal_conditional_risk_fn(eta0, eta0_prime, &phi, p);
    let restricted = restricted_conditional_optimum_fn(eta0, eta0_prime, &phi, p);
    let margin = restricted.value - h.value;

    if margin > CALIBRATION_TOL {
        return Ok(NecessityWitness {
            eta0,
            eta0_prime,
            margin,
            witness: false,
            alpha0: None,
            auc_regret: 0.0,
            closed_form_regret: 0.0,
        });
    }

    let alpha0 = restricted.alpha.min(0.0);
    let f_seq = ScoreVector::new(vec![alpha0, 0.0])?;
    let auc_regret = risk::auc_risk(&d, &f_seq)? - risk::bayes_risk(&d);
    let norm = 8.0 * p * (1.0 - p);
    let closed_form_regret = if alpha0 == 0.0 {
        (eta0 - eta0_prime) / norm
    } else {
        2.0 * (eta0 - eta0_prime) / norm
    };
    Ok(NecessityWitness {
        eta0,
        eta0_prime,
        margin,
        witness: true,
        alpha0: Some(alpha0),
        auc_regret,
        closed_form_regret,
    })
}
