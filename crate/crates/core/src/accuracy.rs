//! The exponential-loss bridge between ranking and classification: accuracy
//! risk, its exponential surrogate, the closed-form threshold turning a
//! ranking function into a classifier, and the regret chain connecting the
//! two optimization problems in both directions.
//!
//! Everything here is specific to the exponential loss, whose pair risk
//! factorizes into the two per-instance moments `A = E[eta e^{-f}]` and
//! `B = E[(1-eta) e^{f}]`; the chain inequalities are verified with those
//! exact closed forms on both sides.

use rayon::prelude::*;
use serde::Serialize;

use crate::dist::{DiscreteDistribution, ScoreVector};
use crate::error::ModelError;
use crate::loss::SurrogateLoss;
use crate::regret::BOUND_TOL;
use crate::risk;
use crate::sample;

/// Misclassification risk of `sign(f)` under strict indicators: a score of
/// exactly zero incurs no error on either class. The anomaly is kept literal;
/// the trial suites never feed identically-zero scores.
pub fn accuracy_risk(d: &DiscreteDistribution, f: &ScoreVector) -> Result<f64, ModelError> {
    f.check_compatible(d)?;
    let acc = d
        .marginal()
        .iter()
        .zip(d.eta())
        .zip(f.values())
        .map(|((&m, &e), &v)| {
            let pos_err = if v < 0.0 { e } else { 0.0 };
            let neg_err = if v > 0.0 { 1.0 - e } else { 0.0 };
            m * (pos_err + neg_err)
        })
        .sum();
    Ok(acc)
}

/// Bayes misclassification risk `E[min(eta, 1 - eta)]`, attained by any
/// score with the sign of `eta - 1/2`.
pub fn bayes_accuracy_risk(d: &DiscreteDistribution) -> f64 {
    d.marginal()
        .iter()
        .zip(d.eta())
        .map(|(&m, &e)| m * e.min(1.0 - e))
        .sum()
}

/// Exponential surrogate of the accuracy risk: `E[eta e^{-f} + (1-eta) e^{f}]`.
pub fn phi_acc_risk(d: &DiscreteDistribution, f: &ScoreVector) -> Result<f64, ModelError> {
    f.check_compatible(d)?;
    let (a, b) = instance_moments(d, f);
    Ok(a + b)
}

/// The two per-instance moments of the exponential surrogate.
fn instance_moments(d: &DiscreteDistribution, f: &ScoreVector) -> (f64, f64) {
    let mut a = 0.0;
    let mut b = 0.0;
    for ((&m, &e), &v) in d.marginal().iter().zip(d.eta()).zip(f.values()) {
        a += m * e * (-v).exp();
        b += m * (1.0 - e) * v.exp();
    }
    (a, b)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PhiAccOptimum {
    pub value: f64,
    /// False when some `eta` is 0 or 1, where the coordinatewise optimum
    /// runs off to infinity and the value is only an infimum.
    pub attained: bool,
}

/// Optimal exponential accuracy surrogate `2 E[sqrt(eta (1-eta))]`, attained
/// coordinatewise at `f = (1/2) ln(eta / (1-eta))` when every eta is interior.
pub fn optimal_phi_acc_risk(d: &DiscreteDistribution) -> PhiAccOptimum {
    let value = 2.0
        * d.marginal()
            .iter()
            .zip(d.eta())
            .map(|(&m, &e)| m * (e * (1.0 - e)).sqrt())
            .sum::<f64>();
    let attained = d.eta().iter().all(|&e| e > 0.0 && e < 1.0);
    PhiAccOptimum { value, attained }
}

/// Closed-form minimizer of `t -> phi_acc_risk(f - t)`:
/// `t* = (1/2) ln E[(1-eta) e^{f}] - (1/2) ln E[eta e^{-f}]`.
pub fn optimal_threshold(d: &DiscreteDistribution, f: &ScoreVector) -> Result<f64, ModelError> {
    f.check_compatible(d)?;
    let (a, b) = instance_moments(d, f);
    Ok(0.5 * (b / a).ln())
}

/// Numeric minimizer of `t -> phi_acc_risk(f - t)` by bisecting the central
/// finite-difference slope; independent of the closed form it cross-checks.
pub fn numeric_threshold(d: &DiscreteDistribution, f: &ScoreVector) -> Result<f64, ModelError> {
    f.check_compatible(d)?;
    let objective = |t: f64| phi_acc_risk(d, &shifted(f, t)).expect("finite shift");
    let h = 1e-6;
    let slope = |t: f64| (objective(t + h) - objective(t - h)) / (2.0 * h);
    let mut lo = -30.0;
    let mut hi = 30.0;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if slope(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn shifted(f: &ScoreVector, t: f64) -> ScoreVector {
    ScoreVector::new(f.values().iter().map(|v| v - t).collect()).expect("finite shift")
}

/// Accuracy-side risks bundled for one (distribution, score) pair.
#[derive(Debug, Clone, Serialize)]
pub struct AccuracyRiskReport {
    pub acc_risk: f64,
    pub bayes_acc_risk: f64,
    pub phi_acc_risk: f64,
    pub optimal_phi_acc_risk: f64,
    pub optimum_attained: bool,
    pub threshold: f64,
}

pub fn accuracy_report(
    d: &DiscreteDistribution,
    f: &ScoreVector,
) -> Result<AccuracyRiskReport, ModelError> {
    let opt = optimal_phi_acc_risk(d);
    Ok(AccuracyRiskReport {
        acc_risk: accuracy_risk(d, f)?,
        bayes_acc_risk: bayes_accuracy_risk(d),
        phi_acc_risk: phi_acc_risk(d, f)?,
        optimal_phi_acc_risk: opt.value,
        optimum_attained: opt.attained,
        threshold: optimal_threshold(d, f)?,
    })
}

/// Inequality identifiers for the bridge suite's records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ChainIneq {
    /// `p(1-p) (R_phi - R_phi*) <= R_phiacc (R_phiacc - R_phiacc*)`
    T9,
    /// `R_phiacc(f - t*) - R_phiacc* <= 2 sqrt(p(1-p) (R_phi - R_phi*))`
    T10,
    /// `R - R* <= sqrt(R_phiacc / (p(1-p)) * (R_phiacc - R_phiacc*))`
    T11a,
    /// `R_acc - R_acc* <= sqrt(2) (R_phiacc - R_phiacc*)^{1/2}`
    T11b,
    /// `R - R* <= (R_phi - R_phi*)^{1/2}`
    T11c,
    /// `R_acc(f - t*) - R_acc* <= 2 (p(1-p)(R_phi - R_phi*))^{1/4}`
    T11d,
}

impl std::fmt::Display for ChainIneq {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ChainIneq::T9 => "T9",
            ChainIneq::T10 => "T10",
            ChainIneq::T11a => "T11a",
            ChainIneq::T11b => "T11b",
            ChainIneq::T11c => "T11c",
            ChainIneq::T11d => "T11d",
        };
        write!(f, "{s}")
    }
}

/// One verified chain inequality.
#[derive(Debug, Clone, Serialize)]
pub struct ChainCheck {
    pub trial: u64,
    pub trial_seed: u64,
    pub n: usize,
    pub ineq: ChainIneq,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub violation: Option<crate::regret::ViolationData>,
}

impl ChainCheck {
    pub fn is_violation(&self) -> bool {
        self.slack < -BOUND_TOL
    }
}

pub fn chain_violations(checks: &[ChainCheck]) -> Vec<&ChainCheck> {
    checks.iter().filter(|c| c.is_violation()).collect()
}

/// Exact ingredients of the chain inequalities for one trial.
struct ChainQuantities {
    p: f64,
    phi_regret: f64,
    phi_acc: f64,
    phi_acc_regret: f64,
    phi_acc_regret_shifted: f64,
    auc_regret: f64,
    acc_regret: f64,
    acc_regret_shifted: f64,
}

fn chain_quantities(d: &DiscreteDistribution, f: &ScoreVector) -> ChainQuantities {
    let phi = SurrogateLoss::Exponential;
    let p = d.positive_rate();
    let phi_star = risk::pointwise_risk_bound_closed(d, &phi).expect("exp closed form");
    let phi_regret = risk::phi_risk(d, f, &phi).unwrap() - phi_star;
    let phi_acc = phi_acc_risk(d, f).unwrap();
    let acc_star = optimal_phi_acc_risk(d).value;
    let t_star = optimal_threshold(d, f).unwrap();
    let f_shift = shifted(f, t_star);
    ChainQuantities {
        p,
        phi_regret,
        phi_acc,
        phi_acc_regret: phi_acc - acc_star,
        phi_acc_regret_shifted: phi_acc_risk(d, &f_shift).unwrap() - acc_star,
        auc_regret: risk::auc_risk(d, f).unwrap() - risk::bayes_risk(d),
        acc_regret: accuracy_risk(d, f).unwrap() - bayes_accuracy_risk(d),
        acc_regret_shifted: accuracy_risk(d, &f_shift).unwrap() - bayes_accuracy_risk(d),
    }
}

fn chain_record(
    ineq: ChainIneq,
    q: &ChainQuantities,
    trial: u64,
    seed: u64,
    n: usize,
    d: &DiscreteDistribution,
    f: &ScoreVector,
) -> ChainCheck {
    let pq = q.p * (1.0 - q.p);
    let (lhs, rhs) = match ineq {
        ChainIneq::T9 => (pq * q.phi_regret, q.phi_acc * q.phi_acc_regret),
        ChainIneq::T10 => (q.phi_acc_regret_shifted, 2.0 * (pq * q.phi_regret.max(0.0)).sqrt()),
        ChainIneq::T11a => (
            q.auc_regret,
            (q.phi_acc / pq * q.phi_acc_regret.max(0.0)).sqrt(),
        ),
        ChainIneq::T11b => (q.acc_regret, 2f64.sqrt() * q.phi_acc_regret.max(0.0).sqrt()),
        ChainIneq::T11c => (q.auc_regret, q.phi_regret.max(0.0).sqrt()),
        ChainIneq::T11d => (
            q.acc_regret_shifted,
            2.0 * (pq * q.phi_regret.max(0.0)).powf(0.25),
        ),
    };
    let slack = rhs - lhs;
    let violation = (slack < -BOUND_TOL).then(|| crate::regret::ViolationData {
        marginal: d.marginal().to_vec(),
        eta: d.eta().to_vec(),
        scores: f.values().to_vec(),
    });
    ChainCheck { trial, trial_seed: seed, n, ineq, lhs, rhs, slack, violation }
}

fn chain_suite(trials: u64, seed: u64, ineqs: &[ChainIneq]) -> Vec<ChainCheck> {
    assert!(trials >= 1, "at least one trial required");
    (0..trials)
        .into_par_iter()
        .flat_map_iter(|trial| {
            let mut rng = sample::trial_rng(seed, trial);
            let d = sample::random_distribution(&mut rng, 6, 0.05, 0.95);
            let f = sample::random_scores(&mut rng, d.len());
            let q = chain_quantities(&d, &f);
            let tseed = sample::trial_seed(seed, trial);
            ineqs
                .iter()
                .map(|&ineq| chain_record(ineq, &q, trial, tseed, d.len(), &d, &f))
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Classifier-to-ranker direction on random trials.
pub fn verify_acc_to_auc(trials: u64, seed: u64) -> Vec<ChainCheck> {
    chain_suite(trials, seed, &[ChainIneq::T9])
}

/// Ranker-to-classifier direction via the closed-form threshold.
pub fn verify_auc_to_acc(trials: u64, seed: u64) -> Vec<ChainCheck> {
    chain_suite(trials, seed, &[ChainIneq::T10])
}

/// The four inequalities of the combined equivalence statement.
pub fn verify_combined_chain(trials: u64, seed: u64) -> Vec<ChainCheck> {
    chain_suite(
        trials,
        seed,
        &[ChainIneq::T11a, ChainIneq::T11b, ChainIneq::T11c, ChainIneq::T11d],
    )
}

/// Every bridge inequality in one pass, for the command-line suite.
pub fn bridge_suite(trials: u64, seed: u64) -> Vec<ChainCheck> {
    chain_suite(
        trials,
        seed,
        &[
            ChainIneq::T9,
            ChainIneq::T10,
            ChainIneq::T11a,
            ChainIneq::T11b,
            ChainIneq::T11c,
            ChainIneq::T11d,
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_point() -> DiscreteDistribution {
        DiscreteDistribution::uniform(vec![0.2, 0.8]).unwrap()
    }

    #[test]
    fn accuracy_risk_cases() {
        let d = two_point();
        // Bayes-aligned signs attain the Bayes accuracy risk
        let f = ScoreVector::new(vec![2.0 * 0.2 - 1.0, 2.0 * 0.8 - 1.0]).unwrap();
        let r = accuracy_risk(&d, &f).unwrap();
        assert!((r - bayes_accuracy_risk(&d)).abs() < 1e-15);
        assert!((r - 0.5 * (0.2 + 0.2)).abs() < 1e-15);

        // always predicting negative on an 80% positive instance
        let d1 = DiscreteDistribution::uniform(vec![0.8, 0.8]).unwrap();
        let f = ScoreVector::constant(-1.0, 2).unwrap();
        assert!((accuracy_risk(&d1, &f).unwrap() - 0.8).abs() < 1e-15);

        // the literal strict indicators assign no error at f = 0
        let f = ScoreVector::constant(0.0, 2).unwrap();
        assert_eq!(accuracy_risk(&d, &f).unwrap(), 0.0);
    }

    #[test]
    fn phi_acc_risk_cases() {
        let d = two_point();
        let f = ScoreVector::constant(0.0, 2).unwrap();
        assert!((phi_acc_risk(&d, &f).unwrap() - 1.0).abs() < 1e-15);

        let opt = optimal_phi_acc_risk(&d);
        assert!(opt.attained);
        assert!((opt.value - 0.8).abs() < 1e-15, "{opt:?}");

        let half = DiscreteDistribution::uniform(vec![0.5, 0.5]).unwrap();
        assert!((optimal_phi_acc_risk(&half).value - 1.0).abs() < 1e-15);

        let realizable = DiscreteDistribution::uniform(vec![0.0, 1.0]).unwrap();
        assert!(!optimal_phi_acc_risk(&realizable).attained);
    }

    #[test]
    fn phi_acc_optimum_attained_at_half_log_odds() {
        let d = DiscreteDistribution::uniform(vec![0.3, 0.7, 0.9]).unwrap();
        let f = ScoreVector::new(
            d.eta().iter().map(|&e| 0.5 * (e / (1.0 - e)).ln()).collect(),
        )
        .unwrap();
        let v = phi_acc_risk(&d, &f).unwrap();
        assert!((v - optimal_phi_acc_risk(&d).value).abs() < 1e-12);
    }

    #[test]
    fn threshold_formula_matches_numeric_minimizer() {
        let d = two_point();
        let f = ScoreVector::new(vec![0.0, 4f64.ln()]).unwrap();
        let t = optimal_threshold(&d, &f).unwrap();
        let t_num = numeric_threshold(&d, &f).unwrap();
        assert!((t - t_num).abs() < 1e-8, "formula {t} vs numeric {t_num}");
        // on this fixture A = 0.2, B = 0.8, so t* = ln(2)
        assert!((t - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn threshold_symmetric_case_is_zero() {
        let d = DiscreteDistribution::uniform(vec![0.5, 0.5]).unwrap();
        let f = ScoreVector::constant(0.0, 2).unwrap();
        assert!(optimal_threshold(&d, &f).unwrap().abs() < 1e-15);
    }

    #[test]
    fn threshold_shifts_with_the_scores() {
        let d = DiscreteDistribution::uniform(vec![0.3, 0.6, 0.8]).unwrap();
        let f = ScoreVector::new(vec![0.1, -0.4, 1.2]).unwrap();
        let t = optimal_threshold(&d, &f).unwrap();
        let c = 2.75;
        let fc = ScoreVector::new(f.values().iter().map(|v| v + c).collect()).unwrap();
        let tc = optimal_threshold(&d, &fc).unwrap();
        assert!((tc - (t + c)).abs() < 1e-12, "t = {t}, t(f+c) = {tc}");
    }

    #[test]
    fn thresholded_risk_beats_grid_shifts() {
        let d = DiscreteDistribution::uniform(vec![0.2, 0.55, 0.9]).unwrap();
        let f = ScoreVector::new(vec![-0.8, 0.3, 1.1]).unwrap();
        let t_star = optimal_threshold(&d, &f).unwrap();
        let at_star = phi_acc_risk(&d, &shifted(&f, t_star)).unwrap();
        for k in 0..=40 {
            let t = t_star - 2.0 + 4.0 * k as f64 / 40.0;
            let v = phi_acc_risk(&d, &shifted(&f, t)).unwrap();
            assert!(at_star <= v + 1e-12, "t = {t}");
        }
    }

    #[test]
    fn factorization_identity() {
        // 2 p(1-p) * (R_phi - R_phi*) equals 2AB - 2 (E sqrt(eta(1-eta)))^2
        let d = DiscreteDistribution::uniform(vec![0.15, 0.5, 0.85]).unwrap();
        let f = ScoreVector::new(vec![0.3, -0.9, 0.4]).unwrap();
        let p = d.positive_rate();
        let phi = SurrogateLoss::Exponential;
        let star = risk::pointwise_risk_bound_closed(&d, &phi).unwrap();
        let lhs =
            2.0 * p * (1.0 - p) * (risk::phi_risk(&d, &f, &phi).unwrap() - star);
        let (a, b) = instance_moments(&d, &f);
        let s = 0.5 * optimal_phi_acc_risk(&d).value;
        let rhs = 2.0 * a * b - 2.0 * s * s;
        assert!((lhs - rhs).abs() < 1e-10, "{lhs} vs {rhs}");
    }

    #[test]
    fn shifted_surrogate_equals_two_sqrt_ab() {
        let d = DiscreteDistribution::uniform(vec![0.25, 0.7]).unwrap();
        let f = ScoreVector::new(vec![0.4, 1.9]).unwrap();
        let t = optimal_threshold(&d, &f).unwrap();
        let (a, b) = instance_moments(&d, &f);
        let v = phi_acc_risk(&d, &shifted(&f, t)).unwrap();
        assert!((v - 2.0 * (a * b).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn chain_suites_have_no_violations() {
        for checks in [
            verify_acc_to_auc(200, 42),
            verify_auc_to_acc(200, 42),
            verify_combined_chain(100, 42),
        ] {
            assert!(chain_violations(&checks).is_empty());
        }
    }

    #[test]
    fn simultaneous_optimum_collapses_both_sides() {
        let d = DiscreteDistribution::uniform(vec![0.3, 0.8]).unwrap();
        let f = ScoreVector::new(
            d.eta().iter().map(|&e| 0.5 * (e / (1.0 - e)).ln()).collect(),
        )
        .unwrap();
        let q = chain_quantities(&d, &f);
        assert!(q.phi_regret.abs() < 1e-12);
        assert!(q.phi_acc_regret.abs() < 1e-12);
        assert!(q.auc_regret.abs() < 1e-12);
    }

    #[test]
    fn anti_bayes_scores_keep_strict_slack() {
        let d = two_point();
        let f = ScoreVector::new(
            d.eta().iter().map(|&e| -0.5 * (e / (1.0 - e)).ln()).collect(),
        )
        .unwrap();
        let q = chain_quantities(&d, &f);
        let t9 = q.p * (1.0 - q.p) * q.phi_regret;
        let rhs = q.phi_acc * q.phi_acc_regret;
        assert!(t9 < rhs, "lhs {t9} rhs {rhs}");
    }

    #[test]
    fn squared_product_difference_bound_fuzzed() {
        // (ab - cd)^2 <= 2 a^2 (b-d)^2 + 2 d^2 (a-c)^2 over random reals,
        // from ab - cd = a(b-d) + d(a-c) and the two-term power mean
        use rand::Rng;
        let mut rng = sample::trial_rng(99, 0);
        for _ in 0..10_000 {
            let a: f64 = rng.random_range(-10.0..10.0);
            let b: f64 = rng.random_range(-10.0..10.0);
            let c: f64 = rng.random_range(-10.0..10.0);
            let dd: f64 = rng.random_range(-10.0..10.0);
            let lhs = (a * b - c * dd).powi(2);
            let rhs = 2.0 * a * a * (b - dd).powi(2) + 2.0 * dd * dd * (a - c).powi(2);
            assert!(lhs <= rhs + 1e-9, "a={a} b={b} c={c} d={dd}");
        }
    }
}
