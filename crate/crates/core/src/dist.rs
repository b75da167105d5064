//! Finite discrete distributions over an instance space, and score vectors.
//!
//! Instances are opaque: everything downstream depends only on the marginal
//! probabilities and the conditional positive-class probabilities `eta`.

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Simplex validation tolerance for the marginal probabilities.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// A finite distribution over instances `x_1..x_n` with class-conditional
/// structure: `marginal[i] = Pr[x_i]` and `eta[i] = Pr[y = +1 | x_i]`.
///
/// Construction validates the simplex constraint, the range of each
/// `eta[i]`, and that the positive rate `p = sum_i marginal[i] * eta[i]`
/// lies strictly inside (0, 1).
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(into = "RawDistribution")]
pub struct DiscreteDistribution {
    marginal: Vec<f64>,
    eta: Vec<f64>,
    positive_rate: f64,
}

/// Wire form of a distribution: two equal-length arrays.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawDistribution {
    pub marginal: Vec<f64>,
    pub eta: Vec<f64>,
}

impl From<DiscreteDistribution> for RawDistribution {
    fn from(d: DiscreteDistribution) -> Self {
        RawDistribution { marginal: d.marginal, eta: d.eta }
    }
}

impl TryFrom<RawDistribution> for DiscreteDistribution {
    type Error = ModelError;

    fn try_from(raw: RawDistribution) -> Result<Self, ModelError> {
        DiscreteDistribution::new(raw.marginal, raw.eta)
    }
}

impl<'de> Deserialize<'de> for DiscreteDistribution {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let raw = RawDistribution::deserialize(de)?;
        DiscreteDistribution::try_from(raw).map_err(serde::de::Error::custom)
    }
}

impl DiscreteDistribution {
    pub fn new(marginal: Vec<f64>, eta: Vec<f64>) -> Result<Self, ModelError> {
        if marginal.is_empty() {
            return Err(ModelError::InvalidDistribution("empty instance space".into()));
        }
        if marginal.len() != eta.len() {
            return Err(ModelError::LengthMismatch {
                expected: marginal.len(),
                got: eta.len(),
            });
        }
        let mut total = 0.0;
        for (i, &m) in marginal.iter().enumerate() {
            if !m.is_finite() || m < 0.0 {
                return Err(ModelError::InvalidDistribution(format!(
                    "marginal[{i}] = {m} is not a probability"
                )));
            }
            total += m;
        }
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(ModelError::InvalidDistribution(format!(
                "marginal sums to {total}, expected 1 within {SIMPLEX_TOL:e}"
            )));
        }
        for (i, &e) in eta.iter().enumerate() {
            if !e.is_finite() || !(0.0..=1.0).contains(&e) {
                return Err(ModelError::InvalidDistribution(format!(
                    "eta[{i}] = {e} is outside [0, 1]"
                )));
            }
        }
        let p: f64 = marginal.iter().zip(&eta).map(|(m, e)| m * e).sum();
        if p <= 0.0 || p >= 1.0 {
            return Err(ModelError::DegenerateClassDistribution { p });
        }
        Ok(DiscreteDistribution { marginal, eta, positive_rate: p })
    }

    /// Uniform marginal over the given conditional probabilities.
    pub fn uniform(eta: Vec<f64>) -> Result<Self, ModelError> {
        let n = eta.len();
        if n == 0 {
            return Err(ModelError::InvalidDistribution("empty instance space".into()));
        }
        Self::new(vec![1.0 / n as f64; n], eta)
    }

    pub fn len(&self) -> usize {
        self.marginal.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction rejects empty instance spaces
    }

    pub fn marginal(&self) -> &[f64] {
        &self.marginal
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    /// `p = Pr[y = +1] = sum_i marginal[i] * eta[i]`, guaranteed in (0, 1).
    pub fn positive_rate(&self) -> f64 {
        self.positive_rate
    }

    /// True when every instance has a deterministic label, `eta[i] ∈ {0, 1}`.
    pub fn is_realizable(&self) -> bool {
        self.eta.iter().all(|&e| e == 0.0 || e == 1.0)
    }

    pub fn from_json(s: &str) -> Result<Self, ModelError> {
        let raw: RawDistribution =
            serde_json::from_str(s).map_err(|e| ModelError::InvalidDistribution(e.to_string()))?;
        Self::try_from(raw)
    }
}

/// A score function on the instance space of an associated distribution,
/// one finite real per instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScoreVector(Vec<f64>);

impl ScoreVector {
    pub fn new(values: Vec<f64>) -> Result<Self, ModelError> {
        if values.is_empty() {
            return Err(ModelError::InvalidScore("empty score vector".into()));
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(ModelError::InvalidScore(format!("score[{i}] = {v} is not finite")));
        }
        Ok(ScoreVector(values))
    }

    pub fn constant(value: f64, n: usize) -> Result<Self, ModelError> {
        Self::new(vec![value; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Checks compatibility with a distribution's instance count.
    pub fn check_compatible(&self, d: &DiscreteDistribution) -> Result<(), ModelError> {
        if self.len() != d.len() {
            return Err(ModelError::LengthMismatch { expected: d.len(), got: self.len() });
        }
        Ok(())
    }
}

impl From<ScoreVector> for Vec<f64> {
    fn from(s: ScoreVector) -> Vec<f64> {
        s.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positive_rate_is_weighted_eta() {
        let d = DiscreteDistribution::uniform(vec![0.5, 0.5]).unwrap();
        assert_eq!(d.positive_rate(), 0.5);

        let d = DiscreteDistribution::uniform(vec![0.4, 0.45, 0.55]).unwrap();
        assert!((d.positive_rate() - 7.0 / 15.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_class_distribution_rejected() {
        let err = DiscreteDistribution::uniform(vec![1.0]).unwrap_err();
        assert!(matches!(err, ModelError::DegenerateClassDistribution { .. }));
        assert!(err.to_string().contains("degenerate class distribution"));

        let err = DiscreteDistribution::uniform(vec![0.0, 0.0]).unwrap_err();
        assert!(matches!(err, ModelError::DegenerateClassDistribution { .. }));
    }

    #[test]
    fn simplex_violations_rejected() {
        assert!(DiscreteDistribution::new(vec![0.6, 0.6], vec![0.5, 0.5]).is_err());
        assert!(DiscreteDistribution::new(vec![0.5, -0.5], vec![0.5, 0.5]).is_err());
        assert!(DiscreteDistribution::new(vec![0.5, 0.5], vec![1.5, 0.5]).is_err());
        assert!(DiscreteDistribution::new(vec![0.5, 0.5], vec![0.5]).is_err());
    }

    #[test]
    fn realizable_detection() {
        let d = DiscreteDistribution::uniform(vec![1.0, 0.0]).unwrap();
        assert!(d.is_realizable());
        assert!((d.positive_rate() - 0.5).abs() < 1e-15);
        let d = DiscreteDistribution::uniform(vec![0.9, 0.1]).unwrap();
        assert!(!d.is_realizable());
    }

    #[test]
    fn score_vector_rejects_non_finite() {
        assert!(ScoreVector::new(vec![0.0, f64::NAN]).is_err());
        assert!(ScoreVector::new(vec![f64::INFINITY]).is_err());
        assert!(ScoreVector::new(vec![1.0, -2.0]).is_ok());
    }

    #[test]
    fn distribution_json_round_trip() {
        let d = DiscreteDistribution::uniform(vec![0.4, 0.45, 0.55]).unwrap();
        let s = serde_json::to_string(&d).unwrap();
        let back = DiscreteDistribution::from_json(&s).unwrap();
        assert_eq!(d, back);
    }

    #[test]
    fn distribution_json_rejects_unknown_keys() {
        let s = r#"{"marginal": [0.5, 0.5], "eta": [0.2, 0.8], "extra": 1}"#;
        assert!(DiscreteDistribution::from_json(s).is_err());
    }
}
