//! The catalogue of convex surrogate losses applied to score differences.
//!
//! Every entry is convex on the whole real line. Piecewise kinds match their
//! branch conditions exactly at breakpoints, and the subgradient at a kink is
//! the right derivative (limit from above), so evaluation is deterministic.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Default exponent for the q-norm hinge.
pub const DEFAULT_Q: f64 = 2.0;
/// Default width parameter for the general hinge and distance-weighted losses.
pub const DEFAULT_EPS: f64 = 0.5;

/// A named convex surrogate loss with parameters.
///
/// Selection string grammar (also produced by `Display`):
/// `"exp" | "logistic" | "hinge" | "abs" | "ls" | "ls-hinge" |
///  "qhinge:<q>" | "ghinge:<eps>" | "dw:<eps>"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SurrogateLoss {
    /// `e^{-t}`
    Exponential,
    /// `ln(1 + e^{-t})`
    Logistic,
    /// `max(0, 1 - t)`
    Hinge,
    /// `|1 - t|`
    Absolute,
    /// `(1 - t)^2`
    LeastSquare,
    /// `max(0, 1 - t)^2`
    LeastSquareHinge,
    /// `max(0, 1 - t)^q` with `q > 1`
    QNormHinge { q: f64 },
    /// Linear for `t <= 1 - eps`, quadratic blend on `[1 - eps, 1 + eps)`,
    /// zero afterwards; `eps > 0`.
    GeneralHinge { eps: f64 },
    /// `1/t` for `t >= eps`, tangent line continuation below; `eps > 0`.
    DistanceWeighted { eps: f64 },
}

impl SurrogateLoss {
    pub fn q_norm_hinge(q: f64) -> Result<Self, ModelError> {
        if !q.is_finite() || q <= 1.0 {
            return Err(ModelError::InvalidLoss(format!("q-norm hinge requires q > 1, got {q}")));
        }
        Ok(SurrogateLoss::QNormHinge { q })
    }

    pub fn general_hinge(eps: f64) -> Result<Self, ModelError> {
        if !eps.is_finite() || eps <= 0.0 {
            return Err(ModelError::InvalidLoss(format!(
                "general hinge requires eps > 0, got {eps}"
            )));
        }
        Ok(SurrogateLoss::GeneralHinge { eps })
    }

    pub fn distance_weighted(eps: f64) -> Result<Self, ModelError> {
        if !eps.is_finite() || eps <= 0.0 {
            return Err(ModelError::InvalidLoss(format!(
                "distance-weighted loss requires eps > 0, got {eps}"
            )));
        }
        Ok(SurrogateLoss::DistanceWeighted { eps })
    }

    /// The nine catalogued losses with default parameters.
    pub fn catalogue() -> Vec<SurrogateLoss> {
        vec![
            SurrogateLoss::Exponential,
            SurrogateLoss::Logistic,
            SurrogateLoss::Hinge,
            SurrogateLoss::Absolute,
            SurrogateLoss::LeastSquare,
            SurrogateLoss::LeastSquareHinge,
            SurrogateLoss::QNormHinge { q: DEFAULT_Q },
            SurrogateLoss::GeneralHinge { eps: DEFAULT_EPS },
            SurrogateLoss::DistanceWeighted { eps: DEFAULT_EPS },
        ]
    }

    /// Evaluates `phi(t)`. Total on finite inputs.
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            SurrogateLoss::Exponential => (-t).exp(),
            SurrogateLoss::Logistic => {
                // ln(1 + e^{-t}) without overflow for large |t|
                if t >= 0.0 {
                    (-t).exp().ln_1p()
                } else {
                    -t + t.exp().ln_1p()
                }
            }
            SurrogateLoss::Hinge => (1.0 - t).max(0.0),
            SurrogateLoss::Absolute => (1.0 - t).abs(),
            SurrogateLoss::LeastSquare => (1.0 - t) * (1.0 - t),
            SurrogateLoss::LeastSquareHinge => {
                let m = (1.0 - t).max(0.0);
                m * m
            }
            SurrogateLoss::QNormHinge { q } => (1.0 - t).max(0.0).powf(q),
            SurrogateLoss::GeneralHinge { eps } => {
                if t <= 1.0 - eps {
                    1.0 - t
                } else if t < 1.0 + eps {
                    let u = t - 1.0 - eps;
                    u * u / (4.0 * eps)
                } else {
                    0.0
                }
            }
            SurrogateLoss::DistanceWeighted { eps } => {
                if t >= eps {
                    1.0 / t
                } else {
                    (2.0 - t / eps) / eps
                }
            }
        }
    }

    /// A valid subgradient of `phi` at `t`; the right derivative at kinks.
    pub fn subgradient(&self, t: f64) -> f64 {
        match *self {
            SurrogateLoss::Exponential => -(-t).exp(),
            SurrogateLoss::Logistic => {
                // -sigma(-t), computed from the side that cannot overflow
                if t >= 0.0 {
                    let e = (-t).exp();
                    -e / (1.0 + e)
                } else {
                    -1.0 / (1.0 + t.exp())
                }
            }
            SurrogateLoss::Hinge => {
                if t < 1.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            SurrogateLoss::Absolute => {
                if t < 1.0 {
                    -1.0
                } else {
                    1.0
                }
            }
            SurrogateLoss::LeastSquare => 2.0 * (t - 1.0),
            SurrogateLoss::LeastSquareHinge => {
                if t < 1.0 {
                    2.0 * (t - 1.0)
                } else {
                    0.0
                }
            }
            SurrogateLoss::QNormHinge { q } => {
                if t < 1.0 {
                    -q * (1.0 - t).powf(q - 1.0)
                } else {
                    0.0
                }
            }
            SurrogateLoss::GeneralHinge { eps } => {
                if t < 1.0 - eps {
                    -1.0
                } else if t < 1.0 + eps {
                    (t - 1.0 - eps) / (2.0 * eps)
                } else {
                    0.0
                }
            }
            SurrogateLoss::DistanceWeighted { eps } => {
                if t >= eps {
                    -1.0 / (t * t)
                } else {
                    -1.0 / (eps * eps)
                }
            }
        }
    }

    /// All nine catalogued losses are convex; asserted by the midpoint
    /// property tests rather than checked at runtime.
    pub fn is_convex(&self) -> bool {
        true
    }

    pub fn is_differentiable_everywhere(&self) -> bool {
        !matches!(self, SurrogateLoss::Hinge | SurrogateLoss::Absolute)
    }

    pub fn is_nonincreasing(&self) -> bool {
        !matches!(self, SurrogateLoss::Absolute | SurrogateLoss::LeastSquare)
    }

    pub fn phi_prime_at_zero(&self) -> f64 {
        self.subgradient(0.0)
    }

    /// Gate for the sufficient consistency condition: convex, differentiable
    /// everywhere, non-increasing, and negative derivative at zero.
    pub fn satisfies_sufficiency(&self) -> bool {
        self.is_convex()
            && self.is_differentiable_everywhere()
            && self.is_nonincreasing()
            && self.phi_prime_at_zero() < 0.0
    }

    /// Branch points of the piecewise kinds (empty for smooth closed forms).
    pub fn breakpoints(&self) -> Vec<f64> {
        match *self {
            SurrogateLoss::Exponential
            | SurrogateLoss::Logistic
            | SurrogateLoss::LeastSquare => vec![],
            SurrogateLoss::Hinge
            | SurrogateLoss::Absolute
            | SurrogateLoss::LeastSquareHinge
            | SurrogateLoss::QNormHinge { .. } => vec![1.0],
            SurrogateLoss::GeneralHinge { eps } => vec![1.0 - eps, 1.0 + eps],
            SurrogateLoss::DistanceWeighted { eps } => vec![eps],
        }
    }

    /// Points where `phi` is not differentiable.
    pub fn kinks(&self) -> Vec<f64> {
        match self {
            SurrogateLoss::Hinge | SurrogateLoss::Absolute => vec![1.0],
            _ => vec![],
        }
    }
}

impl fmt::Display for SurrogateLoss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            SurrogateLoss::Exponential => write!(f, "exp"),
            SurrogateLoss::Logistic => write!(f, "logistic"),
            SurrogateLoss::Hinge => write!(f, "hinge"),
            SurrogateLoss::Absolute => write!(f, "abs"),
            SurrogateLoss::LeastSquare => write!(f, "ls"),
            SurrogateLoss::LeastSquareHinge => write!(f, "ls-hinge"),
            SurrogateLoss::QNormHinge { q } => write!(f, "qhinge:{q}"),
            SurrogateLoss::GeneralHinge { eps } => write!(f, "ghinge:{eps}"),
            SurrogateLoss::DistanceWeighted { eps } => write!(f, "dw:{eps}"),
        }
    }
}

impl FromStr for SurrogateLoss {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, ModelError> {
        let (head, param) = match s.split_once(':') {
            Some((h, p)) => (h, Some(p)),
            None => (s, None),
        };
        let parse_param = |p: Option<&str>, default: f64, what: &str| -> Result<f64, ModelError> {
            match p {
                None => Ok(default),
                Some(raw) => raw
                    .parse::<f64>()
                    .map_err(|_| ModelError::InvalidLoss(format!("bad {what} parameter: {raw:?}"))),
            }
        };
        match head {
            "exp" => Ok(SurrogateLoss::Exponential),
            "logistic" => Ok(SurrogateLoss::Logistic),
            "hinge" => Ok(SurrogateLoss::Hinge),
            "abs" => Ok(SurrogateLoss::Absolute),
            "ls" => Ok(SurrogateLoss::LeastSquare),
            "ls-hinge" => Ok(SurrogateLoss::LeastSquareHinge),
            "qhinge" => SurrogateLoss::q_norm_hinge(parse_param(param, DEFAULT_Q, "q")?),
            "ghinge" => SurrogateLoss::general_hinge(parse_param(param, DEFAULT_EPS, "eps")?),
            "dw" => SurrogateLoss::distance_weighted(parse_param(param, DEFAULT_EPS, "eps")?),
            other => Err(ModelError::InvalidLoss(format!(
                "unknown loss {other:?}; expected one of \
                 exp|logistic|hinge|abs|ls|ls-hinge|qhinge:<q>|ghinge:<eps>|dw:<eps>"
            ))),
        }
    }
}

impl TryFrom<String> for SurrogateLoss {
    type Error = ModelError;
    fn try_from(s: String) -> Result<Self, ModelError> {
        s.parse()
    }
}

impl From<SurrogateLoss> for String {
    fn from(l: SurrogateLoss) -> String {
        l.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// 201 evenly spaced points on [-10, 10]; covers every breakpoint of the
    /// default-parameter catalogue.
    fn grid() -> Vec<f64> {
        (0..=200).map(|i| -10.0 + 0.1 * i as f64).collect()
    }

    #[test]
    fn closed_form_spot_values() {
        assert_eq!(SurrogateLoss::Exponential.eval(0.0), 1.0);
        assert_eq!(SurrogateLoss::Hinge.eval(2.0), 0.0);
        assert!((SurrogateLoss::Logistic.eval(0.0) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(SurrogateLoss::Absolute.eval(3.0), 2.0);
        assert_eq!(SurrogateLoss::LeastSquare.eval(-1.0), 4.0);
        assert_eq!(SurrogateLoss::LeastSquareHinge.eval(-1.0), 4.0);
        assert_eq!(SurrogateLoss::LeastSquareHinge.eval(2.0), 0.0);
    }

    #[test]
    fn general_hinge_continuous_at_breakpoints() {
        for eps in [0.25, 0.5, 1.0, 2.0] {
            let gh = SurrogateLoss::general_hinge(eps).unwrap();
            // middle branch at t = 1 - eps equals the linear branch value eps
            let left_bp = 1.0 - eps;
            let linear = 1.0 - left_bp;
            let middle = (left_bp - 1.0 - eps).powi(2) / (4.0 * eps);
            assert!((linear - middle).abs() <= 1e-12);
            assert!((gh.eval(left_bp) - eps).abs() <= 1e-12);
            // zero branch at t = 1 + eps
            assert!(gh.eval(1.0 + eps).abs() <= 1e-12);
            assert!(gh.eval(1.0 + eps - 1e-13) <= 1e-12);
        }
    }

    #[test]
    fn distance_weighted_c1_at_breakpoint() {
        for eps in [0.1, 0.5, 2.0] {
            let dw = SurrogateLoss::distance_weighted(eps).unwrap();
            // both branches meet in value and derivative at t = eps
            assert!((dw.eval(eps) - 1.0 / eps).abs() <= 1e-12);
            assert!(((2.0 - 1.0) / eps - 1.0 / eps).abs() <= 1e-12);
            assert!((dw.subgradient(eps) - (-1.0 / (eps * eps))).abs() <= 1e-12);
            let just_below = dw.subgradient(eps - 1e-12);
            assert!((just_below - dw.subgradient(eps)).abs() <= 1e-9);
        }
    }

    #[test]
    fn kink_subgradients_use_right_derivative() {
        assert_eq!(SurrogateLoss::Hinge.subgradient(1.0), 0.0);
        assert_eq!(SurrogateLoss::Absolute.subgradient(1.0), 1.0);
        assert_eq!(SurrogateLoss::Exponential.subgradient(0.0), -1.0);
    }

    #[test]
    fn midpoint_convexity_on_grid() {
        let g = grid();
        for loss in SurrogateLoss::catalogue() {
            for &t1 in &g {
                for &t2 in &g {
                    let mid = loss.eval(0.5 * (t1 + t2));
                    let avg = 0.5 * (loss.eval(t1) + loss.eval(t2));
                    assert!(
                        mid <= avg + 1e-12,
                        "{loss}: phi(({t1}+{t2})/2) = {mid} > {avg}"
                    );
                }
            }
        }
    }

    #[test]
    fn subgradient_supports_the_graph() {
        let g = grid();
        for loss in SurrogateLoss::catalogue() {
            for &t in &g {
                let gt = loss.subgradient(t);
                let ft = loss.eval(t);
                for &s in &g {
                    assert!(
                        loss.eval(s) >= ft + gt * (s - t) - 1e-9,
                        "{loss}: supporting line at t={t} fails at s={s}"
                    );
                }
            }
        }
    }

    #[test]
    fn monotonicity_flags_are_truthful() {
        let g = grid();
        for loss in SurrogateLoss::catalogue() {
            if loss.is_nonincreasing() {
                for w in g.windows(2) {
                    assert!(
                        loss.eval(w[0]) >= loss.eval(w[1]) - 1e-12,
                        "{loss} claims non-increasing but rises on [{}, {}]",
                        w[0],
                        w[1]
                    );
                }
            }
        }
        // and the two excluded kinds really do rise somewhere
        assert!(SurrogateLoss::Absolute.eval(3.0) > SurrogateLoss::Absolute.eval(1.0));
        assert!(SurrogateLoss::LeastSquare.eval(3.0) > SurrogateLoss::LeastSquare.eval(1.0));
    }

    #[test]
    fn derivative_matches_central_differences() {
        for loss in SurrogateLoss::catalogue() {
            if !loss.is_differentiable_everywhere() {
                continue;
            }
            let bps = loss.breakpoints();
            for i in 0..=200 {
                let t = -10.0 + 0.1 * i as f64;
                // skip a window around branch points where one-sided curvature
                // ruins the central-difference estimate
                if bps.iter().any(|b| (t - b).abs() < 1e-2) {
                    continue;
                }
                let h = 1e-6 * t.abs().max(1.0);
                let num = (loss.eval(t + h) - loss.eval(t - h)) / (2.0 * h);
                let ana = loss.subgradient(t);
                let denom = ana.abs().max(1e-9);
                assert!(
                    (num - ana).abs() / denom <= 1e-6 || (num - ana).abs() <= 1e-9,
                    "{loss} at t={t}: analytic {ana} vs numeric {num}"
                );
            }
        }
    }

    #[test]
    fn sufficiency_gate_matches_catalogue() {
        use SurrogateLoss as L;
        assert!(L::Exponential.satisfies_sufficiency());
        assert!(L::Logistic.satisfies_sufficiency());
        assert!(!L::Hinge.satisfies_sufficiency());
        assert!(!L::Absolute.satisfies_sufficiency());
        assert!(!L::LeastSquare.satisfies_sufficiency());
        assert!(L::LeastSquareHinge.satisfies_sufficiency());
        assert!(L::q_norm_hinge(2.0).unwrap().satisfies_sufficiency());
        assert!(L::general_hinge(0.5).unwrap().satisfies_sufficiency());
        assert!(L::general_hinge(2.0).unwrap().satisfies_sufficiency());
        assert!(L::distance_weighted(0.5).unwrap().satisfies_sufficiency());
    }

    #[test]
    fn parse_grammar() {
        assert_eq!("exp".parse::<SurrogateLoss>().unwrap(), SurrogateLoss::Exponential);
        assert_eq!(
            "qhinge:3.5".parse::<SurrogateLoss>().unwrap(),
            SurrogateLoss::QNormHinge { q: 3.5 }
        );
        assert_eq!(
            "ghinge:0.25".parse::<SurrogateLoss>().unwrap(),
            SurrogateLoss::GeneralHinge { eps: 0.25 }
        );
        assert_eq!(
            "dw:0.5".parse::<SurrogateLoss>().unwrap(),
            SurrogateLoss::DistanceWeighted { eps: 0.5 }
        );
        assert!("qhinge:1.0".parse::<SurrogateLoss>().is_err());
        assert!("qhinge:x".parse::<SurrogateLoss>().is_err());
        assert!("ghinge:-1".parse::<SurrogateLoss>().is_err());
        assert!("squiggle".parse::<SurrogateLoss>().is_err());
        // round-trip through the canonical display form
        for loss in SurrogateLoss::catalogue() {
            assert_eq!(loss.to_string().parse::<SurrogateLoss>().unwrap(), loss);
        }
    }
}
