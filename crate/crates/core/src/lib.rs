//! Numerical laboratory for pairwise surrogate losses in bipartite ranking:
//! exact risk functionals over finite discrete distributions, a catalogue of
//! convex surrogates, convex minimization of the expected surrogate risk,
//! calibration and inconsistency constructions, regret-bound verification
//! suites, the exponential-loss bridge between ranking and classification,
//! and a desk-scale boosting comparison.

pub mod accuracy;
pub mod boost;
pub mod consistency;
pub mod dist;
pub mod error;
pub mod loss;
pub mod optim;
pub mod regret;
pub mod risk;
pub mod sample;

pub use dist::{DiscreteDistribution, ScoreVector};
pub use error::ModelError;
pub use loss::SurrogateLoss;
pub use optim::{GridSpec, MinimizationResult, OptimizerConfig};
pub use risk::RiskReport;
