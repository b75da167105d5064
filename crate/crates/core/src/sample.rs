//! Seeded generators for the verification suites.
//!
//! Trials are independent given per-trial seeds split from the master seed
//! by `seed_i = master XOR i`, so results are identical regardless of
//! execution order or parallelism.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dist::{DiscreteDistribution, ScoreVector};

pub fn trial_seed(master: u64, trial: u64) -> u64 {
    master ^ trial
}

pub fn trial_rng(master: u64, trial: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(trial_seed(master, trial))
}

/// Random distribution with `n` drawn from `2..=n_max` and every `eta`
/// uniform in `(eta_lo, eta_hi)`. Marginal weights are bounded away from
/// zero before normalization.
pub fn random_distribution(
    rng: &mut ChaCha8Rng,
    n_max: usize,
    eta_lo: f64,
    eta_hi: f64,
) -> DiscreteDistribution {
    let n = rng.random_range(2..=n_max);
    let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let marginal: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let eta: Vec<f64> = (0..n).map(|_| rng.random_range(eta_lo..eta_hi)).collect();
    DiscreteDistribution::new(marginal, eta)
        .expect("interior eta keeps the positive rate inside (0, 1)")
}

/// Random realizable distribution: every label deterministic, both classes
/// present.
pub fn random_realizable(rng: &mut ChaCha8Rng, n_max: usize) -> DiscreteDistribution {
    let n = rng.random_range(2..=n_max);
    let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let marginal: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let mut eta: Vec<f64> = (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { 0.0 }).collect();
    if eta.iter().all(|&e| e == eta[0]) {
        let flip = rng.random_range(0..n);
        eta[flip] = 1.0 - eta[flip];
    }
    DiscreteDistribution::new(marginal, eta).expect("both classes present")
}

/// Standard-normal score per instance.
pub fn random_scores(rng: &mut ChaCha8Rng, n: usize) -> ScoreVector {
    let normal = Normal::new(0.0, 1.0).expect("valid parameters");
    ScoreVector::new((0..n).map(|_| normal.sample(rng)).collect())
        .expect("normal draws are finite")
}
