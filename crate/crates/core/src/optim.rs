//! Minimization of the expected surrogate risk over score vectors.
//!
//! The objective is convex and translation invariant (it depends only on
//! score differences), so iterates are mean-centered and the search is
//! confined to a ball; leaving the ball signals an unattained infimum.
//!
//! Differentiable losses use gradient descent with backtracking line search.
//! The two kinked losses use subgradient descent with diminishing steps,
//! followed on small instance spaces by an exact polish: the objective is
//! then polyhedral, its minimum sits on a vertex of the arrangement of kink
//! hyperplanes `f_i - f_j = b`, and every vertex can be enumerated outright.

use serde::{Deserialize, Serialize};

use crate::dist::{DiscreteDistribution, ScoreVector};
use crate::error::ModelError;
use crate::loss::SurrogateLoss;
use crate::risk;
use crate::risk::RiskReport;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub max_iters: usize,
    pub tol: f64,
    pub radius: f64,
    /// Master seed for the experiment suites that embed this config; the
    /// descent itself is deterministic and does not consume randomness.
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig { max_iters: 100_000, tol: 1e-9, radius: 30.0, seed: 0 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MinimizationResult {
    pub minimizer: ScoreVector,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub gradient_norm: f64,
    /// Set when the iterates left the search ball, indicating the infimum is
    /// approached only as score differences grow without bound.
    pub infimum_unattained: bool,
}

impl MinimizationResult {
    /// Conservative bound on `value - inf R_phi` from the final gradient
    /// norm: both the iterate and any minimizer lie in the search ball.
    pub fn suboptimality_bound(&self, cfg: &OptimizerConfig) -> f64 {
        if self.infimum_unattained {
            return f64::INFINITY;
        }
        self.gradient_norm * 2.0 * cfg.radius
    }
}

fn mean_center(f: &mut [f64]) {
    let mean = f.iter().sum::<f64>() / f.len() as f64;
    for v in f.iter_mut() {
        *v -= mean;
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Minimizes `R_phi` over score vectors. Non-convergence within
/// `cfg.max_iters` is reported through `converged`, never silently dropped.
pub fn minimize_phi_risk(
    d: &DiscreteDistribution,
    phi: &SurrogateLoss,
    cfg: &OptimizerConfig,
) -> MinimizationResult {
    if phi.is_differentiable_everywhere() {
        gradient_descent(d, phi, cfg)
    } else {
        let mut best = subgradient_descent(d, phi, cfg);
        if let Some((f, value)) = kink_vertex_minimum(d, phi) {
            if value < best.value {
                best.minimizer = ScoreVector::new(f).expect("vertex scores are finite");
                best.value = value;
                best.converged = true;
            }
        }
        best
    }
}

fn objective(d: &DiscreteDistribution, phi: &SurrogateLoss, f: &[f64]) -> f64 {
    let s = ScoreVector::new(f.to_vec()).expect("iterates stay finite");
    risk::phi_risk(d, &s, phi).expect("iterate length is fixed")
}

fn gradient(d: &DiscreteDistribution, phi: &SurrogateLoss, f: &[f64]) -> Vec<f64> {
    let s = ScoreVector::new(f.to_vec()).expect("iterates stay finite");
    risk::phi_risk_gradient(d, &s, phi).expect("iterate length is fixed")
}

fn gradient_descent(
    d: &DiscreteDistribution,
    phi: &SurrogateLoss,
    cfg: &OptimizerConfig,
) -> MinimizationResult {
    let n = d.len();
    let mut f = vec![0.0; n];
    let mut iterations = 0;
    let mut converged = false;
    let mut unattained = false;

    // Steepest descent with an exact line search: the step solves
    // d/dt R_phi(f - t g) = 0 by bisection on the directional derivative,
    // which stays numerically meaningful long after value differences have
    // fallen below floating-point resolution.
    while iterations < cfg.max_iters {
        if norm2(&f) > cfg.radius {
            unattained = true;
            break;
        }
        let g = gradient(d, phi, &f);
        let grad_norm = norm2(&g);
        if grad_norm <= cfg.tol {
            converged = true;
            break;
        }
        let slope_at = |t: f64| -> f64 {
            let trial: Vec<f64> = f.iter().zip(&g).map(|(x, gi)| x - t * gi).collect();
            let gt = gradient(d, phi, &trial);
            -gt.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>()
        };
        // expand until the slope turns nonnegative or the step leaves the ball
        let step_cap = 3.0 * cfg.radius / grad_norm;
        let mut hi = (1.0 / grad_norm.max(1.0)).min(step_cap);
        while slope_at(hi) < 0.0 && hi < step_cap {
            hi = (hi * 2.0).min(step_cap);
        }
        let t = if slope_at(hi) < 0.0 {
            hi // unbounded direction; the radius guard stops the next pass
        } else {
            let mut lo = 0.0;
            let mut hi = hi;
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if slope_at(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        for (x, gi) in f.iter_mut().zip(&g) {
            *x -= t * gi;
        }
        mean_center(&mut f);
        iterations += 1;
    }

    let final_grad = gradient(d, phi, &f);
    MinimizationResult {
        value: objective(d, phi, &f),
        minimizer: ScoreVector::new(f).expect("iterates stay finite"),
        iterations,
        converged,
        gradient_norm: norm2(&final_grad),
        infimum_unattained: unattained,
    }
}

/// Diminishing-step subgradient descent with best-point tracking. Declares
/// convergence when the best value stalls below 1e-10 improvement over a
/// 500-iteration window.
fn subgradient_descent(
    d: &DiscreteDistribution,
    phi: &SurrogateLoss,
    cfg: &OptimizerConfig,
) -> MinimizationResult {
    const STALL_WINDOW: usize = 500;
    const STALL_IMPROVEMENT: f64 = 1e-10;

    let n = d.len();
    let mut f = vec![0.0; n];
    let mut best_f = f.clone();
    let mut best_value = objective(d, phi, &f);
    let mut last_improvement = 0usize;
    let mut iterations = 0;
    let mut converged = false;
    let mut unattained = false;
    let mut grad_norm = f64::INFINITY;

    for k in 1..=cfg.max_iters {
        iterations = k;
        let g = gradient(d, phi, &f);
        grad_norm = norm2(&g);
        if grad_norm <= cfg.tol {
            converged = true;
            break;
        }
        let step = 1.0 / (k as f64).sqrt() / grad_norm.max(1e-12);
        for (x, gi) in f.iter_mut().zip(&g) {
            *x -= step * gi;
        }
        mean_center(&mut f);
        if norm2(&f) > cfg.radius {
            unattained = true;
            break;
        }
        let value = objective(d, phi, &f);
        if value < best_value - STALL_IMPROVEMENT {
            best_value = value;
            best_f = f.clone();
            last_improvement = k;
        }
        if k - last_improvement >= STALL_WINDOW {
            converged = true;
            break;
        }
    }

    MinimizationResult {
        minimizer: ScoreVector::new(best_f).expect("iterates stay finite"),
        value: best_value,
        iterations,
        converged,
        gradient_norm: grad_norm,
        infimum_unattained: unattained,
    }
}

/// Gaussian elimination with partial pivoting for systems of size <= 3.
fn solve_small(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let m = b.len();
    for col in 0..m {
        let pivot = (col..m).max_by(|&r1, &r2| {
            a[r1][col].abs().partial_cmp(&a[r2][col].abs()).unwrap()
        })?;
        if a[pivot][col].abs() < 1e-9 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in (col + 1)..m {
            let factor = a[row][col] / a[col][col];
            for k in col..m {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; m];
    for col in (0..m).rev() {
        let mut acc = b[col];
        for k in (col + 1)..m {
            acc -= a[col][k] * x[k];
        }
        x[col] = acc / a[col][col];
    }
    Some(x)
}

/// Exact minimum of a polyhedral `R_phi` (hinge, absolute) on up to four
/// instances: evaluates every vertex of the kink-hyperplane arrangement in
/// the gauge `f_1 = 0` and returns the best, together with the flat origin.
fn kink_vertex_minimum(d: &DiscreteDistribution, phi: &SurrogateLoss) -> Option<(Vec<f64>, f64)> {
    let n = d.len();
    let kinks = phi.kinks();
    if kinks.is_empty() || n < 2 || n > 4 {
        return None;
    }
    let dim = n - 1;
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            for &b in &kinks {
                let mut c = vec![0.0; dim];
                if i > 0 {
                    c[i - 1] += 1.0;
                }
                if j > 0 {
                    c[j - 1] -= 1.0;
                }
                rows.push((c, b));
            }
        }
    }

    let evaluate = |x: &[f64]| -> Option<f64> {
        if x.iter().any(|v| !v.is_finite() || v.abs() > 1e6) {
            return None;
        }
        let mut f = Vec::with_capacity(n);
        f.push(0.0);
        f.extend_from_slice(x);
        Some(objective(d, phi, &f))
    };

    let mut best_x = vec![0.0; dim];
    let mut best_val = evaluate(&best_x)?;
    let consider = |x: Vec<f64>, best_x: &mut Vec<f64>, best_val: &mut f64| {
        if let Some(v) = evaluate(&x) {
            if v < *best_val {
                *best_val = v;
                *best_x = x;
            }
        }
    };

    let k = rows.len();
    let mut subset = vec![0usize; dim];
    // enumerate all dim-subsets of the hyperplanes
    fn rec(
        rows: &[(Vec<f64>, f64)],
        subset: &mut Vec<usize>,
        depth: usize,
        start: usize,
        k: usize,
        dim: usize,
        consider: &mut dyn FnMut(Vec<f64>),
    ) {
        if depth == dim {
            let a: Vec<Vec<f64>> = subset.iter().map(|&r| rows[r].0.clone()).collect();
            let b: Vec<f64> = subset.iter().map(|&r| rows[r].1).collect();
            if let Some(x) = solve_small(a, b) {
                consider(x);
            }
            return;
        }
        for r in start..k {
            subset[depth] = r;
            rec(rows, subset, depth + 1, r + 1, k, dim, consider);
        }
    }
    rec(&rows, &mut subset, 0, 0, k, dim, &mut |x| {
        consider(x, &mut best_x, &mut best_val)
    });

    let mut f = Vec::with_capacity(n);
    f.push(0.0);
    f.extend_from_slice(&best_x);
    mean_center(&mut f);
    Some((f, best_val))
}

// ---------------------------------------------------------------------------
// Grid oracle
// ---------------------------------------------------------------------------

/// An axis grid for the exhaustive oracle: `points` samples evenly spaced on
/// `[min, max]` per free coordinate.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn step(&self) -> f64 {
        if self.points <= 1 {
            0.0
        } else {
            (self.max - self.min) / (self.points - 1) as f64
        }
    }
}

/// Exhaustive minimum of `R_phi` over score vectors on the grid, first
/// coordinate pinned to zero by translation invariance. Upper-bounds the true
/// optimum; the gap is controlled by [`grid_resolution_bound`].
pub fn grid_oracle_min_phi_risk(
    d: &DiscreteDistribution,
    phi: &SurrogateLoss,
    grid: &GridSpec,
) -> Result<f64, ModelError> {
    const LIMIT: usize = 4;
    let n = d.len();
    if n > LIMIT {
        return Err(ModelError::TooManyInstances { n, limit: LIMIT });
    }
    if grid.points == 0 || !(grid.min <= grid.max) {
        return Err(ModelError::EmptyGrid);
    }
    let pts: Vec<f64> = if grid.points == 1 {
        vec![grid.min]
    } else {
        (0..grid.points).map(|k| grid.min + grid.step() * k as f64).collect()
    };

    let dim = n - 1;
    let mut f = vec![0.0; n];
    let mut best = f64::INFINITY;
    fn sweep(
        d: &DiscreteDistribution,
        phi: &SurrogateLoss,
        pts: &[f64],
        f: &mut Vec<f64>,
        coord: usize,
        dim: usize,
        best: &mut f64,
    ) {
        if coord == dim {
            let v = objective(d, phi, f);
            if v < *best {
                *best = v;
            }
            return;
        }
        for &x in pts {
            f[coord + 1] = x;
            sweep(d, phi, pts, f, coord + 1, dim, best);
        }
    }
    sweep(d, phi, &pts, &mut f, 0, dim, &mut best);
    Ok(best)
}

/// Bound on `|grid_oracle - true minimum|` from snapping the true minimizer
/// to the nearest grid point, assuming the minimizer's free coordinates lie
/// inside the grid box. Quadratic in the step for smooth losses (zero
/// gradient at the optimum), linear for the kinked ones.
pub fn grid_resolution_bound(d: &DiscreteDistribution, phi: &SurrogateLoss, grid: &GridSpec) -> f64 {
    let n = d.len();
    let snap = 0.5 * grid.step() * ((n - 1) as f64).sqrt();
    // score differences reachable inside the box, padded by one snap radius
    let b = grid.min.abs().max(grid.max.abs()) + grid.step();
    let reach = 2.0 * b;
    if phi.is_differentiable_everywhere() {
        // normalized pair weights sum to one, and a unit direction changes any
        // difference by at most 2, so the Hessian norm is at most 4 * max phi''
        let lam = max_curvature(phi, reach);
        2.0 * lam * snap * snap + 1e-9
    } else {
        let lsub = phi.subgradient(-reach).abs().max(phi.subgradient(reach).abs());
        2.0 * (n as f64).sqrt() * lsub * snap + 1e-9
    }
}

/// Upper bound on `phi''` over `[-reach, reach]`, taken at the stiff end.
fn max_curvature(phi: &SurrogateLoss, reach: f64) -> f64 {
    match *phi {
        SurrogateLoss::Exponential => reach.exp(),
        SurrogateLoss::Logistic => 0.25,
        SurrogateLoss::LeastSquare | SurrogateLoss::LeastSquareHinge => 2.0,
        SurrogateLoss::QNormHinge { q } => q * (q - 1.0) * (1.0 + reach).max(0.0).powf(q - 2.0),
        SurrogateLoss::GeneralHinge { eps } => 0.5 / eps,
        SurrogateLoss::DistanceWeighted { eps } => 2.0 / (eps * eps * eps),
        SurrogateLoss::Hinge | SurrogateLoss::Absolute => f64::INFINITY,
    }
}

/// Bundles the exact risks with the optimal surrogate risk for one triple.
/// The optimum is the exact pointwise closed form where one exists and the
/// optimizer's value otherwise.
pub fn risk_report(
    d: &DiscreteDistribution,
    f: &ScoreVector,
    phi: &SurrogateLoss,
    cfg: &OptimizerConfig,
) -> Result<RiskReport, ModelError> {
    let auc_risk = risk::auc_risk(d, f)?;
    let bayes = risk::bayes_risk(d);
    let phi_r = risk::phi_risk(d, f, phi)?;
    let optimal = match risk::pointwise_risk_bound_closed(d, phi) {
        Some(v) => v,
        None => minimize_phi_risk(d, phi, cfg).value,
    };
    Ok(RiskReport {
        auc_risk,
        bayes_risk: bayes,
        phi_risk: phi_r,
        optimal_phi_risk: optimal,
        auc_regret: auc_risk - bayes,
        phi_regret: phi_r - optimal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> OptimizerConfig {
        OptimizerConfig::default()
    }

    #[test]
    fn exponential_two_point_closed_form_difference() {
        let d = DiscreteDistribution::uniform(vec![0.2, 0.8]).unwrap();
        let res = minimize_phi_risk(&d, &SurrogateLoss::Exponential, &cfg());
        assert!(res.converged, "{res:?}");
        let f = res.minimizer.values();
        let diff = f[1] - f[0];
        assert!((diff - 4f64.ln()).abs() < 1e-6, "diff = {diff}");
        let closed =
            risk::pointwise_risk_bound_closed(&d, &SurrogateLoss::Exponential).unwrap();
        assert!((res.value - closed).abs() < 1e-10);
    }

    #[test]
    fn logistic_two_point_closed_form_difference() {
        let d = DiscreteDistribution::uniform(vec![0.2, 0.8]).unwrap();
        let res = minimize_phi_risk(&d, &SurrogateLoss::Logistic, &cfg());
        assert!(res.converged);
        let f = res.minimizer.values();
        assert!((f[1] - f[0] - 16f64.ln()).abs() < 1e-5, "diff = {}", f[1] - f[0]);
    }

    #[test]
    fn equal_eta_two_points_optimum_is_constant() {
        let d = DiscreteDistribution::uniform(vec![0.6, 0.6]).unwrap();
        let res = minimize_phi_risk(&d, &SurrogateLoss::Exponential, &cfg());
        assert!(res.converged);
        assert!((res.value - 1.0).abs() < 1e-10, "value = {}", res.value);
        let f = res.minimizer.values();
        assert!((f[0] - f[1]).abs() < 1e-6);
    }

    #[test]
    fn hinge_three_point_counterexample_optimum() {
        // Optimal scores satisfy f1 = f2 = f3 - 1; value from the direct
        // summation of the uniform three-point expansion is 1.99/2.24.
        let d = DiscreteDistribution::uniform(vec![0.4, 0.45, 0.55]).unwrap();
        let res = minimize_phi_risk(&d, &SurrogateLoss::Hinge, &cfg());
        assert!(res.converged);
        assert!((res.value - 1.99 / 2.24).abs() < 1e-10, "value = {}", res.value);
        let f = res.minimizer.values();
        assert!((f[0] - f[1]).abs() < 1e-9, "f = {f:?}");
        assert!((f[2] - f[0] - 1.0).abs() < 1e-9, "f = {f:?}");
    }

    #[test]
    fn absolute_three_point_counterexample_optimum() {
        // Constraints eta1 < eta2 < eta3, 2*eta2 > eta1 + eta3; optimum at
        // f1 = f2 - 1 = f3 - 1 with value kappa0 + kappa1 * 0.82.
        let d = DiscreteDistribution::uniform(vec![0.2, 0.5, 0.7]).unwrap();
        let res = minimize_phi_risk(&d, &SurrogateLoss::Absolute, &cfg());
        let p = d.positive_rate();
        let kappa1 = 1.0 / (9.0 * p * (1.0 - p));
        let kappa0 = kappa1 * (0.2 * 0.8 + 0.5 * 0.5 + 0.7 * 0.3);
        let expected = kappa0 + kappa1 * 0.82;
        assert!((res.value - expected).abs() < 1e-10, "value = {}", res.value);
        let f = res.minimizer.values();
        assert!((f[1] - f[0] - 1.0).abs() < 1e-9, "f = {f:?}");
        assert!((f[2] - f[1]).abs() < 1e-9, "f = {f:?}");
    }

    #[test]
    fn unattained_infimum_hits_radius() {
        let d = DiscreteDistribution::uniform(vec![0.0, 1.0]).unwrap();
        let res = minimize_phi_risk(&d, &SurrogateLoss::Exponential, &cfg());
        assert!(res.infimum_unattained);
        assert!(res.value < 1e-12, "value = {}", res.value);
    }

    #[test]
    fn value_matches_recomputed_risk_at_minimizer() {
        let d = DiscreteDistribution::uniform(vec![0.3, 0.5, 0.9]).unwrap();
        for phi in SurrogateLoss::catalogue() {
            let res = minimize_phi_risk(&d, &phi, &cfg());
            let recomputed = risk::phi_risk(&d, &res.minimizer, &phi).unwrap();
            assert!((res.value - recomputed).abs() <= 1e-9, "{phi}");
        }
    }

    #[test]
    fn grid_oracle_agrees_with_optimizer() {
        let d = DiscreteDistribution::uniform(vec![0.2, 0.8]).unwrap();
        let grid = GridSpec { min: -4.0, max: 4.0, points: 401 };
        let oracle = grid_oracle_min_phi_risk(&d, &SurrogateLoss::Exponential, &grid).unwrap();
        let res = minimize_phi_risk(&d, &SurrogateLoss::Exponential, &cfg());
        let bound = grid_resolution_bound(&d, &SurrogateLoss::Exponential, &grid);
        assert!(oracle >= res.value - 1e-9);
        assert!((oracle - res.value).abs() <= bound, "gap {} > bound {bound}", oracle - res.value);
    }

    #[test]
    fn grid_oracle_rejects_bad_inputs() {
        let d = DiscreteDistribution::uniform(vec![0.1, 0.2, 0.3, 0.4, 0.5]).unwrap();
        let grid = GridSpec { min: -1.0, max: 1.0, points: 5 };
        assert!(matches!(
            grid_oracle_min_phi_risk(&d, &SurrogateLoss::Hinge, &grid),
            Err(ModelError::TooManyInstances { .. })
        ));
        let d = DiscreteDistribution::uniform(vec![0.2, 0.8]).unwrap();
        let empty = GridSpec { min: 0.0, max: 1.0, points: 0 };
        assert!(matches!(
            grid_oracle_min_phi_risk(&d, &SurrogateLoss::Hinge, &empty),
            Err(ModelError::EmptyGrid)
        ));
    }

    #[test]
    fn optimizer_config_json_rejects_unknown_keys() {
        let ok: OptimizerConfig =
            serde_json::from_str(r#"{"max_iters": 10, "tol": 1e-6, "radius": 5.0, "seed": 7}"#)
                .unwrap();
        assert_eq!(ok.max_iters, 10);
        let partial: OptimizerConfig = serde_json::from_str(r#"{"seed": 3}"#).unwrap();
        assert_eq!(partial.seed, 3);
        assert!(serde_json::from_str::<OptimizerConfig>(r#"{"sede": 3}"#).is_err());
    }
}
