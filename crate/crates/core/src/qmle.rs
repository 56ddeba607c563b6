//! Quasi-maximum-likelihood estimation of the discount α.
//!
//! The estimator maximises the δ₀ (θ = 0) likelihood. Its stationary
//! condition, divided by `k_n`, is `Ψₙ(α) = 0`; Ψₙ decreases strictly from
//! +∞ at 0 to −∞ at 1 whenever `1 < k_n < n`.

use crate::error::{Error, Result};
use crate::partition::SuffStats;
use crate::sibuya::{fisher_info, psi_n_unchecked, DEFAULT_TOL};
use crate::stats::normal_quantile;
use serde::{Deserialize, Serialize};

pub const ROOT_TOL: f64 = 1e-12;
pub const MAX_ITER: usize = 200;
const BRACKET_EDGE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundary {
    Interior,
    /// `k_n = 1`, estimate 0.
    AllOneBlock,
    /// `k_n = n`, estimate 1.
    AllSingletons,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QmleResult {
    pub alpha_hat: f64,
    pub boundary: Boundary,
    pub iterations: usize,
    /// `|Ψₙ(α̂)|`; zero at the boundary.
    pub residual: f64,
}

impl QmleResult {
    pub fn is_interior(&self) -> bool {
        self.boundary == Boundary::Interior
    }
}

/// Solves `Ψₙ(α) = 0` by Newton steps kept inside a shrinking bisection
/// bracket.
pub fn qmle(stats: &SuffStats) -> Result<QmleResult> {
    stats.validate()?;
    let boundary = |alpha_hat, boundary| QmleResult { alpha_hat, boundary, iterations: 0, residual: 0.0 };
    if stats.k_n == 1 {
        return Ok(boundary(0.0, Boundary::AllOneBlock));
    }
    if stats.k_n == stats.n {
        return Ok(boundary(1.0, Boundary::AllSingletons));
    }
    let (mut lo, mut hi) = (BRACKET_EDGE, 1.0 - BRACKET_EDGE);
    debug_assert!(psi_n_unchecked(lo, stats).0 > 0.0 && psi_n_unchecked(hi, stats).0 < 0.0);
    let mut x = naive_estimate(stats).clamp(0.01, 0.99);
    let mut best = (f64::INFINITY, x);
    for it in 1..=MAX_ITER {
        let (v, d) = psi_n_unchecked(x, stats);
        if v.abs() < best.0 {
            best = (v.abs(), x);
        }
        if v.abs() <= ROOT_TOL {
            return Ok(QmleResult { alpha_hat: x, boundary: Boundary::Interior, iterations: it, residual: v.abs() });
        }
        if v > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - v / d;
        let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        assert!(next > lo && next < hi || hi - lo <= f64::EPSILON, "step left the bracket");
        if next == x || hi - lo <= 4.0 * f64::EPSILON {
            break;
        }
        x = next;
    }
    // The bracket collapsed to rounding level without |Ψₙ| ≤ ROOT_TOL.
    let (residual, alpha_hat) = best;
    Ok(QmleResult { alpha_hat, boundary: Boundary::Interior, iterations: MAX_ITER, residual })
}

/// `log k_n / log n`, reported for comparison only.
pub fn naive_estimate(stats: &SuffStats) -> f64 {
    if stats.n < 2 {
        return 0.0;
    }
    (stats.k_n as f64).ln() / (stats.n as f64).ln()
}

/// `τ_{1−ε/2}`.
pub fn tau(eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid(format!("eps {eps} must lie in (0,1)")));
    }
    normal_quantile(1.0 - eps / 2.0)
}

/// `α̂ ± τ_{1−ε/2} / √(k_n 𝔦(α̂))`, clipped to [0, 1].
pub fn ci_alpha(stats: &SuffStats, result: &QmleResult, eps: f64) -> Result<(f64, f64)> {
    if !result.is_interior() {
        return Err(Error::BoundaryEstimate { alpha_hat: result.alpha_hat });
    }
    let t = tau(eps)?;
    let info = fisher_info(result.alpha_hat, DEFAULT_TOL)?.value;
    let half = t / (stats.k_n as f64 * info).sqrt();
    Ok(((result.alpha_hat - half).max(0.0), (result.alpha_hat + half).min(1.0)))
}
