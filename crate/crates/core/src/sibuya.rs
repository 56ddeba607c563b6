//! The Sibuya law `p_α(j) = α ∏_{i<j}(i − α) / j!`, its Fisher information,
//! and the score functions Ψ and Ψₙ.
//!
//! Series are summed up to a cutoff `J` and completed with an asymptotic tail.
//! With the survival function `S(j) = P(J > j) = ∏_{i≤j}(1 − α/i)` every
//! series here has the shape `Σ_j S(j) (j − c)^{-m}`, whose terms decay only
//! like `j^{-α-m}`; the tail beyond `J` is evaluated by Euler–Maclaurin on the
//! large-`j` expansion of `S`.

use crate::error::{Error, Result};
use crate::partition::SuffStats;
use crate::stats::{gamma, ln_gamma};
use serde::{Deserialize, Serialize};

/// Smallest cutoff tried by the series routines.
pub const MIN_TERMS: usize = 10_000;
/// Largest cutoff before giving up.
pub const MAX_TERMS: usize = 10_000_000;
/// Default absolute tolerance for [`fisher_info`] and [`psi`].
pub const DEFAULT_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FisherInfo {
    pub alpha: f64,
    pub value: f64,
    /// Number of terms summed before the tail.
    pub truncation_j: usize,
    /// Estimated error of the tail approximation.
    pub tail_bound: f64,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("alpha {alpha} must lie in (0,1)")))
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("tolerance {tol} must be positive")))
    }
}

/// Compensated (Neumaier) summation.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Sum {
    s: f64,
    c: f64,
}

impl Sum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.s + x;
        if self.s.abs() >= x.abs() {
            self.c += (self.s - t) + x;
        } else {
            self.c += (x - t) + self.s;
        }
        self.s = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.s + self.c
    }
}

/// `p_α(j)` as `exp(log α + Σ_{i<j} log(i − α) − log j!)`.
pub fn sibuya_pmf(alpha: f64, j: usize) -> Result<f64> {
    check_alpha(alpha)?;
    if j == 0 {
        return Err(Error::invalid("Sibuya support starts at j = 1"));
    }
    if j > 1_000_000 {
        let jf = j as f64;
        return Ok(alpha * survival_asymptotic(alpha, jf) / (jf - alpha));
    }
    let mut log = alpha.ln();
    for i in 1..j {
        log += (i as f64 - alpha).ln() - (i as f64).ln();
    }
    Ok((log - (j as f64).ln()).exp())
}

/// `S(j) = P(J > j)`; `S(0) = 1`.
pub fn survival(alpha: f64, j: usize) -> Result<f64> {
    check_alpha(alpha)?;
    if j > 1_000_000 {
        return Ok(survival_asymptotic(alpha, j as f64));
    }
    Ok((1..=j).map(|i| (-alpha / i as f64).ln_1p()).sum::<f64>().exp())
}

// `Γ(x+1−α)/(Γ(1−α)Γ(x+1))` to three terms; relative error O(x⁻³).
fn survival_asymptotic(alpha: f64, x: f64) -> f64 {
    let s1 = -alpha * (1.0 - alpha) / 2.0;
    let s2 = alpha * (1.0 + alpha) * (1.0 - alpha) * (2.0 - 3.0 * alpha) / 24.0;
    x.powf(-alpha) * (1.0 + s1 / x + s2 / (x * x)) / gamma(1.0 - alpha)
}

/// Upper bound `S(j) ≤ (j + 1)^{-α}`, from `log(1 − x) ≤ −x` and `H_j ≥ log(j + 1)`.
pub fn survival_bound(alpha: f64, j: usize) -> f64 {
    ((j + 1) as f64).powf(-alpha)
}

/// Yields `(j, p_α(j), S(j))` for `j = 1, 2, …` by the ratio recurrence
/// `p(j+1) = p(j)(j − α)/(j + 1)`.
#[derive(Clone, Debug)]
pub struct SibuyaTerms {
    alpha: f64,
    j: usize,
    p: f64,
    s: f64,
}

impl SibuyaTerms {
    pub fn new(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(SibuyaTerms { alpha, j: 0, p: 0.0, s: 1.0 })
    }
}

impl Iterator for SibuyaTerms {
    type Item = (usize, f64, f64);

    fn next(&mut self) -> Option<Self::Item> {
        let jn = self.j + 1;
        self.p = if self.j == 0 { self.alpha } else { self.p * (self.j as f64 - self.alpha) / jn as f64 };
        self.s *= 1.0 - self.alpha / jn as f64;
        self.j = jn;
        Some((jn, self.p, self.s))
    }
}

/// `Σ_{j>J} S(j) (j − c)^{-m}` given `S(J)`, for `m ≥ 1` and `c < 1`.
///
/// Returns the value and an error estimate. The integral uses
/// `S(x) ≈ x^{-α}(1 + s1/x + s2/x²)/Γ(1 − α)`; the boundary terms use the
/// exact `S(J)`.
pub(crate) fn tail(alpha: f64, big_j: usize, s_j: f64, c: f64, m: u32) -> (f64, f64) {
    let jf = big_j as f64;
    let mf = m as f64;
    let beta = alpha + mf;
    let s1 = -alpha * (1.0 - alpha) / 2.0;
    let s2 = alpha * (1.0 + alpha) * (1.0 - alpha) * (2.0 - 3.0 * alpha) / 24.0;
    let t1 = mf * c;
    let t2 = mf * (mf + 1.0) * c * c / 2.0;
    let e = [1.0, s1 + t1, s2 + s1 * t1 + t2];
    let k = (-ln_gamma(1.0 - alpha)).exp();
    let mut integral = 0.0;
    let mut last = 0.0;
    for (i, ei) in e.iter().enumerate() {
        let p = beta + i as f64 - 1.0;
        last = k * ei * jf.powf(-p) / p;
        integral += last;
    }
    let f = s_j * (jf - c).powf(-mf);
    let l1 = -alpha / jf + alpha * (1.0 - alpha) / (2.0 * jf * jf) - mf / (jf - c);
    let l2 = alpha / (jf * jf) + mf / ((jf - c) * (jf - c));
    let l3 = -2.0 * alpha / jf.powi(3) - 2.0 * mf / (jf - c).powi(3);
    let d1 = f * l1;
    let d3 = f * (l1 * l1 * l1 + 3.0 * l1 * l2 + l3);
    let value = integral - f / 2.0 - d1 / 12.0 + d3 / 720.0;
    let scale = 1.0 + beta + e[1].abs() + e[2].abs();
    let bound = (last.abs() + (d3 / 720.0).abs()) * scale / jf;
    (value, bound)
}

/// `ψ′(z)` for large `z` by its asymptotic series.
fn trigamma_large(z: f64) -> f64 {
    let z2 = z * z;
    1.0 / z + 1.0 / (2.0 * z2) + 1.0 / (6.0 * z2 * z) - 1.0 / (30.0 * z2 * z2 * z) + 1.0 / (42.0 * z2 * z2 * z2 * z)
}

/// Runs `attempt` on cutoffs `MIN_TERMS, 4·MIN_TERMS, …` until its error
/// estimate is below `tol / 2`.
fn adaptive<F: FnMut(usize) -> (f64, f64)>(tol: f64, mut attempt: F) -> Result<(f64, usize, f64)> {
    let mut big_j = MIN_TERMS;
    loop {
        let (value, bound) = attempt(big_j);
        if !value.is_finite() {
            return Err(Error::Numerical(format!("series evaluated to {value}")));
        }
        if bound < tol / 2.0 {
            return Ok((value, big_j, bound));
        }
        if big_j >= MAX_TERMS {
            return Err(Error::Numerical(format!(
                "tolerance {tol} not reached within {MAX_TERMS} terms (tail estimate {bound:e})"
            )));
        }
        big_j = (big_j * 4).min(MAX_TERMS);
    }
}

/// `𝔦(α) = 1/α² + Σ_j p_α(j) / (α(j − α))`.
pub fn fisher_info(alpha: f64, tol: f64) -> Result<FisherInfo> {
    check_alpha(alpha)?;
    check_tol(tol)?;
    let (value, truncation_j, tail_bound) = adaptive(tol, |big_j| {
        let mut sum = Sum::default();
        let mut s_j = 1.0;
        for (j, p, s) in SibuyaTerms::new(alpha).unwrap().take(big_j) {
            sum.add(p / (alpha * (j as f64 - alpha)));
            s_j = s;
        }
        // p(j) / (α(j − α)) = S(j) / (j − α)²
        let (t, b) = tail(alpha, big_j, s_j, alpha, 2);
        sum.add(t);
        (1.0 / (alpha * alpha) + sum.value(), b)
    })?;
    Ok(FisherInfo { alpha, value, truncation_j, tail_bound })
}

/// `𝔦(α) = 1/α² + Σ_j p_α(j) Σ_{i<j} 1/(i − α)²`, summed in its double-sum
/// order. An independent route to the same number as [`fisher_info`].
pub fn fisher_info_double_sum(alpha: f64, tol: f64) -> Result<FisherInfo> {
    check_alpha(alpha)?;
    check_tol(tol)?;
    let (value, truncation_j, tail_bound) = adaptive(tol, |big_j| {
        let mut sum = Sum::default();
        let mut inner = Sum::default();
        let mut s_j = 1.0;
        for (j, p, s) in SibuyaTerms::new(alpha).unwrap().take(big_j) {
            // inner holds Σ_{i<j} 1/(i − α)²
            sum.add(p * inner.value());
            let d = j as f64 - alpha;
            inner.add(1.0 / (d * d));
            s_j = s;
        }
        // For j > J the inner sum is c_∞ − ψ′(j − α), with c_∞ the full series.
        let c_inf = inner.value() + trigamma_large(big_j as f64 + 1.0 - alpha);
        let (t2, b2) = tail(alpha, big_j, s_j, alpha, 2);
        let (t3, b3) = tail(alpha, big_j, s_j, alpha, 3);
        let (t4, b4) = tail(alpha, big_j, s_j, alpha, 4);
        sum.add(c_inf * s_j);
        sum.add(-alpha * (t2 + t3 / 2.0 + t4 / 6.0));
        (1.0 / (alpha * alpha) + sum.value(), alpha * (b2 + b3 + b4))
    })?;
    Ok(FisherInfo { alpha, value, truncation_j, tail_bound })
}

fn check_x(x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("x = {x} must lie in (0,1)")))
    }
}

/// `Ψ(x) = 1/x − Σ_j p_α(j) Σ_{i<j} 1/(i − x)`, evaluated as
/// `1/x − Σ_i S(i)/(i − x)`.
pub fn psi(x: f64, alpha: f64, tol: f64) -> Result<f64> {
    check_x(x)?;
    check_alpha(alpha)?;
    check_tol(tol)?;
    let (v, _, _) = adaptive(tol, |big_j| survival_series(alpha, big_j, x, 1))?;
    Ok(1.0 / x - v)
}

/// `Ψ′(x) = −1/x² − Σ_i S(i)/(i − x)²`.
pub fn psi_derivative(x: f64, alpha: f64, tol: f64) -> Result<f64> {
    check_x(x)?;
    check_alpha(alpha)?;
    check_tol(tol)?;
    let (v, _, _) = adaptive(tol, |big_j| survival_series(alpha, big_j, x, 2))?;
    Ok(-1.0 / (x * x) - v)
}

fn survival_series(alpha: f64, big_j: usize, c: f64, m: u32) -> (f64, f64) {
    let mut sum = Sum::default();
    let mut s_j = 1.0;
    for (i, _, s) in SibuyaTerms::new(alpha).unwrap().take(big_j) {
        sum.add(s * (i as f64 - c).powi(-(m as i32)));
        s_j = s;
    }
    let (t, b) = tail(alpha, big_j, s_j, c, m);
    sum.add(t);
    (sum.value(), b)
}

/// `Ψₙ(x) = (k − 1)/(x k) − Σ_j (k_{n,j}/k) Σ_{i<j} 1/(i − x)` and its
/// derivative, in one pass over the distinct block sizes.
pub fn psi_n(x: f64, stats: &SuffStats) -> Result<(f64, f64)> {
    check_x(x)?;
    Ok(psi_n_unchecked(x, stats))
}

pub(crate) fn psi_n_unchecked(x: f64, stats: &SuffStats) -> (f64, f64) {
    let k = stats.k_n as f64;
    let mut h1 = 0.0; // Σ_{i<j} 1/(i − x)
    let mut h2 = 0.0; // Σ_{i<j} 1/(i − x)²
    let mut next_i = 1usize;
    let mut s1 = Sum::default();
    let mut s2 = Sum::default();
    for (&j, &c) in &stats.size_counts {
        while next_i < j {
            let d = 1.0 / (next_i as f64 - x);
            h1 += d;
            h2 += d * d;
            next_i += 1;
        }
        s1.add(c as f64 * h1);
        s2.add(c as f64 * h2);
    }
    let value = (k - 1.0) / (x * k) - s1.value() / k;
    let deriv = -(k - 1.0) / (x * x * k) - s2.value() / k;
    (value, deriv)
}
