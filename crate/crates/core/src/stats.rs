//! Statistical utilities: normal quantiles, reference CDFs for the limit
//! laws, Kolmogorov–Smirnov distance and simple sample summaries.

use crate::error::{Error, Result};
use std::f64::consts::{PI, SQRT_2};

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// Standard normal CDF Φ.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// CDF of |N(0,1)|.
pub fn half_normal_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        libm::erf(x / SQRT_2)
    }
}

/// CDF of the χ² law with one degree of freedom.
pub fn chi2_1_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        libm::erf((0.5 * x).sqrt())
    }
}

// Acklam's rational approximation, relative error below 1.2e-9.
const A: [f64; 6] = [
    -3.969_683_028_665_376e1,
    2.209_460_984_245_205e2,
    -2.759_285_104_469_687e2,
    1.383_577_518_672_69e2,
    -3.066_479_806_614_716e1,
    2.506_628_277_459_239,
];
const B: [f64; 5] = [
    -5.447_609_879_822_406e1,
    1.615_858_368_580_409e2,
    -1.556_989_798_598_866e2,
    6.680_131_188_771_972e1,
    -1.328_068_155_288_572e1,
];
const C: [f64; 6] = [
    -7.784_894_002_430_293e-3,
    -3.223_964_580_411_365e-1,
    -2.400_758_277_161_838,
    -2.549_732_539_343_734,
    4.374_664_141_464_968,
    2.938_163_982_698_783,
];
const D: [f64; 4] = [
    7.784_695_709_041_462e-3,
    3.224_671_290_700_398e-1,
    2.445_134_137_142_996,
    3.754_408_661_907_416,
];

fn acklam_lower(p: f64) -> f64 {
    const P_LOW: f64 = 0.02425;
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

/// Quantile of N(0,1): Acklam's approximation polished by one Halley step on Φ.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("normal quantile needs p in (0,1), got {p}")));
    }
    if p > 0.5 {
        // 1 - p is exact here.
        return Ok(-lower_quantile(1.0 - p));
    }
    Ok(lower_quantile(p))
}

fn lower_quantile(p: f64) -> f64 {
    if p == 0.5 {
        return 0.0;
    }
    let x = acklam_lower(p);
    let e = normal_cdf(x) - p;
    let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}

pub fn chi2_1_quantile(p: f64) -> Result<f64> {
    let z = half_normal_quantile(p)?;
    Ok(z * z)
}

pub fn half_normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("quantile needs p in (0,1), got {p}")));
    }
    normal_quantile(0.5 * (1.0 + p))
}

/// Kolmogorov–Smirnov distance between the empirical CDF of a sorted sample
/// and a reference CDF, evaluated at both one-sided limits of every jump.
pub fn ks_distance<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::invalid("KS distance of an empty sample"));
    }
    if sorted.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::invalid("KS distance needs a sorted sample without NaN"));
    }
    let m = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        let above = (i as f64 + 1.0) / m - f;
        let below = f - i as f64 / m;
        d = d.max(above).max(below);
    }
    Ok(d)
}

/// Sorts a copy and computes the KS distance, dropping non-finite values.
pub fn ks_distance_unsorted<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> Result<f64> {
    let mut v: Vec<f64> = sample.iter().copied().filter(|x| x.is_finite()).collect();
    v.sort_by(f64::total_cmp);
    ks_distance(&v, cdf)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

pub fn std_error(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

/// Linear-interpolation quantile (type 7) of a sorted sample.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() as f64 - 1.0) * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Least-squares slope of `ys` on `xs`.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let mx = mean(xs);
    let my = mean(ys);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Number of local maxima of a Gaussian kernel density estimate with
/// Silverman's bandwidth, evaluated on a 512-point grid. Maxima lower than
/// 2% of the tallest one are ignored so that isolated outliers do not count.
pub fn kde_mode_count(sample: &[f64]) -> usize {
    let mut v: Vec<f64> = sample.iter().copied().filter(|x| x.is_finite()).collect();
    if v.len() < 2 {
        return v.len();
    }
    v.sort_by(f64::total_cmp);
    let sd = variance(&v).sqrt();
    let iqr = quantile_sorted(&v, 0.75) - quantile_sorted(&v, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    if spread <= 0.0 {
        return 1;
    }
    let h = 0.9 * spread * (v.len() as f64).powf(-0.2);
    let lo = v[0] - 3.0 * h;
    let hi = v[v.len() - 1] + 3.0 * h;
    let grid = 512;
    let dens: Vec<f64> = (0..grid)
        .map(|g| {
            let x = lo + (hi - lo) * g as f64 / (grid - 1) as f64;
            v.iter().map(|s| (-0.5 * ((x - s) / h).powi(2)).exp()).sum::<f64>()
        })
        .collect();
    let top = dens.iter().cloned().fold(0.0, f64::max);
    (1..grid - 1)
        .filter(|&g| dens[g] > dens[g - 1] && dens[g] >= dens[g + 1] && dens[g] > 0.02 * top)
        .count()
}
