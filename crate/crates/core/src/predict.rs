//! Estimators of the predictive simplex, divergences to the truth, and
//! confidence intervals for subset probabilities `p(I) = Σ_{i∈I} p_i`.
//!
//! Index 0 is the new-block entry; index `i ≥ 1` is block `i` in creation
//! order.

use crate::error::{Error, Result};
use crate::partition::{PartitionState, SuffStats};
use crate::qmle::{tau, QmleResult};
use crate::sibuya::{fisher_info, DEFAULT_TOL};
use rand::Rng;
use serde::{Deserialize, Serialize};

pub const MAX_SUBSET_ATTEMPTS: usize = 1_000_000;
pub const DEFAULT_DELTA_EXPONENT: f64 = 0.51;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    /// `[k α̂ / n, (|U_i| − α̂) / n]`.
    QmleZero,
    /// `[0, |U_i| / n]`.
    Frequency,
    /// `[(θ + k α̂)/(n + θ), (|U_i| − α̂)/(n + θ)]`.
    QmleTheta(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimplexPair {
    pub truth: Vec<f64>,
    pub estimate: Vec<f64>,
    pub kind: EstimatorKind,
    /// Some estimate entry is zero or the estimate came from a boundary α̂.
    pub boundary: bool,
}

/// Estimated simplex from block sizes alone.
pub fn estimate_from_sizes(sizes: &[usize], alpha_hat: f64, kind: EstimatorKind) -> Result<Vec<f64>> {
    if sizes.is_empty() {
        return Err(Error::invalid("no blocks"));
    }
    if !(0.0..=1.0).contains(&alpha_hat) {
        return Err(Error::invalid(format!("alpha_hat {alpha_hat} outside [0,1]")));
    }
    let n: usize = sizes.iter().sum();
    let (nf, kf) = (n as f64, sizes.len() as f64);
    let (p0, denom, a) = match kind {
        EstimatorKind::QmleZero => (kf * alpha_hat / nf, nf, alpha_hat),
        EstimatorKind::Frequency => (0.0, nf, 0.0),
        EstimatorKind::QmleTheta(theta) => {
            if !(theta > -alpha_hat) {
                return Err(Error::SupportViolation { theta, alpha: alpha_hat });
            }
            ((theta + kf * alpha_hat) / (nf + theta), nf + theta, alpha_hat)
        }
    };
    let mut p = Vec::with_capacity(sizes.len() + 1);
    p.push(p0);
    p.extend(sizes.iter().map(|&s| (s as f64 - a) / denom));
    Ok(p)
}

/// Pairs the estimate with the true simplex of `state`.
pub fn estimate_simplex(state: &PartitionState, alpha_hat: f64, kind: EstimatorKind) -> Result<SimplexPair> {
    let estimate = estimate_from_sizes(state.block_sizes(), alpha_hat, kind)?;
    let truth = state.true_simplex()?;
    let boundary = estimate.iter().any(|&p| p <= 0.0) || alpha_hat <= 0.0 || alpha_hat >= 1.0;
    Ok(SimplexPair { truth, estimate, kind, boundary })
}

fn aligned(p: &[f64], q: &[f64]) -> Result<()> {
    if p.len() != q.len() || p.is_empty() {
        return Err(Error::invalid(format!("simplexes have lengths {} and {}", p.len(), q.len())));
    }
    Ok(())
}

/// `½ Σ |p_i − q_i|`.
pub fn tv_between(p: &[f64], q: &[f64]) -> Result<f64> {
    aligned(p, q)?;
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

pub fn tv(pair: &SimplexPair) -> Result<f64> {
    tv_between(&pair.estimate, &pair.truth)
}

/// `KL(p ‖ q) = Σ p_i log(p_i / q_i)` with `0 log 0 = 0`, for probability
/// vectors `p` and `q`.
///
/// Summed as `Σ q_i φ(p_i / q_i)` with `φ(r) = r log r − r + 1 ≥ 0`, which is
/// the same number when both vectors sum to one but does not cancel when
/// `p ≈ q`.
pub fn kl_between(p: &[f64], q: &[f64]) -> Result<f64> {
    aligned(p, q)?;
    let mut acc = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a == 0.0 {
            acc += b;
            continue;
        }
        if !(b > 0.0) {
            return Err(Error::Numerical(format!("reference entry {b} is not positive")));
        }
        let d = (a - b) / b;
        acc += b * ((1.0 + d) * d.ln_1p() - d).max(0.0);
    }
    Ok(acc)
}

/// `KL(estimate ‖ truth)`.
pub fn kl(pair: &SimplexPair) -> Result<f64> {
    kl_between(&pair.estimate, &pair.truth)
}

/// Convex `f` with `f(1) = 0`, given on a grid and interpolated linearly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabulatedF {
    xs: Vec<f64>,
    fs: Vec<f64>,
}

impl TabulatedF {
    pub fn new(xs: Vec<f64>, fs: Vec<f64>) -> Result<Self> {
        if xs.len() != fs.len() || xs.len() < 2 {
            return Err(Error::invalid("tabulated f needs at least two (x, f) pairs"));
        }
        if xs.windows(2).any(|w| !(w[0] < w[1])) || xs[0] < 0.0 {
            return Err(Error::invalid("tabulated x grid must be nonnegative and strictly increasing"));
        }
        let t = TabulatedF { xs, fs };
        match t.eval(1.0) {
            Some(v) if v.abs() <= 1e-12 => Ok(t),
            _ => Err(Error::invalid("tabulated f must cover x = 1 with f(1) = 0")),
        }
    }

    pub fn eval(&self, x: f64) -> Option<f64> {
        let (xs, fs) = (&self.xs, &self.fs);
        if !(x >= xs[0] && x <= xs[xs.len() - 1]) {
            return None;
        }
        let i = xs.partition_point(|&v| v <= x).clamp(1, xs.len() - 1);
        let t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
        Some(fs[i - 1] + t * (fs[i] - fs[i - 1]))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Divergence {
    /// `x log x`.
    Kl,
    /// `|x − 1| / 2`.
    Tv,
    /// `(x − 1)²`.
    ChiSquared,
    /// `(√x − 1)²`.
    Hellinger,
    Tabulated(TabulatedF),
}

impl Divergence {
    pub fn eval(&self, x: f64) -> Option<f64> {
        if !(x >= 0.0) || !x.is_finite() {
            return None;
        }
        Some(match self {
            Divergence::Kl => {
                if x == 0.0 {
                    0.0
                } else {
                    x * x.ln()
                }
            }
            Divergence::Tv => 0.5 * (x - 1.0).abs(),
            Divergence::ChiSquared => (x - 1.0) * (x - 1.0),
            Divergence::Hellinger => (x.sqrt() - 1.0).powi(2),
            Divergence::Tabulated(t) => return t.eval(x),
        })
    }

    /// `f″(1)`, when `f` is twice differentiable at 1.
    pub fn curvature_at_one(&self) -> Option<f64> {
        match self {
            Divergence::Kl => Some(1.0),
            Divergence::ChiSquared => Some(2.0),
            Divergence::Hellinger => Some(0.5),
            Divergence::Tv | Divergence::Tabulated(_) => None,
        }
    }
}

/// `Σ q_i f(p_i / q_i)`.
pub fn f_divergence_between(p: &[f64], q: &[f64], f: &Divergence) -> Result<f64> {
    aligned(p, q)?;
    let mut acc = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if !(b > 0.0) {
            return Err(Error::Numerical(format!("reference entry {b} is not positive")));
        }
        let v = f.eval(a / b).ok_or_else(|| Error::Numerical(format!("f undefined at ratio {}", a / b)))?;
        acc += b * v;
    }
    Ok(acc)
}

/// `D_f(estimate ‖ truth)`.
pub fn f_divergence(pair: &SimplexPair, f: &Divergence) -> Result<f64> {
    f_divergence_between(&pair.estimate, &pair.truth, f)
}

/// The subset `{i : estimate_i > truth_i}`, which attains the TV distance.
pub fn tv_subset(pair: &SimplexPair) -> Vec<usize> {
    (0..pair.truth.len()).filter(|&i| pair.estimate[i] > pair.truth[i]).collect()
}

pub fn subset_mass(p: &[f64], subset: &[usize]) -> f64 {
    subset.iter().map(|&i| p[i]).sum()
}

/// Choice of the threshold δₙ defining the admissible family 𝓘ₙ.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaRule {
    /// `k^{-0.51}`.
    #[default]
    KPower,
    /// `(√k log n)^{-1} ∨ k^{-1}`.
    SqrtKLogN,
}

impl DeltaRule {
    pub fn delta(&self, n: usize, k: usize) -> f64 {
        let kf = k as f64;
        match self {
            DeltaRule::KPower => kf.powf(-DEFAULT_DELTA_EXPONENT),
            DeltaRule::SqrtKLogN => (1.0 / (kf.sqrt() * (n as f64).ln())).max(1.0 / kf),
        }
    }
}

impl std::str::FromStr for DeltaRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "k_power" | "kpower" | "power" => Ok(DeltaRule::KPower),
            "sqrt_k_log_n" | "log" => Ok(DeltaRule::SqrtKLogN),
            _ => Err(Error::Config(format!("unknown delta rule '{s}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CiKind {
    Uniform,
    Local,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsetCi {
    pub subset: Vec<usize>,
    pub center: f64,
    pub half_width: f64,
    pub kind: CiKind,
}

impl SubsetCi {
    pub fn contains(&self, p: f64) -> bool {
        (p - self.center).abs() <= self.half_width
    }
}

fn interior_info(result: &QmleResult) -> Result<f64> {
    if !result.is_interior() || !(result.alpha_hat > 0.0 && result.alpha_hat < 1.0) {
        return Err(Error::BoundaryEstimate { alpha_hat: result.alpha_hat });
    }
    Ok(fisher_info(result.alpha_hat, DEFAULT_TOL)?.value)
}

/// `(√k / n) τ_{1−ε/2} / √𝔦(α̂)`, valid for every subset at once.
pub fn uniform_ci(stats: &SuffStats, result: &QmleResult, eps: f64) -> Result<f64> {
    let info = interior_info(result)?;
    Ok((stats.k_n as f64).sqrt() / stats.n as f64 * tau(eps)? / info.sqrt())
}

/// Uniform interval for a particular subset of `{0, …, k}`.
pub fn uniform_subset_ci(sizes: &[usize], result: &QmleResult, eps: f64, subset: &[usize]) -> Result<SubsetCi> {
    let stats = SuffStats::from_block_sizes(sizes)?;
    check_indices(subset, sizes.len(), true)?;
    let est = estimate_from_sizes(sizes, result.alpha_hat, EstimatorKind::QmleZero)?;
    Ok(SubsetCi {
        subset: subset.to_vec(),
        center: subset_mass(&est, subset),
        half_width: uniform_ci(&stats, result, eps)?,
        kind: CiKind::Uniform,
    })
}

fn check_indices(subset: &[usize], k: usize, allow_zero: bool) -> Result<()> {
    if subset.is_empty() {
        return Err(Error::invalid("subset is empty"));
    }
    for &i in subset {
        if i == 0 && !allow_zero {
            return Err(Error::invalid("index 0 (new block) is not allowed in a local interval"));
        }
        if i > k {
            return Err(Error::invalid(format!("index {i} exceeds k = {k}")));
        }
    }
    Ok(())
}

/// Mean block size over `subset` (indices in `1..=k`).
pub fn mean_size(sizes: &[usize], subset: &[usize]) -> f64 {
    subset.iter().map(|&i| sizes[i - 1] as f64).sum::<f64>() / subset.len() as f64
}

/// Membership in 𝓘ₙ: mean block size over `subset` at most `n δ`.
pub fn is_member(sizes: &[usize], subset: &[usize], delta: f64) -> bool {
    let n: usize = sizes.iter().sum();
    !subset.is_empty() && subset.iter().all(|&i| i >= 1 && i <= sizes.len()) && mean_size(sizes, subset) <= n as f64 * delta
}

/// `p̂(I) ± (|I| / (n √k)) τ_{1−ε/2} / √𝔦(α̂)` for `I ∈ 𝓘ₙ`.
pub fn local_ci(sizes: &[usize], result: &QmleResult, eps: f64, subset: &[usize], delta: f64) -> Result<SubsetCi> {
    let k = sizes.len();
    check_indices(subset, k, false)?;
    let n: usize = sizes.iter().sum();
    if !(delta * k as f64 >= 1.0 - 1e-12) {
        return Err(Error::invalid(format!("delta {delta} is below 1/k = {}", 1.0 / k as f64)));
    }
    let mean = mean_size(sizes, subset);
    let limit = n as f64 * delta;
    if mean > limit {
        return Err(Error::NotMember { mean_size: mean, limit });
    }
    let info = interior_info(result)?;
    let est = estimate_from_sizes(sizes, result.alpha_hat, EstimatorKind::QmleZero)?;
    let half_width = subset.len() as f64 / (n as f64 * (k as f64).sqrt()) * tau(eps)? / info.sqrt();
    Ok(SubsetCi { subset: subset.to_vec(), center: subset_mass(&est, subset), half_width, kind: CiKind::Local })
}

/// Draws `I` uniformly from 𝓘ₙ by rejection: each block joins with
/// probability ½, and empty or non-member sets are redrawn.
pub fn sample_subset_in<R: Rng + ?Sized>(sizes: &[usize], delta: f64, rng: &mut R) -> Result<Vec<usize>> {
    let k = sizes.len();
    if k == 0 {
        return Err(Error::invalid("no blocks"));
    }
    if !(delta * k as f64 >= 1.0 - 1e-12) {
        return Err(Error::invalid(format!("delta {delta} is below 1/k = {}", 1.0 / k as f64)));
    }
    let n: usize = sizes.iter().sum();
    let limit = n as f64 * delta;
    let mut subset = Vec::with_capacity(k);
    for _ in 0..MAX_SUBSET_ATTEMPTS {
        subset.clear();
        let mut total = 0usize;
        let mut bits = 0u64;
        for i in 0..k {
            if i % 64 == 0 {
                bits = rng.random();
            }
            if bits & 1 == 1 {
                subset.push(i + 1);
                total += sizes[i];
            }
            bits >>= 1;
        }
        if !subset.is_empty() && total as f64 <= limit * subset.len() as f64 {
            return Ok(subset);
        }
    }
    Err(Error::Numerical(format!(
        "no member of the admissible family found in {MAX_SUBSET_ATTEMPTS} attempts (acceptance rate below {:e})",
        1.0 / MAX_SUBSET_ATTEMPTS as f64
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixing::MixingSpec;
    use crate::qmle::{qmle, Boundary};
    use crate::rng::rng_from_seed;
    use proptest::prelude::*;

    fn interior(a: f64) -> QmleResult {
        QmleResult { alpha_hat: a, boundary: Boundary::Interior, iterations: 1, residual: 0.0 }
    }

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-15)
    }

    #[test]
    fn estimator_examples() {
        let p = estimate_from_sizes(&[2, 1], 0.5, EstimatorKind::QmleZero).unwrap();
        assert!(close(&p, &[1.0 / 3.0, 0.5, 1.0 / 6.0]));
        let p = estimate_from_sizes(&[2, 1], 0.5, EstimatorKind::Frequency).unwrap();
        assert!(close(&p, &[0.0, 2.0 / 3.0, 1.0 / 3.0]));
        let p = estimate_from_sizes(&[2, 1], 0.5, EstimatorKind::QmleTheta(1.0)).unwrap();
        assert!(close(&p, &[0.5, 0.375, 0.125]));
        assert!(estimate_from_sizes(&[2, 1], 0.5, EstimatorKind::QmleTheta(-0.6)).is_err());
        assert!(estimate_from_sizes(&[2, 1], 1.5, EstimatorKind::QmleZero).is_err());
    }

    #[test]
    fn theta_estimator_is_close_to_zero_estimator() {
        let sizes = [40, 13, 7, 3, 1, 1, 1];
        let n: usize = sizes.iter().sum();
        for &theta in &[-0.3, 0.5, 3.0, 50.0] {
            let a = estimate_from_sizes(&sizes, 0.4, EstimatorKind::QmleTheta(theta)).unwrap();
            let b = estimate_from_sizes(&sizes, 0.4, EstimatorKind::QmleZero).unwrap();
            assert!(tv_between(&a, &b).unwrap() <= theta.abs() / (n as f64 + theta) + 1e-15);
        }
    }

    #[test]
    fn tv_and_kl_examples() {
        assert_eq!(tv_between(&[0.2, 0.8], &[0.2, 0.8]).unwrap(), 0.0);
        assert_eq!(tv_between(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert!(tv_between(&[1.0], &[0.5, 0.5]).is_err());
        assert_eq!(kl_between(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        let k = kl_between(&[0.0, 1.0], &[0.5, 0.5]).unwrap();
        assert!((k - 2f64.ln()).abs() < 1e-15);
        assert!(kl_between(&[0.5, 0.5], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn f_divergence_catalog() {
        let p = [0.1, 0.5, 0.4];
        let q = [0.2, 0.3, 0.5];
        let tv = tv_between(&p, &q).unwrap();
        assert!((f_divergence_between(&p, &q, &Divergence::Tv).unwrap() - tv).abs() < 1e-15);
        let kl = kl_between(&p, &q).unwrap();
        assert!((f_divergence_between(&p, &q, &Divergence::Kl).unwrap() - kl).abs() < 1e-15);
        let chi: f64 = p.iter().zip(&q).map(|(a, b)| (a - b) * (a - b) / b).sum();
        assert!((f_divergence_between(&p, &q, &Divergence::ChiSquared).unwrap() - chi).abs() < 1e-15);
        let hel: f64 = p.iter().zip(&q).map(|(a, b)| (a.sqrt() - b.sqrt()).powi(2)).sum();
        assert!((f_divergence_between(&p, &q, &Divergence::Hellinger).unwrap() - hel).abs() < 1e-15);
        for f in [Divergence::Kl, Divergence::Tv, Divergence::ChiSquared, Divergence::Hellinger] {
            assert_eq!(f_divergence_between(&q, &q, &f).unwrap(), 0.0);
        }
        let tab = TabulatedF::new(vec![0.0, 1.0, 3.0], vec![0.5, 0.0, 1.0]).unwrap();
        let d = Divergence::Tabulated(tab);
        let expect = 0.2 * 0.25 + 0.3 * (1.0 / 3.0) + 0.5 * 0.1;
        assert!((f_divergence_between(&p, &q, &d).unwrap() - expect).abs() < 1e-15);
        assert!(f_divergence_between(&[0.9, 0.1], &[0.1, 0.9], &d).is_err());
        assert!(TabulatedF::new(vec![0.0, 2.0], vec![1.0, 1.0]).is_err());
        assert!(TabulatedF::new(vec![2.0, 0.0], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn tv_equals_best_subset() {
        let mut s = PartitionState::init(0.5, &MixingSpec::equal_atoms(&[0.0, 3.0]), 12).unwrap();
        for n in [5usize, 15, 40, 80] {
            s.run_to(n).unwrap();
            if s.k() > 12 {
                break;
            }
            let a = qmle(&s.suff_stats()).unwrap().alpha_hat;
            let pair = estimate_simplex(&s, a, EstimatorKind::QmleZero).unwrap();
            let t = tv(&pair).unwrap();
            let m = pair.truth.len();
            let mut best = 0.0f64;
            for mask in 0u32..(1 << m) {
                let idx: Vec<usize> = (0..m).filter(|i| mask >> i & 1 == 1).collect();
                best = best.max((subset_mass(&pair.estimate, &idx) - subset_mass(&pair.truth, &idx)).abs());
            }
            assert!((t - best).abs() < 1e-14);
            let star = tv_subset(&pair);
            assert!((subset_mass(&pair.estimate, &star) - subset_mass(&pair.truth, &star) - t).abs() < 1e-14);
        }
    }

    #[test]
    fn uniform_width_scaling() {
        let r = interior(0.6);
        let a = uniform_ci(&SuffStats::from_block_sizes(&[4, 4, 1, 1]).unwrap(), &r, 0.05).unwrap();
        let b = uniform_ci(&SuffStats::from_block_sizes(&[9, 8, 2, 1]).unwrap(), &r, 0.05).unwrap();
        assert!((a / b - 2.0).abs() < 1e-12);
        let boundary = QmleResult { alpha_hat: 0.0, boundary: Boundary::AllOneBlock, iterations: 0, residual: 0.0 };
        assert!(uniform_ci(&SuffStats::from_block_sizes(&[4]).unwrap(), &boundary, 0.05).is_err());
    }

    #[test]
    fn local_ci_rules() {
        let sizes = [30, 5, 2, 1, 1, 1];
        let r = interior(0.5);
        let k = sizes.len();
        let all: Vec<usize> = (1..=k).collect();
        let delta = DeltaRule::KPower.delta(40, k);
        let local = local_ci(&sizes, &r, 0.05, &all, delta).unwrap();
        let uni = uniform_ci(&SuffStats::from_block_sizes(&sizes).unwrap(), &r, 0.05).unwrap();
        assert!((local.half_width - uni).abs() < 1e-15);
        let small = local_ci(&sizes, &r, 0.05, &[3, 4], delta).unwrap();
        assert!(small.half_width < uni);
        assert!((small.center - (1.5 + 0.5) / 40.0).abs() < 1e-15);
        assert!(matches!(local_ci(&sizes, &r, 0.05, &[1], delta), Err(Error::NotMember { .. })));
        assert!(local_ci(&sizes, &r, 0.05, &[0, 2], delta).is_err());
        assert!(local_ci(&sizes, &r, 0.05, &[7], delta).is_err());
    }

    #[test]
    fn delta_rules() {
        assert!((DeltaRule::KPower.delta(1000, 100) - 100f64.powf(-0.51)).abs() < 1e-15);
        let d = DeltaRule::SqrtKLogN.delta(1000, 100);
        assert!((d - 1.0 / (10.0 * 1000f64.ln())).abs() < 1e-15);
        assert_eq!(DeltaRule::SqrtKLogN.delta(1000, 2), 0.5);
        assert_eq!("log".parse::<DeltaRule>().unwrap(), DeltaRule::SqrtKLogN);
    }

    #[test]
    fn subset_sampler_single_block() {
        let mut rng = rng_from_seed(3);
        assert_eq!(sample_subset_in(&[7], 1.0, &mut rng).unwrap(), vec![1]);
        assert!(sample_subset_in(&[7, 1], 0.1, &mut rng).is_err());
    }

    #[test]
    fn subset_sampler_is_uniform_over_all_sets() {
        let sizes = [3usize, 1, 1, 2, 1, 1, 4, 1, 1, 1];
        let mut rng = rng_from_seed(17);
        let draws = 100_000;
        let mut counts = vec![0usize; 1 << 10];
        for _ in 0..draws {
            let s = sample_subset_in(&sizes, 1.0, &mut rng).unwrap();
            assert!(is_member(&sizes, &s, 1.0));
            counts[s.iter().map(|i| 1usize << (i - 1)).sum::<usize>()] += 1;
        }
        assert_eq!(counts[0], 0);
        let e = draws as f64 / 1023.0;
        let chi2: f64 = counts[1..].iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
        // χ²₁₀₂₂ upper 0.1% point is about 1165.
        assert!(chi2 < 1165.0, "{chi2}");
    }

    proptest! {
        #[test]
        fn closure_pinsker_and_width_claims(alpha in 0.2f64..0.9, seed in any::<u64>(), n in 50usize..600) {
            let mut s = PartitionState::init(alpha, &MixingSpec::equal_atoms(&[0.0, 3.0]), seed).unwrap();
            let st = s.run_to(n).unwrap();
            let r = qmle(&st).unwrap();
            prop_assume!(r.is_interior());
            for kind in [EstimatorKind::QmleZero, EstimatorKind::Frequency, EstimatorKind::QmleTheta(1.0)] {
                let pair = estimate_simplex(&s, r.alpha_hat, kind).unwrap();
                prop_assert!((pair.truth.iter().sum::<f64>() - 1.0).abs() < 1e-10);
                prop_assert!((pair.estimate.iter().sum::<f64>() - 1.0).abs() < 1e-10);
                let t = tv(&pair).unwrap();
                let k = kl(&pair).unwrap();
                prop_assert!(t <= (k / 2.0).sqrt() + 1e-12);
            }
            let sizes = s.block_sizes();
            let delta = DeltaRule::KPower.delta(n, s.k());
            let mut rng = rng_from_seed(seed ^ 1);
            let subset = sample_subset_in(sizes, delta, &mut rng).unwrap();
            let local = local_ci(sizes, &r, 0.05, &subset, delta).unwrap();
            let uni = uniform_ci(&st, &r, 0.05).unwrap();
            prop_assert!(local.half_width <= uni * (1.0 + 1e-12));
            // Relative widths with the common factor τ/√𝔦 removed.
            let factor = uni / ((s.k() as f64).sqrt() / n as f64);
            prop_assert!(local.half_width / factor / local.center <= 1.0 / ((s.k() as f64).sqrt() * (1.0 - r.alpha_hat)) + 1e-12);
            let est = estimate_from_sizes(sizes, r.alpha_hat, EstimatorKind::QmleZero).unwrap();
            prop_assert!((s.k() as f64).sqrt() / n as f64 / est[0] <= 1.0 / ((s.k() as f64).sqrt() * r.alpha_hat) + 1e-12);
        }
    }
}
