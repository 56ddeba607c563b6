//! Mixing distributions over the Ewens–Pitman strength θ and their tilted
//! measures.
//!
//! A Gibbs partition with weights `v_{n,k} = ∫ v_{n,k}(α, θ) dμ(θ)` drives its
//! predictive rule through two integrals against the tilted measure
//! `μ_{n,k}(dθ) ∝ v_{n,k}(α, θ) μ(dθ)`:
//!
//! ```text
//! v_{n+1,k+1} / v_{n,k} = ∫ (θ + kα) / (θ + n) dμ_{n,k}
//! v_{n+1,k}   / v_{n,k} = ∫ 1 / (θ + n)        dμ_{n,k}
//! ```
//!
//! Continuous μ is discretised once into a [`ParticleMeasure`]; afterwards
//! only the weights move.

use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, gauss_legendre_on};
use crate::stats::{ln_gamma, normal_quantile};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

pub const DEFAULT_NODES: usize = 128;
pub const DEFAULT_Q_TRUNC: f64 = 1.0 - 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub enum MixingKind {
    Dirac(f64),
    /// `(θ, probability)` pairs.
    Atoms(Vec<(f64, f64)>),
    Uniform { a: f64, b: f64 },
    /// Law of `scale · |N(0,1)|`.
    HalfNormal { scale: f64 },
    /// Law of `scale · |T_df|`.
    HalfT { df: f64, scale: f64 },
}

/// Declarative description of the mixing distribution μ.
#[derive(Clone, Debug, PartialEq)]
pub struct MixingSpec {
    pub kind: MixingKind,
    /// Node count for continuous kinds; ignored for Dirac and Atoms.
    pub nodes: usize,
    /// Upper probability at which unbounded kinds are truncated.
    pub q_trunc: f64,
}

impl MixingSpec {
    pub fn new(kind: MixingKind) -> Self {
        MixingSpec { kind, nodes: DEFAULT_NODES, q_trunc: DEFAULT_Q_TRUNC }
    }

    pub fn dirac(theta: f64) -> Self {
        Self::new(MixingKind::Dirac(theta))
    }

    pub fn atoms(atoms: Vec<(f64, f64)>) -> Self {
        Self::new(MixingKind::Atoms(atoms))
    }

    /// Equal-weight atoms at the given points.
    pub fn equal_atoms(points: &[f64]) -> Self {
        let p = 1.0 / points.len() as f64;
        Self::atoms(points.iter().map(|&t| (t, p)).collect())
    }

    pub fn uniform(a: f64, b: f64) -> Self {
        Self::new(MixingKind::Uniform { a, b })
    }

    pub fn half_normal(scale: f64) -> Self {
        Self::new(MixingKind::HalfNormal { scale })
    }

    pub fn half_t(df: f64, scale: f64) -> Self {
        Self::new(MixingKind::HalfT { df, scale })
    }

    pub fn with_nodes(mut self, nodes: usize) -> Self {
        self.nodes = nodes;
        self
    }

    pub fn with_q_trunc(mut self, q: f64) -> Self {
        self.q_trunc = q;
        self
    }

    /// True for kinds represented without discretisation error.
    pub fn is_exact(&self) -> bool {
        matches!(self.kind, MixingKind::Dirac(_) | MixingKind::Atoms(_))
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |x: f64, what: &str| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("{what} must be finite")))
            }
        };
        match &self.kind {
            MixingKind::Dirac(t) => finite(*t, "Dirac location")?,
            MixingKind::Atoms(atoms) => {
                if atoms.is_empty() {
                    return Err(Error::invalid("atom list is empty"));
                }
                let mut total = 0.0;
                for &(t, p) in atoms {
                    finite(t, "atom location")?;
                    if !(p >= 0.0) || !p.is_finite() {
                        return Err(Error::invalid(format!("atom probability {p} is negative")));
                    }
                    total += p;
                }
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::invalid(format!("atom probabilities sum to {total}, not 1")));
                }
            }
            MixingKind::Uniform { a, b } => {
                finite(*a, "uniform lower end")?;
                finite(*b, "uniform upper end")?;
                if a > b {
                    return Err(Error::invalid(format!("uniform interval [{a}, {b}] is reversed")));
                }
                if a == b && self.nodes > 1 {
                    return Err(Error::invalid("degenerate uniform interval needs exactly one node"));
                }
            }
            MixingKind::HalfNormal { scale } => {
                if !(*scale > 0.0) || !scale.is_finite() {
                    return Err(Error::invalid(format!("half-normal scale {scale} must be positive")));
                }
            }
            MixingKind::HalfT { df, scale } => {
                if !(*df > 0.0) || !df.is_finite() {
                    return Err(Error::invalid(format!("half-t degrees of freedom {df} must be positive")));
                }
                if !(*scale > 0.0) || !scale.is_finite() {
                    return Err(Error::invalid(format!("half-t scale {scale} must be positive")));
                }
            }
        }
        if self.nodes == 0 {
            return Err(Error::invalid("node count must be at least 1"));
        }
        if !(self.q_trunc > 0.0 && self.q_trunc < 1.0) {
            return Err(Error::invalid(format!("q_trunc {} must lie in (0,1)", self.q_trunc)));
        }
        Ok(())
    }

    /// Smallest and largest support point (before truncation).
    pub fn support_bounds(&self) -> (f64, f64) {
        match &self.kind {
            MixingKind::Dirac(t) => (*t, *t),
            MixingKind::Atoms(atoms) => atoms
                .iter()
                .filter(|a| a.1 > 0.0)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(t, _)| (lo.min(t), hi.max(t))),
            MixingKind::Uniform { a, b } => (*a, *b),
            MixingKind::HalfNormal { .. } | MixingKind::HalfT { .. } => (0.0, f64::INFINITY),
        }
    }

    /// Checks θ > −α on the support.
    pub fn check_support(&self, alpha: f64) -> Result<()> {
        let (lo, _) = self.support_bounds();
        if lo > -alpha {
            Ok(())
        } else {
            Err(Error::SupportViolation { theta: lo, alpha })
        }
    }

    pub fn discretize(&self) -> Result<ParticleMeasure> {
        discretize(self)
    }
}

impl fmt::Display for MixingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            MixingKind::Dirac(t) => write!(f, "dirac:{t}"),
            MixingKind::Atoms(a) => {
                write!(f, "atoms:")?;
                for (i, (t, p)) in a.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{t}@{p}")?;
                }
                Ok(())
            }
            MixingKind::Uniform { a, b } => write!(f, "uniform:{a},{b}"),
            MixingKind::HalfNormal { scale } => write!(f, "halfnormal:{scale}"),
            MixingKind::HalfT { df, scale } => write!(f, "halft:{df},{scale}"),
        }
    }
}

/// Parses either a JSON object or the inline form
/// `dirac:0`, `atoms:0@0.5,3@0.5`, `uniform:0,3`, `halfnormal:1`, `halft:3,1`.
impl FromStr for MixingSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('{') {
            let spec: MixingSpec = serde_json::from_str(s)?;
            return Ok(spec);
        }
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("mixing '{s}' is neither JSON nor kind:params")))?;
        let nums = |r: &str| -> Result<Vec<f64>> {
            r.split(',')
                .map(|x| x.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad number '{x}' in mixing '{s}'"))))
                .collect()
        };
        let want = |v: Vec<f64>, n: usize| -> Result<Vec<f64>> {
            if v.len() == n {
                Ok(v)
            } else {
                Err(Error::Config(format!("mixing '{s}' expects {n} parameter(s)")))
            }
        };
        let spec = match kind.to_ascii_lowercase().as_str() {
            "dirac" => Self::dirac(want(nums(rest)?, 1)?[0]),
            "atoms" => {
                let mut atoms = Vec::new();
                for item in rest.split(',') {
                    let (t, p) = item
                        .split_once('@')
                        .ok_or_else(|| Error::Config(format!("atom '{item}' must be theta@prob")))?;
                    let t: f64 = t.trim().parse().map_err(|_| Error::Config(format!("bad atom '{item}'")))?;
                    let p: f64 = p.trim().parse().map_err(|_| Error::Config(format!("bad atom '{item}'")))?;
                    atoms.push((t, p));
                }
                Self::atoms(atoms)
            }
            "uniform" => {
                let v = want(nums(rest)?, 2)?;
                Self::uniform(v[0], v[1])
            }
            "halfnormal" | "half_normal" => Self::half_normal(want(nums(rest)?, 1)?[0]),
            "halft" | "half_t" => {
                let v = want(nums(rest)?, 2)?;
                Self::half_t(v[0], v[1])
            }
            other => return Err(Error::Config(format!("unknown mixing kind '{other}'"))),
        };
        spec.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(spec)
    }
}

#[derive(Serialize, Deserialize)]
struct RawMixing {
    kind: String,
    params: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    nodes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    q_trunc: Option<f64>,
}

impl Serialize for MixingSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde_json::json;
        let (kind, params) = match &self.kind {
            MixingKind::Dirac(t) => ("dirac", json!([t])),
            MixingKind::Atoms(a) => ("atoms", json!(a.iter().map(|(t, p)| [*t, *p]).collect::<Vec<_>>())),
            MixingKind::Uniform { a, b } => ("uniform", json!([a, b])),
            MixingKind::HalfNormal { scale } => ("half_normal", json!([scale])),
            MixingKind::HalfT { df, scale } => ("half_t", json!([df, scale])),
        };
        RawMixing {
            kind: kind.to_string(),
            params,
            nodes: Some(self.nodes),
            q_trunc: Some(self.q_trunc),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MixingSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = RawMixing::deserialize(d)?;
        let flat = |v: &serde_json::Value| -> std::result::Result<Vec<f64>, D::Error> {
            match v {
                serde_json::Value::Number(n) => Ok(vec![n.as_f64().unwrap_or(f64::NAN)]),
                serde_json::Value::Array(a) => a
                    .iter()
                    .map(|x| x.as_f64().ok_or_else(|| D::Error::custom("params must be numbers")))
                    .collect(),
                _ => Err(D::Error::custom("params must be a number or an array")),
            }
        };
        let need = |v: Vec<f64>, n: usize| -> std::result::Result<Vec<f64>, D::Error> {
            if v.len() == n {
                Ok(v)
            } else {
                Err(D::Error::custom(format!("mixing kind '{}' expects {n} parameter(s)", raw.kind)))
            }
        };
        let kind = match raw.kind.to_ascii_lowercase().as_str() {
            "dirac" => MixingKind::Dirac(need(flat(&raw.params)?, 1)?[0]),
            "atoms" => {
                let arr = raw.params.as_array().ok_or_else(|| D::Error::custom("atoms params must be [[theta, prob], ...]"))?;
                let mut atoms = Vec::with_capacity(arr.len());
                for item in arr {
                    let pair = need(flat(item)?, 2)?;
                    atoms.push((pair[0], pair[1]));
                }
                MixingKind::Atoms(atoms)
            }
            "uniform" => {
                let v = need(flat(&raw.params)?, 2)?;
                MixingKind::Uniform { a: v[0], b: v[1] }
            }
            "half_normal" | "halfnormal" => MixingKind::HalfNormal { scale: need(flat(&raw.params)?, 1)?[0] },
            "half_t" | "halft" => {
                let v = need(flat(&raw.params)?, 2)?;
                MixingKind::HalfT { df: v[0], scale: v[1] }
            }
            other => return Err(D::Error::custom(format!("unknown mixing kind '{other}'"))),
        };
        let spec = MixingSpec {
            kind,
            nodes: raw.nodes.unwrap_or(DEFAULT_NODES),
            q_trunc: raw.q_trunc.unwrap_or(DEFAULT_Q_TRUNC),
        };
        spec.validate().map_err(D::Error::custom)?;
        Ok(spec)
    }
}

/// Realises μ as weighted nodes.
///
/// Uniform kinds use Gauss–Legendre nodes on `[a, b]`; half-normal and half-t
/// use `M` equal-weight nodes at the midpoint quantiles of the law truncated
/// at `q_trunc`.
pub fn discretize(spec: &MixingSpec) -> Result<ParticleMeasure> {
    spec.validate()?;
    let m = spec.nodes;
    match &spec.kind {
        MixingKind::Dirac(t) => ParticleMeasure::from_weights(vec![*t], vec![1.0]),
        MixingKind::Atoms(atoms) => {
            let (nodes, weights): (Vec<f64>, Vec<f64>) = atoms.iter().filter(|a| a.1 > 0.0).copied().unzip();
            ParticleMeasure::from_weights(nodes, weights)
        }
        MixingKind::Uniform { a, b } => {
            if a == b {
                return ParticleMeasure::from_weights(vec![*a], vec![1.0]);
            }
            let (x, w) = gauss_legendre_on(m, *a, *b);
            let len = b - a;
            ParticleMeasure::from_weights(x, w.into_iter().map(|w| w / len).collect())
        }
        MixingKind::HalfNormal { scale } => {
            let nodes = midpoint_levels(m, spec.q_trunc)
                .map(|u| normal_quantile(0.5 * (1.0 + u)).map(|z| scale * z))
                .collect::<Result<Vec<f64>>>()?;
            ParticleMeasure::from_weights(nodes, vec![1.0 / m as f64; m])
        }
        MixingKind::HalfT { df, scale } => {
            let cdf = HalfTCdf::new(*df);
            let nodes: Vec<f64> = midpoint_levels(m, spec.q_trunc).map(|u| scale * cdf.quantile(u)).collect();
            ParticleMeasure::from_weights(nodes, vec![1.0 / m as f64; m])
        }
    }
}

fn midpoint_levels(m: usize, q: f64) -> impl Iterator<Item = f64> {
    (0..m).map(move |i| q * (i as f64 + 0.5) / m as f64)
}

/// CDF of `|T_ν|` by quadrature.
///
/// With `T = √ν tan φ` the angle has density ∝ cos^{ν-1} φ on [0, π/2). The
/// survival function is integrated from the top in ψ = π/2 − φ. For ν < 1
/// the substitution ψ = r^{1/ν} turns the endpoint singularity into the
/// bounded integrand `(sin ψ / ψ)^{ν-1} / ν`.
pub struct HalfTCdf {
    df: f64,
    total: f64,
    rule: (Vec<f64>, Vec<f64>),
}

impl HalfTCdf {
    pub fn new(df: f64) -> Self {
        let rule = gauss_legendre(64);
        let mut c = HalfTCdf { df, total: 1.0, rule };
        c.total = c.upper_mass(FRAC_PI_2);
        c
    }

    // ∫_0^{psi0} sin^{ν-1}(ψ) dψ
    fn upper_mass(&self, psi0: f64) -> f64 {
        let nu = self.df;
        let (x, w) = &self.rule;
        // Below one degree of freedom the integrand is singular at 0, so work in r = ψ^ν.
        let (panels, top, map): (usize, f64, &dyn Fn(f64) -> f64) = if nu < 1.0 {
            (8, psi0.powf(nu), &|r: f64| {
                let psi = r.powf(1.0 / nu);
                let ratio = if psi > 0.0 { psi.sin() / psi } else { 1.0 };
                ratio.powf(nu - 1.0) / nu
            })
        } else {
            (32, psi0, &|psi: f64| psi.sin().powf(nu - 1.0))
        };
        let mut total = 0.0;
        for p in 0..panels {
            let lo = top * p as f64 / panels as f64;
            let hi = top * (p + 1) as f64 / panels as f64;
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            for (xi, wi) in x.iter().zip(w) {
                total += wi * half * map(mid + half * xi);
            }
        }
        total
    }

    pub fn survival(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        let psi0 = (self.df.sqrt() / x).atan();
        self.upper_mass(psi0) / self.total
    }

    pub fn cdf(&self, x: f64) -> f64 {
        1.0 - self.survival(x)
    }

    /// Bisection in ψ on the integrated survival function.
    pub fn quantile(&self, p: f64) -> f64 {
        let target = 1.0 - p;
        let (mut lo, mut hi) = (0.0f64, FRAC_PI_2);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if self.upper_mass(mid) / self.total < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let psi = 0.5 * (lo + hi);
        self.df.sqrt() / psi.tan()
    }
}

/// `log v_{n,k}(α, θ) = log[∏_{i=1}^{k-1}(θ + iα) / ∏_{i=1}^{n-1}(θ + i)]`.
pub fn exact_log_v(theta: f64, n: usize, k: usize, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha {alpha} must lie in (0,1)")));
    }
    if k == 0 || k > n {
        return Err(Error::invalid(format!("need 1 <= k <= n, got k={k}, n={n}")));
    }
    if !(theta > -alpha) {
        return Err(Error::SupportViolation { theta, alpha });
    }
    let (nf, kf) = (n as f64, k as f64);
    let r = theta / alpha;
    let num = (kf - 1.0) * alpha.ln() + ln_gamma(r + kf) - ln_gamma(r + 1.0);
    let den = ln_gamma(theta + nf) - ln_gamma(theta + 1.0);
    Ok(num - den)
}

/// The two predictive weight ratios at a given `(n, k)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepRatios {
    /// `v_{n+1,k+1} / v_{n,k}`, the new-block probability.
    pub new_block: f64,
    /// `v_{n+1,k} / v_{n,k}`, multiplied by `|U_i| − α` for block `i`.
    pub existing: f64,
}

/// Weighted nodes `{(θ_j, w_j)}` standing for the tilted measure μ_{n,k}.
///
/// Weights are stored normalised in linear space. Each step multiplies them
/// by a factor bounded away from 0 and ∞ and divides by the step's ratio,
/// which is exactly the normaliser, so no separate log-sum-exp pass is needed.
#[derive(Clone, Debug)]
pub struct ParticleMeasure {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    base: Vec<f64>,
    existing_buf: Vec<f64>,
    new_buf: Vec<f64>,
    prepared: Option<(usize, usize, f64, StepRatios)>,
}

impl ParticleMeasure {
    /// Builds a measure from nodes and nonnegative (not necessarily
    /// normalised) weights. The result is also the untilted base measure.
    pub fn from_weights(nodes: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() || nodes.len() != weights.len() {
            return Err(Error::invalid("nodes and weights must be nonempty and of equal length"));
        }
        if nodes.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid("non-finite node"));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::invalid("weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::invalid("weights sum to zero"));
        }
        let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let m = nodes.len();
        Ok(ParticleMeasure {
            nodes,
            base: weights.clone(),
            weights,
            existing_buf: vec![0.0; m],
            new_buf: vec![0.0; m],
            prepared: None,
        })
    }

    /// Restores the untilted weights of μ.
    pub fn reset(&mut self) {
        self.weights.copy_from_slice(&self.base);
        self.prepared = None;
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weights of the untilted measure μ.
    pub fn base_weights(&self) -> &[f64] {
        &self.base
    }

    pub fn log_weights(&self) -> Vec<f64> {
        self.weights.iter().map(|w| w.ln()).collect()
    }

    pub fn min_node(&self) -> f64 {
        self.nodes.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_node(&self) -> f64 {
        self.nodes.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn check_support(&self, alpha: f64) -> Result<()> {
        let lo = self.min_node();
        if lo > -alpha {
            Ok(())
        } else {
            Err(Error::SupportViolation { theta: lo, alpha })
        }
    }

    /// `Σ_j w_j f(θ_j)`.
    pub fn expectation<F: Fn(f64) -> f64>(&self, f: F) -> Result<f64> {
        let mut acc = 0.0;
        for (&t, &w) in self.nodes.iter().zip(&self.weights) {
            let v = f(t);
            if !v.is_finite() {
                return Err(Error::Numerical(format!("integrand is {v} at θ = {t}")));
            }
            acc += w * v;
        }
        Ok(acc)
    }

    /// `∫ (θ + kα) / (θ + n) dμ_{n,k}`.
    pub fn ratio_new_block(&self, n: usize, k: usize, alpha: f64) -> Result<f64> {
        check_nk(n, k, alpha)?;
        let (kf, nf) = (k as f64, n as f64);
        let mut acc = 0.0;
        for (&t, &w) in self.nodes.iter().zip(&self.weights) {
            if !(t + kf * alpha > 0.0) {
                return Err(Error::SupportViolation { theta: t, alpha });
            }
            acc += w * (t + kf * alpha) / (t + nf);
        }
        Ok(acc)
    }

    /// `∫ 1 / (θ + n) dμ_{n,k}`.
    pub fn ratio_existing(&self, n: usize) -> f64 {
        let nf = n as f64;
        self.nodes.iter().zip(&self.weights).map(|(&t, &w)| w / (t + nf)).sum()
    }

    /// Both ratios in one pass, keeping the per-node products for the
    /// following [`commit`](Self::commit).
    pub(crate) fn prepare(&mut self, n: usize, k: usize, alpha: f64) -> StepRatios {
        if let Some((pn, pk, pa, r)) = self.prepared {
            if pn == n && pk == k && pa == alpha {
                return r;
            }
        }
        let (nf, ka) = (n as f64, k as f64 * alpha);
        let ratios = if self.nodes.len() == 1 {
            let t = self.nodes[0];
            StepRatios { new_block: (t + ka) / (t + nf), existing: 1.0 / (t + nf) }
        } else {
            let mut sum_e = 0.0;
            let mut sum_n = 0.0;
            for (((&t, &w), e), b) in self
                .nodes
                .iter()
                .zip(&self.weights)
                .zip(self.existing_buf.iter_mut())
                .zip(self.new_buf.iter_mut())
            {
                let a = w / (t + nf);
                *e = a;
                *b = a * (t + ka);
                sum_e += a;
                sum_n += *b;
            }
            StepRatios { new_block: sum_n, existing: sum_e }
        };
        self.prepared = Some((n, k, alpha, ratios));
        ratios
    }

    /// Moves the weights from μ_{n,k} to μ_{n+1,k+1} (new block) or
    /// μ_{n+1,k} (existing block). The `(|U_i| − α)` factor does not depend
    /// on θ and cancels on normalisation.
    pub(crate) fn commit(&mut self, n: usize, k: usize, alpha: f64, new_block: bool) {
        let r = self.prepare(n, k, alpha);
        self.prepared = None;
        if self.nodes.len() == 1 {
            return;
        }
        let (buf, norm) = if new_block { (&mut self.new_buf, r.new_block) } else { (&mut self.existing_buf, r.existing) };
        std::mem::swap(&mut self.weights, buf);
        let inv = 1.0 / norm;
        for w in self.weights.iter_mut() {
            *w *= inv;
            if *w < f64::MIN_POSITIVE {
                *w = 0.0;
            }
        }
    }

    /// Tilts from `(n, k)` to the next state; see [`commit`](Self::commit).
    pub fn update_after_step(&mut self, n: usize, k: usize, alpha: f64, new_block: bool) -> Result<()> {
        check_nk(n, k, alpha)?;
        self.check_support(alpha)?;
        self.commit(n, k, alpha, new_block);
        Ok(())
    }

    /// Resets the weights to `μ_j v_{n,k}(α, θ_j)` normalised, computed
    /// directly from the closed-form Ewens–Pitman weights.
    pub fn tilt_exact(&mut self, n: usize, k: usize, alpha: f64) -> Result<()> {
        let logs = self
            .nodes
            .iter()
            .zip(&self.base)
            .map(|(&t, &b)| Ok(if b > 0.0 { b.ln() + exact_log_v(t, n, k, alpha)? } else { f64::NEG_INFINITY }))
            .collect::<Result<Vec<f64>>>()?;
        let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let total: f64 = logs.iter().map(|l| (l - top).exp()).sum();
        let lse = top + total.ln();
        for (w, l) in self.weights.iter_mut().zip(&logs) {
            *w = (l - lse).exp();
        }
        self.prepared = None;
        Ok(())
    }

    /// `v_{n,k} = Σ_j μ_j v_{n,k}(α, θ_j)` for the base measure.
    pub fn mixture_v(&self, n: usize, k: usize, alpha: f64) -> Result<f64> {
        let mut acc = 0.0;
        for (&t, &b) in self.nodes.iter().zip(&self.base) {
            if b > 0.0 {
                acc += b * exact_log_v(t, n, k, alpha)?.exp();
            }
        }
        Ok(acc)
    }
}

fn check_nk(n: usize, k: usize, alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha {alpha} must lie in (0,1)")));
    }
    if k == 0 || k > n {
        return Err(Error::invalid(format!("need 1 <= k <= n, got k={k}, n={n}")));
    }
    Ok(())
}

/// Largest deviation allowed by the concentration bounds at size `n`:
/// `sup_{θ ∈ [lo, hi]} |θ| / (θ + n)`.
///
/// When `lo ≤ 0 ≤ hi` this is at most `(hi − lo) / (n + lo)`.
pub fn concentration_radius(lo: f64, hi: f64, n: usize) -> f64 {
    let nf = n as f64;
    (lo.abs() / (lo + nf)).max(hi.abs() / (hi + nf))
}
