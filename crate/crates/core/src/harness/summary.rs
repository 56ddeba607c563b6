use super::{Experiment, ExperimentConfig, ReplicateRecord};
use crate::error::{Error, Result};
use crate::sibuya::{fisher_info, DEFAULT_TOL};
use crate::stats::{
    chi2_1_cdf, chi2_1_quantile, half_normal_cdf, half_normal_quantile, kde_mode_count, ks_distance, ln_gamma, mean,
    normal_cdf, normal_quantile, ols_slope, quantile_sorted, std_error, variance,
};
use serde::{Deserialize, Serialize};

/// Probability levels for QQ output: 0.005, 0.010, …, 0.995.
pub const QQ_LEVELS: usize = 199;
const HIST_BINS: usize = 40;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatSummary {
    pub count: usize,
    pub mean: f64,
    pub sd: f64,
    pub se: f64,
    pub min: f64,
    pub max: f64,
    pub q05: f64,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    pub q95: f64,
}

impl StatSummary {
    pub fn of(values: &[f64]) -> Option<Self> {
        let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let (sd, se) = if v.len() > 1 { (variance(&v).sqrt(), std_error(&v)) } else { (0.0, 0.0) };
        Some(StatSummary {
            count: v.len(),
            mean: mean(&v),
            sd,
            se,
            min: v[0],
            max: v[v.len() - 1],
            q05: quantile_sorted(&v, 0.05),
            q25: quantile_sorted(&v, 0.25),
            q50: quantile_sorted(&v, 0.5),
            q75: quantile_sorted(&v, 0.75),
            q95: quantile_sorted(&v, 0.95),
        })
    }
}

/// Empirical against reference quantiles for one normalised statistic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QqSeries {
    pub statistic: String,
    pub reference: String,
    pub ks: f64,
    pub probs: Vec<f64>,
    pub empirical: Vec<f64>,
    pub theoretical: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageSummary {
    pub covered: usize,
    pub total: usize,
    pub rate: f64,
    /// `√(p̂(1 − p̂)/reps)`.
    pub se: f64,
    pub nominal: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiversitySummary {
    pub mode_count: usize,
    pub hist_edges: Vec<f64>,
    pub hist_counts: Vec<usize>,
    /// Bounds on `E[S]` from the extreme support points of μ; `None` when
    /// the support is unbounded above.
    pub moment_band_lower: f64,
    pub moment_band_upper: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub n: usize,
    pub mean_k: f64,
    pub mean_tv: f64,
    pub se_tv: f64,
    pub mean_tv_freq: f64,
    pub se_tv_freq: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub experiment: Experiment,
    pub n: usize,
    pub replicates: usize,
    pub alpha: f64,
    pub mixing: String,
    pub master_seed: u64,
    pub failures: usize,
    pub fisher_info: f64,
    pub kn_over_nalpha: Option<StatSummary>,
    pub alpha_hat: Option<StatSummary>,
    pub stat_qmle: Option<StatSummary>,
    pub stat_tv: Option<StatSummary>,
    pub stat_kl: Option<StatSummary>,
    pub qq: Vec<QqSeries>,
    pub coverage: Option<CoverageSummary>,
    pub diversity: Option<DiversitySummary>,
    pub levels: Vec<LevelSummary>,
    pub slope_tv: Option<f64>,
    pub slope_tv_freq: Option<f64>,
    pub expected_slope_tv: Option<f64>,
    pub expected_slope_tv_freq: Option<f64>,
}

/// `Γ(θ + 1) / (α Γ(θ + α))`, the mean of the α-diversity under `δ_θ`.
pub fn diversity_mean(alpha: f64, theta: f64) -> f64 {
    (ln_gamma(theta + 1.0) - ln_gamma(theta + alpha)).exp() / alpha
}

fn column(records: &[&ReplicateRecord], f: impl Fn(&ReplicateRecord) -> Option<f64>) -> Vec<f64> {
    records.iter().filter_map(|r| f(r)).filter(|x| x.is_finite()).collect()
}

pub fn qq_series(statistic: &str, values: &[f64], reference: &str) -> Result<QqSeries> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return Err(Error::Numerical(format!("no finite values of {statistic}")));
    }
    v.sort_by(f64::total_cmp);
    let (cdf, quantile): (fn(f64) -> f64, fn(f64) -> Result<f64>) = match reference {
        "normal" => (normal_cdf, normal_quantile),
        "half_normal" => (half_normal_cdf, half_normal_quantile),
        "chi2_1" => (chi2_1_cdf, chi2_1_quantile),
        other => return Err(Error::invalid(format!("unknown reference law '{other}'"))),
    };
    let probs: Vec<f64> = (1..=QQ_LEVELS).map(|i| i as f64 / (QQ_LEVELS + 1) as f64).collect();
    let empirical = probs.iter().map(|&p| quantile_sorted(&v, p)).collect();
    let theoretical = probs.iter().map(|&p| quantile(p)).collect::<Result<Vec<f64>>>()?;
    Ok(QqSeries {
        statistic: statistic.to_string(),
        reference: reference.to_string(),
        ks: ks_distance(&v, cdf)?,
        probs,
        empirical,
        theoretical,
    })
}

pub fn summarize(cfg: &ExperimentConfig, records: &[ReplicateRecord]) -> Result<Summary> {
    let failures = {
        let mut ids: Vec<u64> = records.iter().filter(|r| r.error.is_some()).map(|r| r.replicate_id).collect();
        ids.dedup();
        ids.len()
    };
    let ok: Vec<&ReplicateRecord> = records.iter().filter(|r| r.error.is_none() && r.n == cfg.n).collect();
    let alpha = cfg.alpha;
    let mut s = Summary {
        experiment: cfg.experiment,
        n: cfg.n,
        replicates: cfg.replicates,
        alpha,
        mixing: cfg.mixing.to_string(),
        master_seed: cfg.master_seed,
        failures,
        fisher_info: fisher_info(alpha, DEFAULT_TOL)?.value,
        kn_over_nalpha: StatSummary::of(&column(&ok, |r| Some(r.kn_over_nalpha))),
        alpha_hat: StatSummary::of(&column(&ok, |r| r.alpha_hat)),
        stat_qmle: StatSummary::of(&column(&ok, |r| r.stat_qmle)),
        stat_tv: StatSummary::of(&column(&ok, |r| r.stat_tv)),
        stat_kl: StatSummary::of(&column(&ok, |r| r.stat_kl)),
        qq: Vec::new(),
        coverage: None,
        diversity: None,
        levels: Vec::new(),
        slope_tv: None,
        slope_tv_freq: None,
        expected_slope_tv: None,
        expected_slope_tv_freq: None,
    };
    match cfg.experiment {
        Experiment::QQ | Experiment::Coverage => {
            for (name, reference, f) in [
                ("stat_qmle", "normal", (|r: &ReplicateRecord| r.stat_qmle) as fn(&ReplicateRecord) -> Option<f64>),
                ("stat_tv", "half_normal", |r| r.stat_tv),
                ("stat_kl", "chi2_1", |r| r.stat_kl),
            ] {
                let v = column(&ok, f);
                if !v.is_empty() {
                    s.qq.push(qq_series(name, &v, reference)?);
                }
            }
            if cfg.experiment == Experiment::Coverage {
                let flags: Vec<bool> = ok.iter().filter_map(|r| r.covered).collect();
                if !flags.is_empty() {
                    let covered = flags.iter().filter(|&&c| c).count();
                    let total = flags.len();
                    let rate = covered as f64 / total as f64;
                    s.coverage = Some(CoverageSummary {
                        covered,
                        total,
                        rate,
                        se: (rate * (1.0 - rate) / total as f64).sqrt(),
                        nominal: 1.0 - cfg.eps,
                    });
                }
            }
        }
        Experiment::DiversityHist => {
            let v = column(&ok, |r| Some(r.kn_over_nalpha));
            if !v.is_empty() {
                let (lo, hi) = cfg.mixing.support_bounds();
                let lo_v = v.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi_v = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let width = ((hi_v - lo_v) / HIST_BINS as f64).max(f64::MIN_POSITIVE);
                let mut counts = vec![0usize; HIST_BINS];
                for x in &v {
                    counts[(((x - lo_v) / width) as usize).min(HIST_BINS - 1)] += 1;
                }
                s.diversity = Some(DiversitySummary {
                    mode_count: kde_mode_count(&v),
                    hist_edges: (0..=HIST_BINS).map(|i| lo_v + width * i as f64).collect(),
                    hist_counts: counts,
                    moment_band_lower: diversity_mean(alpha, lo),
                    moment_band_upper: hi.is_finite().then(|| diversity_mean(alpha, hi)),
                });
            }
        }
        Experiment::RateSweep => {
            let all: Vec<&ReplicateRecord> = records.iter().filter(|r| r.error.is_none()).collect();
            for level in cfg.levels() {
                let at: Vec<&ReplicateRecord> = all.iter().copied().filter(|r| r.n == level).collect();
                let tv = column(&at, |r| r.tv);
                let tvf = column(&at, |r| r.tv_freq);
                if tv.len() < 2 || tvf.len() < 2 {
                    continue;
                }
                s.levels.push(LevelSummary {
                    n: level,
                    mean_k: mean(&at.iter().map(|r| r.k_n as f64).collect::<Vec<_>>()),
                    mean_tv: mean(&tv),
                    se_tv: std_error(&tv),
                    mean_tv_freq: mean(&tvf),
                    se_tv_freq: std_error(&tvf),
                });
            }
            if s.levels.len() >= 2 {
                let ln: Vec<f64> = s.levels.iter().map(|l| (l.n as f64).ln()).collect();
                let a: Vec<f64> = s.levels.iter().map(|l| l.mean_tv.ln()).collect();
                let b: Vec<f64> = s.levels.iter().map(|l| l.mean_tv_freq.ln()).collect();
                s.slope_tv = Some(ols_slope(&ln, &a));
                s.slope_tv_freq = Some(ols_slope(&ln, &b));
            }
            s.expected_slope_tv = Some(-(1.0 - alpha / 2.0));
            s.expected_slope_tv_freq = Some(-(1.0 - alpha));
        }
    }
    Ok(s)
}
