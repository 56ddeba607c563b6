//! Replicated Monte Carlo experiments.
//!
//! Replicate `r` draws from its own generator seeded by
//! `replicate_seed(master_seed, r)`, so results do not depend on how
//! replicates are spread over threads. Rows are gathered in replicate order
//! before anything is written.

mod summary;

pub use summary::{summarize, CoverageSummary, DiversitySummary, LevelSummary, QqSeries, StatSummary, Summary};

use crate::error::{Error, Result};
use crate::mixing::{MixingSpec, ParticleMeasure};
use crate::partition::PartitionState;
use crate::predict::{self, DeltaRule, EstimatorKind};
use crate::qmle::{qmle, QmleResult};
use crate::rng::replicate_rng;
use crate::sibuya::{fisher_info, DEFAULT_TOL};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Experiment {
    /// Histogram data for `k_n / n^α`.
    #[serde(alias = "diversity_hist", alias = "diversity")]
    DiversityHist,
    /// The three normalised statistics and their reference quantiles.
    #[serde(alias = "qq")]
    QQ,
    /// Local-interval coverage for a uniformly drawn admissible subset.
    #[serde(alias = "coverage")]
    Coverage,
    /// TV distances at `n/8, n/4, n/2, n` along the same trajectories.
    #[serde(alias = "rate_sweep", alias = "rate")]
    RateSweep,
}

impl std::str::FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::Config(format!("unknown experiment '{s}'")))
    }
}

fn default_eps() -> f64 {
    0.05
}

fn default_seed() -> u64 {
    20240601
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub n: usize,
    pub replicates: usize,
    pub alpha: f64,
    pub mixing: MixingSpec,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default)]
    pub delta_rule: DeltaRule,
    #[serde(default = "default_seed")]
    pub master_seed: u64,
    /// Worker threads; 0 uses every available core.
    #[serde(default)]
    pub threads: usize,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment, n: usize, replicates: usize, alpha: f64, mixing: MixingSpec) -> Self {
        ExperimentConfig {
            experiment,
            n,
            replicates,
            alpha,
            mixing,
            eps: default_eps(),
            delta_rule: DeltaRule::default(),
            master_seed: default_seed(),
            threads: 0,
            output_path: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.replicates < 1 {
            return bad("replicates must be at least 1".into());
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return bad(format!("eps {} must lie in (0,1)", self.eps));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha {} must lie in (0,1)", self.alpha));
        }
        let min_n = if self.experiment == Experiment::RateSweep { 8 } else { 2 };
        if self.n < min_n {
            return bad(format!("n = {} is too small (need at least {min_n})", self.n));
        }
        self.mixing.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.mixing.check_support(self.alpha).map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    /// Quarter-size run: `n` and `replicates` divided by 4.
    pub fn desk(mut self) -> Self {
        self.n = (self.n / 4).max(8);
        self.replicates = (self.replicates / 4).max(1);
        self
    }

    /// Sample sizes recorded for each replicate.
    pub fn levels(&self) -> Vec<usize> {
        match self.experiment {
            Experiment::RateSweep => vec![self.n / 8, self.n / 4, self.n / 2, self.n],
            _ => vec![self.n],
        }
    }
}

/// One CSV row. Columns that do not apply to an experiment are left empty.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub replicate_id: u64,
    pub n: usize,
    pub k_n: usize,
    pub kn_over_nalpha: f64,
    pub alpha_hat: Option<f64>,
    pub boundary: Option<bool>,
    /// `√(k 𝔦(α)) (α̂ − α)`.
    pub stat_qmle: Option<f64>,
    /// `n √(𝔦(α)/k) · tv(p̂, p)`.
    pub stat_tv: Option<f64>,
    /// `(2n/α) · KL(p̂ ‖ p)`.
    pub stat_kl: Option<f64>,
    pub tv: Option<f64>,
    pub tv_freq: Option<f64>,
    pub kl: Option<f64>,
    pub covered: Option<bool>,
    pub subset_size: Option<usize>,
    pub ci_half_width: Option<f64>,
    pub error: Option<String>,
}

pub struct ExperimentOutput {
    pub records: Vec<ReplicateRecord>,
    pub summary: Summary,
}

/// Quantities shared by every replicate.
struct Shared<'a> {
    cfg: &'a ExperimentConfig,
    pm: ParticleMeasure,
    info: f64,
    levels: Vec<usize>,
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let shared = Shared {
        cfg,
        pm: cfg.mixing.discretize()?,
        info: fisher_info(cfg.alpha, DEFAULT_TOL)?.value,
        levels: cfg.levels(),
    };
    let rows: Vec<Vec<ReplicateRecord>> =
        pool(cfg.threads)?.install(|| (0..cfg.replicates as u64).into_par_iter().map(|r| run_replicate(&shared, r)).collect());
    let records: Vec<ReplicateRecord> = rows.into_iter().flatten().collect();
    let summary = summarize(cfg, &records)?;
    Ok(ExperimentOutput { records, summary })
}

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

/// Grows `replicates` partitions to size `n`, replicate `r` drawing from
/// `replicate_rng(master_seed, r)`. Returned in replicate order.
pub fn simulate_states(
    alpha: f64,
    mixing: &MixingSpec,
    n: usize,
    replicates: usize,
    master_seed: u64,
    threads: usize,
) -> Result<Vec<PartitionState>> {
    mixing.validate()?;
    mixing.check_support(alpha)?;
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    let pm = mixing.discretize()?;
    pool(threads)?.install(|| {
        (0..replicates as u64)
            .into_par_iter()
            .map(|r| {
                let mut s = PartitionState::with_measure(alpha, pm.clone(), replicate_rng(master_seed, r))?;
                s.run_to(n)?;
                Ok(s)
            })
            .collect()
    })
}

fn run_replicate(sh: &Shared, r: u64) -> Vec<ReplicateRecord> {
    let cfg = sh.cfg;
    let mut out = Vec::with_capacity(sh.levels.len());
    let mut state = match PartitionState::with_measure(cfg.alpha, sh.pm.clone(), replicate_rng(cfg.master_seed, r)) {
        Ok(s) => s,
        Err(e) => return vec![failed(r, 1, e)],
    };
    for &level in &sh.levels {
        if let Err(e) = state.run_to(level) {
            out.push(failed(r, state.n(), e));
            return out;
        }
        let mut rec = ReplicateRecord {
            replicate_id: r,
            n: state.n(),
            k_n: state.k(),
            kn_over_nalpha: state.kn_over_nalpha(),
            ..Default::default()
        };
        if cfg.experiment != Experiment::DiversityHist {
            if let Err(e) = fill_estimates(sh, &mut state, &mut rec) {
                rec.error = Some(e.to_string());
            }
        }
        out.push(rec);
    }
    out
}

fn failed(r: u64, n: usize, e: Error) -> ReplicateRecord {
    ReplicateRecord { replicate_id: r, n, error: Some(e.to_string()), ..Default::default() }
}

fn fill_estimates(sh: &Shared, state: &mut PartitionState, rec: &mut ReplicateRecord) -> Result<()> {
    let cfg = sh.cfg;
    let (n, k, alpha) = (state.n() as f64, state.k() as f64, cfg.alpha);
    let stats = state.suff_stats();
    let est: QmleResult = qmle(&stats)?;
    rec.alpha_hat = Some(est.alpha_hat);
    rec.boundary = Some(!est.is_interior());
    let pair = predict::estimate_simplex(state, est.alpha_hat, EstimatorKind::QmleZero)?;
    let tv = predict::tv(&pair)?;
    let kl = predict::kl(&pair)?;
    rec.tv = Some(tv);
    rec.kl = Some(kl);
    rec.stat_qmle = Some((k * sh.info).sqrt() * (est.alpha_hat - alpha));
    rec.stat_tv = Some(n * (sh.info / k).sqrt() * tv);
    rec.stat_kl = Some(2.0 * n / alpha * kl);
    if cfg.experiment == Experiment::RateSweep {
        let freq = predict::estimate_simplex(state, est.alpha_hat, EstimatorKind::Frequency)?;
        rec.tv_freq = Some(predict::tv(&freq)?);
    }
    if cfg.experiment == Experiment::Coverage {
        let delta = cfg.delta_rule.delta(state.n(), state.k());
        let sizes = state.block_sizes().to_vec();
        let subset = predict::sample_subset_in(&sizes, delta, state.rng_mut())?;
        let ci = predict::local_ci(&sizes, &est, cfg.eps, &subset, delta)?;
        rec.covered = Some(ci.contains(predict::subset_mass(&pair.truth, &subset)));
        rec.subset_size = Some(subset.len());
        rec.ci_half_width = Some(ci.half_width);
    }
    Ok(())
}

/// Writes the CSV to `path` and the summary to `path` with `.summary.json`
/// appended to its stem.
pub fn write_outputs(path: &Path, out: &ExperimentOutput) -> Result<PathBuf> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    for rec in &out.records {
        w.serialize(rec)?;
    }
    w.flush()?;
    let summary_path = summary_path(path);
    std::fs::write(&summary_path, serde_json::to_string_pretty(&out.summary)?)?;
    Ok(summary_path)
}

pub fn summary_path(csv_path: &Path) -> PathBuf {
    let stem = csv_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    csv_path.with_file_name(format!("{stem}.summary.json"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(exp: Experiment) -> ExperimentConfig {
        ExperimentConfig::new(exp, 400, 12, 0.6, MixingSpec::equal_atoms(&[0.0, 3.0]))
    }

    #[test]
    fn config_round_trip_and_field_names() {
        let text = r#"{
            "experiment": "Coverage", "n": 1000, "replicates": 10, "alpha": 0.8,
            "mixing": {"kind": "dirac", "params": [0]}, "eps": 0.05,
            "delta_rule": "k_power", "master_seed": 7, "threads": 2, "output_path": "out/cov.csv"
        }"#;
        let cfg = ExperimentConfig::from_json(text).unwrap();
        assert_eq!(cfg.experiment, Experiment::Coverage);
        assert_eq!(cfg.output_path.as_deref(), Some(Path::new("out/cov.csv")));
        let again = ExperimentConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(again, cfg);
        assert!(ExperimentConfig::from_json(r#"{"experiment":"QQ","n":10,"replicates":0,"alpha":0.5,"mixing":{"kind":"dirac","params":[0]}}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"experiment":"QQ","n":10,"replicates":3,"alpha":0.5,"mixing":{"kind":"dirac","params":[0]},"eps":1.5}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"experiment":"QQ","n":10,"replicates":3,"alpha":0.5,"mixing":{"kind":"dirac","params":[0]},"bogus":1}"#).is_err());
        assert_eq!("rate_sweep".parse::<Experiment>().unwrap(), Experiment::RateSweep);
    }

    #[test]
    fn desk_preset_divides_by_four() {
        let cfg = small(Experiment::QQ).desk();
        assert_eq!((cfg.n, cfg.replicates), (100, 3));
    }

    #[test]
    fn thread_count_does_not_change_results() {
        for exp in [Experiment::QQ, Experiment::Coverage, Experiment::RateSweep, Experiment::DiversityHist] {
            let mut a = small(exp);
            a.threads = 1;
            let mut b = a.clone();
            b.threads = 3;
            let (ra, rb) = (run_experiment(&a).unwrap(), run_experiment(&b).unwrap());
            assert_eq!(ra.records, rb.records);
            let ids: Vec<u64> = ra.records.iter().map(|r| r.replicate_id).collect();
            assert!(ids.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn rate_sweep_levels() {
        let out = run_experiment(&small(Experiment::RateSweep)).unwrap();
        assert_eq!(out.records.len(), 12 * 4);
        assert_eq!(out.records[..4].iter().map(|r| r.n).collect::<Vec<_>>(), vec![50, 100, 200, 400]);
        assert!(out.records.iter().all(|r| r.tv_freq.is_some()));
    }

    #[test]
    fn outputs_are_written() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("qq.csv");
        let out = run_experiment(&small(Experiment::QQ)).unwrap();
        let sp = write_outputs(&path, &out).unwrap();
        assert_eq!(sp, dir.path().join("qq.summary.json"));
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("replicate_id,n,k_n,kn_over_nalpha,alpha_hat"));
        assert_eq!(text.lines().count(), 13);
        let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(sp).unwrap()).unwrap();
        assert_eq!(json["replicates"], 12);
    }
}
