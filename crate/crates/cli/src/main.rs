use clap::{Args, Parser, Subcommand};
use gplab::harness::{self, run_experiment, write_outputs, Experiment, ExperimentConfig};
use gplab::partition::{write_csv, PartitionState, SuffStats};
use gplab::predict::{self, DeltaRule, EstimatorKind};
use gplab::qmle::{ci_alpha, naive_estimate};
use gplab::rng::rng_from_seed;
use gplab::sibuya::{fisher_info, DEFAULT_TOL};
use gplab::{qmle, Error, MixingSpec, QmleResult, Result};
use serde::Serialize;
use serde_json::{json, Value};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const DEFAULT_SEED: u64 = 20240601;

#[derive(Parser)]
#[command(name = "gplab", version, about = "Exchangeable Gibbs partitions: simulation, estimation of α, prediction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Grow partitions and write their sufficient statistics as CSV.
    Simulate(SimulateArgs),
    /// Estimate α from sufficient statistics (CSV or JSON).
    Estimate(EstimateArgs),
    /// Compare the estimated predictive simplex with the true one.
    Predict(PredictArgs),
    /// Run a replicated experiment and write CSV plus JSON summary.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct ModelArgs {
    /// Number of elements.
    #[arg(long)]
    n: usize,
    #[arg(long)]
    alpha: f64,
    /// Mixing distribution: JSON object or inline form such as `dirac:0`,
    /// `atoms:0@0.5,3@0.5`, `uniform:0,3`, `halfnormal:1`, `halft:3,1`.
    #[arg(long, default_value = "dirac:0")]
    mixing: MixingSpec,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 1)]
    reps: usize,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write each final state (block sizes, tilted weights) as JSON.
    #[arg(long)]
    dump_state: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    /// CSV written by `simulate`, or JSON: a stats object, a list of them, or
    /// `{"block_sizes": [...]}`. Reads standard input when absent.
    input: Option<PathBuf>,
    /// Comma-separated block sizes instead of an input file.
    #[arg(long, conflicts_with = "input")]
    sizes: Option<String>,
    #[arg(long, default_value_t = 0.05)]
    eps: f64,
}

#[derive(Args)]
struct PredictArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Use these block sizes (comma-separated) instead of simulating; their
    /// sum overrides --n.
    #[arg(long)]
    sizes: Option<String>,
    /// Simplex indices (0 is the new block) for subset intervals.
    #[arg(long)]
    subset: Option<String>,
    /// Number of largest blocks shown in the simplex listing.
    #[arg(long, default_value_t = 10)]
    top_k: usize,
    #[arg(long, default_value_t = 0.05)]
    eps: f64,
    /// `kpower` (δ = k^-0.51) or `log` (δ = max(1/(√k ln n), 1/k)).
    #[arg(long, default_value = "kpower")]
    delta_rule: DeltaRule,
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON configuration; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `diversity`, `qq`, `coverage` or `rate`.
    #[arg(long)]
    kind: Option<Experiment>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    mixing: Option<MixingSpec>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    delta_rule: Option<DeltaRule>,
    #[arg(long)]
    threads: Option<usize>,
    /// `desk` divides n and the replicate count by 4.
    #[arg(long)]
    preset: Option<String>,
    /// CSV destination; the summary goes next to it as `<stem>.summary.json`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Estimate(a) => estimate(a),
        Command::Predict(a) => predict_cmd(a),
        Command::Experiment(a) => experiment(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn print_json<T: Serialize>(v: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(v)?;
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn parse_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse::<usize>().map_err(|_| Error::Config(format!("bad index or size '{t}'"))))
        .collect()
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let m = &a.model;
    if a.reps == 0 {
        return Err(Error::Config("--reps must be at least 1".into()));
    }
    let states = harness::simulate_states(m.alpha, &m.mixing, m.n, a.reps, m.seed, a.threads)?;
    let rows: Vec<(u64, SuffStats)> = states.iter().enumerate().map(|(r, s)| (r as u64, s.suff_stats())).collect();
    match &a.out {
        Some(path) => write_csv(std::fs::File::create(path)?, &rows)?,
        None => write_csv(std::io::stdout().lock(), &rows)?,
    }
    if let Some(path) = &a.dump_state {
        let dumps: Vec<_> = states.iter().map(PartitionState::dump).collect();
        std::fs::write(path, serde_json::to_string(&dumps)?)?;
    }
    Ok(())
}

fn read_stats(input: Option<&Path>) -> Result<Vec<(u64, SuffStats)>> {
    let text = match input {
        Some(p) => std::fs::read_to_string(p).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", p.display()))))?,
        None => std::io::read_to_string(std::io::stdin())?,
    };
    let trimmed = text.trim_start();
    if !(trimmed.starts_with('{') || trimmed.starts_with('[')) {
        return SuffStats::read_csv(text.as_bytes());
    }
    let value: Value = serde_json::from_str(trimmed)?;
    let items = match value {
        Value::Array(v) => v,
        other => vec![other],
    };
    items
        .into_iter()
        .enumerate()
        .map(|(i, item)| {
            let stats = if let Some(sizes) = item.get("block_sizes") {
                let sizes: Vec<usize> = serde_json::from_value(sizes.clone())?;
                SuffStats::from_block_sizes(&sizes)?
            } else {
                let s: SuffStats = serde_json::from_value(item)?;
                s.validate()?;
                s
            };
            Ok((i as u64, stats))
        })
        .collect()
}

fn estimate_json(stats: &SuffStats, est: &QmleResult, eps: f64) -> Result<Value> {
    let interior = est.is_interior();
    let ci = if interior { Some(ci_alpha(stats, est, eps)?) } else { None };
    let info = if interior { Some(fisher_info(est.alpha_hat, DEFAULT_TOL)?.value) } else { None };
    let uniform = if interior { Some(predict::uniform_ci(stats, est, eps)?) } else { None };
    Ok(json!({
        "n": stats.n,
        "k_n": stats.k_n,
        "alpha_hat": est.alpha_hat,
        "boundary": est.boundary,
        "ci_alpha": ci,
        "eps": eps,
        "naive_log_ratio": naive_estimate(stats),
        "fisher_info": info,
        "uniform_ci_half_width": uniform,
        "iterations": est.iterations,
        "residual": est.residual,
    }))
}

fn estimate(a: EstimateArgs) -> Result<()> {
    let rows = match &a.sizes {
        Some(s) => vec![(0, SuffStats::from_block_sizes(&parse_list(s)?)?)],
        None => read_stats(a.input.as_deref())?,
    };
    if rows.is_empty() {
        return Err(Error::Config("no sufficient statistics in input".into()));
    }
    let mut out = Vec::with_capacity(rows.len());
    for (id, stats) in &rows {
        let est = qmle(stats)?;
        let mut v = estimate_json(stats, &est, a.eps)?;
        v["replicate_id"] = json!(id);
        out.push(v);
    }
    if out.len() == 1 {
        print_json(&out[0])
    } else {
        print_json(&out)
    }
}

fn top_entries(p: &[f64], order: &[usize], top_k: usize) -> Vec<Value> {
    std::iter::once(0)
        .chain(order.iter().take(top_k).copied())
        .map(|i| json!({ "index": i, "p": p[i] }))
        .collect()
}

fn predict_cmd(a: PredictArgs) -> Result<()> {
    let m = &a.model;
    let state = match &a.sizes {
        Some(s) => PartitionState::from_block_sizes(m.alpha, m.mixing.discretize()?, &parse_list(s)?, rng_from_seed(m.seed))?,
        None => {
            m.mixing.check_support(m.alpha)?;
            let mut s = PartitionState::init(m.alpha, &m.mixing, m.seed)?;
            s.run_to(m.n)?;
            s
        }
    };
    let stats = state.suff_stats();
    let est = qmle(&stats)?;
    let pair = predict::estimate_simplex(&state, est.alpha_hat, EstimatorKind::QmleZero)?;
    let freq = predict::estimate_simplex(&state, est.alpha_hat, EstimatorKind::Frequency)?;
    let sizes = state.block_sizes();
    // Simplex indices 1..=k ordered by block size, largest first.
    let mut order: Vec<usize> = (1..=sizes.len()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(sizes[i - 1]));

    let mut out = json!({
        "n": state.n(),
        "k_n": state.k(),
        "alpha": m.alpha,
        "mixing": m.mixing.to_string(),
        "alpha_hat": est.alpha_hat,
        "boundary": est.boundary,
        "truth": top_entries(&pair.truth, &order, a.top_k),
        "estimate": top_entries(&pair.estimate, &order, a.top_k),
        "tv": predict::tv(&pair)?,
        "kl": predict::kl(&pair).ok(),
        "tv_frequency": predict::tv(&freq)?,
        "eps": a.eps,
    });
    if est.is_interior() {
        out["uniform_ci_half_width"] = json!(predict::uniform_ci(&stats, &est, a.eps)?);
    }
    if let Some(spec) = &a.subset {
        let subset = parse_list(spec)?;
        let uniform = predict::uniform_subset_ci(sizes, &est, a.eps, &subset);
        let delta = a.delta_rule.delta(state.n(), state.k());
        let local = predict::local_ci(sizes, &est, a.eps, &subset, delta);
        let show = |r: Result<predict::SubsetCi>| match r {
            Ok(ci) => json!({ "center": ci.center, "half_width": ci.half_width }),
            Err(e) => json!({ "error": e.to_string() }),
        };
        out["subset"] = json!({
            "indices": subset,
            "truth": predict::subset_mass(&pair.truth, &subset),
            "estimate": predict::subset_mass(&pair.estimate, &subset),
            "delta": delta,
            "uniform": show(uniform),
            "local": show(local),
        });
    }
    print_json(&out)
}

fn experiment(a: ExperimentArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => {
            let missing = |f: &str| Error::Config(format!("--{f} is required without --config"));
            ExperimentConfig::new(
                a.kind.ok_or_else(|| missing("kind"))?,
                a.n.ok_or_else(|| missing("n"))?,
                a.reps.ok_or_else(|| missing("reps"))?,
                a.alpha.ok_or_else(|| missing("alpha"))?,
                a.mixing.clone().ok_or_else(|| missing("mixing"))?,
            )
        }
    };
    if let Some(k) = a.kind {
        cfg.experiment = k;
    }
    if let Some(v) = a.n {
        cfg.n = v;
    }
    if let Some(v) = a.reps {
        cfg.replicates = v;
    }
    if let Some(v) = a.alpha {
        cfg.alpha = v;
    }
    if let Some(v) = a.mixing {
        cfg.mixing = v;
    }
    if let Some(v) = a.seed {
        cfg.master_seed = v;
    }
    if let Some(v) = a.eps {
        cfg.eps = v;
    }
    if let Some(v) = a.delta_rule {
        cfg.delta_rule = v;
    }
    if let Some(v) = a.threads {
        cfg.threads = v;
    }
    if let Some(v) = a.out {
        cfg.output_path = Some(v);
    }
    match a.preset.as_deref() {
        None => {}
        Some("desk") => cfg = cfg.desk(),
        Some(other) => return Err(Error::Config(format!("unknown preset '{other}'"))),
    }
    cfg.validate()?;
    let out = run_experiment(&cfg)?;
    if let Some(path) = &cfg.output_path {
        let summary = write_outputs(path, &out)?;
        eprintln!("wrote {} and {}", path.display(), summary.display());
    }
    print_json(&out.summary)
}
