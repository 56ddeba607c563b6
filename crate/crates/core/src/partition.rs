//! Sequential construction of the Gibbs partition.
//!
//! Only block sizes are tracked. Element `n + 1` opens a new block with
//! probability `v_{n+1,k+1} / v_{n,k}` and otherwise joins block `i` with
//! probability proportional to `|U_i| − α`.

use crate::error::{Error, Result};
use crate::mixing::{MixingSpec, ParticleMeasure};
use crate::rng::{rng_from_seed, GpRng};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Largest `n` accepted by [`enumerate_exact`].
pub const MAX_ENUMERATION_N: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Assignment {
    NewBlock,
    /// Zero-based block index in order of creation.
    Existing(usize),
}

/// Block count and size counts `k_{n,j}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuffStats {
    pub n: usize,
    pub k_n: usize,
    /// Size `j` to number of blocks of that size; zero counts are omitted.
    pub size_counts: BTreeMap<usize, usize>,
}

impl SuffStats {
    pub fn from_block_sizes(sizes: &[usize]) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::invalid("a partition needs at least one block"));
        }
        let mut size_counts = BTreeMap::new();
        for &s in sizes {
            if s == 0 {
                return Err(Error::invalid("block sizes must be positive"));
            }
            *size_counts.entry(s).or_insert(0) += 1;
        }
        Ok(SuffStats { n: sizes.iter().sum(), k_n: sizes.len(), size_counts })
    }

    pub fn from_size_counts(size_counts: BTreeMap<usize, usize>) -> Result<Self> {
        let size_counts: BTreeMap<usize, usize> = size_counts.into_iter().filter(|&(_, c)| c > 0).collect();
        let s = SuffStats {
            n: size_counts.iter().map(|(j, c)| j * c).sum(),
            k_n: size_counts.values().sum(),
            size_counts,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.size_counts.contains_key(&0) {
            return Err(Error::invalid("size 0 in size counts"));
        }
        let k: usize = self.size_counts.values().sum();
        let n: usize = self.size_counts.iter().map(|(j, c)| j * c).sum();
        if k != self.k_n || n != self.n {
            return Err(Error::invalid(format!(
                "size counts give n={n}, k={k} but stats say n={}, k={}",
                self.n, self.k_n
            )));
        }
        if self.n == 0 || self.k_n == 0 {
            return Err(Error::invalid("empty partition"));
        }
        Ok(())
    }

    /// `k_{n,j}`.
    pub fn count(&self, j: usize) -> usize {
        self.size_counts.get(&j).copied().unwrap_or(0)
    }

    /// Expands back to a nonincreasing list of block sizes.
    pub fn block_sizes(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.k_n);
        for (&j, &c) in self.size_counts.iter().rev() {
            out.extend(std::iter::repeat(j).take(c));
        }
        out
    }

    /// `replicate_id, n, k_n, j:count, ...`.
    pub fn to_csv_record(&self, replicate_id: u64) -> Vec<String> {
        let mut rec = vec![replicate_id.to_string(), self.n.to_string(), self.k_n.to_string()];
        rec.extend(self.size_counts.iter().map(|(j, c)| format!("{j}:{c}")));
        rec
    }

    pub fn from_csv_record(rec: &csv::StringRecord) -> Result<(u64, Self)> {
        let field = |i: usize| rec.get(i).ok_or_else(|| Error::Config(format!("row has only {} fields", rec.len())));
        let num = |s: &str| s.trim().parse::<u64>().map_err(|_| Error::Config(format!("bad integer '{s}'")));
        let id = num(field(0)?)?;
        let n = num(field(1)?)? as usize;
        let k = num(field(2)?)? as usize;
        let mut size_counts = BTreeMap::new();
        for f in rec.iter().skip(3).filter(|f| !f.trim().is_empty()) {
            let (j, c) = f.split_once(':').ok_or_else(|| Error::Config(format!("size count '{f}' is not j:count")))?;
            *size_counts.entry(num(j)? as usize).or_insert(0) += num(c)? as usize;
        }
        let s = SuffStats { n, k_n: k, size_counts };
        s.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok((id, s))
    }

    /// Reads every row of a CSV file written with [`write_csv`].
    pub fn read_csv<R: std::io::Read>(reader: R) -> Result<Vec<(u64, Self)>> {
        let mut rdr = csv::ReaderBuilder::new().flexible(true).has_headers(true).from_reader(reader);
        rdr.records().map(|r| Self::from_csv_record(&r?)).collect()
    }
}

pub const SUFF_STATS_HEADER: [&str; 4] = ["replicate_id", "n", "k_n", "size_counts"];

/// Writes a header and one row per snapshot. Rows have a variable number of
/// `j:count` fields.
pub fn write_csv<W: std::io::Write>(writer: W, rows: &[(u64, SuffStats)]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(writer);
    w.write_record(SUFF_STATS_HEADER)?;
    for (id, s) in rows {
        w.write_record(s.to_csv_record(*id))?;
    }
    w.flush()?;
    Ok(())
}

/// JSON trace of a state, written by `--dump-state`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StateDump {
    pub n: usize,
    pub k_n: usize,
    pub alpha: f64,
    pub block_sizes: Vec<usize>,
    pub stats: SuffStats,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// A partition of `[n]` grown one element at a time.
#[derive(Clone, Debug)]
pub struct PartitionState {
    alpha: f64,
    n: usize,
    block_sizes: Vec<usize>,
    // size_counts[j] = k_{n,j}; dense because j ≤ n and access is by index.
    size_counts: Vec<usize>,
    // Block i appears |U_i| − 1 times.
    membership: Vec<usize>,
    pm: ParticleMeasure,
    rng: GpRng,
}

impl PartitionState {
    /// The one-element partition with a fresh discretisation of `spec`.
    pub fn init(alpha: f64, spec: &MixingSpec, seed: u64) -> Result<Self> {
        check_alpha(alpha)?;
        spec.check_support(alpha)?;
        Self::with_measure(alpha, spec.discretize()?, rng_from_seed(seed))
    }

    /// The one-element partition over an already discretised measure, which
    /// is reset to its untilted weights.
    pub fn with_measure(alpha: f64, mut pm: ParticleMeasure, rng: GpRng) -> Result<Self> {
        check_alpha(alpha)?;
        pm.check_support(alpha)?;
        pm.reset();
        Ok(PartitionState {
            alpha,
            n: 1,
            block_sizes: vec![1],
            size_counts: vec![0, 1],
            membership: Vec::new(),
            pm,
            rng,
        })
    }

    /// A state holding the given block sizes, with the measure tilted to
    /// `(n, k)` in closed form.
    pub fn from_block_sizes(alpha: f64, mut pm: ParticleMeasure, sizes: &[usize], rng: GpRng) -> Result<Self> {
        check_alpha(alpha)?;
        pm.check_support(alpha)?;
        let stats = SuffStats::from_block_sizes(sizes)?;
        pm.tilt_exact(stats.n, stats.k_n, alpha)?;
        let mut size_counts = vec![0; stats.n + 1];
        let mut membership = Vec::with_capacity(stats.n - stats.k_n);
        for (i, &s) in sizes.iter().enumerate() {
            size_counts[s] += 1;
            membership.extend(std::iter::repeat(i).take(s - 1));
        }
        Ok(PartitionState { alpha, n: stats.n, block_sizes: sizes.to_vec(), size_counts, membership, pm, rng })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.block_sizes.len()
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    /// `k_{n,j}`, zero beyond the largest block.
    pub fn size_count(&self, j: usize) -> usize {
        self.size_counts.get(j).copied().unwrap_or(0)
    }

    pub fn measure(&self) -> &ParticleMeasure {
        &self.pm
    }

    pub fn rng_mut(&mut self) -> &mut GpRng {
        &mut self.rng
    }

    /// Probability that the next element opens a new block.
    pub fn p_new_block(&self) -> Result<f64> {
        self.pm.ratio_new_block(self.n, self.k(), self.alpha)
    }

    /// `[p_0, p_1, …, p_k]`: new block first, then existing blocks in order.
    pub fn true_simplex(&self) -> Result<Vec<f64>> {
        let p0 = self.pm.ratio_new_block(self.n, self.k(), self.alpha)?;
        let r = self.pm.ratio_existing(self.n);
        let mut p = Vec::with_capacity(self.k() + 1);
        p.push(p0);
        p.extend(self.block_sizes.iter().map(|&s| r * (s as f64 - self.alpha)));
        Ok(p)
    }

    /// Draws where element `n + 1` goes without changing the partition.
    pub fn draw(&mut self) -> Result<Assignment> {
        let (n, k, alpha) = (self.n, self.k(), self.alpha);
        let r = self.pm.prepare(n, k, alpha);
        let total = r.new_block + r.existing * (n as f64 - k as f64 * alpha);
        if !(r.new_block >= -1e-12 && r.new_block <= 1.0 + 1e-12) || !((total - 1.0).abs() <= 1e-10) {
            return Err(Error::Numerical(format!(
                "predictive weights corrupted at n={n}, k={k}: new-block probability {}, total {total}",
                r.new_block
            )));
        }
        if self.rng.random::<f64>() < r.new_block {
            return Ok(Assignment::NewBlock);
        }
        // |U_i| − α = (|U_i| − 1) + (1 − α): a point in [0, n − kα) lands either
        // on the membership array or on one of k equal slots of width 1 − α.
        let w = self.rng.random::<f64>() * (n as f64 - k as f64 * alpha);
        let grown = n - k;
        let i = if w < grown as f64 {
            self.membership[(w as usize).min(grown - 1)]
        } else {
            (((w - grown as f64) / (1.0 - alpha)) as usize).min(k - 1)
        };
        Ok(Assignment::Existing(i))
    }

    /// Adds element `n + 1` as directed and tilts the measure.
    pub fn apply(&mut self, a: Assignment) -> Result<()> {
        let (n, k) = (self.n, self.k());
        match a {
            Assignment::NewBlock => {
                self.pm.commit(n, k, self.alpha, true);
                self.block_sizes.push(1);
                self.bump(1);
            }
            Assignment::Existing(i) => {
                if i >= k {
                    return Err(Error::invalid(format!("block {i} does not exist (k = {k})")));
                }
                self.pm.commit(n, k, self.alpha, false);
                let s = self.block_sizes[i];
                self.block_sizes[i] = s + 1;
                self.size_counts[s] -= 1;
                self.bump(s + 1);
                self.membership.push(i);
            }
        }
        self.n += 1;
        Ok(())
    }

    fn bump(&mut self, j: usize) {
        if self.size_counts.len() <= j {
            self.size_counts.resize(j + 1, 0);
        }
        self.size_counts[j] += 1;
    }

    /// One step of the sequential construction.
    pub fn step(&mut self) -> Result<Assignment> {
        let a = self.draw()?;
        self.apply(a)?;
        Ok(a)
    }

    pub fn run_to(&mut self, n_target: usize) -> Result<SuffStats> {
        if n_target < self.n {
            return Err(Error::invalid(format!("cannot run backwards from n={} to {n_target}", self.n)));
        }
        while self.n < n_target {
            self.step()?;
        }
        Ok(self.suff_stats())
    }

    pub fn suff_stats(&self) -> SuffStats {
        let size_counts =
            self.size_counts.iter().enumerate().filter(|&(_, &c)| c > 0).map(|(j, &c)| (j, c)).collect();
        SuffStats { n: self.n, k_n: self.k(), size_counts }
    }

    /// `k_n / n^α`.
    pub fn kn_over_nalpha(&self) -> f64 {
        self.k() as f64 / (self.n as f64).powf(self.alpha)
    }

    pub fn dump(&self) -> StateDump {
        StateDump {
            n: self.n,
            k_n: self.k(),
            alpha: self.alpha,
            block_sizes: self.block_sizes.clone(),
            stats: self.suff_stats(),
            nodes: self.pm.nodes().to_vec(),
            weights: self.pm.weights().to_vec(),
        }
    }

    #[cfg(test)]
    fn check_invariants(&self) {
        let k = self.k();
        assert_eq!(self.block_sizes.iter().sum::<usize>(), self.n);
        assert_eq!(self.size_counts.iter().sum::<usize>(), k);
        assert_eq!(self.size_counts.iter().enumerate().map(|(j, c)| j * c).sum::<usize>(), self.n);
        assert_eq!(self.membership.len(), self.n - k);
        assert!(k >= 1 && k <= self.n);
        let mut seen = vec![0usize; k];
        for &i in &self.membership {
            seen[i] += 1;
        }
        for (i, &s) in self.block_sizes.iter().enumerate() {
            assert_eq!(seen[i], s - 1);
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("alpha {alpha} must lie in (0,1)")))
    }
}

/// One set partition of `[n]` and its probability.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactPartition {
    /// Restricted growth string: element `i` is in block `labels[i]`.
    pub labels: Vec<usize>,
    /// Block sizes in order of first appearance.
    pub sizes: Vec<usize>,
    pub probability: f64,
}

/// All set partitions of `[n]` with their exact probabilities
/// `Σ_j μ_j v_{n,k}(α, θ_j) ∏_blocks ∏_{i=1}^{|U|-1}(i − α)`,
/// computed by direct products.
pub fn enumerate_exact(n: usize, alpha: f64, spec: &MixingSpec) -> Result<Vec<ExactPartition>> {
    check_alpha(alpha)?;
    if n == 0 || n > MAX_ENUMERATION_N {
        return Err(Error::invalid(format!("enumeration needs 1 <= n <= {MAX_ENUMERATION_N}, got {n}")));
    }
    if !spec.is_exact() {
        return Err(Error::invalid("enumeration needs a Dirac or atomic mixing"));
    }
    spec.check_support(alpha)?;
    let pm = spec.discretize()?;
    let v = |k: usize| -> f64 {
        pm.nodes()
            .iter()
            .zip(pm.base_weights())
            .map(|(&t, &w)| {
                let num: f64 = (1..k).map(|i| t + i as f64 * alpha).product();
                let den: f64 = (1..n).map(|i| t + i as f64).product();
                w * num / den
            })
            .sum()
    };
    let block_factor = |s: usize| -> f64 { (1..s).map(|i| i as f64 - alpha).product() };
    let mut out = Vec::new();
    for labels in restricted_growth_strings(n) {
        let k = labels.iter().max().unwrap() + 1;
        let mut sizes = vec![0; k];
        for &l in &labels {
            sizes[l] += 1;
        }
        let probability = v(k) * sizes.iter().map(|&s| block_factor(s)).product::<f64>();
        out.push(ExactPartition { labels, sizes, probability });
    }
    Ok(out)
}

/// Every restricted growth string of length `n`, one per set partition.
pub fn restricted_growth_strings(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; n];
    fn rec(pos: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if pos == cur.len() {
            out.push(cur.clone());
            return;
        }
        for l in 0..=max + 1 {
            cur[pos] = l;
            rec(pos + 1, max.max(l), cur, out);
        }
    }
    if n > 0 {
        rec(1, 0, &mut cur, &mut out);
    }
    out
}

/// The assignment sequence that builds a restricted growth string from the
/// one-element partition.
pub fn assignments_of(labels: &[usize]) -> Vec<Assignment> {
    let mut k = 1;
    labels
        .iter()
        .skip(1)
        .map(|&l| {
            if l == k {
                k += 1;
                Assignment::NewBlock
            } else {
                Assignment::Existing(l)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn state(alpha: f64, spec: MixingSpec, seed: u64) -> PartitionState {
        PartitionState::init(alpha, &spec, seed).unwrap()
    }

    #[test]
    fn init_is_one_singleton() {
        let s = state(0.4, MixingSpec::dirac(0.0), 9);
        assert_eq!(s.block_sizes(), &[1]);
        assert_eq!(s.k(), 1);
        assert_eq!(s.kn_over_nalpha(), 1.0);
        assert!(PartitionState::init(1.0, &MixingSpec::dirac(0.0), 1).is_err());
        assert!(PartitionState::init(0.3, &MixingSpec::dirac(-0.5), 1).is_err());
    }

    #[test]
    fn equal_seeds_equal_trajectories() {
        let mut a = state(0.6, MixingSpec::uniform(0.0, 3.0), 77);
        let mut b = state(0.6, MixingSpec::uniform(0.0, 3.0), 77);
        for _ in 0..2000 {
            assert_eq!(a.step().unwrap(), b.step().unwrap());
        }
        assert_eq!(a.suff_stats(), b.suff_stats());
    }

    #[test]
    fn first_step_new_block_probability_is_alpha() {
        for &alpha in &[0.2, 0.5, 0.9] {
            let s = state(alpha, MixingSpec::dirac(0.0), 1);
            assert!((s.p_new_block().unwrap() - alpha).abs() < 1e-15);
        }
    }

    #[test]
    fn true_simplex_example() {
        let mut s = state(0.5, MixingSpec::dirac(0.0), 1);
        s.apply(Assignment::Existing(0)).unwrap();
        s.apply(Assignment::NewBlock).unwrap();
        let p = s.true_simplex().unwrap();
        let expect = [1.0 / 3.0, 0.5, 1.0 / 6.0];
        for (a, b) in p.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        let mut s = state(0.5, MixingSpec::dirac(3.0), 1);
        s.run_to(40).unwrap();
        let p = s.true_simplex().unwrap();
        assert!((p[0] - (3.0 + s.k() as f64 * 0.5) / 43.0).abs() < 1e-15);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn existing_block_choice_follows_size_minus_alpha() {
        // Sizes [2, 1], α = 0.5: conditional probabilities 0.75 and 0.25.
        let mut s = state(0.5, MixingSpec::dirac(0.0), 5);
        s.apply(Assignment::Existing(0)).unwrap();
        s.apply(Assignment::NewBlock).unwrap();
        let (mut first, mut existing) = (0usize, 0usize);
        let trials = 200_000;
        for _ in 0..trials {
            match s.draw().unwrap() {
                Assignment::Existing(0) => {
                    first += 1;
                    existing += 1
                }
                Assignment::Existing(_) => existing += 1,
                Assignment::NewBlock => {}
            }
        }
        let f = first as f64 / existing as f64;
        let se = (0.75f64 * 0.25 / existing as f64).sqrt();
        assert!((f - 0.75).abs() < 4.0 * se, "{f}");
        let pn = 1.0 - existing as f64 / trials as f64;
        assert!((pn - 1.0 / 3.0).abs() < 4.0 * (2.0f64 / 9.0 / trials as f64).sqrt());
    }

    #[test]
    fn frozen_state_new_block_frequency() {
        let mut s = state(0.6, MixingSpec::equal_atoms(&[0.0, 3.0]), 11);
        s.run_to(300).unwrap();
        let p = s.p_new_block().unwrap();
        let draws = 1_000_000;
        let hits = (0..draws).filter(|_| s.draw().unwrap() == Assignment::NewBlock).count();
        let se = (p * (1.0 - p) / draws as f64).sqrt();
        assert!((hits as f64 / draws as f64 - p).abs() < 4.0 * se);
    }

    #[test]
    fn run_to_current_n_is_a_no_op() {
        let mut s = state(0.5, MixingSpec::dirac(0.0), 2);
        s.run_to(30).unwrap();
        let before = s.suff_stats();
        assert_eq!(s.run_to(30).unwrap(), before);
        assert!(s.run_to(10).is_err());
    }

    #[test]
    fn invariants_hold_after_every_step() {
        let mut s = state(0.7, MixingSpec::half_normal(1.0).with_nodes(16), 3);
        for _ in 0..3000 {
            s.step().unwrap();
            s.check_invariants();
        }
        let st = s.suff_stats();
        st.validate().unwrap();
        for (j, c) in &st.size_counts {
            assert_eq!(*c, s.block_sizes().iter().filter(|&&x| x == *j).count());
        }
    }

    #[test]
    fn apply_rejects_missing_block() {
        let mut s = state(0.5, MixingSpec::dirac(0.0), 2);
        assert!(s.apply(Assignment::Existing(1)).is_err());
    }

    #[test]
    fn from_block_sizes_matches_grown_state() {
        let spec = MixingSpec::equal_atoms(&[0.0, 3.0]);
        let mut grown = state(0.4, spec.clone(), 8);
        grown.run_to(500).unwrap();
        let rebuilt =
            PartitionState::from_block_sizes(0.4, spec.discretize().unwrap(), grown.block_sizes(), rng_from_seed(0))
                .unwrap();
        rebuilt.check_invariants();
        let (a, b) = (grown.true_simplex().unwrap(), rebuilt.true_simplex().unwrap());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-10 * y);
        }
    }

    #[test]
    fn enumeration_small_cases() {
        let theta = 1.7;
        let alpha = 0.35;
        let e = enumerate_exact(2, alpha, &MixingSpec::dirac(theta)).unwrap();
        assert_eq!(e.len(), 2);
        assert!((e[0].probability - (1.0 - alpha) / (theta + 1.0)).abs() < 1e-15);
        assert!((e[1].probability - (theta + alpha) / (theta + 1.0)).abs() < 1e-15);
        let e = enumerate_exact(3, 0.5, &MixingSpec::dirac(0.0)).unwrap();
        assert!((e[0].probability - 0.375).abs() < 1e-15);
        let bell = [1, 2, 5, 15, 52, 203, 877, 4140, 21147, 115975];
        for n in 1..=MAX_ENUMERATION_N {
            let e = enumerate_exact(n, 0.3, &MixingSpec::equal_atoms(&[0.0, 3.0, 10.0])).unwrap();
            assert_eq!(e.len(), bell[n - 1]);
            let total: f64 = e.iter().map(|p| p.probability).sum();
            assert!((total - 1.0).abs() < 1e-10, "n={n}");
        }
        assert!(enumerate_exact(11, 0.3, &MixingSpec::dirac(0.0)).is_err());
        assert!(enumerate_exact(4, 0.3, &MixingSpec::uniform(0.0, 1.0)).is_err());
    }

    #[test]
    fn enumeration_depends_only_on_size_multiset() {
        for spec in [MixingSpec::dirac(0.0), MixingSpec::equal_atoms(&[0.0, 3.0])] {
            for n in 1..=6 {
                let mut by_shape: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
                for p in enumerate_exact(n, 0.45, &spec).unwrap() {
                    let mut shape = p.sizes.clone();
                    shape.sort_unstable();
                    let prev = by_shape.entry(shape).or_insert(p.probability);
                    assert!((*prev - p.probability).abs() <= 1e-15 * prev.max(1e-300));
                }
            }
        }
    }

    #[test]
    fn trajectory_product_equals_enumeration() {
        let spec = MixingSpec::equal_atoms(&[0.0, 3.0]);
        for p in enumerate_exact(5, 0.3, &spec).unwrap() {
            let mut s = state(0.3, spec.clone(), 0);
            let mut prob = 1.0;
            for a in assignments_of(&p.labels) {
                let simplex = s.true_simplex().unwrap();
                prob *= match a {
                    Assignment::NewBlock => simplex[0],
                    Assignment::Existing(i) => simplex[i + 1],
                };
                s.apply(a).unwrap();
            }
            assert!((prob - p.probability).abs() < 1e-12 * p.probability);
            assert_eq!(s.block_sizes(), &p.sizes[..]);
        }
    }

    #[test]
    fn suff_stats_csv_round_trip() {
        let mut s = state(0.5, MixingSpec::dirac(0.0), 4);
        s.run_to(200).unwrap();
        let rows = vec![(0u64, s.suff_stats()), (1u64, SuffStats::from_block_sizes(&[3, 1, 1]).unwrap())];
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows).unwrap();
        let back = SuffStats::read_csv(&buf[..]).unwrap();
        assert_eq!(back, rows);
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().nth(2).unwrap().starts_with("1,5,3,1:2,3:1"));
        let json = serde_json::to_string(&rows[1].1).unwrap();
        assert_eq!(serde_json::from_str::<SuffStats>(&json).unwrap(), rows[1].1);
    }

    #[test]
    fn suff_stats_validation() {
        let bad = SuffStats { n: 4, k_n: 2, size_counts: [(1, 1), (2, 1)].into_iter().collect() };
        assert!(bad.validate().is_err());
        assert!(SuffStats::from_block_sizes(&[]).is_err());
        assert!(SuffStats::from_block_sizes(&[2, 0]).is_err());
        let s = SuffStats::from_size_counts([(1, 2), (4, 1), (7, 0)].into_iter().collect()).unwrap();
        assert_eq!((s.n, s.k_n), (6, 3));
        assert_eq!(s.block_sizes(), vec![4, 1, 1]);
    }

    proptest! {
        #[test]
        fn counting_identities(alpha in 0.05f64..0.95, seed in any::<u64>(), n in 1usize..400) {
            let mut s = state(alpha, MixingSpec::equal_atoms(&[0.0, 2.0]), seed);
            let st = s.run_to(n).unwrap();
            st.validate().unwrap();
            prop_assert_eq!(st.n, n);
            s.check_invariants();
            let p = s.true_simplex().unwrap();
            prop_assert!(p.iter().all(|&x| x > 0.0));
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }
    }
}
