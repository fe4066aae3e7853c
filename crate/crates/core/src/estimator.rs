//! Volume-ratio estimation over independent hit-and-run chains.
//!
//! Chain `i` of an experiment is seeded with
//! [`derive_chain_seed(seed, i)`](crate::sampler::derive_chain_seed), so
//! results do not depend on how chains are scheduled across threads. The
//! reported standard error is the spread of per-chain ratios divided by
//! `√chains`; the binomial error is reported alongside it.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criteria::{evaluate_matrix, Alpha, CriterionVerdict};
use crate::error::{Error, Result};
use crate::sampler::{derive_chain_seed, ChainSnapshot, HrChain, HrConfig};
use crate::states::{FamilyKind, StateFamily};

pub const DEFAULT_CHAINS: u64 = 16;
pub const CHECKPOINT_VERSION: u32 = 1;

/// How often (in emitted samples) a running chain reports progress.
const PROGRESS_BATCH: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Criterion {
    Ppt,
    Reduction,
    Majorization,
    Renyi(Alpha),
}

impl Criterion {
    pub fn name(&self) -> &'static str {
        match self {
            Criterion::Ppt => "ppt",
            Criterion::Reduction => "reduction",
            Criterion::Majorization => "majorization",
            Criterion::Renyi(_) => "renyi",
        }
    }

    pub fn alpha(&self) -> Option<Alpha> {
        match self {
            Criterion::Renyi(a) => Some(*a),
            _ => None,
        }
    }

    /// The fixed criteria followed by one Rényi criterion per order.
    pub fn list(alphas: &[Alpha]) -> Vec<Criterion> {
        let mut out = vec![Criterion::Ppt, Criterion::Reduction, Criterion::Majorization];
        out.extend(alphas.iter().map(|&a| Criterion::Renyi(a)));
        out
    }

    pub fn fulfilled(&self, verdict: &CriterionVerdict) -> bool {
        match self {
            Criterion::Ppt => verdict.ppt.fulfilled,
            Criterion::Reduction => verdict.reduction.fulfilled,
            Criterion::Majorization => verdict.majorization.fulfilled,
            Criterion::Renyi(a) => verdict.renyi(*a).is_some_and(|v| v.fulfilled),
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Criterion::Renyi(a) => write!(f, "renyi:{a}"),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ppt" => Ok(Criterion::Ppt),
            "reduction" => Ok(Criterion::Reduction),
            "majorization" => Ok(Criterion::Majorization),
            _ => match s.strip_prefix("renyi:") {
                Some(a) => Ok(Criterion::Renyi(a.parse()?)),
                None => Err(Error::InvalidParameter(format!("unknown criterion '{s}'"))),
            },
        }
    }
}

impl From<Criterion> for String {
    fn from(c: Criterion) -> String {
        c.to_string()
    }
}

impl TryFrom<String> for Criterion {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub family: Arc<StateFamily>,
    pub total_samples: u64,
    pub chains: u64,
    pub seed: u64,
    pub alphas: Vec<Alpha>,
    pub burn_in: u64,
    pub thinning: u64,
}

impl ExperimentConfig {
    pub fn new(family: Arc<StateFamily>, total_samples: u64) -> Self {
        Self {
            family,
            total_samples,
            chains: DEFAULT_CHAINS,
            seed: 0,
            alphas: Alpha::default_grid(),
            burn_in: 0,
            thinning: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.total_samples == 0 {
            return Err(Error::Config("total_samples must be positive".into()));
        }
        if self.chains == 0 {
            return Err(Error::Config("at least one chain is required".into()));
        }
        if self.chains > self.total_samples {
            return Err(Error::Config(format!(
                "{} chains cannot share {} samples",
                self.chains, self.total_samples
            )));
        }
        if self.thinning == 0 {
            return Err(Error::Config("thinning must be at least 1".into()));
        }
        Ok(())
    }

    pub fn criteria(&self) -> Vec<Criterion> {
        Criterion::list(&self.alphas)
    }

    /// Even split with the remainder going to the last chain.
    pub fn samples_for_chain(&self, index: u64) -> u64 {
        let base = self.total_samples / self.chains;
        if index + 1 == self.chains {
            base + self.total_samples % self.chains
        } else {
            base
        }
    }

    pub fn chain_config(&self, index: u64) -> HrConfig {
        HrConfig {
            burn_in: self.burn_in,
            thinning: self.thinning,
            ..HrConfig::new(self.family.clone(), derive_chain_seed(self.seed, index))
        }
    }

    /// Identifies what estimates from this configuration may be merged with.
    pub fn provenance(&self) -> String {
        format!(
            "{} burn_in={} thinning={}",
            self.family.label(),
            self.burn_in,
            self.thinning
        )
    }
}

/// Per-chain counts plus the walk state needed to continue the chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainTally {
    pub index: u64,
    pub target: u64,
    pub emitted: u64,
    /// Fulfilled counts, in the order of [`ExperimentConfig::criteria`].
    pub counts: Vec<u64>,
    pub state: ChainSnapshot,
}

impl ChainTally {
    pub fn is_complete(&self) -> bool {
        self.emitted >= self.target
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioEstimate {
    pub criterion: Criterion,
    pub count_fulfilled: u64,
    pub total: u64,
    pub ratio: f64,
    pub std_error: f64,
    pub binomial_std_error: f64,
    /// Set when no sample (or every sample) fulfilled the criterion, in which
    /// case `std_error` is the rule-of-three bound `3/total`.
    pub inconclusive: bool,
    pub per_chain_ratios: Vec<f64>,
    pub per_chain_totals: Vec<u64>,
    pub provenance: String,
}

impl RatioEstimate {
    pub fn from_chains(
        criterion: Criterion,
        provenance: String,
        per_chain: &[(u64, u64)],
    ) -> Self {
        let count_fulfilled: u64 = per_chain.iter().map(|c| c.0).sum();
        let total: u64 = per_chain.iter().map(|c| c.1).sum();
        let per_chain_ratios: Vec<f64> = per_chain
            .iter()
            .map(|&(k, n)| if n == 0 { 0.0 } else { k as f64 / n as f64 })
            .collect();
        let per_chain_totals = per_chain.iter().map(|c| c.1).collect();
        let mut est = Self {
            criterion,
            count_fulfilled,
            total,
            ratio: 0.0,
            std_error: 0.0,
            binomial_std_error: 0.0,
            inconclusive: false,
            per_chain_ratios,
            per_chain_totals,
            provenance,
        };
        est.recompute();
        est
    }

    fn recompute(&mut self) {
        let n = self.total as f64;
        self.ratio = if self.total == 0 {
            0.0
        } else {
            self.count_fulfilled as f64 / n
        };
        self.binomial_std_error = if self.total == 0 {
            0.0
        } else {
            (self.ratio * (1.0 - self.ratio) / n).sqrt()
        };
        let k = self.per_chain_ratios.len();
        self.std_error = if k >= 2 {
            let mean = self.per_chain_ratios.iter().sum::<f64>() / k as f64;
            let var = self
                .per_chain_ratios
                .iter()
                .map(|r| (r - mean).powi(2))
                .sum::<f64>()
                / (k - 1) as f64;
            (var / k as f64).sqrt()
        } else {
            self.binomial_std_error
        };
        self.inconclusive =
            self.total > 0 && (self.count_fulfilled == self.total || self.count_fulfilled == 0);
        if self.inconclusive {
            self.std_error = 3.0 / n;
        }
    }
}

/// Combines estimates of one criterion from compatible runs.
pub fn merge(estimates: &[RatioEstimate]) -> Result<RatioEstimate> {
    let first = estimates
        .first()
        .ok_or_else(|| Error::Merge("nothing to merge".into()))?;
    let mut out = first.clone();
    for e in &estimates[1..] {
        if e.criterion != first.criterion {
            return Err(Error::Merge(format!(
                "criterion {} differs from {}",
                e.criterion, first.criterion
            )));
        }
        if e.provenance != first.provenance {
            return Err(Error::Merge(format!(
                "provenance '{}' differs from '{}'",
                e.provenance, first.provenance
            )));
        }
        out.count_fulfilled += e.count_fulfilled;
        out.total += e.total;
        out.per_chain_ratios.extend_from_slice(&e.per_chain_ratios);
        out.per_chain_totals.extend_from_slice(&e.per_chain_totals);
    }
    out.recompute();
    Ok(out)
}

/// Runs chain `index` of `config` to completion.
pub fn run_chain(config: &ExperimentConfig, index: u64) -> Result<ChainTally> {
    config.validate()?;
    let mut tally = fresh_tally(config, index)?;
    advance_chain(config, &mut tally, u64::MAX, None)?;
    Ok(tally)
}

fn fresh_tally(config: &ExperimentConfig, index: u64) -> Result<ChainTally> {
    let chain = HrChain::new(config.chain_config(index))?;
    Ok(ChainTally {
        index,
        target: config.samples_for_chain(index),
        emitted: 0,
        counts: vec![0; config.criteria().len()],
        state: chain.snapshot(),
    })
}

type Progress<'a> = Option<&'a (dyn Fn(u64) + Sync)>;

fn advance_chain(
    config: &ExperimentConfig,
    tally: &mut ChainTally,
    max_new: u64,
    progress: Progress<'_>,
) -> Result<()> {
    if tally.is_complete() || max_new == 0 {
        return Ok(());
    }
    let criteria = config.criteria();
    let (n_a, n_b) = config.family.dims();
    let mut chain = HrChain::restore(config.chain_config(tally.index), &tally.state)?;
    let stop = tally.target.min(tally.emitted.saturating_add(max_new));
    let mut unreported = 0;
    let result = (|| {
        while tally.emitted < stop {
            chain.next_sample()?;
            let verdict = evaluate_matrix(chain.current_matrix(), n_a, n_b, &config.alphas);
            for (count, c) in tally.counts.iter_mut().zip(&criteria) {
                if c.fulfilled(&verdict) {
                    *count += 1;
                }
            }
            tally.emitted += 1;
            unreported += 1;
            if unreported == PROGRESS_BATCH {
                if let Some(p) = progress {
                    p(unreported);
                }
                unreported = 0;
            }
        }
        Ok(())
    })();
    if let Some(p) = progress {
        if unreported > 0 {
            p(unreported);
        }
    }
    tally.state = chain.snapshot();
    result
}

/// Serialized experiment progress.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub family: FamilyKind,
    pub dims: (usize, usize),
    pub seed: u64,
    pub total_samples: u64,
    pub chains: u64,
    pub burn_in: u64,
    pub thinning: u64,
    pub criteria: Vec<Criterion>,
    pub tallies: Vec<ChainTally>,
}

impl Checkpoint {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Checkpoint(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))
    }
}

/// A resumable experiment: a set of chains and their running counts.
#[derive(Debug, Clone)]
pub struct Experiment {
    config: ExperimentConfig,
    tallies: Vec<ChainTally>,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let tallies = (0..config.chains)
            .map(|i| fresh_tally(&config, i))
            .collect::<Result<_>>()?;
        Ok(Self { config, tallies })
    }

    pub fn from_checkpoint(config: ExperimentConfig, checkpoint: Checkpoint) -> Result<Self> {
        config.validate()?;
        let mismatch = |what: &str| Err(Error::Checkpoint(format!("{what} does not match")));
        if checkpoint.version != CHECKPOINT_VERSION {
            return mismatch("format version");
        }
        if checkpoint.family != config.family.kind() || checkpoint.dims != config.family.dims() {
            return mismatch("family");
        }
        if checkpoint.seed != config.seed
            || checkpoint.total_samples != config.total_samples
            || checkpoint.chains != config.chains
            || checkpoint.burn_in != config.burn_in
            || checkpoint.thinning != config.thinning
        {
            return mismatch("run configuration");
        }
        if checkpoint.criteria != config.criteria() {
            return mismatch("criterion list");
        }
        let consistent = checkpoint.tallies.len() as u64 == config.chains
            && checkpoint.tallies.iter().enumerate().all(|(i, t)| {
                t.index == i as u64
                    && t.target == config.samples_for_chain(i as u64)
                    && t.counts.len() == checkpoint.criteria.len()
                    && t.emitted <= t.target
            });
        if !consistent {
            return mismatch("chain table");
        }
        Ok(Self {
            config,
            tallies: checkpoint.tallies,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn tallies(&self) -> &[ChainTally] {
        &self.tallies
    }

    pub fn emitted(&self) -> u64 {
        self.tallies.iter().map(|t| t.emitted).sum()
    }

    pub fn is_complete(&self) -> bool {
        self.tallies.iter().all(ChainTally::is_complete)
    }

    /// Advances every chain by at most `max_new_per_chain` samples, running
    /// chains in parallel on the current rayon pool.
    pub fn advance(&mut self, max_new_per_chain: u64, progress: Progress<'_>) -> Result<()> {
        let config = &self.config;
        self.tallies
            .par_iter_mut()
            .map(|t| advance_chain(config, t, max_new_per_chain, progress))
            .collect::<Result<Vec<()>>>()?;
        Ok(())
    }

    pub fn run_to_completion(&mut self, progress: Progress<'_>) -> Result<()> {
        self.advance(u64::MAX, progress)
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            family: self.config.family.kind(),
            dims: self.config.family.dims(),
            seed: self.config.seed,
            total_samples: self.config.total_samples,
            chains: self.config.chains,
            burn_in: self.config.burn_in,
            thinning: self.config.thinning,
            criteria: self.config.criteria(),
            tallies: self.tallies.clone(),
        }
    }

    pub fn estimates(&self) -> Vec<RatioEstimate> {
        estimates_from_tallies(&self.config, &self.tallies)
    }
}

pub fn estimates_from_tallies(
    config: &ExperimentConfig,
    tallies: &[ChainTally],
) -> Vec<RatioEstimate> {
    config
        .criteria()
        .into_iter()
        .enumerate()
        .map(|(ci, criterion)| {
            let per_chain: Vec<(u64, u64)> =
                tallies.iter().map(|t| (t.counts[ci], t.emitted)).collect();
            RatioEstimate::from_chains(criterion, config.provenance(), &per_chain)
        })
        .collect()
}

/// Runs all chains of `config` and returns one estimate per criterion.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<RatioEstimate>> {
    let mut exp = Experiment::new(config.clone())?;
    exp.run_to_completion(None)?;
    Ok(exp.estimates())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bd_config(samples: u64, chains: u64) -> ExperimentConfig {
        let family = Arc::new(StateFamily::new(FamilyKind::BellDiagonal, None).unwrap());
        ExperimentConfig {
            chains,
            seed: 3,
            ..ExperimentConfig::new(family, samples)
        }
    }

    fn est(k: u64, n: u64) -> RatioEstimate {
        RatioEstimate::from_chains(Criterion::Ppt, "p".into(), &[(k, n)])
    }

    #[test]
    fn criterion_names_round_trip() {
        for c in Criterion::list(&[Alpha::Finite(1.5), Alpha::Infinity]) {
            assert_eq!(c.to_string().parse::<Criterion>().unwrap(), c);
        }
        assert!("renyi:0".parse::<Criterion>().is_err());
        assert!("nope".parse::<Criterion>().is_err());
    }

    #[test]
    fn split_gives_remainder_to_last_chain() {
        let cfg = bd_config(103, 4);
        let split: Vec<u64> = (0..4).map(|i| cfg.samples_for_chain(i)).collect();
        assert_eq!(split, vec![25, 25, 25, 28]);
    }

    #[test]
    fn config_errors() {
        assert!(matches!(bd_config(3, 4).validate(), Err(Error::Config(_))));
        assert!(bd_config(0, 1).validate().is_err());
        assert!(bd_config(10, 0).validate().is_err());
        assert!(run_experiment(&bd_config(3, 4)).is_err());
    }

    #[test]
    fn merge_adds_counts() {
        let m = merge(&[est(5, 10), est(5, 10)]).unwrap();
        assert_eq!((m.count_fulfilled, m.total), (10, 20));
        assert_eq!(m.ratio, 0.5);
        assert_eq!(m.per_chain_ratios, vec![0.5, 0.5]);
        assert_eq!(m.std_error, 0.0);
        let single = est(3, 10);
        assert_eq!(merge(std::slice::from_ref(&single)).unwrap(), single);
    }

    #[test]
    fn merge_rejects_mismatches() {
        let mut other = est(1, 10);
        other.criterion = Criterion::Reduction;
        assert!(matches!(merge(&[est(1, 10), other]), Err(Error::Merge(_))));
        let mut other = est(1, 10);
        other.provenance = "q".into();
        assert!(merge(&[est(1, 10), other]).is_err());
        assert!(merge(&[]).is_err());
    }

    #[test]
    fn degenerate_counts_are_inconclusive() {
        let e = est(100, 100);
        assert!(e.inconclusive);
        assert_eq!(e.ratio, 1.0);
        assert!((e.std_error - 0.03).abs() < 1e-15);
        assert!(est(0, 100).inconclusive);
        assert!(!est(50, 100).inconclusive);
    }

    #[test]
    fn std_error_shrinks_with_chain_count() {
        // synthetic alternating per-chain ratios 0.4 / 0.6, same per-chain size
        let make = |k: usize| {
            let chains: Vec<(u64, u64)> = (0..k)
                .map(|i| if i % 2 == 0 { (40, 100) } else { (60, 100) })
                .collect();
            RatioEstimate::from_chains(Criterion::Ppt, "p".into(), &chains)
        };
        let e16 = make(16).std_error;
        let e64 = make(64).std_error;
        let e256 = make(256).std_error;
        assert!((e16 / e64 - 2.0).abs() < 0.06);
        assert!((e64 / e256 - 2.0).abs() < 0.02);
    }

    #[test]
    fn experiment_is_deterministic_and_ordered() {
        let cfg = bd_config(4000, 4);
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 3 + Alpha::default_grid().len());
        for e in &a {
            assert_eq!(e.total, 4000);
            assert_eq!(e.ratio, e.count_fulfilled as f64 / 4000.0);
            assert!(e.std_error >= 0.0);
        }
    }

    #[test]
    fn merged_chains_reproduce_experiment() {
        let cfg = bd_config(2000, 4);
        let whole = run_experiment(&cfg).unwrap();
        let tallies: Vec<ChainTally> = (0..4).map(|i| run_chain(&cfg, i).unwrap()).collect();
        for (ci, expected) in whole.iter().enumerate() {
            let parts: Vec<RatioEstimate> = tallies
                .iter()
                .map(|t| estimates_from_tallies(&cfg, std::slice::from_ref(t))[ci].clone())
                .collect();
            assert_eq!(&merge(&parts).unwrap(), expected);
        }
    }

    #[test]
    fn checkpoint_resume_matches_uninterrupted_run() {
        let cfg = bd_config(3001, 3);
        let full = run_experiment(&cfg).unwrap();

        let mut exp = Experiment::new(cfg.clone()).unwrap();
        exp.advance(400, None).unwrap();
        assert_eq!(exp.emitted(), 1200);
        let json = exp.checkpoint().to_json().unwrap();
        let ckpt = Checkpoint::from_json(&json).unwrap();
        let mut resumed = Experiment::from_checkpoint(cfg.clone(), ckpt).unwrap();
        resumed.advance(500, None).unwrap();
        resumed.run_to_completion(None).unwrap();
        assert!(resumed.is_complete());
        assert_eq!(resumed.estimates(), full);
    }

    #[test]
    fn checkpoint_rejects_other_config() {
        let cfg = bd_config(100, 2);
        let ckpt = Experiment::new(cfg.clone()).unwrap().checkpoint();
        let other = ExperimentConfig { seed: 99, ..cfg.clone() };
        assert!(matches!(
            Experiment::from_checkpoint(other, ckpt.clone()),
            Err(Error::Checkpoint(_))
        ));
        let other = ExperimentConfig {
            alphas: vec![Alpha::Infinity],
            ..cfg
        };
        assert!(Experiment::from_checkpoint(other, ckpt).is_err());
    }

    #[test]
    fn progress_reports_every_sample() {
        use std::sync::atomic::{AtomicU64, Ordering};
        let seen = AtomicU64::new(0);
        let hook = |n: u64| {
            seen.fetch_add(n, Ordering::Relaxed);
        };
        let mut exp = Experiment::new(bd_config(10_000, 2)).unwrap();
        exp.run_to_completion(Some(&hook)).unwrap();
        assert_eq!(seen.load(Ordering::Relaxed), 10_000);
    }
}
