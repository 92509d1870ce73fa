//! Stage computations shared by the subcommands and the pipeline.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::Context;
use fedipol_core::polarize::{conflict_score, scg_detect_with, PairSum, ScgOptions, ScgOutcome};
use fedipol_core::report::Stopwords;
use fedipol_core::{seed, CrawlSnapshot, Domain, SignedGraph, Software};

/// Best of several detection runs.
#[derive(Debug, Clone)]
pub struct Detection {
    pub outcome: ScgOutcome,
    /// Index of the run that was kept.
    pub run: usize,
    pub seed: u64,
    pub score: f64,
}

/// Runs detection `runs` times with seeds `derive(base_seed, r)` and keeps
/// the partition with the highest conflict score; ties keep the earlier
/// run. An all-neutral partition scores below every other.
pub fn detect_best(
    g: &SignedGraph,
    k: usize,
    runs: usize,
    base_seed: u64,
    opts: ScgOptions,
    pair_sum: PairSum,
) -> anyhow::Result<Detection> {
    let mut best: Option<Detection> = None;
    for run in 0..runs.max(1) {
        let s = seed::derive(base_seed, run as u64);
        let outcome = scg_detect_with(g, k, s, opts)?;
        let score = conflict_score(g, &outcome.partition, pair_sum).unwrap_or(f64::NEG_INFINITY);
        if best.as_ref().is_none_or(|b| score > b.score) {
            best = Some(Detection {
                outcome,
                run,
                seed: s,
                score,
            });
        }
    }
    Ok(best.expect("at least one run"))
}

pub fn software_of(snapshot: &CrawlSnapshot) -> BTreeMap<Domain, Software> {
    snapshot.instances.iter().map(|(d, i)| (d.clone(), i.software.clone())).collect()
}

pub fn stopwords(path: Option<&Path>) -> anyhow::Result<Stopwords> {
    match path {
        Some(p) => Stopwords::from_file(p).with_context(|| format!("loading stopwords from {}", p.display())),
        None => Ok(Stopwords::builtin()),
    }
}
