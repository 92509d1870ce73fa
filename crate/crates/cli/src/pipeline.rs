//! End-to-end run: crawl or load, build, filter, merge, elbow, detect,
//! report. Every file written is listed in the manifest with its hash.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use anyhow::Context;
use fedipol_core::backbone::disparity_filter;
use fedipol_core::io::{self, load_snapshot};
use fedipol_core::polarize::{elbow_curve_with, suggest_k, DrqOptions, ScgOptions};
use fedipol_core::report::{write_elbow_long, write_report, ActivityWindow, Report, ReportInputs};
use fedipol_core::{build_negative_graph, build_positive_graph, merge_signed, seed, CrawlSnapshot, Sign};
use fedipol_crawler::{bfs_crawl, load_seed_instances, CrawlEnv, CrawlLimits, SystemClock, Tokens, UreqTransport};
use thiserror::Error;

use crate::config::PipelineConfig;
use crate::manifest::Manifest;
use crate::stages::{detect_best, software_of, stopwords};

#[derive(Debug, Error)]
#[error("stage `{stage}` failed: {source:#}")]
pub struct PipelineError {
    pub stage: &'static str,
    #[source]
    pub source: anyhow::Error,
    /// Manifest of the stages that completed, when one could be written.
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub manifest: Manifest,
    pub manifest_path: PathBuf,
    /// k suggested by the elbow curve, when it was computed.
    pub suggested_k: Option<usize>,
    /// k used for detection.
    pub k: usize,
}

struct Runner {
    manifest: Manifest,
    path: PathBuf,
}

impl Runner {
    fn run<T>(&mut self, stage: &'static str, f: impl FnOnce(&mut Manifest) -> anyhow::Result<T>) -> Result<T, PipelineError> {
        log::info!("stage {stage}");
        let started = Instant::now();
        match f(&mut self.manifest) {
            Ok(v) => {
                self.manifest.stage(stage, started.elapsed(), None);
                Ok(v)
            }
            Err(e) => {
                self.manifest.stage(stage, started.elapsed(), Some(format!("{e:#}")));
                let manifest = self.manifest.write(&self.path).ok().map(|_| self.path.clone());
                Err(PipelineError { stage, source: e, manifest })
            }
        }
    }
}

pub fn crawl_limits(cfg: &PipelineConfig) -> CrawlLimits {
    CrawlLimits {
        max_users: cfg.max_users,
        max_instances: cfg.max_instances,
        rate: cfg.rate,
        budget: cfg.budget,
        concurrency: cfg.concurrency,
        repoll_blocks: cfg.repoll_blocks,
        ..CrawlLimits::default()
    }
}

pub fn scg_options(cfg: &PipelineConfig) -> ScgOptions {
    ScgOptions {
        drq: DrqOptions::default(),
        peeling: cfg.peeling,
    }
}

fn crawl(cfg: &PipelineConfig, seeds_path: &Path, out: &Path, m: &mut Manifest) -> anyhow::Result<CrawlSnapshot> {
    m.input(seeds_path)?;
    let seeds = load_seed_instances(seeds_path).with_context(|| format!("reading seeds {}", seeds_path.display()))?;
    let env = CrawlEnv {
        transport: Arc::new(UreqTransport::https(Duration::from_secs(30))),
        clock: Arc::new(SystemClock),
        tokens: Tokens::from_env(),
    };
    let outcome = bfs_crawl(&seeds.instances, &crawl_limits(cfg), env, out, cfg.resume)?;
    m.result("crawl_users", outcome.stats.users);
    m.result("crawl_follows", outcome.stats.follows);
    m.result("crawl_quarantined", &outcome.stats.quarantined);
    m.artifact("snapshot", "crawl", &[out.to_path_buf()])?;
    Ok(outcome.snapshot)
}

/// Runs every stage in order. On failure the manifest still lists the
/// stages that completed and the failing one.
pub fn run_pipeline(cfg: &PipelineConfig, manifest_path: Option<&Path>) -> Result<PipelineOutcome, PipelineError> {
    // nothing is written for an invalid configuration
    cfg.validate().map_err(|e| PipelineError {
        stage: "validate",
        source: e.into(),
        manifest: None,
    })?;
    let out = cfg.out.clone();
    let path = manifest_path.map_or_else(|| out.join("manifest.json"), Path::to_path_buf);
    let mut r = Runner {
        manifest: Manifest::new("pipeline", &out),
        path,
    };
    r.manifest.parameters = cfg.echo();
    r.run("prepare", |_| std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display())))?;
    let elbow_seed = seed::derive(cfg.seed, seed::STAGE_ELBOW);
    let detect_seed = seed::derive(cfg.seed, seed::STAGE_DETECT);
    r.manifest.seeds.insert("base".into(), cfg.seed);
    r.manifest.seeds.insert("elbow".into(), elbow_seed);
    r.manifest.seeds.insert("detect".into(), detect_seed);
    let file = |name: &str| out.join(name);

    let snapshot = match &cfg.snapshot {
        Some(p) => r.run("load", |m| {
            m.input(p)?;
            Ok(load_snapshot(p)?)
        })?,
        None => {
            let seeds = cfg.seeds.clone().expect("validated: seeds or snapshot");
            r.run("crawl", |m| crawl(cfg, &seeds, &file("snapshot.jsonl"), m))?
        }
    };

    let (positive, negative) = r.run("build", |m| {
        snapshot.validate()?;
        let pos = build_positive_graph(&snapshot.follows, cfg.weights);
        let neg = build_negative_graph(&snapshot.blocks);
        io::write_positive(file("positive.csv"), &pos)?;
        io::write_nodes(file("nodes.csv"), snapshot.instances.values())?;
        io::write_negative(file("negative.csv"), &neg)?;
        m.artifact("positive", "build", &[file("positive.csv"), file("nodes.csv")])?;
        m.artifact("negative", "build", &[file("negative.csv")])?;
        m.result("positive_edges", pos.edge_count());
        m.result("negative_edges", neg.edge_count());
        Ok((pos, neg))
    })?;

    let backbone = r.run("filter", |m| {
        let (backbone, verdicts) = disparity_filter(&positive, cfg.alpha, cfg.retention)?;
        io::write_positive(file("backbone.csv"), &backbone)?;
        io::write_verdicts(file("verdicts.csv"), &verdicts)?;
        m.artifact("backbone", "filter", &[file("backbone.csv"), file("verdicts.csv")])?;
        m.result("backbone_edges", backbone.edge_count());
        Ok(backbone)
    })?;

    let signed = r.run("merge", |m| {
        let g = merge_signed(&backbone, &negative, cfg.ambiguity);
        io::write_signed(file("signed.csv"), &g)?;
        m.artifact("signed", "merge", &[file("signed.csv")])?;
        let prov = g.provenance();
        m.result("signed_nodes", g.node_count());
        m.result("signed_positive", g.count_by_sign(Sign::Positive));
        m.result("signed_negative", g.count_by_sign(Sign::Negative));
        m.result("ambiguous_pairs", prov.ambiguous_pairs);
        m.result("removed_edges", prov.removed_edges());
        Ok(g)
    })?;

    let opts = scg_options(cfg);
    let (k, suggested_k) = match cfg.k {
        Some(k) => (k, None),
        None => r.run("elbow", |m| {
            let k_max = cfg.k_max.min(signed.node_count());
            anyhow::ensure!(k_max >= cfg.k_min, "signed graph has {} nodes, fewer than k_min = {}", signed.node_count(), cfg.k_min);
            let curve = elbow_curve_with(&signed, cfg.k_min, k_max, cfg.runs, elbow_seed, opts)?;
            let s = suggest_k(&curve)?;
            io::write_curve(file("elbow.csv"), &curve)?;
            write_elbow_long(file("elbow_long.csv"), &curve)?;
            m.artifact("elbow", "elbow", &[file("elbow.csv"), file("elbow_long.csv")])?;
            m.result("suggested_k", s.k);
            m.result("knee_discernible", s.discernible);
            if !s.discernible {
                log::warn!("no discernible knee; using k = {}", s.k);
            }
            Ok((s.k, Some(s.k)))
        })?,
    };

    let partition = r.run("detect", |m| {
        let d = detect_best(&signed, k, cfg.runs, detect_seed, opts, cfg.pair_sum)?;
        io::write_partition(file("partition.csv"), &signed, &d.outcome.partition)?;
        io::write_drq(file("drq.csv"), &d.outcome.iterations)?;
        m.artifact("partition", "detect", &[file("partition.csv"), file("drq.csv")])?;
        m.result("k", k);
        m.result("detect_run", d.run);
        m.result("conflict_score", d.score);
        m.result("empty_groups", d.outcome.empty_groups());
        let sizes: Vec<usize> = (1..=k).map(|g| d.outcome.partition.members(g).len()).collect();
        m.result("group_sizes", sizes);
        Ok(d.outcome.partition)
    })?;

    r.run("report", |m| {
        let stop = stopwords(cfg.stopwords.as_deref())?;
        if let Some(p) = &cfg.stopwords {
            m.input(p)?;
        }
        let software = software_of(&snapshot);
        let report = Report::build(&ReportInputs {
            signed: &signed,
            positive: &backbone,
            negative: &negative,
            partition: &partition,
            software: &software,
            blocks: &snapshot.blocks,
            activity: &snapshot.activity,
            stopwords: &stop,
            avg_bans: cfg.avg_bans,
            window: ActivityWindow {
                weeks: cfg.activity_weeks,
                end: None,
            },
        });
        let files = write_report(file("report"), &report)?;
        m.artifact("report", "report", &files)?;
        Ok(())
    })?;

    let manifest_path = r.path.clone();
    r.manifest.write(&manifest_path).map_err(|source| PipelineError {
        stage: "manifest",
        source,
        manifest: None,
    })?;
    Ok(PipelineOutcome {
        manifest: r.manifest,
        manifest_path,
        suggested_k,
        k,
    })
}
