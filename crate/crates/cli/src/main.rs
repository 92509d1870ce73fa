use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use fedipol_core::backbone::{disparity_filter, Retention};
use fedipol_core::io::{self, load_snapshot};
use fedipol_core::polarize::{elbow_curve_with, suggest_k, PairSum, Peeling};
use fedipol_core::report::{write_elbow_long, write_report, ActivityWindow, AvgBansMode, Report, ReportInputs};
use fedipol_core::{build_negative_graph, build_positive_graph, merge_signed, seed, AmbiguityPolicy, Domain, Software, WeightMode};
use fedipol_cli::pipeline::{crawl_limits, scg_options};
use fedipol_cli::stages::{detect_best, software_of, stopwords};
use fedipol_cli::{run_pipeline, Manifest, PipelineConfig};
use fedipol_crawler::{bfs_crawl, load_seed_instances, CrawlEnv, RateLimit, SystemClock, Tokens, UreqTransport};

#[derive(Parser)]
#[command(name = "fedipol", version, about = "Polarized groups in federated instance networks")]
struct Cli {
    /// Write a manifest of inputs, outputs and parameters to this path.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Crawl follow links, block lists and activity from seed instances.
    Crawl(CrawlArgs),
    /// Build the positive and negative instance graphs from a snapshot.
    Build(BuildArgs),
    /// Extract the disparity backbone of the positive graph.
    Filter(FilterArgs),
    /// Merge the backbone and the negative graph into a signed graph.
    Merge(MergeArgs),
    /// Compute the elbow curve and suggest a number of groups.
    Elbow(ElbowArgs),
    /// Detect k polarized groups.
    Detect(DetectArgs),
    /// Characterize the detected groups.
    Report(ReportArgs),
    /// Run every stage from one configuration file.
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct CrawlArgs {
    #[arg(long)]
    seeds: PathBuf,
    /// Output directory; the snapshot is written to `snapshot.jsonl` inside.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    max_users: Option<usize>,
    #[arg(long)]
    max_instances: Option<usize>,
    /// Requests per host as `<requests>/<seconds>`.
    #[arg(long, default_value = "300/300")]
    rate: RateLimit,
    /// Continue an interrupted crawl in the same directory.
    #[arg(long)]
    resume: bool,
    /// With --resume, poll block lists and activity of known instances again.
    #[arg(long)]
    repoll_blocks: bool,
    #[arg(long, default_value_t = 4)]
    concurrency: usize,
    /// Stop starting new requests after this many seconds.
    #[arg(long)]
    budget_secs: Option<f64>,
    #[arg(long, default_value_t = 30.0)]
    timeout_secs: f64,
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long)]
    snapshot: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Weights::DistinctFollowers)]
    weights: Weights,
}

#[derive(Args)]
struct FilterArgs {
    #[arg(long)]
    pos: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, value_enum, default_value_t = Keep::EitherSide)]
    retention: Keep,
    #[arg(long)]
    out: PathBuf,
    /// Also write per-edge significance values.
    #[arg(long)]
    verdicts: Option<PathBuf>,
}

#[derive(Args)]
struct MergeArgs {
    #[arg(long)]
    pos: PathBuf,
    #[arg(long)]
    neg: PathBuf,
    #[arg(long, value_enum, default_value_t = Ambiguity::DropBoth)]
    policy: Ambiguity,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct SearchArgs {
    #[arg(long, default_value_t = 10)]
    runs: usize,
    /// Base seed; stage seeds are derived from it as in the pipeline.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Peel::Weighted)]
    peeling: Peel,
}

#[derive(Args)]
struct ElbowArgs {
    #[arg(long)]
    signed: PathBuf,
    #[arg(long, default_value_t = 2)]
    k_min: usize,
    #[arg(long, default_value_t = 10)]
    k_max: usize,
    #[command(flatten)]
    search: SearchArgs,
    #[arg(long)]
    out: PathBuf,
    /// Also write the plot-ready long format.
    #[arg(long)]
    long: Option<PathBuf>,
}

#[derive(Args)]
struct DetectArgs {
    #[arg(long)]
    signed: PathBuf,
    /// Number of groups; taken from --curve when absent.
    #[arg(long)]
    k: Option<usize>,
    /// Elbow curve from `fedipol elbow`, used to suggest k.
    #[arg(long)]
    curve: Option<PathBuf>,
    #[command(flatten)]
    search: SearchArgs,
    #[arg(long, value_enum, default_value_t = Pairs::Unordered)]
    pair_sum: Pairs,
    #[arg(long)]
    out: PathBuf,
    /// Also write per-iteration DRQ diagnostics.
    #[arg(long)]
    drq: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    signed: PathBuf,
    /// Filtered positive graph.
    #[arg(long)]
    pos: PathBuf,
    #[arg(long)]
    neg: PathBuf,
    #[arg(long)]
    partition: PathBuf,
    /// Snapshot holding block records.
    #[arg(long)]
    blocks: PathBuf,
    /// Snapshot holding activity records; defaults to --blocks.
    #[arg(long)]
    activity: Option<PathBuf>,
    /// `domain,software` table; software is otherwise read from the snapshots.
    #[arg(long)]
    nodes: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    stopwords: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = AvgBans::BannedMembers)]
    avg_bans: AvgBans,
    #[arg(long, default_value_t = 12)]
    activity_weeks: u32,
    /// Elbow curve to convert into the long plot format alongside.
    #[arg(long)]
    curve: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides as `key=value`, applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    snapshot: Option<PathBuf>,
    #[arg(long)]
    seeds: Option<PathBuf>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    resume: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Weights {
    DistinctFollowers,
    FollowLinks,
}

#[derive(Clone, Copy, ValueEnum)]
enum Keep {
    EitherSide,
    BothSides,
}

#[derive(Clone, Copy, ValueEnum)]
enum Ambiguity {
    DropBoth,
    NegativeWins,
}

#[derive(Clone, Copy, ValueEnum)]
enum Peel {
    Weighted,
    Symmetric,
}

#[derive(Clone, Copy, ValueEnum)]
enum Pairs {
    Unordered,
    Ordered,
}

#[derive(Clone, Copy, ValueEnum)]
enum AvgBans {
    BannedMembers,
    GroupSize,
}

impl From<Weights> for WeightMode {
    fn from(w: Weights) -> Self {
        match w {
            Weights::DistinctFollowers => WeightMode::DistinctFollowers,
            Weights::FollowLinks => WeightMode::FollowLinks,
        }
    }
}

impl From<Keep> for Retention {
    fn from(k: Keep) -> Self {
        match k {
            Keep::EitherSide => Retention::EitherSide,
            Keep::BothSides => Retention::BothSides,
        }
    }
}

impl From<Ambiguity> for AmbiguityPolicy {
    fn from(a: Ambiguity) -> Self {
        match a {
            Ambiguity::DropBoth => AmbiguityPolicy::DropBoth,
            Ambiguity::NegativeWins => AmbiguityPolicy::NegativeWins,
        }
    }
}

impl From<Peel> for Peeling {
    fn from(p: Peel) -> Self {
        match p {
            Peel::Weighted => Peeling::Weighted,
            Peel::Symmetric => Peeling::Symmetric,
        }
    }
}

impl From<Pairs> for PairSum {
    fn from(p: Pairs) -> Self {
        match p {
            Pairs::Unordered => PairSum::Unordered,
            Pairs::Ordered => PairSum::Ordered,
        }
    }
}

impl From<AvgBans> for AvgBansMode {
    fn from(a: AvgBans) -> Self {
        match a {
            AvgBans::BannedMembers => AvgBansMode::BannedMembers,
            AvgBans::GroupSize => AvgBansMode::GroupSize,
        }
    }
}

fn parent_dir(p: &Path) -> PathBuf {
    p.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf)
}

fn ensure_parent(p: &Path) -> anyhow::Result<()> {
    if let Some(d) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(d).with_context(|| format!("creating {}", d.display()))?;
    }
    Ok(())
}

fn search_config(s: &SearchArgs) -> PipelineConfig {
    PipelineConfig {
        runs: s.runs,
        seed: s.seed,
        peeling: s.peeling.into(),
        ..PipelineConfig::default()
    }
}

fn crawl(a: CrawlArgs, m: &mut Manifest) -> anyhow::Result<()> {
    m.input(&a.seeds)?;
    let seeds = load_seed_instances(&a.seeds).with_context(|| format!("reading {}", a.seeds.display()))?;
    if !seeds.skipped.is_empty() {
        eprintln!("skipped {} malformed seed lines", seeds.skipped.len());
    }
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let cfg = PipelineConfig {
        max_users: a.max_users,
        max_instances: a.max_instances,
        rate: a.rate,
        concurrency: a.concurrency,
        budget: a.budget_secs.map(Duration::from_secs_f64),
        repoll_blocks: a.repoll_blocks,
        ..PipelineConfig::default()
    };
    let env = CrawlEnv {
        transport: Arc::new(UreqTransport::https(Duration::from_secs_f64(a.timeout_secs))),
        clock: Arc::new(SystemClock),
        tokens: Tokens::from_env(),
    };
    let out = a.out.join("snapshot.jsonl");
    let outcome = bfs_crawl(&seeds.instances, &crawl_limits(&cfg), env, &out, a.resume)?;
    let s = &outcome.stats;
    println!(
        "{} users on {} instances, {} follows, {} blocks, {} activity weeks",
        s.users, s.instances, s.follows, s.blocks, s.activity_weeks
    );
    if !s.quarantined.is_empty() {
        println!("quarantined: {}", s.quarantined.join(", "));
    }
    m.result("crawl", serde_json::json!({"users": s.users, "follows": s.follows, "blocks": s.blocks}));
    m.artifact("snapshot", "crawl", &[out])
}

fn build(a: BuildArgs, m: &mut Manifest) -> anyhow::Result<()> {
    m.input(&a.snapshot)?;
    let snap = load_snapshot(&a.snapshot)?;
    snap.validate()?;
    std::fs::create_dir_all(&a.out)?;
    let pos = build_positive_graph(&snap.follows, a.weights.into());
    let neg = build_negative_graph(&snap.blocks);
    let files = [a.out.join("positive.csv"), a.out.join("negative.csv"), a.out.join("nodes.csv")];
    io::write_positive(&files[0], &pos)?;
    io::write_negative(&files[1], &neg)?;
    io::write_nodes(&files[2], snap.instances.values())?;
    println!("positive: {} nodes, {} edges", pos.node_count(), pos.edge_count());
    println!("negative: {} nodes, {} edges", neg.node_count(), neg.edge_count());
    m.artifact("graphs", "build", &files)
}

fn filter(a: FilterArgs, m: &mut Manifest) -> anyhow::Result<()> {
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        bail!("--alpha {} is not in (0, 1)", a.alpha);
    }
    m.input(&a.pos)?;
    let pos = io::read_positive(&a.pos)?;
    let (backbone, verdicts) = disparity_filter(&pos, a.alpha, a.retention.into())?;
    ensure_parent(&a.out)?;
    io::write_positive(&a.out, &backbone)?;
    let mut files = vec![a.out.clone()];
    if let Some(v) = &a.verdicts {
        ensure_parent(v)?;
        io::write_verdicts(v, &verdicts)?;
        files.push(v.clone());
    }
    println!("kept {} of {} edges at alpha = {}", backbone.edge_count(), pos.edge_count(), a.alpha);
    m.artifact("backbone", "filter", &files)
}

fn merge(a: MergeArgs, m: &mut Manifest) -> anyhow::Result<()> {
    m.input(&a.pos)?;
    m.input(&a.neg)?;
    let pos = io::read_positive(&a.pos)?;
    let neg = io::read_negative(&a.neg)?;
    let g = merge_signed(&pos, &neg, a.policy.into());
    ensure_parent(&a.out)?;
    io::write_signed(&a.out, &g)?;
    let prov = g.provenance();
    println!(
        "signed: {} nodes, {} edges; {} ambiguous pairs removed {} edges",
        g.node_count(),
        g.edge_count(),
        prov.ambiguous_pairs,
        prov.removed_edges()
    );
    m.artifact("signed", "merge", &[a.out])
}

fn elbow(a: ElbowArgs, m: &mut Manifest) -> anyhow::Result<()> {
    m.input(&a.signed)?;
    let g = io::read_signed(&a.signed)?;
    let cfg = search_config(&a.search);
    let elbow_seed = seed::derive(cfg.seed, seed::STAGE_ELBOW);
    m.seeds.insert("elbow".into(), elbow_seed);
    let curve = elbow_curve_with(&g, a.k_min, a.k_max.min(g.node_count()), cfg.runs, elbow_seed, scg_options(&cfg))?;
    let s = suggest_k(&curve)?;
    ensure_parent(&a.out)?;
    io::write_curve(&a.out, &curve)?;
    let mut files = vec![a.out.clone()];
    if let Some(l) = &a.long {
        ensure_parent(l)?;
        write_elbow_long(l, &curve)?;
        files.push(l.clone());
    }
    for d in &s.diagnostics {
        match d.knee_position {
            Some(p) => println!("k = {:2}: knee at position {p}, strength {:.4}", d.k, d.strength),
            None => println!("k = {:2}: no knee", d.k),
        }
    }
    println!("suggested k = {}{}", s.k, if s.discernible { "" } else { " (no discernible knee)" });
    m.result("suggested_k", s.k);
    m.artifact("elbow", "elbow", &files)
}

fn detect(a: DetectArgs, m: &mut Manifest) -> anyhow::Result<()> {
    m.input(&a.signed)?;
    let g = io::read_signed(&a.signed)?;
    let k = match (a.k, &a.curve) {
        (Some(k), _) => k,
        (None, Some(c)) => {
            m.input(c)?;
            let s = suggest_k(&io::read_curve(c)?)?;
            println!("k = {} from the elbow curve", s.k);
            s.k
        }
        (None, None) => bail!("either --k or --curve is required"),
    };
    let cfg = search_config(&a.search);
    let detect_seed = seed::derive(cfg.seed, seed::STAGE_DETECT);
    m.seeds.insert("detect".into(), detect_seed);
    let d = detect_best(&g, k, cfg.runs, detect_seed, scg_options(&cfg), a.pair_sum.into())?;
    ensure_parent(&a.out)?;
    io::write_partition(&a.out, &g, &d.outcome.partition)?;
    let mut files = vec![a.out.clone()];
    if let Some(p) = &a.drq {
        ensure_parent(p)?;
        io::write_drq(p, &d.outcome.iterations)?;
        files.push(p.clone());
    }
    for group in 1..=k {
        println!("P_{group}: {} instances", d.outcome.partition.members(group).len());
    }
    println!("neutral: {} instances", g.node_count() - d.outcome.partition.assigned_count());
    println!("conflict score {:.4} (run {})", d.score, d.run);
    for e in d.outcome.empty_groups() {
        eprintln!("warning: group {e} is empty");
    }
    m.result("k", k);
    m.result("conflict_score", d.score);
    m.artifact("partition", "detect", &files)
}

fn report(a: ReportArgs, m: &mut Manifest) -> anyhow::Result<()> {
    for p in [&a.signed, &a.pos, &a.neg, &a.partition, &a.blocks] {
        m.input(p)?;
    }
    let signed = io::read_signed(&a.signed)?;
    let pos = io::read_positive(&a.pos)?;
    let neg = io::read_negative(&a.neg)?;
    let partition = io::read_partition(&a.partition, a.k)?;
    let blocks_snap = load_snapshot(&a.blocks)?;
    let activity_snap = match &a.activity {
        Some(p) if p != &a.blocks => {
            m.input(p)?;
            load_snapshot(p)?
        }
        _ => blocks_snap.clone(),
    };
    let mut software: std::collections::BTreeMap<Domain, Software> = software_of(&blocks_snap);
    software.extend(software_of(&activity_snap));
    if let Some(n) = &a.nodes {
        m.input(n)?;
        software.extend(io::read_nodes(n)?);
    }
    if let Some(p) = &a.stopwords {
        m.input(p)?;
    }
    let stop = stopwords(a.stopwords.as_deref())?;
    let r = Report::build(&ReportInputs {
        signed: &signed,
        positive: &pos,
        negative: &neg,
        partition: &partition,
        software: &software,
        blocks: &blocks_snap.blocks,
        activity: &activity_snap.activity,
        stopwords: &stop,
        avg_bans: a.avg_bans.into(),
        window: ActivityWindow {
            weeks: a.activity_weeks,
            end: None,
        },
    });
    let mut files = write_report(&a.out, &r)?;
    if let Some(c) = &a.curve {
        m.input(c)?;
        let long = a.out.join("elbow_long.csv");
        write_elbow_long(&long, &io::read_curve(c)?)?;
        files.push(long);
    }
    for g in &r.groups {
        println!(
            "{:>5}: {:6} instances, avg bans {:8.2}, banned {:5.1}%",
            fedipol_core::report::group_label(g.group),
            g.size,
            g.avg_bans,
            g.banned_pct
        );
    }
    println!("report written to {}", a.out.display());
    m.artifact("report", "report", &files)
}

fn pipeline(a: PipelineArgs, manifest: Option<&Path>) -> anyhow::Result<()> {
    let mut cfg = PipelineConfig::load(&a.config)?;
    for o in &a.overrides {
        let (k, v) = o.split_once('=').with_context(|| format!("--set {o:?} is not key=value"))?;
        cfg.set(k.trim(), v, None)?;
    }
    if let Some(v) = a.out {
        cfg.out = v;
    }
    if let Some(v) = a.snapshot {
        cfg.snapshot = Some(v);
    }
    if let Some(v) = a.seeds {
        cfg.seeds = Some(v);
    }
    if let Some(v) = a.alpha {
        cfg.alpha = v;
    }
    if let Some(v) = a.k {
        cfg.k = Some(v);
    }
    if let Some(v) = a.runs {
        cfg.runs = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    cfg.resume |= a.resume;
    let outcome = run_pipeline(&cfg, manifest)?;
    for s in &outcome.manifest.stages {
        println!("{:>8}: {:9.1} ms", s.name, s.duration_ms);
    }
    if let Some(k) = outcome.suggested_k {
        println!("elbow suggests k = {k}");
    }
    println!("detected k = {} groups", outcome.k);
    println!("manifest: {}", outcome.manifest_path.display());
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let (name, root) = match &cli.command {
        Command::Pipeline(_) => return pipeline_cmd(cli),
        Command::Crawl(a) => ("crawl", a.out.clone()),
        Command::Build(a) => ("build", a.out.clone()),
        Command::Filter(a) => ("filter", parent_dir(&a.out)),
        Command::Merge(a) => ("merge", parent_dir(&a.out)),
        Command::Elbow(a) => ("elbow", parent_dir(&a.out)),
        Command::Detect(a) => ("detect", parent_dir(&a.out)),
        Command::Report(a) => ("report", a.out.clone()),
    };
    let mut m = Manifest::new(name, root);
    let started = std::time::Instant::now();
    let result = match cli.command {
        Command::Crawl(a) => crawl(a, &mut m),
        Command::Build(a) => build(a, &mut m),
        Command::Filter(a) => filter(a, &mut m),
        Command::Merge(a) => merge(a, &mut m),
        Command::Elbow(a) => elbow(a, &mut m),
        Command::Detect(a) => detect(a, &mut m),
        Command::Report(a) => report(a, &mut m),
        Command::Pipeline(_) => unreachable!("handled above"),
    };
    m.stage(name, started.elapsed(), result.as_ref().err().map(|e| format!("{e:#}")));
    if let Some(path) = &cli.manifest {
        m.write(path)?;
    }
    result
}

fn pipeline_cmd(cli: Cli) -> anyhow::Result<()> {
    let Command::Pipeline(a) = cli.command else {
        unreachable!("called for the pipeline subcommand")
    };
    pipeline(a, cli.manifest.as_deref())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
