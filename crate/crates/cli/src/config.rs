//! Pipeline configuration: a flat `key = value` file, `#` starts a comment.
//! Relative paths are resolved against the file's directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use fedipol_core::backbone::Retention;
use fedipol_core::polarize::{PairSum, Peeling};
use fedipol_core::report::AvgBansMode;
use fedipol_core::{AmbiguityPolicy, WeightMode};
use fedipol_crawler::RateLimit;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("{path}:{line}: expected `key = value`")]
    Syntax { path: String, line: usize },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("invalid value for `{key}`: {message}")]
    Invalid { key: String, message: String },
    #[error("cannot read {path}: {message}")]
    Read { path: String, message: String },
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Seed instances for a live crawl, used when no snapshot is given.
    pub seeds: Option<PathBuf>,
    pub snapshot: Option<PathBuf>,
    pub out: PathBuf,
    pub alpha: f64,
    pub retention: Retention,
    /// Fixed number of groups; when absent the elbow curve picks it.
    pub k: Option<usize>,
    pub k_min: usize,
    pub k_max: usize,
    pub runs: usize,
    pub seed: u64,
    pub ambiguity: AmbiguityPolicy,
    pub weights: WeightMode,
    pub pair_sum: PairSum,
    pub peeling: Peeling,
    pub avg_bans: AvgBansMode,
    pub stopwords: Option<PathBuf>,
    pub activity_weeks: u32,
    pub max_users: Option<usize>,
    pub max_instances: Option<usize>,
    pub rate: RateLimit,
    pub concurrency: usize,
    pub budget: Option<Duration>,
    pub resume: bool,
    pub repoll_blocks: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seeds: None,
            snapshot: None,
            out: PathBuf::from("out"),
            alpha: 0.05,
            retention: Retention::EitherSide,
            k: None,
            k_min: 2,
            k_max: 10,
            runs: 10,
            seed: 42,
            ambiguity: AmbiguityPolicy::DropBoth,
            weights: WeightMode::DistinctFollowers,
            pair_sum: PairSum::Unordered,
            peeling: Peeling::Weighted,
            avg_bans: AvgBansMode::BannedMembers,
            stopwords: None,
            activity_weeks: 12,
            max_users: None,
            max_instances: None,
            rate: RateLimit::default(),
            concurrency: 4,
            budget: None,
            resume: false,
            repoll_blocks: false,
        }
    }
}

pub const KEYS: &[&str] = &[
    "seeds",
    "snapshot",
    "out",
    "alpha",
    "retention",
    "k",
    "k_min",
    "k_max",
    "runs",
    "seed",
    "ambiguity",
    "weights",
    "pair_sum",
    "peeling",
    "avg_bans",
    "stopwords",
    "activity_weeks",
    "max_users",
    "max_instances",
    "rate",
    "concurrency",
    "budget_secs",
    "resume",
    "repoll_blocks",
];

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
    v.parse().map_err(|_| invalid(key, format!("{v:?} is not a valid number")))
}

fn optional<T: std::str::FromStr>(key: &str, v: &str) -> Result<Option<T>, ConfigError> {
    match v {
        "" | "none" => Ok(None),
        _ => num(key, v).map(Some),
    }
}

fn flag(key: &str, v: &str) -> Result<bool, ConfigError> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(invalid(key, format!("{v:?} is not a boolean"))),
    }
}

fn choice<T: Copy>(key: &str, v: &str, options: &[(&str, T)]) -> Result<T, ConfigError> {
    options.iter().find(|(name, _)| *name == v).map(|(_, t)| *t).ok_or_else(|| {
        let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
        invalid(key, format!("{v:?} is not one of {}", names.join(", ")))
    })
}

fn resolve(base: Option<&Path>, v: &str) -> PathBuf {
    let p = PathBuf::from(v);
    match base {
        Some(b) if p.is_relative() => b.join(p),
        _ => p,
    }
}

impl PipelineConfig {
    /// Sets one key. `base` anchors relative paths.
    pub fn set(&mut self, key: &str, value: &str, base: Option<&Path>) -> Result<(), ConfigError> {
        let v = value.trim();
        match key {
            "seeds" => self.seeds = (!v.is_empty()).then(|| resolve(base, v)),
            "snapshot" => self.snapshot = (!v.is_empty()).then(|| resolve(base, v)),
            "out" => self.out = resolve(base, v),
            "alpha" => self.alpha = num(key, v)?,
            "retention" => {
                self.retention = choice(key, v, &[("either-side", Retention::EitherSide), ("both-sides", Retention::BothSides)])?
            }
            "k" => self.k = optional(key, v)?,
            "k_min" => self.k_min = num(key, v)?,
            "k_max" => self.k_max = num(key, v)?,
            "runs" => self.runs = num(key, v)?,
            "seed" => self.seed = num(key, v)?,
            "ambiguity" => {
                self.ambiguity = choice(
                    key,
                    v,
                    &[("drop-both", AmbiguityPolicy::DropBoth), ("negative-wins", AmbiguityPolicy::NegativeWins)],
                )?
            }
            "weights" => {
                self.weights = choice(
                    key,
                    v,
                    &[("distinct-followers", WeightMode::DistinctFollowers), ("follow-links", WeightMode::FollowLinks)],
                )?
            }
            "pair_sum" => self.pair_sum = choice(key, v, &[("unordered", PairSum::Unordered), ("ordered", PairSum::Ordered)])?,
            "peeling" => self.peeling = choice(key, v, &[("weighted", Peeling::Weighted), ("symmetric", Peeling::Symmetric)])?,
            "avg_bans" => {
                self.avg_bans = choice(
                    key,
                    v,
                    &[("banned-members", AvgBansMode::BannedMembers), ("group-size", AvgBansMode::GroupSize)],
                )?
            }
            "stopwords" => self.stopwords = (!v.is_empty()).then(|| resolve(base, v)),
            "activity_weeks" => self.activity_weeks = num(key, v)?,
            "max_users" => self.max_users = optional(key, v)?,
            "max_instances" => self.max_instances = optional(key, v)?,
            "rate" => self.rate = v.parse().map_err(|e: String| invalid(key, e))?,
            "concurrency" => self.concurrency = num(key, v)?,
            "budget_secs" => self.budget = optional::<f64>(key, v)?.map(Duration::from_secs_f64),
            "resume" => self.resume = flag(key, v)?,
            "repoll_blocks" => self.repoll_blocks = flag(key, v)?,
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self, ConfigError> {
        let mut cfg = PipelineConfig::default();
        let base = origin.parent();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                path: origin.display().to_string(),
                line: i + 1,
            })?;
            cfg.set(key.trim(), value, base)?;
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text, path)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(invalid("alpha", format!("{} is not in (0, 1)", self.alpha)));
        }
        if self.runs < 1 {
            return Err(invalid("runs", "must be at least 1"));
        }
        if let Some(k) = self.k {
            if k < 2 {
                return Err(invalid("k", format!("{k} < 2")));
            }
        } else {
            if self.k_min < 2 {
                return Err(invalid("k_min", format!("{} < 2", self.k_min)));
            }
            if self.k_max < self.k_min {
                return Err(invalid("k_max", format!("{} < k_min = {}", self.k_max, self.k_min)));
            }
        }
        if self.snapshot.is_none() && self.seeds.is_none() {
            return Err(invalid("snapshot", "either `snapshot` or `seeds` is required"));
        }
        if self.concurrency < 1 {
            return Err(invalid("concurrency", "must be at least 1"));
        }
        if self.activity_weeks < 1 {
            return Err(invalid("activity_weeks", "must be at least 1"));
        }
        Ok(())
    }

    /// Every setting in file syntax, for the manifest.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let path = |p: &Option<PathBuf>| p.as_ref().map_or(String::new(), |p| p.display().to_string());
        let opt = |v: Option<usize>| v.map_or("none".to_string(), |v| v.to_string());
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        put("seeds", path(&self.seeds));
        put("snapshot", path(&self.snapshot));
        put("out", self.out.display().to_string());
        put("alpha", self.alpha.to_string());
        put("retention", match self.retention {
            Retention::EitherSide => "either-side",
            Retention::BothSides => "both-sides",
        }
        .into());
        put("k", opt(self.k));
        put("k_min", self.k_min.to_string());
        put("k_max", self.k_max.to_string());
        put("runs", self.runs.to_string());
        put("seed", self.seed.to_string());
        put("ambiguity", match self.ambiguity {
            AmbiguityPolicy::DropBoth => "drop-both",
            AmbiguityPolicy::NegativeWins => "negative-wins",
        }
        .into());
        put("weights", match self.weights {
            WeightMode::DistinctFollowers => "distinct-followers",
            WeightMode::FollowLinks => "follow-links",
        }
        .into());
        put("pair_sum", match self.pair_sum {
            PairSum::Unordered => "unordered",
            PairSum::Ordered => "ordered",
        }
        .into());
        put("peeling", match self.peeling {
            Peeling::Weighted => "weighted",
            Peeling::Symmetric => "symmetric",
        }
        .into());
        put("avg_bans", match self.avg_bans {
            AvgBansMode::BannedMembers => "banned-members",
            AvgBansMode::GroupSize => "group-size",
        }
        .into());
        put("stopwords", path(&self.stopwords));
        put("activity_weeks", self.activity_weeks.to_string());
        put("max_users", opt(self.max_users));
        put("max_instances", opt(self.max_instances));
        put("rate", self.rate.to_string());
        put("concurrency", self.concurrency.to_string());
        put("budget_secs", self.budget.map_or("none".into(), |b| b.as_secs_f64().to_string()));
        put("resume", self.resume.to_string());
        put("repoll_blocks", self.repoll_blocks.to_string());
        m
    }
}
