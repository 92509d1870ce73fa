//! Seeded generators of signed graphs and crawl snapshots with planted
//! group structure, used by tests, benchmarks and the bundled fixture.

use std::collections::BTreeSet;

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{
    ActivityRecord, CrawlSnapshot, Domain, DomainBlockRecord, FollowRecord, InstanceRef, Software, UserRef,
};
use crate::polarize::partition::Partition;
use crate::signed::{Sign, SignedGraph};

fn node(i: usize) -> Domain {
    Domain::literal(&format!("n{i:03}"))
}

/// Each unordered pair gets an edge with probability `edge_prob`, in a
/// random direction, negative with probability `neg_prob`.
pub fn random_signed_graph(n: usize, edge_prob: f64, neg_prob: f64, seed: u64) -> SignedGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(edge_prob) {
                let sign = if rng.random_bool(neg_prob) { Sign::Negative } else { Sign::Positive };
                let (s, d) = if rng.random_bool(0.5) { (i, j) } else { (j, i) };
                edges.push((node(s), node(d), sign));
            }
        }
    }
    SignedGraph::from_parts((0..n).map(node), edges).expect("generated edges are valid")
}

/// Like [`random_signed_graph`] but every edge is present in both
/// directions with the same sign.
pub fn random_symmetric_signed_graph(n: usize, edge_prob: f64, neg_prob: f64, seed: u64) -> SignedGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(edge_prob) {
                let sign = if rng.random_bool(neg_prob) { Sign::Negative } else { Sign::Positive };
                edges.push((node(i), node(j), sign));
                edges.push((node(j), node(i), sign));
            }
        }
    }
    SignedGraph::from_parts((0..n).map(node), edges).expect("generated edges are valid")
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedGroups {
    pub sizes: Vec<usize>,
    /// Extra nodes outside every group.
    pub neutral: usize,
    /// Probability of a positive edge inside a group.
    pub intra_positive: f64,
    /// Probability of a negative edge between two groups.
    pub inter_negative: f64,
    /// Probability of an edge of random sign touching a neutral node.
    pub neutral_edge: f64,
}

impl PlantedGroups {
    pub fn new(sizes: Vec<usize>, intra_positive: f64, inter_negative: f64) -> Self {
        PlantedGroups {
            sizes,
            neutral: 0,
            intra_positive,
            inter_negative,
            neutral_edge: 0.0,
        }
    }
}

fn planted_node(group: usize, i: usize) -> Domain {
    Domain::literal(&format!("g{group}-{i:03}"))
}

/// Undirected planted structure, one directed edge per unordered pair
/// (lower index to higher). Returns the graph and its planted partition.
pub fn planted_groups(cfg: &PlantedGroups, seed: u64) -> (SignedGraph, Partition) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut members: Vec<(Domain, usize)> = Vec::new();
    for (g, &size) in cfg.sizes.iter().enumerate() {
        members.extend((0..size).map(|i| (planted_node(g + 1, i), g + 1)));
    }
    members.extend((0..cfg.neutral).map(|i| (Domain::literal(&format!("z-{i:03}")), 0)));

    let mut edges = Vec::new();
    for a in 0..members.len() {
        for b in a + 1..members.len() {
            let (ga, gb) = (members[a].1, members[b].1);
            let sign = if ga == 0 || gb == 0 {
                if !rng.random_bool(cfg.neutral_edge) {
                    continue;
                }
                if rng.random_bool(0.5) { Sign::Positive } else { Sign::Negative }
            } else if ga == gb {
                if !rng.random_bool(cfg.intra_positive) {
                    continue;
                }
                Sign::Positive
            } else {
                if !rng.random_bool(cfg.inter_negative) {
                    continue;
                }
                Sign::Negative
            };
            edges.push((members[a].0.clone(), members[b].0.clone(), sign));
        }
    }
    let mut p = Partition::new(cfg.sizes.len());
    for (d, g) in &members {
        p.assign(d.clone(), *g).expect("group id within k");
    }
    let g = SignedGraph::from_parts(members.into_iter().map(|(d, _)| d), edges).expect("generated edges are valid");
    (g, p)
}

/// `k` positive cliques of `size` nodes with every inter-clique pair
/// negative.
pub fn planted_cliques(k: usize, size: usize) -> (SignedGraph, Partition) {
    planted_groups(&PlantedGroups::new(vec![size; k], 1.0, 1.0), 0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedSnapshot {
    pub group_sizes: Vec<usize>,
    pub neutral: usize,
    pub users_per_instance: usize,
    /// Probability that an instance blocks a given member of another group.
    pub block_prob: f64,
    /// Probability of a stray follow toward another group.
    pub cross_follow_prob: f64,
    pub weeks: usize,
    pub start: DateTime<Utc>,
}

impl Default for PlantedSnapshot {
    fn default() -> Self {
        PlantedSnapshot {
            group_sizes: vec![6, 6, 6],
            neutral: 3,
            users_per_instance: 12,
            block_prob: 0.8,
            cross_follow_prob: 0.15,
            weeks: 12,
            start: Utc.with_ymd_and_hms(2023, 7, 3, 0, 0, 0).unwrap(),
        }
    }
}

const REASONS: [&[&str]; 3] = [
    &["hate speech", "racism", "harassment and hate speech", "racism, harassment"],
    &["spam", "unmoderated spam", "crypto spam bots"],
    &["federates with Meta/Facebook", "corporate, ads", "tracking and ads"],
];

/// A crawl of instances in planted groups. Inside a group every instance
/// follows the next one around a ring with all its users and the others
/// with one to three users, so the ring survives backbone filtering at
/// usual thresholds. Groups block each other's members with `block_prob`.
/// Neutral instances follow sparsely and never block.
pub fn planted_snapshot(cfg: &PlantedSnapshot, seed: u64) -> CrawlSnapshot {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut snap = CrawlSnapshot::default();
    let groups: Vec<Vec<Domain>> = cfg
        .group_sizes
        .iter()
        .enumerate()
        .map(|(g, &n)| {
            (0..n)
                .map(|i| Domain::parse(&format!("i{i}.pole{}.example", g + 1)).expect("valid domain"))
                .collect()
        })
        .collect();
    let neutral: Vec<Domain> = (0..cfg.neutral)
        .map(|i| Domain::parse(&format!("i{i}.neutral.example")).expect("valid domain"))
        .collect();

    let all: Vec<&Domain> = groups.iter().flatten().chain(&neutral).collect();
    for (n, d) in all.iter().enumerate() {
        let software = if n % 5 == 4 { Software::Pleroma } else { Software::Mastodon };
        snap.instances.insert((*d).clone(), InstanceRef { domain: (*d).clone(), software });
        for u in 0..cfg.users_per_instance {
            snap.users.insert(UserRef::new(format!("{}", 100 + u), (*d).clone()));
        }
    }
    let user = |d: &Domain, u: usize| UserRef::new(format!("{}", 100 + u), d.clone());
    let mut at = cfg.start;
    let mut tick = || {
        at += Duration::minutes(1);
        at
    };

    let mut follows: BTreeSet<(UserRef, UserRef)> = BTreeSet::new();
    for members in &groups {
        let n = members.len();
        for (i, src) in members.iter().enumerate() {
            for (j, dst) in members.iter().enumerate() {
                if i == j {
                    continue;
                }
                let followers = if j == (i + 1) % n {
                    cfg.users_per_instance
                } else {
                    rng.random_range(1..=3.min(cfg.users_per_instance))
                };
                for u in 0..followers {
                    follows.insert((user(src, u), user(dst, (i + u) % cfg.users_per_instance)));
                }
            }
        }
    }
    for (g, members) in groups.iter().enumerate() {
        for src in members {
            for (h, other) in groups.iter().enumerate() {
                for dst in other {
                    if h != g && rng.random_bool(cfg.cross_follow_prob) {
                        follows.insert((user(src, 0), user(dst, 1)));
                    }
                }
            }
        }
    }
    for src in &neutral {
        for dst in &all {
            if *dst != src && rng.random_bool(0.2) {
                follows.insert((user(src, 2), user(dst, 3)));
            }
        }
    }
    for (follower, followed) in follows {
        snap.follows.push(FollowRecord { follower, followed, observed_at: tick() });
    }

    for (g, members) in groups.iter().enumerate() {
        for blocker in members {
            for (h, other) in groups.iter().enumerate() {
                if h == g {
                    continue;
                }
                let reasons = REASONS[h % REASONS.len()];
                for target in other {
                    if rng.random_bool(cfg.block_prob) {
                        let comment = reasons[rng.random_range(0..reasons.len())];
                        snap.blocks.push(DomainBlockRecord {
                            blocker: blocker.clone(),
                            blocked_domain: target.clone(),
                            severity: "suspend".into(),
                            comment: comment.into(),
                            obfuscated: false,
                            observed_at: tick(),
                        });
                    }
                }
            }
        }
    }

    let last_week = cfg.start + Duration::weeks(cfg.weeks as i64);
    for d in &all {
        let base: u64 = rng.random_range(50..5000);
        for w in 0..cfg.weeks {
            snap.activity.push(ActivityRecord {
                instance: (*d).clone(),
                week_start: last_week - Duration::weeks(w as i64),
                statuses: base + rng.random_range(0..base),
                logins: rng.random_range(1..100),
                registrations: rng.random_range(0..5),
            });
        }
    }
    snap.crawl_window = Some((cfg.start, tick()));
    snap
}
