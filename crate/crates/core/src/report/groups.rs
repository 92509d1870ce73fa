use std::collections::BTreeMap;

use serde::Serialize;

use super::Membership;
use crate::model::{Domain, Software};
use crate::signed::{NegativeGraph, PositiveGraph, Sign, SignedGraph};

/// Denominator of the average number of bans per member.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum AvgBansMode {
    /// Members with at least one incoming ban.
    #[default]
    BannedMembers,
    /// All members.
    GroupSize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupStats {
    pub group: usize,
    pub size: usize,
    pub mastodon: usize,
    /// Members without software metadata, counted as non-Mastodon.
    pub unknown_software: usize,
    pub mastodon_pct: f64,
    pub incoming_bans: usize,
    pub banned_members: usize,
    pub avg_bans: f64,
    pub banned_pct: f64,
    /// `avg_bans` has a zero denominator and is reported as 0.
    pub avg_bans_undefined: bool,
    pub empty: bool,
}

/// Average bans per member under `mode`, `None` for a zero denominator.
pub fn avg_bans(incoming_bans: usize, banned_members: usize, size: usize, mode: AvgBansMode) -> Option<f64> {
    let denom = match mode {
        AvgBansMode::BannedMembers => banned_members,
        AvgBansMode::GroupSize => size,
    };
    (denom > 0).then(|| incoming_bans as f64 / denom as f64)
}

fn pct(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        0.0
    } else {
        100.0 * part as f64 / whole as f64
    }
}

/// Per-group statistics, neutral group first. Incoming bans count negative
/// edges from any node into the group.
pub fn group_stats(
    g: &SignedGraph,
    m: &Membership,
    software: &BTreeMap<Domain, Software>,
    mode: AvgBansMode,
) -> Vec<GroupStats> {
    let mut bans_in = vec![0usize; g.node_count()];
    for e in g.edges() {
        if e.sign == Sign::Negative {
            bans_in[e.dst] += 1;
        }
    }
    let groups = m.groups();
    groups
        .iter()
        .enumerate()
        .map(|(group, members)| {
            let size = members.len();
            let mut mastodon = 0;
            let mut unknown = 0;
            let mut incoming = 0;
            let mut banned = 0;
            for d in members {
                match software.get(*d) {
                    Some(Software::Mastodon) => mastodon += 1,
                    None | Some(Software::Unknown) => unknown += 1,
                    Some(_) => {}
                }
                let b = g.index_of(d).map_or(0, |i| bans_in[i]);
                incoming += b;
                banned += usize::from(b > 0);
            }
            let avg = avg_bans(incoming, banned, size, mode);
            GroupStats {
                group,
                size,
                mastodon,
                unknown_software: unknown,
                mastodon_pct: pct(mastodon, size),
                incoming_bans: incoming,
                banned_members: banned,
                avg_bans: avg.unwrap_or(0.0),
                banned_pct: pct(banned, size),
                avg_bans_undefined: avg.is_none(),
                empty: size == 0,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TopInstances {
    pub group: usize,
    /// Member with the largest positive in-strength.
    pub most_interacted: Option<(Domain, u64)>,
    /// Member with the largest negative in-degree.
    pub most_banned: Option<(Domain, usize)>,
}

// Largest positive score, smaller domain on ties. Members are sorted, so
// the first strict maximum wins.
fn argmax<T: Copy + Ord + Default>(members: &[&Domain], score: impl Fn(&Domain) -> T) -> Option<(Domain, T)> {
    let mut best: Option<(&Domain, T)> = None;
    for d in members {
        let s = score(d);
        if s > T::default() && best.is_none_or(|(_, b)| s > b) {
            best = Some((d, s));
        }
    }
    best.map(|(d, s)| (d.clone(), s))
}

/// Representative members per group. Groups where no member has any
/// incoming edge of a sign get no entry for that sign.
pub fn top_instances(pos: &PositiveGraph, neg: &NegativeGraph, m: &Membership) -> Vec<TopInstances> {
    let strength = pos.in_strength();
    let degree = neg.in_degree();
    m.groups()
        .iter()
        .enumerate()
        .map(|(group, members)| TopInstances {
            group,
            most_interacted: argmax(members, |d| strength.get(d).copied().unwrap_or(0)),
            most_banned: argmax(members, |d| degree.get(d).copied().unwrap_or(0)),
        })
        .collect()
}
