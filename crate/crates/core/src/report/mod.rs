//! Characterization of detected groups: sizes and bans, flows between
//! groups, representative instances, posting activity and ban reasons.
//!
//! Group index 0 is the neutral group; 1..=k are the polarized groups.

mod activity;
mod flows;
mod groups;
mod keywords;
mod output;

use std::collections::BTreeMap;

use crate::model::Domain;
use crate::polarize::partition::{Partition, NEUTRAL};

pub use activity::{activity_stats, ActivityStats, ActivityWindow};
pub use flows::{flow_matrices, flow_matrix, FlowMatrix};
pub use groups::{avg_bans, group_stats, top_instances, AvgBansMode, GroupStats, TopInstances};
pub use keywords::{ban_keywords, tokenize, KeywordRanking, Stopwords, TOP_KEYWORDS};
pub use output::{write_elbow_long, write_report, Report, ReportInputs};

/// `P_N` for the neutral group, `P_i` otherwise.
pub fn group_label(group: usize) -> String {
    if group == NEUTRAL {
        "P_N".to_string()
    } else {
        format!("P_{group}")
    }
}

/// Group of every node in a universe, neutral included.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Membership {
    k: usize,
    of: BTreeMap<Domain, usize>,
}

impl Membership {
    /// Every domain in `universe` gets its partition group; partition
    /// entries outside the universe are ignored.
    pub fn new<'a>(universe: impl IntoIterator<Item = &'a Domain>, p: &Partition) -> Self {
        Membership {
            k: p.k(),
            of: universe.into_iter().map(|d| (d.clone(), p.group_of(d))).collect(),
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of groups including the neutral one.
    pub fn group_count(&self) -> usize {
        self.k + 1
    }

    /// Group of `d`, or `None` when `d` is outside the universe.
    pub fn get(&self, d: &Domain) -> Option<usize> {
        self.of.get(d).copied()
    }

    /// Group of `d`; domains outside the universe count as neutral.
    pub fn group_or_neutral(&self, d: &Domain) -> usize {
        self.get(d).unwrap_or(NEUTRAL)
    }

    pub fn len(&self) -> usize {
        self.of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.of.is_empty()
    }

    /// Members per group, each list sorted by domain.
    pub fn groups(&self) -> Vec<Vec<&Domain>> {
        let mut out = vec![Vec::new(); self.group_count()];
        for (d, g) in &self.of {
            out[*g].push(d);
        }
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Domain, usize)> + '_ {
        self.of.iter().map(|(d, g)| (d, *g))
    }
}
