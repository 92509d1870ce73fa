use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::Domain;
use crate::signed::SignedGraph;

/// Group label used for nodes outside every polarized group.
pub const NEUTRAL: usize = 0;

/// Assignment of nodes to polarized groups `1..=k`. Nodes without an entry
/// belong to the neutral group. Groups may be empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    k: usize,
    assignment: BTreeMap<Domain, usize>,
}

impl Partition {
    pub fn new(k: usize) -> Self {
        Partition {
            k,
            assignment: BTreeMap::new(),
        }
    }

    /// Assigns `domain` to `group`, replacing any earlier assignment;
    /// `group == NEUTRAL` removes it.
    pub fn assign(&mut self, domain: Domain, group: usize) -> Result<()> {
        if group > self.k {
            return Err(Error::out_of_range(
                "group",
                format!("{group} exceeds k = {}", self.k),
            ));
        }
        if group == NEUTRAL {
            self.assignment.remove(&domain);
        } else {
            self.assignment.insert(domain, group);
        }
        Ok(())
    }

    /// Builds a partition from per-node labels aligned with `g.nodes()`.
    pub fn from_labels(g: &SignedGraph, labels: &[usize], k: usize) -> Result<Self> {
        if labels.len() != g.node_count() {
            return Err(Error::DimensionMismatch {
                expected: g.node_count(),
                got: labels.len(),
            });
        }
        let mut p = Partition::new(k);
        for (i, &label) in labels.iter().enumerate() {
            p.assign(g.domain(i).clone(), label)?;
        }
        Ok(p)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn group_of(&self, domain: &Domain) -> usize {
        self.assignment.get(domain).copied().unwrap_or(NEUTRAL)
    }

    pub fn assigned(&self) -> impl Iterator<Item = (&Domain, usize)> + '_ {
        self.assignment.iter().map(|(d, g)| (d, *g))
    }

    pub fn assigned_count(&self) -> usize {
        self.assignment.len()
    }

    pub fn members(&self, group: usize) -> Vec<&Domain> {
        self.assignment
            .iter()
            .filter(|(_, g)| **g == group)
            .map(|(d, _)| d)
            .collect()
    }

    /// Per-node labels aligned with `g.nodes()`; assigned domains missing
    /// from `g` are ignored.
    pub fn labels_for(&self, g: &SignedGraph) -> Vec<usize> {
        g.nodes().iter().map(|d| self.group_of(d)).collect()
    }

    /// Polarized groups with no member.
    pub fn empty_groups(&self) -> Vec<usize> {
        let mut seen = vec![false; self.k + 1];
        for g in self.assignment.values() {
            seen[*g] = true;
        }
        (1..=self.k).filter(|g| !seen[*g]).collect()
    }

    /// Renames group `g` to `perm[g - 1]`; `perm` must be a permutation of
    /// `1..=k`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        let mut sorted = perm.to_vec();
        sorted.sort_unstable();
        if sorted != (1..=self.k).collect::<Vec<_>>() {
            return Err(Error::out_of_range("perm", "not a permutation of 1..=k"));
        }
        Ok(Partition {
            k: self.k,
            assignment: self
                .assignment
                .iter()
                .map(|(d, g)| (d.clone(), perm[g - 1]))
                .collect(),
        })
    }
}
