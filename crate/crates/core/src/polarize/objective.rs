//! The k-conflicting-groups objective and its normalized score.
//!
//! `f = sum_i (|E+(P_i)| - |E-(P_i)|) + 1/(k-1) * sum_{i<j} (|E-(P_i, P_j)| - |E+(P_i, P_j)|)`
//! counts every directed edge once; edges between two groups are counted
//! in both directions and edges touching the neutral group are ignored.
//! The score divides `f` by the number of assigned nodes.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use super::partition::{Partition, NEUTRAL};
use crate::error::{Error, Result};
use crate::signed::SignedGraph;

/// Range of the inter-group sum.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairSum {
    /// Each unordered pair of groups once.
    #[default]
    Unordered,
    /// Each ordered pair `(i, j)`, `i != j`; doubles the inter-group term.
    Ordered,
}

impl PairSum {
    fn factor(self) -> i64 {
        match self {
            PairSum::Unordered => 1,
            PairSum::Ordered => 2,
        }
    }
}

/// Exact integer ingredients of the objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ObjectiveTerms {
    /// `sum_i (|E+(P_i)| - |E-(P_i)|)`.
    pub intra: i64,
    /// Inter-group sum under the chosen pair range.
    pub inter: i64,
    pub k: usize,
    pub assigned: usize,
}

impl ObjectiveTerms {
    pub fn f_exact(&self) -> Ratio<i64> {
        let km1 = self.k as i64 - 1;
        Ratio::new(self.intra * km1 + self.inter, km1)
    }

    pub fn f(&self) -> f64 {
        self.intra as f64 + self.inter as f64 / (self.k as f64 - 1.0)
    }

    pub fn score_exact(&self) -> Result<Ratio<i64>> {
        if self.assigned == 0 {
            return Err(Error::EmptyPartition);
        }
        Ok(self.f_exact() / Ratio::from_integer(self.assigned as i64))
    }

    pub fn score(&self) -> Result<f64> {
        if self.assigned == 0 {
            return Err(Error::EmptyPartition);
        }
        Ok(self.f() / self.assigned as f64)
    }
}

fn check_k(k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::out_of_range("k", format!("{k} < 2")));
    }
    Ok(())
}

/// Objective terms for per-node labels aligned with `g.nodes()`.
pub fn terms_from_labels(
    g: &SignedGraph,
    labels: &[usize],
    k: usize,
    pair_sum: PairSum,
) -> Result<ObjectiveTerms> {
    check_k(k)?;
    if labels.len() != g.node_count() {
        return Err(Error::DimensionMismatch {
            expected: g.node_count(),
            got: labels.len(),
        });
    }
    let (mut intra, mut inter) = (0i64, 0i64);
    for e in g.edges() {
        let (a, b) = (labels[e.src], labels[e.dst]);
        if a == NEUTRAL || b == NEUTRAL {
            continue;
        }
        let s = e.sign.value() as i64;
        if a == b {
            intra += s;
        } else {
            inter -= s;
        }
    }
    Ok(ObjectiveTerms {
        intra,
        inter: inter * pair_sum.factor(),
        k,
        assigned: labels.iter().filter(|&&l| l != NEUTRAL).count(),
    })
}

pub fn objective_terms(g: &SignedGraph, p: &Partition, pair_sum: PairSum) -> Result<ObjectiveTerms> {
    terms_from_labels(g, &p.labels_for(g), p.k(), pair_sum)
}

pub fn objective_f(g: &SignedGraph, p: &Partition, pair_sum: PairSum) -> Result<f64> {
    Ok(objective_terms(g, p, pair_sum)?.f())
}

/// `f / |P_1 ∪ … ∪ P_k|`; an all-neutral partition is an error.
pub fn conflict_score(g: &SignedGraph, p: &Partition, pair_sum: PairSum) -> Result<f64> {
    objective_terms(g, p, pair_sum)?.score()
}
