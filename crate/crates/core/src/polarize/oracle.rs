//! Exhaustive maximizer of the conflict score, for verification on small
//! graphs.

use std::cmp::Ordering;

use num_rational::Ratio;

use super::objective::PairSum;
use super::partition::{Partition, NEUTRAL};
use crate::error::{Error, Result};
use crate::signed::SignedGraph;

/// Largest number of assignments the enumeration accepts.
pub const MAX_ASSIGNMENTS: u64 = 100_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleOptimum {
    pub partition: Partition,
    pub score: Ratio<i64>,
    /// Labels aligned with the graph's node order.
    pub labels: Vec<usize>,
}

impl OracleOptimum {
    pub fn score_f64(&self) -> f64 {
        *self.score.numer() as f64 / *self.score.denom() as f64
    }
}

/// Running objective over an odometer of labels.
struct Tally<'a> {
    adjacency: &'a [Vec<(usize, i64)>],
    labels: Vec<usize>,
    intra: i64,
    inter: i64,
    assigned: i64,
}

impl Tally<'_> {
    fn contribution(mine: usize, theirs: usize, sign: i64) -> (i64, i64) {
        if mine == NEUTRAL || theirs == NEUTRAL {
            (0, 0)
        } else if mine == theirs {
            (sign, 0)
        } else {
            (0, -sign)
        }
    }

    fn relabel(&mut self, v: usize, to: usize) {
        let from = self.labels[v];
        for &(w, sign) in &self.adjacency[v] {
            let theirs = self.labels[w];
            let (di, dx) = Self::contribution(from, theirs, sign);
            let (ai, ax) = Self::contribution(to, theirs, sign);
            self.intra += ai - di;
            self.inter += ax - dx;
        }
        self.assigned += (to != NEUTRAL) as i64 - (from != NEUTRAL) as i64;
        self.labels[v] = to;
    }
}

/// Enumerates every assignment of nodes to `{neutral, 1..=k}` except the
/// all-neutral one and returns a maximizer of the conflict score. Ties go
/// to the lexicographically smallest label vector (node order of `g`).
pub fn brute_force_groups(g: &SignedGraph, k: usize, pair_sum: PairSum) -> Result<OracleOptimum> {
    if k < 2 {
        return Err(Error::out_of_range("k", format!("{k} < 2")));
    }
    let n = g.node_count();
    let assignments = ((k + 1) as f64).powi(n as i32);
    if assignments > MAX_ASSIGNMENTS as f64 {
        return Err(Error::TooLarge {
            assignments,
            bound: MAX_ASSIGNMENTS,
        });
    }
    if n == 0 {
        return Err(Error::EmptyPartition);
    }

    let mut adjacency = vec![Vec::new(); n];
    for e in g.edges() {
        let s = e.sign.value() as i64;
        adjacency[e.src].push((e.dst, s));
        adjacency[e.dst].push((e.src, s));
    }
    let factor = match pair_sum {
        PairSum::Unordered => 1,
        PairSum::Ordered => 2,
    };
    let km1 = k as i64 - 1;
    let mut tally = Tally {
        adjacency: &adjacency,
        labels: vec![NEUTRAL; n],
        intra: 0,
        inter: 0,
        assigned: 0,
    };
    // score = (intra * (k-1) + inter) / ((k-1) * assigned)
    let mut best: Option<(i64, i64, Vec<usize>)> = None;
    loop {
        // Odometer with the last node as the fastest digit: lexicographic order.
        let mut pos = n;
        let mut wrapped = true;
        while pos > 0 {
            pos -= 1;
            let cur = tally.labels[pos];
            if cur < k {
                tally.relabel(pos, cur + 1);
                wrapped = false;
                break;
            }
            tally.relabel(pos, NEUTRAL);
        }
        if wrapped {
            break;
        }
        let num = tally.intra * km1 + tally.inter * factor;
        let den = km1 * tally.assigned;
        let better = match &best {
            None => true,
            Some((bn, bd, _)) => (num as i128 * *bd as i128).cmp(&(*bn as i128 * den as i128)) == Ordering::Greater,
        };
        if better {
            best = Some((num, den, tally.labels.clone()));
        }
    }
    let (num, den, labels) = best.ok_or(Error::EmptyPartition)?;
    Ok(OracleOptimum {
        partition: Partition::from_labels(g, &labels, k)?,
        score: Ratio::new(num, den),
        labels,
    })
}
