//! Spectral extraction of k conflicting groups through k - 1 DRQ solves.
//!
//! Iteration `i` solves the DRQ problem on the nodes not yet claimed by
//! `P_1 … P_{i-1}` and claims the `+1` side as `P_i`. The last iteration
//! also claims its `-1` side as `P_k`. Nodes that end with `x = 0` stay
//! neutral, as do nodes without entries in the active submatrix.
//!
//! By default iteration `i` of `k - 1` scores the `-1` side with weight
//! `1 / (k - i)`: one group against the groups still to be found, each of
//! which carries a share of the remainder. This is the per-iteration term
//! of the objective written with one simplex vertex per group, and keeps
//! early iterations from claiming two groups at once. The last iteration
//! has weight one.

use serde::Serialize;

use super::drq::{drq_solve_with, DrqOptions};
use super::partition::{Partition, NEUTRAL};
use crate::error::{Error, Result};
use crate::seed;
use crate::signed::{symmetrize, SignedGraph};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationReport {
    pub iteration: usize,
    pub active_nodes: usize,
    pub drq_value: f64,
    pub relaxation_eigenvalue: f64,
    pub power_iterations: usize,
    pub converged: bool,
    /// Nodes claimed by this iteration's groups.
    pub claimed: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScgOutcome {
    pub partition: Partition,
    /// One DRQ value per iteration, in iteration order.
    pub drq_values: Vec<f64>,
    pub iterations: Vec<IterationReport>,
}

impl ScgOutcome {
    pub fn empty_groups(&self) -> Vec<usize> {
        self.partition.empty_groups()
    }
}

/// Weight of the `-1` side across iterations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Peeling {
    /// `1 / (k - i)` at iteration `i`.
    #[default]
    Weighted,
    /// Always one: every iteration is a plain two-sided split.
    Symmetric,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ScgOptions {
    pub drq: DrqOptions,
    pub peeling: Peeling,
}

pub fn scg_detect(g: &SignedGraph, k: usize, seed: u64) -> Result<ScgOutcome> {
    scg_detect_with(g, k, seed, ScgOptions::default())
}

pub fn scg_detect_with(g: &SignedGraph, k: usize, seed: u64, opts: ScgOptions) -> Result<ScgOutcome> {
    if k < 2 {
        return Err(Error::out_of_range("k", format!("{k} < 2")));
    }
    let n = g.node_count();
    if n < k {
        return Err(Error::out_of_range("k", format!("graph has {n} nodes, fewer than k = {k}")));
    }
    let full = symmetrize(g);
    let mut labels = vec![NEUTRAL; n];
    let mut drq_values = Vec::with_capacity(k - 1);
    let mut iterations = Vec::with_capacity(k - 1);

    for i in 1..k {
        let last = i == k - 1;
        let unclaimed: Vec<usize> = (0..n).filter(|&v| labels[v] == NEUTRAL).collect();
        let sub = full.principal_submatrix(&unclaimed);
        let active: Vec<usize> = (0..sub.dim())
            .filter(|&v| sub.degree(v) > 0)
            .map(|v| unclaimed[v])
            .collect();

        if active.len() < 2 {
            drq_values.push(0.0);
            iterations.push(IterationReport {
                iteration: i,
                active_nodes: active.len(),
                drq_value: 0.0,
                relaxation_eigenvalue: 0.0,
                power_iterations: 0,
                converged: true,
                claimed: 0,
            });
            continue;
        }

        let a = full.principal_submatrix(&active);
        let negative_weight = match opts.peeling {
            Peeling::Weighted => 1.0 / (k - i) as f64,
            Peeling::Symmetric => 1.0,
        };
        let drq = DrqOptions {
            negative_weight,
            ..opts.drq
        };
        let r = drq_solve_with(&a, seed::derive(seed, i as u64), drq)?;
        let mut claimed = 0;
        for (pos, &v) in active.iter().enumerate() {
            match r.x[pos] {
                1 => {
                    labels[v] = i;
                    claimed += 1;
                }
                -1 if last => {
                    labels[v] = k;
                    claimed += 1;
                }
                _ => {}
            }
        }
        drq_values.push(r.drq_value);
        iterations.push(IterationReport {
            iteration: i,
            active_nodes: active.len(),
            drq_value: r.drq_value,
            relaxation_eigenvalue: r.relaxation_eigenvalue,
            power_iterations: r.iterations,
            converged: r.converged,
            claimed,
        });
    }

    let partition = Partition::from_labels(g, &labels, k)?;
    let empty = partition.empty_groups();
    if !empty.is_empty() {
        log::info!("detection with k = {k} left groups {empty:?} empty");
    }
    Ok(ScgOutcome {
        partition,
        drq_values,
        iterations,
    })
}
