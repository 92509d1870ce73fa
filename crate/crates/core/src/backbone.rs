//! Disparity-filter backbone of the weighted positive graph.
//!
//! Under the null model a node's strength is spread uniformly at random
//! over its `k` incident edges, so the share `p` carried by one edge has
//! density `(k - 1)(1 - x)^(k - 2)`. The significance of an observed share
//! is the upper tail `(1 - p)^(k - 1)`.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Domain;
use crate::signed::PositiveGraph;

/// Which endpoints must find an edge significant for it to survive.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Retention {
    /// Significant at the source's out-side or the target's in-side.
    #[default]
    EitherSide,
    /// Significant at both sides.
    BothSides,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisparityVerdict {
    pub src: Domain,
    pub dst: Domain,
    pub weight: u64,
    pub alpha_out: f64,
    pub alpha_in: f64,
    pub kept: bool,
}

/// Upper-tail probability of share `p` on a node with `degree` edges.
/// A single edge can never be significant, so `degree == 1` gives 1.
pub fn disparity_alpha(p: f64, degree: u64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::out_of_range("p", format!("{p} is not in [0, 1]")));
    }
    if degree < 1 {
        return Err(Error::out_of_range("degree", "must be at least 1"));
    }
    if degree == 1 {
        return Ok(1.0);
    }
    let exponent = i32::try_from(degree - 1).unwrap_or(i32::MAX);
    Ok((1.0 - p).powi(exponent))
}

#[derive(Default, Clone, Copy)]
struct Side {
    strength: u64,
    degree: u64,
}

/// Evaluates every edge of `g` and returns the backbone together with the
/// per-edge verdicts. An edge is kept when its significance is strictly
/// below `threshold` at the sides `retention` requires. Nodes left without
/// edges are removed.
pub fn disparity_filter(
    g: &PositiveGraph,
    threshold: f64,
    retention: Retention,
) -> Result<(PositiveGraph, Vec<DisparityVerdict>)> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::out_of_range(
            "threshold",
            format!("{threshold} is not in (0, 1)"),
        ));
    }
    let mut out_side: HashMap<&Domain, Side> = HashMap::new();
    let mut in_side: HashMap<&Domain, Side> = HashMap::new();
    for (s, d, w) in g.edges() {
        let o = out_side.entry(s).or_default();
        o.strength += w;
        o.degree += 1;
        let i = in_side.entry(d).or_default();
        i.strength += w;
        i.degree += 1;
    }

    let edges: Vec<(&Domain, &Domain, u64)> = g.edges().collect();
    let verdicts: Vec<DisparityVerdict> = edges
        .par_iter()
        .map(|&(s, d, w)| {
            let o = out_side[s];
            let i = in_side[d];
            // Shares are in [0, 1] and degrees >= 1 by construction.
            let alpha_out = disparity_alpha(w as f64 / o.strength as f64, o.degree).unwrap_or(1.0);
            let alpha_in = disparity_alpha(w as f64 / i.strength as f64, i.degree).unwrap_or(1.0);
            let kept = match retention {
                Retention::EitherSide => alpha_out.min(alpha_in) < threshold,
                Retention::BothSides => alpha_out.max(alpha_in) < threshold,
            };
            DisparityVerdict {
                src: s.clone(),
                dst: d.clone(),
                weight: w,
                alpha_out,
                alpha_in,
                kept,
            }
        })
        .collect();

    let mut verdict_iter = verdicts.iter();
    let backbone = g.retain_edges(|_, _, _| verdict_iter.next().map(|v| v.kept).unwrap_or(false));
    Ok((backbone, verdicts))
}
