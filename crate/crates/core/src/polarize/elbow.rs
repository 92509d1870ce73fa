//! Choosing k from the DRQ values of repeated detection runs.
//!
//! For every k the k - 1 DRQ values of a run are sorted so that position
//! `i` holds the i-th largest value, then averaged position-wise over the
//! runs. A knee at position `j` (the last value before the sharpest
//! increase in the drop rate) points to `j + 1` groups.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::scg::{scg_detect_with, ScgOptions};
use crate::error::{Error, Result};
use crate::seed;
use crate::signed::SignedGraph;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ElbowCurve {
    pub k_min: usize,
    pub k_max: usize,
    pub runs: usize,
    pub seeds: Vec<u64>,
    /// Per k: k - 1 averaged DRQ values, largest first.
    pub values: BTreeMap<usize, Vec<f64>>,
}

impl ElbowCurve {
    /// Curve from explicit per-k sequences; each is sorted largest first.
    pub fn from_values(values: BTreeMap<usize, Vec<f64>>) -> Result<Self> {
        for (k, v) in &values {
            if *k < 2 || v.len() != k - 1 {
                return Err(Error::out_of_range(
                    "curve",
                    format!("k = {k} needs {} values, got {}", k.saturating_sub(1), v.len()),
                ));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::out_of_range("curve", format!("non-finite value at k = {k}")));
            }
        }
        let k_min = values.keys().next().copied().unwrap_or(2);
        let k_max = values.keys().last().copied().unwrap_or(2);
        let values = values
            .into_iter()
            .map(|(k, mut v)| {
                sort_descending(&mut v);
                (k, v)
            })
            .collect();
        Ok(ElbowCurve {
            k_min,
            k_max,
            runs: 1,
            seeds: Vec::new(),
            values,
        })
    }
}

fn sort_descending(v: &mut [f64]) {
    v.sort_by(|a, b| b.total_cmp(a));
}

/// Runs detection `runs` times for every k in `k_min..=k_max`. Run `r`
/// uses seed `derive(base_seed, r)` for every k.
pub fn elbow_curve(
    g: &SignedGraph,
    k_min: usize,
    k_max: usize,
    runs: usize,
    base_seed: u64,
) -> Result<ElbowCurve> {
    elbow_curve_with(g, k_min, k_max, runs, base_seed, ScgOptions::default())
}

pub fn elbow_curve_with(
    g: &SignedGraph,
    k_min: usize,
    k_max: usize,
    runs: usize,
    base_seed: u64,
    opts: ScgOptions,
) -> Result<ElbowCurve> {
    if k_min < 2 {
        return Err(Error::out_of_range("k_min", format!("{k_min} < 2")));
    }
    if k_max < k_min {
        return Err(Error::out_of_range("k_max", format!("{k_max} < k_min = {k_min}")));
    }
    if runs < 1 {
        return Err(Error::out_of_range("runs", "must be at least 1"));
    }
    let seeds: Vec<u64> = (0..runs as u64).map(|r| seed::derive(base_seed, r)).collect();
    let jobs: Vec<(usize, u64)> = (k_min..=k_max)
        .flat_map(|k| seeds.iter().map(move |&s| (k, s)))
        .collect();
    let results: Vec<(usize, Vec<f64>)> = jobs
        .par_iter()
        .map(|&(k, s)| {
            let mut v = scg_detect_with(g, k, s, opts)?.drq_values;
            sort_descending(&mut v);
            Ok((k, v))
        })
        .collect::<Result<_>>()?;

    let mut values: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for (k, v) in results {
        let acc = values.entry(k).or_insert_with(|| vec![0.0; k - 1]);
        acc.iter_mut().zip(&v).for_each(|(a, x)| *a += x);
    }
    for v in values.values_mut() {
        v.iter_mut().for_each(|a| *a /= runs as f64);
    }
    Ok(ElbowCurve {
        k_min,
        k_max,
        runs,
        seeds,
        values,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KneeDiagnostic {
    pub k: usize,
    /// 1-based position in the largest-first sequence; `None` when the
    /// sequence is too short or flat.
    pub knee_position: Option<usize>,
    pub strength: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KneeSuggestion {
    pub k: usize,
    pub discernible: bool,
    pub diagnostics: Vec<KneeDiagnostic>,
}

/// Knee strengths smaller than this fraction of the sequence's largest
/// magnitude count as flat.
const FLAT_TOLERANCE: f64 = 1e-6;

/// Strength at position `j` (1-based): the drop after `j` minus the drop
/// before it; position 1 compares against the drop after position 2.
fn knee_of(values: &[f64]) -> (Option<usize>, f64) {
    let m = values.len();
    if m < 3 {
        return (None, 0.0);
    }
    let drops: Vec<f64> = values.windows(2).map(|w| w[0] - w[1]).collect();
    let mut best = (0usize, f64::NEG_INFINITY);
    for j in 0..drops.len() {
        let neighbour = if j == 0 { drops[1] } else { drops[j - 1] };
        let strength = drops[j] - neighbour;
        if strength > best.1 {
            best = (j + 1, strength);
        }
    }
    let scale = values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if best.1 <= FLAT_TOLERANCE * scale.max(f64::MIN_POSITIVE) {
        (None, best.1.max(0.0))
    } else {
        (Some(best.0), best.1)
    }
}

/// Modal knee position over all k, plus one. Ties go to the smaller
/// position; with no knee anywhere the suggestion is `k_min`, flagged.
pub fn suggest_k(curve: &ElbowCurve) -> Result<KneeSuggestion> {
    if curve.values.is_empty() {
        return Err(Error::out_of_range("curve", "empty"));
    }
    let diagnostics: Vec<KneeDiagnostic> = curve
        .values
        .iter()
        .map(|(&k, v)| {
            let (knee_position, strength) = knee_of(v);
            KneeDiagnostic {
                k,
                knee_position,
                strength,
            }
        })
        .collect();
    let mut votes: BTreeMap<usize, usize> = BTreeMap::new();
    for d in &diagnostics {
        if let Some(j) = d.knee_position {
            *votes.entry(j).or_insert(0) += 1;
        }
    }
    let modal = votes
        .iter()
        .fold(None, |best: Option<(usize, usize)>, (&j, &c)| match best {
            Some((_, bc)) if bc >= c => best,
            _ => Some((j, c)),
        });
    Ok(match modal {
        Some((j, _)) => KneeSuggestion {
            k: j + 1,
            discernible: true,
            diagnostics,
        },
        None => KneeSuggestion {
            k: curve.k_min,
            discernible: false,
            diagnostics,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(per_k: &[(usize, Vec<f64>)]) -> ElbowCurve {
        ElbowCurve::from_values(per_k.iter().cloned().collect()).unwrap()
    }

    #[test]
    fn jump_after_two_values_suggests_three() {
        let c = curve(&[
            (5, vec![1.0, 1.1, 5.0, 5.1]),
            (6, vec![0.9, 1.0, 1.1, 5.0, 5.1]),
            (7, vec![0.8, 0.9, 1.0, 1.1, 5.0, 5.1]),
        ]);
        let s = suggest_k(&c).unwrap();
        assert!(s.discernible);
        assert_eq!(s.k, 3);
        assert!(s.diagnostics.iter().all(|d| d.knee_position == Some(2)));
    }

    #[test]
    fn linear_curves_have_no_knee() {
        let c = curve(&[(4, vec![3.0, 2.0, 1.0]), (5, vec![4.0, 3.0, 2.0, 1.0])]);
        let s = suggest_k(&c).unwrap();
        assert!(!s.discernible);
        assert_eq!(s.k, 4);
    }

    #[test]
    fn lone_large_value_gives_two() {
        let c = curve(&[(5, vec![9.0, 1.0, 1.0, 1.0])]);
        assert_eq!(suggest_k(&c).unwrap().k, 2);
    }

    #[test]
    fn malformed_curves_rejected() {
        assert!(ElbowCurve::from_values([(4, vec![1.0])].into_iter().collect()).is_err());
        assert!(ElbowCurve::from_values([(3, vec![1.0, f64::NAN])].into_iter().collect()).is_err());
        let empty = ElbowCurve::from_values(BTreeMap::new()).unwrap();
        assert!(suggest_k(&empty).is_err());
    }
}
