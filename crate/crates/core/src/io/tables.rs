//! CSV files with a required header row.
//!
//! | file        | columns                 |
//! |-------------|-------------------------|
//! | positive    | `src,dst,weight`        |
//! | negative    | `src,dst`               |
//! | signed      | `src,dst,sign` (±1)     |
//! | nodes       | `domain,software`       |
//! | partition   | `domain,group` (0 = neutral) |
//! | curve       | `k,position,avg_drq`    |

use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::backbone::DisparityVerdict;
use crate::error::{Error, Result};
use crate::model::{Domain, InstanceRef, Software};
use crate::polarize::elbow::ElbowCurve;
use crate::polarize::partition::Partition;
use crate::polarize::scg::IterationReport;
use crate::signed::{NegativeGraph, PositiveGraph, Sign, SignedGraph};

/// Writes `rows` with a header derived from the row type.
pub fn write_rows<T: Serialize>(path: impl AsRef<Path>, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let mut any = false;
    for row in rows {
        w.serialize(row)?;
        any = true;
    }
    if !any {
        log::debug!("{} written without rows", path.display());
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Like [`write_rows`] but always emits `header`, even with no rows.
pub fn write_rows_with_header<T: Serialize>(
    path: impl AsRef<Path>,
    header: &[&str],
    rows: impl IntoIterator<Item = T>,
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    w.write_record(header)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_rows<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let mut rows = Vec::new();
    for (i, row) in r.deserialize().enumerate() {
        rows.push(row.map_err(|e| Error::Format {
            path: path.to_path_buf(),
            line: i + 2,
            message: e.to_string(),
        })?);
    }
    Ok(rows)
}

#[derive(Debug, Serialize, Deserialize)]
struct PositiveRow {
    src: String,
    dst: String,
    weight: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct NegativeRow {
    src: String,
    dst: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct SignedRow {
    src: String,
    dst: String,
    sign: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct NodeRow {
    domain: String,
    software: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct PartitionRow {
    domain: String,
    group: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct CurveRow {
    k: usize,
    position: usize,
    avg_drq: f64,
}

pub fn write_positive(path: impl AsRef<Path>, g: &PositiveGraph) -> Result<()> {
    write_rows_with_header(
        path,
        &["src", "dst", "weight"],
        g.edges().map(|(s, d, w)| (s.as_str(), d.as_str(), w)),
    )
}

pub fn read_positive(path: impl AsRef<Path>) -> Result<PositiveGraph> {
    let rows: Vec<PositiveRow> = read_rows(path)?;
    PositiveGraph::from_edges(
        rows.into_iter()
            .map(|r| (Domain::literal(&r.src), Domain::literal(&r.dst), r.weight)),
    )
}

pub fn write_negative(path: impl AsRef<Path>, g: &NegativeGraph) -> Result<()> {
    write_rows_with_header(path, &["src", "dst"], g.edges().map(|(s, d)| (s.as_str(), d.as_str())))
}

pub fn read_negative(path: impl AsRef<Path>) -> Result<NegativeGraph> {
    let rows: Vec<NegativeRow> = read_rows(path)?;
    NegativeGraph::from_edges(
        rows.into_iter()
            .map(|r| (Domain::literal(&r.src), Domain::literal(&r.dst))),
    )
}

pub fn write_signed(path: impl AsRef<Path>, g: &SignedGraph) -> Result<()> {
    write_rows_with_header(
        path,
        &["src", "dst", "sign"],
        g.labelled_edges()
            .map(|(s, d, sign)| (s.as_str(), d.as_str(), sign.value())),
    )
}

fn parse_sign(raw: &str) -> Option<Sign> {
    match raw.trim() {
        "1" | "+1" | "+" => Some(Sign::Positive),
        "-1" | "-" => Some(Sign::Negative),
        _ => None,
    }
}

pub fn read_signed(path: impl AsRef<Path>) -> Result<SignedGraph> {
    let path = path.as_ref();
    let rows: Vec<SignedRow> = read_rows(path)?;
    let mut edges = Vec::with_capacity(rows.len());
    for (i, r) in rows.into_iter().enumerate() {
        let sign = parse_sign(&r.sign).ok_or_else(|| Error::Format {
            path: path.to_path_buf(),
            line: i + 2,
            message: format!("sign {:?} is not +1 or -1", r.sign),
        })?;
        edges.push((Domain::literal(&r.src), Domain::literal(&r.dst), sign));
    }
    SignedGraph::from_edges(edges)
}

pub fn write_nodes<'a>(path: impl AsRef<Path>, nodes: impl IntoIterator<Item = &'a InstanceRef>) -> Result<()> {
    write_rows_with_header(
        path,
        &["domain", "software"],
        nodes
            .into_iter()
            .map(|i| (i.domain.as_str(), i.software.name())),
    )
}

pub fn read_nodes(path: impl AsRef<Path>) -> Result<BTreeMap<Domain, Software>> {
    let rows: Vec<NodeRow> = read_rows(path)?;
    Ok(rows
        .into_iter()
        .map(|r| (Domain::literal(&r.domain), Software::from_name(&r.software)))
        .collect())
}

/// One row per graph node, neutral nodes labelled 0.
pub fn write_partition(path: impl AsRef<Path>, g: &SignedGraph, p: &Partition) -> Result<()> {
    write_rows_with_header(
        path,
        &["domain", "group"],
        g.nodes().iter().map(|d| (d.as_str(), p.group_of(d))),
    )
}

/// Reads a partition file. `k` defaults to the largest group id present
/// (at least 2), which loses trailing empty groups.
pub fn read_partition(path: impl AsRef<Path>, k: Option<usize>) -> Result<Partition> {
    let rows: Vec<PartitionRow> = read_rows(path)?;
    let max = rows.iter().map(|r| r.group).max().unwrap_or(0);
    let k = k.unwrap_or(max.max(2));
    let mut p = Partition::new(k);
    for r in rows {
        p.assign(Domain::literal(&r.domain), r.group)?;
    }
    Ok(p)
}

pub fn write_curve(path: impl AsRef<Path>, curve: &ElbowCurve) -> Result<()> {
    let rows = curve.values.iter().flat_map(|(&k, v)| {
        v.iter().enumerate().map(move |(i, &avg_drq)| CurveRow {
            k,
            position: i + 1,
            avg_drq,
        })
    });
    write_rows_with_header(path, &["k", "position", "avg_drq"], rows.map(|r| (r.k, r.position, r.avg_drq)))
}

pub fn read_curve(path: impl AsRef<Path>) -> Result<ElbowCurve> {
    let rows: Vec<CurveRow> = read_rows(path)?;
    let mut values: BTreeMap<usize, Vec<(usize, f64)>> = BTreeMap::new();
    for r in rows {
        values.entry(r.k).or_default().push((r.position, r.avg_drq));
    }
    let values = values
        .into_iter()
        .map(|(k, mut v)| {
            v.sort_by_key(|(pos, _)| *pos);
            (k, v.into_iter().map(|(_, x)| x).collect())
        })
        .collect();
    ElbowCurve::from_values(values)
}

pub fn write_drq(path: impl AsRef<Path>, iterations: &[IterationReport]) -> Result<()> {
    write_rows(path, iterations)
}

pub fn write_verdicts(path: impl AsRef<Path>, verdicts: &[DisparityVerdict]) -> Result<()> {
    write_rows_with_header(
        path,
        &["src", "dst", "weight", "alpha_out", "alpha_in", "kept"],
        verdicts.iter().map(|v| {
            (
                v.src.as_str(),
                v.dst.as_str(),
                v.weight,
                v.alpha_out,
                v.alpha_in,
                v.kept,
            )
        }),
    )
}
