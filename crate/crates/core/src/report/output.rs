use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::{
    activity_stats, ban_keywords, flow_matrices, group_label, group_stats, top_instances, ActivityStats,
    ActivityWindow, AvgBansMode, FlowMatrix, GroupStats, KeywordRanking, Membership, Stopwords, TopInstances,
};
use crate::error::Result;
use crate::io::tables::write_rows_with_header;
use crate::model::{ActivityRecord, Domain, DomainBlockRecord, Software};
use crate::polarize::elbow::ElbowCurve;
use crate::polarize::partition::Partition;
use crate::signed::{NegativeGraph, PositiveGraph, SignedGraph};

/// All characterization tables for one partition.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub k: usize,
    pub groups: Vec<GroupStats>,
    pub flow_pos: FlowMatrix,
    pub flow_neg: FlowMatrix,
    pub top: Vec<TopInstances>,
    pub activity: Vec<ActivityStats>,
    pub keywords: Vec<KeywordRanking>,
}

pub struct ReportInputs<'a> {
    pub signed: &'a SignedGraph,
    /// Filtered positive graph, for in-strength.
    pub positive: &'a PositiveGraph,
    pub negative: &'a NegativeGraph,
    pub partition: &'a Partition,
    pub software: &'a BTreeMap<Domain, Software>,
    pub blocks: &'a [DomainBlockRecord],
    pub activity: &'a [ActivityRecord],
    pub stopwords: &'a Stopwords,
    pub avg_bans: AvgBansMode,
    pub window: ActivityWindow,
}

impl Report {
    /// Groups range over the nodes of the signed graph.
    pub fn build(inp: &ReportInputs<'_>) -> Self {
        let m = Membership::new(inp.signed.nodes(), inp.partition);
        let (flow_pos, flow_neg) = flow_matrices(inp.signed, &m);
        Report {
            k: m.k(),
            groups: group_stats(inp.signed, &m, inp.software, inp.avg_bans),
            flow_pos,
            flow_neg,
            top: top_instances(inp.positive, inp.negative, &m),
            activity: activity_stats(&m, inp.activity, inp.window),
            keywords: ban_keywords(inp.blocks, &m, inp.stopwords),
        }
    }
}

fn write_flow_wide(path: &Path, f: &FlowMatrix) -> Result<()> {
    let labels: Vec<String> = (0..f.groups()).map(group_label).collect();
    let mut header = vec!["from".to_string()];
    header.extend(labels.iter().cloned());
    header.push("edges".into());
    header.push("zero_row".into());
    let header_ref: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = (0..f.groups()).map(|r| {
        let mut row = vec![labels[r].clone()];
        row.extend(f.percent[r].iter().map(|p| p.to_string()));
        row.push(f.row_total(r).to_string());
        row.push(f.zero_rows.contains(&r).to_string());
        row
    });
    write_rows_with_header(path, &header_ref, rows)
}

/// Writes the report tables into `dir` and returns the paths written.
pub fn write_report(dir: impl AsRef<Path>, r: &Report) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| crate::Error::io(dir, e))?;
    let mut written = Vec::new();
    let mut out = |name: &str| {
        let p = dir.join(name);
        written.push(p.clone());
        p
    };

    write_rows_with_header(
        out("group_stats.csv"),
        &[
            "group", "label", "size", "mastodon_pct", "unknown_software", "incoming_bans", "banned_members",
            "avg_bans", "banned_pct", "avg_bans_undefined", "empty",
        ],
        r.groups.iter().map(|s| {
            (
                s.group,
                group_label(s.group),
                s.size,
                s.mastodon_pct,
                s.unknown_software,
                s.incoming_bans,
                s.banned_members,
                s.avg_bans,
                s.banned_pct,
                s.avg_bans_undefined,
                s.empty,
            )
        }),
    )?;
    write_flow_wide(&out("flow_pos.csv"), &r.flow_pos)?;
    write_flow_wide(&out("flow_neg.csv"), &r.flow_neg)?;
    write_rows_with_header(
        out("top_instances.csv"),
        &["group", "label", "most_interacted", "in_strength", "most_banned", "ban_in_degree"],
        r.top.iter().map(|t| {
            (
                t.group,
                group_label(t.group),
                t.most_interacted.as_ref().map(|x| x.0.to_string()).unwrap_or_default(),
                t.most_interacted.as_ref().map(|x| x.1),
                t.most_banned.as_ref().map(|x| x.0.to_string()).unwrap_or_default(),
                t.most_banned.as_ref().map(|x| x.1),
            )
        }),
    )?;
    write_rows_with_header(
        out("activity.csv"),
        &["group", "label", "volume", "reporting_instances", "avg", "top_instance", "top_volume", "top_pct", "no_data"],
        r.activity.iter().map(|a| {
            (
                a.group,
                group_label(a.group),
                a.volume,
                a.reporting,
                a.avg,
                a.top_instance.as_ref().map(Domain::to_string).unwrap_or_default(),
                a.top_volume,
                a.top_pct,
                a.no_data,
            )
        }),
    )?;
    write_rows_with_header(
        out("keywords.csv"),
        &["group", "label", "rank", "keyword", "count"],
        r.keywords.iter().flat_map(|k| {
            k.keywords
                .iter()
                .enumerate()
                .map(move |(i, (w, c))| (k.group, group_label(k.group), i + 1, w.clone(), *c))
        }),
    )?;
    write_rows_with_header(
        out("flows_long.csv"),
        &["sign", "from", "to", "edges", "percent"],
        [&r.flow_pos, &r.flow_neg].into_iter().flat_map(|f| {
            (0..f.groups()).flat_map(move |a| {
                (0..f.groups()).map(move |b| {
                    (f.sign.value(), group_label(a), group_label(b), f.counts[a][b], f.percent[a][b])
                })
            })
        }),
    )?;
    Ok(written)
}

/// Plot-ready elbow curve: one row per (k, position).
pub fn write_elbow_long(path: impl AsRef<Path>, curve: &ElbowCurve) -> Result<()> {
    write_rows_with_header(
        path,
        &["k", "position", "avg_drq", "runs"],
        curve
            .values
            .iter()
            .flat_map(|(&k, v)| v.iter().enumerate().map(move |(i, &x)| (k, i + 1, x, curve.runs))),
    )
}
