//! Positive, negative and merged signed instance graphs.
//!
//! Follow records between users are lifted to a weighted directed graph
//! between their home instances; domain blocks become unweighted negative
//! edges. Merging drops pairs that carry both signs and forgets weights.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::SymmetricSignedMatrix;
use crate::model::{Domain, DomainBlockRecord, FollowRecord, UserRef};

/// How `w(i, j)` is counted from follow records.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightMode {
    /// Number of distinct users of `i` following at least one user of `j`.
    #[default]
    DistinctFollowers,
    /// Number of distinct user-level follow links from `i` to `j`.
    FollowLinks,
}

/// Directed weighted graph of follow-derived interactions.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PositiveGraph {
    nodes: BTreeSet<Domain>,
    edges: BTreeMap<(Domain, Domain), u64>,
}

impl PositiveGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a graph from explicit weighted edges. Self-loops, zero
    /// weights and repeated pairs are rejected.
    pub fn from_edges<I>(edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Domain, Domain, u64)>,
    {
        let mut g = PositiveGraph::new();
        for (src, dst, w) in edges {
            if src == dst {
                return Err(Error::Graph(format!("self-loop on {src}")));
            }
            if w == 0 {
                return Err(Error::Graph(format!("zero weight on {src} -> {dst}")));
            }
            g.nodes.insert(src.clone());
            g.nodes.insert(dst.clone());
            if g.edges.insert((src.clone(), dst.clone()), w).is_some() {
                return Err(Error::Graph(format!("duplicate edge {src} -> {dst}")));
            }
        }
        Ok(g)
    }

    pub fn nodes(&self) -> &BTreeSet<Domain> {
        &self.nodes
    }

    pub fn edges(&self) -> impl Iterator<Item = (&Domain, &Domain, u64)> + '_ {
        self.edges.iter().map(|((s, d), w)| (s, d, *w))
    }

    pub fn weight(&self, src: &Domain, dst: &Domain) -> Option<u64> {
        self.edges.get(&(src.clone(), dst.clone())).copied()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Sum of incoming weights per node; nodes without in-edges are absent.
    pub fn in_strength(&self) -> HashMap<&Domain, u64> {
        let mut s = HashMap::new();
        for ((_, dst), w) in &self.edges {
            *s.entry(dst).or_insert(0) += *w;
        }
        s
    }

    /// Subgraph on the edges accepted by `keep`; nodes left without edges
    /// are dropped.
    pub fn retain_edges(&self, mut keep: impl FnMut(&Domain, &Domain, u64) -> bool) -> Self {
        let mut out = PositiveGraph::new();
        for ((s, d), w) in &self.edges {
            if keep(s, d, *w) {
                out.nodes.insert(s.clone());
                out.nodes.insert(d.clone());
                out.edges.insert((s.clone(), d.clone()), *w);
            }
        }
        out
    }
}

/// Directed graph of instance-level bans.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NegativeGraph {
    nodes: BTreeSet<Domain>,
    edges: BTreeSet<(Domain, Domain)>,
}

impl NegativeGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Repeated pairs collapse; self-loops are rejected.
    pub fn from_edges<I>(edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Domain, Domain)>,
    {
        let mut g = NegativeGraph::new();
        for (src, dst) in edges {
            if src == dst {
                return Err(Error::Graph(format!("self-loop on {src}")));
            }
            g.nodes.insert(src.clone());
            g.nodes.insert(dst.clone());
            g.edges.insert((src, dst));
        }
        Ok(g)
    }

    pub fn nodes(&self) -> &BTreeSet<Domain> {
        &self.nodes
    }

    pub fn edges(&self) -> impl Iterator<Item = (&Domain, &Domain)> + '_ {
        self.edges.iter().map(|(s, d)| (s, d))
    }

    pub fn contains(&self, src: &Domain, dst: &Domain) -> bool {
        self.edges.contains(&(src.clone(), dst.clone()))
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn in_degree(&self) -> HashMap<&Domain, usize> {
        let mut deg = HashMap::new();
        for (_, dst) in &self.edges {
            *deg.entry(dst).or_insert(0) += 1;
        }
        deg
    }
}

/// Lifts user follows to instance edges. Follows inside one instance are
/// dropped.
pub fn build_positive_graph(follows: &[FollowRecord], mode: WeightMode) -> PositiveGraph {
    let mut distinct: HashSet<(&UserRef, &Domain, Option<&UserRef>)> = HashSet::new();
    let mut weights: BTreeMap<(Domain, Domain), u64> = BTreeMap::new();
    for f in follows {
        let (src, dst) = (&f.follower.home, &f.followed.home);
        if src == dst {
            continue;
        }
        let key = match mode {
            WeightMode::DistinctFollowers => (&f.follower, dst, None),
            WeightMode::FollowLinks => (&f.follower, dst, Some(&f.followed)),
        };
        if distinct.insert(key) {
            *weights.entry((src.clone(), dst.clone())).or_insert(0) += 1;
        }
    }
    let nodes = weights
        .keys()
        .flat_map(|(s, d)| [s.clone(), d.clone()])
        .collect();
    PositiveGraph {
        nodes,
        edges: weights,
    }
}

/// Collapses block records into ban edges. Self-blocks are dropped;
/// obfuscated targets are kept under their literal string.
pub fn build_negative_graph(blocks: &[DomainBlockRecord]) -> NegativeGraph {
    let mut g = NegativeGraph::new();
    for b in blocks {
        if b.blocker == b.blocked_domain {
            continue;
        }
        g.nodes.insert(b.blocker.clone());
        g.nodes.insert(b.blocked_domain.clone());
        g.edges.insert((b.blocker.clone(), b.blocked_domain.clone()));
    }
    g
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn value(self) -> i8 {
        match self {
            Sign::Positive => 1,
            Sign::Negative => -1,
        }
    }

    pub fn from_value(v: i64) -> Option<Self> {
        match v {
            1 => Some(Sign::Positive),
            -1 => Some(Sign::Negative),
            _ => None,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

/// What to do with an unordered pair that carries both signs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AmbiguityPolicy {
    /// Remove every edge on the pair.
    #[default]
    DropBoth,
    /// Keep only the negative edges of the pair.
    NegativeWins,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeProvenance {
    /// Unordered pairs that carried both signs.
    pub ambiguous_pairs: usize,
    pub removed_positive: usize,
    pub removed_negative: usize,
}

impl MergeProvenance {
    pub fn removed_edges(&self) -> usize {
        self.removed_positive + self.removed_negative
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SignedEdge {
    pub src: usize,
    pub dst: usize,
    pub sign: Sign,
}

/// Directed graph with one sign per ordered node pair.
///
/// Nodes are kept sorted by domain and addressed by their position.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SignedGraph {
    nodes: Vec<Domain>,
    index: HashMap<Domain, usize>,
    edges: Vec<SignedEdge>,
    provenance: MergeProvenance,
}

impl SignedGraph {
    /// Builds a graph from explicit edges plus optional extra (possibly
    /// isolated) nodes. A self-loop or an ordered pair given two different
    /// signs is an error; an exact repeat is ignored.
    pub fn from_parts<N, E>(nodes: N, edges: E) -> Result<Self>
    where
        N: IntoIterator<Item = Domain>,
        E: IntoIterator<Item = (Domain, Domain, Sign)>,
    {
        let mut signs: BTreeMap<(Domain, Domain), Sign> = BTreeMap::new();
        let mut all: BTreeSet<Domain> = nodes.into_iter().collect();
        for (src, dst, sign) in edges {
            if src == dst {
                return Err(Error::Graph(format!("self-loop on {src}")));
            }
            all.insert(src.clone());
            all.insert(dst.clone());
            if let Some(prev) = signs.insert((src.clone(), dst.clone()), sign) {
                if prev != sign {
                    return Err(Error::Graph(format!("{src} -> {dst} carries both signs")));
                }
            }
        }
        Ok(Self::assemble(all, signs, MergeProvenance::default()))
    }

    pub fn from_edges<E>(edges: E) -> Result<Self>
    where
        E: IntoIterator<Item = (Domain, Domain, Sign)>,
    {
        Self::from_parts(std::iter::empty(), edges)
    }

    fn assemble(
        nodes: BTreeSet<Domain>,
        signs: BTreeMap<(Domain, Domain), Sign>,
        provenance: MergeProvenance,
    ) -> Self {
        let nodes: Vec<Domain> = nodes.into_iter().collect();
        let index: HashMap<Domain, usize> = nodes
            .iter()
            .enumerate()
            .map(|(i, d)| (d.clone(), i))
            .collect();
        // BTreeMap order over sorted domains gives edges sorted by (src, dst).
        let edges = signs
            .into_iter()
            .map(|((s, d), sign)| SignedEdge {
                src: index[&s],
                dst: index[&d],
                sign,
            })
            .collect();
        SignedGraph {
            nodes,
            index,
            edges,
            provenance,
        }
    }

    pub fn nodes(&self) -> &[Domain] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[SignedEdge] {
        &self.edges
    }

    pub fn index_of(&self, domain: &Domain) -> Option<usize> {
        self.index.get(domain).copied()
    }

    pub fn domain(&self, index: usize) -> &Domain {
        &self.nodes[index]
    }

    pub fn provenance(&self) -> MergeProvenance {
        self.provenance
    }

    pub fn sign(&self, src: &Domain, dst: &Domain) -> Option<Sign> {
        let (s, d) = (self.index_of(src)?, self.index_of(dst)?);
        self.edges
            .binary_search_by(|e| (e.src, e.dst).cmp(&(s, d)))
            .ok()
            .map(|i| self.edges[i].sign)
    }

    /// Labelled edge triples in (src, dst) order.
    pub fn labelled_edges(&self) -> impl Iterator<Item = (&Domain, &Domain, Sign)> + '_ {
        self.edges
            .iter()
            .map(|e| (&self.nodes[e.src], &self.nodes[e.dst], e.sign))
    }

    pub fn count_by_sign(&self, sign: Sign) -> usize {
        self.edges.iter().filter(|e| e.sign == sign).count()
    }
}

fn unordered(a: &Domain, b: &Domain) -> (Domain, Domain) {
    if a <= b {
        (a.clone(), b.clone())
    } else {
        (b.clone(), a.clone())
    }
}

/// Merges the filtered positive graph with the negative graph.
///
/// The node set is restricted to endpoints of surviving edges.
pub fn merge_signed(
    gpos: &PositiveGraph,
    gneg: &NegativeGraph,
    policy: AmbiguityPolicy,
) -> SignedGraph {
    let pos_pairs: HashSet<(Domain, Domain)> = gpos.edges().map(|(s, d, _)| unordered(s, d)).collect();
    let ambiguous: HashSet<(Domain, Domain)> = gneg
        .edges()
        .map(|(s, d)| unordered(s, d))
        .filter(|p| pos_pairs.contains(p))
        .collect();

    let mut provenance = MergeProvenance {
        ambiguous_pairs: ambiguous.len(),
        ..MergeProvenance::default()
    };
    let mut signs = BTreeMap::new();
    for (s, d, _) in gpos.edges() {
        if ambiguous.contains(&unordered(s, d)) {
            provenance.removed_positive += 1;
        } else {
            signs.insert((s.clone(), d.clone()), Sign::Positive);
        }
    }
    for (s, d) in gneg.edges() {
        let on_ambiguous = ambiguous.contains(&unordered(s, d));
        if on_ambiguous && policy == AmbiguityPolicy::DropBoth {
            provenance.removed_negative += 1;
        } else {
            signs.insert((s.clone(), d.clone()), Sign::Negative);
        }
    }
    let nodes = signs
        .keys()
        .flat_map(|(s, d)| [s.clone(), d.clone()])
        .collect();
    SignedGraph::assemble(nodes, signs, provenance)
}

/// Undirected view of `g`: a positive edge in either direction yields +1,
/// a negative one yields -1, and negative wins when both occur.
pub fn symmetrize(g: &SignedGraph) -> SymmetricSignedMatrix {
    SymmetricSignedMatrix::from_entries(
        g.nodes().to_vec(),
        g.edges().iter().map(|e| (e.src, e.dst, e.sign)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{TimeZone, Utc};

    fn d(s: &str) -> Domain {
        Domain::parse(s).unwrap()
    }

    fn follow(fu: &str, fh: &str, tu: &str, th: &str) -> FollowRecord {
        FollowRecord {
            follower: UserRef::new(fu, d(fh)),
            followed: UserRef::new(tu, d(th)),
            observed_at: Utc.timestamp_opt(0, 0).unwrap(),
        }
    }

    fn block(from: &str, to: &str) -> DomainBlockRecord {
        DomainBlockRecord {
            blocker: d(from),
            blocked_domain: Domain::literal(to),
            severity: "suspend".into(),
            comment: String::new(),
            obfuscated: to.contains('*'),
            observed_at: Utc.timestamp_opt(0, 0).unwrap(),
        }
    }

    #[test]
    fn empty_follows_give_empty_graph() {
        let g = build_positive_graph(&[], WeightMode::DistinctFollowers);
        assert_eq!((g.node_count(), g.edge_count()), (0, 0));
    }

    #[test]
    fn distinct_followers_are_counted() {
        let follows = [follow("u1", "a.x", "v", "b.x"), follow("u2", "a.x", "v", "b.x")];
        let g = build_positive_graph(&follows, WeightMode::DistinctFollowers);
        assert_eq!(g.weight(&d("a.x"), &d("b.x")), Some(2));
    }

    #[test]
    fn one_follower_of_many_counts_once() {
        let follows = [
            follow("u1", "a.x", "v1", "b.x"),
            follow("u1", "a.x", "v2", "b.x"),
            follow("u1", "a.x", "v3", "b.x"),
        ];
        let g = build_positive_graph(&follows, WeightMode::DistinctFollowers);
        assert_eq!(g.weight(&d("a.x"), &d("b.x")), Some(1));
        let g = build_positive_graph(&follows, WeightMode::FollowLinks);
        assert_eq!(g.weight(&d("a.x"), &d("b.x")), Some(3));
    }

    #[test]
    fn intra_instance_follows_dropped() {
        let g = build_positive_graph(&[follow("u1", "a.x", "u2", "a.x")], WeightMode::DistinctFollowers);
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.node_count(), 0);
    }

    #[test]
    fn duplicate_blocks_collapse() {
        let g = build_negative_graph(&[block("a.x", "b.x"), block("a.x", "b.x"), block("b.x", "a.x")]);
        assert_eq!(g.edge_count(), 2);
        assert!(build_negative_graph(&[]).edge_count() == 0);
    }

    #[test]
    fn self_blocks_dropped_and_obfuscated_kept() {
        let g = build_negative_graph(&[block("a.x", "a.x"), block("a.x", "b**.net")]);
        assert_eq!(g.edge_count(), 1);
        assert!(g.contains(&d("a.x"), &Domain::literal("b**.net")));
    }

    #[test]
    fn disjoint_merge_is_union() {
        let pos = PositiveGraph::from_edges([(d("a.x"), d("b.x"), 3), (d("c.x"), d("d.x"), 1)]).unwrap();
        let neg = NegativeGraph::from_edges([
            (d("a.x"), d("c.x")),
            (d("b.x"), d("d.x")),
            (d("e.x"), d("a.x")),
        ])
        .unwrap();
        let g = merge_signed(&pos, &neg, AmbiguityPolicy::DropBoth);
        assert_eq!(g.edge_count(), 5);
        assert_eq!(g.provenance().ambiguous_pairs, 0);
        assert_eq!(g.sign(&d("a.x"), &d("b.x")), Some(Sign::Positive));
        assert_eq!(g.sign(&d("e.x"), &d("a.x")), Some(Sign::Negative));
    }

    #[test]
    fn ambiguous_pair_dropped() {
        let pos = PositiveGraph::from_edges([(d("a.x"), d("b.x"), 3)]).unwrap();
        let neg = NegativeGraph::from_edges([(d("b.x"), d("a.x"))]).unwrap();
        let g = merge_signed(&pos, &neg, AmbiguityPolicy::DropBoth);
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.node_count(), 0);
        assert_eq!(g.provenance().ambiguous_pairs, 1);
        assert_eq!(g.provenance().removed_edges(), 2);

        let g = merge_signed(&pos, &neg, AmbiguityPolicy::NegativeWins);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.sign(&d("b.x"), &d("a.x")), Some(Sign::Negative));
        assert_eq!(g.provenance().removed_positive, 1);
    }

    #[test]
    fn same_direction_conflict_is_ambiguous() {
        let pos = PositiveGraph::from_edges([(d("a.x"), d("b.x"), 1)]).unwrap();
        let neg = NegativeGraph::from_edges([(d("a.x"), d("b.x"))]).unwrap();
        let g = merge_signed(&pos, &neg, AmbiguityPolicy::NegativeWins);
        assert_eq!(g.sign(&d("a.x"), &d("b.x")), Some(Sign::Negative));
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn symmetrize_rules() {
        let g = SignedGraph::from_edges([(d("a.x"), d("b.x"), Sign::Positive)]).unwrap();
        let m = symmetrize(&g);
        assert_eq!((m.get(0, 1), m.get(1, 0), m.get(0, 0)), (1, 1, 0));

        let g = SignedGraph::from_edges([
            (d("a.x"), d("b.x"), Sign::Negative),
            (d("b.x"), d("a.x"), Sign::Negative),
        ])
        .unwrap();
        assert_eq!(symmetrize(&g).get(0, 1), -1);

        let g = SignedGraph::from_edges([
            (d("a.x"), d("b.x"), Sign::Positive),
            (d("b.x"), d("a.x"), Sign::Negative),
        ])
        .unwrap();
        let m = symmetrize(&g);
        assert_eq!((m.get(0, 1), m.get(1, 0)), (-1, -1));
    }

    #[test]
    fn symmetrize_after_drop_both_has_zero_for_dropped_pair() {
        let pos = PositiveGraph::from_edges([(d("a.x"), d("b.x"), 3), (d("b.x"), d("c.x"), 2)]).unwrap();
        let neg = NegativeGraph::from_edges([(d("b.x"), d("a.x")), (d("c.x"), d("a.x"))]).unwrap();
        let g = merge_signed(&pos, &neg, AmbiguityPolicy::DropBoth);
        let m = symmetrize(&g);
        // a.x survives through its ban from c.x; the a/b pair is gone.
        let (a, b, c) = (
            g.index_of(&d("a.x")).unwrap(),
            g.index_of(&d("b.x")).unwrap(),
            g.index_of(&d("c.x")).unwrap(),
        );
        assert_eq!(m.get(a, b), 0);
        assert_eq!(m.get(b, c), 1);
        assert_eq!(m.get(a, c), -1);
    }

    #[test]
    fn conflicting_explicit_edges_rejected() {
        let r = SignedGraph::from_edges([
            (d("a.x"), d("b.x"), Sign::Positive),
            (d("a.x"), d("b.x"), Sign::Negative),
        ]);
        assert!(r.is_err());
        assert!(SignedGraph::from_edges([(d("a.x"), d("a.x"), Sign::Positive)]).is_err());
    }
}
