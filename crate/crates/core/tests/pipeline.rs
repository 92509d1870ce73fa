use std::collections::BTreeSet;

use fedipol_core::backbone::{disparity_filter, Retention};
use fedipol_core::polarize::{elbow_curve, scg_detect, suggest_k, Partition};
use fedipol_core::synthetic::{planted_snapshot, PlantedSnapshot};
use fedipol_core::{
    build_negative_graph, build_positive_graph, merge_signed, AmbiguityPolicy, Domain, Sign, SignedGraph,
    WeightMode,
};

fn signed_from_fixture(seed: u64) -> (SignedGraph, usize, usize) {
    let snap = planted_snapshot(&PlantedSnapshot::default(), seed);
    let pos = build_positive_graph(&snap.follows, WeightMode::DistinctFollowers);
    let neg = build_negative_graph(&snap.blocks);
    let (backbone, _) = disparity_filter(&pos, 0.05, Retention::EitherSide).unwrap();
    let g = merge_signed(&backbone, &neg, AmbiguityPolicy::DropBoth);
    (g, backbone.edge_count(), neg.edge_count())
}

fn pole_groups(p: &Partition) -> BTreeSet<BTreeSet<String>> {
    (1..=p.k())
        .map(|i| p.members(i).into_iter().map(|d: &Domain| d.to_string()).collect::<BTreeSet<_>>())
        .filter(|s| !s.is_empty())
        .collect()
}

#[test]
fn edge_accounting_holds() {
    for seed in 0..5 {
        let (g, pos_edges, neg_edges) = signed_from_fixture(seed);
        let prov = g.provenance();
        assert_eq!(g.edge_count() + prov.removed_edges(), pos_edges + neg_edges);
        assert_eq!(g.count_by_sign(Sign::Positive) + prov.removed_positive, pos_edges);
    }
}

#[test]
fn planted_poles_are_recovered() {
    let (g, _, _) = signed_from_fixture(7);
    let out = scg_detect(&g, 3, 1).unwrap();
    let expected: BTreeSet<BTreeSet<String>> = (1..=3)
        .map(|pole| (0..6).map(|i| format!("i{i}.pole{pole}.example")).collect())
        .collect();
    assert_eq!(pole_groups(&out.partition), expected);
    let curve = elbow_curve(&g, 2, 10, 10, 3).unwrap();
    let s = suggest_k(&curve).unwrap();
    assert!(s.discernible);
    assert_eq!(s.k, 3, "{:?}", s.diagnostics);
}
