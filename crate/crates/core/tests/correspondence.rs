use fedipol_core::polarize::{conflict_score, drq_quotient, PairSum, Partition};
use fedipol_core::synthetic::random_symmetric_signed_graph;
use fedipol_core::{symmetrize, SignedGraph};
use proptest::prelude::*;

/// One edge per unordered pair, lower index first.
fn undirected(g: &SignedGraph) -> SignedGraph {
    SignedGraph::from_parts(
        g.nodes().to_vec(),
        g.labelled_edges()
            .filter(|(s, d, _)| s < d)
            .map(|(s, d, sign)| (s.clone(), d.clone(), sign)),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn quotient_is_twice_the_score(
        n in 2usize..14,
        density in 0.1f64..1.0,
        neg in 0.0f64..1.0,
        graph_seed in any::<u64>(),
        labels in proptest::collection::vec(0usize..3, 14),
    ) {
        let g = random_symmetric_signed_graph(n, density, neg, graph_seed);
        let labels = &labels[..n];
        prop_assume!(labels.iter().any(|&l| l != 0));
        let x: Vec<i8> = labels.iter().map(|&l| [0, 1, -1][l]).collect();
        let p = Partition::from_labels(&g, labels, 2).unwrap();
        let q = drq_quotient(&symmetrize(&g), &x).unwrap();
        let s = conflict_score(&undirected(&g), &p, PairSum::Unordered).unwrap();
        prop_assert!((q - 2.0 * s).abs() <= 1e-12, "{} vs 2 * {}", q, s);
    }

    #[test]
    fn score_ignores_relabeling_and_isolated_nodes(
        n in 2usize..10,
        graph_seed in any::<u64>(),
        labels in proptest::collection::vec(0usize..4, 10),
    ) {
        let g = random_symmetric_signed_graph(n, 0.5, 0.5, graph_seed);
        let labels = &labels[..n];
        prop_assume!(labels.iter().any(|&l| l != 0));
        let p = Partition::from_labels(&g, labels, 3).unwrap();
        let s = conflict_score(&g, &p, PairSum::Unordered).unwrap();
        for perm in [[2, 3, 1], [3, 1, 2], [2, 1, 3]] {
            let r = p.relabel(&perm).unwrap();
            prop_assert_eq!(conflict_score(&g, &r, PairSum::Unordered).unwrap(), s);
        }
        let mut nodes = g.nodes().to_vec();
        nodes.push(fedipol_core::Domain::literal("zz-isolated"));
        let bigger = SignedGraph::from_parts(
            nodes,
            g.labelled_edges().map(|(a, b, sign)| (a.clone(), b.clone(), sign)),
        )
        .unwrap();
        prop_assert_eq!(conflict_score(&bigger, &p, PairSum::Unordered).unwrap(), s);
    }
}
