use super::Membership;
use crate::model::Domain;
use crate::signed::{Sign, SignedGraph};

/// Edge counts between groups and their row-normalized percentages.
/// Rows and columns are indexed by group, neutral first.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowMatrix {
    pub sign: Sign,
    pub counts: Vec<Vec<u64>>,
    pub percent: Vec<Vec<f64>>,
    /// Rows without any outgoing edge; their percentages are all zero.
    pub zero_rows: Vec<usize>,
}

impl FlowMatrix {
    pub fn groups(&self) -> usize {
        self.counts.len()
    }

    pub fn row_total(&self, row: usize) -> u64 {
        self.counts[row].iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }
}

/// Flow matrix of one sign. Endpoints outside the membership count as
/// neutral.
pub fn flow_matrix<'a>(
    edges: impl IntoIterator<Item = (&'a Domain, &'a Domain)>,
    m: &Membership,
    sign: Sign,
) -> FlowMatrix {
    let n = m.group_count();
    let mut counts = vec![vec![0u64; n]; n];
    for (s, d) in edges {
        counts[m.group_or_neutral(s)][m.group_or_neutral(d)] += 1;
    }
    let mut zero_rows = Vec::new();
    let percent = counts
        .iter()
        .enumerate()
        .map(|(r, row)| {
            let total: u64 = row.iter().sum();
            if total == 0 {
                zero_rows.push(r);
                vec![0.0; n]
            } else {
                row.iter().map(|&c| 100.0 * c as f64 / total as f64).collect()
            }
        })
        .collect();
    FlowMatrix {
        sign,
        counts,
        percent,
        zero_rows,
    }
}

/// Positive and negative flow matrices of a signed graph.
pub fn flow_matrices(g: &SignedGraph, m: &Membership) -> (FlowMatrix, FlowMatrix) {
    let of_sign = |sign| {
        flow_matrix(
            g.labelled_edges().filter(move |e| e.2 == sign).map(|(s, d, _)| (s, d)),
            m,
            sign,
        )
    };
    (of_sign(Sign::Positive), of_sign(Sign::Negative))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polarize::partition::Partition;

    fn d(s: &str) -> Domain {
        Domain::literal(s)
    }

    fn membership(groups: &[(&str, usize)], k: usize) -> Membership {
        let mut p = Partition::new(k);
        for (x, g) in groups {
            p.assign(d(x), *g).unwrap();
        }
        let universe: Vec<Domain> = groups.iter().map(|(x, _)| d(x)).collect();
        Membership::new(&universe, &p)
    }

    #[test]
    fn row_normalization() {
        let m = membership(&[("a", 1), ("a2", 1), ("b", 2), ("c", 3)], 3);
        let edges = [(d("a"), d("b")), (d("a2"), d("b")), (d("a"), d("c"))];
        let f = flow_matrix(edges.iter().map(|(s, t)| (s, t)), &m, Sign::Positive);
        assert_eq!(f.counts[1], vec![0, 0, 2, 1]);
        let row = &f.percent[1];
        assert_eq!(row[0], 0.0);
        assert!((row[2] - 66.666_666_666_666_67).abs() < 1e-9);
        assert!((row[3] - 33.333_333_333_333_33).abs() < 1e-9);
        assert_eq!(f.zero_rows, vec![0, 2, 3]);
    }

    #[test]
    fn self_contained_group() {
        let m = membership(&[("a", 1), ("b", 1), ("c", 2)], 2);
        let edges = [(d("a"), d("b")), (d("b"), d("a")), (d("c"), d("a"))];
        let f = flow_matrix(edges.iter().map(|(s, t)| (s, t)), &m, Sign::Negative);
        assert_eq!(f.percent[1], vec![0.0, 100.0, 0.0]);
        assert_eq!(f.percent[2], vec![0.0, 100.0, 0.0]);
        assert_eq!(f.zero_rows, vec![0]);
    }

    #[test]
    fn outside_endpoints_are_neutral() {
        let m = membership(&[("a", 1)], 2);
        let edges = [(d("zz"), d("a"))];
        let f = flow_matrix(edges.iter().map(|(s, t)| (s, t)), &m, Sign::Negative);
        assert_eq!(f.counts[0][1], 1);
    }
}
