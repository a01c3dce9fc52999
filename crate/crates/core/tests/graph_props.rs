mod common;

use common::{build, RawEdge};
use proptest::prelude::*;
use zonegraph::graph::NodeId;
use zonegraph::{build_signed_matrices, SignedProjection};

fn raw_graph() -> impl Strategy<Value = (usize, Vec<RawEdge>, Vec<f64>)> {
    (2usize..=12).prop_flat_map(|n| {
        (
            Just(n),
            prop::collection::vec(
                (
                    0..n,
                    0..n,
                    prop::sample::select(&[-1i8, 0, 1][..]),
                    0.05f64..3.0,
                ),
                0..40,
            ),
            prop::collection::vec(0.0f64..=1.0, n),
        )
    })
}

proptest! {
    #[test]
    fn capped_rows_sum_to_at_most_one((n, edges, psi) in raw_graph()) {
        let m = build_signed_matrices(&build(n, &edges, &psi));
        for i in 0..n {
            prop_assert!(m.supp_norm.row_sum(i) <= 1.0 + 1e-12);
            prop_assert!(m.contr_norm.row_sum(i) <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn edge_order_does_not_matter(
        (n, edges, shuffled, psi) in raw_graph().prop_flat_map(|(n, e, p)| {
            (Just(n), Just(e.clone()), Just(e).prop_shuffle(), Just(p))
        })
    ) {
        let a = build_signed_matrices(&build(n, &edges, &psi));
        let b = build_signed_matrices(&build(n, &shuffled, &psi));
        prop_assert_eq!(a, b);
    }

    #[test]
    fn projection_commutes_with_relabelling(
        (n, edges, psi, perm) in raw_graph().prop_flat_map(|(n, e, p)| {
            (Just(n), Just(e), Just(p), Just((0..n).collect::<Vec<_>>()).prop_shuffle())
        })
    ) {
        let g = build(n, &edges, &psi);
        let moved: Vec<RawEdge> = edges.iter().map(|&(u, v, s, w)| (perm[u], perm[v], s, w)).collect();
        let mut moved_psi = vec![0.0; n];
        for i in 0..n {
            moved_psi[perm[i]] = psi[i];
        }
        let h = build(n, &moved, &moved_psi);
        let all: Vec<NodeId> = (0..n).collect();
        let original = SignedProjection::from_graph(&g, &all).edges();
        let mut inverse = vec![0; n];
        for i in 0..n {
            inverse[perm[i]] = i;
        }
        let mut back: Vec<(NodeId, NodeId, i8)> = SignedProjection::from_graph(&h, &all)
            .edges()
            .into_iter()
            .map(|(u, v, s)| {
                let (a, b) = (inverse[u], inverse[v]);
                (a.min(b), a.max(b), s)
            })
            .collect();
        back.sort_unstable();
        let mut original = original;
        original.sort_unstable();
        prop_assert_eq!(back, original);
    }

    #[test]
    fn neutral_edges_only_bookkeep((n, edges, psi) in raw_graph(), extra in prop::collection::vec((0usize..12, 0usize..12, 0.1f64..2.0), 1..10)) {
        let signed: Vec<RawEdge> = edges.iter().copied().filter(|e| e.2 != 0).collect();
        let mut with_neutral = signed.clone();
        with_neutral.extend(extra.iter().map(|&(u, v, w)| (u % n, v % n, 0i8, w)));
        let (a, b) = (build(n, &signed, &psi), build(n, &with_neutral, &psi));
        prop_assert_eq!(build_signed_matrices(&a), build_signed_matrices(&b));
        let loops = with_neutral.iter().filter(|e| e.0 == e.1).count();
        prop_assert_eq!(b.edge_count(), with_neutral.len() - loops);
    }
}
