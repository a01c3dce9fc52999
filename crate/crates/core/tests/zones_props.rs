mod common;

use common::signed_graph;
use proptest::prelude::*;
use zonegraph::graph::NodeId;
use zonegraph::zones::{balance_test, extract_zones, BalanceResult};
use zonegraph::SignedProjection;

/// Sign products of all simple cycles (length ≥ 3) by exhaustive DFS over
/// the projection's global ids.
fn has_negative_cycle(proj: &SignedProjection) -> bool {
    let verts = proj.vertices().to_vec();
    let n = verts.len();
    let mut adj = vec![Vec::new(); n];
    for (u, v, s) in proj.edges() {
        let (a, b) = (proj.local(u).unwrap(), proj.local(v).unwrap());
        adj[a].push((b, s));
        adj[b].push((a, s));
    }
    fn dfs(
        start: usize,
        at: usize,
        depth: usize,
        sign: i8,
        adj: &[Vec<(usize, i8)>],
        on: &mut [bool],
    ) -> bool {
        for &(next, s) in &adj[at] {
            if next == start && depth >= 3 && sign * s == -1 {
                return true;
            }
            if next > start && !on[next] {
                on[next] = true;
                if dfs(start, next, depth + 1, sign * s, adj, on) {
                    return true;
                }
                on[next] = false;
            }
        }
        false
    }
    (0..n).any(|s| {
        let mut on = vec![false; n];
        on[s] = true;
        dfs(s, s, 1, 1, &adj, &mut on)
    })
}

fn phi_for(n: usize, raw: &[f64]) -> Vec<f64> {
    raw[..n].to_vec()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn balance_agrees_with_cycle_enumeration(g in signed_graph(12, 22)) {
        let all: Vec<NodeId> = (0..g.node_count()).collect();
        let proj = SignedProjection::from_graph(&g, &all);
        let result = balance_test(&proj, &all);
        prop_assert_eq!(result.is_balanced(), !has_negative_cycle(&proj));
        match result {
            BalanceResult::Unbalanced(cert) => {
                prop_assert!(cert.is_valid(&proj));
                // Direct multiplication around the cycle.
                let k = cert.cycle.len();
                let product: i8 = (0..k)
                    .map(|i| proj.edge(cert.cycle[i], cert.cycle[(i + 1) % k]).unwrap().sign)
                    .product();
                prop_assert_eq!(product, -1);
            }
            BalanceResult::Balanced(colouring) => {
                let colour = |v: NodeId| colouring.iter().find(|c| c.0 == v).unwrap().1;
                for (u, v, s) in proj.edges() {
                    prop_assert_eq!(colour(u) == colour(v), s == 1);
                }
            }
        }
    }

    #[test]
    fn extracted_zones_are_balanced_and_deterministic(
        g in signed_graph(14, 40),
        raw_phi in prop::collection::vec(0.0f64..=1.0, 14),
        theta in 0.0f64..0.8,
    ) {
        let phi = phi_for(g.node_count(), &raw_phi);
        let keep: Vec<NodeId> = (0..phi.len()).filter(|&v| phi[v] >= theta).collect();
        let proj = SignedProjection::from_graph(&g, &keep);
        let zones = extract_zones(&proj, &phi);
        for z in &zones {
            prop_assert!(balance_test(&proj, z.members()).is_balanced());
            prop_assert!(z.members().iter().all(|&v| phi[v] >= theta));
        }
        prop_assert_eq!(&zones, &extract_zones(&proj, &phi));
        // Inclusion-maximal within one call.
        for (i, a) in zones.iter().enumerate() {
            for (j, b) in zones.iter().enumerate() {
                prop_assert!(i == j || !a.is_subset_of(b));
            }
        }
    }
}
