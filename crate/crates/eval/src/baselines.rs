//! Unsigned comparison methods: modularity clustering on the thresholded
//! graph and sign-blind propagation.

use zonegraph::atlas::{atlas_update, build_atlas, Atlas, GovernanceParams};
use zonegraph::graph::BeliefGraph;
use zonegraph::matrix::{SignedMatrices, SparseRows};
use zonegraph::propagation::{build_prior, propagate, ConfidenceState, PropagationParams};
use zonegraph::zones::{threshold_nodes, Zone};
use zonegraph::{build_signed_matrices, Result};

use crate::louvain::{louvain, LouvainParams, WeightedGraph};

/// Louvain communities of the thresholded node set, with undirected weights
/// `w⁺ + w⁻` summed over both directions, passed through the usual
/// coexistence pass.
pub fn unsign_cl(
    m: &SignedMatrices,
    phi: &[f64],
    theta: f64,
    gov: &GovernanceParams,
    louvain_params: &LouvainParams,
) -> Atlas {
    let keep = threshold_nodes(phi, theta);
    let mut local = vec![usize::MAX; phi.len()];
    for (i, &v) in keep.iter().enumerate() {
        local[v] = i;
    }
    let mut edges = Vec::new();
    for &u in &keep {
        for &(v, w) in m.supp.row(u).iter().chain(m.contr.row(u)) {
            if v != u && local[v] != usize::MAX {
                edges.push((local[u], local[v], w));
            }
        }
    }
    let g = WeightedGraph::from_edges(keep.len(), edges);
    let zones = louvain(&g, louvain_params)
        .into_iter()
        .filter_map(|c| Zone::new(c.into_iter().map(|l| keep[l]).collect(), phi).ok())
        .collect();
    atlas_update(zones, phi, m, gov)
}

/// Matrices with every edge treated as support: `supp + contr` and no
/// contradiction.
pub fn unsigned_matrices(m: &SignedMatrices) -> SignedMatrices {
    SignedMatrices::from_raw(m.supp.add_scaled(&m.contr, 1.0), SparseRows::zeros(m.dim()))
}

/// Sign-blind propagation: `η = 0` over the row-capped unsigned matrix, with
/// the prior built from that matrix.
pub fn unsign_pro(
    graph: &BeliefGraph,
    params: &PropagationParams,
) -> Result<(SignedMatrices, Vec<f64>, ConfidenceState)> {
    let unsigned = unsigned_matrices(&build_signed_matrices(graph));
    let params = PropagationParams {
        eta: 0.0,
        ..params.clone()
    };
    params.validate()?;
    let b = build_prior(graph, &unsigned, &params.prior)?;
    let state = propagate(&b, &unsigned, &params, &graph.authorities());
    Ok((unsigned, b, state))
}

/// Atlas of the sign-blind pipeline at threshold `theta`.
pub fn unsign_pro_atlas(
    unsigned: &SignedMatrices,
    phi: &[f64],
    theta: f64,
    gov: &GovernanceParams,
) -> Atlas {
    build_atlas(phi, theta, unsigned, gov)
}
