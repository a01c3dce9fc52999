#![allow(dead_code)]

use proptest::prelude::*;
use zonegraph::graph::{BeliefGraph, BeliefNode, Sign, TypedEdge};

/// `(src, dst, sign, weight)`; self-loops are dropped when building.
pub type RawEdge = (usize, usize, i8, f64);

pub fn build(n: usize, edges: &[RawEdge], psi: &[f64]) -> BeliefGraph {
    let nodes = (0..n)
        .map(|i| BeliefNode::new(format!("n{i:02}"), psi[i]))
        .collect();
    let edges = edges
        .iter()
        .filter(|e| e.0 != e.1)
        .map(|&(u, v, s, w)| match s {
            1 => TypedEdge::support(u, v, w),
            -1 => TypedEdge::contradiction(u, v, w),
            _ => TypedEdge::new(u, v, "relates", Sign::Neutral, w),
        })
        .collect();
    BeliefGraph::new(nodes, edges).expect("generated graph is valid")
}

/// Graph with `2..=max_n` nodes and up to `max_edges` edges drawn from
/// `signs`.
pub fn graph_with(
    max_n: usize,
    max_edges: usize,
    signs: &'static [i8],
) -> impl Strategy<Value = BeliefGraph> {
    (2..=max_n)
        .prop_flat_map(move |n| {
            (
                Just(n),
                prop::collection::vec(
                    (0..n, 0..n, prop::sample::select(signs), 0.05f64..2.0),
                    0..=max_edges,
                ),
                prop::collection::vec(0.0f64..=1.0, n),
            )
        })
        .prop_map(|(n, edges, psi)| build(n, &edges, &psi))
}

pub fn signed_graph(max_n: usize, max_edges: usize) -> impl Strategy<Value = BeliefGraph> {
    graph_with(max_n, max_edges, &[-1, 0, 1])
}

pub fn positive_graph(max_n: usize, max_edges: usize) -> impl Strategy<Value = BeliefGraph> {
    graph_with(max_n, max_edges, &[1])
}

pub fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}
