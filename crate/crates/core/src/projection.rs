//! Undirected signed projection with the majority-sign rule.

use std::collections::{BTreeMap, HashMap};

use crate::graph::{BeliefGraph, NodeId};
use crate::matrix::{build_signed_matrices, SignedMatrices};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectedEdge {
    /// Local index of the neighbour.
    pub to: usize,
    /// `+1` when `w_pos >= w_neg`, otherwise `-1`.
    pub sign: i8,
    pub w_pos: f64,
    pub w_neg: f64,
}

impl ProjectedEdge {
    pub fn weight(&self) -> f64 {
        self.w_pos + self.w_neg
    }
}

/// Undirected signed graph over a vertex subset.
///
/// Vertices are stored in ascending global id; adjacency lists are indexed
/// by local position and sorted by neighbour.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedProjection {
    vertices: Vec<NodeId>,
    local: HashMap<NodeId, usize>,
    adj: Vec<Vec<ProjectedEdge>>,
}

impl SignedProjection {
    /// Projects the aggregated weights onto `keep`, summing both directions
    /// of every unordered pair.
    pub fn from_matrices(m: &SignedMatrices, keep: &[NodeId]) -> Self {
        let mut vertices: Vec<NodeId> = keep.to_vec();
        vertices.sort_unstable();
        vertices.dedup();
        let local: HashMap<NodeId, usize> =
            vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();

        // (lo, hi) -> [supp lo->hi, supp hi->lo, contr lo->hi, contr hi->lo]
        let mut pairs: BTreeMap<(usize, usize), [f64; 4]> = BTreeMap::new();
        for (li, &u) in vertices.iter().enumerate() {
            for (slot, mat) in [(0usize, &m.supp), (2usize, &m.contr)] {
                for &(v, w) in mat.row(u) {
                    let Some(&lj) = local.get(&v) else { continue };
                    if lj == li {
                        continue;
                    }
                    let (key, dir) = if li < lj {
                        ((li, lj), 0)
                    } else {
                        ((lj, li), 1)
                    };
                    pairs.entry(key).or_insert([0.0; 4])[slot + dir] += w;
                }
            }
        }

        let mut adj = vec![Vec::new(); vertices.len()];
        for ((a, b), w) in pairs {
            let w_pos = w[0] + w[1];
            let w_neg = w[2] + w[3];
            if w_pos + w_neg <= 0.0 {
                continue;
            }
            let sign = if w_pos >= w_neg { 1 } else { -1 };
            adj[a].push(ProjectedEdge {
                to: b,
                sign,
                w_pos,
                w_neg,
            });
            adj[b].push(ProjectedEdge {
                to: a,
                sign,
                w_pos,
                w_neg,
            });
        }
        for list in &mut adj {
            list.sort_by_key(|e| e.to);
        }
        Self {
            vertices,
            local,
            adj,
        }
    }

    pub fn from_graph(graph: &BeliefGraph, keep: &[NodeId]) -> Self {
        Self::from_matrices(&build_signed_matrices(graph), keep)
    }

    /// Projection over every node of the matrices.
    pub fn full(m: &SignedMatrices) -> Self {
        let all: Vec<NodeId> = (0..m.dim()).collect();
        Self::from_matrices(m, &all)
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Global ids, ascending.
    pub fn vertices(&self) -> &[NodeId] {
        &self.vertices
    }

    pub fn global(&self, local: usize) -> NodeId {
        self.vertices[local]
    }

    pub fn local(&self, global: NodeId) -> Option<usize> {
        self.local.get(&global).copied()
    }

    pub fn contains(&self, global: NodeId) -> bool {
        self.local.contains_key(&global)
    }

    pub fn neighbours(&self, local: usize) -> &[ProjectedEdge] {
        &self.adj[local]
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Edge between two global ids, if any.
    pub fn edge(&self, u: NodeId, v: NodeId) -> Option<&ProjectedEdge> {
        let (lu, lv) = (self.local(u)?, self.local(v)?);
        self.adj[lu]
            .binary_search_by_key(&lv, |e| e.to)
            .ok()
            .map(|k| &self.adj[lu][k])
    }

    /// Undirected edges as `(u, v, sign)` global triples with `u < v`.
    pub fn edges(&self) -> Vec<(NodeId, NodeId, i8)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (a, list) in self.adj.iter().enumerate() {
            for e in list {
                if a < e.to {
                    out.push((self.vertices[a], self.vertices[e.to], e.sign));
                }
            }
        }
        out
    }

    /// Number of projected edges with both endpoints in `members` (global ids).
    pub fn internal_edge_count(&self, members: &[NodeId]) -> usize {
        let locals: Vec<usize> = members.iter().filter_map(|&v| self.local(v)).collect();
        let inside: std::collections::HashSet<usize> = locals.iter().copied().collect();
        locals
            .iter()
            .map(|&a| {
                self.adj[a]
                    .iter()
                    .filter(|e| a < e.to && inside.contains(&e.to))
                    .count()
            })
            .sum()
    }

    /// Connected components over the given alive mask (local indices), each
    /// sorted, listed by smallest member.
    pub fn components(&self, alive: &[bool]) -> Vec<Vec<usize>> {
        let n = self.vertices.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        let mut stack = Vec::new();
        for start in 0..n {
            if seen[start] || !alive[start] {
                continue;
            }
            let mut comp = Vec::new();
            seen[start] = true;
            stack.push(start);
            while let Some(u) = stack.pop() {
                comp.push(u);
                for e in &self.adj[u] {
                    if alive[e.to] && !seen[e.to] {
                        seen[e.to] = true;
                        stack.push(e.to);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{BeliefNode, TypedEdge};

    fn graph(n: usize, edges: Vec<TypedEdge>) -> BeliefGraph {
        let nodes = (0..n)
            .map(|i| BeliefNode::new(format!("n{i}"), 1.0))
            .collect();
        BeliefGraph::new(nodes, edges).unwrap()
    }

    #[test]
    fn majority_sign_support_wins() {
        let g = graph(
            2,
            vec![
                TypedEdge::support(0, 1, 1.0),
                TypedEdge::contradiction(1, 0, 0.4),
            ],
        );
        let p = SignedProjection::from_graph(&g, &[0, 1]);
        let e = p.edge(0, 1).unwrap();
        assert_eq!(e.sign, 1);
        assert_eq!((e.w_pos, e.w_neg), (1.0, 0.4));
    }

    #[test]
    fn tie_is_positive() {
        let g = graph(
            2,
            vec![
                TypedEdge::support(0, 1, 0.5),
                TypedEdge::contradiction(0, 1, 0.5),
            ],
        );
        assert_eq!(
            SignedProjection::from_graph(&g, &[0, 1])
                .edge(0, 1)
                .unwrap()
                .sign,
            1
        );
    }

    #[test]
    fn no_interaction_no_edge() {
        let g = graph(3, vec![TypedEdge::support(0, 1, 1.0)]);
        let p = SignedProjection::from_graph(&g, &[0, 1, 2]);
        assert!(p.edge(0, 2).is_none());
        assert_eq!(p.edge_count(), 1);
    }

    #[test]
    fn keep_restricts_vertices() {
        let g = graph(
            3,
            vec![
                TypedEdge::support(0, 1, 1.0),
                TypedEdge::contradiction(1, 2, 1.0),
            ],
        );
        let p = SignedProjection::from_graph(&g, &[2, 1]);
        assert_eq!(p.vertices(), &[1, 2]);
        assert_eq!(p.edges(), vec![(1, 2, -1)]);
    }
}
