//! Confidence thresholding, signed balance testing and greedy zone extraction.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::projection::SignedProjection;

/// `V_θ = {v : φ_v ≥ θ}` in ascending order.
pub fn threshold_nodes(phi: &[f64], theta: f64) -> Vec<NodeId> {
    phi.iter()
        .enumerate()
        .filter(|(_, &p)| p >= theta)
        .map(|(i, _)| i)
        .collect()
}

/// Empirical quantile with linear interpolation between order statistics:
/// with sorted values `x₀ ≤ … ≤ x_{n−1}` and `h = (n − 1) q`, returns
/// `x_⌊h⌋ + (h − ⌊h⌋)(x_⌊h⌋+1 − x_⌊h⌋)`.
pub fn quantile_threshold(phi: &[f64], q: f64) -> Result<f64> {
    if phi.is_empty() {
        return Err(Error::Empty("quantile of an empty vector"));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Validation(format!(
            "quantile level {q} not in [0, 1]"
        )));
    }
    let mut sorted = phi.to_vec();
    sorted.sort_by(f64::total_cmp);
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = h - lo as f64;
    if frac == 0.0 {
        return Ok(sorted[lo]);
    }
    Ok(sorted[lo] + frac * (sorted[hi] - sorted[lo]))
}

/// Closed walk whose edge-sign product is −1 (global ids; the closing edge
/// runs from the last vertex back to the first).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConflictCertificate {
    pub cycle: Vec<NodeId>,
}

impl ConflictCertificate {
    /// Product of projected edge signs around the cycle, or `None` when a
    /// consecutive pair is not adjacent.
    pub fn sign_product(&self, proj: &SignedProjection) -> Option<i8> {
        let k = self.cycle.len();
        if k < 2 {
            return None;
        }
        let mut product = 1i8;
        for i in 0..k {
            let e = proj.edge(self.cycle[i], self.cycle[(i + 1) % k])?;
            product *= e.sign;
        }
        Some(product)
    }

    pub fn is_valid(&self, proj: &SignedProjection) -> bool {
        let mut seen = self.cycle.clone();
        seen.sort_unstable();
        seen.dedup();
        seen.len() == self.cycle.len() && self.sign_product(proj) == Some(-1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BalanceResult {
    /// Two-colouring as `(node, colour)` pairs in ascending node order.
    Balanced(Vec<(NodeId, u8)>),
    Unbalanced(ConflictCertificate),
}

impl BalanceResult {
    pub fn is_balanced(&self) -> bool {
        matches!(self, BalanceResult::Balanced(_))
    }
}

/// Parity-BFS state over local indices, reused across calls.
struct Parity {
    color: Vec<i8>,
    parent: Vec<usize>,
    depth: Vec<usize>,
    touched: Vec<usize>,
    queue: VecDeque<usize>,
}

enum Bfs {
    Component(Vec<usize>),
    Conflict(Vec<usize>),
}

impl Parity {
    fn new(n: usize) -> Self {
        Self {
            color: vec![-1; n],
            parent: vec![usize::MAX; n],
            depth: vec![0; n],
            touched: Vec::new(),
            queue: VecDeque::new(),
        }
    }

    fn reset(&mut self) {
        for &v in &self.touched {
            self.color[v] = -1;
        }
        self.touched.clear();
        self.queue.clear();
    }

    /// Colours the alive component of `root`; stops at the first edge whose
    /// sign disagrees with the colouring and returns the cycle it closes.
    fn run(&mut self, proj: &SignedProjection, root: usize, alive: &[bool]) -> Bfs {
        self.reset();
        self.color[root] = 0;
        self.parent[root] = root;
        self.depth[root] = 0;
        self.touched.push(root);
        self.queue.push_back(root);
        while let Some(u) = self.queue.pop_front() {
            for e in proj.neighbours(u) {
                let v = e.to;
                if !alive[v] {
                    continue;
                }
                let want = self.color[u] ^ i8::from(e.sign < 0);
                if self.color[v] < 0 {
                    self.color[v] = want;
                    self.parent[v] = u;
                    self.depth[v] = self.depth[u] + 1;
                    self.touched.push(v);
                    self.queue.push_back(v);
                } else if self.color[v] != want {
                    return Bfs::Conflict(self.cycle_through(u, v));
                }
            }
        }
        let mut comp = self.touched.clone();
        comp.sort_unstable();
        Bfs::Component(comp)
    }

    /// Tree path `u → lca → v`; closed by the non-tree edge `(v, u)`.
    fn cycle_through(&self, u: usize, v: usize) -> Vec<usize> {
        let (mut a, mut b) = (u, v);
        let mut left = Vec::new();
        let mut right = Vec::new();
        while self.depth[a] > self.depth[b] {
            left.push(a);
            a = self.parent[a];
        }
        while self.depth[b] > self.depth[a] {
            right.push(b);
            b = self.parent[b];
        }
        while a != b {
            left.push(a);
            right.push(b);
            a = self.parent[a];
            b = self.parent[b];
        }
        left.push(a);
        left.extend(right.into_iter().rev());
        left
    }
}

/// Harary test on the projection induced by `vertices` (global ids). Returns
/// a two-colouring or a negative cycle.
pub fn balance_test(proj: &SignedProjection, vertices: &[NodeId]) -> BalanceResult {
    let n = proj.len();
    let mut alive = vec![false; n];
    let mut locals: Vec<usize> = vertices.iter().filter_map(|&v| proj.local(v)).collect();
    locals.sort_unstable();
    for &l in &locals {
        alive[l] = true;
    }
    let mut parity = Parity::new(n);
    let mut colouring = Vec::with_capacity(locals.len());
    let mut done = vec![false; n];
    for &root in &locals {
        if done[root] {
            continue;
        }
        match parity.run(proj, root, &alive) {
            Bfs::Conflict(cycle) => {
                return BalanceResult::Unbalanced(ConflictCertificate {
                    cycle: cycle.into_iter().map(|l| proj.global(l)).collect(),
                })
            }
            Bfs::Component(comp) => {
                for l in comp {
                    done[l] = true;
                    colouring.push((proj.global(l), parity.color[l] as u8));
                }
            }
        }
    }
    colouring.sort_unstable();
    BalanceResult::Balanced(colouring)
}

/// Candidate reasoning zone.
#[derive(Debug, Clone, PartialEq)]
pub struct Zone {
    members: Vec<NodeId>,
    pub mean_phi: f64,
    pub min_phi: f64,
}

impl Zone {
    /// Builds a zone from members (sorted and deduplicated here).
    pub fn new(mut members: Vec<NodeId>, phi: &[f64]) -> Result<Self> {
        members.sort_unstable();
        members.dedup();
        if members.is_empty() {
            return Err(Error::Empty("zone with no members"));
        }
        if let Some(&bad) = members.iter().find(|&&v| v >= phi.len()) {
            return Err(Error::Validation(format!(
                "zone member {bad} has no confidence value"
            )));
        }
        let mut z = Self {
            members,
            mean_phi: 0.0,
            min_phi: 0.0,
        };
        z.refresh(phi);
        Ok(z)
    }

    /// Recomputes the confidence statistics against a new `phi`.
    pub fn refresh(&mut self, phi: &[f64]) {
        let sum: f64 = self.members.iter().map(|&v| phi[v]).sum();
        self.mean_phi = sum / self.members.len() as f64;
        self.min_phi = self
            .members
            .iter()
            .map(|&v| phi[v])
            .fold(f64::INFINITY, f64::min);
    }

    pub fn members(&self) -> &[NodeId] {
        &self.members
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.members.binary_search(&v).is_ok()
    }

    pub fn mass(&self, phi: &[f64]) -> f64 {
        self.members.iter().map(|&v| phi[v]).sum()
    }

    /// Whether every member of `self` is in `other`.
    pub fn is_subset_of(&self, other: &Zone) -> bool {
        self.members.iter().all(|&v| other.contains(v))
    }

    pub fn map_members(&self, f: impl Fn(NodeId) -> Option<NodeId>, phi: &[f64]) -> Option<Zone> {
        let members: Vec<NodeId> = self.members.iter().filter_map(|&v| f(v)).collect();
        Zone::new(members, phi).ok()
    }
}

/// Post-extraction closure over node sets; identity by default.
pub trait ClosureOperator {
    fn close(&self, members: &[NodeId]) -> Vec<NodeId>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityClosure;

impl ClosureOperator for IdentityClosure {
    fn close(&self, members: &[NodeId]) -> Vec<NodeId> {
        members.to_vec()
    }
}

/// Drops every set strictly contained in another; exact duplicates keep the
/// first occurrence.
pub fn inclusion_maximal(zones: Vec<Zone>) -> Vec<Zone> {
    let mut keep = vec![true; zones.len()];
    for i in 0..zones.len() {
        for j in 0..zones.len() {
            if i == j || !keep[j] {
                continue;
            }
            let (a, b) = (&zones[i], &zones[j]);
            if a.size() <= b.size() && a.is_subset_of(b) && (a.size() < b.size() || j < i) {
                keep[i] = false;
                break;
            }
        }
    }
    zones
        .into_iter()
        .zip(keep)
        .filter_map(|(z, k)| k.then_some(z))
        .collect()
}

/// Greedy extraction with the identity closure.
pub fn extract_zones(proj: &SignedProjection, phi: &[f64]) -> Vec<Zone> {
    extract_zones_with(proj, phi, &IdentityClosure)
}

/// Splits the projection into balanced pieces.
///
/// Pieces are processed in order of their smallest vertex. A balanced piece
/// becomes one zone. Otherwise the vertex on the conflict cycle with the
/// lowest confidence is deleted (ties: lowest weighted degree in the
/// remaining graph, then lowest id) and the remaining pieces are revisited.
/// Deleted vertices never return.
pub fn extract_zones_with(
    proj: &SignedProjection,
    phi: &[f64],
    closure: &dyn ClosureOperator,
) -> Vec<Zone> {
    let n = proj.len();
    let mut alive = vec![true; n];
    let mut assigned = vec![false; n];
    let mut parity = Parity::new(n);
    let mut pieces = Vec::new();
    let mut root = 0;
    while root < n {
        if !alive[root] || assigned[root] {
            root += 1;
            continue;
        }
        match parity.run(proj, root, &alive) {
            Bfs::Component(comp) => {
                for &l in &comp {
                    assigned[l] = true;
                }
                pieces.push(comp);
            }
            Bfs::Conflict(cycle) => {
                let victim = pick_victim(proj, phi, &cycle, &alive);
                alive[victim] = false;
            }
        }
    }

    let mut zones = Vec::with_capacity(pieces.len());
    for piece in pieces {
        let members: Vec<NodeId> = piece.iter().map(|&l| proj.global(l)).collect();
        let closed = closure.close(&members);
        let mut closed_sorted = closed.clone();
        closed_sorted.sort_unstable();
        closed_sorted.dedup();
        if closed_sorted != members
            && (!closed_sorted.iter().all(|&v| proj.contains(v))
                || !balance_test(proj, &closed_sorted).is_balanced())
        {
            continue;
        }
        if let Ok(z) = Zone::new(closed_sorted, phi) {
            zones.push(z);
        }
    }
    let mut zones = inclusion_maximal(zones);
    zones.sort_by(|a, b| a.members().cmp(b.members()));
    zones
}

fn pick_victim(proj: &SignedProjection, phi: &[f64], cycle: &[usize], alive: &[bool]) -> usize {
    let degree = |l: usize| -> f64 {
        proj.neighbours(l)
            .iter()
            .filter(|e| alive[e.to])
            .map(|e| e.weight())
            .sum()
    };
    *cycle
        .iter()
        .min_by(|&&a, &&b| {
            phi[proj.global(a)]
                .total_cmp(&phi[proj.global(b)])
                .then_with(|| degree(a).total_cmp(&degree(b)))
                .then_with(|| proj.global(a).cmp(&proj.global(b)))
        })
        .expect("conflict cycle is nonempty")
}

/// `Q = mean φ × density`, density `2m / (|Z|(|Z| − 1))` over projected
/// edges inside the zone; singletons have density 0.
pub fn zone_quality(zone: &Zone, phi: &[f64], proj: &SignedProjection) -> f64 {
    let k = zone.size();
    if k < 2 {
        return 0.0;
    }
    let m = proj.internal_edge_count(zone.members()) as f64;
    let density = 2.0 * m / (k as f64 * (k as f64 - 1.0));
    zone.mass(phi) / k as f64 * density
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{BeliefGraph, BeliefNode, TypedEdge};

    /// Undirected signed edges become a single directed edge each.
    fn projection(n: usize, edges: &[(usize, usize, i8)]) -> SignedProjection {
        let nodes = (0..n)
            .map(|i| BeliefNode::new(format!("n{i:02}"), 1.0))
            .collect();
        let edges = edges
            .iter()
            .map(|&(u, v, s)| {
                if s > 0 {
                    TypedEdge::support(u, v, 1.0)
                } else {
                    TypedEdge::contradiction(u, v, 1.0)
                }
            })
            .collect();
        let g = BeliefGraph::new(nodes, edges).unwrap();
        SignedProjection::from_graph(&g, &(0..n).collect::<Vec<_>>())
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(threshold_nodes(&[0.9, 0.5], 0.6), vec![0]);
        assert!(threshold_nodes(&[0.9, 0.99], 1.0).is_empty());
        assert_eq!(threshold_nodes(&[0.6, 0.5], 0.6), vec![0]);
    }

    /// Oracle for the interpolated quantile: value at rank `h` on the
    /// piecewise-linear interpolant through `(k, x_k)`.
    fn quantile_oracle(xs: &[f64], q: f64) -> f64 {
        let mut s = xs.to_vec();
        s.sort_by(f64::total_cmp);
        let h = q * (s.len() - 1) as f64;
        (0..s.len() - 1)
            .find(|&k| h >= k as f64 && h <= (k + 1) as f64)
            .map(|k| s[k] + (h - k as f64) * (s[k + 1] - s[k]))
            .unwrap_or(s[0])
    }

    #[test]
    fn quantile_examples() {
        assert!((quantile_threshold(&[0.1, 0.9], 0.5).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(quantile_threshold(&[0.3, 0.7, 0.1], 1.0).unwrap(), 0.7);
        assert_eq!(quantile_threshold(&[0.3, 0.7, 0.1], 0.0).unwrap(), 0.1);
        let xs = [0.8, 0.2, 0.6, 0.4];
        let oracle = quantile_oracle(&xs, 0.75);
        assert!((oracle - 0.65).abs() < 1e-12);
        assert!((quantile_threshold(&xs, 0.75).unwrap() - oracle).abs() < 1e-12);
        assert!(quantile_threshold(&[], 0.5).is_err());
    }

    #[test]
    fn positive_triangle_is_one_colour() {
        let p = projection(3, &[(0, 1, 1), (1, 2, 1), (0, 2, 1)]);
        match balance_test(&p, &[0, 1, 2]) {
            BalanceResult::Balanced(c) => assert!(c.iter().all(|&(_, col)| col == c[0].1)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn one_negative_edge_triangle_yields_certificate() {
        let p = projection(3, &[(0, 1, 1), (1, 2, -1), (0, 2, 1)]);
        match balance_test(&p, &[0, 1, 2]) {
            BalanceResult::Unbalanced(cert) => {
                assert!(cert.is_valid(&p));
                let mut c = cert.cycle.clone();
                c.sort_unstable();
                assert_eq!(c, vec![0, 1, 2]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn two_negative_edges_triangle_is_balanced() {
        let p = projection(3, &[(0, 1, -1), (1, 2, -1), (0, 2, 1)]);
        match balance_test(&p, &[0, 1, 2]) {
            BalanceResult::Balanced(c) => {
                assert_eq!(c[0].1, c[2].1);
                assert_ne!(c[0].1, c[1].1);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn balanced_component_is_one_zone() {
        let p = projection(5, &[(0, 1, 1), (1, 2, -1), (2, 3, 1), (3, 4, -1)]);
        let zones = extract_zones(&p, &[0.9; 5]);
        assert_eq!(zones.len(), 1);
        assert_eq!(zones[0].size(), 5);
    }

    #[test]
    fn unbalanced_triangle_drops_lowest_confidence() {
        let p = projection(3, &[(0, 1, 1), (1, 2, -1), (0, 2, 1)]);
        let zones = extract_zones(&p, &[0.9, 0.8, 0.7]);
        assert_eq!(zones.len(), 1);
        assert_eq!(zones[0].members(), &[0, 1]);
    }

    #[test]
    fn ties_break_by_degree_then_id() {
        // Triangle 0-1-2 unbalanced; node 0 carries an extra pendant edge.
        let p = projection(4, &[(0, 1, 1), (1, 2, -1), (0, 2, 1), (0, 3, 1)]);
        let zones = extract_zones(&p, &[0.5, 0.5, 0.5, 0.9]);
        // 1 and 2 tie on confidence and degree, so the lower id goes.
        assert_eq!(zones[0].members(), &[0, 2, 3]);
    }

    #[test]
    fn disjoint_components_give_separate_zones() {
        let p = projection(4, &[(0, 1, 1), (2, 3, -1)]);
        let zones = extract_zones(&p, &[0.9; 4]);
        assert_eq!(zones.len(), 2);
        assert_eq!(zones[0].members(), &[0, 1]);
        assert_eq!(zones[1].members(), &[2, 3]);
    }

    #[test]
    fn closure_that_breaks_balance_is_discarded() {
        struct AddAll;
        impl ClosureOperator for AddAll {
            fn close(&self, _: &[NodeId]) -> Vec<NodeId> {
                vec![0, 1, 2]
            }
        }
        let p = projection(3, &[(0, 1, 1), (1, 2, -1), (0, 2, 1)]);
        assert!(extract_zones_with(&p, &[0.9, 0.8, 0.7], &AddAll).is_empty());
    }

    #[test]
    fn quality_examples() {
        let p = projection(3, &[(0, 1, 1), (1, 2, 1)]);
        let phi = [0.8, 0.8, 0.2];
        let pair = Zone::new(vec![0, 1], &phi).unwrap();
        assert!((zone_quality(&pair, &phi, &p) - 0.8).abs() < 1e-12);
        let single = Zone::new(vec![2], &phi).unwrap();
        assert_eq!(zone_quality(&single, &phi, &p), 0.0);
        let phi = [0.6, 0.6, 0.6];
        let all = Zone::new(vec![0, 1, 2], &phi).unwrap();
        assert!((zone_quality(&all, &phi, &p) - 0.4).abs() < 1e-12);
    }

    #[test]
    fn maximal_filter_drops_subsets_and_duplicates() {
        let phi = [1.0; 4];
        let zs = vec![
            Zone::new(vec![0, 1], &phi).unwrap(),
            Zone::new(vec![0, 1, 2], &phi).unwrap(),
            Zone::new(vec![3], &phi).unwrap(),
            Zone::new(vec![3], &phi).unwrap(),
        ];
        let kept = inclusion_maximal(zs);
        assert_eq!(kept.len(), 2);
        assert_eq!(kept[0].members(), &[0, 1, 2]);
    }
}
