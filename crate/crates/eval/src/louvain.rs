//! Louvain modularity clustering on undirected weighted graphs.
//!
//! Local moves scan vertices in index order and break gain ties toward the
//! smaller community id, so results depend only on the input.

use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LouvainParams {
    pub resolution: f64,
    /// A pass of local moves counts as progress only if modularity rises by
    /// more than this.
    pub min_gain: f64,
    pub max_levels: usize,
}

impl Default for LouvainParams {
    fn default() -> Self {
        Self {
            resolution: 1.0,
            min_gain: 1e-7,
            max_levels: 32,
        }
    }
}

/// Symmetric weighted graph; `adj[u]` holds `(v, w)` sorted by `v`, with a
/// self-loop entry carrying twice the internal weight after aggregation.
#[derive(Debug, Clone)]
pub struct WeightedGraph {
    adj: Vec<Vec<(usize, f64)>>,
}

impl WeightedGraph {
    /// Builds from undirected edges; parallel edges are summed.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut maps: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
        for (u, v, w) in edges {
            if w == 0.0 {
                continue;
            }
            if u == v {
                *maps[u].entry(u).or_insert(0.0) += 2.0 * w;
            } else {
                *maps[u].entry(v).or_insert(0.0) += w;
                *maps[v].entry(u).or_insert(0.0) += w;
            }
        }
        Self {
            adj: maps.into_iter().map(|m| m.into_iter().collect()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    fn degree(&self, u: usize) -> f64 {
        self.adj[u].iter().map(|&(_, w)| w).sum()
    }

    /// `2m`: sum of all degrees.
    fn total_weight(&self) -> f64 {
        (0..self.len()).map(|u| self.degree(u)).sum()
    }
}

/// Newman modularity of a partition (`community[u]` labels).
pub fn modularity(g: &WeightedGraph, community: &[usize], resolution: f64) -> f64 {
    let two_m = g.total_weight();
    if two_m == 0.0 {
        return 0.0;
    }
    let k = community.iter().copied().max().map_or(0, |c| c + 1);
    let mut internal = vec![0.0; k];
    let mut tot = vec![0.0; k];
    for u in 0..g.len() {
        tot[community[u]] += g.degree(u);
        for &(v, w) in &g.adj[u] {
            if community[v] == community[u] {
                internal[community[u]] += w;
            }
        }
    }
    (0..k)
        .map(|c| internal[c] / two_m - resolution * (tot[c] / two_m).powi(2))
        .sum()
}

/// One level of local moves. Returns compact labels and whether any vertex
/// moved.
fn local_moves(g: &WeightedGraph, params: &LouvainParams) -> (Vec<usize>, bool) {
    let n = g.len();
    let two_m = g.total_weight();
    let mut community: Vec<usize> = (0..n).collect();
    if two_m == 0.0 {
        return (community, false);
    }
    let degree: Vec<f64> = (0..n).map(|u| g.degree(u)).collect();
    let mut tot = degree.clone();
    let mut moved_any = false;
    let mut q = modularity(g, &community, params.resolution);
    let mut links: BTreeMap<usize, f64> = BTreeMap::new();
    loop {
        let mut moved = false;
        for u in 0..n {
            let cu = community[u];
            links.clear();
            for &(v, w) in &g.adj[u] {
                if v != u {
                    *links.entry(community[v]).or_insert(0.0) += w;
                }
            }
            tot[cu] -= degree[u];
            let gain = |c: usize, k_in: f64| k_in - params.resolution * tot[c] * degree[u] / two_m;
            let mut best = cu;
            let mut best_gain = gain(cu, links.get(&cu).copied().unwrap_or(0.0));
            for (&c, &k_in) in &links {
                let g_c = gain(c, k_in);
                if g_c > best_gain || (g_c == best_gain && c < best) {
                    best = c;
                    best_gain = g_c;
                }
            }
            tot[best] += degree[u];
            if best != cu {
                community[u] = best;
                moved = true;
            }
        }
        if !moved {
            break;
        }
        moved_any = true;
        let q_new = modularity(g, &community, params.resolution);
        if q_new - q <= params.min_gain {
            break;
        }
        q = q_new;
    }
    (compact(&community), moved_any)
}

fn compact(labels: &[usize]) -> Vec<usize> {
    let mut map = BTreeMap::new();
    let mut order = Vec::with_capacity(labels.len());
    for &l in labels {
        let next = map.len();
        order.push(*map.entry(l).or_insert(next));
    }
    order
}

fn aggregate(g: &WeightedGraph, community: &[usize]) -> WeightedGraph {
    let k = community.iter().copied().max().map_or(0, |c| c + 1);
    let mut maps: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); k];
    for u in 0..g.len() {
        for &(v, w) in &g.adj[u] {
            *maps[community[u]].entry(community[v]).or_insert(0.0) += w;
        }
    }
    WeightedGraph {
        adj: maps.into_iter().map(|m| m.into_iter().collect()).collect(),
    }
}

/// Communities as sorted vertex lists, ordered by smallest member.
pub fn louvain(g: &WeightedGraph, params: &LouvainParams) -> Vec<Vec<usize>> {
    let n = g.len();
    let mut membership: Vec<usize> = (0..n).collect();
    let mut level = g.clone();
    for _ in 0..params.max_levels {
        let (labels, moved) = local_moves(&level, params);
        if !moved {
            break;
        }
        for m in membership.iter_mut() {
            *m = labels[*m];
        }
        level = aggregate(&level, &labels);
    }
    let labels = compact(&membership);
    let k = labels.iter().copied().max().map_or(0, |c| c + 1);
    let mut out = vec![Vec::new(); k];
    for (u, &c) in labels.iter().enumerate() {
        out[c].push(u);
    }
    out
}
