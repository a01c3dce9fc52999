//! Seeded synthetic graph families.
//!
//! * **G1** signed random: every node picks `d` distinct uniform
//!   out-neighbours; each edge is negative with probability `ρ₋`.
//! * **G2** planted balanced zones: `k` disjoint blocks of size `s` chosen by
//!   a seeded shuffle. Ordered pairs inside a block get a positive edge with
//!   probability `p_in`. Every other ordered pair takes one uniform draw `u`:
//!   positive if `u < p_out_pos`, negative if `u < p_out_pos + p_out_neg`.
//! * **G3** stress graphs: the G1 graph for the same seed plus `C` disjoint
//!   directed negative 3-cycles on shuffled node triples.
//!
//! Independent streams (forked from the seed) drive topology, weights,
//! credibility, block assignment and cycle placement, so G3 with `C = 0`
//! reproduces G1 exactly. Node ids are `n` followed by the zero-padded index.

use serde::{Deserialize, Serialize};
use zonegraph::graph::{BeliefGraph, BeliefNode, NodeId, TypedEdge};
use zonegraph::rng::Rng;
use zonegraph::{Error, Result};

const TOPOLOGY: u64 = 1;
const WEIGHTS: u64 = 2;
const CREDIBILITY: u64 = 3;
const BLOCKS: u64 = 4;
const CYCLES: u64 = 5;
const CYCLE_WEIGHTS: u64 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightDist {
    /// Normal(μ, σ) resampled until positive.
    TruncNormal {
        mu: f64,
        sigma: f64,
    },
    LogNormal {
        mu: f64,
        sigma: f64,
    },
}

impl Default for WeightDist {
    fn default() -> Self {
        WeightDist::TruncNormal {
            mu: 1.0,
            sigma: 0.2,
        }
    }
}

impl WeightDist {
    pub fn sample(&self, rng: &mut Rng) -> f64 {
        match *self {
            WeightDist::TruncNormal { mu, sigma } => loop {
                let w = mu + sigma * rng.normal();
                if w > 0.0 {
                    return w;
                }
            },
            WeightDist::LogNormal { mu, sigma } => (mu + sigma * rng.normal()).exp(),
        }
    }

    fn validate(&self) -> Result<()> {
        let (mu, sigma) = match *self {
            WeightDist::TruncNormal { mu, sigma } => {
                if mu <= 0.0 && sigma == 0.0 {
                    return Err(Error::Validation(
                        "truncated normal has no positive mass".into(),
                    ));
                }
                (mu, sigma)
            }
            WeightDist::LogNormal { mu, sigma } => (mu, sigma),
        };
        if !(mu.is_finite() && sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::Validation(format!(
                "invalid weight distribution {self:?}"
            )));
        }
        Ok(())
    }
}

/// Credibility Ψ per node. Ψ does not enter the structure-based prior used
/// by the protocols.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CredibilityDist {
    Constant {
        value: f64,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// `Ψ = 1/X` with `X ~ Pareto(x_m = 1, shape)`.
    Pareto {
        shape: f64,
    },
}

impl Default for CredibilityDist {
    fn default() -> Self {
        CredibilityDist::Constant { value: 0.5 }
    }
}

impl CredibilityDist {
    pub fn sample(&self, rng: &mut Rng) -> f64 {
        match *self {
            CredibilityDist::Constant { value } => value,
            CredibilityDist::Uniform { lo, hi } => lo + (hi - lo) * rng.next_f64(),
            CredibilityDist::Pareto { shape } => (1.0 - rng.next_f64()).powf(1.0 / shape),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            CredibilityDist::Constant { value } => (0.0..=1.0).contains(&value),
            CredibilityDist::Uniform { lo, hi } => 0.0 <= lo && lo <= hi && hi <= 1.0,
            CredibilityDist::Pareto { shape } => shape > 0.0 && shape.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Validation(format!(
                "invalid credibility distribution {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    G1,
    G2,
    G3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeneratorConfig {
    pub family: Family,
    pub n: usize,
    pub seed: u64,
    /// Out-degree for G1/G3.
    pub d: usize,
    pub rho_minus: f64,
    pub k_zones: usize,
    /// Block size; `max(120, n/10)` when unset.
    pub block_size: Option<usize>,
    pub p_in: f64,
    pub p_out_pos: f64,
    pub p_out_neg: f64,
    /// Negative 3-cycles for G3; `max(50, n/20)` when unset.
    pub cycles: Option<usize>,
    pub weights: WeightDist,
    pub credibility: CredibilityDist,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            family: Family::G1,
            n: 2000,
            seed: 0,
            d: 8,
            rho_minus: 0.3,
            k_zones: 3,
            block_size: None,
            p_in: 0.22,
            p_out_pos: 0.01,
            p_out_neg: 0.01,
            cycles: None,
            weights: WeightDist::default(),
            credibility: CredibilityDist::default(),
        }
    }
}

impl GeneratorConfig {
    pub fn new(family: Family, n: usize, seed: u64) -> Self {
        Self {
            family,
            n,
            seed,
            ..Default::default()
        }
    }

    pub fn block_size(&self) -> usize {
        self.block_size.unwrap_or_else(|| 120.max(self.n / 10))
    }

    pub fn cycle_count(&self) -> usize {
        self.cycles.unwrap_or_else(|| 50.max(self.n / 20))
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::Validation(format!("{name} = {p} not in [0, 1]")))
            }
        };
        if self.n == 0 {
            return Err(Error::Validation("n must be positive".into()));
        }
        self.weights.validate()?;
        self.credibility.validate()?;
        match self.family {
            Family::G1 | Family::G3 => {
                prob("rho_minus", self.rho_minus)?;
                if self.d >= self.n {
                    return Err(Error::Validation(format!(
                        "out-degree d = {} must be below n = {}",
                        self.d, self.n
                    )));
                }
                if self.family == Family::G3 && 3 * self.cycle_count() > self.n {
                    return Err(Error::Validation(format!(
                        "{} disjoint 3-cycles need {} nodes, n = {}",
                        self.cycle_count(),
                        3 * self.cycle_count(),
                        self.n
                    )));
                }
            }
            Family::G2 => {
                prob("p_in", self.p_in)?;
                prob("p_out_pos", self.p_out_pos)?;
                prob("p_out_neg", self.p_out_neg)?;
                prob("p_out_pos + p_out_neg", self.p_out_pos + self.p_out_neg)?;
                let s = self.block_size();
                if self.k_zones == 0 || s == 0 {
                    return Err(Error::Validation(
                        "zone count and size must be positive".into(),
                    ));
                }
                if self.k_zones * s > self.n {
                    return Err(Error::Validation(format!(
                        "{} blocks of size {s} do not fit in n = {}",
                        self.k_zones, self.n
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Planted zones of a G2 graph, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub blocks: Vec<Vec<NodeId>>,
}

impl GroundTruth {
    /// Node names per block.
    pub fn named(&self, graph: &BeliefGraph) -> Vec<Vec<String>> {
        self.blocks
            .iter()
            .map(|b| b.iter().map(|&v| graph.nodes()[v].name.clone()).collect())
            .collect()
    }
}

pub fn node_name(i: usize, n: usize) -> String {
    let width = n.saturating_sub(1).to_string().len().max(4);
    format!("n{i:0width$}")
}

fn nodes(cfg: &GeneratorConfig, root: &Rng) -> Vec<BeliefNode> {
    let mut rng = root.fork(CREDIBILITY);
    (0..cfg.n)
        .map(|i| BeliefNode::new(node_name(i, cfg.n), cfg.credibility.sample(&mut rng)))
        .collect()
}

fn g1_edges(cfg: &GeneratorConfig, root: &Rng) -> Vec<TypedEdge> {
    let n = cfg.n;
    let mut topo = root.fork(TOPOLOGY);
    let mut weights = root.fork(WEIGHTS);
    let mut edges = Vec::with_capacity(n * cfg.d);
    let mut chosen = Vec::with_capacity(cfg.d);
    for u in 0..n {
        chosen.clear();
        while chosen.len() < cfg.d {
            let x = topo.below(n as u64 - 1) as usize;
            let v = if x < u { x } else { x + 1 };
            if !chosen.contains(&v) {
                chosen.push(v);
            }
        }
        for &v in &chosen {
            let negative = topo.next_f64() < cfg.rho_minus;
            let w = cfg.weights.sample(&mut weights);
            edges.push(if negative {
                TypedEdge::contradiction(u, v, w)
            } else {
                TypedEdge::support(u, v, w)
            });
        }
    }
    edges
}

pub fn gen_g1(cfg: &GeneratorConfig) -> Result<BeliefGraph> {
    let mut cfg = cfg.clone();
    cfg.family = Family::G1;
    cfg.validate()?;
    let root = Rng::new(cfg.seed);
    BeliefGraph::new(nodes(&cfg, &root), g1_edges(&cfg, &root))
}

pub fn gen_g2(cfg: &GeneratorConfig) -> Result<(BeliefGraph, GroundTruth)> {
    let mut cfg = cfg.clone();
    cfg.family = Family::G2;
    cfg.validate()?;
    let n = cfg.n;
    let s = cfg.block_size();
    let root = Rng::new(cfg.seed);
    let mut perm: Vec<NodeId> = (0..n).collect();
    root.fork(BLOCKS).shuffle(&mut perm);
    let mut block_of = vec![usize::MAX; n];
    let mut blocks = Vec::with_capacity(cfg.k_zones);
    for j in 0..cfg.k_zones {
        let mut b = perm[j * s..(j + 1) * s].to_vec();
        b.sort_unstable();
        for &v in &b {
            block_of[v] = j;
        }
        blocks.push(b);
    }
    let mut topo = root.fork(TOPOLOGY);
    let mut weights = root.fork(WEIGHTS);
    let mut edges = Vec::new();
    let p_neg_cut = cfg.p_out_pos + cfg.p_out_neg;
    for u in 0..n {
        for v in 0..n {
            if u == v {
                continue;
            }
            let x = topo.next_f64();
            let same = block_of[u] != usize::MAX && block_of[u] == block_of[v];
            if same {
                if x < cfg.p_in {
                    edges.push(TypedEdge::support(u, v, cfg.weights.sample(&mut weights)));
                }
            } else if x < cfg.p_out_pos {
                edges.push(TypedEdge::support(u, v, cfg.weights.sample(&mut weights)));
            } else if x < p_neg_cut {
                edges.push(TypedEdge::contradiction(
                    u,
                    v,
                    cfg.weights.sample(&mut weights),
                ));
            }
        }
    }
    let graph = BeliefGraph::new(nodes(&cfg, &root), edges)?;
    Ok((graph, GroundTruth { blocks }))
}

/// Triples of the embedded negative cycles, in placement order.
pub fn g3_cycles(cfg: &GeneratorConfig) -> Vec<[NodeId; 3]> {
    let mut perm: Vec<NodeId> = (0..cfg.n).collect();
    Rng::new(cfg.seed).fork(CYCLES).shuffle(&mut perm);
    (0..cfg.cycle_count())
        .map(|i| [perm[3 * i], perm[3 * i + 1], perm[3 * i + 2]])
        .collect()
}

pub fn gen_g3(cfg: &GeneratorConfig) -> Result<BeliefGraph> {
    let mut cfg = cfg.clone();
    cfg.family = Family::G3;
    cfg.validate()?;
    let root = Rng::new(cfg.seed);
    let mut edges = g1_edges(&cfg, &root);
    let mut weights = root.fork(CYCLE_WEIGHTS);
    for [a, b, c] in g3_cycles(&cfg) {
        for (u, v) in [(a, b), (b, c), (c, a)] {
            edges.push(TypedEdge::contradiction(
                u,
                v,
                cfg.weights.sample(&mut weights),
            ));
        }
    }
    BeliefGraph::new(nodes(&cfg, &root), edges)
}

/// Generates the configured family; ground truth only for G2.
pub fn generate(cfg: &GeneratorConfig) -> Result<(BeliefGraph, Option<GroundTruth>)> {
    match cfg.family {
        Family::G1 => gen_g1(cfg).map(|g| (g, None)),
        Family::G2 => gen_g2(cfg).map(|(g, t)| (g, Some(t))),
        Family::G3 => gen_g3(cfg).map(|g| (g, None)),
    }
}
