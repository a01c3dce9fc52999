//! Shocks, graph edits and the update/refresh loop.
//!
//! Every accepted change keeps the propagation map contractive: shocks are
//! halved and edits damped toward the pre-change weights until the
//! contraction factor drops below one.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::atlas::{local_refresh, score_zone, Atlas, GovernanceParams, ScoredZone};
use crate::error::{Error, Result};
use crate::graph::{BeliefGraph, BeliefNode, NodeId, Sign, TypedEdge, CONTRADICTION_TYPE};
use crate::matrix::{build_signed_matrices, SignedMatrices};
use crate::propagation::{build_prior, propagate_with_factor, ConfidenceState, PropagationParams};
use crate::spectral::contraction_factor;

/// Retries allowed before a shock or edit is rejected.
pub const MAX_HALVINGS: usize = 40;
/// Strength (or damping fraction) below which backtracking gives up.
pub const STRENGTH_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ShockSpec {
    /// `(node, strength)` pairs, strengths in `[0, 1]`.
    pub targets: Vec<(NodeId, f64)>,
    pub kappa: f64,
    pub rho_shock: f64,
    /// Optional stricter gate `r + δ < 1`.
    pub delta_margin: Option<f64>,
}

impl ShockSpec {
    pub fn new(targets: Vec<(NodeId, f64)>, kappa: f64, rho_shock: f64) -> Self {
        Self {
            targets,
            kappa,
            rho_shock,
            delta_margin: None,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if !(0.0..1.0).contains(&self.kappa) {
            return Err(Error::Validation(format!(
                "kappa = {} not in [0, 1)",
                self.kappa
            )));
        }
        if !(self.rho_shock >= 0.0 && self.rho_shock.is_finite()) {
            return Err(Error::Validation(format!(
                "rho_shock = {} must be >= 0",
                self.rho_shock
            )));
        }
        if let Some(d) = self.delta_margin {
            if !(d > 0.0 && d < 1.0) {
                return Err(Error::Validation(format!(
                    "delta_margin = {d} not in (0, 1)"
                )));
            }
        }
        let mut seen = vec![false; n];
        for &(u, s) in &self.targets {
            if u >= n {
                return Err(Error::Validation(format!("shock target {u} is not a node")));
            }
            if seen[u] {
                return Err(Error::Validation(format!("shock target {u} listed twice")));
            }
            seen[u] = true;
            if !(0.0..=1.0).contains(&s) {
                return Err(Error::Validation(format!(
                    "shock strength {s} not in [0, 1]"
                )));
            }
        }
        Ok(())
    }

    fn scaled(&self, factor: f64) -> Vec<(NodeId, f64)> {
        self.targets.iter().map(|&(u, s)| (u, s * factor)).collect()
    }
}

/// On-disk shock description keyed by node id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShockFile {
    pub targets: BTreeMap<String, f64>,
    pub kappa: f64,
    pub rho_shock: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_margin: Option<f64>,
}

impl ShockFile {
    pub fn resolve(&self, graph: &BeliefGraph) -> Result<ShockSpec> {
        let index = graph.name_index();
        let targets = self
            .targets
            .iter()
            .map(|(name, &s)| {
                index.get(name.as_str()).map(|&u| (u, s)).ok_or_else(|| {
                    Error::Validation(format!("shock target {name:?} is not a node"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let spec = ShockSpec {
            targets,
            kappa: self.kappa,
            rho_shock: self.rho_shock,
            delta_margin: self.delta_margin,
        };
        spec.validate(graph.node_count())?;
        Ok(spec)
    }
}

/// Result of a propagation-preserving change.
#[derive(Debug, Clone)]
pub struct ShockOutcome {
    pub graph: BeliefGraph,
    pub matrices: SignedMatrices,
    pub prior: Vec<f64>,
    pub state: ConfidenceState,
    /// Strengths actually applied, after backtracking.
    pub applied: Vec<(NodeId, f64)>,
    pub halvings: usize,
}

/// Downscales each shocked node's outgoing support by `1 − κs` and adds
/// `ρ s supp_uv / (1 + Σ_v' supp_uv')` of contradiction on the same pairs,
/// using pre-shock aggregated weights.
pub fn shocked_graph(
    graph: &BeliefGraph,
    m: &SignedMatrices,
    strengths: &[(NodeId, f64)],
    kappa: f64,
    rho_shock: f64,
) -> Result<BeliefGraph> {
    let neg_type = graph
        .edges()
        .iter()
        .find(|e| e.sign == Sign::Negative)
        .map_or(CONTRADICTION_TYPE.to_string(), |e| e.edge_type.clone());
    let mut out = graph.clone();
    for &(u, s) in strengths {
        if s == 0.0 {
            continue;
        }
        let keep = 1.0 - kappa * s;
        for e in out.edges_mut().iter_mut() {
            if e.src == u && e.sign == Sign::Positive {
                e.weight *= keep;
            }
        }
        let row = m.supp.row(u);
        let total = m.supp.row_sum(u);
        for &(v, w) in row {
            let add = rho_shock * s * w / (1.0 + total);
            if add == 0.0 {
                continue;
            }
            let edges = out.edges_mut();
            match edges
                .iter_mut()
                .find(|e| e.src == u && e.dst == v && e.sign == Sign::Negative)
            {
                Some(e) => e.weight += add,
                None => edges.push(TypedEdge::new(u, v, neg_type.clone(), Sign::Negative, add)),
            }
        }
    }
    out.validate()?;
    Ok(out)
}

fn unchanged_state(phi: &[f64], r: f64) -> ConfidenceState {
    ConfidenceState {
        phi: phi.to_vec(),
        iterations: 0,
        contraction_factor: r,
        converged: true,
        last_delta: 0.0,
    }
}

fn accepts(r: f64, margin: Option<f64>) -> bool {
    r < 1.0 && margin.is_none_or(|d| r + d < 1.0)
}

/// One shock step with contractivity backtracking.
///
/// `warm` is the pre-shock fixed point; re-propagation starts from it. When
/// the shock leaves the graph unchanged, `warm` is returned as is.
pub fn apply_shock(
    graph: &BeliefGraph,
    shock: &ShockSpec,
    params: &PropagationParams,
    warm: &[f64],
) -> Result<ShockOutcome> {
    params.validate()?;
    shock.validate(graph.node_count())?;
    if warm.len() != graph.node_count() {
        return Err(Error::Validation(
            "warm start length differs from node count".into(),
        ));
    }
    let m = build_signed_matrices(graph);
    let r0 = contraction_factor(&m, params.alpha, params.eta);
    if r0 >= 1.0 {
        return Err(Error::NotContractive { r: r0 });
    }
    let mut factor = 1.0;
    let mut last_r = r0;
    for halvings in 0..=MAX_HALVINGS {
        let strengths = shock.scaled(factor);
        if shock.targets.iter().any(|&(_, s)| s > 0.0)
            && strengths.iter().all(|&(_, s)| s < STRENGTH_FLOOR)
        {
            break;
        }
        let g = shocked_graph(graph, &m, &strengths, shock.kappa, shock.rho_shock)?;
        if &g == graph {
            return Ok(ShockOutcome {
                graph: g,
                prior: build_prior(graph, &m, &params.prior)?,
                matrices: m,
                state: unchanged_state(warm, r0),
                applied: strengths,
                halvings,
            });
        }
        let m2 = build_signed_matrices(&g);
        let r = contraction_factor(&m2, params.alpha, params.eta);
        if accepts(r, shock.delta_margin) {
            let prior = build_prior(&g, &m2, &params.prior)?;
            let state = propagate_with_factor(warm, &prior, &m2, params, &g.authorities(), r);
            return Ok(ShockOutcome {
                graph: g,
                matrices: m2,
                prior,
                state,
                applied: strengths,
                halvings,
            });
        }
        last_r = r;
        factor /= 2.0;
    }
    Err(Error::ShockRejected {
        floor: STRENGTH_FLOOR,
        last_r,
    })
}

/// Merges the shocks of one window: strengths add per node and are capped
/// at 1. All events must share `κ` and `ρ_shock`; the strictest margin wins.
pub fn batch_shocks(events: &[ShockSpec]) -> Result<ShockSpec> {
    let first = events.first().ok_or(Error::Empty("shock batch"))?;
    let mut combined: BTreeMap<NodeId, f64> = BTreeMap::new();
    let mut margin = first.delta_margin;
    for ev in events {
        if ev.kappa != first.kappa || ev.rho_shock != first.rho_shock {
            return Err(Error::MixedBatch(format!(
                "(kappa, rho_shock) = ({}, {}) vs ({}, {})",
                first.kappa, first.rho_shock, ev.kappa, ev.rho_shock
            )));
        }
        margin = match (margin, ev.delta_margin) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
        for &(u, s) in &ev.targets {
            *combined.entry(u).or_insert(0.0) += s;
        }
    }
    Ok(ShockSpec {
        targets: combined.into_iter().map(|(u, s)| (u, s.min(1.0))).collect(),
        kappa: first.kappa,
        rho_shock: first.rho_shock,
        delta_margin: margin,
    })
}

/// Edge identity for edits: endpoints by node id and the edge type.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeKey {
    pub src: String,
    pub dst: String,
    #[serde(rename = "type")]
    pub edge_type: String,
}

impl EdgeKey {
    pub fn new(
        src: impl Into<String>,
        dst: impl Into<String>,
        edge_type: impl Into<String>,
    ) -> Self {
        Self {
            src: src.into(),
            dst: dst.into(),
            edge_type: edge_type.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum EdgeChange {
    /// Inserts the edge or replaces the total weight of existing ones.
    Set {
        key: EdgeKey,
        sign: Sign,
        weight: f64,
    },
    /// Changes type and sign of every edge with this key.
    Retype {
        key: EdgeKey,
        new_type: String,
        new_sign: Sign,
    },
    Remove {
        key: EdgeKey,
    },
}

impl EdgeChange {
    pub fn key(&self) -> &EdgeKey {
        match self {
            EdgeChange::Set { key, .. }
            | EdgeChange::Retype { key, .. }
            | EdgeChange::Remove { key } => key,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EditDelta {
    Expansion {
        nodes: Vec<BeliefNode>,
        edges: Vec<EdgeChange>,
    },
    ContractNodes {
        nodes: Vec<String>,
    },
    ContractEdges {
        edges: Vec<EdgeKey>,
    },
    Revision {
        psi: Vec<(String, f64)>,
        edges: Vec<EdgeChange>,
    },
    CredibilityHandback {
        psi: Vec<(String, f64)>,
    },
    StructuralHandback {
        edges: Vec<EdgeChange>,
    },
}

impl EditDelta {
    fn removes_nodes(&self) -> bool {
        matches!(self, EditDelta::ContractNodes { nodes } if !nodes.is_empty())
    }
}

/// Graph after an edit, plus the nodes it touched (new indices).
#[derive(Debug, Clone)]
pub struct EditOutcome {
    pub graph: BeliefGraph,
    pub touched: Vec<NodeId>,
    /// `old index → new index`; `None` for removed nodes.
    pub index_map: Vec<Option<NodeId>>,
}

fn lookup(graph: &BeliefGraph, name: &str) -> Result<NodeId> {
    graph
        .index_of(name)
        .ok_or_else(|| Error::Validation(format!("unknown node {name:?}")))
}

fn edit_edge(
    graph: &mut BeliefGraph,
    change: &EdgeChange,
    touched: &mut Vec<NodeId>,
) -> Result<()> {
    let key = change.key();
    let src = lookup(graph, &key.src)?;
    let dst = lookup(graph, &key.dst)?;
    touched.extend([src, dst]);
    let found = graph.find_edges(src, dst, &key.edge_type);
    match change {
        EdgeChange::Set { sign, weight, .. } => {
            if !(weight.is_finite() && *weight >= 0.0) {
                return Err(Error::Validation(format!(
                    "edge weight {weight} must be >= 0"
                )));
            }
            if let Some((&keep, rest)) = found.split_first() {
                let e = &mut graph.edges_mut()[keep];
                if e.sign != *sign {
                    return Err(Error::Validation(format!(
                        "edge type {:?} already has sign {}",
                        key.edge_type, e.sign
                    )));
                }
                e.weight = *weight;
                for &k in rest.iter().rev() {
                    graph.edges_mut().remove(k);
                }
            } else {
                graph.add_edge(TypedEdge::new(
                    src,
                    dst,
                    key.edge_type.clone(),
                    *sign,
                    *weight,
                ))?;
            }
        }
        EdgeChange::Retype {
            new_type, new_sign, ..
        } => {
            if found.is_empty() {
                return Err(Error::Validation(format!("no edge {key:?} to retype")));
            }
            for &k in &found {
                let e = &mut graph.edges_mut()[k];
                e.edge_type = new_type.clone();
                e.sign = *new_sign;
            }
        }
        EdgeChange::Remove { .. } => {
            if found.is_empty() {
                return Err(Error::Validation(format!("no edge {key:?} to remove")));
            }
            for &k in found.iter().rev() {
                graph.edges_mut().remove(k);
            }
        }
    }
    Ok(())
}

/// Applies an edit. Rows of the aggregated matrices for untouched nodes are
/// reproduced bit-for-bit by [`build_signed_matrices`].
pub fn apply_edit(graph: &BeliefGraph, delta: &EditDelta) -> Result<EditOutcome> {
    let mut g = graph.clone();
    let mut touched = Vec::new();
    let mut index_map: Vec<Option<NodeId>> = (0..graph.node_count()).map(Some).collect();
    let revise_psi = |g: &mut BeliefGraph, psi: &[(String, f64)], touched: &mut Vec<NodeId>| {
        for (name, p) in psi {
            let v = lookup(g, name)?;
            g.set_psi(v, *p)?;
            touched.push(v);
        }
        Ok::<_, Error>(())
    };
    match delta {
        EditDelta::Expansion { nodes, edges } => {
            for node in nodes {
                touched.push(g.add_node(node.clone())?);
            }
            for c in edges {
                edit_edge(&mut g, c, &mut touched)?;
            }
        }
        EditDelta::ContractNodes { nodes } => {
            let mut ids = nodes
                .iter()
                .map(|name| {
                    graph.index_of(name).ok_or_else(|| {
                        Error::Validation(format!("cannot contract missing node {name:?}"))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            ids.sort_unstable();
            ids.dedup();
            for &v in &ids {
                for e in graph.edges() {
                    if e.src == v {
                        touched.push(e.dst);
                    } else if e.dst == v {
                        touched.push(e.src);
                    }
                }
            }
            for &v in ids.iter().rev() {
                g.remove_node(v)?;
            }
            let mut shift = 0;
            for (old, slot) in index_map.iter_mut().enumerate() {
                if ids.binary_search(&old).is_ok() {
                    *slot = None;
                    shift += 1;
                } else {
                    *slot = Some(old - shift);
                }
            }
            touched = touched.into_iter().filter_map(|v| index_map[v]).collect();
        }
        EditDelta::ContractEdges { edges } => {
            for key in edges {
                edit_edge(
                    &mut g,
                    &EdgeChange::Remove { key: key.clone() },
                    &mut touched,
                )?;
            }
        }
        EditDelta::Revision { psi, edges } => {
            revise_psi(&mut g, psi, &mut touched)?;
            for c in edges {
                edit_edge(&mut g, c, &mut touched)?;
            }
        }
        EditDelta::CredibilityHandback { psi } => revise_psi(&mut g, psi, &mut touched)?,
        EditDelta::StructuralHandback { edges } => {
            for c in edges {
                edit_edge(&mut g, c, &mut touched)?;
            }
        }
    }
    g.validate()?;
    touched.sort_unstable();
    touched.dedup();
    Ok(EditOutcome {
        graph: g,
        touched,
        index_map,
    })
}

type WeightTable = BTreeMap<(NodeId, NodeId, String), (Sign, f64)>;

fn weight_table(graph: &BeliefGraph) -> WeightTable {
    let mut t = WeightTable::new();
    for e in graph.edges() {
        t.entry((e.src, e.dst, e.edge_type.clone()))
            .or_insert((e.sign, 0.0))
            .1 += e.weight;
    }
    t
}

/// `w0 + f (w1 − w0)` per edge key, with `before` expressed in the indices
/// of `after`. Keys whose weight does not change keep their original edges.
fn damped_graph(before: &BeliefGraph, after: &BeliefGraph, f: f64) -> Result<BeliefGraph> {
    let t0 = weight_table(before);
    let t1 = weight_table(after);
    let mut edges: Vec<TypedEdge> = after
        .edges()
        .iter()
        .filter(|e| {
            let k = (e.src, e.dst, e.edge_type.clone());
            t0.get(&k) == t1.get(&k)
        })
        .cloned()
        .collect();
    let keys: std::collections::BTreeSet<_> = t0.keys().chain(t1.keys()).cloned().collect();
    for k in keys {
        let (a, b) = (t0.get(&k), t1.get(&k));
        if a == b {
            continue;
        }
        let w0 = a.map_or(0.0, |x| x.1);
        let w1 = b.map_or(0.0, |x| x.1);
        let sign = b.or(a).expect("key from one table").0;
        let w = w0 + f * (w1 - w0);
        if w > 0.0 {
            edges.push(TypedEdge::new(k.0, k.1, k.2, sign, w));
        }
    }
    BeliefGraph::new(after.nodes().to_vec(), edges)
}

/// Full state after an accepted update.
#[derive(Debug, Clone)]
pub struct UpdateOutcome {
    pub graph: BeliefGraph,
    pub matrices: SignedMatrices,
    pub prior: Vec<f64>,
    pub state: ConfidenceState,
    pub atlas: Atlas,
    /// Fraction of the requested weight change that was applied.
    pub damping: f64,
    pub touched: Vec<NodeId>,
}

/// Confidence snapshot the update starts from.
#[derive(Debug, Clone, Copy)]
pub struct Snapshot<'a> {
    pub graph: &'a BeliefGraph,
    pub phi: &'a [f64],
    pub atlas: &'a Atlas,
}

/// Applies `delta`, damps weight changes geometrically until `r < 1`,
/// re-propagates warm-started from the previous confidence and refreshes
/// the atlas locally around the touched nodes.
pub fn update_and_refresh(
    prev: Snapshot<'_>,
    delta: &EditDelta,
    theta: f64,
    gov: &GovernanceParams,
    prop: &PropagationParams,
) -> Result<UpdateOutcome> {
    prop.validate()?;
    gov.validate()?;
    if prev.phi.len() != prev.graph.node_count() {
        return Err(Error::Validation(
            "confidence length differs from node count".into(),
        ));
    }
    let edit = apply_edit(prev.graph, delta)?;
    if &edit.graph == prev.graph {
        let m = build_signed_matrices(prev.graph);
        let r = contraction_factor(&m, prop.alpha, prop.eta);
        return Ok(UpdateOutcome {
            graph: edit.graph,
            prior: build_prior(prev.graph, &m, &prop.prior)?,
            matrices: m,
            state: unchanged_state(prev.phi, r),
            atlas: prev.atlas.clone(),
            damping: 1.0,
            touched: Vec::new(),
        });
    }

    // Pre-edit graph in post-edit indices, for damping.
    let before = {
        let mut g = prev.graph.clone();
        let mut removed: Vec<NodeId> = edit
            .index_map
            .iter()
            .enumerate()
            .filter(|(_, s)| s.is_none())
            .map(|(i, _)| i)
            .collect();
        removed.reverse();
        for v in removed {
            g.remove_node(v)?;
        }
        for node in &edit.graph.nodes()[g.node_count()..] {
            g.add_node(node.clone())?;
        }
        g
    };

    let mut f = 1.0;
    let mut accepted = None;
    for _ in 0..=MAX_HALVINGS {
        if f < STRENGTH_FLOOR {
            break;
        }
        let g = if f == 1.0 {
            edit.graph.clone()
        } else {
            damped_graph(&before, &edit.graph, f)?
        };
        let m = build_signed_matrices(&g);
        let r = contraction_factor(&m, prop.alpha, prop.eta);
        if r < 1.0 {
            accepted = Some((g, m, r));
            break;
        }
        if delta.removes_nodes() {
            return Err(Error::EditRejected(format!(
                "node contraction leaves r = {r} >= 1 and cannot be damped"
            )));
        }
        f /= 2.0;
    }
    let (graph, m, r) = accepted.ok_or_else(|| {
        Error::EditRejected(format!(
            "damping fell below {STRENGTH_FLOOR:e} without restoring r < 1"
        ))
    })?;

    let prior = build_prior(&graph, &m, &prop.prior)?;
    let n = graph.node_count();
    let mut warm = prior.clone();
    let mut prev_phi = vec![f64::NEG_INFINITY; n];
    for (old, slot) in edit.index_map.iter().enumerate() {
        if let Some(new) = *slot {
            warm[new] = prev.phi[old];
            prev_phi[new] = prev.phi[old];
        }
    }
    let state = propagate_with_factor(&warm, &prior, &m, prop, &graph.authorities(), r);
    let remapped = prev.atlas.remap(
        |v| edit.index_map.get(v).copied().flatten(),
        &state.phi,
        &m,
        gov,
    );
    let touched = edit.touched;
    let atlas = local_refresh(&remapped, &prev_phi, &state.phi, theta, &m, gov, &touched)?;
    Ok(UpdateOutcome {
        graph,
        matrices: m,
        prior,
        state,
        atlas,
        damping: f,
        touched,
    })
}

/// What a zone sees: its own scored zone plus read-only global state.
pub struct ZoneContext<'a> {
    pub zone: &'a ScoredZone,
    pub graph: &'a BeliefGraph,
    pub phi: &'a [f64],
}

impl ZoneContext<'_> {
    pub fn member_names(&self) -> Vec<&str> {
        self.zone
            .members()
            .iter()
            .map(|&v| self.graph.nodes()[v].name.as_str())
            .collect()
    }
}

/// Changes a zone wants to hand back to the graph.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReasonerProposal {
    pub psi: Vec<(String, f64)>,
    pub edges: Vec<EdgeChange>,
}

pub trait Reasoner: Sync {
    fn propose(&self, ctx: &ZoneContext<'_>) -> ReasonerProposal;
}

/// Proposes nothing.
#[derive(Debug, Clone, Copy, Default)]
pub struct EchoReasoner;

impl Reasoner for EchoReasoner {
    fn propose(&self, _: &ZoneContext<'_>) -> ReasonerProposal {
        ReasonerProposal::default()
    }
}

/// Proposes fixed credibility values for whichever listed nodes lie in the
/// zone.
#[derive(Debug, Clone, Default)]
pub struct FixedPsiReasoner {
    pub psi: Vec<(String, f64)>,
}

impl Reasoner for FixedPsiReasoner {
    fn propose(&self, ctx: &ZoneContext<'_>) -> ReasonerProposal {
        let members = ctx.member_names();
        ReasonerProposal {
            psi: self
                .psi
                .iter()
                .filter(|(name, _)| members.contains(&name.as_str()))
                .cloned()
                .collect(),
            edges: Vec::new(),
        }
    }
}

impl<F> Reasoner for F
where
    F: Fn(&ZoneContext<'_>) -> ReasonerProposal + Sync,
{
    fn propose(&self, ctx: &ZoneContext<'_>) -> ReasonerProposal {
        self(ctx)
    }
}

fn zone_label(graph: &BeliefGraph, zone: &ScoredZone) -> String {
    let names: Vec<&str> = zone
        .members()
        .iter()
        .map(|&v| graph.nodes()[v].name.as_str())
        .collect();
    format!("{{{}}}", names.join(","))
}

/// Runs the reasoner on every atlas zone, checks isolation, resolves
/// competing proposals per target in atlas rank order and applies the
/// winners through [`update_and_refresh`].
pub fn run_reasoning(
    prev: Snapshot<'_>,
    reasoner: &dyn Reasoner,
    theta: f64,
    gov: &GovernanceParams,
    prop: &PropagationParams,
) -> Result<UpdateOutcome> {
    let m = build_signed_matrices(prev.graph);
    let mut zones: Vec<ScoredZone> = prev
        .atlas
        .zones()
        .iter()
        .map(|z| score_zone(z.zone.clone(), prev.phi, &m, gov))
        .collect();
    zones.sort_by(ScoredZone::rank_cmp);

    let mut psi: BTreeMap<String, f64> = BTreeMap::new();
    let mut edges: BTreeMap<EdgeKey, EdgeChange> = BTreeMap::new();
    let index = prev.graph.name_index();
    let inside =
        |zone: &ScoredZone, name: &str| index.get(name).is_some_and(|&v| zone.zone.contains(v));
    // Zones are visited best-first, so the first proposal per target wins.
    for zone in &zones {
        let ctx = ZoneContext {
            zone,
            graph: prev.graph,
            phi: prev.phi,
        };
        let proposal = reasoner.propose(&ctx);
        let violation = |target: String| Error::IsolationViolation {
            zone: zone_label(prev.graph, zone),
            target,
        };
        for (name, _) in &proposal.psi {
            if !inside(zone, name) {
                return Err(violation(name.clone()));
            }
        }
        for c in &proposal.edges {
            let key = c.key();
            for end in [&key.src, &key.dst] {
                if !inside(zone, end) {
                    return Err(violation(format!(
                        "{} -> {} ({})",
                        key.src, key.dst, key.edge_type
                    )));
                }
            }
        }
        for (name, p) in proposal.psi {
            psi.entry(name).or_insert(p);
        }
        for c in proposal.edges {
            edges.entry(c.key().clone()).or_insert(c);
        }
    }
    let psi: Vec<(String, f64)> = psi.into_iter().collect();
    let edges: Vec<EdgeChange> = edges.into_values().collect();
    let delta = match (psi.is_empty(), edges.is_empty()) {
        (false, true) => EditDelta::CredibilityHandback { psi },
        (true, false) => EditDelta::StructuralHandback { edges },
        _ => EditDelta::Revision { psi, edges },
    };
    update_and_refresh(prev, &delta, theta, gov, prop)
}

/// Suppression: scales every outgoing edge of `node` by `factor`.
pub fn suppress(graph: &BeliefGraph, node: &str, factor: f64) -> Result<EditDelta> {
    if !(0.0..=1.0).contains(&factor) {
        return Err(Error::Validation(format!(
            "suppression factor {factor} not in [0, 1]"
        )));
    }
    let u = lookup(graph, node)?;
    let mut totals: BTreeMap<EdgeKey, (Sign, f64)> = BTreeMap::new();
    for e in graph.edges().iter().filter(|e| e.src == u) {
        let key = EdgeKey::new(node, graph.nodes()[e.dst].name.clone(), e.edge_type.clone());
        totals.entry(key).or_insert((e.sign, 0.0)).1 += e.weight;
    }
    Ok(EditDelta::StructuralHandback {
        edges: totals
            .into_iter()
            .map(|(key, (sign, w))| EdgeChange::Set {
                key,
                sign,
                weight: w * factor,
            })
            .collect(),
    })
}

/// Prior steering: a credibility revision on one node.
pub fn steer_prior(node: &str, psi: f64) -> EditDelta {
    EditDelta::Revision {
        psi: vec![(node.to_string(), psi)],
        edges: Vec::new(),
    }
}

/// Name-keyed view of a confidence vector, for comparisons across edits
/// that renumber nodes.
pub fn phi_by_name<'a>(graph: &'a BeliefGraph, phi: &[f64]) -> HashMap<&'a str, f64> {
    graph
        .nodes()
        .iter()
        .zip(phi)
        .map(|(n, &p)| (n.name.as_str(), p))
        .collect()
}
