//! Belief graph data model.
//!
//! Nodes carry an external credibility and an optional authority clamp.
//! Edges are directed, typed, signed and weighted. Node indices are dense
//! (`0..n`); the original string ids live alongside each node for reporting.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of a node inside a [`BeliefGraph`].
pub type NodeId = usize;

/// Image of an edge type under the sign map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sign {
    Negative,
    Neutral,
    Positive,
}

impl Sign {
    pub fn from_i64(v: i64) -> Option<Sign> {
        match v {
            -1 => Some(Sign::Negative),
            0 => Some(Sign::Neutral),
            1 => Some(Sign::Positive),
            _ => None,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Sign::Negative => -1,
            Sign::Neutral => 0,
            Sign::Positive => 1,
        }
    }
}

impl Serialize for Sign {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_i8(self.as_i8())
    }
}

impl<'de> Deserialize<'de> for Sign {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = i64::deserialize(d)?;
        Sign::from_i64(v).ok_or_else(|| {
            serde::de::Error::custom(format!("unknown sign value {v}, expected -1, 0 or 1"))
        })
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_i8())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeliefNode {
    /// Original (external) identifier.
    #[serde(rename = "id")]
    pub name: String,
    /// Credibility Ψ in `[0, 1]`.
    pub psi: f64,
    /// Fixed confidence for authority nodes.
    #[serde(default)]
    pub authority: Option<f64>,
}

impl BeliefNode {
    pub fn new(name: impl Into<String>, psi: f64) -> Self {
        Self {
            name: name.into(),
            psi,
            authority: None,
        }
    }

    pub fn with_authority(mut self, a: f64) -> Self {
        self.authority = Some(a);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypedEdge {
    pub src: NodeId,
    pub dst: NodeId,
    pub edge_type: String,
    pub sign: Sign,
    pub weight: f64,
}

impl TypedEdge {
    pub fn new(
        src: NodeId,
        dst: NodeId,
        edge_type: impl Into<String>,
        sign: Sign,
        weight: f64,
    ) -> Self {
        Self {
            src,
            dst,
            edge_type: edge_type.into(),
            sign,
            weight,
        }
    }

    pub fn support(src: NodeId, dst: NodeId, weight: f64) -> Self {
        Self::new(src, dst, SUPPORT_TYPE, Sign::Positive, weight)
    }

    pub fn contradiction(src: NodeId, dst: NodeId, weight: f64) -> Self {
        Self::new(src, dst, CONTRADICTION_TYPE, Sign::Negative, weight)
    }
}

/// Default type label for positive edges.
pub const SUPPORT_TYPE: &str = "supports";
/// Default type label for negative edges.
pub const CONTRADICTION_TYPE: &str = "contradicts";

/// Directed, typed, signed, weighted belief graph.
///
/// Construction goes through [`BeliefGraph::new`] or the mutating helpers, all
/// of which keep the graph valid: endpoints exist, no self-loops, weights are
/// finite and nonnegative, credibilities and authority values lie in `[0, 1]`,
/// names are unique, and each edge type maps to exactly one sign.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BeliefGraph {
    nodes: Vec<BeliefNode>,
    edges: Vec<TypedEdge>,
}

impl BeliefGraph {
    pub fn new(nodes: Vec<BeliefNode>, edges: Vec<TypedEdge>) -> Result<Self> {
        let g = Self { nodes, edges };
        g.validate()?;
        Ok(g)
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[BeliefNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[TypedEdge] {
        &self.edges
    }

    pub fn node(&self, id: NodeId) -> Option<&BeliefNode> {
        self.nodes.get(id)
    }

    pub fn psi(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.psi).collect()
    }

    /// Authority clamps as `(node, value)` pairs in index order.
    pub fn authorities(&self) -> Vec<(NodeId, f64)> {
        self.nodes
            .iter()
            .enumerate()
            .filter_map(|(i, n)| n.authority.map(|a| (i, a)))
            .collect()
    }

    pub fn index_of(&self, name: &str) -> Option<NodeId> {
        self.nodes.iter().position(|n| n.name == name)
    }

    /// Map from external name to dense index.
    pub fn name_index(&self) -> HashMap<&str, NodeId> {
        self.nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.name.as_str(), i))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        let mut seen = HashMap::with_capacity(n);
        for (i, node) in self.nodes.iter().enumerate() {
            if seen.insert(node.name.as_str(), i).is_some() {
                return Err(Error::Validation(format!(
                    "duplicate node id {:?}",
                    node.name
                )));
            }
            check_unit("psi", &node.name, node.psi)?;
            if let Some(a) = node.authority {
                check_unit("authority", &node.name, a)?;
            }
        }
        let mut type_signs: BTreeMap<&str, Sign> = BTreeMap::new();
        for (k, e) in self.edges.iter().enumerate() {
            if e.src >= n || e.dst >= n {
                return Err(Error::Validation(format!(
                    "edge {k} references missing node ({} -> {}, {} nodes)",
                    e.src, e.dst, n
                )));
            }
            if e.src == e.dst {
                return Err(Error::Validation(format!(
                    "edge {k} is a self-loop on {:?}",
                    self.nodes[e.src].name
                )));
            }
            if !e.weight.is_finite() || e.weight < 0.0 {
                return Err(Error::Validation(format!(
                    "edge {k} has invalid weight {}",
                    e.weight
                )));
            }
            match type_signs.get(e.edge_type.as_str()) {
                Some(&s) if s != e.sign => {
                    return Err(Error::Validation(format!(
                        "edge type {:?} mapped to both {} and {}",
                        e.edge_type, s, e.sign
                    )));
                }
                Some(_) => {}
                None => {
                    type_signs.insert(e.edge_type.as_str(), e.sign);
                }
            }
        }
        Ok(())
    }

    /// Sign currently associated with an edge type, if the type is in use.
    pub fn sign_of_type(&self, edge_type: &str) -> Option<Sign> {
        self.edges
            .iter()
            .find(|e| e.edge_type == edge_type)
            .map(|e| e.sign)
    }

    pub fn add_node(&mut self, node: BeliefNode) -> Result<NodeId> {
        if self.nodes.iter().any(|n| n.name == node.name) {
            return Err(Error::Validation(format!(
                "duplicate node id {:?}",
                node.name
            )));
        }
        check_unit("psi", &node.name, node.psi)?;
        if let Some(a) = node.authority {
            check_unit("authority", &node.name, a)?;
        }
        self.nodes.push(node);
        Ok(self.nodes.len() - 1)
    }

    pub fn add_edge(&mut self, edge: TypedEdge) -> Result<()> {
        self.edges.push(edge);
        if let Err(e) = self.validate_last_edge() {
            self.edges.pop();
            return Err(e);
        }
        Ok(())
    }

    fn validate_last_edge(&self) -> Result<()> {
        let k = self.edges.len() - 1;
        let e = &self.edges[k];
        let n = self.nodes.len();
        if e.src >= n || e.dst >= n {
            return Err(Error::Validation(format!(
                "edge references missing node ({} -> {}, {} nodes)",
                e.src, e.dst, n
            )));
        }
        if e.src == e.dst {
            return Err(Error::Validation(format!(
                "self-loop on {:?}",
                self.nodes[e.src].name
            )));
        }
        if !e.weight.is_finite() || e.weight < 0.0 {
            return Err(Error::Validation(format!("invalid weight {}", e.weight)));
        }
        if let Some(other) = self.edges[..k].iter().find(|o| o.edge_type == e.edge_type) {
            if other.sign != e.sign {
                return Err(Error::Validation(format!(
                    "edge type {:?} mapped to both {} and {}",
                    e.edge_type, other.sign, e.sign
                )));
            }
        }
        Ok(())
    }

    pub fn set_psi(&mut self, id: NodeId, psi: f64) -> Result<()> {
        let node = self
            .nodes
            .get_mut(id)
            .ok_or_else(|| Error::Validation(format!("unknown node index {id}")))?;
        check_unit("psi", &node.name, psi)?;
        node.psi = psi;
        Ok(())
    }

    /// Removes a node and all incident edges. Indices above `id` shift down by one.
    pub fn remove_node(&mut self, id: NodeId) -> Result<BeliefNode> {
        if id >= self.nodes.len() {
            return Err(Error::Validation(format!(
                "cannot remove missing node {id}"
            )));
        }
        let node = self.nodes.remove(id);
        self.edges.retain(|e| e.src != id && e.dst != id);
        for e in &mut self.edges {
            if e.src > id {
                e.src -= 1;
            }
            if e.dst > id {
                e.dst -= 1;
            }
        }
        Ok(node)
    }

    pub fn edges_mut(&mut self) -> &mut Vec<TypedEdge> {
        &mut self.edges
    }

    /// Positions of edges matching `(src, dst, edge_type)`.
    pub fn find_edges(&self, src: NodeId, dst: NodeId, edge_type: &str) -> Vec<usize> {
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.src == src && e.dst == dst && e.edge_type == edge_type)
            .map(|(k, _)| k)
            .collect()
    }

    /// Reorders nodes by name and edges by `(src name, dst name, type, sign, weight)`.
    pub fn canonicalize(&mut self) {
        let mut order: Vec<NodeId> = (0..self.nodes.len()).collect();
        order.sort_by(|&a, &b| self.nodes[a].name.cmp(&self.nodes[b].name));
        let mut new_index = vec![0; order.len()];
        for (new, &old) in order.iter().enumerate() {
            new_index[old] = new;
        }
        let nodes = order.iter().map(|&i| self.nodes[i].clone()).collect();
        self.nodes = nodes;
        for e in &mut self.edges {
            e.src = new_index[e.src];
            e.dst = new_index[e.dst];
        }
        self.edges.sort_by(|a, b| {
            (a.src, a.dst, &a.edge_type, a.sign)
                .cmp(&(b.src, b.dst, &b.edge_type, b.sign))
                .then(a.weight.total_cmp(&b.weight))
        });
    }
}

fn check_unit(field: &str, name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::Validation(format!(
            "node {name:?}: {field} {v} outside [0, 1]"
        )));
    }
    Ok(())
}
