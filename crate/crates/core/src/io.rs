//! JSON graph files.
//!
//! ```json
//! {"nodes":[{"id":"a","psi":0.9,"authority":null}],
//!  "edges":[{"src":"a","dst":"b","type":"supports","sign":1,"weight":1.0}]}
//! ```
//!
//! Canonical output sorts nodes by id and edges by `(src, dst, type)`.
//! Floats are written in shortest round-trip form.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{BeliefGraph, BeliefNode, Sign, TypedEdge};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphFile {
    nodes: Vec<NodeRecord>,
    edges: Vec<EdgeRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeRecord {
    id: String,
    psi: f64,
    #[serde(default)]
    authority: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeRecord {
    src: String,
    dst: String,
    #[serde(rename = "type")]
    edge_type: String,
    sign: Sign,
    weight: f64,
}

/// Parses a graph document. Node indices follow ascending id order.
pub fn graph_from_json(text: &str) -> Result<BeliefGraph> {
    if text.trim().is_empty() {
        return Ok(BeliefGraph::empty());
    }
    let file: GraphFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let mut names: Vec<&str> = file.nodes.iter().map(|n| n.id.as_str()).collect();
    names.sort_unstable();
    if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::Validation(format!("duplicate node id {:?}", w[0])));
    }
    let index = |name: &str, k: usize, field: &str| -> Result<usize> {
        names.binary_search(&name).map_err(|_| {
            Error::Validation(format!("edge {k}: {field} {name:?} is not a declared node"))
        })
    };
    let mut nodes: Vec<Option<BeliefNode>> = vec![None; names.len()];
    for rec in &file.nodes {
        let i = names.binary_search(&rec.id.as_str()).expect("declared");
        nodes[i] = Some(BeliefNode {
            name: rec.id.clone(),
            psi: rec.psi,
            authority: rec.authority,
        });
    }
    let mut edges = Vec::with_capacity(file.edges.len());
    for (k, rec) in file.edges.iter().enumerate() {
        edges.push(TypedEdge {
            src: index(&rec.src, k, "src")?,
            dst: index(&rec.dst, k, "dst")?,
            edge_type: rec.edge_type.clone(),
            sign: rec.sign,
            weight: rec.weight,
        });
    }
    let mut g = BeliefGraph::new(nodes.into_iter().map(|n| n.unwrap()).collect(), edges)?;
    g.canonicalize();
    Ok(g)
}

/// Canonical JSON text for a graph.
pub fn graph_to_json(graph: &BeliefGraph) -> String {
    let mut g = graph.clone();
    g.canonicalize();
    let file = GraphFile {
        nodes: g
            .nodes()
            .iter()
            .map(|n| NodeRecord {
                id: n.name.clone(),
                psi: n.psi,
                authority: n.authority,
            })
            .collect(),
        edges: g
            .edges()
            .iter()
            .map(|e| EdgeRecord {
                src: g.nodes()[e.src].name.clone(),
                dst: g.nodes()[e.dst].name.clone(),
                edge_type: e.edge_type.clone(),
                sign: e.sign,
                weight: e.weight,
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&file).expect("graph serializes");
    s.push('\n');
    s
}

pub fn load_graph(path: impl AsRef<Path>) -> Result<BeliefGraph> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    graph_from_json(&text).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        Error::Validation(msg) => Error::Validation(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn save_graph(graph: &BeliefGraph, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path, graph_to_json(graph).as_bytes())
}

/// Writes to a sibling temp file and renames it into place.
pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::Validation(format!("not a file path: {}", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(file_name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}
