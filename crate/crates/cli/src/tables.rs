//! CSV files exchanged between commands.

use std::path::Path;

use zonegraph::graph::{BeliefGraph, NodeId};
use zonegraph::propagation::ConfidenceState;
use zonegraph::zones::Zone;
use zonegraph::{Error, Result};

pub const PHI_HEADER: &str = "node_id,phi,converged,t_star,r";
pub const ZONES_HEADER: &str = "zone_id,size,mean_phi,min_phi,members";

fn parse_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Parse(format!("{}: {e}", path.display()))
}

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::Reader::from_path(path).map_err(|e| parse_err(path, e))
}

fn column(headers: &csv::StringRecord, name: &str, path: &Path) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| parse_err(path, format!("missing column {name:?}")))
}

/// One row per node, in graph order; the run-level fields repeat per row.
pub fn phi_csv(graph: &BeliefGraph, state: &ConfidenceState) -> String {
    let mut out = String::from(PHI_HEADER);
    out.push('\n');
    for (node, phi) in graph.nodes().iter().zip(&state.phi) {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            node.name, phi, state.converged, state.iterations, state.contraction_factor
        ));
    }
    out
}

/// Reads the `phi` column back into graph order. Every node must appear
/// exactly once.
pub fn read_phi(path: &Path, graph: &BeliefGraph) -> Result<Vec<f64>> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers().map_err(|e| parse_err(path, e))?.clone();
    let (id_col, phi_col) = (
        column(&headers, "node_id", path)?,
        column(&headers, "phi", path)?,
    );
    let index = graph.name_index();
    let mut phi = vec![f64::NAN; graph.node_count()];
    for rec in rdr.records() {
        let rec = rec.map_err(|e| parse_err(path, e))?;
        let name = &rec[id_col];
        let &v = index
            .get(name)
            .ok_or_else(|| Error::Validation(format!("{name:?} is not a node of the graph")))?;
        if !phi[v].is_nan() {
            return Err(Error::Validation(format!("node {name:?} listed twice")));
        }
        let x: f64 = rec[phi_col].parse().map_err(|e| parse_err(path, e))?;
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Validation(format!(
                "confidence {x} of {name:?} not in [0, 1]"
            )));
        }
        phi[v] = x;
    }
    if let Some(v) = phi.iter().position(|x| x.is_nan()) {
        return Err(Error::Validation(format!(
            "no confidence for node {:?}",
            graph.nodes()[v].name
        )));
    }
    Ok(phi)
}

/// Members are written as space-separated node ids.
pub fn zones_csv(graph: &BeliefGraph, zones: &[Zone]) -> String {
    let mut out = String::from(ZONES_HEADER);
    out.push('\n');
    for (i, z) in zones.iter().enumerate() {
        let names: Vec<&str> = z
            .members()
            .iter()
            .map(|&v| graph.nodes()[v].name.as_str())
            .collect();
        out.push_str(&format!(
            "{i},{},{},{},{}\n",
            z.size(),
            z.mean_phi,
            z.min_phi,
            names.join(" ")
        ));
    }
    out
}

pub fn read_zones(path: &Path, graph: &BeliefGraph, phi: &[f64]) -> Result<Vec<Zone>> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers().map_err(|e| parse_err(path, e))?.clone();
    let col = column(&headers, "members", path)?;
    let index = graph.name_index();
    let mut zones = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| parse_err(path, e))?;
        let members = rec[col]
            .split_whitespace()
            .map(|name| {
                index.get(name).copied().ok_or_else(|| {
                    Error::Validation(format!("{name:?} is not a node of the graph"))
                })
            })
            .collect::<Result<Vec<NodeId>>>()?;
        zones.push(Zone::new(members, phi)?);
    }
    Ok(zones)
}
