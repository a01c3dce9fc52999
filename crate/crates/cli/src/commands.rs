//! Command bodies. Each one computes everything first and only then writes
//! its outputs, each through a temp file and rename.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use zonegraph::atlas::{atlas_update, report_csv, zone_report, Atlas};
use zonegraph::dynamics::{apply_shock, ShockFile};
use zonegraph::graph::BeliefGraph;
use zonegraph::io::{graph_to_json, load_graph, write_atomic};
use zonegraph::matrix::{build_signed_matrices, SignedMatrices};
use zonegraph::propagation::propagate_graph;
use zonegraph::spectral::contraction_factor;
use zonegraph::zones::{extract_zones, quantile_threshold, threshold_nodes, Zone};
use zonegraph::{Error, Result, SignedProjection};
use zonegraph_eval::config::{EvalConfig, Protocol};
use zonegraph_eval::generators::{generate as generate_graph, GeneratorConfig};
use zonegraph_eval::protocols::{
    run_protocol, summarize, to_csv, MetricRow, HISTOGRAM_HEADER, METHOD_SIGNED,
    METHOD_SIGNED_PLANTED, METRIC_HEADER, SELECTION_HEADER, SUMMARY_HEADER, TIMING_HEADER,
};

use crate::plot::{build_chart, render_svg};
use crate::tables::{phi_csv, read_phi, read_zones, zones_csv};
use crate::{
    AtlasArgs, EvalArgs, GenerateArgs, PlotArgs, PropagateArgs, ShockArgs, SolverArgs,
    ThresholdArgs, ZonesArgs,
};

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Validation(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<BeliefGraph> {
    if !path.is_file() {
        return Err(Error::Validation(format!(
            "{}: no such file",
            path.display()
        )));
    }
    load_graph(path)
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| Error::Parse(e.to_string()))
}

/// Short hex digest over the run's inputs.
fn run_id(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    h.finalize()
        .iter()
        .take(6)
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn generate(a: &GenerateArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(p) => serde_json::from_str::<GeneratorConfig>(&read_text(p)?)
            .map_err(|e| Error::Parse(format!("{}: {e}", p.display())))?,
        None => GeneratorConfig::default(),
    };
    if let Some(f) = a.family {
        cfg.family = f.into();
    }
    macro_rules! set {
        ($($field:ident),*) => { $(if let Some(v) = a.$field { cfg.$field = v; })* };
    }
    set!(n, seed, d, rho_minus, k_zones, p_in, p_out_pos, p_out_neg);
    if a.block_size.is_some() {
        cfg.block_size = a.block_size;
    }
    if a.cycles.is_some() {
        cfg.cycles = a.cycles;
    }
    cfg.validate()?;
    let (graph, truth) = generate_graph(&cfg)?;
    let truth_doc = match (&truth, &a.truth) {
        (Some(t), path) => {
            let path = path
                .clone()
                .unwrap_or_else(|| a.out.with_extension("truth.json"));
            Some((
                path,
                json(&serde_json::json!({ "blocks": t.named(&graph) }))?,
            ))
        }
        (None, Some(_)) => {
            return Err(Error::Validation(
                "only g2 graphs have planted zones".into(),
            ));
        }
        (None, None) => None,
    };
    write_atomic(&a.out, graph_to_json(&graph).as_bytes())?;
    if let Some((path, doc)) = truth_doc {
        write_atomic(path, doc.as_bytes())?;
    }
    Ok(())
}

pub fn propagate(a: &PropagateArgs) -> Result<()> {
    let graph = load(&a.graph)?;
    let (_, _, state) = propagate_graph(&graph, &a.solver.params())?;
    write_atomic(&a.out, phi_csv(&graph, &state).as_bytes())
}

/// Confidences from a file, or solved from the graph.
fn confidences(
    graph: &BeliefGraph,
    phi: Option<&Path>,
    solver: &SolverArgs,
) -> Result<(SignedMatrices, Vec<f64>)> {
    match phi {
        Some(p) => {
            let params = solver.params();
            params.validate()?;
            Ok((build_signed_matrices(graph), read_phi(p, graph)?))
        }
        None => {
            let (m, _, state) = propagate_graph(graph, &solver.params())?;
            Ok((m, state.phi))
        }
    }
}

fn threshold(t: &ThresholdArgs, phi: &[f64]) -> Result<f64> {
    match t.theta {
        Some(theta) if (0.0..=1.0).contains(&theta) => Ok(theta),
        Some(theta) => Err(Error::Validation(format!("theta = {theta} not in [0, 1]"))),
        None => quantile_threshold(phi, t.quantile.unwrap_or(0.75)),
    }
}

fn extract(m: &SignedMatrices, phi: &[f64], theta: f64) -> Vec<Zone> {
    let proj = SignedProjection::from_matrices(m, &threshold_nodes(phi, theta));
    extract_zones(&proj, phi)
}

pub fn zones(a: &ZonesArgs) -> Result<()> {
    let graph = load(&a.graph)?;
    let (m, phi) = confidences(&graph, a.phi.as_deref(), &a.solver)?;
    let theta = threshold(&a.threshold, &phi)?;
    let zones = extract(&m, &phi, theta);
    write_atomic(&a.out, zones_csv(&graph, &zones).as_bytes())
}

pub fn atlas(a: &AtlasArgs) -> Result<()> {
    let graph = load(&a.graph)?;
    let gov = a.governance.params();
    gov.validate()?;
    let (m, phi) = confidences(&graph, a.phi.as_deref(), &a.solver)?;
    let candidates = match &a.zones {
        Some(p) => read_zones(p, &graph, &phi)?,
        None => extract(&m, &phi, threshold(&a.threshold, &phi)?),
    };
    let atlas: Atlas = atlas_update(candidates, &phi, &m, &gov);
    let report = zone_report(&atlas, &phi, &m, &gov);
    write_atomic(&a.out, report_csv(&report).as_bytes())
}

#[derive(Serialize)]
struct ShockLog {
    run_id: String,
    kappa: f64,
    rho_shock: f64,
    r_pre: f64,
    r_post: f64,
    halvings: usize,
    converged: bool,
    t_star: usize,
    requested: BTreeMap<String, f64>,
    applied: BTreeMap<String, f64>,
}

pub fn shock(a: &ShockArgs) -> Result<()> {
    let graph_text = read_text(&a.graph)?;
    let spec_text = read_text(&a.spec)?;
    let graph = load(&a.graph)?;
    let file: ShockFile = serde_json::from_str(&spec_text)
        .map_err(|e| Error::Parse(format!("{}: {e}", a.spec.display())))?;
    let spec = file.resolve(&graph)?;
    let params = a.solver.params();
    let (m, warm) = confidences(&graph, a.phi.as_deref(), &a.solver)?;
    let r_pre = contraction_factor(&m, params.alpha, params.eta);
    let out = apply_shock(&graph, &spec, &params, &warm)?;
    let name = |u: usize| graph.nodes()[u].name.clone();
    let log = ShockLog {
        run_id: run_id(&[
            graph_text.as_bytes(),
            spec_text.as_bytes(),
            format!("{params:?}").as_bytes(),
        ]),
        kappa: spec.kappa,
        rho_shock: spec.rho_shock,
        r_pre,
        r_post: out.state.contraction_factor,
        halvings: out.halvings,
        converged: out.state.converged,
        t_star: out.state.iterations,
        requested: spec.targets.iter().map(|&(u, s)| (name(u), s)).collect(),
        applied: out.applied.iter().map(|&(u, s)| (name(u), s)).collect(),
    };
    let log = json(&log)?;
    write_atomic(&a.out_graph, graph_to_json(&out.graph).as_bytes())?;
    write_atomic(&a.out_phi, phi_csv(&out.graph, &out.state).as_bytes())?;
    write_atomic(&a.log, log.as_bytes())
}

#[derive(Serialize)]
struct AppliedShock {
    seed: u64,
    method: String,
    mass: f64,
    accepted: bool,
    halvings: Option<usize>,
    /// Strength applied to each target after backtracking.
    per_target: Option<f64>,
}

#[derive(Serialize)]
struct RunLog<'a> {
    run_id: String,
    protocol: Protocol,
    seeds: Vec<u64>,
    config: &'a EvalConfig,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    applied_shocks: Vec<AppliedShock>,
}

fn applied_shocks(rows: &[MetricRow], targets: usize) -> Vec<AppliedShock> {
    rows.iter()
        .filter(|r| r.method == METHOD_SIGNED || r.method == METHOD_SIGNED_PLANTED)
        .filter_map(|r| {
            let mass = r.mass?;
            let accepted = r.shock_accepted.unwrap_or(false);
            Some(AppliedShock {
                seed: r.seed,
                method: r.method.clone(),
                mass,
                accepted,
                halvings: r.halvings,
                per_target: accepted
                    .then(|| mass / targets as f64 * 0.5f64.powi(r.halvings.unwrap_or(0) as i32)),
            })
        })
        .collect()
}

pub fn eval(a: &EvalArgs) -> Result<()> {
    let protocol: Protocol = a.protocol.into();
    let mut cfg = match &a.config {
        Some(p) => EvalConfig::from_json(&read_text(p)?)?,
        None => EvalConfig::default(),
    };
    if let Some(s) = a.seeds {
        cfg.seeds = s;
    }
    if let Some(b) = a.base_seed {
        cfg.base_seed = b;
    }
    if a.workers.is_some() {
        cfg.workers = a.workers;
    }
    if !a.masses.is_empty() {
        if protocol != Protocol::P4 {
            return Err(Error::Validation("--m applies to p4 only".into()));
        }
        cfg.p4.masses = a.masses.clone();
    }
    cfg.validate(protocol)?;

    let out = run_protocol(protocol, &cfg)?;
    let p = protocol.name();
    let mut files: Vec<(PathBuf, String)> = vec![
        (
            a.out_dir.join(format!("{p}_results.csv")),
            to_csv(&METRIC_HEADER, &out.rows)?,
        ),
        (
            a.out_dir.join(format!("{p}_summary.csv")),
            to_csv(&SUMMARY_HEADER, &summarize(&out.rows))?,
        ),
        (
            a.out_dir.join(format!("{p}_timings.csv")),
            to_csv(&TIMING_HEADER, &out.timings)?,
        ),
    ];
    match protocol {
        Protocol::P2 => files.push((
            a.out_dir.join(format!("{p}_selection.csv")),
            to_csv(&SELECTION_HEADER, &out.selection)?,
        )),
        Protocol::P3 => files.push((
            a.out_dir.join(format!("{p}_histogram.csv")),
            to_csv(&HISTOGRAM_HEADER, &out.histogram)?,
        )),
        _ => {}
    }
    // Identity of the run: protocol plus the effective config (workers
    // excluded, since they do not change results).
    let identity = EvalConfig {
        workers: None,
        ..cfg.clone()
    };
    let identity = serde_json::to_string(&identity).map_err(|e| Error::Parse(e.to_string()))?;
    let log = RunLog {
        run_id: run_id(&[p.as_bytes(), identity.as_bytes()]),
        protocol,
        seeds: cfg.seed_list(),
        config: &cfg,
        applied_shocks: if protocol == Protocol::P4 {
            applied_shocks(&out.rows, cfg.p4.targets)
        } else {
            Vec::new()
        },
    };
    files.push((a.out_dir.join(format!("{p}_run.json")), json(&log)?));

    fs::create_dir_all(&a.out_dir)?;
    for (path, text) in files {
        write_atomic(path, text.as_bytes())?;
    }
    for line in headline(protocol, &out.rows) {
        println!("{line}");
    }
    Ok(())
}

/// Short console digest of a run.
fn headline(protocol: Protocol, rows: &[MetricRow]) -> Vec<String> {
    let mut lines = vec![format!("{protocol}: {} rows", rows.len())];
    if protocol == Protocol::P1 {
        let bad = rows.iter().filter(|r| r.converged == Some(false)).count();
        lines.push(format!("non-converged cells: {bad}"));
    }
    lines
}

pub fn plot(a: &PlotArgs) -> Result<()> {
    let chart = build_chart(a.figure, &a.input)?;
    write_atomic(&a.out, render_svg(&chart).as_bytes())
}
