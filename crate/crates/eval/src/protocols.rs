//! Protocol runners P1–P4, result rows and summaries.
//!
//! Each protocol works per seed; seeds run in parallel and results come back
//! in seed order, so outputs are identical for any worker count. Wall-clock
//! times go to a separate table to keep the result tables reproducible.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use zonegraph::atlas::{build_atlas, recompute_atlas, Atlas, GovernanceParams};
use zonegraph::dynamics::{apply_shock, ShockSpec};
use zonegraph::graph::{BeliefGraph, NodeId};
use zonegraph::propagation::{
    build_prior, propagate_graph, propagate_with_factor, PropagationParams,
};
use zonegraph::rng::Rng;
use zonegraph::spectral::contraction_factor;
use zonegraph::zones::{quantile_threshold, threshold_nodes};
use zonegraph::{build_signed_matrices, Error, Result};

use crate::baselines::{unsign_cl, unsign_pro, unsign_pro_atlas};
use crate::config::{EvalConfig, Protocol};
use crate::generators::{gen_g1, gen_g2, gen_g3, GeneratorConfig, GroundTruth};
use crate::louvain::LouvainParams;
use crate::metrics;
use crate::stats::mean_ci;

/// Stream tags for protocol-level randomness, disjoint from the generator's.
const JITTER: u64 = 101;
const SHOCK_TARGETS: u64 = 102;

pub const METHOD_SIGNED: &str = "signed";
pub const METHOD_UNSIGN_CL: &str = "unsign_cl";
pub const METHOD_UNSIGN_PRO: &str = "unsign_pro";
/// P4 rows measured on the planted-zone family.
pub const METHOD_SIGNED_PLANTED: &str = "signed_planted";

/// One result line. Columns that do not apply to a protocol stay empty.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct MetricRow {
    pub protocol: String,
    pub seed: u64,
    pub method: String,
    pub alpha: Option<f64>,
    pub eta: Option<f64>,
    pub quantile: Option<f64>,
    pub jitter: Option<f64>,
    pub mass: Option<f64>,
    pub theta: Option<f64>,
    /// Contraction factor before a shock (P4).
    pub r_pre: Option<f64>,
    pub r: Option<f64>,
    pub t_star: Option<usize>,
    pub converged: Option<bool>,
    pub zone_precision: Option<f64>,
    pub zone_recall: Option<f64>,
    pub zone_f1: Option<f64>,
    pub zone_defined: Option<bool>,
    pub node_precision: Option<f64>,
    pub node_recall: Option<f64>,
    pub node_f1: Option<f64>,
    pub matched_jaccard: Option<f64>,
    pub atlas_size: Option<usize>,
    pub coverage: Option<f64>,
    pub mean_jaccard: Option<f64>,
    pub churn: Option<f64>,
    pub tau_churn: Option<f64>,
    pub stability: Option<f64>,
    pub shock_accepted: Option<bool>,
    pub halvings: Option<usize>,
    pub false_collapse_rate: Option<f64>,
    pub false_collapse_defined: Option<bool>,
}

pub const METRIC_HEADER: [&str; 31] = [
    "protocol",
    "seed",
    "method",
    "alpha",
    "eta",
    "quantile",
    "jitter",
    "mass",
    "theta",
    "r_pre",
    "r",
    "t_star",
    "converged",
    "zone_precision",
    "zone_recall",
    "zone_f1",
    "zone_defined",
    "node_precision",
    "node_recall",
    "node_f1",
    "matched_jaccard",
    "atlas_size",
    "coverage",
    "mean_jaccard",
    "churn",
    "tau_churn",
    "stability",
    "shock_accepted",
    "halvings",
    "false_collapse_rate",
    "false_collapse_defined",
];

type Getter = fn(&MetricRow) -> Option<f64>;

/// Numeric columns summarised across seeds.
pub const SUMMARY_METRICS: [(&str, Getter); 16] = [
    ("r", |r| r.r),
    ("t_star", |r| r.t_star.map(|t| t as f64)),
    ("zone_precision", |r| r.zone_precision),
    ("zone_recall", |r| r.zone_recall),
    ("zone_f1", |r| r.zone_f1),
    ("node_precision", |r| r.node_precision),
    ("node_recall", |r| r.node_recall),
    ("node_f1", |r| r.node_f1),
    ("matched_jaccard", |r| r.matched_jaccard),
    ("atlas_size", |r| r.atlas_size.map(|a| a as f64)),
    ("coverage", |r| r.coverage),
    ("mean_jaccard", |r| r.mean_jaccard),
    ("churn", |r| r.churn),
    ("tau_churn", |r| r.tau_churn),
    ("stability", |r| r.stability),
    ("false_collapse_rate", |r| r.false_collapse_rate),
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timing {
    pub protocol: String,
    pub seed: u64,
    pub cell: String,
    pub wall_clock_ms: f64,
}

pub const TIMING_HEADER: [&str; 4] = ["protocol", "seed", "cell", "wall_clock_ms"];

/// Histogram bin of per-seed churn values (P3).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramRow {
    pub protocol: String,
    pub jitter: f64,
    pub metric: String,
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub count: usize,
}

pub const HISTOGRAM_HEADER: [&str; 6] =
    ["protocol", "jitter", "metric", "bin_lo", "bin_hi", "count"];

/// Mean and CI of one metric in one grid cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub protocol: String,
    pub method: String,
    pub alpha: Option<f64>,
    pub eta: Option<f64>,
    pub quantile: Option<f64>,
    pub jitter: Option<f64>,
    pub mass: Option<f64>,
    pub metric: String,
    pub count: usize,
    pub mean: f64,
    pub ci95: f64,
}

pub const SUMMARY_HEADER: [&str; 11] = [
    "protocol", "method", "alpha", "eta", "quantile", "jitter", "mass", "metric", "count", "mean",
    "ci95",
];

/// Threshold chosen per method in P2.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Selection {
    pub method: String,
    pub q_star: f64,
    pub node_f1_mean: f64,
    pub node_f1_ci95: f64,
    pub zone_f1_mean: f64,
    pub zone_f1_ci95: f64,
}

pub const SELECTION_HEADER: [&str; 6] = [
    "method",
    "q_star",
    "node_f1_mean",
    "node_f1_ci95",
    "zone_f1_mean",
    "zone_f1_ci95",
];

#[derive(Debug, Clone, Default)]
pub struct ProtocolOutput {
    pub rows: Vec<MetricRow>,
    pub timings: Vec<Timing>,
    /// P3 only.
    pub histogram: Vec<HistogramRow>,
    /// P2 only.
    pub selection: Vec<Selection>,
}

fn elapsed_ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// `θ(q)` lowered by the solver tolerance. Confidences are only resolved to
/// that tolerance, so values equal up to rounding noise land on the same
/// side of the threshold.
pub fn quantile_theta(phi: &[f64], q: f64, slack: f64) -> Result<f64> {
    Ok(quantile_threshold(phi, q)? - slack)
}

fn row(protocol: Protocol, seed: u64, method: &str) -> MetricRow {
    MetricRow {
        protocol: protocol.name().to_string(),
        seed,
        method: method.to_string(),
        ..MetricRow::default()
    }
}

/// Recovery and shape metrics of one atlas.
fn fill_recovery(
    row: &mut MetricRow,
    atlas: &Atlas,
    truth: &GroundTruth,
    threshold_size: usize,
) -> Result<()> {
    let sets = atlas.member_sets();
    let zone = metrics::family_metrics(&sets, &truth.blocks)?;
    let node = metrics::node_metrics(&sets, &truth.blocks)?;
    row.zone_precision = Some(zone.precision);
    row.zone_recall = Some(zone.recall);
    row.zone_f1 = Some(zone.f1);
    row.zone_defined = Some(zone.defined);
    row.node_precision = Some(node.precision);
    row.node_recall = Some(node.recall);
    row.node_f1 = Some(node.f1);
    if !sets.is_empty() {
        row.matched_jaccard = Some(metrics::hungarian_match(&sets, &truth.blocks)?.1);
    }
    fill_shape(row, &sets, threshold_size);
    Ok(())
}

fn fill_shape(row: &mut MetricRow, sets: &[Vec<NodeId>], threshold_size: usize) {
    row.atlas_size = Some(sets.len());
    row.coverage = Some(metrics::coverage(sets, threshold_size));
    row.mean_jaccard = Some(metrics::mean_pairwise_jaccard(sets));
}

fn run_seeds<T, F>(cfg: &EvalConfig, per_seed: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    let seeds = cfg.seed_list();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cfg.workers {
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Validation(format!("cannot start worker pool: {e}")))?;
    pool.install(|| seeds.par_iter().map(|&s| per_seed(s)).collect())
}

fn merge(parts: Vec<(Vec<MetricRow>, Vec<Timing>)>) -> ProtocolOutput {
    let mut out = ProtocolOutput::default();
    for (rows, timings) in parts {
        out.rows.extend(rows);
        out.timings.extend(timings);
    }
    out
}

fn with_seed(base: &GeneratorConfig, seed: u64) -> GeneratorConfig {
    GeneratorConfig {
        seed,
        ..base.clone()
    }
}

pub fn run_protocol(protocol: Protocol, cfg: &EvalConfig) -> Result<ProtocolOutput> {
    cfg.validate(protocol)?;
    match protocol {
        Protocol::P1 => run_p1(cfg),
        Protocol::P2 => run_p2(cfg),
        Protocol::P3 => run_p3(cfg),
        Protocol::P4 => run_p4(cfg),
    }
}

/// P1: contraction factor and iterations to tolerance over the `(α, η)` grid.
fn run_p1(cfg: &EvalConfig) -> Result<ProtocolOutput> {
    let c = &cfg.p1;
    let parts = run_seeds(cfg, |seed| {
        let g = gen_g1(&with_seed(&c.generator, seed))?;
        let m = build_signed_matrices(&g);
        let mut rows = Vec::new();
        let mut timings = Vec::new();
        for &alpha in &c.alphas {
            for &eta in &c.etas {
                let t = Instant::now();
                let params = PropagationParams {
                    tol: c.tol,
                    max_iter: c.max_iter,
                    ..PropagationParams::new(alpha, eta)
                };
                let b = build_prior(&g, &m, &params.prior)?;
                let r = contraction_factor(&m, alpha, eta);
                let state = propagate_with_factor(&b, &b, &m, &params, &g.authorities(), r);
                let mut out = row(Protocol::P1, seed, METHOD_SIGNED);
                out.alpha = Some(alpha);
                out.eta = Some(eta);
                out.r = Some(r);
                out.t_star = state.converged.then_some(state.iterations);
                out.converged = Some(state.converged);
                rows.push(out);
                timings.push(Timing {
                    protocol: "p1".into(),
                    seed,
                    cell: format!("alpha={alpha};eta={eta}"),
                    wall_clock_ms: elapsed_ms(t),
                });
            }
        }
        Ok((rows, timings))
    })?;
    Ok(merge(parts))
}

/// P2: recovery of planted zones over a threshold sweep for the signed
/// pipeline and both unsigned baselines.
fn run_p2(cfg: &EvalConfig) -> Result<ProtocolOutput> {
    let c = &cfg.p2;
    let params = c.solver.params();
    let louvain = LouvainParams {
        resolution: c.louvain_resolution,
        ..LouvainParams::default()
    };
    // Louvain communities partition the thresholded graph, so they are all
    // reported; the top-k cap would otherwise always admit the background.
    let cl_gov = GovernanceParams {
        k: None,
        ..c.governance
    };
    let parts = run_seeds(cfg, |seed| {
        let t = Instant::now();
        let (g, truth) = gen_g2(&with_seed(&c.generator, seed))?;
        let (m, _, signed) = propagate_graph(&g, &params)?;
        let (um, _, unsigned) = unsign_pro(&g, &params)?;
        let mut timings = vec![Timing {
            protocol: "p2".into(),
            seed,
            cell: "propagate".into(),
            wall_clock_ms: elapsed_ms(t),
        }];
        let mut rows = Vec::new();
        for &q in &c.quantiles {
            let t = Instant::now();
            let theta = quantile_theta(&signed.phi, q, params.tol)?;
            let kept = threshold_nodes(&signed.phi, theta).len();
            let methods: [(&str, Atlas, f64, usize); 3] = [
                (
                    METHOD_SIGNED,
                    build_atlas(&signed.phi, theta, &m, &c.governance),
                    theta,
                    kept,
                ),
                (
                    METHOD_UNSIGN_CL,
                    unsign_cl(&m, &signed.phi, theta, &cl_gov, &louvain),
                    theta,
                    kept,
                ),
                {
                    let ut = quantile_theta(&unsigned.phi, q, params.tol)?;
                    let ukept = threshold_nodes(&unsigned.phi, ut).len();
                    (
                        METHOD_UNSIGN_PRO,
                        unsign_pro_atlas(&um, &unsigned.phi, ut, &c.governance),
                        ut,
                        ukept,
                    )
                },
            ];
            for (method, atlas, th, size) in methods {
                let mut out = row(Protocol::P2, seed, method);
                out.alpha = Some(params.alpha);
                out.eta = Some(params.eta);
                out.quantile = Some(q);
                out.theta = Some(th);
                fill_recovery(&mut out, &atlas, &truth, size)?;
                rows.push(out);
            }
            timings.push(Timing {
                protocol: "p2".into(),
                seed,
                cell: format!("q={q}"),
                wall_clock_ms: elapsed_ms(t),
            });
        }
        Ok((rows, timings))
    })?;
    let mut out = merge(parts);
    out.selection = select_q_star(&out.rows);
    Ok(out)
}

/// Per method, the quantile with the highest seed-mean node-level F1 (ties
/// to the smaller quantile), with both F1 summaries at that quantile.
pub fn select_q_star(rows: &[MetricRow]) -> Vec<Selection> {
    let mut cells: BTreeMap<(String, u64), (f64, Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for r in rows {
        let (Some(q), Some(nf), Some(zf)) = (r.quantile, r.node_f1, r.zone_f1) else {
            continue;
        };
        let e = cells
            .entry((r.method.clone(), q.to_bits()))
            .or_insert((q, Vec::new(), Vec::new()));
        e.1.push(nf);
        e.2.push(zf);
    }
    let mut best: BTreeMap<String, Selection> = BTreeMap::new();
    for ((method, _), (q, nf, zf)) in cells {
        let (nm, nci) = mean_ci(&nf).expect("cell has rows");
        let (zm, zci) = mean_ci(&zf).expect("cell has rows");
        let candidate = Selection {
            method: method.clone(),
            q_star: q,
            node_f1_mean: nm,
            node_f1_ci95: nci,
            zone_f1_mean: zm,
            zone_f1_ci95: zci,
        };
        match best.get(&method) {
            Some(cur) if cur.node_f1_mean > nm || (cur.node_f1_mean == nm && cur.q_star <= q) => {}
            _ => {
                best.insert(method, candidate);
            }
        }
    }
    best.into_values().collect()
}

/// Multiplies every raw weight by `1 + scale·N(0,1)` and clamps at 0.
pub fn jitter_weights(graph: &BeliefGraph, scale: f64, rng: &mut Rng) -> Result<BeliefGraph> {
    let mut g = graph.clone();
    for e in g.edges_mut().iter_mut() {
        let z = rng.normal();
        if scale != 0.0 {
            e.weight = (e.weight * (1.0 + scale * z)).max(0.0);
        }
    }
    g.validate()?;
    Ok(g)
}

/// P3: atlas churn under multiplicative weight jitter, thresholds
/// recomputed after jitter.
fn run_p3(cfg: &EvalConfig) -> Result<ProtocolOutput> {
    let c = &cfg.p3;
    let params = c.solver.params();
    let parts = run_seeds(cfg, |seed| {
        let (g, _) = gen_g2(&with_seed(&c.generator, seed))?;
        let (m, _, pre) = propagate_graph(&g, &params)?;
        let theta_pre = quantile_theta(&pre.phi, c.quantile, params.tol)?;
        let atlas_pre = build_atlas(&pre.phi, theta_pre, &m, &c.governance);
        let pre_sets = atlas_pre.member_sets();
        let mut rows = Vec::new();
        let mut timings = Vec::new();
        for &scale in &c.jitter_scales {
            let t = Instant::now();
            let mut rng = Rng::new(seed).fork(JITTER);
            let jittered = jitter_weights(&g, scale, &mut rng)?;
            let (m2, _, post) = propagate_graph(&jittered, &params)?;
            let theta_post = quantile_theta(&post.phi, c.quantile, params.tol)?;
            let atlas_post = recompute_atlas(&atlas_pre, &post.phi, theta_post, &m2, &c.governance);
            let post_sets = atlas_post.member_sets();
            let mut out = row(Protocol::P3, seed, METHOD_SIGNED);
            out.alpha = Some(params.alpha);
            out.eta = Some(params.eta);
            out.quantile = Some(c.quantile);
            out.jitter = Some(scale);
            out.theta = Some(theta_post);
            out.r = Some(post.contraction_factor);
            if !pre_sets.is_empty() {
                out.churn = Some(metrics::churn(&pre_sets, &post_sets)?);
                out.stability = Some(metrics::stability(&pre_sets, &post_sets)?);
                out.tau_churn = Some(metrics::tau_churn(&pre_sets, &post_sets, c.governance.tau)?);
            }
            fill_shape(
                &mut out,
                &post_sets,
                threshold_nodes(&post.phi, theta_post).len(),
            );
            rows.push(out);
            timings.push(Timing {
                protocol: "p3".into(),
                seed,
                cell: format!("jitter={scale}"),
                wall_clock_ms: elapsed_ms(t),
            });
        }
        Ok((rows, timings))
    })?;
    let mut out = merge(parts);
    out.histogram = churn_histogram(&out.rows, &c.jitter_scales, c.histogram_bins);
    Ok(out)
}

/// Equal-width bins over `[0, 1]` (last bin closed) for mean-Jaccard churn
/// and τ-thresholded churn, per jitter scale.
pub fn churn_histogram(rows: &[MetricRow], scales: &[f64], bins: usize) -> Vec<HistogramRow> {
    let mut out = Vec::new();
    for &scale in scales {
        for (metric, get) in [
            ("churn", (|r: &MetricRow| r.churn) as Getter),
            ("tau_churn", |r: &MetricRow| r.tau_churn),
        ] {
            let mut counts = vec![0usize; bins];
            for v in rows
                .iter()
                .filter(|r| r.jitter == Some(scale))
                .filter_map(get)
            {
                let b = ((v * bins as f64).floor() as usize).min(bins - 1);
                counts[b] += 1;
            }
            for (b, count) in counts.into_iter().enumerate() {
                out.push(HistogramRow {
                    protocol: "p3".into(),
                    jitter: scale,
                    metric: metric.into(),
                    bin_lo: b as f64 / bins as f64,
                    bin_hi: (b + 1) as f64 / bins as f64,
                    count,
                });
            }
        }
    }
    out
}

/// Shock targets for a seed: the first `count` nodes of a seeded shuffle,
/// sorted.
pub fn shock_targets(seed: u64, n: usize, count: usize) -> Vec<NodeId> {
    let mut perm: Vec<NodeId> = (0..n).collect();
    Rng::new(seed).fork(SHOCK_TARGETS).shuffle(&mut perm);
    let mut t = perm[..count].to_vec();
    t.sort_unstable();
    t
}

struct ShockRun<'a> {
    graph: &'a BeliefGraph,
    phi: &'a [f64],
    theta: f64,
    atlas: &'a Atlas,
}

/// P4: stability of the atlas under shocks of growing mass, using the
/// pre-shock threshold.
fn run_p4(cfg: &EvalConfig) -> Result<ProtocolOutput> {
    let c = &cfg.p4;
    let params = c.solver.params();
    let parts = run_seeds(cfg, |seed| {
        let mut rows = Vec::new();
        let mut timings = Vec::new();
        let g = gen_g3(&with_seed(&c.generator, seed))?;
        shock_sweep(
            cfg,
            seed,
            &g,
            None,
            METHOD_SIGNED,
            &params,
            &mut rows,
            &mut timings,
        )?;
        if let Some(planted) = &c.false_collapse {
            let (g2, truth) = gen_g2(&with_seed(planted, seed))?;
            shock_sweep(
                cfg,
                seed,
                &g2,
                Some(&truth),
                METHOD_SIGNED_PLANTED,
                &params,
                &mut rows,
                &mut timings,
            )?;
        }
        Ok((rows, timings))
    })?;
    Ok(merge(parts))
}

#[allow(clippy::too_many_arguments)]
fn shock_sweep(
    cfg: &EvalConfig,
    seed: u64,
    g: &BeliefGraph,
    truth: Option<&GroundTruth>,
    method: &str,
    params: &PropagationParams,
    rows: &mut Vec<MetricRow>,
    timings: &mut Vec<Timing>,
) -> Result<()> {
    let c = &cfg.p4;
    let (m, _, pre) = propagate_graph(g, params)?;
    let theta = quantile_theta(&pre.phi, c.quantile, params.tol)?;
    let atlas = build_atlas(&pre.phi, theta, &m, &c.governance);
    let base = ShockRun {
        graph: g,
        phi: &pre.phi,
        theta,
        atlas: &atlas,
    };
    let targets = shock_targets(seed, g.node_count(), c.targets);
    for &mass in &c.masses {
        let t = Instant::now();
        let mut out = row(Protocol::P4, seed, method);
        out.alpha = Some(params.alpha);
        out.eta = Some(params.eta);
        out.quantile = Some(c.quantile);
        out.mass = Some(mass);
        out.theta = Some(theta);
        out.r_pre = Some(pre.contraction_factor);
        if pre.contraction_factor >= 1.0 {
            // The shock rule presupposes a contractive starting point.
            out.shock_accepted = Some(false);
        } else {
            shock_cell(
                &base,
                &targets,
                mass,
                truth,
                params,
                &c.governance,
                cfg,
                &mut out,
            )?;
        }
        rows.push(out);
        timings.push(Timing {
            protocol: "p4".into(),
            seed,
            cell: format!("{method};mass={mass}"),
            wall_clock_ms: elapsed_ms(t),
        });
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn shock_cell(
    base: &ShockRun<'_>,
    targets: &[NodeId],
    mass: f64,
    truth: Option<&GroundTruth>,
    params: &PropagationParams,
    gov: &GovernanceParams,
    cfg: &EvalConfig,
    out: &mut MetricRow,
) -> Result<()> {
    let c = &cfg.p4;
    let strength = mass / targets.len() as f64;
    let spec = ShockSpec {
        targets: targets.iter().map(|&v| (v, strength)).collect(),
        kappa: c.kappa,
        rho_shock: c.rho_shock,
        delta_margin: c.delta_margin,
    };
    let shocked = match apply_shock(base.graph, &spec, params, base.phi) {
        Ok(s) => s,
        Err(Error::ShockRejected { .. }) => {
            out.shock_accepted = Some(false);
            return Ok(());
        }
        Err(e) => return Err(e),
    };
    out.shock_accepted = Some(true);
    out.halvings = Some(shocked.halvings);
    out.r = Some(shocked.state.contraction_factor);
    out.converged = Some(shocked.state.converged);
    let post = recompute_atlas(
        base.atlas,
        &shocked.state.phi,
        base.theta,
        &shocked.matrices,
        gov,
    );
    let pre_sets = base.atlas.member_sets();
    let post_sets = post.member_sets();
    if !pre_sets.is_empty() {
        out.stability = Some(metrics::stability(&pre_sets, &post_sets)?);
        out.churn = Some(metrics::churn(&pre_sets, &post_sets)?);
    }
    fill_shape(
        out,
        &post_sets,
        threshold_nodes(&shocked.state.phi, base.theta).len(),
    );
    if let Some(truth) = truth {
        let (rate, defined) = metrics::false_collapse_rate(
            &truth.blocks,
            &post_sets,
            &shocked.state.phi,
            base.theta,
            gov.tau,
        )?;
        out.false_collapse_rate = Some(rate);
        out.false_collapse_defined = Some(defined);
    }
    Ok(())
}

fn key_bits(r: &MetricRow) -> (String, String, [Option<u64>; 5]) {
    let b = |v: Option<f64>| v.map(f64::to_bits);
    (
        r.protocol.clone(),
        r.method.clone(),
        [b(r.alpha), b(r.eta), b(r.quantile), b(r.jitter), b(r.mass)],
    )
}

/// Mean ± CI per grid cell and metric, cells in first-appearance order.
pub fn summarize(rows: &[MetricRow]) -> Vec<SummaryRow> {
    let mut order = Vec::new();
    let mut cells: BTreeMap<(String, String, [Option<u64>; 5]), (&MetricRow, Vec<&MetricRow>)> =
        BTreeMap::new();
    for r in rows {
        let k = key_bits(r);
        cells
            .entry(k.clone())
            .or_insert_with(|| {
                order.push(k);
                (r, Vec::new())
            })
            .1
            .push(r);
    }
    let mut out = Vec::new();
    for k in order {
        let (first, members) = &cells[&k];
        for (name, get) in SUMMARY_METRICS {
            let vals: Vec<f64> = members.iter().filter_map(|r| get(r)).collect();
            if let Some((mean, ci95)) = mean_ci(&vals) {
                out.push(SummaryRow {
                    protocol: first.protocol.clone(),
                    method: first.method.clone(),
                    alpha: first.alpha,
                    eta: first.eta,
                    quantile: first.quantile,
                    jitter: first.jitter,
                    mass: first.mass,
                    metric: name.into(),
                    count: vals.len(),
                    mean,
                    ci95,
                });
            }
        }
    }
    out
}

/// Serialises rows under a fixed header; the header is written even when
/// there are no rows.
pub fn to_csv<T: Serialize>(header: &[&str], rows: &[T]) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e.to_string()));
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.serialize(r).map_err(io)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}
