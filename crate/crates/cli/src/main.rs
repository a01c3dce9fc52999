//! `zonegraph` command-line runner.
//!
//! Exit codes: 0 success, 2 usage or validation failure, 3 domain rejection
//! (a shock or edit that cannot keep the iteration contractive).

mod commands;
mod plot;
mod tables;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use zonegraph::atlas::{GovernanceParams, ScoringMode};
use zonegraph::propagation::{Baseline, PriorMode, PropagationParams};
use zonegraph_eval::config::Protocol;
use zonegraph_eval::generators::Family;

#[derive(Parser)]
#[command(
    name = "zonegraph",
    version,
    about = "Signed belief graphs, reasoning zones and shock dynamics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded synthetic graph (and planted zones for g2).
    Generate(GenerateArgs),
    /// Solve for the confidence fixed point and write one row per node.
    Propagate(PropagateArgs),
    /// Extract balanced zones above a confidence threshold.
    Zones(ZonesArgs),
    /// Score and govern zones into an atlas report.
    Atlas(AtlasArgs),
    /// Apply a shock with contractivity backtracking.
    Shock(ShockArgs),
    /// Run an evaluation protocol over seeds.
    Eval(EvalArgs),
    /// Render an evaluation CSV as SVG.
    Plot(PlotArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    G1,
    G2,
    G3,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::G1 => Family::G1,
            FamilyArg::G2 => Family::G2,
            FamilyArg::G3 => Family::G3,
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    /// Generator config JSON; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    family: Option<FamilyArg>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Out-degree (g1, g3).
    #[arg(long)]
    d: Option<usize>,
    /// Share of contradiction edges (g1, g3).
    #[arg(long)]
    rho_minus: Option<f64>,
    /// Planted zone count (g2).
    #[arg(long)]
    k_zones: Option<usize>,
    #[arg(long)]
    block_size: Option<usize>,
    #[arg(long)]
    p_in: Option<f64>,
    #[arg(long)]
    p_out_pos: Option<f64>,
    #[arg(long)]
    p_out_neg: Option<f64>,
    /// Negative 3-cycles (g3).
    #[arg(long)]
    cycles: Option<usize>,
    #[arg(long)]
    out: PathBuf,
    /// Planted-zone file for g2; defaults to `<out>.truth.json`.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 0.6)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 2000)]
    max_iter: usize,
    /// Credibility weight of the prior; without it the prior is the capped
    /// support row sum.
    #[arg(long)]
    lambda: Option<f64>,
    /// Uniform baseline mixed into the credibility prior.
    #[arg(long, default_value_t = 0.5, requires = "lambda")]
    baseline: f64,
}

impl SolverArgs {
    fn params(&self) -> PropagationParams {
        let prior = match self.lambda {
            Some(lambda) => PriorMode::Credibility {
                lambda,
                baseline: Baseline::Uniform(self.baseline),
            },
            None => PriorMode::Structure,
        };
        PropagationParams {
            tol: self.tol,
            max_iter: self.max_iter,
            ..PropagationParams::new(self.alpha, self.eta)
        }
        .with_prior(prior)
    }
}

#[derive(Args)]
struct ThresholdArgs {
    /// Absolute confidence threshold.
    #[arg(long, conflicts_with = "quantile")]
    theta: Option<f64>,
    /// Threshold at this quantile of the confidences (default 0.75).
    #[arg(long)]
    quantile: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScoringArg {
    Raw,
    Normalized,
    Quality,
}

#[derive(Args)]
struct GovernanceArgs {
    /// Zones overlap-conflict when Jaccard reaches this value.
    #[arg(long, default_value_t = 0.3)]
    tau: f64,
    /// Atlas size cap.
    #[arg(long, default_value_t = 3, conflicts_with = "uncapped")]
    k: usize,
    #[arg(long)]
    uncapped: bool,
    #[arg(long, default_value_t = 0.0)]
    lambda_gov: f64,
    #[arg(long, default_value_t = 0.0)]
    rho_gov: f64,
    #[arg(long, value_enum, default_value_t = ScoringArg::Raw)]
    scoring: ScoringArg,
}

impl GovernanceArgs {
    fn params(&self) -> GovernanceParams {
        GovernanceParams {
            tau: self.tau,
            k: (!self.uncapped).then_some(self.k),
            lambda_gov: self.lambda_gov,
            rho_gov: self.rho_gov,
            scoring_mode: match self.scoring {
                ScoringArg::Raw => ScoringMode::Raw,
                ScoringArg::Normalized => ScoringMode::Normalized,
                ScoringArg::Quality => ScoringMode::Quality,
            },
            ..GovernanceParams::default()
        }
    }
}

#[derive(Args)]
struct PropagateArgs {
    #[arg(long)]
    graph: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ZonesArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Confidence CSV from `propagate`; solved in place when absent.
    #[arg(long)]
    phi: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    threshold: ThresholdArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AtlasArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    phi: Option<PathBuf>,
    /// Candidate zones CSV from `zones`; extracted in place when absent.
    #[arg(long)]
    zones: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    threshold: ThresholdArgs,
    #[command(flatten)]
    governance: GovernanceArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ShockArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Shock JSON: `{"targets": {"id": s}, "kappa": f, "rho_shock": f}`.
    #[arg(long)]
    spec: PathBuf,
    /// Pre-shock confidences used as the warm start.
    #[arg(long)]
    phi: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    out_graph: PathBuf,
    #[arg(long)]
    out_phi: PathBuf,
    /// JSON log with requested and applied strengths.
    #[arg(long)]
    log: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProtocolArg {
    P1,
    P2,
    P3,
    P4,
}

impl From<ProtocolArg> for Protocol {
    fn from(p: ProtocolArg) -> Self {
        match p {
            ProtocolArg::P1 => Protocol::P1,
            ProtocolArg::P2 => Protocol::P2,
            ProtocolArg::P3 => Protocol::P3,
            ProtocolArg::P4 => Protocol::P4,
        }
    }
}

#[derive(Args)]
struct EvalArgs {
    #[arg(value_enum)]
    protocol: ProtocolArg,
    /// Evaluation config JSON; defaults apply to missing sections.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    base_seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Shock masses for p4 (repeatable).
    #[arg(long = "m")]
    masses: Vec<f64>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(value_enum)]
    figure: plot::Figure,
    /// Summary CSV (p1, p4), selection CSV (p2-node, p2-zone) or histogram
    /// CSV (p3).
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => commands::generate(&a),
        Command::Propagate(a) => commands::propagate(&a),
        Command::Zones(a) => commands::zones(&a),
        Command::Atlas(a) => commands::atlas(&a),
        Command::Shock(a) => commands::shock(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::Plot(a) => commands::plot(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_rejection() { 3 } else { 2 })
        }
    }
}
