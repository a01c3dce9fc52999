//! Damped, clipped signed confidence propagation.
//!
//! `T(x) = clip01((1 − α) b + α (Â⁺ − η Â⁻) x)`, with authority nodes
//! overwritten by their fixed value after every step. Iteration stops at the
//! first step whose sup-norm change is at most `tol`, or after `max_iter`
//! steps; hitting the cap is reported through `converged = false`.

use crate::error::{Error, Result};
use crate::graph::{BeliefGraph, NodeId};
use crate::matrix::{build_signed_matrices, SignedMatrices, SparseRows};
use crate::spectral::contraction_factor;

#[derive(Debug, Clone, PartialEq)]
pub enum Baseline {
    Uniform(f64),
    Vector(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum PriorMode {
    /// `b = λ Ψ/‖Ψ‖∞ + (1 − λ) b0`
    Credibility { lambda: f64, baseline: Baseline },
    /// `b_i = Σ_j Â⁺_ij`
    Structure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagationParams {
    pub alpha: f64,
    pub eta: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub prior: PriorMode,
}

impl Default for PropagationParams {
    fn default() -> Self {
        Self {
            alpha: 0.6,
            eta: 1.0,
            tol: 1e-6,
            max_iter: 2000,
            prior: PriorMode::Structure,
        }
    }
}

impl PropagationParams {
    pub fn new(alpha: f64, eta: f64) -> Self {
        Self {
            alpha,
            eta,
            ..Self::default()
        }
    }

    pub fn with_prior(mut self, prior: PriorMode) -> Self {
        self.prior = prior;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Validation(format!(
                "alpha {} not in (0, 1)",
                self.alpha
            )));
        }
        if !(self.eta >= 0.0) || !self.eta.is_finite() {
            return Err(Error::Validation(format!("eta {} must be >= 0", self.eta)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Validation(format!(
                "tolerance {} must be > 0",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::Validation("max_iter must be >= 1".into()));
        }
        if let PriorMode::Credibility { lambda, baseline } = &self.prior {
            if !(0.0..=1.0).contains(lambda) {
                return Err(Error::Validation(format!("lambda {lambda} not in [0, 1]")));
            }
            let ok = match baseline {
                Baseline::Uniform(v) => (0.0..=1.0).contains(v),
                Baseline::Vector(vs) => vs.iter().all(|v| (0.0..=1.0).contains(v)),
            };
            if !ok {
                return Err(Error::Validation(
                    "baseline entries must lie in [0, 1]".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceState {
    pub phi: Vec<f64>,
    pub iterations: usize,
    pub contraction_factor: f64,
    pub converged: bool,
    /// Sup-norm change of the final step.
    pub last_delta: f64,
}

pub fn build_prior(graph: &BeliefGraph, m: &SignedMatrices, mode: &PriorMode) -> Result<Vec<f64>> {
    let n = graph.node_count();
    match mode {
        PriorMode::Structure => Ok((0..n).map(|i| m.supp_norm.row_sum(i).min(1.0)).collect()),
        PriorMode::Credibility { lambda, baseline } => {
            let psi = graph.psi();
            let max = psi.iter().fold(0.0f64, |a, &b| a.max(b));
            if n > 0 && max <= 0.0 && *lambda > 0.0 {
                return Err(Error::DegeneratePrior(
                    "all credibilities are zero, cannot normalize by ‖Ψ‖∞".into(),
                ));
            }
            let base = |i: usize| -> Result<f64> {
                match baseline {
                    Baseline::Uniform(v) => Ok(*v),
                    Baseline::Vector(vs) => vs.get(i).copied().ok_or_else(|| {
                        Error::Validation(format!(
                            "baseline has {} entries, graph has {n}",
                            vs.len()
                        ))
                    }),
                }
            };
            (0..n)
                .map(|i| {
                    let cred = if *lambda > 0.0 { psi[i] / max } else { 0.0 };
                    Ok((lambda * cred + (1.0 - lambda) * base(i)?).clamp(0.0, 1.0))
                })
                .collect()
        }
    }
}

/// The clamped update map for fixed `(b, M, α)`.
#[derive(Debug, Clone)]
pub struct Operator {
    m: SparseRows,
    drive: Vec<f64>,
    alpha: f64,
    clamps: Vec<(NodeId, f64)>,
}

impl Operator {
    pub fn new(
        b: &[f64],
        m: &SignedMatrices,
        alpha: f64,
        eta: f64,
        clamps: &[(NodeId, f64)],
    ) -> Self {
        assert_eq!(b.len(), m.dim(), "prior length must match the graph");
        Self {
            m: m.operator(eta),
            drive: b.iter().map(|v| (1.0 - alpha) * v).collect(),
            alpha,
            clamps: clamps.to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.drive.len()
    }

    /// `out = T_fix(x)`; returns `‖out − x‖∞`.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) -> f64 {
        self.m.mul_vec(x, out);
        for (o, d) in out.iter_mut().zip(&self.drive) {
            *o = (d + self.alpha * *o).clamp(0.0, 1.0);
        }
        self.clamp(out);
        out.iter()
            .zip(x)
            .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()))
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for &(i, a) in &self.clamps {
            x[i] = a;
        }
    }

    /// Picard iteration from `x0`.
    pub fn solve(&self, x0: &[f64], tol: f64, max_iter: usize) -> (Vec<f64>, usize, bool, f64) {
        let mut x: Vec<f64> = x0.iter().map(|v| v.clamp(0.0, 1.0)).collect();
        self.clamp(&mut x);
        let mut next = vec![0.0; x.len()];
        let mut delta = 0.0;
        for t in 1..=max_iter {
            delta = self.apply(&x, &mut next);
            std::mem::swap(&mut x, &mut next);
            if delta <= tol {
                return (x, t, true, delta);
            }
        }
        (x, max_iter, false, delta)
    }
}

/// Fresh solve from `x⁰ = b`.
pub fn propagate(
    b: &[f64],
    m: &SignedMatrices,
    params: &PropagationParams,
    authority: &[(NodeId, f64)],
) -> ConfidenceState {
    propagate_from(b, b, m, params, authority)
}

/// Solve from an explicit starting point (warm start after edits).
pub fn propagate_from(
    x0: &[f64],
    b: &[f64],
    m: &SignedMatrices,
    params: &PropagationParams,
    authority: &[(NodeId, f64)],
) -> ConfidenceState {
    let r = contraction_factor(m, params.alpha, params.eta);
    propagate_with_factor(x0, b, m, params, authority, r)
}

/// Like [`propagate_from`] with an already-estimated contraction factor.
pub fn propagate_with_factor(
    x0: &[f64],
    b: &[f64],
    m: &SignedMatrices,
    params: &PropagationParams,
    authority: &[(NodeId, f64)],
    r: f64,
) -> ConfidenceState {
    assert_eq!(
        x0.len(),
        b.len(),
        "start vector length must match the prior"
    );
    if b.is_empty() {
        return ConfidenceState {
            phi: Vec::new(),
            iterations: 0,
            contraction_factor: r,
            converged: true,
            last_delta: 0.0,
        };
    }
    let op = Operator::new(b, m, params.alpha, params.eta, authority);
    let (phi, iterations, converged, last_delta) = op.solve(x0, params.tol, params.max_iter);
    ConfidenceState {
        phi,
        iterations,
        contraction_factor: r,
        converged,
        last_delta,
    }
}

/// Prior, matrices and fixed point for a graph, using its authority nodes.
pub fn propagate_graph(
    graph: &BeliefGraph,
    params: &PropagationParams,
) -> Result<(SignedMatrices, Vec<f64>, ConfidenceState)> {
    params.validate()?;
    let m = build_signed_matrices(graph);
    let b = build_prior(graph, &m, &params.prior)?;
    let state = propagate(&b, &m, params, &graph.authorities());
    Ok((m, b, state))
}
