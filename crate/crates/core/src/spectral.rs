//! Spectral norm estimation by power iteration on `MᵀM`.

use crate::matrix::{SignedMatrices, SparseRows};
use crate::rng::Rng;

/// Seed of the dedicated power-iteration stream. Fixed so `r` estimates do not
/// depend on any generator seed.
pub const POWER_ITERATION_SEED: u64 = 0x0005_EED5_9EC7_4A1F;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerIteration {
    pub starts: usize,
    pub steps: usize,
    /// Relative change in the `σ²` estimate below which a start stops early.
    pub tol: f64,
    pub seed: u64,
}

impl Default for PowerIteration {
    fn default() -> Self {
        Self {
            starts: 3,
            steps: 200,
            tol: 1e-6,
            seed: POWER_ITERATION_SEED,
        }
    }
}

impl PowerIteration {
    /// Largest singular value of the `n x n` operator given by `apply`
    /// (`out = M x`) and `apply_t` (`out = Mᵀ x`). Returns the maximum over
    /// all random starts.
    pub fn estimate<A, B>(&self, n: usize, mut apply: A, mut apply_t: B) -> f64
    where
        A: FnMut(&[f64], &mut [f64]),
        B: FnMut(&[f64], &mut [f64]),
    {
        if n == 0 {
            return 0.0;
        }
        let root = Rng::new(self.seed);
        let mut best = 0.0f64;
        let mut mv = vec![0.0; n];
        let mut next = vec![0.0; n];
        for start in 0..self.starts.max(1) {
            let mut rng = root.fork(start as u64);
            let mut v: Vec<f64> = (0..n).map(|_| 2.0 * rng.next_f64() - 1.0).collect();
            if !normalize(&mut v) {
                continue;
            }
            let mut sigma2 = 0.0;
            for _ in 0..self.steps.max(1) {
                apply(&v, &mut mv);
                let s2 = dot(&mv, &mv);
                apply_t(&mv, &mut next);
                let converged = s2 > 0.0 && (s2 - sigma2).abs() <= self.tol * s2;
                sigma2 = sigma2.max(s2);
                if s2 == 0.0 || !normalize(&mut next) {
                    break;
                }
                std::mem::swap(&mut v, &mut next);
                if converged {
                    break;
                }
            }
            best = best.max(sigma2);
        }
        best.sqrt()
    }

    pub fn norm(&self, m: &SparseRows) -> f64 {
        self.estimate(
            m.dim(),
            |x, o| m.mul_vec(x, o),
            |x, o| m.mul_transpose_vec(x, o),
        )
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> bool {
    let norm = dot(v, v).sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    true
}

/// `r = α ‖Â⁺ − η Â⁻‖₂` with the default power-iteration settings.
pub fn contraction_factor(m: &SignedMatrices, alpha: f64, eta: f64) -> f64 {
    contraction_factor_with(m, alpha, eta, &PowerIteration::default())
}

pub fn contraction_factor_with(
    m: &SignedMatrices,
    alpha: f64,
    eta: f64,
    settings: &PowerIteration,
) -> f64 {
    if m.dim() == 0 {
        return 0.0;
    }
    alpha * settings.norm(&m.operator(eta))
}
