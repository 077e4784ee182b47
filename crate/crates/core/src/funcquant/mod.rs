//! Functional quantization of Brownian motion, Ornstein-Uhlenbeck processes
//! and scalar Brownian diffusions on `[0, T]`.

mod diffusion;
mod product;

pub use diffusion::{
    bs_exponential_paths, ou_exponential_paths, quantize_diffusion, uniform_time_grid,
    QuantizedEnsemble, RkScheme, ScalarDiffusion, DEFAULT_RK_TOL,
};
pub use product::{
    build_brownian_quantizer, build_ou_quantizer, ProductQuantizer, QuantizedPath, QuantizerKind,
};

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// One term `(λ_n, e_n)` of the Karhunen-Loève expansion of Brownian motion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KlTerm {
    pub horizon: f64,
    pub n: usize,
    pub lambda: f64,
    omega: f64,
}

impl KlTerm {
    /// `e_n(t) = √(2/T)·sin(π(n−½)t/T)`
    pub fn eval(&self, t: f64) -> f64 {
        (2.0 / self.horizon).sqrt() * (self.omega * t).sin()
    }

    pub fn derivative(&self, t: f64) -> f64 {
        (2.0 / self.horizon).sqrt() * self.omega * (self.omega * t).cos()
    }

    /// `π(n−½)/T`
    pub fn frequency(&self) -> f64 {
        self.omega
    }
}

/// Eigenpair of the Brownian covariance operator on `[0, T]`, `n ≥ 1`.
pub fn kl_eigensystem(horizon: f64, n: usize) -> Result<KlTerm> {
    if n == 0 || !(horizon > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need n ≥ 1 and T > 0, got n={n}, T={horizon}"
        )));
    }
    let omega = PI * (n as f64 - 0.5) / horizon;
    Ok(KlTerm { horizon, n, lambda: 1.0 / (omega * omega), omega })
}

pub fn kl_eigenvalue(horizon: f64, n: usize) -> f64 {
    let w = PI * (n as f64 - 0.5) / horizon;
    1.0 / (w * w)
}

/// `Σ_{n > levels} λ_n`, using `Σ_n λ_n = T²/2`.
pub fn kl_tail(horizon: f64, levels: usize) -> f64 {
    let head: f64 = (1..=levels).map(|n| kl_eigenvalue(horizon, n)).sum();
    (0.5 * horizon * horizon - head).max(0.0)
}

/// Squared quadratic distortion of the product quantizer with sizes
/// `decomposition`, given `d_table[k] = d_{k+1}`.
pub fn decomposition_distortion(horizon: f64, decomposition: &[usize], d_table: &[f64]) -> f64 {
    let quantized: f64 = decomposition
        .iter()
        .enumerate()
        .map(|(l, &nl)| kl_eigenvalue(horizon, l + 1) * d_table[nl - 1])
        .sum();
    quantized + kl_tail(horizon, decomposition.len())
}

/// Sizes `(N_1 ≥ … ≥ N_L)`, `Π N_ℓ ≤ budget`, `L ≤ l_max`, minimising
/// `Σ λ_ℓ d_{N_ℓ} + Σ_{ℓ>L} λ_ℓ`. The search is exhaustive over
/// non-increasing sequences. Ties go to the lexicographically largest.
/// Trailing 1s are dropped; a budget of 1 gives `[1]`.
pub fn optimal_decomposition(budget: usize, l_max: usize, d_table: &[f64]) -> Result<Vec<usize>> {
    if budget < 1 {
        return Err(Error::InvalidArgument("budget must be at least 1".into()));
    }
    if l_max < 1 {
        return Err(Error::InvalidArgument("l_max must be at least 1".into()));
    }
    if d_table.len() < budget.min(2) {
        return Err(Error::InvalidArgument("distortion table too short".into()));
    }
    // The objective is T² times a T-free quantity, so work with T = 1.
    // Gains λ_ℓ(1 − d_{N_ℓ}) are maximised instead of distortion minimised.
    let lambdas: Vec<f64> = (1..=l_max).map(|n| kl_eigenvalue(1.0, n)).collect();
    let mut best = (0.0, vec![1usize]);
    let mut current = Vec::new();
    search(budget, usize::MAX, 0.0, &lambdas, d_table, &mut current, &mut best);
    Ok(best.1)
}

fn search(
    remaining: usize,
    cap: usize,
    gain: f64,
    lambdas: &[f64],
    d_table: &[f64],
    current: &mut Vec<usize>,
    best: &mut (f64, Vec<usize>),
) {
    if !current.is_empty() {
        let tol = 1e-14 * gain.abs().max(best.0.abs());
        let better = gain > best.0 + tol
            || ((gain - best.0).abs() <= tol && current.as_slice() > best.1.as_slice());
        if better {
            *best = (gain, current.clone());
        }
    }
    let level = current.len();
    if level == lambdas.len() {
        return;
    }
    let top = remaining.min(cap).min(d_table.len());
    for n in (2..=top).rev() {
        current.push(n);
        let g = gain + lambdas[level] * (1.0 - d_table[n - 1]);
        search(remaining / n, n, g, lambdas, d_table, current, best);
        current.pop();
    }
}
