//! Importance-sampling drift optimisation: quantized objectives and a damped
//! Newton-Raphson solver shared by the finite-dimensional and path settings.

pub mod finite;
pub mod path;

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 50;
pub const DEFAULT_MAX_HALVINGS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    /// Stop once `‖∇Q‖ ≤ tol`.
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL, max_iter: DEFAULT_MAX_ITER, max_halvings: DEFAULT_MAX_HALVINGS }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonReport {
    pub theta_hat: Vec<f64>,
    pub iterations: usize,
    pub final_grad_norm: f64,
    pub objective_value: f64,
    /// `(θ_k, ‖∇Q(θ_k)‖)` for every iterate, starting point included.
    pub trajectory: Vec<(Vec<f64>, f64)>,
    pub converged: bool,
    /// Total step halvings taken by the backtracking line search.
    pub halvings: usize,
    /// Newton systems that needed the Levenberg shift.
    pub levenberg_shifts: usize,
}

impl fmt::Display for NewtonReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let theta: Vec<String> = self.theta_hat.iter().map(|x| format!("{x:.10e}")).collect();
        writeln!(f, "theta_hat = [{}]", theta.join(", "))?;
        writeln!(f, "iterations = {}", self.iterations)?;
        writeln!(f, "grad_norm = {:.3e}", self.final_grad_norm)?;
        writeln!(f, "objective = {:.12e}", self.objective_value)?;
        writeln!(f, "converged = {}", self.converged)?;
        write!(f, "halvings = {}, levenberg_shifts = {}", self.halvings, self.levenberg_shifts)
    }
}

/// Smooth convex objective in `R^d`.
pub trait Objective: Sync {
    fn dim(&self) -> usize;
    fn value(&self, theta: &[f64]) -> Result<f64>;
    /// `(Q, ∇Q, ∇²Q)` with the Hessian row-major.
    fn derivatives(&self, theta: &[f64]) -> Result<(f64, Vec<f64>, Vec<f64>)>;
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Solves `H x = g` by Cholesky; on failure retries once with `H + μI`,
/// `μ = 1e-8·trace(H)/d`.
fn newton_direction(h: &[f64], g: &[f64]) -> Result<(Vec<f64>, bool)> {
    let d = g.len();
    let hm = DMatrix::from_row_slice(d, d, h);
    let gv = DVector::from_column_slice(g);
    if let Some(ch) = hm.clone().cholesky() {
        return Ok((ch.solve(&gv).as_slice().to_vec(), false));
    }
    let mu = 1e-8 * hm.trace() / d as f64;
    let shifted = hm + DMatrix::identity(d, d) * mu;
    match shifted.cholesky() {
        Some(ch) if mu > 0.0 => Ok((ch.solve(&gv).as_slice().to_vec(), true)),
        _ => Err(Error::SingularHessian),
    }
}

/// Damped Newton-Raphson from `theta0`.
///
/// The full step is tried first and halved until `Q` does not increase
/// (beyond rounding). When the predicted decrease is already at rounding
/// level the step is taken as is.
pub fn newton_minimize<O: Objective + ?Sized>(
    obj: &O,
    theta0: &[f64],
    opts: &NewtonOptions,
) -> Result<NewtonReport> {
    if theta0.len() != obj.dim() {
        return Err(Error::Shape(format!("θ₀ has {} entries, expected {}", theta0.len(), obj.dim())));
    }
    if theta0.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("initial θ".into()));
    }
    let mut theta = theta0.to_vec();
    let (mut q, mut g, mut h) = obj.derivatives(&theta)?;
    let mut gn = norm(&g);
    let mut trajectory = vec![(theta.clone(), gn)];
    let (mut iterations, mut halvings, mut shifts) = (0, 0, 0);

    while gn > opts.tol && iterations < opts.max_iter {
        let (step, shifted) = newton_direction(&h, &g)?;
        shifts += shifted as usize;
        let predicted: f64 = 0.5 * g.iter().zip(&step).map(|(a, b)| a * b).sum::<f64>();
        let slack = 64.0 * f64::EPSILON * q.abs();
        let mut t = 1.0;
        let mut candidate: Vec<f64>;
        let mut accepted = false;
        for k in 0..=opts.max_halvings {
            candidate = theta.iter().zip(&step).map(|(x, s)| x - t * s).collect();
            if predicted <= slack {
                theta = candidate;
                accepted = true;
                break;
            }
            let qc = obj.value(&candidate)?;
            if qc.is_finite() && qc <= q + slack {
                theta = candidate;
                accepted = true;
                halvings += k;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
        (q, g, h) = obj.derivatives(&theta)?;
        gn = norm(&g);
        iterations += 1;
        trajectory.push((theta.clone(), gn));
    }
    Ok(NewtonReport {
        converged: gn <= opts.tol,
        theta_hat: theta,
        iterations,
        final_grad_norm: gn,
        objective_value: q,
        trajectory,
        halvings,
        levenberg_shifts: shifts,
    })
}

/// Terms summed in fixed-size chunks, merged in chunk order.
const CHUNK: usize = 256;

/// Shared evaluation of `Σ_i a_i(θ)·(1, u_i, u_i u_iᵀ + B_i)` style sums.
/// `term(i, θ, grad_out, hess_out) -> a_i` writes the per-term gradient and
/// Hessian factors already multiplied by `a_i`.
pub(crate) fn reduce_terms<F>(n: usize, d: usize, want_derivs: bool, term: F) -> (f64, Vec<f64>, Vec<f64>)
where
    F: Fn(usize, &mut [f64], &mut [f64]) -> f64 + Sync,
{
    let len = if want_derivs { 1 + d + d * d } else { 1 };
    let partials: Vec<Vec<f64>> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![0.0; len];
            let mut g = vec![0.0; if want_derivs { d } else { 0 }];
            let mut h = vec![0.0; if want_derivs { d * d } else { 0 }];
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                acc[0] += term(i, &mut g, &mut h);
                if want_derivs {
                    acc[1..1 + d].iter_mut().zip(&g).for_each(|(a, b)| *a += b);
                    acc[1 + d..].iter_mut().zip(&h).for_each(|(a, b)| *a += b);
                }
            }
            acc
        })
        .collect();
    let mut total = vec![0.0; len];
    for p in partials {
        total.iter_mut().zip(&p).for_each(|(a, b)| *a += b);
    }
    if want_derivs {
        let h = total.split_off(1 + d);
        let g = total.split_off(1);
        (total[0], g, h)
    } else {
        (total[0], Vec::new(), Vec::new())
    }
}

/// Brute-force minimiser of a 1-D function on `lo, lo+step, …, hi`.
pub fn scan_minimum(lo: f64, hi: f64, step: f64, f: impl Fn(f64) -> f64) -> f64 {
    let n = ((hi - lo) / step).round() as usize;
    let mut best = (lo, f(lo));
    for k in 1..=n {
        let x = lo + k as f64 * step;
        let v = f(x);
        if v < best.1 {
            best = (x, v);
        }
    }
    best.0
}
