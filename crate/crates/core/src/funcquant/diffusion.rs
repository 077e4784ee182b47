use rayon::prelude::*;

use super::{ProductQuantizer, QuantizerKind};
use crate::error::{Error, Result};

/// Local error target per accepted substep, relative to `max(1, |x|)`.
pub const DEFAULT_RK_TOL: f64 = 1e-8;

/// Smallest substep, as a fraction of the time-grid spacing, before a path
/// is declared failed.
const MIN_STEP_FRACTION: f64 = 1e-12;

/// Scalar diffusion `dX = b(X) dt + σ(X) dW`.
pub trait ScalarDiffusion: Sync {
    fn drift(&self, x: f64) -> f64;
    fn vol(&self, x: f64) -> f64;
    fn vol_prime(&self, x: f64) -> f64;
    /// States where `σ` is defined (e.g. positive prices).
    fn in_domain(&self, x: f64) -> bool {
        x.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RkScheme {
    /// Classical four-stage scheme.
    #[default]
    Rk4,
    /// Butcher's six-stage fifth-order scheme.
    Rk5,
}

impl RkScheme {
    fn order(self) -> i32 {
        match self {
            RkScheme::Rk4 => 4,
            RkScheme::Rk5 => 5,
        }
    }

    fn step(self, f: &impl Fn(f64, f64) -> f64, t: f64, x: f64, h: f64) -> f64 {
        match self {
            RkScheme::Rk4 => {
                let k1 = f(t, x);
                let k2 = f(t + 0.5 * h, x + 0.5 * h * k1);
                let k3 = f(t + 0.5 * h, x + 0.5 * h * k2);
                let k4 = f(t + h, x + h * k3);
                x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            }
            RkScheme::Rk5 => {
                let k1 = f(t, x);
                let k2 = f(t + 0.25 * h, x + h * 0.25 * k1);
                let k3 = f(t + 0.25 * h, x + h * (k1 + k2) / 8.0);
                let k4 = f(t + 0.5 * h, x + h * (-0.5 * k2 + k3));
                let k5 = f(t + 0.75 * h, x + h * (3.0 * k1 + 9.0 * k4) / 16.0);
                let k6 = f(
                    t + h,
                    x + h * (-3.0 * k1 + 2.0 * k2 + 12.0 * k3 - 12.0 * k4 + 8.0 * k5) / 7.0,
                );
                x + h / 90.0 * (7.0 * k1 + 32.0 * k3 + 12.0 * k4 + 32.0 * k5 + 7.0 * k6)
            }
        }
    }
}

/// Quantized paths sampled on a time grid.
#[derive(Debug, Clone)]
pub struct QuantizedEnsemble {
    pub time_grid: Vec<f64>,
    /// `paths[i][k]` is the state of path `i` at `time_grid[k]`.
    pub paths: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    /// Driving Brownian quantizer `χ_i` on the same grid.
    pub brownian_paths: Vec<Vec<f64>>,
    /// Paths whose solve left the model's domain or failed step control.
    /// Their states are NaN from the failure point on.
    pub failed: Vec<bool>,
}

impl QuantizedEnsemble {
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn failures(&self) -> usize {
        self.failed.iter().filter(|&&f| f).count()
    }
}

/// `t_k = kT/M`, `k = 0..=M`.
pub fn uniform_time_grid(horizon: f64, steps: usize) -> Vec<f64> {
    (0..=steps).map(|k| horizon * k as f64 / steps as f64).collect()
}

fn check_grid(q: &ProductQuantizer, time_grid: &[f64]) -> Result<()> {
    if time_grid.len() < 2 || time_grid[0] != 0.0 {
        return Err(Error::InvalidArgument("time grid must start at 0 with ≥ 2 nodes".into()));
    }
    if time_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("time grid must be increasing".into()));
    }
    if *time_grid.last().unwrap() > q.horizon * (1.0 + 1e-12) {
        return Err(Error::InvalidArgument("time grid exceeds the quantizer horizon".into()));
    }
    Ok(())
}

fn brownian_on_grid(q: &ProductQuantizer, time_grid: &[f64]) -> Vec<Vec<f64>> {
    (0..q.len())
        .map(|i| time_grid.iter().map(|&t| q.brownian_value(i, t)).collect())
        .collect()
}

/// Solves `x′ = (b − ½σσ′)(x) + σ(x)·χ_i′(t)` along every quantizer path.
///
/// Each grid interval is covered by adaptive substeps controlled by step
/// doubling, so that the local error estimate stays below
/// `tol·max(1, |x|)`. Accepted steps carry the Richardson correction.
pub fn quantize_diffusion<M: ScalarDiffusion>(
    model: &M,
    x0: f64,
    q: &ProductQuantizer,
    time_grid: &[f64],
    scheme: RkScheme,
    tol: f64,
) -> Result<QuantizedEnsemble> {
    check_grid(q, time_grid)?;
    if !model.in_domain(x0) {
        return Err(Error::InvalidArgument(format!("initial state {x0} outside the model domain")));
    }
    let solved: Vec<(Vec<f64>, bool)> = (0..q.len())
        .into_par_iter()
        .map(|i| solve_path(model, x0, q, i, time_grid, scheme, tol))
        .collect();
    let (paths, failed) = solved.into_iter().unzip();
    Ok(QuantizedEnsemble {
        time_grid: time_grid.to_vec(),
        paths,
        weights: q.weights(),
        brownian_paths: brownian_on_grid(q, time_grid),
        failed,
    })
}

fn solve_path<M: ScalarDiffusion>(
    model: &M,
    x0: f64,
    q: &ProductQuantizer,
    i: usize,
    time_grid: &[f64],
    scheme: RkScheme,
    tol: f64,
) -> (Vec<f64>, bool) {
    let rhs = |t: f64, x: f64| {
        let s = model.vol(x);
        model.drift(x) - 0.5 * s * model.vol_prime(x) + s * q.brownian_derivative(i, t)
    };
    let ok = |x: f64| x.is_finite() && model.in_domain(x);
    let scale = (2.0f64).powi(scheme.order()) - 1.0;

    let mut out = Vec::with_capacity(time_grid.len());
    out.push(x0);
    let mut x = x0;
    let mut h = time_grid[1] - time_grid[0];
    for w in time_grid.windows(2) {
        let (mut t, end) = (w[0], w[1]);
        let h_min = (end - t) * MIN_STEP_FRACTION;
        while t < end {
            let last = h >= end - t;
            let step = if last { end - t } else { h };
            let full = scheme.step(&rhs, t, x, step);
            let mid = scheme.step(&rhs, t, x, 0.5 * step);
            let fine = if ok(mid) { scheme.step(&rhs, t + 0.5 * step, mid, 0.5 * step) } else { f64::NAN };
            let err = (fine - full).abs() / scale;
            if ok(fine) && ok(full) && err <= tol * fine.abs().max(1.0) {
                // local extrapolation of the step-doubling pair
                x = fine + (fine - full) / scale;
                t = if last { end } else { t + step };
                if err < tol * fine.abs().max(1.0) / 64.0 {
                    h = 2.0 * step;
                }
            } else {
                h = 0.5 * step;
                if h < h_min {
                    out.resize(time_grid.len(), f64::NAN);
                    return (out, true);
                }
            }
        }
        out.push(x);
    }
    (out, false)
}

/// `S_i(t) = S₀·exp((r − σ²/2)t + σ·χ_i(t))`.
pub fn bs_exponential_paths(
    q: &ProductQuantizer,
    rate: f64,
    sigma: f64,
    s0: f64,
    time_grid: &[f64],
) -> Result<QuantizedEnsemble> {
    check_grid(q, time_grid)?;
    let brownian = brownian_on_grid(q, time_grid);
    let paths = brownian
        .iter()
        .map(|w| {
            time_grid
                .iter()
                .zip(w)
                .map(|(&t, &b)| s0 * ((rate - 0.5 * sigma * sigma) * t + sigma * b).exp())
                .collect()
        })
        .collect();
    Ok(QuantizedEnsemble {
        time_grid: time_grid.to_vec(),
        paths,
        weights: q.weights(),
        brownian_paths: brownian,
        failed: vec![false; q.len()],
    })
}

/// `S_i(t) = exp(log S₀·e^{−θt} + μ(1 − e^{−θt}) + y_i(t))` for an OU
/// quantizer `y`.
pub fn ou_exponential_paths(
    q: &ProductQuantizer,
    log_s0: f64,
    mu: f64,
    time_grid: &[f64],
) -> Result<QuantizedEnsemble> {
    let QuantizerKind::OrnsteinUhlenbeck { theta, .. } = q.kind else {
        return Err(Error::InvalidArgument("an Ornstein-Uhlenbeck quantizer is required".into()));
    };
    check_grid(q, time_grid)?;
    let paths = (0..q.len())
        .map(|i| {
            time_grid
                .iter()
                .map(|&t| {
                    let d = (-theta * t).exp();
                    (log_s0 * d + mu * (1.0 - d) + q.process_value(i, t)).exp()
                })
                .collect()
        })
        .collect();
    Ok(QuantizedEnsemble {
        time_grid: time_grid.to_vec(),
        paths,
        weights: q.weights(),
        brownian_paths: brownian_on_grid(q, time_grid),
        failed: vec![false; q.len()],
    })
}
