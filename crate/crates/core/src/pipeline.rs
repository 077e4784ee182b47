//! End-to-end glue: quantize the noise of a [`Problem`], optimize the drift
//! on the quantized objective, then price with it.

use crate::basis::{make_basis, BasisKind, BasisSpec};
use crate::density::gaussian;
use crate::error::{Error, Result};
use crate::funcquant::{
    bs_exponential_paths, build_brownian_quantizer, build_ou_quantizer, optimal_decomposition,
    ou_exponential_paths, quantize_diffusion, uniform_time_grid, ProductQuantizer,
    QuantizedEnsemble, RkScheme, DEFAULT_RK_TOL,
};
use crate::isopt::finite::newton_optimize;
use crate::isopt::path::{build_phi_table, newton_optimize_path, QuantizedPhiTable};
use crate::isopt::{NewtonOptions, NewtonReport};
use crate::mc::{compare, Comparison, Theta};
use crate::models::{schwartz_mean, ModelSpec, Problem};
use crate::quant1d::{distortion_table, optimal_grid};
use crate::quantnd::{build_grid_nd, GridND};

/// Levels searched by [`decomposition_for`].
pub const MAX_LEVELS: usize = 10;

/// Grid of N(0, I_d). In dimension one the exact optimal quantizer is used;
/// otherwise randomized Lloyd on `samples` draws.
pub fn noise_grid(d: usize, n: usize, samples: usize, seed: u64, sweeps: usize) -> Result<GridND> {
    if d == 1 {
        let g = optimal_grid(n)?;
        return Ok(GridND {
            dim: 1,
            coords: g.points,
            weights: g.weights,
            distortion2_estimate: g.distortion2,
            build_seed: seed,
            resets: 0,
            sweep_distortions: Vec::new(),
        });
    }
    build_grid_nd(d, n, samples, seed, sweeps)
}

/// Newton search for the translation `θ̂` of a terminal-payoff problem.
pub fn optimize_finite(problem: &Problem, grid: &GridND, opts: &NewtonOptions) -> Result<NewtonReport> {
    if problem.payoff.is_path_dependent() {
        return Err(Error::InvalidArgument("path payoffs need a functional quantizer".into()));
    }
    let density = gaussian(problem.dim());
    let payoff = |z: &[f64]| problem.gaussian_payoff(z).unwrap_or(f64::NAN);
    newton_optimize(grid, payoff, &density, &vec![0.0; problem.dim()], opts)
}

/// Optimal product decomposition for a budget of `budget` paths.
pub fn decomposition_for(budget: usize) -> Result<Vec<usize>> {
    let table = distortion_table(budget.max(2))?;
    optimal_decomposition(budget, MAX_LEVELS, &table)
}

/// Functional quantizer matching the model: an OU quantizer for Schwartz,
/// a Brownian one otherwise.
pub fn path_quantizer(problem: &Problem, decomposition: &[usize]) -> Result<ProductQuantizer> {
    match &problem.model {
        ModelSpec::Schwartz { theta, sigma, .. } => {
            build_ou_quantizer(problem.horizon, theta[0], sigma[0], decomposition)
        }
        _ => build_brownian_quantizer(problem.horizon, decomposition),
    }
}

/// Price paths on the `M`-step grid for every quantizer path.
pub fn quantized_paths(problem: &Problem, q: &ProductQuantizer) -> Result<QuantizedEnsemble> {
    let grid = uniform_time_grid(problem.horizon, problem.steps);
    match &problem.model {
        ModelSpec::BlackScholes { rate, sigma, s0 } => {
            bs_exponential_paths(q, *rate, sigma[0], s0[0], &grid)
        }
        ModelSpec::Schwartz { theta, alpha, sigma, s0, .. } => {
            ou_exponential_paths(q, s0[0].ln(), schwartz_mean(theta[0], alpha[0], sigma[0]), &grid)
        }
        ModelSpec::LocalVol { x0, .. } => {
            quantize_diffusion(&problem.model, *x0, q, &grid, RkScheme::default(), DEFAULT_RK_TOL)
        }
    }
}

/// `Q̃` data for one basis.
pub fn phi_table(
    problem: &Problem,
    q: &ProductQuantizer,
    ensemble: &QuantizedEnsemble,
    basis: &BasisSpec,
) -> Result<QuantizedPhiTable> {
    build_phi_table(q, ensemble, basis, |path| problem.path_payoff(path).unwrap_or(f64::NAN))
}

/// Newton search for the coefficients of the drift `θ(t) = Σ c_j e_j(t)`.
pub fn optimize_path(table: &QuantizedPhiTable, opts: &NewtonOptions) -> Result<NewtonReport> {
    newton_optimize_path(table, &vec![0.0; table.m], opts)
}

/// Drift, Newton report and paired MC comparison of one configuration.
#[derive(Debug, Clone)]
pub struct QisRun {
    pub theta: Theta,
    pub report: NewtonReport,
    pub comparison: Comparison,
}

/// Finite pipeline: optimize on `grid`, then price crude and IS with
/// common draws.
pub fn run_finite(
    problem: &Problem,
    grid: &GridND,
    opts: &NewtonOptions,
    n: u64,
    seed: u64,
) -> Result<QisRun> {
    let report = optimize_finite(problem, grid, opts)?;
    let theta = Theta::Finite(report.theta_hat.clone());
    let comparison = compare(problem, &theta, n, seed)?;
    Ok(QisRun { theta, report, comparison })
}

/// Path pipeline for one basis, reusing a quantized ensemble.
#[allow(clippy::too_many_arguments)]
pub fn run_path(
    problem: &Problem,
    q: &ProductQuantizer,
    ensemble: &QuantizedEnsemble,
    kind: BasisKind,
    m: usize,
    opts: &NewtonOptions,
    n: u64,
    seed: u64,
) -> Result<QisRun> {
    let basis = make_basis(kind, m, problem.horizon)?;
    let table = phi_table(problem, q, ensemble, &basis)?;
    let report = optimize_path(&table, opts)?;
    let theta = Theta::Path { basis, coeffs: report.theta_hat.clone() };
    let comparison = compare(problem, &theta, n, seed)?;
    Ok(QisRun { theta, report, comparison })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::PayoffSpec;

    #[test]
    fn constant_payoff_gives_zero_drift() {
        let m = ModelSpec::BlackScholes { rate: 0.05, sigma: vec![0.3], s0: vec![100.0] };
        let p = Problem::new(m, PayoffSpec::Constant { value: 2.0 }, 1.0, 1).unwrap();
        let g = noise_grid(1, 50, 0, 0, 0).unwrap();
        let r = optimize_finite(&p, &g, &NewtonOptions::default()).unwrap();
        assert!(r.converged);
        assert!(r.theta_hat[0].abs() < 1e-8, "{:?}", r.theta_hat);
    }

    #[test]
    fn one_dimensional_grid_is_exact() {
        let g = noise_grid(1, 10, 0, 3, 0).unwrap();
        assert_eq!(g.coords, optimal_grid(10).unwrap().points);
        assert!((g.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn schwartz_uses_ou_quantizer() {
        let m = ModelSpec::Schwartz {
            rate: 0.04,
            theta: vec![0.3],
            alpha: vec![100f64.ln()],
            sigma: vec![0.5],
            s0: vec![100.0],
        };
        let p = Problem::new(m, PayoffSpec::Asian { strike: 115.0, dates: 10 }, 1.0, 10).unwrap();
        let q = path_quantizer(&p, &[5, 2]).unwrap();
        assert!(matches!(q.kind, crate::funcquant::QuantizerKind::OrnsteinUhlenbeck { .. }));
        let e = quantized_paths(&p, &q).unwrap();
        assert_eq!(e.len(), 10);
        assert!(e.paths.iter().all(|p| (p[0] - 100.0).abs() < 1e-9));
    }
}
