//! `Q̂_N(θ) = Σ_i w_i F²(x_i)·p(x_i)/p(x_i − θ)` over a grid of the noise
//! law, with its gradient and Hessian.

use super::{newton_minimize, reduce_terms, NewtonOptions, NewtonReport, Objective};
use crate::density::DensityModel;
use crate::error::{Error, Result};
use crate::quantnd::GridND;

/// Quantized objective with the payoff evaluated once per grid point.
pub struct FiniteObjective<'a> {
    dim: usize,
    points: &'a [f64],
    /// `log(w_i F²(x_i))` for active cells.
    log_mass: Vec<f64>,
    active: Vec<usize>,
    density: &'a dyn DensityModel,
}

impl<'a> FiniteObjective<'a> {
    pub fn new(
        grid: &'a GridND,
        payoff: impl Fn(&[f64]) -> f64,
        density: &'a dyn DensityModel,
    ) -> Result<Self> {
        if density.dim() != grid.dim {
            return Err(Error::Shape(format!(
                "density of dim {} for grid of dim {}",
                density.dim(),
                grid.dim
            )));
        }
        let mut log_mass = Vec::new();
        let mut active = Vec::new();
        for (i, (w, x)) in grid.weights.iter().zip(grid.points()).enumerate() {
            let f = payoff(x);
            if !f.is_finite() {
                return Err(Error::NonFinite(format!("payoff at grid point {i}")));
            }
            if f != 0.0 && *w > 0.0 {
                log_mass.push(w.ln() + 2.0 * f.abs().ln());
                active.push(i);
            }
        }
        if active.is_empty() {
            return Err(Error::DegenerateObjective);
        }
        Ok(Self { dim: grid.dim, points: &grid.coords, log_mass, active, density })
    }

    fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    fn sums(&self, theta: &[f64], want: bool) -> Result<(f64, Vec<f64>, Vec<f64>)> {
        if theta.len() != self.dim {
            return Err(Error::Shape(format!("θ has {} entries, expected {}", theta.len(), self.dim)));
        }
        let d = self.dim;
        let out = reduce_terms(self.active.len(), d, want, |k, g, h| {
            let x = self.point(self.active[k]);
            let a = (self.log_mass[k] + self.density.log_ratio(x, theta)).exp();
            if want {
                let y: Vec<f64> = x.iter().zip(theta).map(|(p, t)| p - t).collect();
                self.density.score(&y, g);
                self.density.curvature(&y, h);
                for i in 0..d {
                    for j in 0..d {
                        h[i * d + j] = a * (2.0 * g[i] * g[j] - h[i * d + j]);
                    }
                }
                g.iter_mut().for_each(|v| *v *= a);
            }
            a
        });
        if !out.0.is_finite() || out.1.iter().chain(&out.2).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("objective at θ = {theta:?}")));
        }
        Ok(out)
    }
}

impl Objective for FiniteObjective<'_> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, theta: &[f64]) -> Result<f64> {
        Ok(self.sums(theta, false)?.0)
    }

    fn derivatives(&self, theta: &[f64]) -> Result<(f64, Vec<f64>, Vec<f64>)> {
        self.sums(theta, true)
    }
}

pub fn q_hat(
    theta: &[f64],
    grid: &GridND,
    payoff: impl Fn(&[f64]) -> f64,
    density: &dyn DensityModel,
) -> Result<f64> {
    FiniteObjective::new(grid, payoff, density)?.value(theta)
}

/// `Σ_i w_i F²(x_i) r_i(θ)·s(x_i − θ)` with `s` the density score.
pub fn grad_q_hat(
    theta: &[f64],
    grid: &GridND,
    payoff: impl Fn(&[f64]) -> f64,
    density: &dyn DensityModel,
) -> Result<Vec<f64>> {
    Ok(FiniteObjective::new(grid, payoff, density)?.derivatives(theta)?.1)
}

/// Row-major `d × d` Hessian of `Q̂`.
pub fn hess_q_hat(
    theta: &[f64],
    grid: &GridND,
    payoff: impl Fn(&[f64]) -> f64,
    density: &dyn DensityModel,
) -> Result<Vec<f64>> {
    Ok(FiniteObjective::new(grid, payoff, density)?.derivatives(theta)?.2)
}

/// Damped Newton search for `θ̂_N = argmin Q̂_N`.
pub fn newton_optimize(
    grid: &GridND,
    payoff: impl Fn(&[f64]) -> f64,
    density: &dyn DensityModel,
    theta0: &[f64],
    opts: &NewtonOptions,
) -> Result<NewtonReport> {
    newton_minimize(&FiniteObjective::new(grid, payoff, density)?, theta0, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{gaussian, logistic, Logistic};
    use crate::isopt::scan_minimum;
    use crate::quant1d::optimal_grid;
    use crate::quantnd::build_grid_nd;
    use crate::rng::SampleStream;

    fn grid_from_1d(n: usize) -> GridND {
        let g = optimal_grid(n).unwrap();
        GridND {
            dim: 1,
            coords: g.points.clone(),
            weights: g.weights.clone(),
            distortion2_estimate: g.distortion2,
            build_seed: 0,
            resets: 0,
            sweep_distortions: vec![],
        }
    }

    fn call(x: &[f64]) -> f64 {
        (x[0].exp() - 1.0).max(0.0)
    }

    #[test]
    fn constant_payoff() {
        let g = build_grid_nd(2, 50, 100_000, 1, 10).unwrap();
        let dens = gaussian(2);
        assert!((q_hat(&[0.0, 0.0], &g, |_| 1.0, &dens).unwrap() - 1.0).abs() < 1e-12);
        let th = [0.4, -0.3];
        let mean: Vec<f64> = (0..2)
            .map(|k| g.weights.iter().zip(g.points()).map(|(w, x)| w * x[k]).sum())
            .collect();
        let jensen = (0.5 * (0.16 + 0.09) - th[0] * mean[0] - th[1] * mean[1]).exp();
        assert!(q_hat(&th, &g, |_| 1.0, &dens).unwrap() >= jensen);
        let grad = grad_q_hat(&[0.0, 0.0], &g, |_| 1.0, &dens).unwrap();
        assert!((grad[0] + mean[0]).abs() < 1e-12 && (grad[1] + mean[1]).abs() < 1e-12);
        let h = hess_q_hat(&[0.0, 0.0], &g, |_| 1.0, &dens).unwrap();
        let mut explicit = [0.0; 4];
        for (w, x) in g.weights.iter().zip(g.points()) {
            for i in 0..2 {
                for j in 0..2 {
                    explicit[i * 2 + j] += w * ((i == j) as u8 as f64 + x[i] * x[j]);
                }
            }
        }
        for k in 0..4 {
            assert!((h[k] - explicit[k]).abs() < 1e-12);
        }
        let r = newton_optimize(&g, |_| 1.0, &dens, &[0.0, 0.0], &NewtonOptions::default()).unwrap();
        assert!(r.converged && r.iterations <= 3);
        assert!(r.theta_hat.iter().map(|x| x * x).sum::<f64>().sqrt() <= 1e-6 + mean[0].abs() + mean[1].abs());
    }

    #[test]
    fn two_point_grid_hand_sums() {
        // x = ±a, w = ½, F(x) = x²: Q̂ = ½a⁴(e^{θ²/2−θa} + e^{θ²/2+θa})
        let g = grid_from_1d(2);
        let a = g.coords[1];
        let dens = gaussian(1);
        for th in [-0.7, 0.0, 0.25, 1.3] {
            let e1 = (0.5 * th * th - th * a).exp();
            let e2 = (0.5 * th * th + th * a).exp();
            let q = 0.5 * a.powi(4) * (e1 + e2);
            let dq = 0.5 * a.powi(4) * ((th - a) * e1 + (th + a) * e2);
            let d2q = 0.5 * a.powi(4) * ((1.0 + (th - a).powi(2)) * e1 + (1.0 + (th + a).powi(2)) * e2);
            let f = |x: &[f64]| x[0] * x[0];
            assert!((q_hat(&[th], &g, f, &dens).unwrap() - q).abs() < 1e-14 * q);
            assert!((grad_q_hat(&[th], &g, f, &dens).unwrap()[0] - dq).abs() < 1e-13 * q);
            assert!((hess_q_hat(&[th], &g, f, &dens).unwrap()[0] - d2q).abs() < 1e-13 * d2q);
        }
    }

    #[test]
    fn degenerate_payoff_is_rejected() {
        let g = grid_from_1d(10);
        assert!(matches!(q_hat(&[0.0], &g, |_| 0.0, &gaussian(1)), Err(Error::DegenerateObjective)));
        assert!(q_hat(&[0.0], &g, |_| 1.0, &gaussian(2)).is_err());
        assert!(q_hat(&[0.0, 1.0], &g, |_| 1.0, &gaussian(1)).is_err());
    }

    fn finite_difference_check(g: &GridND, f: impl Fn(&[f64]) -> f64 + Copy, dens: &dyn DensityModel, seed: u64) {
        let d = g.dim;
        let obj = FiniteObjective::new(g, f, dens).unwrap();
        let h = 1e-5;
        for i in 0..100 {
            let mut s = SampleStream::new(seed, i);
            let th: Vec<f64> = (0..d).map(|_| 0.5 * s.normal()).collect();
            let (q, grad, hess) = obj.derivatives(&th).unwrap();
            for k in 0..d {
                let mut tp = th.clone();
                let mut tm = th.clone();
                tp[k] += h;
                tm[k] -= h;
                let fd = (obj.value(&tp).unwrap() - obj.value(&tm).unwrap()) / (2.0 * h);
                assert!((fd - grad[k]).abs() <= 1e-6 * grad[k].abs().max(q), "grad {k}");
                let (gp, gm) = (obj.derivatives(&tp).unwrap().1, obj.derivatives(&tm).unwrap().1);
                for j in 0..d {
                    let fd = (gp[j] - gm[j]) / (2.0 * h);
                    let hv = hess[k * d + j];
                    assert!((fd - hv).abs() <= 1e-5 * hv.abs().max(q), "hess {k},{j}");
                }
            }
            // symmetric
            for a in 0..d {
                for b in 0..a {
                    assert!((hess[a * d + b] - hess[b * d + a]).abs() <= 1e-12 * q);
                }
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let g = build_grid_nd(3, 60, 50_000, 3, 10).unwrap();
        let basket = |x: &[f64]| (x.iter().map(|v| v.exp()).sum::<f64>() / 3.0 - 0.9).max(0.0);
        finite_difference_check(&g, basket, &gaussian(3), 1);
        let g1 = grid_from_1d(40);
        finite_difference_check(&g1, call, &logistic(), 2);
        let g2 = build_grid_nd(2, 40, 50_000, 3, 10).unwrap();
        finite_difference_check(&g2, |x| 1.0 + x[0] * x[1], &Logistic::new(2), 3);
    }

    #[test]
    fn log_space_matches_direct_ratio() {
        let g = build_grid_nd(2, 50, 50_000, 8, 5).unwrap();
        let dens = gaussian(2);
        let f = |x: &[f64]| 1.0 + x[0].abs();
        let mut s = SampleStream::new(4, 0);
        for _ in 0..50 {
            let th = [s.normal().clamp(-2.0, 2.0), s.normal().clamp(-2.0, 2.0)];
            let direct: f64 = g
                .weights
                .iter()
                .zip(g.points())
                .map(|(w, x)| {
                    let p = |y: [f64; 2]| (-0.5 * (y[0] * y[0] + y[1] * y[1])).exp();
                    w * f(x).powi(2) * p([x[0], x[1]]) / p([x[0] - th[0], x[1] - th[1]])
                })
                .sum();
            let q = q_hat(&th, &g, f, &dens).unwrap();
            assert!((q - direct).abs() < 1e-12 * direct);
        }
    }

    #[test]
    fn convex_along_random_midpoints() {
        let g = build_grid_nd(2, 60, 50_000, 2, 8).unwrap();
        let dens = gaussian(2);
        let f = |x: &[f64]| ((x[0].exp() + x[1].exp()) / 2.0 - 1.0).max(0.0);
        let obj = FiniteObjective::new(&g, f, &dens).unwrap();
        let mut s = SampleStream::new(6, 0);
        for _ in 0..100 {
            let a = [s.normal(), s.normal()];
            let b = [s.normal(), s.normal()];
            let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
            let avg = 0.5 * (obj.value(&a).unwrap() + obj.value(&b).unwrap());
            assert!(obj.value(&mid).unwrap() <= avg * (1.0 + 1e-12));
        }
    }

    #[test]
    fn newton_matches_a_scan_for_a_call() {
        let g = grid_from_1d(200);
        let dens = gaussian(1);
        let r = newton_optimize(&g, call, &dens, &[0.0], &NewtonOptions::default()).unwrap();
        assert!(r.converged && r.iterations <= 10, "{r}");
        let scan = scan_minimum(-1.0, 4.0, 1e-3, |t| q_hat(&[t], &g, call, &dens).unwrap());
        assert!((r.theta_hat[0] - scan).abs() < 2e-3);
    }

    #[test]
    fn optimum_stabilises_under_refinement() {
        let dens = gaussian(1);
        let thetas: Vec<f64> = [50, 100, 200, 400, 800]
            .iter()
            .map(|&n| {
                let g = grid_from_1d(n);
                newton_optimize(&g, call, &dens, &[0.0], &NewtonOptions::default()).unwrap().theta_hat[0]
            })
            .collect();
        let gaps: Vec<f64> = thetas.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        for w in gaps.windows(2) {
            assert!(w[1] < w[0], "{thetas:?}");
        }
    }
}
