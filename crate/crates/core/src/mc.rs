//! Crude and importance-sampled Monte Carlo estimators.
//!
//! Sample `i` draws its normals from the stream `(seed, i)`, so every
//! estimator sees the same noise for the same seed and the result does not
//! depend on the thread count. Chunk moments are merged in chunk order.

use std::fmt;

use rayon::prelude::*;

use crate::basis::BasisSpec;
use crate::error::{Error, Result};
use crate::models::{schwartz_mean, ModelSpec, Problem};
use crate::rng::SampleStream;
use crate::stats::Moments;

const CHUNK: u64 = 4096;

/// Positivity floor for Euler paths of the local-volatility model.
pub const POSITIVITY_FLOOR: f64 = f64::EPSILON;

#[derive(Debug, Clone, PartialEq)]
pub enum Theta {
    None,
    Finite(Vec<f64>),
    Path { basis: BasisSpec, coeffs: Vec<f64> },
}

impl fmt::Display for Theta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(" ");
        match self {
            Theta::None => f.write_str("none"),
            Theta::Finite(v) => write!(f, "finite[{}]", join(v)),
            Theta::Path { basis, coeffs } => write!(f, "{}{}[{}]", basis.kind, basis.m, join(coeffs)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MCResult {
    pub estimate: f64,
    /// Population variance of the per-sample discounted (weighted) payoff.
    pub sample_variance: f64,
    pub std_error: f64,
    pub n: u64,
    pub seed: u64,
    pub theta: Theta,
    /// Euler steps clamped to the positivity floor.
    pub floor_hits: u64,
}

pub const CSV_HEADER: &str = "config,estimator,price,variance,stderr,n,seed,theta";

impl MCResult {
    pub fn csv_row(&self, config: &str, estimator: &str) -> String {
        format!(
            "{config},{estimator},{},{},{},{},{},{}",
            self.estimate, self.sample_variance, self.std_error, self.n, self.seed, self.theta
        )
    }
}

/// Crude and IS results on common draws.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub crude: MCResult,
    pub qis: MCResult,
    /// `var_crude / var_qis`
    pub variance_ratio: f64,
}

fn check_n(n: u64) -> Result<()> {
    if n < 2 {
        Err(Error::InvalidArgument(format!("need at least 2 samples, got {n}")))
    } else {
        Ok(())
    }
}

/// Runs `sample(stream) -> (value, floor_hits)` over `n` streams.
fn run<F>(n: u64, seed: u64, theta: Theta, sample: F) -> Result<MCResult>
where
    F: Fn(&mut SampleStream) -> Result<(f64, u64)> + Sync,
{
    check_n(n)?;
    let parts: Vec<Result<(Moments, u64)>> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut m = Moments::default();
            let mut hits = 0;
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                let (v, h) = sample(&mut SampleStream::new(seed, i))?;
                if !v.is_finite() {
                    return Err(Error::NonFinite(format!("sample {i}")));
                }
                m.push(v);
                hits += h;
            }
            Ok((m, hits))
        })
        .collect();
    let mut total = Moments::default();
    let mut floor_hits = 0;
    for p in parts {
        let (m, h) = p?;
        total.merge(&m);
        floor_hits += h;
    }
    let var = total.variance();
    Ok(MCResult {
        estimate: total.mean,
        sample_variance: var,
        std_error: (var / n as f64).sqrt(),
        n,
        seed,
        theta,
        floor_hits,
    })
}

/// Simulates one price path on the `M`-step grid. With `drift` the Brownian
/// increments are shifted by `θ_k Δt` and the Girsanov log-weight
/// `−Σθ_k ΔW_k − ½Σθ_k² Δt` is returned.
fn simulate_path(
    problem: &Problem,
    stream: &mut SampleStream,
    drift: Option<&[f64]>,
    path: &mut [f64],
) -> (f64, u64) {
    let m = problem.steps;
    let dt = problem.horizon / m as f64;
    let sq = dt.sqrt();
    let mut log_w = 0.0;
    let mut hits = 0;
    let mut shifted = |k: usize, z: f64| {
        let dw = sq * z;
        match drift {
            Some(th) => {
                log_w += -th[k] * dw - 0.5 * th[k] * th[k] * dt;
                dw + th[k] * dt
            }
            None => dw,
        }
    };
    match &problem.model {
        ModelSpec::BlackScholes { rate, sigma, s0 } => {
            let (s, mu) = (sigma[0], (rate - 0.5 * sigma[0] * sigma[0]) * dt);
            let mut x = s0[0].ln();
            path[0] = s0[0];
            for k in 0..m {
                x += mu + s * shifted(k, stream.normal());
                path[k + 1] = x.exp();
            }
        }
        ModelSpec::Schwartz { theta, alpha, sigma, s0, .. } => {
            let (th, s) = (theta[0], sigma[0]);
            let mean = schwartz_mean(th, alpha[0], s);
            let mut x = s0[0].ln();
            path[0] = s0[0];
            for k in 0..m {
                x += th * (mean - x) * dt + s * shifted(k, stream.normal());
                path[k + 1] = x.exp();
            }
        }
        model @ ModelSpec::LocalVol { rate, x0, .. } => {
            use crate::funcquant::ScalarDiffusion;
            let mut x = *x0;
            path[0] = x;
            for k in 0..m {
                let dw = shifted(k, stream.normal());
                x += rate * x * dt + model.vol(x) * dw;
                if !(x >= POSITIVITY_FLOOR) {
                    x = POSITIVITY_FLOOR;
                    hits += 1;
                }
                path[k + 1] = x;
            }
        }
    }
    (log_w, hits)
}

fn path_sampler<'a>(
    problem: &'a Problem,
    drift: Option<&'a [f64]>,
) -> impl Fn(&mut SampleStream) -> Result<(f64, u64)> + Sync + 'a {
    move |stream| {
        let mut path = vec![0.0; problem.steps + 1];
        let (log_w, hits) = simulate_path(problem, stream, drift, &mut path);
        let f = problem.path_payoff(&path)?;
        Ok(match drift {
            Some(_) => (f * log_w.exp(), hits),
            None => (f, hits),
        })
    }
}

/// Plain Monte Carlo. Terminal payoffs use the exact terminal law; path
/// payoffs are simulated on the `M`-step grid.
pub fn price_crude(problem: &Problem, n: u64, seed: u64) -> Result<MCResult> {
    if problem.payoff.is_path_dependent() {
        return run(n, seed, Theta::None, path_sampler(problem, None));
    }
    let d = problem.dim();
    run(n, seed, Theta::None, |s| {
        let mut z = vec![0.0; d];
        s.fill_normal(&mut z);
        Ok((problem.gaussian_payoff(&z)?, 0))
    })
}

/// Mean-translation IS: `F(Z + θ)·exp(−⟨θ, Z⟩ − ½|θ|²)`.
pub fn price_is_finite(problem: &Problem, theta: &[f64], n: u64, seed: u64) -> Result<MCResult> {
    let d = problem.dim();
    if problem.payoff.is_path_dependent() {
        return Err(Error::InvalidArgument("path payoffs need a path drift".into()));
    }
    if theta.len() != d {
        return Err(Error::Shape(format!("θ has {} entries, expected {d}", theta.len())));
    }
    let half = 0.5 * theta.iter().map(|t| t * t).sum::<f64>();
    run(n, seed, Theta::Finite(theta.to_vec()), |s| {
        let mut z = vec![0.0; d];
        s.fill_normal(&mut z);
        let dot: f64 = z.iter().zip(theta).map(|(a, b)| a * b).sum();
        let shifted: Vec<f64> = z.iter().zip(theta).map(|(a, b)| a + b).collect();
        Ok((problem.gaussian_payoff(&shifted)? * (-dot - half).exp(), 0))
    })
}

/// Girsanov IS with drift `θ(t) = Σ c_j e_j(t)` frozen at the left end of
/// each Euler step.
pub fn price_is_path(
    problem: &Problem,
    basis: &BasisSpec,
    coeffs: &[f64],
    n: u64,
    seed: u64,
) -> Result<MCResult> {
    if coeffs.len() != basis.m {
        return Err(Error::Shape(format!("{} coefficients for m = {}", coeffs.len(), basis.m)));
    }
    if problem.model.dim() != 1 {
        return Err(Error::InvalidArgument("path IS needs a single-asset model".into()));
    }
    let dt = problem.horizon / problem.steps as f64;
    let drift: Vec<f64> =
        (0..problem.steps).map(|k| basis.combination(coeffs, k as f64 * dt)).collect();
    let theta = Theta::Path { basis: *basis, coeffs: coeffs.to_vec() };
    if problem.payoff.is_path_dependent() {
        return run(n, seed, theta, path_sampler(problem, Some(&drift)));
    }
    // terminal payoff read off the simulated path
    run(n, seed, theta, |stream| {
        let mut path = vec![0.0; problem.steps + 1];
        let (log_w, hits) = simulate_path(problem, stream, Some(&drift), &mut path);
        Ok((problem.path_payoff(&path)? * log_w.exp(), hits))
    })
}

/// Crude and IS estimates on the same draws.
pub fn compare(problem: &Problem, theta: &Theta, n: u64, seed: u64) -> Result<Comparison> {
    let crude = price_crude(problem, n, seed)?;
    let qis = match theta {
        Theta::None => crude.clone(),
        Theta::Finite(t) => price_is_finite(problem, t, n, seed)?,
        Theta::Path { basis, coeffs } => price_is_path(problem, basis, coeffs, n, seed)?,
    };
    let variance_ratio = if crude.sample_variance == qis.sample_variance {
        1.0
    } else {
        crude.sample_variance / qis.sample_variance
    };
    Ok(Comparison { crude, qis, variance_ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{make_basis, BasisKind};
    use crate::models::PayoffSpec;

    fn bs_call() -> Problem {
        let m = ModelSpec::BlackScholes { rate: 0.05, sigma: vec![0.3], s0: vec![100.0] };
        Problem::new(m, PayoffSpec::Call { strike: 100.0 }, 1.0, 1).unwrap()
    }

    fn asian() -> Problem {
        let m = ModelSpec::BlackScholes { rate: 0.04, sigma: vec![0.5], s0: vec![100.0] };
        Problem::new(m, PayoffSpec::Asian { strike: 115.0, dates: 20 }, 1.0, 20).unwrap()
    }

    #[test]
    fn constant_payoff_has_zero_variance() {
        let m = ModelSpec::BlackScholes { rate: 0.05, sigma: vec![0.3], s0: vec![100.0] };
        let p = Problem::new(m, PayoffSpec::Constant { value: 3.0 }, 2.0, 1).unwrap();
        let r = price_crude(&p, 1000, 1).unwrap();
        assert!((r.estimate - 3.0 * (-0.1f64).exp()).abs() < 1e-12);
        assert!(r.sample_variance < 1e-24);
        assert!(price_crude(&p, 1, 1).is_err());
    }

    #[test]
    fn zero_theta_is_bit_identical() {
        let p = bs_call();
        let crude = price_crude(&p, 20_000, 7).unwrap();
        let is = price_is_finite(&p, &[0.0], 20_000, 7).unwrap();
        assert_eq!(crude.estimate.to_bits(), is.estimate.to_bits());
        assert_eq!(crude.sample_variance.to_bits(), is.sample_variance.to_bits());
        let a = asian();
        let b = make_basis(BasisKind::ShiftedLegendre, 3, 1.0).unwrap();
        let crude = price_crude(&a, 20_000, 7).unwrap();
        let is = price_is_path(&a, &b, &[0.0; 3], 20_000, 7).unwrap();
        assert_eq!(crude.estimate.to_bits(), is.estimate.to_bits());
        assert_eq!(crude.sample_variance.to_bits(), is.sample_variance.to_bits());
        let c = compare(&a, &Theta::Path { basis: b, coeffs: vec![0.0; 3] }, 5000, 1).unwrap();
        assert_eq!(c.variance_ratio, 1.0);
    }

    #[test]
    fn std_error_definition() {
        let r = price_crude(&bs_call(), 10_000, 3).unwrap();
        assert_eq!(r.std_error, (r.sample_variance / 10_000.0).sqrt());
        assert!(r.csv_row("x", "crude").starts_with("x,crude,"));
        assert_eq!(CSV_HEADER.split(',').count(), r.csv_row("x", "crude").split(',').count());
    }

    #[test]
    fn shape_errors() {
        let p = bs_call();
        assert!(price_is_finite(&p, &[0.0, 1.0], 100, 1).is_err());
        assert!(price_is_finite(&asian(), &[0.0], 100, 1).is_err());
        let b = make_basis(BasisKind::Constant, 1, 1.0).unwrap();
        assert!(price_is_path(&p, &b, &[0.0, 0.0], 100, 1).is_err());
    }

    #[test]
    fn local_vol_floor_is_counted() {
        // absurd volatility forces Euler below zero
        let m = ModelSpec::LocalVol { rate: 0.0, sigma: 50.0, beta: 0.5, x0: 1.0 };
        let p = Problem::new(m, PayoffSpec::Asian { strike: 0.5, dates: 10 }, 1.0, 10).unwrap();
        let r = price_crude(&p, 2000, 1).unwrap();
        assert!(r.floor_hits > 0);
        assert!(r.estimate.is_finite());
    }
}
