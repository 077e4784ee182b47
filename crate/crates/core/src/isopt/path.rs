//! `Q̃_N(c) = Σ_i w_i F²(X̃_i)·exp(−⟨c, s_i⟩ + ½‖c‖²)` over a quantized path
//! ensemble, where `s_i[j] = ∫₀ᵀ e_j(s) χ_i′(s) ds`, with its gradient,
//! Hessian and Newton search.

use std::fmt::Write as _;

use super::{newton_minimize, reduce_terms, NewtonOptions, NewtonReport, Objective};
use crate::basis::{project_quantizer_derivatives, BasisSpec};
use crate::error::{Error, Result};
use crate::funcquant::{ProductQuantizer, QuantizedEnsemble};

#[derive(Debug, Clone)]
pub struct QuantizedPhiTable {
    /// `s_i` per retained path.
    pub integrals: Vec<Vec<f64>>,
    pub payoffs: Vec<f64>,
    /// Renormalised over the retained paths.
    pub weights: Vec<f64>,
    /// Paths dropped because their diffusion solve failed.
    pub excluded: usize,
    pub m: usize,
}

/// Evaluates the payoff once per path and the stochastic integrals against
/// the basis. The quantizer must be the one the ensemble was built from.
pub fn build_phi_table(
    quantizer: &ProductQuantizer,
    ensemble: &QuantizedEnsemble,
    basis: &BasisSpec,
    payoff: impl Fn(&[f64]) -> f64,
) -> Result<QuantizedPhiTable> {
    if ensemble.len() != quantizer.len() || ensemble.weights != quantizer.weights() {
        return Err(Error::Shape("ensemble does not come from this quantizer".into()));
    }
    let all = project_quantizer_derivatives(basis, quantizer);
    let mut table = QuantizedPhiTable {
        integrals: Vec::with_capacity(all.len()),
        payoffs: Vec::with_capacity(all.len()),
        weights: Vec::with_capacity(all.len()),
        excluded: 0,
        m: basis.m,
    };
    for (i, s) in all.into_iter().enumerate() {
        if ensemble.failed[i] {
            table.excluded += 1;
            continue;
        }
        let f = payoff(&ensemble.paths[i]);
        if !f.is_finite() {
            return Err(Error::NonFinite(format!("payoff on path {i}")));
        }
        table.integrals.push(s);
        table.payoffs.push(f);
        table.weights.push(ensemble.weights[i]);
    }
    let total: f64 = table.weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateObjective);
    }
    table.weights.iter_mut().for_each(|w| *w /= total);
    Ok(table)
}

impl QuantizedPhiTable {
    fn objective(&self) -> Result<PathObjective<'_>> {
        let mut log_mass = Vec::new();
        let mut active = Vec::new();
        for (i, (w, f)) in self.weights.iter().zip(&self.payoffs).enumerate() {
            if *f != 0.0 && *w > 0.0 {
                log_mass.push(w.ln() + 2.0 * f.abs().ln());
                active.push(i);
            }
        }
        if active.is_empty() {
            return Err(Error::DegenerateObjective);
        }
        Ok(PathObjective { table: self, log_mass, active })
    }
}

struct PathObjective<'a> {
    table: &'a QuantizedPhiTable,
    log_mass: Vec<f64>,
    active: Vec<usize>,
}

impl PathObjective<'_> {
    fn sums(&self, c: &[f64], want: bool) -> Result<(f64, Vec<f64>, Vec<f64>)> {
        let m = self.table.m;
        if c.len() != m {
            return Err(Error::Shape(format!("c has {} entries, expected {m}", c.len())));
        }
        let half_norm = 0.5 * c.iter().map(|x| x * x).sum::<f64>();
        let out = reduce_terms(self.active.len(), m, want, |k, g, h| {
            let s = &self.table.integrals[self.active[k]];
            let dot: f64 = c.iter().zip(s).map(|(a, b)| a * b).sum();
            let a = (self.log_mass[k] - dot + half_norm).exp();
            if want {
                for j in 0..m {
                    g[j] = c[j] - s[j];
                }
                for i in 0..m {
                    for j in 0..m {
                        h[i * m + j] = a * (g[i] * g[j] + if i == j { 1.0 } else { 0.0 });
                    }
                }
                g.iter_mut().for_each(|v| *v *= a);
            }
            a
        });
        if !out.0.is_finite() || out.1.iter().chain(&out.2).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("objective at c = {c:?}")));
        }
        Ok(out)
    }
}

impl Objective for PathObjective<'_> {
    fn dim(&self) -> usize {
        self.table.m
    }

    fn value(&self, c: &[f64]) -> Result<f64> {
        Ok(self.sums(c, false)?.0)
    }

    fn derivatives(&self, c: &[f64]) -> Result<(f64, Vec<f64>, Vec<f64>)> {
        self.sums(c, true)
    }
}

pub fn q_tilde(c: &[f64], table: &QuantizedPhiTable) -> Result<f64> {
    table.objective()?.value(c)
}

/// `(J, H)` with `H` row-major `m × m`.
pub fn grad_hess_q_tilde(c: &[f64], table: &QuantizedPhiTable) -> Result<(Vec<f64>, Vec<f64>)> {
    let (_, j, h) = table.objective()?.derivatives(c)?;
    Ok((j, h))
}

pub fn newton_optimize_path(
    table: &QuantizedPhiTable,
    c0: &[f64],
    opts: &NewtonOptions,
) -> Result<NewtonReport> {
    newton_minimize(&table.objective()?, c0, opts)
}

/// CSV `t,theta(t)` of `θ = Σ c_j e_j` on a time grid, preceded by a
/// `# basis: …` comment with the normalisation.
pub fn theta_csv(basis: &BasisSpec, coeffs: &[f64], time_grid: &[f64]) -> String {
    let mut s = format!("# basis: {} m={} ({})\nt,theta(t)\n", basis.kind, basis.m, basis.normalization());
    for &t in time_grid {
        writeln!(s, "{t},{}", basis.combination(coeffs, t)).unwrap();
    }
    s
}
