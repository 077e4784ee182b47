use std::fmt::Write as _;

use super::{kl_eigensystem, kl_tail, KlTerm};
use crate::error::{Error, Result};
use crate::quant1d::{optimal_grid, parse_floats, Grid1D};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuantizerKind {
    Brownian,
    /// Centred OU process `dY = −θY dt + σ dW`, `Y_0 = 0`.
    OrnsteinUhlenbeck { theta: f64, sigma: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedPath {
    pub multi_index: Vec<usize>,
    pub weight: f64,
    /// Brownian K-L coordinates `√λ_n·x_{i_n}`.
    pub coeffs: Vec<f64>,
}

/// Product quantizer `χ_i = Σ_n √λ_n x_{i_n} e_n` of Brownian motion, with
/// the paired OU quantizer when `kind` asks for one.
#[derive(Debug, Clone)]
pub struct ProductQuantizer {
    pub horizon: f64,
    pub decomposition: Vec<usize>,
    pub levels: Vec<Grid1D>,
    pub eigenvalues: Vec<f64>,
    /// `Σ_{n > L} λ_n`
    pub tail: f64,
    pub kind: QuantizerKind,
    /// Row-major over the multi-index (last level varies fastest).
    pub paths: Vec<QuantizedPath>,
    terms: Vec<KlTerm>,
    /// OU factors `σ·c̃_n/√λ_n`, so `y_i = Σ_n ou_scale_n·coeff_n·φ_n`.
    ou_scale: Vec<f64>,
}

fn validate(horizon: f64, decomposition: &[usize]) -> Result<()> {
    if !(horizon > 0.0) {
        return Err(Error::InvalidArgument(format!("horizon must be positive, got {horizon}")));
    }
    if decomposition.is_empty() || decomposition.contains(&0) {
        return Err(Error::InvalidArgument(format!("bad decomposition {decomposition:?}")));
    }
    Ok(())
}

fn build(horizon: f64, decomposition: &[usize], kind: QuantizerKind) -> Result<ProductQuantizer> {
    validate(horizon, decomposition)?;
    let levels = decomposition.iter().map(|&n| optimal_grid(n)).collect::<Result<Vec<_>>>()?;
    let terms = (1..=decomposition.len())
        .map(|n| kl_eigensystem(horizon, n))
        .collect::<Result<Vec<_>>>()?;
    let eigenvalues: Vec<f64> = terms.iter().map(|e| e.lambda).collect();
    let ou_scale = match kind {
        QuantizerKind::Brownian => Vec::new(),
        QuantizerKind::OrnsteinUhlenbeck { theta, sigma } => terms
            .iter()
            .map(|e| {
                let a = e.frequency() * horizon;
                let c = horizon * horizon / (a * a + (theta * horizon).powi(2));
                sigma * c / e.lambda.sqrt()
            })
            .collect(),
    };

    let total: usize = decomposition.iter().product();
    let mut paths = Vec::with_capacity(total);
    let mut idx = vec![0usize; decomposition.len()];
    for _ in 0..total {
        let mut weight = 1.0;
        let mut coeffs = Vec::with_capacity(idx.len());
        for (l, &i) in idx.iter().enumerate() {
            weight *= levels[l].weights[i];
            coeffs.push(eigenvalues[l].sqrt() * levels[l].points[i]);
        }
        paths.push(QuantizedPath { multi_index: idx.clone(), weight, coeffs });
        for l in (0..idx.len()).rev() {
            idx[l] += 1;
            if idx[l] < decomposition[l] {
                break;
            }
            idx[l] = 0;
        }
    }
    Ok(ProductQuantizer {
        horizon,
        decomposition: decomposition.to_vec(),
        tail: kl_tail(horizon, decomposition.len()),
        levels,
        eigenvalues,
        kind,
        paths,
        terms,
        ou_scale,
    })
}

/// K-L product quantizer of Brownian motion on `[0, T]`.
pub fn build_brownian_quantizer(horizon: f64, decomposition: &[usize]) -> Result<ProductQuantizer> {
    build(horizon, decomposition, QuantizerKind::Brownian)
}

/// Product quantizer of the centred OU process `dY = −θY dt + σ dW`, built
/// from the same normal grids as the Brownian one so that `y_i` solves the
/// OU equation driven by `χ_i`.
pub fn build_ou_quantizer(
    horizon: f64,
    theta: f64,
    sigma: f64,
    decomposition: &[usize],
) -> Result<ProductQuantizer> {
    if !(theta > 0.0) {
        return Err(Error::InvalidArgument(format!("mean reversion must be positive, got {theta}")));
    }
    build(horizon, decomposition, QuantizerKind::OrnsteinUhlenbeck { theta, sigma })
}

impl ProductQuantizer {
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.paths.iter().map(|p| p.weight).collect()
    }

    pub fn terms(&self) -> &[KlTerm] {
        &self.terms
    }

    /// `Σ_ℓ λ_ℓ d_{N_ℓ} + tail`, the squared L²(dt ⊗ P) error.
    pub fn distortion2(&self) -> f64 {
        self.levels
            .iter()
            .zip(&self.eigenvalues)
            .map(|(g, l)| l * g.distortion2)
            .sum::<f64>()
            + self.tail
    }

    /// `χ_i(t)`
    pub fn brownian_value(&self, i: usize, t: f64) -> f64 {
        self.paths[i].coeffs.iter().zip(&self.terms).map(|(c, e)| c * e.eval(t)).sum()
    }

    /// `χ_i′(t)`, summed analytically from the sine series.
    pub fn brownian_derivative(&self, i: usize, t: f64) -> f64 {
        self.paths[i].coeffs.iter().zip(&self.terms).map(|(c, e)| c * e.derivative(t)).sum()
    }

    /// `y_i(t)` for OU quantizers, `χ_i(t)` otherwise.
    pub fn process_value(&self, i: usize, t: f64) -> f64 {
        match self.kind {
            QuantizerKind::Brownian => self.brownian_value(i, t),
            QuantizerKind::OrnsteinUhlenbeck { theta, .. } => {
                let decay = (-theta * t).exp();
                self.paths[i]
                    .coeffs
                    .iter()
                    .zip(&self.terms)
                    .zip(&self.ou_scale)
                    .map(|((c, e), s)| {
                        let w = e.frequency();
                        let phi = (2.0 / self.horizon).sqrt()
                            * (w * (w * t).sin() + theta * ((w * t).cos() - decay));
                        s * c * phi
                    })
                    .sum()
            }
        }
    }

    /// Cache text: `T L N_1 … N_L kind [θ σ]`, then `weight coeff_1 … coeff_L`
    /// per path.
    pub fn to_cache_string(&self) -> String {
        let mut s = format!("{:.16e} {}", self.horizon, self.decomposition.len());
        for n in &self.decomposition {
            write!(s, " {n}").unwrap();
        }
        match self.kind {
            QuantizerKind::Brownian => s.push_str(" brownian\n"),
            QuantizerKind::OrnsteinUhlenbeck { theta, sigma } => {
                writeln!(s, " ou {theta:.16e} {sigma:.16e}").unwrap()
            }
        }
        for p in &self.paths {
            write!(s, "{:.16e}", p.weight).unwrap();
            for c in &p.coeffs {
                write!(s, " {c:.16e}").unwrap();
            }
            s.push('\n');
        }
        s
    }

    /// Rebuilds the quantizer named by the header and checks the stored
    /// paths against it.
    pub fn from_cache_str(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<&str> = lines
            .next()
            .ok_or_else(|| Error::Cache("empty quantizer file".into()))?
            .split_whitespace()
            .collect();
        let bad = || Error::Cache(format!("bad quantizer header {header:?}"));
        let horizon: f64 = header.first().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let l: usize = header.get(1).ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let dec = header
            .get(2..2 + l)
            .ok_or_else(bad)?
            .iter()
            .map(|s| s.parse::<usize>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        let rest = &header[2 + l..];
        let q = match rest {
            ["brownian"] => build_brownian_quantizer(horizon, &dec)?,
            ["ou", th, sg] => build_ou_quantizer(
                horizon,
                th.parse().map_err(|_| bad())?,
                sg.parse().map_err(|_| bad())?,
                &dec,
            )?,
            _ => return Err(bad()),
        };
        let mut count = 0;
        for (line, p) in lines.zip(&q.paths) {
            let v = parse_floats(line)?;
            let matches = v.len() == l + 1
                && (v[0] - p.weight).abs() <= 1e-12
                && v[1..].iter().zip(&p.coeffs).all(|(a, b)| (a - b).abs() <= 1e-12);
            if !matches {
                return Err(Error::Cache(format!("path {count} disagrees with its header")));
            }
            count += 1;
        }
        if count != q.len() {
            return Err(Error::Cache(format!("expected {} paths, found {count}", q.len())));
        }
        Ok(q)
    }
}
