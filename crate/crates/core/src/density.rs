//! Densities of the driving noise in finite-dimensional importance sampling.
//! They provide `log p`, the score `∇p/p` and the curvature `∇²p/p`.

use std::str::FromStr;

use crate::error::{Error, Result};

pub trait DensityModel: Sync {
    fn dim(&self) -> usize;

    fn log_density(&self, x: &[f64]) -> f64;

    /// `∇p(x)/p(x)`
    fn score(&self, x: &[f64], out: &mut [f64]);

    /// `∇²p(x)/p(x)`, row-major `d × d`.
    fn curvature(&self, x: &[f64], out: &mut [f64]);

    /// `log p(x) − log p(x − θ)`
    fn log_ratio(&self, x: &[f64], theta: &[f64]) -> f64 {
        let shifted: Vec<f64> = x.iter().zip(theta).map(|(a, b)| a - b).collect();
        self.log_density(x) - self.log_density(&shifted)
    }

    /// `p(x)/p(x − θ)`, evaluated in log space.
    fn ratio(&self, x: &[f64], theta: &[f64]) -> f64 {
        self.log_ratio(x, theta).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityKind {
    Gaussian,
    Logistic,
}

impl FromStr for DensityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(DensityKind::Gaussian),
            "logistic" => Ok(DensityKind::Logistic),
            _ => Err(Error::InvalidArgument(format!("unknown density {s:?}"))),
        }
    }
}

pub fn make_density(kind: DensityKind, d: usize) -> Result<Box<dyn DensityModel>> {
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be at least 1".into()));
    }
    Ok(match kind {
        DensityKind::Gaussian => Box::new(Gaussian::new(d)),
        DensityKind::Logistic => Box::new(Logistic::new(d)),
    })
}

/// Standard normal `N(0, I_d)`.
#[derive(Debug, Clone, Copy)]
pub struct Gaussian {
    d: usize,
}

impl Gaussian {
    pub fn new(d: usize) -> Self {
        Self { d }
    }
}

pub fn gaussian(d: usize) -> Gaussian {
    Gaussian::new(d)
}

impl DensityModel for Gaussian {
    fn dim(&self) -> usize {
        self.d
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        -0.5 * self.d as f64 * (2.0 * std::f64::consts::PI).ln()
            - 0.5 * x.iter().map(|v| v * v).sum::<f64>()
    }

    fn score(&self, x: &[f64], out: &mut [f64]) {
        for (o, v) in out.iter_mut().zip(x) {
            *o = -v;
        }
    }

    fn curvature(&self, x: &[f64], out: &mut [f64]) {
        let d = self.d;
        for i in 0..d {
            for j in 0..d {
                out[i * d + j] = x[i] * x[j] - if i == j { 1.0 } else { 0.0 };
            }
        }
    }

    /// `|x − θ|²/2 − |x|²/2`
    fn log_ratio(&self, x: &[f64], theta: &[f64]) -> f64 {
        x.iter().zip(theta).map(|(a, b)| 0.5 * ((a - b) * (a - b) - a * a)).sum()
    }
}

/// Product of `d` standard logistic laws, `p(x) = eˣ/(1 + eˣ)²` per axis.
#[derive(Debug, Clone, Copy)]
pub struct Logistic {
    d: usize,
}

impl Logistic {
    pub fn new(d: usize) -> Self {
        Self { d }
    }
}

pub fn logistic() -> Logistic {
    Logistic::new(1)
}

impl DensityModel for Logistic {
    fn dim(&self) -> usize {
        self.d
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        // symmetric form that cannot overflow
        x.iter().map(|v| -v.abs() - 2.0 * (-v.abs()).exp().ln_1p()).sum()
    }

    /// `(1 − eˣ)/(1 + eˣ) = −tanh(x/2)`
    fn score(&self, x: &[f64], out: &mut [f64]) {
        for (o, v) in out.iter_mut().zip(x) {
            *o = -(0.5 * v).tanh();
        }
    }

    /// `∇² log p + s sᵀ`, with `(log p)″ = −½ sech²(x/2)`.
    fn curvature(&self, x: &[f64], out: &mut [f64]) {
        let d = self.d;
        let s: Vec<f64> = x.iter().map(|v| -(0.5 * v).tanh()).collect();
        for i in 0..d {
            for j in 0..d {
                out[i * d + j] = s[i] * s[j];
            }
            let c = (0.5 * x[i]).cosh();
            out[i * d + i] -= 0.5 / (c * c);
        }
    }
}
