//! TOML run configuration. Keys follow the usual option-pricing symbols
//! (`r`, `T`, `S0`, `sigma`, `K`, `L`, `hR`, `C`, `beta`, `lambda`,
//! `alpha`, `p`, `M`). Unknown keys are rejected.

use serde::Deserialize;

use crate::basis::BasisKind;
use crate::error::{Error, Result};
use crate::isopt::{NewtonOptions, DEFAULT_MAX_HALVINGS, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::models::{ModelSpec, PayoffSpec, Problem};
use crate::quantnd::{DEFAULT_SAMPLES, DEFAULT_SWEEPS};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub payoff: PayoffConfig,
    #[serde(default)]
    pub quantization: QuantConfig,
    #[serde(default)]
    pub basis: BasisConfig,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub mc: McConfig,
    /// Fixed drift; skips the optimizer when present.
    #[serde(default)]
    pub theta: Option<ThetaConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

/// A scalar or a per-asset list.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum PerAsset {
    One(f64),
    Many(Vec<f64>),
}

impl PerAsset {
    fn expand(&self, d: usize) -> Vec<f64> {
        match self {
            PerAsset::One(x) => vec![*x; d],
            PerAsset::Many(v) => v.clone(),
        }
    }

    fn len(&self) -> Option<usize> {
        match self {
            PerAsset::One(_) => None,
            PerAsset::Many(v) => Some(v.len()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    BlackScholes,
    Schwartz,
    LocalVol,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    #[serde(default)]
    pub r: f64,
    pub sigma: PerAsset,
    #[serde(rename = "S0", default)]
    pub s0: Option<PerAsset>,
    /// Number of assets when every per-asset key is a scalar.
    #[serde(default)]
    pub d: Option<usize>,
    /// Mean-reversion speed (Schwartz).
    #[serde(default)]
    pub lambda: Option<PerAsset>,
    /// Long-run log level (Schwartz); defaults to `log S0`.
    #[serde(default)]
    pub alpha: Option<PerAsset>,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub x0: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayoffKind {
    Basket,
    SparkSpread,
    Asian,
    DownInCall,
    Call,
    Constant,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PayoffConfig {
    pub kind: PayoffKind,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(rename = "K", default)]
    pub strike: Option<f64>,
    /// Basket weights; default `1/d` each.
    #[serde(default)]
    pub w: Option<Vec<f64>>,
    #[serde(rename = "hR", default)]
    pub heat_rate: Option<f64>,
    #[serde(rename = "C", default)]
    pub cost: Option<f64>,
    #[serde(default)]
    pub p: Option<usize>,
    #[serde(rename = "L", default)]
    pub barrier: Option<f64>,
    #[serde(default)]
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuantConfig {
    /// Grid size for terminal payoffs.
    #[serde(rename = "N")]
    pub n: usize,
    /// Path budget of the functional quantizer.
    #[serde(rename = "dN")]
    pub d_n: usize,
    pub decomposition: Option<Vec<usize>>,
    pub samples: usize,
    pub sweeps: usize,
    /// Grid seed; defaults to the run seed.
    pub seed: Option<u64>,
}

impl Default for QuantConfig {
    fn default() -> Self {
        Self {
            n: 200,
            d_n: 966,
            decomposition: None,
            samples: DEFAULT_SAMPLES,
            sweeps: DEFAULT_SWEEPS,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BasisConfig {
    pub kind: BasisKind,
    pub m: usize,
}

impl Default for BasisConfig {
    fn default() -> Self {
        Self { kind: BasisKind::ShiftedLegendre, m: 2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL, max_iter: DEFAULT_MAX_ITER, max_halvings: DEFAULT_MAX_HALVINGS }
    }
}

impl From<OptimizerConfig> for NewtonOptions {
    fn from(c: OptimizerConfig) -> Self {
        NewtonOptions { tol: c.tol, max_iter: c.max_iter, max_halvings: c.max_halvings }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McConfig {
    pub n: u64,
    #[serde(rename = "M")]
    pub steps: usize,
    pub seed: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self { n: 100_000, steps: 100, seed: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThetaConfig {
    /// `θ` for terminal payoffs, basis coefficients for path payoffs.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub path: Option<String>,
    pub cache_dir: Option<String>,
}

fn need<T: Copy>(v: Option<T>, key: &str, what: &str) -> Result<T> {
    v.ok_or_else(|| Error::Config(format!("{what} needs `{key}`")))
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn model_spec(&self) -> Result<ModelSpec> {
        let m = &self.model;
        let lens = [Some(&m.sigma), m.s0.as_ref(), m.lambda.as_ref(), m.alpha.as_ref()]
            .into_iter()
            .flatten()
            .filter_map(PerAsset::len)
            .max();
        let d = m.d.or(lens).unwrap_or(1);
        Ok(match m.kind {
            ModelKind::BlackScholes => ModelSpec::BlackScholes {
                rate: m.r,
                sigma: m.sigma.expand(d),
                s0: need(m.s0.as_ref(), "S0", "black_scholes")?.expand(d),
            },
            ModelKind::Schwartz => {
                let s0 = need(m.s0.as_ref(), "S0", "schwartz")?.expand(d);
                let alpha = match &m.alpha {
                    Some(a) => a.expand(d),
                    None => s0.iter().map(|s| s.ln()).collect(),
                };
                ModelSpec::Schwartz {
                    rate: m.r,
                    theta: need(m.lambda.as_ref(), "lambda", "schwartz")?.expand(d),
                    alpha,
                    sigma: m.sigma.expand(d),
                    s0,
                }
            }
            ModelKind::LocalVol => {
                let PerAsset::One(sigma) = m.sigma else {
                    return Err(Error::Config("local_vol takes a scalar `sigma`".into()));
                };
                ModelSpec::LocalVol {
                    rate: m.r,
                    sigma,
                    beta: need(m.beta, "beta", "local_vol")?,
                    x0: need(m.x0, "x0", "local_vol")?,
                }
            }
        })
    }

    pub fn payoff_spec(&self, d: usize) -> Result<PayoffSpec> {
        let p = &self.payoff;
        Ok(match p.kind {
            PayoffKind::Basket => PayoffSpec::Basket {
                weights: p.w.clone().unwrap_or_else(|| vec![1.0 / d as f64; d]),
                strike: need(p.strike, "K", "basket")?,
            },
            PayoffKind::SparkSpread => PayoffSpec::SparkSpread {
                heat_rate: need(p.heat_rate, "hR", "spark_spread")?,
                cost: need(p.cost, "C", "spark_spread")?,
            },
            PayoffKind::Asian => PayoffSpec::Asian {
                strike: need(p.strike, "K", "asian")?,
                dates: need(p.p, "p", "asian")?,
            },
            PayoffKind::DownInCall => PayoffSpec::DownInCall {
                strike: need(p.strike, "K", "down_in_call")?,
                barrier: need(p.barrier, "L", "down_in_call")?,
            },
            PayoffKind::Call => PayoffSpec::Call { strike: need(p.strike, "K", "call")? },
            PayoffKind::Constant => PayoffSpec::Constant { value: need(p.value, "value", "constant")? },
        })
    }

    pub fn problem(&self) -> Result<Problem> {
        let model = self.model_spec()?;
        let payoff = self.payoff_spec(model.dim())?;
        Problem::new(model, payoff, self.payoff.horizon, self.mc.steps)
    }

    pub fn grid_seed(&self) -> u64 {
        self.quantization.seed.unwrap_or(self.mc.seed)
    }

    /// Checks everything that can be checked without running numerics.
    pub fn validate(&self) -> Result<()> {
        let problem = self.problem()?;
        if self.mc.n < 2 {
            return Err(Error::Config("mc.n must be at least 2".into()));
        }
        if self.quantization.n == 0 || self.quantization.d_n == 0 {
            return Err(Error::Config("quantizer sizes must be positive".into()));
        }
        if let Some(t) = &self.theta {
            let want = if problem.payoff.is_path_dependent() { self.basis.m } else { problem.dim() };
            if t.values.len() != want {
                return Err(Error::Config(format!(
                    "theta.values has {} entries, expected {want}",
                    t.values.len()
                )));
            }
        }
        Ok(())
    }
}
