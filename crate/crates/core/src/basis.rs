//! Orthonormal families of `L²([0, T])` used to parametrise path drifts.
//!
//! Every family is normalised to the identity Gram matrix on `[0, T]`:
//! * shifted Legendre `√((2n+1)/T)·P_n(2t/T − 1)`, `n = 0..m−1`;
//! * trigonometric `√(2/T)·sin((n+½)πt/T)`, `n = 0..m−1`;
//! * Haar: `1/√T`, then `2^{j/2}/√T·ψ(2^j t/T − k)` level by level,
//!   `ψ = 1_{[0,½)} − 1_{[½,1)}`, so `m` must be a power of two;
//! * constant `1/√T` (`m = 1`).

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::funcquant::ProductQuantizer;

/// Minimum number of quadrature nodes on `[0, T]`.
pub const QUADRATURE_NODES: usize = 4097;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    #[serde(alias = "legendre")]
    ShiftedLegendre,
    #[serde(alias = "kl")]
    KarhunenLoeve,
    Haar,
    Constant,
}

impl fmt::Display for BasisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BasisKind::ShiftedLegendre => "shifted_legendre",
            BasisKind::KarhunenLoeve => "karhunen_loeve",
            BasisKind::Haar => "haar",
            BasisKind::Constant => "constant",
        })
    }
}

impl FromStr for BasisKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shifted_legendre" | "legendre" => Ok(BasisKind::ShiftedLegendre),
            "karhunen_loeve" | "kl" => Ok(BasisKind::KarhunenLoeve),
            "haar" => Ok(BasisKind::Haar),
            "constant" => Ok(BasisKind::Constant),
            _ => Err(Error::InvalidArgument(format!("unknown basis kind {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisSpec {
    pub kind: BasisKind,
    pub m: usize,
    pub horizon: f64,
}

pub fn make_basis(kind: BasisKind, m: usize, horizon: f64) -> Result<BasisSpec> {
    if m == 0 {
        return Err(Error::InvalidArgument("basis dimension must be at least 1".into()));
    }
    if !(horizon > 0.0) {
        return Err(Error::InvalidArgument(format!("horizon must be positive, got {horizon}")));
    }
    match kind {
        BasisKind::Haar if !m.is_power_of_two() => Err(Error::InvalidArgument(format!(
            "haar basis needs complete dyadic levels (m a power of two), got {m}"
        ))),
        BasisKind::Constant if m != 1 => {
            Err(Error::InvalidArgument(format!("constant basis has m = 1, got {m}")))
        }
        _ => Ok(BasisSpec { kind, m, horizon }),
    }
}

impl BasisSpec {
    /// Human-readable normalisation, written next to exported results.
    pub fn normalization(&self) -> String {
        let family = match self.kind {
            BasisKind::ShiftedLegendre => "sqrt((2n+1)/T) P_n(2t/T-1)",
            BasisKind::KarhunenLoeve => "sqrt(2/T) sin((n+1/2) pi t/T)",
            BasisKind::Haar => "1/sqrt(T), 2^(j/2)/sqrt(T) psi(2^j t/T - k)",
            BasisKind::Constant => "1/sqrt(T)",
        };
        format!("{family}; orthonormal on [0,{}]", self.horizon)
    }

    /// Values `e_1(t), …, e_m(t)`.
    pub fn eval_all(&self, t: f64, out: &mut [f64]) {
        let t_h = self.horizon;
        match self.kind {
            BasisKind::Constant => out[0] = 1.0 / t_h.sqrt(),
            BasisKind::ShiftedLegendre => {
                let x = 2.0 * t / t_h - 1.0;
                let (mut p0, mut p1) = (1.0, x);
                for (n, o) in out.iter_mut().enumerate().take(self.m) {
                    let p = match n {
                        0 => 1.0,
                        1 => x,
                        _ => {
                            let nf = n as f64;
                            let p2 = ((2.0 * nf - 1.0) * x * p1 - (nf - 1.0) * p0) / nf;
                            p0 = p1;
                            p1 = p2;
                            p2
                        }
                    };
                    *o = ((2 * n + 1) as f64 / t_h).sqrt() * p;
                }
            }
            BasisKind::KarhunenLoeve => {
                let c = (2.0 / t_h).sqrt();
                for (n, o) in out.iter_mut().enumerate().take(self.m) {
                    *o = c * ((n as f64 + 0.5) * PI * t / t_h).sin();
                }
            }
            BasisKind::Haar => {
                for (j, o) in out.iter_mut().enumerate().take(self.m) {
                    *o = haar(j, t / t_h) / t_h.sqrt();
                }
            }
        }
    }

    pub fn eval(&self, j: usize, t: f64) -> f64 {
        let mut v = vec![0.0; self.m];
        self.eval_all(t, &mut v);
        v[j]
    }

    /// `θ(t) = Σ_j c_j e_j(t)`
    pub fn combination(&self, coeffs: &[f64], t: f64) -> f64 {
        let mut v = vec![0.0; self.m];
        self.eval_all(t, &mut v);
        v.iter().zip(coeffs).map(|(a, b)| a * b).sum()
    }

    /// Points where some `e_j` jumps; quadrature never straddles them.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self.kind {
            BasisKind::Haar if self.m > 1 => {
                (1..self.m).map(|k| self.horizon * k as f64 / self.m as f64).collect()
            }
            _ => Vec::new(),
        }
    }

    /// Composite Simpson rule for the `len`-vector `∫₀ᵀ g(t, e(t)) dt`, split
    /// at the breakpoints, with at least `nodes` nodes overall. On each piece
    /// the basis is evaluated at interior limits so jumps sit on piece edges.
    pub fn integrate<F>(&self, nodes: usize, len: usize, mut g: F) -> Vec<f64>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let mut edges = vec![0.0];
        edges.extend(self.breakpoints());
        edges.push(self.horizon);
        let pieces = edges.len() - 1;
        let mut per = (nodes.max(3) - 1).div_ceil(pieces);
        per += per % 2;
        let mut acc = vec![0.0; len];
        let mut tmp = vec![0.0; len];
        let mut e = vec![0.0; self.m];
        for w in edges.windows(2) {
            let (a, b) = (w[0], w[1]);
            let h = (b - a) / per as f64;
            let mid = 0.5 * (a + b);
            for k in 0..=per {
                let t = a + h * k as f64;
                match self.kind {
                    // piecewise constant: the midpoint gives the interior value
                    BasisKind::Haar => self.eval_all(mid, &mut e),
                    _ => self.eval_all(t, &mut e),
                }
                g(t, &e, &mut tmp);
                let c = if k == 0 || k == per { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
                for (s, v) in acc.iter_mut().zip(&tmp) {
                    *s += c * h / 3.0 * v;
                }
            }
        }
        acc
    }
}

fn haar(j: usize, u: f64) -> f64 {
    if !(0.0..1.0).contains(&u) {
        return if j == 0 && u == 1.0 { 1.0 } else { 0.0 };
    }
    if j == 0 {
        return 1.0;
    }
    let level = usize::BITS - 1 - j.leading_zeros();
    let k = (j - (1 << level)) as f64;
    let scale = (1u64 << level) as f64;
    let v = scale * u - k;
    let amp = scale.sqrt();
    if (0.0..0.5).contains(&v) {
        amp
    } else if (0.5..1.0).contains(&v) {
        -amp
    } else {
        0.0
    }
}

/// `⟨e_i, e_j⟩` on `[0, T]` by quadrature.
pub fn gram(basis: &BasisSpec) -> Vec<Vec<f64>> {
    let m = basis.m;
    let flat = basis.integrate(QUADRATURE_NODES, m * m, |_, e, o| {
        for i in 0..m {
            for j in 0..m {
                o[i * m + j] = e[i] * e[j];
            }
        }
    });
    flat.chunks(m).map(<[f64]>::to_vec).collect()
}

/// `(∫₀ᵀ e_j(s)·χ′(s) ds)_j` for a differentiable path with derivative `dchi`.
pub fn integrate_against_quantizer_derivative<F>(basis: &BasisSpec, dchi: F) -> Vec<f64>
where
    F: Fn(f64) -> f64,
{
    integrate_against_derivative_with(basis, QUADRATURE_NODES, dchi)
}

fn integrate_against_derivative_with<F>(basis: &BasisSpec, nodes: usize, dchi: F) -> Vec<f64>
where
    F: Fn(f64) -> f64,
{
    basis.integrate(nodes, basis.m, |t, e, o| {
        let d = dchi(t);
        for (a, b) in o.iter_mut().zip(e) {
            *a = b * d;
        }
    })
}

/// `∫ e_j χ_i′` for every path of a product quantizer. Since `χ_i′` is a
/// finite combination of `e_n′`, only the `m × L` matrix `⟨e_j, e_n′⟩` is
/// integrated numerically.
pub fn project_quantizer_derivatives(basis: &BasisSpec, q: &ProductQuantizer) -> Vec<Vec<f64>> {
    let m = basis.m;
    let terms = q.terms();
    let l = terms.len();
    let g = basis.integrate(QUADRATURE_NODES, m * l, |t, e, o| {
        for (j, ej) in e.iter().enumerate() {
            for (n, term) in terms.iter().enumerate() {
                o[j * l + n] = ej * term.derivative(t);
            }
        }
    });
    q.paths
        .iter()
        .map(|p| (0..m).map(|j| (0..l).map(|n| g[j * l + n] * p.coeffs[n]).sum()).collect())
        .collect()
}

/// Left-point Itô sums `(Σ_k e_j(t_k)·ΔW_k)_j` over a simulation grid with
/// `increments[k] = W(t_{k+1}) − W(t_k)`.
pub fn ito_sum(basis: &BasisSpec, time_grid: &[f64], increments: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; basis.m];
    let mut e = vec![0.0; basis.m];
    for (&t, &dw) in time_grid.iter().zip(increments) {
        basis.eval_all(t, &mut e);
        for (o, v) in out.iter_mut().zip(&e) {
            *o += v * dw;
        }
    }
    out
}

/// Matrix `e_j(t_k)` of basis values at the left points of a grid.
pub fn left_point_table(basis: &BasisSpec, time_grid: &[f64]) -> Vec<Vec<f64>> {
    let mut e = vec![0.0; basis.m];
    time_grid[..time_grid.len().saturating_sub(1)]
        .iter()
        .map(|&t| {
            basis.eval_all(t, &mut e);
            e.clone()
        })
        .collect()
}
