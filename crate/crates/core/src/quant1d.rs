//! Optimal quadratic quantizers of the one-dimensional standard normal law.
//!
//! The optimum is the unique stationary point of the distortion, i.e. the
//! fixed point `xᵢ = E[Z | Z ∈ Cᵢ]` of the Lloyd map. Cell moments have
//! closed forms in terms of `Φ` and `φ`, so the whole construction is
//! deterministic. Plain Lloyd iteration contracts at a rate close to one for
//! large `N`; each iteration therefore first tries a Newton step on the
//! stationarity equations (tridiagonal Jacobian) and falls back to the Lloyd
//! update whenever the Newton trial would not reduce the centroid residual.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::normal;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 10_000;

/// Optimal N-quantizer of N(0, 1) with its cell probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    /// Squared quadratic quantization error `E|Z - Ẑ|²`.
    pub distortion2: f64,
}

/// Per-cell closed-form moments for a sorted point set.
struct CellMoments {
    lo: Vec<f64>,
    hi: Vec<f64>,
    prob: Vec<f64>,
    /// `∫_{Cᵢ} z φ(z) dz`
    first: Vec<f64>,
}

fn midpoints(points: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = points.len();
    let mut lo = Vec::with_capacity(n);
    let mut hi = Vec::with_capacity(n);
    for i in 0..n {
        lo.push(if i == 0 { f64::NEG_INFINITY } else { 0.5 * (points[i - 1] + points[i]) });
        hi.push(if i + 1 == n { f64::INFINITY } else { 0.5 * (points[i] + points[i + 1]) });
    }
    (lo, hi)
}

fn cell_moments(points: &[f64]) -> CellMoments {
    let (lo, hi) = midpoints(points);
    let prob: Vec<f64> = lo.iter().zip(&hi).map(|(&a, &b)| normal::interval_prob(a, b)).collect();
    let first = lo.iter().zip(&hi).map(|(&a, &b)| normal::pdf(a) - normal::pdf(b)).collect();
    CellMoments { lo, hi, prob, first }
}

/// `t·φ(t)`, zero at ±∞.
fn t_pdf(t: f64) -> f64 {
    if t.is_infinite() {
        0.0
    } else {
        t * normal::pdf(t)
    }
}

fn centroid_residual(points: &[f64], m: &CellMoments) -> (Vec<f64>, f64) {
    let centroids: Vec<f64> = m.first.iter().zip(&m.prob).map(|(f, p)| f / p).collect();
    let res = centroids
        .iter()
        .zip(points)
        .map(|(c, x)| (c - x).abs())
        .fold(0.0, f64::max);
    (centroids, res)
}

fn symmetrize(points: &mut [f64]) {
    let n = points.len();
    for i in 0..n / 2 {
        let s = 0.5 * (points[n - 1 - i] - points[i]);
        points[i] = -s;
        points[n - 1 - i] = s;
    }
    if n % 2 == 1 {
        points[n / 2] = 0.0;
    }
}

/// Newton step on `gᵢ = xᵢPᵢ − ∫_{Cᵢ} zφ` (half the distortion gradient).
fn newton_trial(points: &[f64], m: &CellMoments) -> Option<Vec<f64>> {
    let n = points.len();
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n.saturating_sub(1)];
    let mut rhs = vec![0.0; n];
    for i in 0..n {
        let pa = if i == 0 { 0.0 } else { normal::pdf(m.lo[i]) };
        let pb = if i + 1 == n { 0.0 } else { normal::pdf(m.hi[i]) };
        let left = if i == 0 { 0.0 } else { points[i] - points[i - 1] };
        let right = if i + 1 == n { 0.0 } else { points[i + 1] - points[i] };
        diag[i] = m.prob[i] - 0.25 * pb * right - 0.25 * pa * left;
        if i + 1 < n {
            off[i] = -0.25 * pb * right;
        }
        rhs[i] = points[i] * m.prob[i] - m.first[i];
    }
    let step = solve_tridiagonal(&off, &diag, &off, &rhs)?;
    let trial: Vec<f64> = points.iter().zip(&step).map(|(x, d)| x - d).collect();
    if trial.windows(2).all(|w| w[0] < w[1]) && trial.iter().all(|x| x.is_finite()) {
        Some(trial)
    } else {
        None
    }
}

/// Thomas algorithm; `None` on a vanishing pivot.
fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut beta = diag[0];
    if beta.abs() < 1e-300 {
        return None;
    }
    d[0] = rhs[0] / beta;
    for i in 1..n {
        c[i - 1] = sup[i - 1] / beta;
        beta = diag[i] - sub[i - 1] * c[i - 1];
        if beta.abs() < 1e-300 {
            return None;
        }
        d[i] = (rhs[i] - sub[i - 1] * d[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Some(d)
}

fn distortion(points: &[f64], m: &CellMoments) -> f64 {
    (0..points.len())
        .map(|i| {
            let second = m.prob[i] + t_pdf(m.lo[i]) - t_pdf(m.hi[i]);
            let x = points[i];
            second - 2.0 * x * m.first[i] + x * x * m.prob[i]
        })
        .sum::<f64>()
        .max(0.0)
}

/// Builds the optimal quadratic `n`-quantizer of N(0, 1).
///
/// Iterates until the largest centroid displacement `|E[Z|Cᵢ] − xᵢ|` is at most
/// `tol`.
pub fn build_grid_1d(n: usize, tol: f64, max_iter: usize) -> Result<Grid1D> {
    if n == 0 {
        return Err(Error::InvalidArgument("quantizer size must be at least 1".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let mut points: Vec<f64> =
        (0..n).map(|i| normal::inv_cdf((i as f64 + 0.5) / n as f64)).collect();
    symmetrize(&mut points);
    let mut moments = cell_moments(&points);
    let (mut centroids, mut residual) = centroid_residual(&points, &moments);
    let mut iter = 0;
    while residual > tol {
        if iter == max_iter {
            return Err(Error::NoConvergence { iterations: iter, residual });
        }
        iter += 1;
        let mut next = None;
        if let Some(mut trial) = newton_trial(&points, &moments) {
            symmetrize(&mut trial);
            let tm = cell_moments(&trial);
            let (tc, tr) = centroid_residual(&trial, &tm);
            if tr < residual {
                next = Some((trial, tm, tc, tr));
            }
        }
        let (p, m, c, r) = next.unwrap_or_else(|| {
            let mut lloyd = centroids.clone();
            symmetrize(&mut lloyd);
            let lm = cell_moments(&lloyd);
            let (lc, lr) = centroid_residual(&lloyd, &lm);
            (lloyd, lm, lc, lr)
        });
        points = p;
        moments = m;
        centroids = c;
        residual = r;
    }
    let distortion2 = distortion(&points, &moments);
    Ok(Grid1D { weights: moments.prob, points, distortion2 })
}

/// Optimal grid with the default tolerance and iteration budget.
pub fn optimal_grid(n: usize) -> Result<Grid1D> {
    build_grid_1d(n, DEFAULT_TOL, DEFAULT_MAX_ITER)
}

/// Squared distortions `d_1, …, d_{n_max}` of the optimal quantizers.
pub fn distortion_table(n_max: usize) -> Result<Vec<f64>> {
    if n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be at least 1".into()));
    }
    (1..=n_max)
        .into_par_iter()
        .map(|n| optimal_grid(n).map(|g| g.distortion2))
        .collect()
}

impl Grid1D {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Voronoi cell bounds `(lo, hi)` of point `i`.
    pub fn cell(&self, i: usize) -> (f64, f64) {
        let n = self.points.len();
        let lo = if i == 0 { f64::NEG_INFINITY } else { 0.5 * (self.points[i - 1] + self.points[i]) };
        let hi = if i + 1 == n { f64::INFINITY } else { 0.5 * (self.points[i] + self.points[i + 1]) };
        (lo, hi)
    }

    /// Index of the nearest point; ties go to the lower index.
    pub fn project(&self, z: f64) -> usize {
        let n = self.points.len();
        let (mut lo, mut hi) = (0usize, n - 1);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if z <= 0.5 * (self.points[mid] + self.points[mid + 1]) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        lo
    }

    /// Largest `|E[Z | Z ∈ Cᵢ] − xᵢ|` over the cells.
    pub fn stationarity_residual(&self) -> f64 {
        let m = cell_moments(&self.points);
        centroid_residual(&self.points, &m).1
    }

    /// Cache text: `1 N`, then one `x w` line per point.
    pub fn to_cache_string(&self) -> String {
        let mut s = format!("1 {}\n", self.points.len());
        for (x, w) in self.points.iter().zip(&self.weights) {
            writeln!(s, "{x:.16e} {w:.16e}").unwrap();
        }
        s
    }

    pub fn from_cache_str(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<&str> = lines
            .next()
            .ok_or_else(|| Error::Cache("empty grid file".into()))?
            .split_whitespace()
            .collect();
        if header.len() != 2 || header[0] != "1" {
            return Err(Error::Cache(format!("bad 1-D grid header {header:?}")));
        }
        let n: usize = header[1].parse().map_err(|_| Error::Cache("bad grid size".into()))?;
        let mut points = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for line in lines.by_ref().take(n) {
            let v = parse_floats(line)?;
            if v.len() != 2 {
                return Err(Error::Cache(format!("expected `x w`, got {line:?}")));
            }
            points.push(v[0]);
            weights.push(v[1]);
        }
        if points.len() != n {
            return Err(Error::Cache(format!("expected {n} points, found {}", points.len())));
        }
        let m = cell_moments(&points);
        let distortion2 = distortion(&points, &m);
        Ok(Self { points, weights, distortion2 })
    }
}

pub(crate) fn parse_floats(line: &str) -> Result<Vec<f64>> {
    line.split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|_| Error::Cache(format!("bad number {t:?}"))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson on [-12, 12]; used as an independent quadrature oracle.
    fn quad(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        let (a, b) = (a.max(-12.0), b.min(12.0));
        let n = 20_000;
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for k in 1..n {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + k as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn single_point_grid() {
        let g = optimal_grid(1).unwrap();
        assert_eq!(g.points, vec![0.0]);
        assert_eq!(g.weights, vec![1.0]);
        assert!((g.distortion2 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_point_grid_matches_quadrature_oracle() {
        let g = optimal_grid(2).unwrap();
        // centroid of the half normal, by quadrature
        let mass = quad(normal::pdf, 0.0, f64::INFINITY);
        let centroid = quad(|z| z * normal::pdf(z), 0.0, f64::INFINITY) / mass;
        assert!((centroid - 0.797_884_560_802_865_4).abs() < 1e-9);
        assert!((g.points[1] - centroid).abs() < 1e-9);
        assert!((g.points[0] + centroid).abs() < 1e-9);
        assert!((g.weights[0] - 0.5).abs() < 1e-15);
        let d = quad(|z| (z - centroid).powi(2) * normal::pdf(z), 0.0, 12.0) * 2.0;
        assert!((d - (1.0 - 2.0 / std::f64::consts::PI)).abs() < 1e-9);
        assert!((g.distortion2 - (1.0 - 2.0 / std::f64::consts::PI)).abs() < 1e-12);
    }

    #[test]
    fn invariants_hold_across_sizes() {
        for n in [3, 7, 10, 23, 64, 200, 400] {
            let g = optimal_grid(n).unwrap();
            assert!(g.points.windows(2).all(|w| w[0] < w[1]));
            assert!(g.weights.iter().all(|&w| w > 0.0));
            assert!((g.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(g.stationarity_residual() <= DEFAULT_TOL);
            for i in 0..n {
                assert!((g.points[i] + g.points[n - 1 - i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn distortion_matches_quadrature() {
        let g = optimal_grid(10).unwrap();
        let d: f64 = (0..g.len())
            .map(|i| {
                let (a, b) = g.cell(i);
                quad(|z| (z - g.points[i]).powi(2) * normal::pdf(z), a, b)
            })
            .sum();
        assert!((g.distortion2 - d).abs() < 1e-8, "{} vs {d}", g.distortion2);
    }

    #[test]
    fn distortion_table_decreases() {
        let t = distortion_table(40).unwrap();
        assert_eq!(t[0], 1.0);
        assert!((t[1] - (1.0 - 2.0 / std::f64::consts::PI)).abs() < 1e-12);
        assert!(t.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn zador_trend_is_flat() {
        let scaled: Vec<f64> = [50, 100, 200, 400]
            .iter()
            .map(|&n| n as f64 * optimal_grid(n).unwrap().distortion2.sqrt())
            .collect();
        for w in scaled.windows(2) {
            assert!((w[1] / w[0] - 1.0).abs() < 0.2, "{scaled:?}");
        }
    }

    #[test]
    fn weights_match_monte_carlo_frequencies() {
        use crate::rng::SampleStream;
        let g = optimal_grid(12).unwrap();
        let n = 1_000_000u64;
        let mut counts = vec![0u64; g.len()];
        let mut s = SampleStream::new(2024, 0);
        for _ in 0..n {
            counts[g.project(s.normal())] += 1;
        }
        for (c, w) in counts.iter().zip(&g.weights) {
            let se = (w * (1.0 - w) / n as f64).sqrt();
            assert!((*c as f64 / n as f64 - w).abs() < 4.0 * se);
        }
    }

    #[test]
    fn errors() {
        assert!(build_grid_1d(0, 1e-10, 10).is_err());
        assert!(build_grid_1d(5, 0.0, 10).is_err());
        match build_grid_1d(50, 1e-14, 1) {
            Err(Error::NoConvergence { iterations, residual }) => {
                assert_eq!(iterations, 1);
                assert!(residual > 0.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn cache_round_trip_is_bit_stable() {
        let g = optimal_grid(17).unwrap();
        let text = g.to_cache_string();
        let back = Grid1D::from_cache_str(&text).unwrap();
        assert_eq!(back.points, g.points);
        assert_eq!(back.weights, g.weights);
        assert_eq!(back.to_cache_string(), text);
    }

    #[test]
    fn project_breaks_ties_low() {
        let g = optimal_grid(2).unwrap();
        assert_eq!(g.project(0.0), 0);
        assert_eq!(g.project(1e-12), 1);
    }
}
