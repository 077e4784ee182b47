//! Quadratic quantizers of the d-dimensional standard normal law built by
//! randomized Lloyd iterations on a fixed, seeded sample cloud.
//!
//! All samples are drawn once from the counter-based generator, so a sweep is
//! a batch k-means update on a fixed empirical measure. The empirical
//! distortion is then non-increasing from sweep to sweep. The assignment
//! step runs in parallel over fixed-size chunks whose partial sums are merged
//! in chunk order, which keeps the output independent of the thread count.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quant1d::parse_floats;
use crate::rng::SampleStream;

pub const DEFAULT_SAMPLES: usize = 1_000_000;
pub const DEFAULT_SWEEPS: usize = 30;

const CHUNK: usize = 8192;
/// Sample-stream index reserved for the k-means++ seeding draws.
const SEEDING_STREAM: u64 = u64::MAX;

/// Quantizer of N(0, I_d) with empirical cell weights.
#[derive(Debug, Clone, PartialEq)]
pub struct GridND {
    pub dim: usize,
    /// Row-major `N × d` coordinates.
    pub coords: Vec<f64>,
    pub weights: Vec<f64>,
    /// Mean squared distance of the training cloud to its nearest point.
    /// NaN for grids read back from a cache file.
    pub distortion2_estimate: f64,
    pub build_seed: u64,
    /// Empty cells re-seeded during construction.
    pub resets: usize,
    /// Empirical distortion measured at the assignment step of each sweep.
    pub sweep_distortions: Vec<f64>,
}

#[derive(Clone)]
struct Partial {
    counts: Vec<u64>,
    sums: Vec<f64>,
    sq: f64,
    far: (f64, usize),
}

impl Partial {
    fn new(n: usize, d: usize) -> Self {
        Self { counts: vec![0; n], sums: vec![0.0; n * d], sq: 0.0, far: (-1.0, 0) }
    }
}

#[inline]
fn nearest(coords: &[f64], d: usize, x: &[f64]) -> (usize, f64) {
    let mut best = 0;
    let mut best_d2 = f64::INFINITY;
    for (i, p) in coords.chunks_exact(d).enumerate() {
        let mut d2 = 0.0;
        for (a, b) in p.iter().zip(x) {
            let t = a - b;
            d2 += t * t;
            if d2 >= best_d2 {
                break;
            }
        }
        if d2 < best_d2 {
            best_d2 = d2;
            best = i;
        }
    }
    (best, best_d2)
}

/// Relative safety margin of the bound test; near-ties always fall back to
/// the full scan so the result equals the exhaustive assignment.
const BOUND_MARGIN: f64 = 1e-9;

/// Nearest point (lowest index on ties) and the second-smallest squared
/// distance.
#[inline]
fn nearest2(coords: &[f64], d: usize, x: &[f64]) -> (usize, f64, f64) {
    let (mut best, mut best_d2, mut second) = (0, f64::INFINITY, f64::INFINITY);
    for (i, p) in coords.chunks_exact(d).enumerate() {
        let mut d2 = 0.0;
        for (a, b) in p.iter().zip(x) {
            let t = a - b;
            d2 += t * t;
            if d2 > second {
                break;
            }
        }
        if d2 < best_d2 {
            second = best_d2;
            best_d2 = d2;
            best = i;
        } else if d2 < second {
            second = d2;
        }
    }
    (best, best_d2, second)
}

#[inline]
fn dist2(p: &[f64], x: &[f64]) -> f64 {
    let mut d2 = 0.0;
    for (a, b) in p.iter().zip(x) {
        let t = a - b;
        d2 += t * t;
    }
    d2
}

/// Per-sample assignment state: current cell and a lower bound on the
/// distance to every other point. Points that moved since the last
/// assignment loosen the bounds; a sample is re-scanned only when the
/// triangle inequality cannot certify its cell.
struct Bounds {
    cell: Vec<u32>,
    lower: Vec<f64>,
    /// Coordinates at the last assignment.
    anchor: Vec<f64>,
}

impl Bounds {
    fn new(n_samples: usize) -> Self {
        Self { cell: vec![u32::MAX; n_samples], lower: vec![0.0; n_samples], anchor: Vec::new() }
    }
}

fn assign(coords: &[f64], d: usize, samples: &[f64], bounds: &mut Bounds) -> Vec<Partial> {
    let n = coords.len() / d;
    let moved: Vec<f64> = if bounds.anchor.len() == coords.len() {
        coords
            .chunks_exact(d)
            .zip(bounds.anchor.chunks_exact(d))
            .map(|(a, b)| dist2(a, b).sqrt())
            .collect()
    } else {
        vec![f64::INFINITY; n]
    };
    let mut top = (0usize, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (i, &m) in moved.iter().enumerate() {
        if m > top.1 {
            top = (i, m, top.1);
        } else if m > top.2 {
            top.2 = m;
        }
    }
    // half the distance from each point to its closest neighbour
    let half_gap: Vec<f64> = (0..n)
        .map(|i| {
            let c = &coords[i * d..(i + 1) * d];
            let m = (0..n)
                .filter(|&j| j != i)
                .map(|j| dist2(c, &coords[j * d..(j + 1) * d]))
                .fold(f64::INFINITY, f64::min);
            0.5 * m.sqrt()
        })
        .collect();
    let parts = samples
        .par_chunks(CHUNK * d)
        .zip(bounds.cell.par_chunks_mut(CHUNK))
        .zip(bounds.lower.par_chunks_mut(CHUNK))
        .enumerate()
        .map(|(c, ((chunk, cells), lower))| {
            let mut p = Partial::new(n, d);
            for (k, x) in chunk.chunks_exact(d).enumerate() {
                let mut hit = None;
                let a = cells[k] as usize;
                if a < n {
                    lower[k] -= if a == top.0 { top.2 } else { top.1 };
                    let d2 = dist2(&coords[a * d..(a + 1) * d], x);
                    let certified = lower[k].max(half_gap[a]) * (1.0 - BOUND_MARGIN);
                    if d2.sqrt() < certified {
                        hit = Some((a, d2));
                    }
                }
                let (i, d2) = hit.unwrap_or_else(|| {
                    let (i, d2, second) = nearest2(coords, d, x);
                    cells[k] = i as u32;
                    lower[k] = second.sqrt();
                    (i, d2)
                });
                p.counts[i] += 1;
                for (s, v) in p.sums[i * d..(i + 1) * d].iter_mut().zip(x) {
                    *s += v;
                }
                p.sq += d2;
                if d2 > p.far.0 {
                    p.far = (d2, c * CHUNK + k);
                }
            }
            p
        })
        .collect();
    bounds.anchor = coords.to_vec();
    parts
}

fn draw_samples(d: usize, n_samples: usize, seed: u64) -> Vec<f64> {
    let mut out = vec![0.0; n_samples * d];
    out.par_chunks_mut(2 * d).enumerate().for_each(|(k, pair)| {
        let (a, b) = pair.split_at_mut(d.min(pair.len()));
        SampleStream::new(seed, k as u64).fill_normal(a);
        for (y, x) in b.iter_mut().zip(a.iter()) {
            *y = -x;
        }
    });
    out
}

/// Deterministic k-means++ seeding on a prefix of the sample cloud.
fn seed_points(samples: &[f64], d: usize, n: usize, seed: u64) -> Vec<f64> {
    let m = (samples.len() / d).min(64 * n).max(n);
    let pool = &samples[..m * d];
    let mut rng = SampleStream::new(seed, SEEDING_STREAM);
    let mut coords = Vec::with_capacity(n * d);
    let first = ((rng.uniform() * m as f64) as usize).min(m - 1);
    coords.extend_from_slice(&pool[first * d..(first + 1) * d]);
    let mut dist: Vec<f64> = pool
        .chunks_exact(d)
        .map(|x| x.iter().zip(&coords).map(|(a, b)| (a - b) * (a - b)).sum())
        .collect();
    for _ in 1..n {
        let total: f64 = dist.iter().sum();
        let chosen = if total > 0.0 {
            let target = rng.uniform() * total;
            let mut acc = 0.0;
            let mut idx = m - 1;
            for (j, &w) in dist.iter().enumerate() {
                acc += w;
                if acc >= target && w > 0.0 {
                    idx = j;
                    break;
                }
            }
            idx
        } else {
            ((rng.uniform() * m as f64) as usize).min(m - 1)
        };
        let c = &pool[chosen * d..(chosen + 1) * d];
        coords.extend_from_slice(c);
        for (dj, x) in dist.iter_mut().zip(pool.chunks_exact(d)) {
            let d2: f64 = x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
            if d2 < *dj {
                *dj = d2;
            }
        }
    }
    coords
}

struct Merged {
    counts: Vec<u64>,
    sums: Vec<f64>,
    distortion: f64,
    /// Farthest sample of every chunk, largest distance first.
    far: Vec<usize>,
}

fn merge(parts: Vec<Partial>, n: usize, d: usize, n_samples: usize) -> Merged {
    let mut counts = vec![0u64; n];
    let mut sums = vec![0.0; n * d];
    let mut sq = 0.0;
    let mut far: Vec<(f64, usize)> = Vec::with_capacity(parts.len());
    for p in parts {
        counts.iter_mut().zip(&p.counts).for_each(|(a, b)| *a += b);
        sums.iter_mut().zip(&p.sums).for_each(|(a, b)| *a += b);
        sq += p.sq;
        far.push(p.far);
    }
    far.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    Merged {
        counts,
        sums,
        distortion: sq / n_samples as f64,
        far: far.into_iter().map(|f| f.1).collect(),
    }
}

/// Moves empty cells onto the farthest samples; returns how many moved.
fn reseed_empty(coords: &mut [f64], merged: &Merged, samples: &[f64], d: usize) -> usize {
    let mut resets = 0;
    let mut candidates = merged.far.iter();
    for (i, &c) in merged.counts.iter().enumerate() {
        if c == 0 {
            if let Some(&j) = candidates.next() {
                coords[i * d..(i + 1) * d].copy_from_slice(&samples[j * d..(j + 1) * d]);
                resets += 1;
            }
        }
    }
    resets
}

/// Builds an `n`-point quantizer of N(0, I_d) with `sweeps` Lloyd updates on
/// `n_samples` seeded draws. Stops early once an update leaves every point
/// unchanged.
pub fn build_grid_nd(
    d: usize,
    n: usize,
    n_samples: usize,
    seed: u64,
    sweeps: usize,
) -> Result<GridND> {
    if d == 0 || n == 0 {
        return Err(Error::InvalidArgument("dimension and grid size must be positive".into()));
    }
    if n_samples < n {
        return Err(Error::InvalidArgument(format!(
            "need at least as many samples ({n_samples}) as grid points ({n})"
        )));
    }
    let samples = draw_samples(d, n_samples, seed);
    let mut bounds = Bounds::new(n_samples);
    let mut coords = seed_points(&samples, d, n, seed);
    let mut resets = 0;
    let mut sweep_distortions = Vec::with_capacity(sweeps);
    for _ in 0..sweeps {
        let merged = merge(assign(&coords, d, &samples, &mut bounds), n, d, n_samples);
        sweep_distortions.push(merged.distortion);
        let previous = coords.clone();
        for i in 0..n {
            if merged.counts[i] > 0 {
                let inv = 1.0 / merged.counts[i] as f64;
                for k in 0..d {
                    coords[i * d + k] = merged.sums[i * d + k] * inv;
                }
            }
        }
        resets += reseed_empty(&mut coords, &merged, &samples, d);
        if coords == previous {
            // exact fixed point of the empirical Lloyd map
            break;
        }
    }
    // final assignment fixes the weights; retry a few times if a cell is empty
    let mut merged = merge(assign(&coords, d, &samples, &mut bounds), n, d, n_samples);
    let mut guard = 0;
    while merged.counts.contains(&0) {
        if guard == 8 {
            return Err(Error::InvalidArgument(
                "grid keeps empty cells; increase n_samples".into(),
            ));
        }
        resets += reseed_empty(&mut coords, &merged, &samples, d);
        merged = merge(assign(&coords, d, &samples, &mut bounds), n, d, n_samples);
        guard += 1;
    }
    let weights = merged.counts.iter().map(|&c| c as f64 / n_samples as f64).collect();
    Ok(GridND {
        dim: d,
        coords,
        weights,
        distortion2_estimate: merged.distortion,
        build_seed: seed,
        resets,
        sweep_distortions,
    })
}

impl GridND {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    /// Index of the nearest grid point (exhaustive scan, lowest index on ties).
    pub fn nearest_cell(&self, x: &[f64]) -> Result<usize> {
        if x.len() != self.dim {
            return Err(Error::Shape(format!("point of dim {} for grid of dim {}", x.len(), self.dim)));
        }
        Ok(nearest(&self.coords, self.dim, x).0)
    }

    /// Cache text: `d N seed`, then one `w x₁ … x_d` line per point.
    pub fn to_cache_string(&self) -> String {
        let mut s = format!("{} {} {}\n", self.dim, self.len(), self.build_seed);
        for (w, p) in self.weights.iter().zip(self.points()) {
            write!(s, "{w:.16e}").unwrap();
            for x in p {
                write!(s, " {x:.16e}").unwrap();
            }
            s.push('\n');
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
        let bad = || Error::Cache(format!("bad grid header {header:?}"));
        if header.len() != 3 {
            return Err(bad());
        }
        let dim: usize = header[0].parse().map_err(|_| bad())?;
        let n: usize = header[1].parse().map_err(|_| bad())?;
        let seed: u64 = header[2].parse().map_err(|_| bad())?;
        let mut coords = Vec::with_capacity(n * dim);
        let mut weights = Vec::with_capacity(n);
        for line in lines.take(n) {
            let v = parse_floats(line)?;
            if v.len() != dim + 1 {
                return Err(Error::Cache(format!("expected {} numbers per line", dim + 1)));
            }
            weights.push(v[0]);
            coords.extend_from_slice(&v[1..]);
        }
        if weights.len() != n {
            return Err(Error::Cache(format!("expected {n} points, found {}", weights.len())));
        }
        Ok(Self {
            dim,
            coords,
            weights,
            distortion2_estimate: f64::NAN,
            build_seed: seed,
            resets: 0,
            sweep_distortions: Vec::new(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quant1d;

    #[test]
    fn single_point_is_the_origin() {
        let n_samples = 200_000;
        for d in [1, 3] {
            let g = build_grid_nd(d, 1, n_samples, 5, 3).unwrap();
            let norm: f64 = g.point(0).iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!(norm <= 3.0 / (n_samples as f64).sqrt() * (d as f64).sqrt());
            assert_eq!(g.weights, vec![1.0]);
        }
    }

    #[test]
    fn one_dimensional_grid_matches_the_deterministic_optimum() {
        let g = build_grid_nd(1, 8, 1_000_000, 11, 2000).unwrap();
        let mut pts: Vec<f64> = g.coords.clone();
        pts.sort_by(f64::total_cmp);
        let exact = quant1d::optimal_grid(8).unwrap();
        for (a, b) in pts.iter().zip(&exact.points) {
            assert!((a - b).abs() < 5e-3, "{pts:?} vs {:?}", exact.points);
        }
    }

    #[test]
    fn weights_and_distinct_points() {
        let g = build_grid_nd(2, 50, 100_000, 3, 10).unwrap();
        assert!((g.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(g.weights.iter().all(|&w| w > 0.0));
        for i in 0..g.len() {
            for j in 0..i {
                assert_ne!(g.point(i), g.point(j));
            }
        }
    }

    #[test]
    fn sweeps_never_increase_distortion() {
        let g = build_grid_nd(3, 40, 50_000, 8, 15).unwrap();
        for w in g.sweep_distortions.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12), "{:?}", g.sweep_distortions);
        }
        assert!(g.distortion2_estimate <= *g.sweep_distortions.last().unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn nearest_cell_agrees_with_linear_scan() {
        let g = build_grid_nd(3, 30, 20_000, 1, 5).unwrap();
        let mut s = SampleStream::new(77, 0);
        for _ in 0..2000 {
            let x = [s.normal(), s.normal(), s.normal()];
            let mut best = (0, f64::INFINITY);
            for (i, p) in g.points().enumerate() {
                let d2: f64 = p.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum();
                if d2 < best.1 {
                    best = (i, d2);
                }
            }
            assert_eq!(g.nearest_cell(&x).unwrap(), best.0);
        }
        for i in 0..g.len() {
            assert_eq!(g.nearest_cell(g.point(i)).unwrap(), i);
        }
        assert!(g.nearest_cell(&[0.0]).is_err());
    }

    #[test]
    fn bounded_assignment_matches_exhaustive_scan() {
        let (d, n, m) = (3, 40, 5000);
        let samples = draw_samples(d, m, 9);
        let mut coords = seed_points(&samples, d, n, 9);
        let mut bounds = Bounds::new(m);
        for sweep in 0..6 {
            assign(&coords, d, &samples, &mut bounds);
            for (k, x) in samples.chunks_exact(d).enumerate() {
                assert_eq!(bounds.cell[k] as usize, nearest(&coords, d, x).0, "sweep {sweep}");
            }
            // small moves, then one large jump
            let step = if sweep == 3 { 0.8 } else { 0.01 };
            for (i, c) in coords.iter_mut().enumerate() {
                *c += step * ((i * 7919 % 13) as f64 / 13.0 - 0.5);
            }
        }
        // exact ties, including duplicated first coordinates
        let coords = [0.0, 1.0, 0.0, -1.0, 1.0, 0.0, -1.0, 0.0];
        for x in [[0.0, 0.0], [0.5, 0.5], [-0.5, 0.0], [0.0, 2.0]] {
            assert_eq!(nearest2(&coords, 2, &x).0, nearest(&coords, 2, &x).0, "{x:?}");
        }
    }

    #[test]
    fn nearest_cell_tie_goes_to_lowest_index() {
        let g = GridND {
            dim: 1,
            coords: vec![-1.0, 1.0],
            weights: vec![0.5, 0.5],
            distortion2_estimate: f64::NAN,
            build_seed: 0,
            resets: 0,
            sweep_distortions: vec![],
        };
        assert_eq!(g.nearest_cell(&[0.0]).unwrap(), 0);
    }

    #[test]
    fn deterministic_given_seed() {
        let a = build_grid_nd(2, 20, 30_000, 9, 4).unwrap();
        let b = build_grid_nd(2, 20, 30_000, 9, 4).unwrap();
        assert_eq!(a, b);
        let c = build_grid_nd(2, 20, 30_000, 10, 4).unwrap();
        assert_ne!(a.coords, c.coords);
    }

    #[test]
    fn cache_round_trip() {
        let g = build_grid_nd(2, 10, 5_000, 4, 3).unwrap();
        let text = g.to_cache_string();
        let back = GridND::from_cache_str(&text).unwrap();
        assert_eq!(back.coords, g.coords);
        assert_eq!(back.weights, g.weights);
        assert_eq!(back.build_seed, 4);
        assert_eq!(back.to_cache_string(), text);
    }
}
