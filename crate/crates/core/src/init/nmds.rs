//! Nonmetric multidimensional scaling by SMACOF with monotone regression.
//!
//! Disparities are the isotonic regression of configuration distances on
//! the dissimilarity order (tied dissimilarities may be untied), rescaled
//! so that their sum of squares equals the number of pairs. Reported
//! stress is Kruskal's stress-1, sqrt(Σ (d − d̂)² / Σ d²).

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::dissimilarity::{euclidean, DissimilarityMatrix};
use crate::error::{Result, SlpmError};

pub const MAX_ITERATIONS: usize = 300;
pub const RELATIVE_TOLERANCE: f64 = 1e-6;

/// Configuration returned by [`nonmetric_mds`].
#[derive(Debug, Clone, PartialEq)]
pub struct MdsResult {
    /// Row-major `points × dims` coordinates.
    pub coords: Vec<f64>,
    pub dims: usize,
    pub stress: f64,
    /// Stress-1 of the starting configuration and after each iteration.
    pub stress_trace: Vec<f64>,
    pub iterations: usize,
    /// All off-diagonal dissimilarities were equal; the classical
    /// configuration was returned unchanged.
    pub degenerate: bool,
}

/// Pairs (i < j) sorted by dissimilarity, with tie-block boundaries.
struct PairOrder {
    pairs: Vec<(usize, usize)>,
    /// Start offsets of runs of equal dissimilarity, plus a final sentinel.
    blocks: Vec<usize>,
}

impl PairOrder {
    fn new(d: &DissimilarityMatrix) -> Self {
        let n = d.size();
        let mut pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        pairs.sort_by(|a, b| d.get(a.0, a.1).total_cmp(&d.get(b.0, b.1)));
        let mut blocks = vec![0];
        for p in 1..pairs.len() {
            if d.get(pairs[p].0, pairs[p].1) != d.get(pairs[p - 1].0, pairs[p - 1].1) {
                blocks.push(p);
            }
        }
        blocks.push(pairs.len());
        Self { pairs, blocks }
    }
}

/// Pool-adjacent-violators: least-squares nondecreasing fit with unit weights.
pub(crate) fn isotonic_regression(y: &[f64]) -> Vec<f64> {
    // (mean, count)
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(y.len());
    for &v in y {
        blocks.push((v, 1));
        while blocks.len() >= 2 {
            let (m2, c2) = blocks[blocks.len() - 1];
            let (m1, c1) = blocks[blocks.len() - 2];
            if m1 <= m2 {
                break;
            }
            blocks.pop();
            let c = c1 + c2;
            *blocks.last_mut().unwrap() = ((m1 * c1 as f64 + m2 * c2 as f64) / c as f64, c);
        }
    }
    let mut out = Vec::with_capacity(y.len());
    for (mean, count) in blocks {
        out.extend(std::iter::repeat_n(mean, count));
    }
    out
}

fn distances(coords: &[f64], n: usize, dims: usize) -> Vec<f64> {
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let v = euclidean(&coords[i * dims..(i + 1) * dims], &coords[j * dims..(j + 1) * dims]);
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    d
}

/// Disparities for the distances `dist`, rescaled so their sum of squares
/// equals the number of pairs (full n×n, symmetric), and Kruskal stress-1
/// sqrt(Σ (d − d̂)² / Σ d²) with the unscaled monotone fit d̂.
fn disparities(order: &PairOrder, dist: &[f64], n: usize) -> (Vec<f64>, f64) {
    let mut sequence: Vec<(usize, usize)> = Vec::with_capacity(order.pairs.len());
    for w in order.blocks.windows(2) {
        let mut block = order.pairs[w[0]..w[1]].to_vec();
        block.sort_by(|a, b| dist[a.0 * n + a.1].total_cmp(&dist[b.0 * n + b.1]));
        sequence.extend(block);
    }
    let y: Vec<f64> = sequence.iter().map(|&(i, j)| dist[i * n + j]).collect();
    let fitted = isotonic_regression(&y);
    let resid: f64 = y.iter().zip(&fitted).map(|(d, f)| (d - f).powi(2)).sum();
    let dist_sq: f64 = y.iter().map(|d| d * d).sum();
    let sum_sq: f64 = fitted.iter().map(|v| v * v).sum();
    let scale = if sum_sq > 0.0 { (sequence.len() as f64 / sum_sq).sqrt() } else { 0.0 };
    let mut dhat = vec![0.0; n * n];
    for (&(i, j), &f) in sequence.iter().zip(&fitted) {
        dhat[i * n + j] = f * scale;
        dhat[j * n + i] = f * scale;
    }
    let stress = if dist_sq > 0.0 { (resid / dist_sq).sqrt() } else { 1.0 };
    (dhat, stress)
}

/// Kruskal stress-1 of a configuration against `d`, using the optimal
/// monotone disparities. Invariant under rigid motions and scaling of
/// `coords`.
pub fn stress1(d: &DissimilarityMatrix, coords: &[f64], dims: usize) -> f64 {
    let n = d.size();
    if n < 2 {
        return 0.0;
    }
    let order = PairOrder::new(d);
    disparities(&order, &distances(coords, n, dims), n).1
}

/// Torgerson scaling. Dimensions without a positive eigenvalue are filled
/// with small seeded noise so later iterations can use them.
pub fn classical_mds(d: &DissimilarityMatrix, dims: usize, seed: u64) -> Vec<f64> {
    let n = d.size();
    let sq = DMatrix::from_fn(n, n, |i, j| d.get(i, j).powi(2));
    let row_means: Vec<f64> = (0..n).map(|i| sq.row(i).sum() / n as f64).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    let b = DMatrix::from_fn(n, n, |i, j| -0.5 * (sq[(i, j)] - row_means[i] - row_means[j] + grand));
    let eig = SymmetricEigen::new(b);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let top = eig.eigenvalues[idx[0]].max(0.0);

    let mut coords = vec![0.0; n * dims];
    let mut filled = 0;
    for (c, &e) in idx.iter().take(dims).enumerate() {
        let lambda = eig.eigenvalues[e];
        if lambda > 1e-10 * top && lambda > 0.0 {
            let s = lambda.sqrt();
            // Fix the sign so the largest-magnitude entry is positive.
            let col = eig.eigenvectors.column(e);
            let pivot = col.iter().copied().fold(0.0f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
            let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
            for i in 0..n {
                coords[i * dims + c] = sign * col[i] * s;
            }
            filled += 1;
        }
    }
    if filled < dims {
        let rms = if filled > 0 {
            (coords.iter().map(|v| v * v).sum::<f64>() / (n * filled) as f64).sqrt()
        } else {
            1.0
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for c in filled..dims {
            for i in 0..n {
                let z: f64 = StandardNormal.sample(&mut rng);
                coords[i * dims + c] = 1e-2 * rms * z;
            }
        }
    }
    coords
}

fn guttman_transform(coords: &[f64], dist: &[f64], dhat: &[f64], n: usize, dims: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * dims];
    for i in 0..n {
        let xi = &coords[i * dims..(i + 1) * dims];
        let oi = &mut out[i * dims..(i + 1) * dims];
        for j in 0..n {
            let dij = dist[i * n + j];
            if j == i || dij <= 0.0 {
                continue;
            }
            let w = dhat[i * n + j] / dij;
            let xj = &coords[j * dims..(j + 1) * dims];
            for c in 0..dims {
                oi[c] += w * (xi[c] - xj[c]);
            }
        }
        for v in oi.iter_mut() {
            *v /= n as f64;
        }
    }
    out
}

/// Multiplies `coords` by the factor that best matches its distances to
/// the dissimilarities in least squares.
fn match_scale(d: &DissimilarityMatrix, coords: &mut [f64], dims: usize) {
    let n = d.size();
    let dist = distances(coords, n, dims);
    let (mut cross, mut sq) = (0.0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            cross += dist[i * n + j] * d.get(i, j);
            sq += dist[i * n + j].powi(2);
        }
    }
    if sq > 0.0 && cross > 0.0 {
        let s = cross / sq;
        coords.iter_mut().for_each(|x| *x *= s);
    }
}

/// Nonmetric MDS of `d` into `dims` dimensions, warm-started from
/// classical scaling. Runs at most 300 iterations and stops when stress-1
/// changes by less than 1e-6 relative. The returned configuration is
/// scaled so its distances match the dissimilarities in least squares.
pub fn nonmetric_mds(d: &DissimilarityMatrix, dims: usize, seed: u64) -> Result<MdsResult> {
    if dims == 0 {
        return Err(SlpmError::InvalidParameter("MDS needs at least one dimension".into()));
    }
    let n = d.size();
    if n == 0 {
        return Err(SlpmError::Dimension("empty dissimilarity matrix".into()));
    }
    let mut coords = classical_mds(d, dims, seed);
    let order = PairOrder::new(d);
    if order.blocks.len() <= 2 {
        // Zero or one distinct off-diagonal value: ranks carry no information.
        let stress = stress1(d, &coords, dims);
        return Ok(MdsResult {
            coords,
            dims,
            stress,
            stress_trace: vec![stress],
            iterations: 0,
            degenerate: true,
        });
    }

    let mut dist = distances(&coords, n, dims);
    let (mut dhat, mut stress) = disparities(&order, &dist, n);
    let mut trace = vec![stress];
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS && stress > 1e-12 {
        let next = guttman_transform(&coords, &dist, &dhat, n, dims);
        let next_dist = distances(&next, n, dims);
        let (next_dhat, next_stress) = disparities(&order, &next_dist, n);
        if next_stress > stress {
            // Normalized raw stress still fell but stress-1 did not; keep the
            // better configuration.
            break;
        }
        iterations += 1;
        let change = (stress - next_stress) / stress;
        coords = next;
        dist = next_dist;
        dhat = next_dhat;
        stress = next_stress;
        trace.push(stress);
        if change < RELATIVE_TOLERANCE {
            break;
        }
    }
    match_scale(d, &mut coords, dims);
    Ok(MdsResult {
        coords,
        dims,
        stress,
        stress_trace: trace,
        iterations,
        degenerate: false,
    })
}
