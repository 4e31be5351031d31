//! Post-fit evaluation: reconstruction, loss, dimension counts and
//! plot-ready distribution summaries.

use std::fmt::Write as _;

use crate::error::{Result, SlpmError};
use crate::inference::updates::responsibility_mass;
use crate::inference::fit::sorted_mixing;
use crate::model::{EdgeMoments, Side, VariationalState, WeightMatrix};

/// Absolute errors below this are clamped before taking logs.
pub const LOSS_FLOOR: f64 = 1e-12;

/// Plug-in reconstruction x̂_ij = Σ_k λ̃_ijk / η̃_ijk for every entry.
pub fn reconstruct(state: &VariationalState) -> Result<WeightMatrix> {
    let (m, n, _) = state.dims();
    let mut values = Vec::with_capacity(m * n);
    for i in 0..m {
        for j in 0..n {
            let resp = state.edge_responsibilities(i, j);
            let mut x = 0.0;
            for (c, &r) in resp.iter().enumerate() {
                let gap = state.alpha(Side::Sender, i, c) - state.alpha(Side::Receiver, j, c);
                let var = state.beta(Side::Sender, i, c) + state.beta(Side::Receiver, j, c);
                x += r / EdgeMoments::from_gap(gap, var).eta;
            }
            values.push(x);
        }
    }
    WeightMatrix::new(m, n, values)
}

/// Mean over entries observed in `x` of ln max(|x − x̂|, 1e-12).
pub fn log_abs_loss(x: &WeightMatrix, xhat: &WeightMatrix) -> Result<f64> {
    if x.rows() != xhat.rows() || x.cols() != xhat.cols() {
        return Err(SlpmError::Dimension(format!(
            "loss between {}x{} and {}x{} matrices",
            x.rows(),
            x.cols(),
            xhat.rows(),
            xhat.cols()
        )));
    }
    let mut total = 0.0;
    for i in 0..x.rows() {
        for j in 0..x.cols() {
            if !x.is_observed(i, j) {
                continue;
            }
            if !xhat.is_observed(i, j) {
                return Err(SlpmError::Dimension(format!("prediction for observed entry ({i}, {j}) is masked")));
            }
            total += (x.get(i, j) - xhat.get(i, j)).abs().max(LOSS_FLOOR).ln();
        }
    }
    Ok(total / x.observed_count() as f64)
}

/// Constant matrix holding the mean observed weight of `x`.
pub fn global_mean_predictor(x: &WeightMatrix) -> Result<WeightMatrix> {
    let mean = x.observed_values().sum::<f64>() / x.observed_count() as f64;
    WeightMatrix::new(x.rows(), x.cols(), vec![mean; x.rows() * x.cols()])
}

#[derive(Debug, Clone, PartialEq)]
pub struct DimensionEstimate {
    /// Components carrying any responsibility mass.
    pub k_strict: usize,
    /// Components whose proportion exceeds the threshold.
    pub k_tau: usize,
    pub sorted_mixing: Vec<f64>,
    /// Component index of each entry of `sorted_mixing`.
    pub order: Vec<usize>,
}

/// Mixing proportions Σ_ij λ̃_ijk / |observed| over observed edges, and the
/// number of components that are nonempty or exceed `tau`.
pub fn estimate_dimensions(state: &VariationalState, data: &WeightMatrix, tau: f64) -> Result<DimensionEstimate> {
    if state.dims().0 != data.rows() || state.dims().1 != data.cols() {
        return Err(SlpmError::Dimension("state and data shapes differ".into()));
    }
    let mass = responsibility_mass(state, data);
    let count = data.observed_count() as f64;
    let proportions: Vec<f64> = mass.iter().map(|m| m / count).collect();
    let (sorted, order) = sorted_mixing(&proportions);
    Ok(DimensionEstimate {
        k_strict: mass.iter().filter(|&&m| m > 0.0).count(),
        k_tau: proportions.iter().filter(|&&p| p > tau).count(),
        sorted_mixing: sorted,
        order,
    })
}

/// Sample variance of each component's position means, pooling senders
/// and receivers.
pub fn pooled_position_variance(state: &VariationalState) -> Vec<f64> {
    let (m, n, k) = state.dims();
    (0..k)
        .map(|c| {
            let values: Vec<f64> = (0..m)
                .map(|i| state.alpha(Side::Sender, i, c))
                .chain((0..n).map(|j| state.alpha(Side::Receiver, j, c)))
                .collect();
            let len = values.len() as f64;
            let mean = values.iter().sum::<f64>() / len;
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (len - 1.0).max(1.0)
        })
        .collect()
}

/// Log-spaced histogram of positive values.
#[derive(Debug, Clone, PartialEq)]
pub struct LogHistogram {
    /// Bin edges in log10 units (bins + 1 entries).
    pub log10_edges: Vec<f64>,
    pub counts: Vec<usize>,
    /// Values equal to zero, excluded from the bins.
    pub zeros: usize,
}

impl LogHistogram {
    pub fn new(values: &[f64], bins: usize) -> Self {
        let bins = bins.max(1);
        let positive: Vec<f64> = values.iter().copied().filter(|&v| v > 0.0).collect();
        let zeros = values.len() - positive.len();
        if positive.is_empty() {
            return Self { log10_edges: Vec::new(), counts: Vec::new(), zeros };
        }
        let lo = positive.iter().copied().fold(f64::INFINITY, f64::min).log10();
        let hi = positive.iter().copied().fold(f64::NEG_INFINITY, f64::max).log10();
        if hi <= lo {
            return Self { log10_edges: vec![lo - 0.5, lo + 0.5], counts: vec![positive.len()], zeros };
        }
        let width = (hi - lo) / bins as f64;
        let log10_edges = (0..=bins).map(|b| lo + width * b as f64).collect();
        let mut counts = vec![0; bins];
        for v in positive {
            let b = (((v.log10() - lo) / width) as usize).min(bins - 1);
            counts[b] += 1;
        }
        Self { log10_edges, counts, zeros }
    }

    pub fn positive_count(&self) -> usize {
        self.counts.iter().sum()
    }

    /// (log10 bin centre, log10 relative frequency) for occupied bins.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let total = self.positive_count() as f64;
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(b, &c)| {
                let centre = 0.5 * (self.log10_edges[b] + self.log10_edges[b + 1]);
                (centre, (c as f64 / total).log10())
            })
            .collect()
    }

    /// Tab-separated table with a header line.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("log10_centre\tlog10_frequency\tcount\n");
        let total = self.positive_count() as f64;
        for (b, &c) in self.counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let centre = 0.5 * (self.log10_edges[b] + self.log10_edges[b + 1]);
            let _ = writeln!(out, "{:.16e}\t{:.16e}\t{}", centre, (c as f64 / total).log10(), c);
        }
        out
    }
}

/// Weight and row-sum (weighted out-degree) histograms of a network.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionSummary {
    pub weights: LogHistogram,
    pub degrees: LogHistogram,
}

pub const DEFAULT_BINS: usize = 30;

/// Histograms over observed weights and over row sums of observed weights.
pub fn distribution_summaries(x: &WeightMatrix, bins: usize) -> DistributionSummary {
    let weights: Vec<f64> = x.observed_values().collect();
    DistributionSummary {
        weights: LogHistogram::new(&weights, bins),
        degrees: LogHistogram::new(&x.row_sums(), bins),
    }
}

/// Least-squares slope of ln S(x) against ln x, where S is the empirical
/// survival function, over the sample points with S in `[lo, hi]`.
/// `None` when fewer than two distinct points fall in the window.
pub fn survival_slope(values: &[f64], lo: f64, hi: f64) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|&x| x > 0.0).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    let n = v.len() as f64;
    let pts: Vec<(f64, f64)> = v
        .iter()
        .enumerate()
        .map(|(r, &x)| (x.ln(), ((r + 1) as f64 / n).ln()))
        .filter(|&(_, ls)| ls >= lo.ln() && ls <= hi.ln())
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let len = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / len;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / len;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
