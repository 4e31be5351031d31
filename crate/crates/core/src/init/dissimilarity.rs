use crate::error::Result;
use crate::model::WeightMatrix;
use crate::par;

/// How the sender/receiver cross blocks of the dissimilarity matrix are
/// filled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CrossBlock {
    /// Elementwise reciprocal of X + ε: heavy edges mean close nodes.
    #[default]
    Reciprocal,
    /// X + ε as written.
    Raw,
}

/// Symmetric (M+N)×(M+N) dissimilarity matrix over all senders followed by
/// all receivers.
#[derive(Debug, Clone, PartialEq)]
pub struct DissimilarityMatrix {
    size: usize,
    values: Vec<f64>,
    /// Constant added to every weight before building the matrix.
    pub epsilon: f64,
}

impl DissimilarityMatrix {
    /// Wraps a full row-major matrix. The diagonal is forced to zero.
    pub fn from_full(size: usize, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != size * size {
            return Err(crate::SlpmError::Dimension(format!(
                "expected {} entries for a {size}x{size} matrix, got {}",
                size * size,
                values.len()
            )));
        }
        for i in 0..size {
            values[i * size + i] = 0.0;
            for j in 0..i {
                let (a, b) = (values[i * size + j], values[j * size + i]);
                if !(a.is_finite() && a >= 0.0) || a != b {
                    return Err(crate::SlpmError::InvalidParameter(format!(
                        "dissimilarities must be finite, nonnegative and symmetric; ({i}, {j}) = {a} vs {b}"
                    )));
                }
            }
        }
        Ok(Self { size, values, epsilon: 0.0 })
    }

    /// Dissimilarities from Euclidean distances between row-major points.
    pub fn from_points(points: &[f64], dims: usize) -> Result<Self> {
        let n = points.len() / dims;
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                values[i * n + j] = euclidean(&points[i * dims..(i + 1) * dims], &points[j * dims..(j + 1) * dims]);
            }
        }
        Self::from_full(n, values)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.size + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Builds the block dissimilarity matrix
///
/// ```text
/// [ D_U      C  ]
/// [ C'      D_V ]
/// ```
///
/// where, with X̃ = X + ε, D_U and D_V are the elementwise reciprocals of
/// S_U = sqrt.(X̃X̃'/N) and S_V = sqrt.(X̃'X̃/M), C is given by `cross`,
/// and the diagonal is zero. Unobserved entries count as zero weight.
pub fn dissimilarity_matrix(data: &WeightMatrix, epsilon: f64, cross: CrossBlock) -> Result<DissimilarityMatrix> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(crate::SlpmError::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
    }
    let (m, n) = (data.rows(), data.cols());
    let shifted: Vec<f64> = (0..m * n)
        .map(|idx| {
            let (i, j) = (idx / n, idx % n);
            let x = if data.is_observed(i, j) { data.get(i, j) } else { 0.0 };
            x + epsilon
        })
        .collect();
    let size = m + n;

    let sender_rows = par::map_indexed(m, |i| {
        (0..m)
            .map(|r| {
                let dot: f64 = (0..n).map(|j| shifted[i * n + j] * shifted[r * n + j]).sum();
                1.0 / (dot / n as f64).sqrt()
            })
            .collect::<Vec<_>>()
    });
    let receiver_rows = par::map_indexed(n, |j| {
        (0..n)
            .map(|c| {
                let dot: f64 = (0..m).map(|i| shifted[i * n + j] * shifted[i * n + c]).sum();
                1.0 / (dot / m as f64).sqrt()
            })
            .collect::<Vec<_>>()
    });

    let cross_value = |x: f64| match cross {
        CrossBlock::Reciprocal => 1.0 / x,
        CrossBlock::Raw => x,
    };
    let mut values = vec![0.0; size * size];
    for i in 0..m {
        values[i * size..i * size + m].copy_from_slice(&sender_rows[i]);
        for j in 0..n {
            let c = cross_value(shifted[i * n + j]);
            values[i * size + m + j] = c;
            values[(m + j) * size + i] = c;
        }
    }
    for j in 0..n {
        values[(m + j) * size + m..(m + j + 1) * size].copy_from_slice(&receiver_rows[j]);
    }
    for i in 0..size {
        values[i * size + i] = 0.0;
    }
    // Gram products are symmetric in exact arithmetic; make them bitwise so.
    for i in 0..size {
        for j in 0..i {
            values[i * size + j] = values[j * size + i];
        }
    }
    Ok(DissimilarityMatrix { size, values, epsilon })
}
