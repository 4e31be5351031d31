//! Domain types of the sparse latent position model and the variational
//! free energy.

mod free_energy;
mod moments;

pub use free_energy::{free_energy, free_energy_node_delta, free_energy_terms, FreeEnergyTerms};
pub(crate) use free_energy::{edge_likelihood, gather_incident, node_local_objective, IncidentEdge, NodeObjective};
pub use moments::{edge_moments, expected_log_theta, EdgeMoments};

use crate::error::{Result, SlpmError};

/// Which latent position family a node belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    /// Row nodes, positions U.
    Sender,
    /// Column nodes, positions V.
    Receiver,
}

/// Observed nonnegative M×N weight matrix with an observation mask.
///
/// Values at masked entries are stored but never read by the model.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    observed: Vec<bool>,
    square_mode: bool,
    exclude_diagonal: bool,
}

impl WeightMatrix {
    /// Fully observed matrix from row-major values.
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        let observed = vec![true; values.len()];
        Self::with_mask(rows, cols, values, observed)
    }

    /// Matrix with an explicit observation mask (`true` = observed).
    pub fn with_mask(rows: usize, cols: usize, values: Vec<f64>, observed: Vec<bool>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(SlpmError::Dimension(format!("empty matrix {rows}x{cols}")));
        }
        if values.len() != rows * cols || observed.len() != rows * cols {
            return Err(SlpmError::Dimension(format!(
                "expected {} entries for {rows}x{cols}, got {} values and {} mask flags",
                rows * cols,
                values.len(),
                observed.len()
            )));
        }
        let m = Self {
            rows,
            cols,
            values,
            observed,
            square_mode: false,
            exclude_diagonal: false,
        };
        m.validate()?;
        Ok(m)
    }

    /// Builds a fully observed matrix from equal-length rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != cols) {
            return Err(SlpmError::Dimension(format!(
                "row {bad} has {} entries, expected {cols}",
                rows[bad].len()
            )));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    /// Marks the matrix as unipartite (rows and columns share labels),
    /// optionally masking out the diagonal.
    pub fn into_unipartite(mut self, exclude_diagonal: bool) -> Result<Self> {
        if self.rows != self.cols {
            return Err(SlpmError::Dimension(format!(
                "unipartite mode needs a square matrix, got {}x{}",
                self.rows, self.cols
            )));
        }
        self.square_mode = true;
        self.exclude_diagonal = exclude_diagonal;
        if exclude_diagonal {
            for i in 0..self.rows {
                self.observed[i * self.cols + i] = false;
            }
        }
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if self.exclude_diagonal && !(self.square_mode && self.rows == self.cols) {
            return Err(SlpmError::InvalidParameter(
                "diagonal exclusion requires a square unipartite matrix".into(),
            ));
        }
        let mut any = false;
        for (idx, (&x, &obs)) in self.values.iter().zip(&self.observed).enumerate() {
            if !obs {
                continue;
            }
            any = true;
            if !(x.is_finite() && x >= 0.0) {
                return Err(SlpmError::InvalidWeight {
                    row: idx / self.cols,
                    col: idx % self.cols,
                    value: x,
                });
            }
        }
        if !any {
            return Err(SlpmError::NoObservations);
        }
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    #[inline]
    pub fn is_observed(&self, i: usize, j: usize) -> bool {
        self.observed[i * self.cols + j]
    }

    /// Row-major values, including masked slots.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Row-major observation flags.
    pub fn mask(&self) -> &[bool] {
        &self.observed
    }

    pub fn observed_count(&self) -> usize {
        self.observed.iter().filter(|&&o| o).count()
    }

    pub fn is_square_mode(&self) -> bool {
        self.square_mode
    }

    pub fn excludes_diagonal(&self) -> bool {
        self.exclude_diagonal
    }

    /// Hides one entry from the model. Fails if it was the last observed one.
    pub fn mask_entry(&mut self, i: usize, j: usize) -> Result<()> {
        let idx = i * self.cols + j;
        let prev = self.observed[idx];
        self.observed[idx] = false;
        if self.observed_count() == 0 {
            self.observed[idx] = prev;
            return Err(SlpmError::NoObservations);
        }
        Ok(())
    }

    /// Sum over observed entries of each row (weighted out-degree).
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows)
            .map(|i| (0..self.cols).filter(|&j| self.is_observed(i, j)).map(|j| self.get(i, j)).sum())
            .collect()
    }

    /// Sum over observed entries of each column (weighted in-degree).
    pub fn col_sums(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|j| (0..self.rows).filter(|&i| self.is_observed(i, j)).map(|i| self.get(i, j)).sum())
            .collect()
    }

    /// Observed values in row-major order.
    pub fn observed_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.values
            .iter()
            .zip(&self.observed)
            .filter(|(_, &o)| o)
            .map(|(&x, _)| x)
    }
}

/// Prior constants: Dirichlet concentrations δ and Gamma shape/rate (a, b)
/// for each of the K components.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    pub delta: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl Hyperparams {
    pub const DEFAULT_DELTA: f64 = 0.001;
    pub const DEFAULT_A: f64 = 1.0;
    pub const DEFAULT_B: f64 = 1.0;

    pub fn new(delta: Vec<f64>, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        let k = delta.len();
        if k == 0 || a.len() != k || b.len() != k {
            return Err(SlpmError::Dimension(format!(
                "hyperparameter lengths differ or are empty: delta {}, a {}, b {}",
                k,
                a.len(),
                b.len()
            )));
        }
        for (name, v) in [("delta", &delta), ("a", &a), ("b", &b)] {
            if let Some(bad) = v.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
                return Err(SlpmError::InvalidParameter(format!("{name} must be positive, got {bad}")));
            }
        }
        Ok(Self { delta, a, b })
    }

    /// Same (δ, a, b) for every component.
    pub fn symmetric(k: usize, delta: f64, a: f64, b: f64) -> Result<Self> {
        Self::new(vec![delta; k], vec![a; k], vec![b; k])
    }

    /// δ = 0.001, a = b = 1.
    pub fn defaults(k: usize) -> Result<Self> {
        Self::symmetric(k, Self::DEFAULT_DELTA, Self::DEFAULT_A, Self::DEFAULT_B)
    }

    pub fn components(&self) -> usize {
        self.delta.len()
    }
}

/// All variational parameters of the mean-field family.
///
/// Layouts are row-major: `resp[(i * n + j) * k + c]`, `alpha_u[i * k + c]`,
/// `alpha_v[j * k + c]`, and the same for variances and learning rates.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationalState {
    m: usize,
    n: usize,
    k: usize,
    /// Edge responsibilities λ̃.
    pub resp: Vec<f64>,
    pub alpha_u: Vec<f64>,
    pub beta_u: Vec<f64>,
    pub alpha_v: Vec<f64>,
    pub beta_v: Vec<f64>,
    /// Dirichlet concentrations δ̃.
    pub dirichlet: Vec<f64>,
    /// Gamma shapes ã.
    pub gamma_shape: Vec<f64>,
    /// Gamma rates b̃.
    pub gamma_rate: Vec<f64>,
    /// Per-position learning rates for sender positions.
    pub step_u: Vec<f64>,
    /// Per-position learning rates for receiver positions.
    pub step_v: Vec<f64>,
}

impl VariationalState {
    /// Uniform responsibilities, zero means, unit variances and unit
    /// Dirichlet/Gamma parameters; learning rates set to `step0`.
    pub fn new(m: usize, n: usize, k: usize, step0: f64) -> Self {
        Self {
            m,
            n,
            k,
            resp: vec![1.0 / k as f64; m * n * k],
            alpha_u: vec![0.0; m * k],
            beta_u: vec![1.0; m * k],
            alpha_v: vec![0.0; n * k],
            beta_v: vec![1.0; n * k],
            dirichlet: vec![1.0; k],
            gamma_shape: vec![1.0; k],
            gamma_rate: vec![1.0; k],
            step_u: vec![step0; m * k],
            step_v: vec![step0; n * k],
        }
    }

    /// (M, N, K)
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.m, self.n, self.k)
    }

    pub fn components(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn resp_index(&self, i: usize, j: usize, c: usize) -> usize {
        (i * self.n + j) * self.k + c
    }

    #[inline]
    pub fn responsibility(&self, i: usize, j: usize, c: usize) -> f64 {
        self.resp[self.resp_index(i, j, c)]
    }

    /// Responsibilities of edge (i, j) over all components.
    pub fn edge_responsibilities(&self, i: usize, j: usize) -> &[f64] {
        let start = self.resp_index(i, j, 0);
        &self.resp[start..start + self.k]
    }

    pub fn nodes(&self, side: Side) -> usize {
        match side {
            Side::Sender => self.m,
            Side::Receiver => self.n,
        }
    }

    pub fn alphas(&self, side: Side) -> &[f64] {
        match side {
            Side::Sender => &self.alpha_u,
            Side::Receiver => &self.alpha_v,
        }
    }

    pub fn betas(&self, side: Side) -> &[f64] {
        match side {
            Side::Sender => &self.beta_u,
            Side::Receiver => &self.beta_v,
        }
    }

    #[inline]
    pub fn alpha(&self, side: Side, node: usize, c: usize) -> f64 {
        self.alphas(side)[node * self.k + c]
    }

    #[inline]
    pub fn beta(&self, side: Side, node: usize, c: usize) -> f64 {
        self.betas(side)[node * self.k + c]
    }

    pub fn set_position(&mut self, side: Side, node: usize, c: usize, alpha: f64, beta: f64) {
        let idx = node * self.k + c;
        match side {
            Side::Sender => {
                self.alpha_u[idx] = alpha;
                self.beta_u[idx] = beta;
            }
            Side::Receiver => {
                self.alpha_v[idx] = alpha;
                self.beta_v[idx] = beta;
            }
        }
    }

    #[inline]
    pub fn step(&self, side: Side, node: usize, c: usize) -> f64 {
        match side {
            Side::Sender => self.step_u[node * self.k + c],
            Side::Receiver => self.step_v[node * self.k + c],
        }
    }

    pub fn set_step(&mut self, side: Side, node: usize, c: usize, eps: f64) {
        match side {
            Side::Sender => self.step_u[node * self.k + c] = eps,
            Side::Receiver => self.step_v[node * self.k + c] = eps,
        }
    }

    /// S̃_c = Σ_i (β̃_Uic + α̃²_Uic) + Σ_j (β̃_Vjc + α̃²_Vjc).
    pub fn second_moment_sum(&self, c: usize) -> f64 {
        let k = self.k;
        let u: f64 = (0..self.m).map(|i| self.beta_u[i * k + c] + self.alpha_u[i * k + c].powi(2)).sum();
        let v: f64 = (0..self.n).map(|j| self.beta_v[j * k + c] + self.alpha_v[j * k + c].powi(2)).sum();
        u + v
    }

    /// Checks shapes against the data and hyperparameters.
    pub fn check_dims(&self, data: &WeightMatrix, hyper: &Hyperparams) -> Result<()> {
        if self.m != data.rows() || self.n != data.cols() {
            return Err(SlpmError::Dimension(format!(
                "state is {}x{}, data is {}x{}",
                self.m,
                self.n,
                data.rows(),
                data.cols()
            )));
        }
        if self.k != hyper.components() {
            return Err(SlpmError::Dimension(format!(
                "state has {} components, hyperparameters have {}",
                self.k,
                hyper.components()
            )));
        }
        let (m, n, k) = (self.m, self.n, self.k);
        let lens = [
            (self.resp.len(), m * n * k),
            (self.alpha_u.len(), m * k),
            (self.beta_u.len(), m * k),
            (self.step_u.len(), m * k),
            (self.alpha_v.len(), n * k),
            (self.beta_v.len(), n * k),
            (self.step_v.len(), n * k),
            (self.dirichlet.len(), k),
            (self.gamma_shape.len(), k),
            (self.gamma_rate.len(), k),
        ];
        if lens.iter().any(|(got, want)| got != want) {
            return Err(SlpmError::Dimension("state buffer lengths do not match (M, N, K)".into()));
        }
        Ok(())
    }

    /// Checks every structural invariant: shapes, responsibility simplex on
    /// observed edges, positivity of variances, Dirichlet/Gamma parameters
    /// and learning rates.
    pub fn validate(&self, data: &WeightMatrix, hyper: &Hyperparams) -> Result<()> {
        self.check_dims(data, hyper)?;
        for i in 0..self.m {
            for j in 0..self.n {
                if !data.is_observed(i, j) {
                    continue;
                }
                let r = self.edge_responsibilities(i, j);
                let total: f64 = r.iter().sum();
                if r.iter().any(|&p| !(0.0..=1.0).contains(&p)) || (total - 1.0).abs() > 1e-9 {
                    return Err(SlpmError::InvalidParameter(format!(
                        "responsibilities of edge ({i}, {j}) are not on the simplex"
                    )));
                }
            }
        }
        let positive = |name: &str, v: &[f64]| -> Result<()> {
            match v.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
                Some(bad) => Err(SlpmError::InvalidParameter(format!("{name} must be positive, got {bad}"))),
                None => Ok(()),
            }
        };
        positive("beta_u", &self.beta_u)?;
        positive("beta_v", &self.beta_v)?;
        positive("dirichlet", &self.dirichlet)?;
        positive("gamma_shape", &self.gamma_shape)?;
        positive("gamma_rate", &self.gamma_rate)?;
        positive("step_u", &self.step_u)?;
        positive("step_v", &self.step_v)?;
        if self.alpha_u.iter().chain(&self.alpha_v).any(|a| !a.is_finite()) {
            return Err(SlpmError::InvalidParameter("position means must be finite".into()));
        }
        Ok(())
    }
}

/// Ground-truth parameters of a generated network.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerativeParams {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    /// Mixing proportions λ.
    pub mixing: Vec<f64>,
    /// Precisions γ.
    pub precisions: Vec<f64>,
    /// Sender positions, `u[i * k + c]`.
    pub u: Vec<f64>,
    /// Receiver positions, `v[j * k + c]`.
    pub v: Vec<f64>,
    /// Edge allocations Z (zero-based component), `allocations[i * n + j]`.
    pub allocations: Vec<usize>,
}

impl GenerativeParams {
    pub fn validate(&self) -> Result<()> {
        let (m, n, k) = (self.m, self.n, self.k);
        if k == 0 || m == 0 || n == 0 {
            return Err(SlpmError::Dimension("counts must be at least 1".into()));
        }
        if self.mixing.len() != k
            || self.precisions.len() != k
            || self.u.len() != m * k
            || self.v.len() != n * k
            || (!self.allocations.is_empty() && self.allocations.len() != m * n)
        {
            return Err(SlpmError::Dimension("generative parameter lengths do not match (M, N, K)".into()));
        }
        let total: f64 = self.mixing.iter().sum();
        if self.mixing.iter().any(|&p| !(p >= 0.0)) || (total - 1.0).abs() > 1e-9 {
            return Err(SlpmError::InvalidParameter("mixing proportions must lie on the simplex".into()));
        }
        if self.precisions.iter().any(|&g| !(g > 0.0 && g.is_finite())) {
            return Err(SlpmError::InvalidParameter("precisions must be positive".into()));
        }
        if self.allocations.iter().any(|&z| z >= k) {
            return Err(SlpmError::InvalidParameter("allocation out of range".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn theta(&self, i: usize, j: usize, c: usize) -> f64 {
        (self.u[i * self.k + c] - self.v[j * self.k + c]).powi(2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_negative_and_nan_weights() {
        let err = WeightMatrix::new(1, 2, vec![1.0, -0.5]).unwrap_err();
        assert_eq!(err, SlpmError::InvalidWeight { row: 0, col: 1, value: -0.5 });
        assert!(WeightMatrix::new(1, 1, vec![f64::NAN]).is_err());
        assert!(WeightMatrix::new(1, 1, vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn masked_entries_are_not_validated() {
        let m = WeightMatrix::with_mask(1, 2, vec![1.0, f64::NAN], vec![true, false]).unwrap();
        assert_eq!(m.observed_count(), 1);
    }

    #[test]
    fn requires_an_observed_entry() {
        let err = WeightMatrix::with_mask(1, 1, vec![1.0], vec![false]).unwrap_err();
        assert_eq!(err, SlpmError::NoObservations);
    }

    #[test]
    fn diagonal_exclusion_needs_square() {
        let m = WeightMatrix::new(2, 3, vec![1.0; 6]).unwrap();
        assert!(m.into_unipartite(true).is_err());
        let m = WeightMatrix::new(2, 2, vec![1.0; 4]).unwrap().into_unipartite(true).unwrap();
        assert!(!m.is_observed(0, 0) && !m.is_observed(1, 1));
        assert!(m.is_observed(0, 1));
        assert_eq!(m.observed_count(), 2);
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(WeightMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
    }

    #[test]
    fn hyperparams_defaults_and_validation() {
        let h = Hyperparams::defaults(3).unwrap();
        assert_eq!(h.delta, vec![0.001; 3]);
        assert_eq!(h.a, vec![1.0; 3]);
        assert!(Hyperparams::symmetric(0, 1.0, 1.0, 1.0).is_err());
        assert!(Hyperparams::symmetric(2, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn second_moment_sum_direct() {
        let mut s = VariationalState::new(2, 2, 1, 0.1);
        s.alpha_u = vec![1.0, 1.0];
        s.beta_u = vec![0.5, 0.5];
        s.alpha_v = vec![1.0, 1.0];
        s.beta_v = vec![0.5, 0.5];
        assert_eq!(s.second_moment_sum(0), 6.0);
    }

    #[test]
    fn row_and_col_sums_skip_masked() {
        let m = WeightMatrix::with_mask(2, 2, vec![1.0, 2.0, 3.0, 4.0], vec![true, false, true, true]).unwrap();
        assert_eq!(m.row_sums(), vec![1.0, 7.0]);
        assert_eq!(m.col_sums(), vec![4.0, 4.0]);
    }
}
