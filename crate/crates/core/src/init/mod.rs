//! Distance-based starting values for the variational state.

mod dissimilarity;
mod nmds;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub use dissimilarity::{dissimilarity_matrix, CrossBlock, DissimilarityMatrix};
pub use nmds::{classical_mds, nonmetric_mds, stress1, MdsResult};

use crate::error::{Result, SlpmError};
use crate::model::{Hyperparams, VariationalState, WeightMatrix};

/// Source of the starting position means.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitMethod {
    /// Nonmetric MDS of the sender/receiver dissimilarity matrix.
    #[default]
    Mds,
    /// Independent standard normal draws.
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitConfig {
    pub method: InitMethod,
    pub cross: CrossBlock,
    /// Constant added to every weight before building dissimilarities.
    pub epsilon: f64,
    pub seed: u64,
    /// Starting per-position learning rate.
    pub step0: f64,
    /// Variances start at this multiple of the empirical variance of the means.
    pub variance_inflation: f64,
}

impl Default for InitConfig {
    fn default() -> Self {
        Self {
            method: InitMethod::Mds,
            cross: CrossBlock::Reciprocal,
            epsilon: 1e-4,
            seed: 0,
            step0: 0.1,
            variance_inflation: 20.0,
        }
    }
}

/// What happened while building the starting state.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct InitDiagnostics {
    /// Final stress-1 of the MDS configuration.
    pub stress: Option<f64>,
    pub mds_iterations: usize,
    /// The dissimilarities carried no rank information.
    pub degenerate_dissimilarities: bool,
    /// Sides whose means had zero or undefined variance, so variances fell back to 1.
    pub unit_variance_fallback: Vec<&'static str>,
}

/// Sample variance (n − 1 denominator); `None` when undefined or zero.
fn sample_variance(values: &[f64]) -> Option<f64> {
    if values.len() < 2 {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (var.is_finite() && var > 0.0).then_some(var)
}

/// Builds a starting state: position means from MDS (or random draws),
/// variances inflated from the empirical spread of those means, and unit
/// Dirichlet and Gamma parameters. Responsibilities start uniform.
pub fn initialize_state(
    data: &WeightMatrix,
    hyper: &Hyperparams,
    config: &InitConfig,
) -> Result<(VariationalState, InitDiagnostics)> {
    if !(config.epsilon > 0.0 && config.epsilon.is_finite()) {
        return Err(SlpmError::InvalidParameter(format!("init epsilon must be positive, got {}", config.epsilon)));
    }
    if !(config.step0 > 0.0 && config.variance_inflation > 0.0) {
        return Err(SlpmError::InvalidParameter("step0 and variance inflation must be positive".into()));
    }
    let (m, n, k) = (data.rows(), data.cols(), hyper.components());
    let mut state = VariationalState::new(m, n, k, config.step0);
    let mut diag = InitDiagnostics::default();

    match config.method {
        InitMethod::Mds => {
            let d = dissimilarity_matrix(data, config.epsilon, config.cross)?;
            let mds = nonmetric_mds(&d, k, config.seed)?;
            state.alpha_u.copy_from_slice(&mds.coords[..m * k]);
            state.alpha_v.copy_from_slice(&mds.coords[m * k..]);
            diag.stress = Some(mds.stress);
            diag.mds_iterations = mds.iterations;
            diag.degenerate_dissimilarities = mds.degenerate;
        }
        InitMethod::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            for a in state.alpha_u.iter_mut().chain(state.alpha_v.iter_mut()) {
                *a = StandardNormal.sample(&mut rng);
            }
        }
    }

    for (name, alphas, betas) in [
        ("sender", &state.alpha_u, &mut state.beta_u),
        ("receiver", &state.alpha_v, &mut state.beta_v),
    ] {
        let beta = match sample_variance(alphas) {
            Some(var) => config.variance_inflation * var,
            None => {
                diag.unit_variance_fallback.push(name);
                1.0
            }
        };
        betas.fill(beta);
    }
    state.validate(data, hyper)?;
    Ok((state, diag))
}
