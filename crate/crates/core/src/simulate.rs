//! Synthetic networks from the generative model.
//!
//! Parameters (mixing, precisions, positions) come from one ChaCha stream
//! of the seed; edges of sender row i come from stream i + 1 of the same
//! seed, so the sampled matrix does not depend on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Exp1, Gamma, Normal};

use crate::error::{Result, SlpmError};
use crate::model::{GenerativeParams, WeightMatrix};
use crate::par;

/// How mixing proportions are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum Mixing {
    /// Explicit proportions.
    Fixed(Vec<f64>),
    /// 1/K each.
    Uniform,
    /// Symmetric Dirichlet draw with the given concentration.
    Dirichlet(f64),
}

/// How latent positions are drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PositionLaw {
    /// U, V ~ N(0, 1) in every component.
    StandardNormal,
    /// γ_k ~ Gamma(shape a, rate b); U, V ~ N(0, 1/γ_k).
    GammaHierarchy { a: f64, b: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub mixing: Mixing,
    pub positions: PositionLaw,
    pub seed: u64,
}

impl SimulationConfig {
    pub fn new(m: usize, n: usize, k: usize, seed: u64) -> Self {
        Self { m, n, k, mixing: Mixing::Uniform, positions: PositionLaw::StandardNormal, seed }
    }

    /// All hyperparameters set to `value`: Dirichlet(value) mixing and a
    /// Gamma(value, value) precision hierarchy.
    pub fn hierarchical(m: usize, n: usize, k: usize, value: f64, seed: u64) -> Self {
        Self {
            m,
            n,
            k,
            mixing: Mixing::Dirichlet(value),
            positions: PositionLaw::GammaHierarchy { a: value, b: value },
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 || self.k == 0 {
            return Err(SlpmError::Dimension("M, N and K must be at least 1".into()));
        }
        match &self.mixing {
            Mixing::Fixed(p) => {
                let total: f64 = p.iter().sum();
                if p.len() != self.k || p.iter().any(|&x| !(x >= 0.0)) || (total - 1.0).abs() > 1e-9 {
                    return Err(SlpmError::InvalidParameter(format!(
                        "fixed mixing must be {} proportions summing to 1",
                        self.k
                    )));
                }
            }
            Mixing::Uniform => {}
            Mixing::Dirichlet(d) => {
                if !(*d > 0.0 && d.is_finite()) {
                    return Err(SlpmError::InvalidParameter(format!("Dirichlet concentration must be positive, got {d}")));
                }
            }
        }
        if let PositionLaw::GammaHierarchy { a, b } = self.positions {
            if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
                return Err(SlpmError::InvalidParameter("precision hyperparameters must be positive".into()));
            }
        }
        Ok(())
    }
}

/// A sampled network with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub data: WeightMatrix,
    pub params: GenerativeParams,
    /// Receiver positions redrawn because they coincided exactly with a
    /// sender position.
    pub resampled_positions: usize,
}

fn gamma(shape: f64, rate: f64) -> Result<Gamma<f64>> {
    Gamma::new(shape, 1.0 / rate).map_err(|e| SlpmError::InvalidParameter(format!("gamma({shape}, {rate}): {e}")))
}

fn dirichlet<R: Rng>(k: usize, concentration: f64, rng: &mut R) -> Result<Vec<f64>> {
    let g = gamma(concentration, 1.0)?;
    let mut draws: Vec<f64> = (0..k).map(|_| g.sample(rng)).collect();
    let total: f64 = draws.iter().sum();
    if total > 0.0 && total.is_finite() {
        draws.iter_mut().for_each(|x| *x /= total);
    } else {
        // Every draw underflowed; the limit puts all mass on one component.
        let winner = rng.random_range(0..k);
        draws = (0..k).map(|c| if c == winner { 1.0 } else { 0.0 }).collect();
    }
    Ok(draws)
}

/// Draws mixing proportions, precisions and positions. Receiver positions
/// that coincide exactly with some sender position in the same component
/// are redrawn; the count is returned alongside.
pub fn draw_params(config: &SimulationConfig) -> Result<(GenerativeParams, usize)> {
    config.validate()?;
    let (m, n, k) = (config.m, config.n, config.k);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mixing = match &config.mixing {
        Mixing::Fixed(p) => p.clone(),
        Mixing::Uniform => vec![1.0 / k as f64; k],
        Mixing::Dirichlet(d) => dirichlet(k, *d, &mut rng)?,
    };
    let precisions = match config.positions {
        PositionLaw::StandardNormal => vec![1.0; k],
        PositionLaw::GammaHierarchy { a, b } => {
            let g = gamma(a, b)?;
            (0..k).map(|_| g.sample(&mut rng).max(f64::MIN_POSITIVE)).collect()
        }
    };
    let normals: Vec<Normal<f64>> = precisions
        .iter()
        .map(|&p| Normal::new(0.0, 1.0 / p.sqrt()).map_err(|e| SlpmError::Numerical(e.to_string())))
        .collect::<Result<_>>()?;
    let mut u = vec![0.0; m * k];
    for i in 0..m {
        for c in 0..k {
            u[i * k + c] = normals[c].sample(&mut rng);
        }
    }
    let mut v = vec![0.0; n * k];
    let mut resampled = 0;
    for j in 0..n {
        for c in 0..k {
            let mut draw = normals[c].sample(&mut rng);
            while (0..m).any(|i| u[i * k + c] == draw) {
                resampled += 1;
                draw = normals[c].sample(&mut rng);
            }
            v[j * k + c] = draw;
        }
    }
    let params = GenerativeParams { m, n, k, mixing, precisions, u, v, allocations: Vec::new() };
    Ok((params, resampled))
}

fn row_rng(seed: u64, row: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(row as u64 + 1);
    rng
}

fn categorical<R: Rng>(weights: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (c, &w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return c;
        }
    }
    // Rounding left u above the cumulative sum: take the last positive weight.
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// Draws allocations and exponential weights for `params`, filling in
/// `params.allocations`.
pub fn sample_edges(params: &mut GenerativeParams, seed: u64) -> Result<WeightMatrix> {
    params.allocations.clear();
    params.validate()?;
    let (m, n) = (params.m, params.n);
    let p: &GenerativeParams = params;
    let rows: Vec<Result<Vec<(usize, f64)>>> = par::map_indexed(m, |i| {
        let mut rng = row_rng(seed, i);
        (0..n)
            .map(|j| {
                let z = categorical(&p.mixing, &mut rng);
                let theta = p.theta(i, j, z);
                if !(theta > 0.0) {
                    return Err(SlpmError::CoincidentPositions { row: i, col: j, component: z });
                }
                let x = Exp::new(theta).map_err(|e| SlpmError::Numerical(e.to_string()))?.sample(&mut rng);
                Ok((z, x))
            })
            .collect()
    });
    let mut values = Vec::with_capacity(m * n);
    let mut allocations = Vec::with_capacity(m * n);
    for row in rows {
        for (z, x) in row? {
            allocations.push(z);
            values.push(x);
        }
    }
    params.allocations = allocations;
    WeightMatrix::new(m, n, values)
}

/// Draws parameters and then a weighted network from them.
pub fn sample_network(config: &SimulationConfig) -> Result<Simulation> {
    let (mut params, resampled_positions) = draw_params(config)?;
    let data = sample_edges(&mut params, config.seed)?;
    Ok(Simulation { data, params, resampled_positions })
}

/// The expected-rate network x_ij = Σ_k λ_k (U_ik − V_jk)⁻².
pub fn average_network(params: &GenerativeParams) -> Result<WeightMatrix> {
    params.validate()?;
    let (m, n, k) = (params.m, params.n, params.k);
    let mut values = Vec::with_capacity(m * n);
    for i in 0..m {
        for j in 0..n {
            let mut x = 0.0;
            for c in 0..k {
                if params.mixing[c] == 0.0 {
                    continue;
                }
                let theta = params.theta(i, j, c);
                if theta == 0.0 {
                    return Err(SlpmError::CoincidentPositions { row: i, col: j, component: c });
                }
                x += params.mixing[c] / theta;
            }
            if !x.is_finite() {
                return Err(SlpmError::Numerical(format!("average weight ({i}, {j}) overflowed")));
            }
            values.push(x);
        }
    }
    WeightMatrix::new(m, n, values)
}

/// Independent x_ij ~ Exponential(θ_ij) with θ_ij ~ Gamma(1, 1).
pub fn homogeneous_network(m: usize, n: usize, seed: u64) -> Result<WeightMatrix> {
    if m == 0 || n == 0 {
        return Err(SlpmError::Dimension("M and N must be at least 1".into()));
    }
    let rows: Vec<Vec<f64>> = par::map_indexed(m, |i| {
        let mut rng = row_rng(seed, i);
        (0..n)
            .map(|_| {
                let theta: f64 = rng.sample(Exp1);
                let e: f64 = rng.sample(Exp1);
                e / theta
            })
            .collect()
    });
    WeightMatrix::new(m, n, rows.concat())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_params(m: usize, n: usize) -> GenerativeParams {
        GenerativeParams {
            m,
            n,
            k: 1,
            mixing: vec![1.0],
            precisions: vec![1.0],
            u: vec![1.0; m],
            v: vec![0.0; n],
            allocations: Vec::new(),
        }
    }

    #[test]
    fn unit_rate_exponential_mean() {
        let mut p = unit_params(100, 1000);
        let x = sample_edges(&mut p, 3).unwrap();
        let mean = x.values().iter().sum::<f64>() / 1e5;
        assert!((mean - 1.0).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn degenerate_mixing_allocates_one_component() {
        let mut config = SimulationConfig::new(10, 12, 3, 5);
        config.mixing = Mixing::Fixed(vec![1.0, 0.0, 0.0]);
        let sim = sample_network(&config).unwrap();
        assert!(sim.params.allocations.iter().all(|&z| z == 0));
    }

    #[test]
    fn sampling_is_reproducible() {
        let config = SimulationConfig::hierarchical(15, 9, 4, 1.0, 21);
        assert_eq!(sample_network(&config).unwrap(), sample_network(&config).unwrap());
        let other = SimulationConfig { seed: 22, ..config.clone() };
        assert_ne!(sample_network(&other).unwrap().data, sample_network(&config).unwrap().data);
    }

    #[test]
    fn average_examples() {
        let p = unit_params(1, 1);
        assert_eq!(average_network(&p).unwrap().get(0, 0), 1.0);
        let two = GenerativeParams {
            m: 1,
            n: 1,
            k: 2,
            mixing: vec![0.5, 0.5],
            precisions: vec![1.0, 1.0],
            u: vec![1.0, 2.0],
            v: vec![0.0, 0.0],
            allocations: Vec::new(),
        };
        assert_eq!(average_network(&two).unwrap().get(0, 0), 0.625);
    }

    #[test]
    fn average_scales_inverse_square() {
        let (p, _) = draw_params(&SimulationConfig::new(6, 7, 3, 1)).unwrap();
        let x = average_network(&p).unwrap();
        let c = 2.5;
        let scaled = GenerativeParams {
            u: p.u.iter().map(|v| v * c).collect(),
            v: p.v.iter().map(|v| v * c).collect(),
            ..p.clone()
        };
        let y = average_network(&scaled).unwrap();
        for (a, b) in x.values().iter().zip(y.values()) {
            assert!((b * c * c - a).abs() <= 1e-12 * a);
            assert!(*a > 0.0 && a.is_finite());
        }
    }

    #[test]
    fn coincident_positions_are_rejected() {
        let mut p = unit_params(2, 2);
        p.v[1] = 1.0;
        assert_eq!(
            average_network(&p).unwrap_err(),
            SlpmError::CoincidentPositions { row: 0, col: 1, component: 0 }
        );
        assert!(matches!(sample_edges(&mut p, 0), Err(SlpmError::CoincidentPositions { .. })));
    }

    #[test]
    fn homogeneous_marginal_is_lomax() {
        let x = homogeneous_network(100, 1000, 8).unwrap();
        let frac = x.values().iter().filter(|&&v| v > 1.0).count() as f64 / 1e5;
        assert!((frac - 0.5).abs() < 0.01, "P(x > 1) = {frac}");
        assert_eq!(x, homogeneous_network(100, 1000, 8).unwrap());
    }

    #[test]
    fn tiny_dirichlet_still_on_simplex() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..50 {
            let p = dirichlet(8, 1e-3, &mut rng).unwrap();
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
