use std::time::Instant;

use super::position::{step_position, StepScratch};
use super::updates::{mixing_proportions, update_dirichlet, update_gamma_params, update_responsibilities};
use crate::error::{Result, SlpmError};
use crate::model::{free_energy, Hyperparams, Side, VariationalState, WeightMatrix};

/// Settings of the fitting loop.
#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    /// Stop once a full sweep raises F by no more than this.
    pub tol: f64,
    pub max_iter: usize,
    /// Initial per-position learning rate.
    pub eps0: f64,
    /// Smallest trial rate before a position step gives up.
    pub eps_floor: f64,
    pub seed: u64,
    /// Sweeps between full recomputations of F.
    pub recompute_every: usize,
    /// Largest tolerated relative gap between the running and the
    /// recomputed F.
    pub drift_tol: f64,
    /// Re-evaluate F after every block update and record the worst change.
    pub check_stages: bool,
    /// Threshold τ used for the reported effective K.
    pub mixing_threshold: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            tol: 0.01,
            max_iter: 1000,
            eps0: 0.1,
            eps_floor: 1e-12,
            seed: 0,
            recompute_every: 50,
            drift_tol: 1e-6,
            check_stages: false,
            mixing_threshold: 0.01,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(SlpmError::InvalidParameter(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(SlpmError::InvalidParameter("max_iter must be at least 1".into()));
        }
        if !(self.eps_floor > 0.0 && self.eps0 > self.eps_floor) {
            return Err(SlpmError::InvalidParameter(format!(
                "need eps0 > eps_floor > 0, got eps0={}, eps_floor={}",
                self.eps0, self.eps_floor
            )));
        }
        if self.recompute_every == 0 {
            return Err(SlpmError::InvalidParameter("recompute_every must be at least 1".into()));
        }
        Ok(())
    }
}

/// Summary of a fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    /// F at the starting state followed by F after each sweep.
    pub free_energy_trace: Vec<f64>,
    /// Number of sweeps performed.
    pub iterations: usize,
    pub converged: bool,
    /// Mixing proportions in decreasing order.
    pub sorted_mixing: Vec<f64>,
    /// Component indices in the order of `sorted_mixing`.
    pub component_order: Vec<usize>,
    /// Components whose proportion exceeds the configured threshold.
    pub effective_k: usize,
    /// Components with any responsibility mass at all.
    pub k_strict: usize,
    pub wall_time: f64,
    /// Position steps that hit the learning-rate floor.
    pub floored_steps: usize,
    /// Smallest relative change of F across individual block updates,
    /// when stage checking is enabled.
    pub min_stage_gain: Option<f64>,
}

/// Mixing proportions sorted in decreasing order, with the matching
/// component indices. Ties keep component order.
pub(crate) fn sorted_mixing(proportions: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..proportions.len()).collect();
    order.sort_by(|&a, &b| proportions[b].total_cmp(&proportions[a]).then(a.cmp(&b)));
    (order.iter().map(|&c| proportions[c]).collect(), order)
}

struct StageTracker {
    enabled: bool,
    last: f64,
    worst: f64,
}

impl StageTracker {
    fn observe(&mut self, f: f64) {
        if self.enabled {
            let gain = (f - self.last) / self.last.abs().max(1.0);
            self.worst = self.worst.min(gain);
            self.last = f;
        }
    }
}

/// Runs coordinate ascent from `init` until a sweep improves F by less
/// than `config.tol` or `config.max_iter` sweeps have run.
///
/// Each sweep updates, in order: all responsibilities, the Dirichlet
/// factor, the Gamma factors, every sender position, then every receiver
/// position.
pub fn fit(
    data: &WeightMatrix,
    hyper: &Hyperparams,
    init: &VariationalState,
    config: &FitConfig,
) -> Result<(VariationalState, FitReport)> {
    config.validate()?;
    init.validate(data, hyper)?;
    let start = Instant::now();
    let mut state = init.clone();
    let (m, n, k) = state.dims();

    let mut best = free_energy(&state, data, hyper)?;
    let mut trace = vec![best];
    let mut stages = StageTracker {
        enabled: config.check_stages,
        last: best,
        worst: f64::INFINITY,
    };
    let mut scratch = StepScratch::default();
    let mut floored_steps = 0;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < config.max_iter {
        iterations += 1;

        update_responsibilities(&mut state, data, hyper)?;
        if stages.enabled {
            stages.observe(free_energy(&state, data, hyper)?);
        }
        update_dirichlet(&mut state, data, hyper)?;
        if stages.enabled {
            stages.observe(free_energy(&state, data, hyper)?);
        }
        update_gamma_params(&mut state, data, hyper)?;
        let mut current = free_energy(&state, data, hyper)?;
        stages.observe(current);

        for (side, count) in [(Side::Sender, m), (Side::Receiver, n)] {
            for node in 0..count {
                for c in 0..k {
                    let out = step_position(&mut state, data, side, node, c, config.eps_floor, &mut scratch);
                    current += out.delta;
                    if out.floored {
                        floored_steps += 1;
                    }
                }
            }
            stages.observe(current);
        }

        if iterations % config.recompute_every == 0 {
            let exact = free_energy(&state, data, hyper)?;
            let drift = (current - exact).abs() / exact.abs().max(1.0);
            if drift > config.drift_tol {
                return Err(SlpmError::FreeEnergyDrift { sweep: iterations, drift });
            }
            current = exact;
        }
        if !current.is_finite() {
            return Err(SlpmError::Numerical(format!("free energy became {current} at sweep {iterations}")));
        }

        trace.push(current);
        if current <= best + config.tol {
            converged = true;
            break;
        }
        best = current;
    }

    let proportions = mixing_proportions(&state, data);
    let (sorted, order) = sorted_mixing(&proportions);
    let effective_k = sorted.iter().filter(|&&p| p > config.mixing_threshold).count();
    let k_strict = sorted.iter().filter(|&&p| p > 0.0).count();
    let report = FitReport {
        free_energy_trace: trace,
        iterations,
        converged,
        sorted_mixing: sorted,
        component_order: order,
        effective_k,
        k_strict,
        wall_time: start.elapsed().as_secs_f64(),
        floored_steps,
        min_stage_gain: config.check_stages.then_some(stages.worst),
    };
    Ok((state, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> (WeightMatrix, Hyperparams, VariationalState) {
        let x = WeightMatrix::new(3, 4, vec![0.5, 2.0, 0.1, 1.0, 3.0, 0.2, 0.7, 0.05, 4.0, 0.3, 1.2, 0.9]).unwrap();
        let h = Hyperparams::defaults(2).unwrap();
        let mut s = VariationalState::new(3, 4, 2, 0.1);
        s.alpha_u = vec![0.3, -0.2, 1.1, 0.5, -0.7, 0.0];
        s.alpha_v = vec![0.0, 0.4, -0.5, 0.9, 0.2, -0.3, 0.6, 0.1];
        (x, h, s)
    }

    #[test]
    fn huge_tolerance_stops_after_one_sweep() {
        let (x, h, s) = toy();
        let cfg = FitConfig { tol: 1e12, ..FitConfig::default() };
        let (_, report) = fit(&x, &h, &s, &cfg).unwrap();
        assert_eq!(report.iterations, 1);
        assert!(report.converged);
        assert_eq!(report.free_energy_trace.len(), 2);
    }

    #[test]
    fn invalid_config_rejected() {
        let (x, h, s) = toy();
        for cfg in [
            FitConfig { tol: 0.0, ..FitConfig::default() },
            FitConfig { max_iter: 0, ..FitConfig::default() },
            FitConfig { eps0: 1e-13, ..FitConfig::default() },
        ] {
            assert!(matches!(fit(&x, &h, &s, &cfg), Err(SlpmError::InvalidParameter(_))));
        }
    }

    #[test]
    fn trace_is_monotone_and_mixing_sums_to_one() {
        let (x, h, s) = toy();
        let cfg = FitConfig { check_stages: true, max_iter: 200, ..FitConfig::default() };
        let (_, report) = fit(&x, &h, &s, &cfg).unwrap();
        for w in report.free_energy_trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-8 * w[0].abs());
        }
        assert!(report.min_stage_gain.unwrap() >= -1e-8);
        assert!((report.sorted_mixing.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        assert!(report.sorted_mixing.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn sorted_mixing_breaks_ties_by_index() {
        let (v, o) = sorted_mixing(&[0.2, 0.5, 0.2, 0.1]);
        assert_eq!(v, vec![0.5, 0.2, 0.2, 0.1]);
        assert_eq!(o, vec![1, 0, 2, 3]);
    }
}
