//! Natural-gradient updates of the Gaussian position factors.

use super::FitConfig;
use crate::error::{Result, SlpmError};
use crate::model::{
    edge_likelihood, gather_incident, node_local_objective, EdgeMoments, Hyperparams, IncidentEdge, NodeObjective, Side,
    VariationalState, WeightMatrix,
};
use crate::special::trigamma;

/// Result of one backtracking natural-gradient step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    /// Free-energy increase of the accepted move (0 when floored).
    pub delta: f64,
    /// Learning rate stored for the position afterwards.
    pub rate: f64,
    /// Number of times the trial rate was halved.
    pub halvings: u32,
    /// True when no acceptable rate above the floor was found and the
    /// position was left unchanged.
    pub floored: bool,
}

/// Per-edge likelihood terms at (alpha, beta) plus ∂F/∂α̃ and ∂F/∂β̃.
fn terms_and_gradient(obj: &NodeObjective<'_>, alpha: f64, beta: f64, terms: &mut Vec<f64>) -> (f64, f64) {
    terms.clear();
    let mut d_alpha = 0.0;
    let mut d_beta = 0.0;
    for e in obj.edges {
        let gap = alpha - e.partner_alpha;
        let var = beta + e.partner_beta;
        let mo = EdgeMoments::from_gap(gap, var);
        let (eta, zeta) = (mo.eta, mo.zeta);
        let shape = mo.gamma_shape();
        terms.push(edge_likelihood(e.x, e.resp, gap, var));
        if e.resp == 0.0 {
            continue;
        }
        let tri = trigamma(shape);
        // ∂/∂η̃ and ∂/∂ζ̃ of ψ(η̃²/ζ̃) − log η̃ + log ζ̃ − x η̃
        let g_eta = tri * 2.0 * eta / zeta - 1.0 / eta - e.x;
        let g_zeta = (1.0 - shape * tri) / zeta;
        // η̃ = v + m², ζ̃ = 4m²v + 2v²
        d_alpha += e.resp * (g_eta * 2.0 * gap + g_zeta * 8.0 * gap * var);
        d_beta += e.resp * (g_eta + g_zeta * (4.0 * gap * gap + 4.0 * var));
    }
    d_alpha -= obj.precision_mean * alpha;
    d_beta += 0.5 / beta - 0.5 * obj.precision_mean;
    (d_alpha, d_beta)
}

fn check_position(state: &VariationalState, data: &WeightMatrix, hyper: &Hyperparams, side: Side, node: usize, c: usize) -> Result<()> {
    state.check_dims(data, hyper)?;
    if node >= state.nodes(side) || c >= state.components() {
        return Err(SlpmError::Dimension(format!("position ({side:?}, {node}, {c}) out of range")));
    }
    Ok(())
}

/// Analytic (∂F/∂α̃, ∂F/∂β̃) for one position.
pub fn position_gradient(
    state: &VariationalState,
    data: &WeightMatrix,
    hyper: &Hyperparams,
    side: Side,
    node: usize,
    c: usize,
) -> Result<(f64, f64)> {
    check_position(state, data, hyper, side, node, c)?;
    let mut edges = Vec::new();
    gather_incident(state, data, side, node, c, &mut edges);
    let obj = node_local_objective(state, c, &edges);
    let mut terms = Vec::new();
    Ok(terms_and_gradient(&obj, state.alpha(side, node, c), state.beta(side, node, c), &mut terms))
}

/// Reusable buffers for position sweeps.
#[derive(Default)]
pub(crate) struct StepScratch {
    edges: Vec<IncidentEdge>,
    terms: Vec<f64>,
}

/// Backtracking natural-gradient step for one position, without argument
/// checks. Trial rates start at twice the stored rate and halve until the
/// move does not decrease F.
pub(crate) fn step_position(
    state: &mut VariationalState,
    data: &WeightMatrix,
    side: Side,
    node: usize,
    c: usize,
    eps_floor: f64,
    scratch: &mut StepScratch,
) -> StepOutcome {
    gather_incident(state, data, side, node, c, &mut scratch.edges);
    let obj = node_local_objective(state, c, &scratch.edges);
    let alpha = state.alpha(side, node, c);
    let beta = state.beta(side, node, c);
    let (g_alpha, g_beta) = terms_and_gradient(&obj, alpha, beta, &mut scratch.terms);

    let mut rate = 2.0 * state.step(side, node, c);
    let mut halvings = 0;
    loop {
        if rate < eps_floor {
            state.set_step(side, node, c, eps_floor);
            return StepOutcome { delta: 0.0, rate: eps_floor, halvings, floored: true };
        }
        let new_alpha = alpha + rate * beta * g_alpha;
        let new_beta = beta * (2.0 * rate * beta * g_beta).exp();
        if new_alpha.is_finite() && new_beta > 0.0 && new_beta.is_finite() {
            let delta = obj.delta((alpha, beta), &scratch.terms, (new_alpha, new_beta));
            if delta >= 0.0 && delta.is_finite() {
                state.set_position(side, node, c, new_alpha, new_beta);
                state.set_step(side, node, c, rate);
                return StepOutcome { delta, rate, halvings, floored: false };
            }
        }
        rate *= 0.5;
        halvings += 1;
    }
}

/// One natural-gradient update of (α̃, β̃) for a position:
/// α̃* = α̃ + ε β̃ ∂F/∂α̃ and β̃* = β̃ exp{2ε β̃ ∂F/∂β̃}, with ε backtracked
/// from twice the stored rate.
#[allow(clippy::too_many_arguments)]
pub fn natural_gradient_step(
    state: &mut VariationalState,
    data: &WeightMatrix,
    hyper: &Hyperparams,
    side: Side,
    node: usize,
    c: usize,
    config: &FitConfig,
) -> Result<StepOutcome> {
    check_position(state, data, hyper, side, node, c)?;
    let mut scratch = StepScratch::default();
    Ok(step_position(state, data, side, node, c, config.eps_floor, &mut scratch))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{free_energy, free_energy_node_delta};

    fn config() -> FitConfig {
        FitConfig::default()
    }

    #[test]
    fn isolated_node_prior_balance() {
        // Row 0 fully masked: only the prior and entropy act on it.
        let x = WeightMatrix::with_mask(2, 2, vec![1.0; 4], vec![false, false, true, true]).unwrap();
        let h = Hyperparams::defaults(1).unwrap();
        let mut s = VariationalState::new(2, 2, 1, 0.1);
        s.gamma_shape = vec![3.0];
        s.gamma_rate = vec![1.5];
        s.alpha_u[0] = 0.0;
        s.beta_u[0] = 1.5 / 3.0;
        let (ga, gb) = position_gradient(&s, &x, &h, Side::Sender, 0, 0).unwrap();
        assert_eq!(ga, 0.0);
        assert!(gb.abs() < 1e-15);
    }

    #[test]
    fn zero_gradient_is_identity() {
        let x = WeightMatrix::with_mask(2, 2, vec![1.0; 4], vec![false, false, true, true]).unwrap();
        let h = Hyperparams::defaults(1).unwrap();
        let mut s = VariationalState::new(2, 2, 1, 0.1);
        s.gamma_shape = vec![2.0];
        s.gamma_rate = vec![2.0];
        s.beta_u[0] = 1.0;
        let before = free_energy(&s, &x, &h).unwrap();
        let out = natural_gradient_step(&mut s, &x, &h, Side::Sender, 0, 0, &config()).unwrap();
        assert_eq!(out.halvings, 0);
        assert_eq!(out.delta, 0.0);
        assert_eq!(out.rate, 0.2);
        assert_eq!((s.alpha_u[0], s.beta_u[0]), (0.0, 1.0));
        assert_eq!(free_energy(&s, &x, &h).unwrap(), before);
    }

    #[test]
    fn overshooting_rate_backtracks() {
        let x = WeightMatrix::new(3, 3, vec![0.5, 2.0, 0.1, 1.0, 3.0, 0.2, 0.7, 0.05, 4.0]).unwrap();
        let h = Hyperparams::defaults(2).unwrap();
        let mut s = VariationalState::new(3, 3, 2, 50.0);
        s.alpha_u = vec![0.3, -0.2, 1.1, 0.5, -0.7, 0.0];
        s.alpha_v = vec![0.0, 0.4, -0.5, 0.9, 0.2, -0.3];
        let before = free_energy(&s, &x, &h).unwrap();
        let out = natural_gradient_step(&mut s, &x, &h, Side::Sender, 1, 0, &config()).unwrap();
        assert!(out.halvings >= 1);
        assert!(out.delta >= 0.0);
        assert!(s.beta_u[2] > 0.0);
        let after = free_energy(&s, &x, &h).unwrap();
        assert!(after >= before - 1e-10 * before.abs());
        assert!((after - before - out.delta).abs() < 1e-9 * before.abs().max(1.0));
    }

    #[test]
    fn accepted_moves_never_decrease_local_objective() {
        let x = WeightMatrix::new(2, 3, vec![0.5, 2.0, 0.1, 1.0, 3.0, 0.2]).unwrap();
        let h = Hyperparams::defaults(2).unwrap();
        let mut s = VariationalState::new(2, 3, 2, 0.1);
        s.alpha_u = vec![0.3, -0.2, 1.1, 0.5];
        s.alpha_v = vec![0.0, 0.4, -0.5, 0.9, 0.2, -0.3];
        for _ in 0..20 {
            for side in [Side::Sender, Side::Receiver] {
                for node in 0..s.nodes(side) {
                    for c in 0..2 {
                        let a = s.alpha(side, node, c);
                        let b = s.beta(side, node, c);
                        let snapshot = s.clone();
                        let out = natural_gradient_step(&mut s, &x, &h, side, node, c, &config()).unwrap();
                        assert!(out.delta >= 0.0 && s.beta(side, node, c) > 0.0);
                        let check = free_energy_node_delta(
                            &snapshot, &x, &h, side, node, c, s.alpha(side, node, c), s.beta(side, node, c),
                        )
                        .unwrap();
                        assert_eq!(check, out.delta);
                        if out.floored {
                            assert_eq!((a, b), (s.alpha(side, node, c), s.beta(side, node, c)));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn floor_leaves_position_unchanged() {
        let x = WeightMatrix::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let h = Hyperparams::defaults(1).unwrap();
        let mut s = VariationalState::new(2, 2, 1, 1e-13);
        s.alpha_u = vec![0.5, -0.5];
        let cfg = FitConfig { eps_floor: 1e-12, ..FitConfig::default() };
        let out = natural_gradient_step(&mut s, &x, &h, Side::Sender, 0, 0, &cfg).unwrap();
        assert!(out.floored);
        assert_eq!(s.alpha_u[0], 0.5);
        assert_eq!(s.step_u[0], 1e-12);
    }
}
