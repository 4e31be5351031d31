//! Variational free energy F and its node-local increments.
//!
//! F is evaluated over observed entries only and with its additive
//! constant fixed at zero.

use super::{EdgeMoments, Hyperparams, Side, VariationalState, WeightMatrix};
use crate::error::{Result, SlpmError};
use crate::par;
use crate::special::{digamma, ln_gamma};

/// F split into the blocks it is assembled from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeEnergyTerms {
    /// Σ λ̃ (E[log θ] − x η̃) over observed edges.
    pub likelihood: f64,
    /// −Σ λ̃ log λ̃ over observed edges.
    pub assignment_entropy: f64,
    /// Dirichlet block: allocation prior, mixing prior and q_λ entropy.
    pub mixing: f64,
    /// Gamma block: position priors, precision prior and q_γ entropy.
    pub precision: f64,
    /// ½ Σ log β̃ over all sender and receiver positions.
    pub position_entropy: f64,
}

impl FreeEnergyTerms {
    pub fn total(&self) -> f64 {
        self.likelihood + self.assignment_entropy + self.mixing + self.precision + self.position_entropy
    }
}

/// λ̃ · (E[log θ] − x η̃) for one edge in one component.
#[inline]
pub(crate) fn edge_likelihood(x: f64, resp: f64, mean_gap: f64, var_sum: f64) -> f64 {
    if resp == 0.0 {
        return 0.0;
    }
    let mo = EdgeMoments::from_gap(mean_gap, var_sum);
    resp * (mo.expected_log_theta() - x * mo.eta)
}

/// Full free energy F(φ̃).
pub fn free_energy(state: &VariationalState, data: &WeightMatrix, hyper: &Hyperparams) -> Result<f64> {
    Ok(free_energy_terms(state, data, hyper)?.total())
}

/// Free energy broken into its blocks.
pub fn free_energy_terms(
    state: &VariationalState,
    data: &WeightMatrix,
    hyper: &Hyperparams,
) -> Result<FreeEnergyTerms> {
    state.check_dims(data, hyper)?;
    let (m, n, k) = state.dims();

    // Per-row partials: (likelihood, entropy, responsibility mass per component).
    let rows = par::map_indexed(m, |i| {
        let mut lik = 0.0;
        let mut ent = 0.0;
        let mut mass = vec![0.0; k];
        for j in 0..n {
            if !data.is_observed(i, j) {
                continue;
            }
            let x = data.get(i, j);
            let r = state.edge_responsibilities(i, j);
            for c in 0..k {
                let gap = state.alpha_u[i * k + c] - state.alpha_v[j * k + c];
                let var = state.beta_u[i * k + c] + state.beta_v[j * k + c];
                lik += edge_likelihood(x, r[c], gap, var);
                if r[c] > 0.0 {
                    ent -= r[c] * r[c].ln();
                }
                mass[c] += r[c];
            }
        }
        (lik, ent, mass)
    });

    let mut likelihood = 0.0;
    let mut assignment_entropy = 0.0;
    let mut mass = vec![0.0; k];
    for (lik, ent, row_mass) in &rows {
        likelihood += lik;
        assignment_entropy += ent;
        for (acc, r) in mass.iter_mut().zip(row_mass) {
            *acc += r;
        }
    }

    let dir_total: f64 = state.dirichlet.iter().sum();
    let psi_total = digamma(dir_total);
    let mut mixing = -ln_gamma(dir_total);
    for c in 0..k {
        let d = state.dirichlet[c];
        mixing += (hyper.delta[c] - d + mass[c]) * (digamma(d) - psi_total) + ln_gamma(d);
    }

    let half_nodes = (m + n) as f64 / 2.0;
    let mut precision = 0.0;
    for c in 0..k {
        let (a_t, b_t) = (state.gamma_shape[c], state.gamma_rate[c]);
        let ln_b = b_t.ln();
        precision += (hyper.a[c] - a_t + half_nodes) * (digamma(a_t) - ln_b)
            - (a_t / b_t) * (hyper.b[c] + 0.5 * state.second_moment_sum(c))
            + a_t
            - a_t * ln_b
            + ln_gamma(a_t);
    }

    let position_entropy =
        0.5 * state.beta_u.iter().map(|b| b.ln()).sum::<f64>() + 0.5 * state.beta_v.iter().map(|b| b.ln()).sum::<f64>();

    Ok(FreeEnergyTerms {
        likelihood,
        assignment_entropy,
        mixing,
        precision,
        position_entropy,
    })
}

/// One observed edge incident to a node, seen from that node in a single
/// component.
#[derive(Debug, Clone, Copy)]
pub(crate) struct IncidentEdge {
    pub x: f64,
    pub resp: f64,
    pub partner_alpha: f64,
    pub partner_beta: f64,
}

/// Collects the observed edges touching `(side, node)` in component `c`.
pub(crate) fn gather_incident(
    state: &VariationalState,
    data: &WeightMatrix,
    side: Side,
    node: usize,
    c: usize,
    out: &mut Vec<IncidentEdge>,
) {
    out.clear();
    let (m, n, k) = state.dims();
    match side {
        Side::Sender => {
            for j in 0..n {
                if data.is_observed(node, j) {
                    out.push(IncidentEdge {
                        x: data.get(node, j),
                        resp: state.resp[state.resp_index(node, j, c)],
                        partner_alpha: state.alpha_v[j * k + c],
                        partner_beta: state.beta_v[j * k + c],
                    });
                }
            }
        }
        Side::Receiver => {
            for i in 0..m {
                if data.is_observed(i, node) {
                    out.push(IncidentEdge {
                        x: data.get(i, node),
                        resp: state.resp[state.resp_index(i, node, c)],
                        partner_alpha: state.alpha_u[i * k + c],
                        partner_beta: state.beta_u[i * k + c],
                    });
                }
            }
        }
    }
}

/// The part of F that depends on one position (side, node, c), as a
/// function of its (α̃, β̃): incident likelihood terms, its share of the
/// S̃ penalty and its entropy.
pub(crate) struct NodeObjective<'a> {
    pub edges: &'a [IncidentEdge],
    /// ã_c / b̃_c
    pub precision_mean: f64,
}

impl NodeObjective<'_> {
    /// Per-edge likelihood terms at (alpha, beta).
    pub fn edge_terms(&self, alpha: f64, beta: f64, out: &mut Vec<f64>) {
        out.clear();
        out.extend(
            self.edges
                .iter()
                .map(|e| edge_likelihood(e.x, e.resp, alpha - e.partner_alpha, beta + e.partner_beta)),
        );
    }

    /// F(new) − F(old), given the per-edge terms already evaluated at old.
    pub fn delta(&self, old: (f64, f64), old_terms: &[f64], new: (f64, f64)) -> f64 {
        let (a0, b0) = old;
        let (a1, b1) = new;
        let mut lik = 0.0;
        for (e, t0) in self.edges.iter().zip(old_terms) {
            lik += edge_likelihood(e.x, e.resp, a1 - e.partner_alpha, b1 + e.partner_beta) - t0;
        }
        let prior = -0.5 * self.precision_mean * ((b1 + a1 * a1) - (b0 + a0 * a0));
        let entropy = 0.5 * (b1.ln() - b0.ln());
        lik + prior + entropy
    }
}

pub(crate) fn node_local_objective<'a>(
    state: &VariationalState,
    c: usize,
    edges: &'a [IncidentEdge],
) -> NodeObjective<'a> {
    NodeObjective {
        edges,
        precision_mean: state.gamma_shape[c] / state.gamma_rate[c],
    }
}

/// F(state with one position replaced) − F(state), touching only the
/// terms that involve that position.
#[allow(clippy::too_many_arguments)]
pub fn free_energy_node_delta(
    state: &VariationalState,
    data: &WeightMatrix,
    hyper: &Hyperparams,
    side: Side,
    node: usize,
    c: usize,
    new_alpha: f64,
    new_beta: f64,
) -> Result<f64> {
    state.check_dims(data, hyper)?;
    if !(new_beta > 0.0) {
        return Err(SlpmError::InvalidParameter(format!("variance must be positive, got {new_beta}")));
    }
    if node >= state.nodes(side) || c >= state.components() {
        return Err(SlpmError::Dimension(format!("position ({side:?}, {node}, {c}) out of range")));
    }
    let mut edges = Vec::new();
    gather_incident(state, data, side, node, c, &mut edges);
    let obj = node_local_objective(state, c, &edges);
    let old = (state.alpha(side, node, c), state.beta(side, node, c));
    let mut old_terms = Vec::new();
    obj.edge_terms(old.0, old.1, &mut old_terms);
    Ok(obj.delta(old, &old_terms, (new_alpha, new_beta)))
}
