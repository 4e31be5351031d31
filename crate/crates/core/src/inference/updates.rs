use std::sync::atomic::{AtomicBool, Ordering};

use crate::error::{Result, SlpmError};
use crate::model::{EdgeMoments, Hyperparams, VariationalState, WeightMatrix};
use crate::par;
use crate::special::digamma;

/// Sets every observed edge's responsibilities to their optimum given the
/// rest of the state:
///
/// λ̃_ijk ∝ exp{ψ(η̃²/ζ̃) − log(η̃/ζ̃) − x_ij η̃ + ψ(δ̃_k) − ψ(Σ δ̃)}.
///
/// Unobserved edges keep their previous values.
pub fn update_responsibilities(state: &mut VariationalState, data: &WeightMatrix, hyper: &Hyperparams) -> Result<()> {
    state.check_dims(data, hyper)?;
    let (_, n, k) = state.dims();
    let psi_total = digamma(state.dirichlet.iter().sum());
    let log_weight: Vec<f64> = state.dirichlet.iter().map(|&d| digamma(d) - psi_total).collect();

    let mut resp = std::mem::take(&mut state.resp);
    let failed = AtomicBool::new(false);
    {
        let st = &*state;
        par::for_each_chunk_mut(&mut resp, n * k, |i, row| {
            let mut exps = vec![0.0; k];
            for j in 0..n {
                if !data.is_observed(i, j) {
                    continue;
                }
                let x = data.get(i, j);
                let mut max = f64::NEG_INFINITY;
                for c in 0..k {
                    let mo = EdgeMoments::from_gap(st.alpha_u[i * k + c] - st.alpha_v[j * k + c], st.beta_u[i * k + c] + st.beta_v[j * k + c]);
                    let e = mo.expected_log_theta() - x * mo.eta + log_weight[c];
                    exps[c] = e;
                    if e > max {
                        max = e;
                    }
                }
                if !max.is_finite() {
                    failed.store(true, Ordering::Relaxed);
                    continue;
                }
                let mut total = 0.0;
                for e in exps.iter_mut() {
                    *e = (*e - max).exp();
                    total += *e;
                }
                let out = &mut row[j * k..(j + 1) * k];
                for (o, e) in out.iter_mut().zip(&exps) {
                    *o = e / total;
                }
            }
        });
    }
    state.resp = resp;
    if failed.load(Ordering::Relaxed) {
        return Err(SlpmError::Numerical("responsibility exponents are not finite".into()));
    }
    Ok(())
}

/// Total observed responsibility mass per component, Σ_ij λ̃_ijk.
pub(crate) fn responsibility_mass(state: &VariationalState, data: &WeightMatrix) -> Vec<f64> {
    let (m, n, k) = state.dims();
    let mut mass = vec![0.0; k];
    for i in 0..m {
        for j in 0..n {
            if data.is_observed(i, j) {
                for (acc, r) in mass.iter_mut().zip(state.edge_responsibilities(i, j)) {
                    *acc += r;
                }
            }
        }
    }
    mass
}

/// δ̃_k = δ_k + Σ_ij λ̃_ijk over observed edges.
pub fn update_dirichlet(state: &mut VariationalState, data: &WeightMatrix, hyper: &Hyperparams) -> Result<()> {
    state.check_dims(data, hyper)?;
    let mass = responsibility_mass(state, data);
    for ((d, prior), m) in state.dirichlet.iter_mut().zip(&hyper.delta).zip(mass) {
        *d = prior + m;
    }
    Ok(())
}

/// ã_k = a_k + (M+N)/2 and b̃_k = b_k + S̃_k / 2.
pub fn update_gamma_params(state: &mut VariationalState, data: &WeightMatrix, hyper: &Hyperparams) -> Result<()> {
    state.check_dims(data, hyper)?;
    let (m, n, k) = state.dims();
    for c in 0..k {
        let s = state.second_moment_sum(c);
        state.gamma_shape[c] = hyper.a[c] + (m + n) as f64 / 2.0;
        state.gamma_rate[c] = hyper.b[c] + 0.5 * s;
    }
    Ok(())
}

/// Share of observed responsibility mass held by each component, in
/// component order.
pub fn mixing_proportions(state: &VariationalState, data: &WeightMatrix) -> Vec<f64> {
    let mass = responsibility_mass(state, data);
    let total = data.observed_count() as f64;
    mass.into_iter().map(|m| m / total).collect()
}
