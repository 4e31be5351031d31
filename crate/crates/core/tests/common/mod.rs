#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use slpm::{Hyperparams, VariationalState, WeightMatrix};

pub struct Problem {
    pub data: WeightMatrix,
    pub hyper: Hyperparams,
    pub state: VariationalState,
}

/// Random data (some zeros, some masked entries), random hyperparameters
/// and a random valid variational state with M, N ≤ max_nodes, K ≤ max_k.
pub fn random_problem(seed: u64, max_nodes: usize, max_k: usize) -> Problem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.random_range(1..=max_nodes);
    let n = rng.random_range(1..=max_nodes);
    let k = rng.random_range(1..=max_k);
    let values: Vec<f64> = (0..m * n)
        .map(|_| if rng.random_bool(0.2) { 0.0 } else { 3.0 * rng.sample::<f64, _>(Exp1) })
        .collect();
    let mut mask: Vec<bool> = (0..m * n).map(|_| !rng.random_bool(0.1)).collect();
    mask[rng.random_range(0..m * n)] = true;
    let data = WeightMatrix::with_mask(m, n, values, mask).unwrap();

    let pos = |rng: &mut ChaCha8Rng, len: usize| -> Vec<f64> { (0..len).map(|_| rng.random_range(0.2..3.0)).collect() };
    let hyper = Hyperparams::new(pos(&mut rng, k), pos(&mut rng, k), pos(&mut rng, k)).unwrap();

    let mut state = VariationalState::new(m, n, k, 0.1);
    for edge in state.resp.chunks_mut(k) {
        let w: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
        let total: f64 = w.iter().sum();
        for (r, x) in edge.iter_mut().zip(w) {
            *r = x / total;
        }
    }
    for a in state.alpha_u.iter_mut().chain(state.alpha_v.iter_mut()) {
        *a = StandardNormal.sample(&mut rng);
    }
    for b in state.beta_u.iter_mut().chain(state.beta_v.iter_mut()) {
        *b = rng.random_range(0.05..2.0);
    }
    state.dirichlet = pos(&mut rng, k);
    state.gamma_shape = pos(&mut rng, k);
    state.gamma_rate = pos(&mut rng, k);
    Problem { data, hyper, state }
}
