mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slpm::inference::{update_dirichlet, update_gamma_params, update_responsibilities};
use slpm::simulate::{sample_network, SimulationConfig};
use slpm::{fit, free_energy, initialize_state, FitConfig, Hyperparams, InitConfig, VariationalState, WeightMatrix};

/// Allowance for rounding when comparing F at an optimum with F at a
/// nearby point.
fn no_gain(optimum: f64, perturbed: f64) -> bool {
    perturbed <= optimum + 1e-10 * optimum.abs().max(1.0)
}

#[test]
fn closed_form_updates_are_blockwise_optimal() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for seed in 0..200 {
        let mut p = common::random_problem(seed, 8, 4);
        let (m, n, k) = p.state.dims();
        update_responsibilities(&mut p.state, &p.data, &p.hyper).unwrap();
        let f0 = free_energy(&p.state, &p.data, &p.hyper).unwrap();
        let (i, j) = loop {
            let (i, j) = (rng.random_range(0..m), rng.random_range(0..n));
            if p.data.is_observed(i, j) {
                break (i, j);
            }
        };
        for sign in [1.0, -1.0] {
            let mut s = p.state.clone();
            let start = s.resp_index(i, j, 0);
            let row = &mut s.resp[start..start + k];
            let c = rng.random_range(0..k);
            row[c] *= 1.0 + sign * 0.01;
            let total: f64 = row.iter().sum();
            row.iter_mut().for_each(|r| *r /= total);
            let f = free_energy(&s, &p.data, &p.hyper).unwrap();
            assert!(no_gain(f0, f), "seed {seed}: responsibilities {f0} -> {f}");
        }

        update_dirichlet(&mut p.state, &p.data, &p.hyper).unwrap();
        update_gamma_params(&mut p.state, &p.data, &p.hyper).unwrap();
        let f0 = free_energy(&p.state, &p.data, &p.hyper).unwrap();
        for c in 0..k {
            for sign in [1.0, -1.0] {
                let factor = 1.0 + sign * 0.01;
                let fields: [fn(&mut VariationalState) -> &mut Vec<f64>; 3] =
                    [|s| &mut s.dirichlet, |s| &mut s.gamma_shape, |s| &mut s.gamma_rate];
                for (name, field) in ["dirichlet", "gamma_shape", "gamma_rate"].iter().zip(fields) {
                    let mut s = p.state.clone();
                    field(&mut s)[c] *= factor;
                    let f = free_energy(&s, &p.data, &p.hyper).unwrap();
                    assert!(no_gain(f0, f), "seed {seed}: {name}[{c}] x{factor}: {f0} -> {f}");
                }
            }
        }
    }
}

fn simulated(seed: u64, size: usize, k: usize) -> (WeightMatrix, Hyperparams, VariationalState) {
    let sim = sample_network(&SimulationConfig::new(size, size, 3, seed)).unwrap();
    let hyper = Hyperparams::defaults(k).unwrap();
    let (state, _) = initialize_state(&sim.data, &hyper, &InitConfig { seed, ..InitConfig::default() }).unwrap();
    (sim.data, hyper, state)
}

fn monotone(trace: &[f64]) -> bool {
    trace.windows(2).all(|w| w[1] >= w[0] - 1e-8 * w[0].abs())
}

#[test]
fn free_energy_never_decreases() {
    for seed in 0..10 {
        let (data, hyper, init) = simulated(seed, 15, 5);
        let (_, report) = fit(&data, &hyper, &init, &FitConfig { max_iter: 200, ..FitConfig::default() }).unwrap();
        assert!(monotone(&report.free_energy_trace), "seed {seed}");
    }
}

#[test]
fn every_block_update_is_non_decreasing() {
    for seed in 0..5 {
        let (data, hyper, init) = simulated(seed, 10, 4);
        let config = FitConfig { max_iter: 50, check_stages: true, ..FitConfig::default() };
        let (_, report) = fit(&data, &hyper, &init, &config).unwrap();
        let worst = report.min_stage_gain.unwrap();
        assert!(worst >= -1e-10, "seed {seed}: worst block change {worst}");
    }
}

#[test]
fn fits_are_deterministic() {
    let (data, hyper, init) = simulated(3, 20, 6);
    let config = FitConfig { max_iter: 100, ..FitConfig::default() };
    let (a, ra) = fit(&data, &hyper, &init, &config).unwrap();
    let (b, rb) = fit(&data, &hyper, &init, &config).unwrap();
    assert_eq!(a, b);
    assert_eq!(ra.free_energy_trace, rb.free_energy_trace);
}

#[cfg(feature = "parallel")]
#[test]
fn thread_count_does_not_change_results() {
    let (data, hyper, init) = simulated(4, 30, 5);
    let config = FitConfig { max_iter: 30, ..FitConfig::default() };
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| fit(&data, &hyper, &init, &config).unwrap())
    };
    let (a, ra) = run(1);
    let (b, rb) = run(3);
    assert_eq!(a, b);
    assert_eq!(ra.free_energy_trace, rb.free_energy_trace);
}

/// Applies a component permutation: new component c is old `perm[c]`.
fn permute(state: &VariationalState, perm: &[usize]) -> VariationalState {
    let k = perm.len();
    let mut s = state.clone();
    let per_k = |dst: &mut Vec<f64>, src: &[f64]| {
        for (row_dst, row_src) in dst.chunks_mut(k).zip(src.chunks(k)) {
            for c in 0..k {
                row_dst[c] = row_src[perm[c]];
            }
        }
    };
    per_k(&mut s.resp, &state.resp);
    per_k(&mut s.alpha_u, &state.alpha_u);
    per_k(&mut s.beta_u, &state.beta_u);
    per_k(&mut s.alpha_v, &state.alpha_v);
    per_k(&mut s.beta_v, &state.beta_v);
    per_k(&mut s.step_u, &state.step_u);
    per_k(&mut s.step_v, &state.step_v);
    per_k(&mut s.dirichlet, &state.dirichlet);
    per_k(&mut s.gamma_shape, &state.gamma_shape);
    per_k(&mut s.gamma_rate, &state.gamma_rate);
    s
}

#[test]
fn relabeling_is_equivariant() {
    let (data, hyper, init) = simulated(8, 12, 4);
    let perm = [2, 0, 3, 1];
    let config = FitConfig { max_iter: 25, ..FitConfig::default() };
    let (a, ra) = fit(&data, &hyper, &init, &config).unwrap();
    let (b, rb) = fit(&data, &hyper, &permute(&init, &perm), &config).unwrap();
    assert_eq!(ra.iterations, rb.iterations);
    for (x, y) in ra.free_energy_trace.iter().zip(&rb.free_energy_trace) {
        assert!((x - y).abs() <= 1e-9 * x.abs(), "{x} vs {y}");
    }
    let a = permute(&a, &perm);
    for (x, y) in a.alpha_u.iter().chain(&a.beta_v).zip(b.alpha_u.iter().chain(&b.beta_v)) {
        assert!((x - y).abs() <= 1e-7 * x.abs().max(1.0), "{x} vs {y}");
    }
    for (x, y) in ra.sorted_mixing.iter().zip(&rb.sorted_mixing) {
        assert!((x - y).abs() < 1e-9);
    }
}

#[test]
fn constant_matrix_is_handled() {
    let data = WeightMatrix::new(6, 5, vec![2.0; 30]).unwrap();
    let hyper = Hyperparams::defaults(3).unwrap();
    let (init, diag) = initialize_state(&data, &hyper, &InitConfig::default()).unwrap();
    assert!(diag.degenerate_dissimilarities);
    let (state, report) = fit(&data, &hyper, &init, &FitConfig { max_iter: 300, ..FitConfig::default() }).unwrap();
    assert!(monotone(&report.free_energy_trace));
    state.validate(&data, &hyper).unwrap();
}

#[test]
fn unipartite_without_self_loops_ignores_diagonal() {
    let sim = sample_network(&SimulationConfig::new(8, 8, 2, 1)).unwrap();
    let data = sim.data.into_unipartite(true).unwrap();
    let hyper = Hyperparams::defaults(3).unwrap();
    let (init, _) = initialize_state(&data, &hyper, &InitConfig::default()).unwrap();
    let (state, report) = fit(&data, &hyper, &init, &FitConfig { max_iter: 50, ..FitConfig::default() }).unwrap();
    assert!(monotone(&report.free_energy_trace));
    // Changing a diagonal weight cannot matter once it is excluded.
    let mut values = data.values().to_vec();
    values[0] = 1e6;
    let mask = data.mask().to_vec();
    let other = WeightMatrix::with_mask(8, 8, values, mask).unwrap().into_unipartite(true).unwrap();
    let (state2, _) = fit(&other, &hyper, &init, &FitConfig { max_iter: 50, ..FitConfig::default() }).unwrap();
    assert_eq!(state, state2);
}
