mod common;

use common::{gaussian_matrix, orthonormal_2};
use lasso_augment::density::h_r;
use lasso_augment::samplers::{direct_sample_with, io, RdmlsOptions};
use lasso_augment::stats::{ks_one_sample, ks_two_sample, norm_cdf};
use lasso_augment::{
    build_problem, direct_sample, map_h, run_conditional_mls, run_mls, run_rdmls, spectral_decompose,
    summarize_chain, AugmentedState, ErrorModel, Execution, SamplerConfig,
};

// 1% critical value of the two-sample KS statistic with equal sizes m.
fn ks_crit(m: usize) -> f64 {
    1.63 * (2.0 / m as f64).sqrt()
}

#[test]
fn direct_draws_push_forward_to_the_score_law() {
    // Whitened H(θ) must be N(0, I) when ε is Gaussian.
    let (n, p) = (30, 4);
    let spec = build_problem(gaussian_matrix(n, p, 1), vec![1.0, 0.7, 1.3, 1.0], 0.25).unwrap();
    let beta = [0.8, 0.0, -0.4, 0.1];
    let sigma2 = 2.0;
    let ch = direct_sample(&spec, &beta, &ErrorModel::gaussian(sigma2), 20_000, 2).unwrap();
    let chol = spec.gram().clone().cholesky().unwrap();
    let scale = (n as f64 / sigma2).sqrt();
    let mut cols = vec![Vec::new(); p];
    for s in &ch.states {
        let u = map_h(s, &beta, &spec);
        let z = chol.l().solve_lower_triangular(&u).unwrap() * scale;
        for j in 0..p {
            cols[j].push(z[j]);
        }
    }
    for c in &cols {
        assert!(ks_one_sample(c, norm_cdf) < 1.63 / (20_000f64).sqrt());
    }
}

#[test]
fn high_dim_draws_push_forward_to_row_space_law() {
    let (n, p) = (6, 15);
    let spec = build_problem(gaussian_matrix(n, p, 3), vec![1.0; p], 0.2).unwrap();
    let basis = spectral_decompose(&spec).unwrap();
    let mut beta = vec![0.0; p];
    beta[2] = 1.0;
    let sigma2 = 1.0;
    let ch = direct_sample(&spec, &beta, &ErrorModel::gaussian(sigma2), 20_000, 4).unwrap();
    for k in 0..n {
        let sd = (sigma2 * basis.eigenvalues[k] / n as f64).sqrt();
        let z: Vec<f64> = ch.states.iter().map(|s| h_r(s, &beta, spec.lambda(), &basis, &spec)[k] / sd).collect();
        assert!(ks_one_sample(&z, norm_cdf) < 1.63 / (20_000f64).sqrt());
    }
}

/// Chains started from π and advanced a few steps must still be at π.
fn stationarity(model: ErrorModel, seed: u64) {
    let (n, p) = (25, 4);
    let spec = build_problem(gaussian_matrix(n, p, seed), vec![1.0; p], 0.3).unwrap();
    let beta = [0.6, 0.0, -0.3, 0.05];
    let chains = 6000;
    let mut cfg = SamplerConfig::defaults(&spec, Some(&beta), 1.0, seed).unwrap();
    cfg.k = 2;
    cfg.iters = 3;
    cfg.burn_in = 0;
    cfg.equilibrium_init = true;
    let finals: Vec<AugmentedState> = (0..chains)
        .map(|c| {
            let mut cf = cfg.clone();
            cf.chain_id = c as u64;
            run_mls(&spec, &beta, &model, &cf, None).unwrap().states.pop().unwrap()
        })
        .collect();
    let direct = direct_sample(&spec, &beta, &model, chains, seed + 1).unwrap();
    for j in 0..p {
        let a: Vec<f64> = finals.iter().map(|s| s.beta_hat()[j]).collect();
        let b: Vec<f64> = direct.states.iter().map(|s| s.beta_hat()[j]).collect();
        assert!(ks_two_sample(&a, &b) < ks_crit(chains), "coordinate {j}");
        let sa: Vec<f64> = finals.iter().map(|s| s.subgradient()[j]).collect();
        let sb: Vec<f64> = direct.states.iter().map(|s| s.subgradient()[j]).collect();
        assert!(ks_two_sample(&sa, &sb) < ks_crit(chains), "subgradient {j}");
    }
}

#[test]
fn mls_leaves_gaussian_target_invariant() {
    stationarity(ErrorModel::gaussian(1.0), 10);
}

#[test]
fn mls_leaves_t_target_invariant() {
    stationarity(ErrorModel::StudentT { dof: 5.0, scale: 1.0 }, 20);
}

#[test]
fn long_chain_matches_direct_selection() {
    let spec = build_problem(gaussian_matrix(40, 5, 30), vec![1.0; 5], 0.2).unwrap();
    let beta = [0.5, -0.5, 0.1, 0.0, 0.0];
    let model = ErrorModel::gaussian(1.0);
    let mut cfg = SamplerConfig::defaults(&spec, Some(&beta), 1.0, 31).unwrap();
    cfg.iters = 40_500;
    cfg.burn_in = 500;
    let init = direct_sample(&spec, &beta, &model, 1, 32).unwrap().states.pop().unwrap();
    let mls = run_mls(&spec, &beta, &model, &cfg, Some(&init)).unwrap();
    let dir = direct_sample(&spec, &beta, &model, 40_000, 33).unwrap();
    let (a, b) = (summarize_chain(&mls, None).unwrap(), summarize_chain(&dir, None).unwrap());
    for j in 0..5 {
        assert!((a.selection_prob[j] - b.selection_prob[j]).abs() < 0.02, "coordinate {j}");
    }
}

#[test]
fn parallel_and_sequential_direct_samples_agree() {
    let spec = build_problem(gaussian_matrix(20, 6, 40), vec![1.0; 6], 0.2).unwrap();
    let m = ErrorModel::gaussian(1.0);
    let a = direct_sample_with(Execution::Parallel, &spec, &[0.3; 6], &m, 500, 41).unwrap();
    let b = direct_sample_with(Execution::Sequential, &spec, &[0.3; 6], &m, 500, 41).unwrap();
    assert_eq!(a, b);
}

#[test]
fn conditional_sampler_keeps_the_model() {
    let spec = orthonormal_2(0.5);
    let mut cfg = SamplerConfig::defaults(&spec, None, 1.0, 50).unwrap();
    cfg.iters = 2000;
    cfg.burn_in = 100;
    let ch = run_conditional_mls(&spec, &[0.4, 0.2], &ErrorModel::gaussian(1.0), &[1], &cfg, None).unwrap();
    assert_eq!(ch.len(), 1900);
    assert!(ch.states.iter().all(|s| s.active_indices() == vec![1]));
}

#[test]
fn rdmls_runs_and_stays_in_space() {
    let pool = build_problem(gaussian_matrix(30, 3, 60), vec![1.0; 3], 0.2).unwrap();
    let beta = [0.5, 0.0, -0.2];
    let mut cfg = SamplerConfig::defaults(&pool, Some(&beta), 1.0, 61).unwrap();
    cfg.iters = 600;
    cfg.burn_in = 100;
    cfg.equilibrium_init = true;
    let ch = run_rdmls(&pool, &beta, &ErrorModel::gaussian(1.0), &cfg, None, RdmlsOptions::default()).unwrap();
    assert_eq!(ch.len(), 600);
    let (p, a) = ch.accept.design.unwrap();
    assert_eq!(p, 600);
    assert!(a > 0);
    for s in &ch.states {
        s.validate().unwrap();
    }
}

#[test]
fn chain_csv_round_trip() {
    let spec = build_problem(gaussian_matrix(20, 4, 70), vec![1.0; 4], 0.2).unwrap();
    let ch = direct_sample(&spec, &[0.3, 0.0, 0.0, -0.3], &ErrorModel::gaussian(1.0), 50, 71).unwrap();
    let mut buf = Vec::new();
    io::write_chain_csv(&ch, &mut buf).unwrap();
    let (states, iters) = io::read_chain_csv(buf.as_slice(), 4).unwrap();
    assert_eq!(states, ch.states);
    assert_eq!(iters, ch.iterations);
}
