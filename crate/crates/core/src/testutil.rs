use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};

use crate::problem::{build_problem, ProblemSpec};

/// Spec whose Gram matrix equals the given p×p matrix (n = p).
pub fn spec_with_gram(c: &[f64], p: usize, w: Vec<f64>, lambda: f64) -> ProblemSpec {
    let c = DMatrix::from_row_slice(p, p, c);
    let l = nalgebra::Cholesky::new(c).unwrap().l();
    let x = l.transpose() * (p as f64).sqrt();
    build_problem(x, w, lambda).unwrap()
}

pub fn identity_spec(p: usize, lambda: f64) -> ProblemSpec {
    let mut c = vec![0.0; p * p];
    for j in 0..p {
        c[j * p + j] = 1.0;
    }
    spec_with_gram(&c, p, vec![1.0; p], lambda)
}

pub fn random_spec(n: usize, p: usize, lambda: f64, seed: u64) -> ProblemSpec {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let x = DMatrix::from_fn(n, p, |_, _| rng.random::<f64>() * 2.0 - 1.0);
    let w: Vec<f64> = (0..p).map(|_| 0.5 + rng.random::<f64>()).collect();
    build_problem(x, w, lambda).unwrap()
}
