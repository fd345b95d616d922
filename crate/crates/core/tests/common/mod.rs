#![allow(dead_code)]

use std::io::Write;

use lasso_augment::rng::{stream, Domain};
use lasso_augment::{build_problem, ProblemSpec};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

/// Print one result line straight to the process stderr (bypassing the test
/// harness capture), then fail the test if the criterion did not hold.
pub fn report(id: u32, name: &str, pass: bool, detail: &str) {
    let line = format!("[acceptance] C{id:02} {name}: {} ({detail})\n", if pass { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(pass, "criterion {id} failed: {detail}");
}

pub fn gaussian_matrix(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = stream(seed, Domain::Replicate, 0);
    DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal))
}

pub fn gaussian_vector(n: usize, sd: f64, seed: u64, index: u64) -> DVector<f64> {
    let mut rng = stream(seed, Domain::Replicate, index);
    DVector::from_fn(n, |_, _| sd * rng.sample::<f64, _>(StandardNormal))
}

/// n = 4, p = 2 design with C = XᵀX/n = I.
pub fn orthonormal_2(lambda: f64) -> ProblemSpec {
    let x = DMatrix::from_row_slice(4, 2, &[1.0, 1.0, 1.0, -1.0, 1.0, 1.0, 1.0, -1.0]);
    build_problem(x, vec![1.0, 1.0], lambda).unwrap()
}

/// n = 4, p = 1 design with C = 1.
pub fn orthonormal_1(lambda: f64) -> ProblemSpec {
    build_problem(DMatrix::from_element(4, 1, 1.0), vec![1.0], lambda).unwrap()
}
