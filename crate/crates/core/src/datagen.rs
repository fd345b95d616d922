//! Synthetic datasets with an equicorrelated Gaussian design.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::{stream, Domain};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub beta0: Vec<f64>,
}

/// β₀ with five +1 entries, then five −1 entries, then zeros (truncated when
/// p < 10).
pub fn sparse_signal(p: usize) -> Vec<f64> {
    (0..p)
        .map(|j| match j {
            0..=4 => 1.0,
            5..=9 => -1.0,
            _ => 0.0,
        })
        .collect()
}

/// n rows drawn from N_p(0, Σ) with unit diagonal and off-diagonal ρ, using
/// x = √(1−ρ)·z + √ρ·z₀.
pub fn equicorrelated_design(n: usize, p: usize, rho: f64, seed: u64) -> Result<DMatrix<f64>> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::InvalidParameter(format!("rho must lie in [0, 1), got {rho}")));
    }
    let (a, b) = ((1.0 - rho).sqrt(), rho.sqrt());
    let mut x = DMatrix::zeros(n, p);
    for i in 0..n {
        let mut rng = stream(seed, Domain::DataGen, i as u64);
        let z0: f64 = rng.sample(StandardNormal);
        for j in 0..p {
            x[(i, j)] = a * rng.sample::<f64, _>(StandardNormal) + b * z0;
        }
    }
    Ok(x)
}

/// Design, sparse β₀ and y = Xβ₀ + ε with ε ~ N(0, σ²I).
pub fn generate(n: usize, p: usize, rho: f64, sigma2: f64, seed: u64) -> Result<Dataset> {
    if n == 0 || p == 0 {
        return Err(Error::InvalidParameter("n and p must be positive".into()));
    }
    if !(sigma2 >= 0.0) {
        return Err(Error::InvalidParameter("sigma2 must be nonnegative".into()));
    }
    let x = equicorrelated_design(n, p, rho, seed)?;
    let beta0 = sparse_signal(p);
    let mut rng = stream(seed, Domain::DataGen, n as u64);
    let sd = sigma2.sqrt();
    let y = &x * DVector::from_column_slice(&beta0) + DVector::from_fn(n, |_, _| sd * rng.sample::<f64, _>(StandardNormal));
    Ok(Dataset { x, y, beta0 })
}
