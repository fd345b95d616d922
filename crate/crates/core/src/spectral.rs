//! Row-space / null-space split of the Gram matrix for p > n.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::problem::ProblemSpec;

#[derive(Debug, Clone)]
pub struct SpectralBasis {
    /// Λ₁ ≥ … ≥ Λ_n > 0.
    pub eigenvalues: DVector<f64>,
    /// p×n, orthonormal, spans row(X).
    pub v_r: DMatrix<f64>,
    /// p×(p−n), orthonormal, spans null(X).
    pub v_n: DMatrix<f64>,
}

pub fn spectral_decompose(spec: &ProblemSpec) -> Result<SpectralBasis> {
    let (n, p) = (spec.n(), spec.p());
    if p <= n {
        return Err(Error::InvalidParameter(format!(
            "row/null split needs p > n (got n={n}, p={p})"
        )));
    }
    let (vals, vecs) = linalg::sorted_eigen(spec.gram());
    let cut = n.max(p) as f64 * f64::EPSILON * vals[0].max(0.0);
    let above = vals.iter().filter(|&&v| v > cut).count();
    if above < n {
        return Err(Error::RankDeficient(format!(
            "only {above} of {n} gram eigenvalues exceed the rank cut {cut:e}"
        )));
    }
    Ok(SpectralBasis {
        eigenvalues: vals.rows(0, n).into_owned(),
        v_r: vecs.columns(0, n).into_owned(),
        v_n: vecs.columns(n, p - n).into_owned(),
    })
}

impl SpectralBasis {
    pub fn n(&self) -> usize {
        self.v_r.ncols()
    }
    pub fn log_det_lambda(&self) -> f64 {
        self.eigenvalues.iter().map(|v| v.ln()).sum()
    }
}
