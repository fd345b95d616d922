use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::error_model::ErrorModel;
use crate::problem::{log_det_d, ProblemSpec};
use crate::state::AugmentedState;

/// H = Cβ̂ + λWS − Cβ.
pub fn map_h(state: &AugmentedState, beta: &[f64], spec: &ProblemSpec) -> DVector<f64> {
    map_h_at(state, beta, spec.lambda(), spec)
}

pub(crate) fn map_h_at(state: &AugmentedState, beta: &[f64], lambda: f64, spec: &ProblemSpec) -> DVector<f64> {
    let bh = state.beta_hat();
    let diff = DVector::from_iterator(spec.p(), bh.iter().zip(beta).map(|(a, b)| a - b));
    let s = state.subgradient();
    let ws = DVector::from_iterator(spec.p(), s.iter().zip(spec.weights()).map(|(s, w)| lambda * w * s));
    spec.gram() * diff + ws
}

/// D(A) with columns in coordinate order: column j is C_j for active j and
/// λw_j e_j otherwise, so that H = D θ + λW_A s_A − Cβ.
pub fn d_matrix(active: &[bool], spec: &ProblemSpec) -> DMatrix<f64> {
    let p = spec.p();
    let mut d = DMatrix::zeros(p, p);
    for j in 0..p {
        if active[j] {
            d.set_column(j, &spec.gram().column(j));
        } else {
            d[(j, j)] = spec.lambda() * spec.weights()[j];
        }
    }
    d
}

/// Mean and covariance of θ under Gaussian errors, on the sign orthant given
/// by `s_active` (one sign per active index, ascending order). Entries are in
/// coordinate order: θ_j = b_j for active j, s_j otherwise.
pub fn normal_moments(
    active: &[usize],
    s_active: &[f64],
    beta: &[f64],
    sigma2: f64,
    spec: &ProblemSpec,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let p = spec.p();
    spec.check_p(beta, "beta")?;
    if active.len() != s_active.len() {
        return Err(Error::Dimension("one sign per active index".into()));
    }
    let mut mask = vec![false; p];
    let mut offset = spec.gram() * DVector::from_column_slice(beta);
    for (&j, &s) in active.iter().zip(s_active) {
        mask[j] = true;
        offset[j] -= spec.lambda() * spec.weights()[j] * s;
    }
    let d = d_matrix(&mask, spec);
    let lu = d.lu();
    let d_inv = lu.try_inverse().ok_or_else(|| Error::Singular("D(A)".into()))?;
    let mu = &d_inv * offset;
    let mut sigma = &d_inv * spec.gram() * d_inv.transpose() * (sigma2 / spec.n() as f64);
    sigma = (&sigma + sigma.transpose()) * 0.5;
    Ok((mu, sigma))
}

/// uᵀC⁻¹u.
pub fn quad_form_gram_inverse(u: &DVector<f64>, spec: &ProblemSpec) -> Result<f64> {
    let ci = spec.gram_inverse()?;
    Ok(u.dot(&(ci * u)))
}

/// log π(b_A, s_I, A; β) = log f_U(H) + log |det D(A)|.
pub fn log_density_low(state: &AugmentedState, beta: &[f64], model: &ErrorModel, spec: &ProblemSpec) -> Result<f64> {
    if spec.is_high_dim() {
        return Err(Error::InvalidParameter("low-dimensional density needs p <= n".into()));
    }
    if state.p() != spec.p() {
        return Err(Error::Dimension("state and problem disagree on p".into()));
    }
    spec.check_p(beta, "beta")?;
    state.validate()?;
    model.validate()?;
    let u = map_h(state, beta, spec);
    let q = quad_form_gram_inverse(&u, spec)?;
    let lf = model.log_density_quadratic(q, spec.p(), spec.n(), spec.log_det_gram()?);
    Ok(lf + log_det_d(&state.active_indices(), spec)?)
}
