use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::error_model::ErrorModel;
use crate::linalg;
use crate::problem::ProblemSpec;
use crate::spectral::SpectralBasis;
use crate::state::AugmentedState;

/// Tolerance on the row-space constraint for states with p > n.
pub const C_TOL: f64 = 1e-6;

/// ‖V_Nᵀ W S‖_∞, the violation of the requirement that WS lies in row(X).
pub fn constraint_residual(state: &AugmentedState, basis: &SpectralBasis, spec: &ProblemSpec) -> f64 {
    let s = state.subgradient();
    let ws = DVector::from_iterator(spec.p(), s.iter().zip(spec.weights()).map(|(s, w)| s * w));
    basis.v_n.tr_mul(&ws).amax()
}

/// Orthonormal basis B(I) of null(V_INᵀ W_II), of size |I|×(n−|A|).
pub fn null_basis(inactive: &[usize], basis: &SpectralBasis, spec: &ProblemSpec) -> Result<DMatrix<f64>> {
    let (n, p) = (spec.n(), spec.p());
    let k = inactive.len();
    let q = p - n;
    if k < q {
        return Err(Error::InvalidParameter(format!("|I| = {k} is below p − n = {q}")));
    }
    if k == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    // Mᵀ = W_II V_IN, padded with zero columns to a square matrix so the SVD
    // returns a full set of left singular vectors.
    let mut a = DMatrix::zeros(k, k);
    for (i, &j) in inactive.iter().enumerate() {
        for c in 0..q {
            a[(i, c)] = spec.weights()[j] * basis.v_n[(j, c)];
        }
    }
    let svd = a.clone().svd(true, false);
    let u = svd.u.ok_or_else(|| Error::Singular("svd failed".into()))?;
    let sv = &svd.singular_values;
    let smax = sv.iter().fold(0.0f64, |m, &v| m.max(v));
    let cut = k as f64 * f64::EPSILON * smax.max(1.0);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&x, &y| sv[y].total_cmp(&sv[x]));
    let rank = order.iter().filter(|&&i| sv[i] > cut).count();
    if rank != q {
        return Err(Error::RankDeficient(format!(
            "V_INᵀW_II has rank {rank}, expected {q}; some n columns of X are linearly dependent"
        )));
    }
    let mut b = DMatrix::zeros(k, k - q);
    for (c, &i) in order[q..].iter().enumerate() {
        b.set_column(c, &u.column(i));
    }
    Ok(b)
}

/// T(A) = (V_Rᵀ C_A | λ V_IRᵀ W_II B(I)), an n×n matrix.
pub fn jacobian_t(
    active: &[usize],
    inactive: &[usize],
    lambda: f64,
    null_b: &DMatrix<f64>,
    basis: &SpectralBasis,
    spec: &ProblemSpec,
) -> Result<DMatrix<f64>> {
    let n = spec.n();
    if active.len() > n {
        return Err(Error::OutsideSpace(format!("|A| = {} exceeds n = {n}", active.len())));
    }
    if null_b.ncols() + active.len() != n || null_b.nrows() != inactive.len() {
        return Err(Error::Dimension("null basis has the wrong shape".into()));
    }
    let mut t = DMatrix::zeros(n, n);
    for (k, &j) in active.iter().enumerate() {
        t.set_column(k, &basis.v_r.tr_mul(&spec.gram().column(j)));
    }
    if !inactive.is_empty() && null_b.ncols() > 0 {
        let mut v_ir_w = DMatrix::zeros(n, inactive.len());
        for (i, &j) in inactive.iter().enumerate() {
            for r in 0..n {
                v_ir_w[(r, i)] = basis.v_r[(j, r)] * spec.weights()[j] * lambda;
            }
        }
        t.view_mut((0, active.len()), (n, null_b.ncols())).copy_from(&(v_ir_w * null_b));
    }
    Ok(t)
}

/// log |det T(A; λ)|.
pub fn log_abs_det_t(active: &[usize], lambda: f64, basis: &SpectralBasis, spec: &ProblemSpec) -> Result<f64> {
    let inactive: Vec<usize> = (0..spec.p()).filter(|j| !active.contains(j)).collect();
    let b = null_basis(&inactive, basis, spec)?;
    let t = jacobian_t(active, &inactive, lambda, &b, basis, spec)?;
    linalg::log_abs_det(&t, "T(A)")
}

/// H_r = V_Rᵀ (Cβ̂ + λWS − Cβ).
pub fn h_r(state: &AugmentedState, beta: &[f64], lambda: f64, basis: &SpectralBasis, spec: &ProblemSpec) -> DVector<f64> {
    basis.v_r.tr_mul(&super::low::map_h_at(state, beta, lambda, spec))
}

pub fn log_density_high(
    state: &AugmentedState,
    beta: &[f64],
    model: &ErrorModel,
    spec: &ProblemSpec,
    basis: &SpectralBasis,
) -> Result<f64> {
    let inactive = state.inactive_indices();
    let b = null_basis(&inactive, basis, spec)?;
    log_density_high_with_null_basis(state, beta, model, spec, basis, &b)
}

/// As [`log_density_high`] with a caller-supplied B(I).
pub fn log_density_high_with_null_basis(
    state: &AugmentedState,
    beta: &[f64],
    model: &ErrorModel,
    spec: &ProblemSpec,
    basis: &SpectralBasis,
    null_b: &DMatrix<f64>,
) -> Result<f64> {
    if !spec.is_high_dim() {
        return Err(Error::InvalidParameter("row-space density needs p > n".into()));
    }
    if !matches!(model, ErrorModel::Gaussian { .. }) {
        return Err(Error::Unsupported("only Gaussian errors are supported when p > n".into()));
    }
    model.validate()?;
    spec.check_p(beta, "beta")?;
    state.validate()?;
    let resid = constraint_residual(state, basis, spec);
    if resid > C_TOL {
        return Err(Error::ConstraintViolated(resid));
    }
    let active = state.active_indices();
    let inactive = state.inactive_indices();
    let t = jacobian_t(&active, &inactive, spec.lambda(), null_b, basis, spec)?;
    let log_det = linalg::log_abs_det(&t, "T(A)")?;
    let r = h_r(state, beta, spec.lambda(), basis, spec);
    let q: f64 = r.iter().zip(basis.eigenvalues.iter()).map(|(r, l)| r * r / l).sum();
    Ok(model.log_density_quadratic(q, spec.n(), spec.n(), basis.log_det_lambda()) + log_det)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::build_problem;
    use crate::solver::{solve_lasso, SolverOptions};
    use crate::spectral::spectral_decompose;
    use crate::testutil::random_spec;

    fn toy() -> (ProblemSpec, SpectralBasis) {
        let spec = build_problem(DMatrix::from_row_slice(1, 2, &[1.0, 1.0]), vec![1.0, 1.0], 0.5).unwrap();
        let b = spectral_decompose(&spec).unwrap();
        (spec, b)
    }

    #[test]
    fn residual_hand_values() {
        let (spec, b) = toy();
        let same = AugmentedState::from_parts(2, &[], &[], &[0.3, 0.3]).unwrap();
        assert!(constraint_residual(&same, &b, &spec) < 1e-15);
        let opp = AugmentedState::from_parts(2, &[], &[], &[0.3, -0.3]).unwrap();
        assert!((constraint_residual(&opp, &b, &spec) - 0.6 / 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn null_basis_hand_value() {
        let (spec, b) = toy();
        let nb = null_basis(&[0, 1], &b, &spec).unwrap();
        assert_eq!(nb.shape(), (2, 1));
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((nb[(0, 0)].abs() - r).abs() < 1e-14 && (nb[(0, 0)] - nb[(1, 0)]).abs() < 1e-14);
    }

    #[test]
    fn full_active_set_gives_empty_null_basis() {
        let spec = random_spec(3, 5, 0.3, 4);
        let b = spectral_decompose(&spec).unwrap();
        let nb = null_basis(&[1, 3], &b, &spec).unwrap();
        assert_eq!(nb.ncols(), 0);
    }

    #[test]
    fn null_basis_properties() {
        for seed in 0..30 {
            let spec = random_spec(3, 5, 0.3, seed);
            let b = spectral_decompose(&spec).unwrap();
            let inactive = [0, 2, 3, 4];
            let nb = null_basis(&inactive, &b, &spec).unwrap();
            assert_eq!(nb.ncols(), 2);
            assert!((nb.transpose() * &nb - DMatrix::identity(2, 2)).amax() < 1e-10);
            let m = DMatrix::from_fn(2, 4, |c, i| b.v_n[(inactive[i], c)] * spec.weights()[inactive[i]]);
            assert!((m * &nb).amax() < 1e-10);
        }
    }

    #[test]
    fn jacobian_has_full_rank() {
        for seed in 0..20 {
            let spec = random_spec(4, 9, 0.3, seed);
            let b = spectral_decompose(&spec).unwrap();
            for active in [vec![], vec![2], vec![0, 5, 8], vec![1, 2, 3, 4]] {
                let inactive: Vec<usize> = (0..9).filter(|j| !active.contains(j)).collect();
                let nb = null_basis(&inactive, &b, &spec).unwrap();
                let t = jacobian_t(&active, &inactive, 0.3, &nb, &b, &spec).unwrap();
                assert_eq!(linalg::numerical_rank(&t), 4);
            }
        }
    }

    #[test]
    fn direct_draws_are_feasible_and_round_trip() {
        let spec = random_spec(6, 12, 0.1, 3);
        let b = spectral_decompose(&spec).unwrap();
        let mut beta = vec![0.0; 12];
        beta[0] = 1.0;
        beta[4] = -0.7;
        for k in 0..20 {
            let eps = DVector::from_fn(6, |i, _| ((k * 7 + i) as f64 * 0.91).sin() * 0.5);
            let y = spec.x() * DVector::from_column_slice(&beta) + &eps;
            let sol = solve_lasso(&spec, &y, &SolverOptions::default()).unwrap();
            let st = AugmentedState::from_solution(&sol);
            assert!(constraint_residual(&st, &b, &spec) <= 1e-8);
            let r = h_r(&st, &beta, spec.lambda(), &b, &spec);
            assert!((r - b.v_r.tr_mul(&spec.xt_over_n(&eps))).amax() < 1e-8);
            let ld = log_density_high(&st, &beta, &ErrorModel::gaussian(0.25), &spec, &b).unwrap();
            assert!(ld.is_finite());
        }
    }

    #[test]
    fn infeasible_state_is_rejected() {
        let (spec, b) = toy();
        let opp = AugmentedState::from_parts(2, &[], &[], &[0.3, -0.3]).unwrap();
        let r = log_density_high(&opp, &[0.0, 0.0], &ErrorModel::gaussian(1.0), &spec, &b);
        assert!(matches!(r, Err(Error::ConstraintViolated(_))));
    }

    #[test]
    fn t_errors_unsupported_in_high_dim() {
        let (spec, b) = toy();
        let st = AugmentedState::from_parts(2, &[], &[], &[0.3, 0.3]).unwrap();
        let m = ErrorModel::StudentT { dof: 3.0, scale: 1.0 };
        assert!(matches!(log_density_high(&st, &[0.0, 0.0], &m, &spec, &b), Err(Error::Unsupported(_))));
    }

    #[test]
    fn toy_density_integrates_to_one() {
        // p=2, n=1, X=(1,2): WS must be parallel to (1,2), so Ω_r is the
        // segment S = (t, 2t), |t| ≤ ½, with A=∅ plus the line A={2} with
        // S₁ = sgn(b₂)/2. A={1} would need |S₂| = 2 and is empty.
        let spec = build_problem(DMatrix::from_row_slice(1, 2, &[1.0, 2.0]), vec![1.0, 1.0], 0.5).unwrap();
        let b = spectral_decompose(&spec).unwrap();
        let m = ErrorModel::gaussian(1.0);
        let beta = [0.2, -0.1];
        let h = 1e-4;
        let mut total = 0.0;
        // A = ∅: the base measure is Lebesgue in the coordinate z of
        // S_I = B(I)z, so dz = dt/|B₁|.
        let nb = null_basis(&[0, 1], &b, &spec).unwrap();
        let scale = nb[(0, 0)].abs();
        let steps = (1.0 / h) as usize;
        for k in 0..steps {
            let t = -0.5 + (k as f64 + 0.5) * h;
            let st = AugmentedState::from_parts(2, &[], &[], &[t, 2.0 * t]).unwrap();
            total += log_density_high(&st, &beta, &m, &spec, &b).unwrap().exp() * h / scale;
        }
        let steps = 200_000;
        let hb = 20.0 / steps as f64;
        for k in 0..steps {
            let v = -10.0 + (k as f64 + 0.5) * hb;
            let st = AugmentedState::from_parts(2, &[1], &[v], &[0.5 * v.signum()]).unwrap();
            total += log_density_high(&st, &beta, &m, &spec, &b).unwrap().exp() * hb;
        }
        let other = AugmentedState::from_parts(2, &[0], &[1.0], &[1.0]).unwrap();
        assert!(log_density_high(&other, &beta, &m, &spec, &b).is_err());
        assert!((total - 1.0).abs() < 0.01, "total mass {total}");
    }
}
