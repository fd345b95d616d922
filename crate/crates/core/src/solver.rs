//! Lasso by cyclic coordinate descent on the Gram form of the loss.
//!
//! Minimizing ½‖y − Xβ‖² + nλ Σ w_j|β_j| is the same as minimizing
//! ½βᵀCβ − gᵀβ + λ Σ w_j|β_j| with g = Xᵀy/n, so everything works from (C, g).
//! The same core also solves the quadratic problem with g = Cβ used by the
//! posterior decision sampler.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::problem::ProblemSpec;

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub kkt_tol: f64,
    pub s_tol: f64,
    /// Maximum number of coordinate sweeps (full or active-set).
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { kkt_tol: 1e-8, s_tol: 1e-6, max_iter: 100_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoSolution {
    pub beta_hat: Vec<f64>,
    pub subgrad: Vec<f64>,
    pub active: Vec<usize>,
    pub kkt_residual: f64,
}

fn soft(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// max-norm of the KKT defect given the gradient term r = g − Cβ.
fn kkt_defect(beta: &[f64], r: &DVector<f64>, w: &[f64], lambda: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..beta.len() {
        let t = lambda * w[j];
        let d = if beta[j] != 0.0 { (r[j] - t * beta[j].signum()).abs() } else { (r[j].abs() - t).max(0.0) };
        worst = worst.max(d);
    }
    worst
}

fn residual_vec(c: &DMatrix<f64>, g: &DVector<f64>, beta: &[f64]) -> DVector<f64> {
    g - c * DVector::from_column_slice(beta)
}

fn update_coordinate(c: &DMatrix<f64>, beta: &mut [f64], r: &mut DVector<f64>, j: usize, t: f64) -> f64 {
    let cjj = c[(j, j)];
    let new = if cjj > 0.0 { soft(r[j] + cjj * beta[j], t) / cjj } else { 0.0 };
    let delta = new - beta[j];
    if delta != 0.0 {
        r.axpy(-delta, &c.column(j), 1.0);
        beta[j] = new;
    }
    delta.abs()
}

/// Re-solve exactly on the current support and signs. Kept only when the
/// signs survive and the KKT defect does not get worse.
fn polish(c: &DMatrix<f64>, g: &DVector<f64>, w: &[f64], lambda: f64, beta: &mut Vec<f64>, defect: &mut f64) {
    let active: Vec<usize> = (0..beta.len()).filter(|&j| beta[j] != 0.0).collect();
    if active.is_empty() {
        return;
    }
    let caa = linalg::submatrix(c, &active, &active);
    let Ok(ch) = linalg::cholesky(caa, "C_AA") else { return };
    let rhs = DVector::from_iterator(
        active.len(),
        active.iter().map(|&j| g[j] - lambda * w[j] * beta[j].signum()),
    );
    let b = ch.solve(&rhs);
    let mut cand = vec![0.0; beta.len()];
    for (k, &j) in active.iter().enumerate() {
        if b[k] == 0.0 || b[k].signum() != beta[j].signum() {
            return;
        }
        cand[j] = b[k];
    }
    let r = residual_vec(c, g, &cand);
    let d = kkt_defect(&cand, &r, w, lambda);
    if d <= *defect {
        *beta = cand;
        *defect = d;
    }
}

/// Minimize ½βᵀCβ − gᵀβ + λ Σ w_j|β_j|.
pub fn solve_gram(
    c: &DMatrix<f64>,
    g: &DVector<f64>,
    w: &[f64],
    lambda: f64,
    opts: &SolverOptions,
    warm: Option<&[f64]>,
) -> Result<LassoSolution> {
    let p = c.nrows();
    if g.len() != p || w.len() != p || c.ncols() != p {
        return Err(Error::Dimension("gram, gradient and weights disagree".into()));
    }
    let mut beta = warm.map(|b| b.to_vec()).unwrap_or_else(|| vec![0.0; p]);
    let mut r = residual_vec(c, g, &beta);
    let mut sweeps = 0usize;
    let mut defect;
    loop {
        for j in 0..p {
            update_coordinate(c, &mut beta, &mut r, j, lambda * w[j]);
        }
        sweeps += 1;
        r = residual_vec(c, g, &beta);
        defect = kkt_defect(&beta, &r, w, lambda);
        if defect <= opts.kkt_tol || sweeps >= opts.max_iter {
            break;
        }
        // iterate on the current support until it settles
        let active: Vec<usize> = (0..p).filter(|&j| beta[j] != 0.0).collect();
        let mut inner = 0;
        while !active.is_empty() && sweeps < opts.max_iter && inner < 10_000 {
            let mut change: f64 = 0.0;
            for &j in &active {
                change = change.max(update_coordinate(c, &mut beta, &mut r, j, lambda * w[j]));
            }
            sweeps += 1;
            inner += 1;
            let scale = active.iter().fold(1.0f64, |a, &j| a.max(beta[j].abs()));
            if change <= 1e-3 * opts.kkt_tol * scale {
                break;
            }
        }
    }
    polish(c, g, w, lambda, &mut beta, &mut defect);
    if defect > opts.kkt_tol {
        polish(c, g, w, lambda, &mut beta, &mut defect);
        if defect > opts.kkt_tol {
            return Err(Error::NotConverged { iterations: sweeps, residual: defect, best: beta });
        }
    }
    let r = residual_vec(c, g, &beta);
    let subgrad: Vec<f64> = (0..p)
        .map(|j| if beta[j] != 0.0 { beta[j].signum() } else { r[j] / (lambda * w[j]) })
        .collect();
    let active = (0..p).filter(|&j| beta[j] != 0.0).collect();
    Ok(LassoSolution { beta_hat: beta, subgrad, active, kkt_residual: defect })
}

pub fn solve_lasso(spec: &ProblemSpec, y: &DVector<f64>, opts: &SolverOptions) -> Result<LassoSolution> {
    if y.len() != spec.n() {
        return Err(Error::Dimension(format!("y has length {}, expected {}", y.len(), spec.n())));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("response contains non-finite entries".into()));
    }
    let g = spec.xt_over_n(y);
    solve_gram(spec.gram(), &g, spec.weights(), spec.lambda(), opts, None)
}

/// S = (nλW)⁻¹ Xᵀ(y − Xβ̂). Errors when β̂ is visibly not a minimizer.
pub fn subgradient_of(spec: &ProblemSpec, y: &DVector<f64>, beta_hat: &[f64], s_tol: f64) -> Result<Vec<f64>> {
    spec.check_p(beta_hat, "beta_hat")?;
    let r = residual_vec(spec.gram(), &spec.xt_over_n(y), beta_hat);
    let s: Vec<f64> = (0..spec.p()).map(|j| r[j] / (spec.lambda() * spec.weights()[j])).collect();
    for j in 0..spec.p() {
        let bad = if beta_hat[j] != 0.0 {
            (s[j] - beta_hat[j].signum()).abs() > s_tol
        } else {
            s[j].abs() > 1.0 + s_tol
        };
        if bad {
            return Err(Error::InvalidParameter(format!(
                "not a minimizer: subgradient coordinate {j} is {}",
                s[j]
            )));
        }
    }
    Ok(s)
}

/// ‖W⁻¹Xᵀy‖_∞ / n, the smallest λ with β̂ = 0.
pub fn lambda_max(spec: &ProblemSpec, y: &DVector<f64>) -> f64 {
    let g = spec.xt_over_n(y);
    g.iter().zip(spec.weights()).fold(0.0f64, |a, (v, w)| a.max(v.abs() / w))
}

/// Log-spaced grid from λ_max down to `ratio`·λ_max.
pub fn lambda_grid(lambda_max: f64, ratio: f64, len: usize) -> Vec<f64> {
    if len <= 1 {
        return vec![lambda_max];
    }
    let step = ratio.ln() / (len - 1) as f64;
    (0..len).map(|k| lambda_max * (step * k as f64).exp()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::build_problem;
    use crate::testutil::{identity_spec, random_spec};
    use proptest::prelude::*;

    /// Exhaustive search over the 3^p sign patterns.
    pub(crate) fn enumerate_oracle(c: &DMatrix<f64>, g: &DVector<f64>, w: &[f64], lambda: f64) -> Vec<f64> {
        let p = c.nrows();
        let mut pattern = vec![0i8; p];
        loop {
            let active: Vec<usize> = (0..p).filter(|&j| pattern[j] != 0).collect();
            let caa = linalg::submatrix(c, &active, &active);
            let rhs = DVector::from_iterator(
                active.len(),
                active.iter().map(|&j| g[j] - lambda * w[j] * pattern[j] as f64),
            );
            let solved = if active.is_empty() { Some(DVector::zeros(0)) } else { caa.lu().solve(&rhs) };
            if let Some(b) = solved {
                let mut beta = vec![0.0; p];
                let mut ok = true;
                for (k, &j) in active.iter().enumerate() {
                    ok &= b[k] * pattern[j] as f64 > 0.0;
                    beta[j] = b[k];
                }
                if ok {
                    let r = g - c * DVector::from_column_slice(&beta);
                    if (0..p).all(|j| pattern[j] != 0 || r[j].abs() <= lambda * w[j] + 1e-12) {
                        return beta;
                    }
                }
            }
            let mut k = 0;
            loop {
                if k == p {
                    panic!("no feasible sign pattern");
                }
                pattern[k] = match pattern[k] {
                    0 => 1,
                    1 => -1,
                    _ => 0,
                };
                if pattern[k] != 0 {
                    break;
                }
                k += 1;
            }
        }
    }

    #[test]
    fn orthonormal_soft_threshold() {
        let spec = identity_spec(2, 0.5);
        let g = DVector::from_column_slice(&[2.0, 0.3]);
        let sol = solve_gram(spec.gram(), &g, spec.weights(), 0.5, &SolverOptions::default(), None).unwrap();
        assert!((sol.beta_hat[0] - 1.5).abs() < 1e-12 && sol.beta_hat[1] == 0.0);
        assert!((sol.subgrad[0] - 1.0).abs() < 1e-15 && (sol.subgrad[1] - 0.6).abs() < 1e-12);
        assert_eq!(sol.active, vec![0]);
    }

    #[test]
    fn orthonormal_subgradient_from_data() {
        let spec = identity_spec(2, 0.5);
        // y chosen so that Xᵀy/n = (2, 0.3)
        let target = DVector::from_column_slice(&[2.0, 0.3]);
        let y = spec.x().clone().transpose().lu().solve(&(target * spec.n() as f64)).unwrap();
        let s = subgradient_of(&spec, &y, &[1.5, 0.0], 1e-6).unwrap();
        assert!((s[0] - 1.0).abs() < 1e-12 && (s[1] - 0.6).abs() < 1e-12);
        assert!(subgradient_of(&spec, &y, &[1.0, 0.0], 1e-6).is_err());
    }

    #[test]
    fn zero_data() {
        let spec = random_spec(8, 4, 0.3, 1);
        let sol = solve_lasso(&spec, &DVector::zeros(8), &SolverOptions::default()).unwrap();
        assert!(sol.beta_hat.iter().all(|&b| b == 0.0));
        assert!(sol.subgrad.iter().all(|&s| s == 0.0));
        assert_eq!(lambda_max(&spec, &DVector::zeros(8)), 0.0);
    }

    #[test]
    fn above_lambda_max_is_all_zero() {
        let spec = random_spec(8, 4, 0.3, 1);
        let y = DVector::from_fn(8, |i, _| (i as f64).sin());
        let lm = lambda_max(&spec, &y);
        let big = spec.with_lambda(lm * 1.0001).unwrap();
        let sol = solve_lasso(&big, &y, &SolverOptions::default()).unwrap();
        assert!(sol.active.is_empty());
        let g = spec.xt_over_n(&y);
        for j in 0..4 {
            assert!((sol.subgrad[j] - g[j] / (big.lambda() * big.weights()[j])).abs() < 1e-12);
        }
        let below = spec.with_lambda(lm * 0.999).unwrap();
        assert!(!solve_lasso(&below, &y, &SolverOptions::default()).unwrap().active.is_empty());
    }

    #[test]
    fn lambda_max_examples() {
        let spec = identity_spec(2, 0.5);
        let y = spec.x().clone().transpose().lu().solve(&DVector::from_column_slice(&[4.0, 0.6])).unwrap();
        assert!((lambda_max(&spec, &y) - 2.0).abs() < 1e-12);
        let weighted = build_problem(spec.x().clone(), vec![2.0, 1.0], 0.5).unwrap();
        assert!((lambda_max(&weighted, &y) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn noiseless_subgradient_identity() {
        let spec = random_spec(10, 3, 0.2, 4);
        let y = spec.x() * DVector::from_column_slice(&[1.0, -2.0, 0.5]);
        let sol = solve_lasso(&spec, &y, &SolverOptions::default()).unwrap();
        let s = subgradient_of(&spec, &y, &sol.beta_hat, 1e-6).unwrap();
        for &j in &sol.active {
            assert!((s[j] - sol.beta_hat[j].signum()).abs() < 1e-7);
        }
    }

    #[test]
    fn non_convergence_carries_best_iterate() {
        let spec = random_spec(20, 8, 0.01, 6);
        let y = DVector::from_fn(20, |i, _| (i as f64 * 0.7).cos());
        let opts = SolverOptions { kkt_tol: 1e-300, s_tol: 1e-6, max_iter: 3 };
        match solve_lasso(&spec, &y, &opts) {
            Err(Error::NotConverged { best, residual, .. }) => {
                assert_eq!(best.len(), 8);
                assert!(residual > 0.0);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn high_dim_solution_is_sparse_and_optimal() {
        let spec = random_spec(10, 30, 0.05, 8);
        let y = DVector::from_fn(10, |i, _| (i as f64 * 1.3).sin() * 2.0);
        let sol = solve_lasso(&spec, &y, &SolverOptions::default()).unwrap();
        assert!(sol.kkt_residual <= 1e-8);
        assert!(sol.active.len() <= 10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn matches_sign_enumeration(seed in 0u64..10_000, p in 1usize..=5, lam in 0.02f64..0.6) {
            let spec = random_spec(p + 4, p, lam, seed);
            let y = DVector::from_fn(p + 4, |i, _| ((seed as f64 + 1.0) * (i as f64 + 0.3)).sin());
            let sol = solve_lasso(&spec, &y, &SolverOptions::default()).unwrap();
            let g = spec.xt_over_n(&y);
            let oracle = enumerate_oracle(spec.gram(), &g, spec.weights(), lam);
            for j in 0..p {
                prop_assert!((sol.beta_hat[j] - oracle[j]).abs() < 1e-6);
            }
            prop_assert!(sol.kkt_residual <= 1e-8);
            for &j in &sol.active {
                prop_assert_eq!(sol.subgrad[j], sol.beta_hat[j].signum());
            }
            prop_assert!(sol.subgrad.iter().all(|s| s.abs() <= 1.0 + 1e-6));
        }
    }
}
