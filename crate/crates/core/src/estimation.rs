//! Plug-in estimation: σ², an elliptical error model, thresholded β̌, the
//! sign-consistency probability and the Bayesian decision sampler.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::density::d_matrix;
use crate::error::{Error, Result};
use crate::error_model::{ErrorModel, RadialHistogram};
use crate::linalg::{cholesky, inv_sqrt_spd, submatrix};
use crate::par::{map_indexed, try_map_indexed, Execution};
use crate::problem::ProblemSpec;
use crate::rng::{stream, Domain};
use crate::samplers::{AcceptanceTally, Chain};
use crate::solver::{solve_gram, SolverOptions};
use crate::state::AugmentedState;
use crate::stats::quantile_type7;

/// ‖y − Xβ̌‖² / (n − p).
pub fn estimate_sigma2(spec: &ProblemSpec, y: &DVector<f64>, beta_check: &[f64]) -> Result<f64> {
    let (n, p) = (spec.n(), spec.p());
    if p >= n {
        return Err(Error::InvalidParameter(format!("sigma2 estimate needs p < n (p = {p}, n = {n})")));
    }
    spec.check_p(beta_check, "beta_check")?;
    if y.len() != n {
        return Err(Error::Dimension(format!("y has length {}, expected {n}", y.len())));
    }
    let r = y - spec.x() * DVector::from_column_slice(beta_check);
    Ok(r.norm_squared() / (n - p) as f64)
}

/// Residuals y − Xβ̌.
pub fn residuals(spec: &ProblemSpec, y: &DVector<f64>, beta_check: &[f64]) -> Result<Vec<f64>> {
    spec.check_p(beta_check, "beta_check")?;
    if y.len() != spec.n() {
        return Err(Error::Dimension("y length".into()));
    }
    Ok((y - spec.x() * DVector::from_column_slice(beta_check)).iter().copied().collect())
}

/// Least-squares estimate (requires rank(X) = p ≤ n).
pub fn ols_estimate(spec: &ProblemSpec, y: &DVector<f64>) -> Result<Vec<f64>> {
    if spec.is_high_dim() || spec.rank_deficient() {
        return Err(Error::RankDeficient("least squares needs rank(X) = p".into()));
    }
    if y.len() != spec.n() {
        return Err(Error::Dimension("y length".into()));
    }
    let chol = cholesky(spec.gram().clone(), "C")?;
    Ok(chol.solve(&spec.xt_over_n(y)).iter().copied().collect())
}

/// Radii ‖C^{-1/2}Xᵀε*/n‖ of K residual bootstraps, with the residual pool.
pub fn bootstrap_radii(
    spec: &ProblemSpec,
    y: &DVector<f64>,
    beta_check: &[f64],
    k: usize,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if spec.is_high_dim() {
        return Err(Error::InvalidParameter("the elliptical fit needs p <= n".into()));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("need at least one bootstrap".into()));
    }
    let resid = residuals(spec, y, beta_check)?;
    if resid.iter().all(|r| r.abs() <= f64::EPSILON * y.amax().max(1.0)) {
        return Err(Error::Degenerate("residuals are all zero; no noise to resample".into()));
    }
    let whiten = inv_sqrt_spd(spec.gram())?;
    let n = spec.n();
    let radii = map_indexed(Execution::default(), k, |i| {
        let mut rng = stream(seed, Domain::Bootstrap, i as u64);
        let eps = DVector::from_fn(n, |_, _| resid[rng.random_range(0..n)]);
        (&whiten * spec.xt_over_n(&eps)).norm()
    });
    Ok((radii, resid))
}

/// Radial-histogram model for U built from K residual bootstraps.
///
/// Each bootstrap resamples the residuals with replacement, forms
/// Ũ = C^{-1/2}Xᵀε*/n and records ‖Ũ‖. Radii beyond the last edge count
/// towards the total but not towards any bin.
pub fn fit_elliptical_fu(
    spec: &ProblemSpec,
    y: &DVector<f64>,
    beta_check: &[f64],
    k: usize,
    edges: Vec<f64>,
    seed: u64,
) -> Result<ErrorModel> {
    let (radii, resid) = bootstrap_radii(spec, y, beta_check, k, seed)?;
    radial_model(radii, resid, edges, spec.p())
}

/// As [`fit_elliptical_fu`] with `bins` equal-width bins up to the 99.5%
/// quantile of the bootstrap radii.
pub fn fit_elliptical_fu_auto(
    spec: &ProblemSpec,
    y: &DVector<f64>,
    beta_check: &[f64],
    k: usize,
    bins: usize,
    seed: u64,
) -> Result<ErrorModel> {
    if bins == 0 {
        return Err(Error::InvalidParameter("need at least one bin".into()));
    }
    let (radii, resid) = bootstrap_radii(spec, y, beta_check, k, seed)?;
    let top = quantile_type7(&radii, 0.995);
    if !(top > 0.0) {
        return Err(Error::Degenerate("bootstrap radii are all zero".into()));
    }
    let edges = (0..=bins).map(|m| top * m as f64 / bins as f64).collect();
    radial_model(radii, resid, edges, spec.p())
}

fn radial_model(radii: Vec<f64>, resid: Vec<f64>, edges: Vec<f64>, dim: usize) -> Result<ErrorModel> {
    let k = radii.len();
    let mut counts = vec![0u64; edges.len().saturating_sub(1)];
    let top = edges.last().copied().unwrap_or(0.0);
    for r in radii {
        if r < top {
            let m = edges.partition_point(|&e| e <= r).saturating_sub(1);
            counts[m] += 1;
        }
    }
    Ok(ErrorModel::EmpiricalElliptical(RadialHistogram::new(edges, counts, k as u64, dim, resid)?))
}

/// β̌_j = β̂_j·1(|β̂_j| > b_th).
pub fn threshold_estimator(beta_hat: &[f64], b_th: f64) -> Result<Vec<f64>> {
    if !(b_th > 0.0) {
        return Err(Error::InvalidParameter("threshold must be positive".into()));
    }
    Ok(beta_hat.iter().map(|&b| if b.abs() > b_th { b } else { 0.0 }).collect())
}

/// Monte Carlo estimate of P(A = supp β₀, sgn = sgn β₀) under Gaussian noise.
///
/// The event is equivalent to Z = D̃⁻¹(U + Cβ₀ − λW_A s₀) lying in the
/// orthant-box Ω_{A₀,s₀}, so each draw costs one triangular solve instead of
/// a Lasso fit. U = Xᵀε/n is drawn through ε, which also covers p > n.
pub fn sign_consistency_prob(spec: &ProblemSpec, beta0: &[f64], sigma2: f64, l: usize, seed: u64) -> Result<f64> {
    spec.check_p(beta0, "beta0")?;
    if !(sigma2 >= 0.0) || l == 0 {
        return Err(Error::InvalidParameter("need sigma2 >= 0 and L >= 1".into()));
    }
    let p = spec.p();
    let mask: Vec<bool> = beta0.iter().map(|&b| b != 0.0).collect();
    let act: Vec<usize> = (0..p).filter(|&j| mask[j]).collect();
    if !act.is_empty() {
        cholesky(submatrix(spec.gram(), &act, &act), "C_A0A0")?;
    }
    let lu = d_matrix(&mask, spec).lu();
    let mut offset = spec.gram() * DVector::from_column_slice(beta0);
    for &j in &act {
        offset[j] -= spec.lambda() * spec.weights()[j] * beta0[j].signum();
    }
    let sd = sigma2.sqrt();
    let n = spec.n();
    let hits = try_map_indexed(Execution::default(), l, |t| {
        let mut rng = stream(seed, Domain::SignConsistency, t as u64);
        let eps = DVector::from_fn(n, |_, _| sd * rng.sample::<f64, _>(StandardNormal));
        let z = lu
            .solve(&(spec.xt_over_n(&eps) + &offset))
            .ok_or_else(|| Error::Singular("D matrix".into()))?;
        Ok::<bool, Error>((0..p).all(|j| if mask[j] { z[j] * beta0[j] > 0.0 } else { z[j].abs() <= 1.0 }))
    })?;
    Ok(hits.iter().filter(|&&h| h).count() as f64 / l as f64)
}

/// Minimizer of the posterior decision loss for one parameter draw: the
/// Lasso problem with gradient Cβ̃ − Cβ, at penalty λ ≥ 0. At λ = 0 it is β
/// itself.
pub fn optimal_decision(spec: &ProblemSpec, beta: &[f64], lambda: f64) -> Result<AugmentedState> {
    spec.check_p(beta, "beta")?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("lambda must be nonnegative, got {lambda}")));
    }
    if lambda == 0.0 {
        return AugmentedState::new(beta.to_vec(), beta.iter().map(|&b| b != 0.0).collect());
    }
    let g = spec.gram() * DVector::from_column_slice(beta);
    let sol = solve_gram(spec.gram(), &g, spec.weights(), lambda, &SolverOptions::default(), None)?;
    Ok(AugmentedState::from_solution(&sol))
}

/// Decision draws (β̃, S̃) from the posterior of β under a flat prior.
///
/// Gaussian: β ~ N(β_OLS, σ²C⁻¹/n). StudentT{dof, scale}: the marginal
/// posterior t_dof(β_OLS, scale·C⁻¹/n); the usual choice is dof = n − p and
/// scale = σ̂². Each draw is mapped through [`optimal_decision`] at the
/// problem's λ.
pub fn posterior_decision_sample(
    spec: &ProblemSpec,
    y: &DVector<f64>,
    model: &ErrorModel,
    l: usize,
    seed: u64,
) -> Result<Chain> {
    posterior_decision_sample_at(spec, y, model, spec.lambda(), l, seed)
}

/// As [`posterior_decision_sample`] with an explicit λ ≥ 0.
pub fn posterior_decision_sample_at(
    spec: &ProblemSpec,
    y: &DVector<f64>,
    model: &ErrorModel,
    lambda: f64,
    l: usize,
    seed: u64,
) -> Result<Chain> {
    let (n, p) = (spec.n(), spec.p());
    if p >= n || spec.rank_deficient() {
        return Err(Error::RankDeficient(format!("posterior sampling needs rank(X) = p < n (p = {p}, n = {n})")));
    }
    if y.len() != n {
        return Err(Error::Dimension("y length".into()));
    }
    let (scale, dof) = match model {
        ErrorModel::Gaussian { sigma2 } if *sigma2 >= 0.0 => (*sigma2, None),
        ErrorModel::StudentT { dof, scale } => {
            model.validate()?;
            (*scale, Some((*dof, ChiSquared::new(*dof).map_err(|e| Error::InvalidParameter(e.to_string()))?)))
        }
        ErrorModel::Gaussian { .. } => return Err(Error::InvalidParameter("sigma2 must be nonnegative".into())),
        ErrorModel::EmpiricalElliptical(_) => {
            return Err(Error::Unsupported("posterior sampling supports Gaussian and t models".into()))
        }
    };
    let chol = cholesky(spec.gram().clone(), "C")?;
    let ols = chol.solve(&spec.xt_over_n(y));
    let lt: DMatrix<f64> = chol.l().transpose();
    let sd = (scale / n as f64).sqrt();
    let states = try_map_indexed(Execution::default(), l, |t| {
        let mut rng = stream(seed, Domain::Posterior, t as u64);
        let z = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mix = match &dof {
            Some((nu, chi)) => (nu / chi.sample(&mut rng)).sqrt(),
            None => 1.0,
        };
        let dev = lt.solve_upper_triangular(&z).ok_or_else(|| Error::Singular("C".into()))?;
        let beta: Vec<f64> = (0..p).map(|j| ols[j] + sd * mix * dev[j]).collect();
        optimal_decision(spec, &beta, lambda)
    })?;
    Ok(Chain { states, iterations: (1..=l).collect(), accept: AcceptanceTally::default(), seed })
}
