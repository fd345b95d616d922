//! Tail probabilities under a null model by importance sampling from an
//! inflated-variance trial distribution.

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::density::{h_r, log_density_low};
use crate::error::{Error, Result};
use crate::error_model::ErrorModel;
use crate::par::{map_indexed, try_map_indexed, Execution};
use crate::problem::ProblemSpec;
use crate::rng::{child_seed, stream, Domain};
use crate::samplers::direct_sample_with;
use crate::solver::lambda_max;
use crate::spectral::SpectralBasis;
use crate::state::AugmentedState;
use crate::stats::{log_sum_exp, mean, quantile_type7, sd};

pub const DEFAULT_M_DAGGER: f64 = 5.0;
pub const DEFAULT_L_PILOT: usize = 100;
/// ess/L below this flags weight degeneracy.
pub const DEGENERACY_RATIO: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialSpec {
    pub sigma2_dagger: f64,
    pub lambda_dagger: f64,
    pub m_dagger: f64,
    pub l_pilot: usize,
}

/// σ²† = M†σ₀² and λ† = first quartile (type 7) of the pilot λ values.
pub fn trial_from_pilot(pilot: &[f64], sigma2_0: f64, m_dagger: f64) -> Result<TrialSpec> {
    if pilot.is_empty() {
        return Err(Error::InvalidParameter("empty pilot sample".into()));
    }
    let lambda_dagger = quantile_type7(pilot, 0.25);
    if !(lambda_dagger > 0.0) {
        return Err(Error::Degenerate(format!("pilot first quartile is {lambda_dagger}; the trial penalty must be positive")));
    }
    Ok(TrialSpec { sigma2_dagger: m_dagger * sigma2_0, lambda_dagger, m_dagger, l_pilot: pilot.len() })
}

/// Pilot draws y ~ N(0, σ²†I) give λ(t) = ‖W⁻¹Xᵀy‖_∞/n, the smallest penalty
/// that zeroes the estimate; λ† is their first quartile, so roughly a quarter
/// of trial draws have β̂ = 0. The pilot ignores any nonzero null β₀.
pub fn tune_trial(spec: &ProblemSpec, sigma2_0: f64, m_dagger: f64, l_pilot: usize, seed: u64) -> Result<TrialSpec> {
    if !(sigma2_0 > 0.0) || !(m_dagger > 0.0) {
        return Err(Error::InvalidParameter("sigma2_0 and M† must be positive".into()));
    }
    let sd = (m_dagger * sigma2_0).sqrt();
    let normal = Normal::new(0.0, sd).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let pilot: Vec<f64> = map_indexed(Execution::default(), l_pilot, |t| {
        let mut rng = stream(seed, Domain::Pilot, t as u64);
        let y = nalgebra::DVector::from_fn(spec.n(), |_, _| normal.sample(&mut rng));
        lambda_max(spec, &y)
    });
    trial_from_pilot(&pilot, sigma2_0, m_dagger)
}

/// Test statistics T(β̂).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    L1,
    Linf,
    /// |β̂_j| for a 0-based coordinate j.
    AbsCoord(usize),
}

impl Statistic {
    pub fn eval(&self, state: &AugmentedState) -> f64 {
        let b = state.beta_hat();
        match *self {
            Statistic::L1 => b.iter().map(|v| v.abs()).sum(),
            Statistic::Linf => b.iter().fold(0.0, |a, v| a.max(v.abs())),
            Statistic::AbsCoord(j) => b[j].abs(),
        }
    }
}

/// log of the importance weight π(state; β₀, σ₀², λ*) / π(state; β₀, σ²†, λ†).
///
/// For p > n this is the closed form in row-space coordinates, using
/// det T(A;λ) = λ^{n−|A|} det T(A;1); for p ≤ n it is the ratio of the full
/// densities.
pub fn is_log_weight(
    state: &AugmentedState,
    spec: &ProblemSpec,
    basis: Option<&SpectralBasis>,
    sigma2_0: f64,
    lambda_star: f64,
    trial: &TrialSpec,
    beta0: &[f64],
) -> Result<f64> {
    if spec.is_high_dim() {
        let basis = basis.ok_or_else(|| Error::InvalidParameter("p > n weights need the spectral basis".into()))?;
        let n = spec.n();
        let a = state.n_active();
        if a > n {
            return Err(Error::OutsideSpace(format!("|A| = {a} exceeds n = {n}")));
        }
        let nf = n as f64;
        let scaled = |lam: f64| -> f64 {
            let r = h_r(state, beta0, lam, basis, spec);
            r.iter().zip(basis.eigenvalues.iter()).map(|(r, l)| r * r / l).sum()
        };
        let q_trial = scaled(trial.lambda_dagger);
        let q_target = scaled(lambda_star);
        Ok(nf / (2.0 * trial.sigma2_dagger) * q_trial - nf / (2.0 * sigma2_0) * q_target
            + (n - a) as f64 * (lambda_star / trial.lambda_dagger).ln()
            + 0.5 * nf * (trial.sigma2_dagger / sigma2_0).ln())
    } else {
        let target = spec.with_lambda(lambda_star)?;
        let proposal = spec.with_lambda(trial.lambda_dagger)?;
        Ok(log_density_low(state, beta0, &ErrorModel::gaussian(sigma2_0), &target)?
            - log_density_low(state, beta0, &ErrorModel::gaussian(trial.sigma2_dagger), &proposal)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ISResult {
    pub estimate: f64,
    /// Natural log of the estimate (−∞ when no draw reaches T*).
    pub log_estimate: f64,
    pub log_weights: Vec<f64>,
    /// Coefficient of variation across replicate runs, when available.
    pub cv: Option<f64>,
    pub ess: f64,
    pub hits: usize,
    pub degenerate: bool,
}

/// Self-normalized estimate Σw·1(|T| ≥ T*) / Σw, computed in log space.
pub fn estimate_pvalue(
    states: &[AugmentedState],
    statistic: &dyn Fn(&AugmentedState) -> f64,
    t_star: f64,
    log_weights: &[f64],
) -> Result<ISResult> {
    if states.is_empty() {
        return Err(Error::InvalidParameter("no states".into()));
    }
    if states.len() != log_weights.len() {
        return Err(Error::Dimension("one log-weight per state".into()));
    }
    let all = log_sum_exp(log_weights.iter().copied());
    if all == f64::NEG_INFINITY || all.is_nan() {
        return Err(Error::Degenerate("all importance weights vanish".into()));
    }
    let hit: Vec<f64> = states
        .iter()
        .zip(log_weights)
        .filter(|(s, _)| statistic(s).abs() >= t_star)
        .map(|(_, &w)| w)
        .collect();
    let log_estimate = if hit.is_empty() { f64::NEG_INFINITY } else { (log_sum_exp(hit.iter().copied()) - all).min(0.0) };
    let ess = (2.0 * all - log_sum_exp(log_weights.iter().map(|w| 2.0 * w))).exp().min(states.len() as f64);
    Ok(ISResult {
        estimate: log_estimate.exp(),
        log_estimate,
        log_weights: log_weights.to_vec(),
        cv: None,
        ess,
        hits: hit.len(),
        degenerate: ess / (states.len() as f64) < DEGENERACY_RATIO,
    })
}

/// Log-weights of every state for one target λ*.
pub fn log_weights_with(
    exec: Execution,
    states: &[AugmentedState],
    spec: &ProblemSpec,
    basis: Option<&SpectralBasis>,
    sigma2_0: f64,
    lambda_star: f64,
    trial: &TrialSpec,
    beta0: &[f64],
) -> Result<Vec<f64>> {
    try_map_indexed(exec, states.len(), |i| is_log_weight(&states[i], spec, basis, sigma2_0, lambda_star, trial, beta0))
}

/// Reuse one trial sample for several targets (λ*_k, T*_k).
#[allow(clippy::too_many_arguments)]
pub fn multi_test(
    states: &[AugmentedState],
    spec: &ProblemSpec,
    basis: Option<&SpectralBasis>,
    sigma2_0: f64,
    lambda_stars: &[f64],
    statistic: &dyn Fn(&AugmentedState) -> f64,
    t_stars: &[f64],
    trial: &TrialSpec,
    beta0: &[f64],
) -> Result<Vec<ISResult>> {
    if lambda_stars.len() != t_stars.len() {
        return Err(Error::Dimension("one T* per λ*".into()));
    }
    lambda_stars
        .iter()
        .zip(t_stars)
        .map(|(&lam, &t)| {
            let w = log_weights_with(Execution::default(), states, spec, basis, sigma2_0, lam, trial, beta0)?;
            estimate_pvalue(states, statistic, t, &w)
        })
        .collect()
}

/// Everything needed for one p-value computation under H₀: β = β₀.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PValueConfig {
    pub sigma2_0: f64,
    pub beta0: Vec<f64>,
    pub statistic: Statistic,
    pub l: usize,
    pub m_dagger: f64,
    pub l_pilot: usize,
    /// Fixed trial distribution; tuned from a pilot run when absent.
    pub trial: Option<TrialSpec>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSample {
    pub trial: TrialSpec,
    pub states: Vec<AugmentedState>,
}

/// Tune the trial (unless fixed) and draw L states from it.
pub fn draw_trial_sample(
    exec: Execution,
    spec: &ProblemSpec,
    cfg: &PValueConfig,
) -> Result<TrialSample> {
    spec.check_p(&cfg.beta0, "beta0")?;
    let trial = match cfg.trial {
        Some(t) => t,
        None => tune_trial(spec, cfg.sigma2_0, cfg.m_dagger, cfg.l_pilot, cfg.seed)?,
    };
    let trial_spec = spec.with_lambda(trial.lambda_dagger)?;
    let chain = direct_sample_with(exec, &trial_spec, &cfg.beta0, &ErrorModel::gaussian(trial.sigma2_dagger), cfg.l, cfg.seed)?;
    Ok(TrialSample { trial, states: chain.states })
}

/// Tune, sample, weight and estimate P(|T(β̂)| ≥ T*) at λ*.
pub fn run_pvalue(
    spec: &ProblemSpec,
    basis: Option<&SpectralBasis>,
    cfg: &PValueConfig,
    lambda_star: f64,
    t_star: f64,
) -> Result<(ISResult, TrialSpec)> {
    let sample = draw_trial_sample(Execution::default(), spec, cfg)?;
    let w = log_weights_with(Execution::default(), &sample.states, spec, basis, cfg.sigma2_0, lambda_star, &sample.trial, &cfg.beta0)?;
    let stat = cfg.statistic;
    Ok((estimate_pvalue(&sample.states, &|s| stat.eval(s), t_star, &w)?, sample.trial))
}

/// Several targets from a single trial sample.
pub fn run_multi_pvalue(
    spec: &ProblemSpec,
    basis: Option<&SpectralBasis>,
    cfg: &PValueConfig,
    lambda_stars: &[f64],
    t_stars: &[f64],
) -> Result<(Vec<ISResult>, TrialSpec)> {
    let sample = draw_trial_sample(Execution::default(), spec, cfg)?;
    let stat = cfg.statistic;
    let res = multi_test(&sample.states, spec, basis, cfg.sigma2_0, lambda_stars, &|s| stat.eval(s), t_stars, &sample.trial, &cfg.beta0)?;
    Ok((res, sample.trial))
}

/// Summary written by the CLI for one target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PValueReport {
    pub estimate: f64,
    pub log10_estimate: f64,
    pub ess: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cv: Option<f64>,
    #[serde(rename = "L")]
    pub l: usize,
    pub lambda_star: f64,
    pub t_star: f64,
    pub trial: TrialSummary,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub replicates: Vec<f64>,
    pub degenerate_weights: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub sigma2_dagger: f64,
    pub lambda_dagger: f64,
}

impl PValueReport {
    pub fn from_runs(runs: &[(ISResult, TrialSpec)], l: usize, lambda_star: f64, t_star: f64) -> Self {
        let est: Vec<f64> = runs.iter().map(|r| r.0.estimate).collect();
        let m = mean(&est);
        let cv = (runs.len() >= 2).then(|| if m > 0.0 { sd(&est) / m } else { f64::NAN });
        let first = &runs[0];
        PValueReport {
            estimate: m,
            log10_estimate: if runs.len() == 1 { first.0.log_estimate / std::f64::consts::LN_10 } else { m.log10() },
            ess: mean(&runs.iter().map(|r| r.0.ess).collect::<Vec<_>>()),
            cv,
            l,
            lambda_star,
            t_star,
            trial: TrialSummary { sigma2_dagger: first.1.sigma2_dagger, lambda_dagger: first.1.lambda_dagger },
            replicates: if runs.len() >= 2 { est } else { Vec::new() },
            degenerate_weights: runs.iter().any(|r| r.0.degenerate),
        }
    }
}

/// R independent runs (seeds derived from `cfg.seed`) of the single-target
/// pipeline; the report carries the mean estimate and the cv across runs.
pub fn replicate_pvalue(
    spec: &ProblemSpec,
    basis: Option<&SpectralBasis>,
    cfg: &PValueConfig,
    lambda_star: f64,
    t_star: f64,
    replicates: usize,
) -> Result<PValueReport> {
    let runs = replicate_runs(spec, basis, cfg, lambda_star, t_star, replicates)?;
    Ok(PValueReport::from_runs(&runs, cfg.l, lambda_star, t_star))
}

pub fn replicate_runs(
    spec: &ProblemSpec,
    basis: Option<&SpectralBasis>,
    cfg: &PValueConfig,
    lambda_star: f64,
    t_star: f64,
    replicates: usize,
) -> Result<Vec<(ISResult, TrialSpec)>> {
    if replicates == 0 {
        return Err(Error::InvalidParameter("need at least one replicate".into()));
    }
    if replicates == 1 {
        return Ok(vec![run_pvalue(spec, basis, cfg, lambda_star, t_star)?]);
    }
    try_map_indexed(Execution::default(), replicates, |r| {
        let mut c = cfg.clone();
        c.seed = child_seed(cfg.seed, r as u64);
        run_pvalue(spec, basis, &c, lambda_star, t_star)
    })
}
