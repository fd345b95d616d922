//! Closed-form joint density of the augmented Lasso estimator (β̂, S) and
//! the samplers built on it.
//!
//! The main pieces are
//! - [`ProblemSpec`]: design, penalty weights and λ;
//! - [`log_density_low`] / [`log_density_high`]: the density of an
//!   [`AugmentedState`] for p ≤ n and p > n;
//! - direct, MH ([`run_mls`]), conditional and design-resampling samplers;
//! - importance-sampling p-values ([`run_pvalue`], [`multi_test`]);
//! - plug-in estimation and chain diagnostics.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

/// Library version, echoed in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod datagen;
pub mod density;
pub mod diagnostics;
pub mod error;
pub mod error_model;
pub mod estimation;
pub mod importance;
pub mod linalg;
pub mod par;
pub mod problem;
pub mod rng;
pub mod samplers;
pub mod solver;
pub mod spectral;
pub mod state;
pub mod stats;
pub mod sweep;

#[cfg(test)]
mod testutil;

pub use density::{constraint_residual, log_density_high, log_density_low, map_h};
pub use diagnostics::{chain_diagnostics, summarize_chain, EfficiencyReport, SummaryStats};
pub use error::{Error, ErrorClass, Result};
pub use error_model::{ErrorModel, RadialHistogram};
pub use estimation::{
    estimate_sigma2, fit_elliptical_fu, ols_estimate, posterior_decision_sample, sign_consistency_prob, threshold_estimator,
};
pub use importance::{
    estimate_pvalue, is_log_weight, multi_test, run_multi_pvalue, run_pvalue, tune_trial, ISResult, PValueConfig,
    Statistic, TrialSpec,
};
pub use par::Execution;
pub use problem::{build_problem, ProblemSpec};
pub use samplers::{
    direct_sample, run_conditional_mls, run_mls, run_rdmls, Chain, RdmlsOptions, SamplerConfig,
};
pub use solver::{solve_lasso, LassoSolution, SolverOptions};
pub use spectral::{spectral_decompose, SpectralBasis};
pub use state::AugmentedState;
pub use sweep::SweepState;
