//! Samplers for the augmented estimator: exact draws via the Lasso, the
//! Metropolis-Hastings Lasso sampler (MLS), its conditional and random-design
//! variants.

mod conditional;
mod direct;
pub mod io;
mod mls;
mod rdmls;

use serde::{Deserialize, Serialize};

pub use conditional::run_conditional_mls;
pub use direct::{direct_draw, direct_sample, direct_sample_with};
pub use mls::{run_mls, MlsKernel, StepOutcome};
pub use rdmls::{run_rdmls, RdmlsOptions};

use crate::error::{Error, Result};
use crate::problem::ProblemSpec;
use crate::state::AugmentedState;
use crate::stats::norm_cdf;

/// Proposal families: P1 moves an active coefficient, P2 redraws an inactive
/// subgradient, P3 drops a coordinate from the model, P4 adds one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProposalKind {
    P1,
    P2,
    P3,
    P4,
}

impl ProposalKind {
    fn idx(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceTally {
    pub proposed: [u64; 4],
    pub accepted: [u64; 4],
    /// Design moves of the random-design sampler (proposed, accepted).
    pub design: Option<(u64, u64)>,
}

impl AcceptanceTally {
    pub(crate) fn record(&mut self, kind: ProposalKind, accepted: bool) {
        self.proposed[kind.idx()] += 1;
        if accepted {
            self.accepted[kind.idx()] += 1;
        }
    }

    pub fn rate(&self, kind: ProposalKind) -> Option<f64> {
        let i = kind.idx();
        (self.proposed[i] > 0).then(|| self.accepted[i] as f64 / self.proposed[i] as f64)
    }

    /// Combined acceptance rate of the model-changing proposals P3 and P4.
    pub fn model_move_rate(&self) -> Option<f64> {
        let prop = self.proposed[2] + self.proposed[3];
        (prop > 0).then(|| (self.accepted[2] + self.accepted[3]) as f64 / prop as f64)
    }

    /// Warnings when model-move acceptance leaves the usual [0.1, 0.6] band.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        for kind in [ProposalKind::P3, ProposalKind::P4] {
            if let Some(r) = self.rate(kind) {
                if !(0.1..=0.6).contains(&r) {
                    out.push(format!("{kind:?} acceptance rate {r:.3} is outside [0.1, 0.6]"));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chain {
    pub states: Vec<AugmentedState>,
    /// Iteration number of each kept state (1-based; direct draws use the
    /// replicate number).
    pub iterations: Vec<usize>,
    pub accept: AcceptanceTally,
    pub seed: u64,
}

impl Chain {
    pub fn len(&self) -> usize {
        self.states.len()
    }
    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
    pub fn p(&self) -> usize {
        self.states.first().map_or(0, |s| s.p())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Coordinates receiving model-update proposals per iteration.
    pub k: usize,
    /// Selection weights for the model-update coordinates.
    pub alpha: Vec<f64>,
    /// Proposal scales τ_j.
    pub tau: Vec<f64>,
    pub iters: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub equilibrium_init: bool,
    /// Determinant ratios come from the sweep state once |A| exceeds this.
    pub sweep_cutover: usize,
    /// Stream index, so several chains can share one seed.
    pub chain_id: u64,
}

pub const DEFAULT_ITERS: usize = 5500;
pub const DEFAULT_BURN_IN: usize = 500;
pub const DEFAULT_SWEEP_CUTOVER: usize = 8;

impl SamplerConfig {
    /// Tuning defaults. With a reference estimate β̂* the model-update weights
    /// are α_j ∝ Φ(−|β̂*_j|/ζ_j) + ω₀ and τ_j = 2ζ_j, ζ_j being the OLS
    /// standard error; without one, α is uniform and τ_j = 2σ/√(n C_jj).
    pub fn defaults(spec: &ProblemSpec, reference: Option<&[f64]>, sigma2: f64, seed: u64) -> Result<Self> {
        let p = spec.p();
        let n = spec.n() as f64;
        if !(sigma2 > 0.0) {
            return Err(Error::InvalidParameter("sigma2 must be positive".into()));
        }
        let (alpha, tau) = match (reference, spec.gram_inverse()) {
            (Some(r), Ok(ci)) => {
                spec.check_p(r, "reference estimate")?;
                let zeta: Vec<f64> = (0..p).map(|j| (sigma2 * ci[(j, j)] / n).sqrt()).collect();
                let omega: Vec<f64> = (0..p).map(|j| norm_cdf(-r[j].abs() / zeta[j])).collect();
                let omega0 = omega.iter().sum::<f64>() / (5.0 * p as f64);
                let alpha = omega.iter().map(|w| w + omega0).collect();
                (alpha, zeta.iter().map(|z| 2.0 * z).collect())
            }
            _ => {
                let tau = (0..p).map(|j| 2.0 * (sigma2 / (n * spec.gram()[(j, j)])).sqrt()).collect();
                (vec![1.0; p], tau)
            }
        };
        Ok(SamplerConfig {
            k: p.div_ceil(5),
            alpha,
            tau,
            iters: DEFAULT_ITERS,
            burn_in: DEFAULT_BURN_IN,
            seed,
            equilibrium_init: false,
            sweep_cutover: DEFAULT_SWEEP_CUTOVER,
            chain_id: 0,
        })
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        if self.k < 1 || self.k > p {
            return Err(Error::InvalidParameter(format!("K = {} must lie in [1, {p}]", self.k)));
        }
        if self.alpha.len() != p || self.tau.len() != p {
            return Err(Error::Dimension("alpha and tau need p entries".into()));
        }
        if self.alpha.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(Error::InvalidParameter("alpha must be positive".into()));
        }
        if self.tau.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(Error::InvalidParameter("tau must be positive".into()));
        }
        if self.burn_in >= self.iters && !self.equilibrium_init {
            return Err(Error::InvalidParameter("burn-in must be shorter than the run".into()));
        }
        Ok(())
    }

    pub(crate) fn effective_burn_in(&self) -> usize {
        if self.equilibrium_init {
            0
        } else {
            self.burn_in
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{identity_spec, random_spec};

    #[test]
    fn defaults_without_reference() {
        let spec = identity_spec(10, 0.3);
        let c = SamplerConfig::defaults(&spec, None, 4.0, 1).unwrap();
        assert_eq!(c.k, 2);
        assert!(c.alpha.iter().all(|&a| a == 1.0));
        // n = p = 10, C = I: τ = 2·2/√10
        assert!(c.tau.iter().all(|t| (t - 4.0 / 10f64.sqrt()).abs() < 1e-12));
        assert_eq!((c.iters, c.burn_in), (5500, 500));
    }

    #[test]
    fn defaults_with_reference() {
        let spec = random_spec(30, 6, 0.2, 3);
        let r = [1.0, 0.0, 0.0, 0.5, 0.0, -2.0];
        let c = SamplerConfig::defaults(&spec, Some(&r), 1.0, 1).unwrap();
        assert_eq!(c.k, 2);
        assert!(c.alpha[1] > c.alpha[0] && c.alpha[0] > c.alpha[5]);
        let ci = spec.gram_inverse().unwrap();
        assert!((c.tau[2] - 2.0 * (ci[(2, 2)] / 30.0).sqrt()).abs() < 1e-12);
        let omega: Vec<f64> = (0..6).map(|j| norm_cdf(-r[j].abs() / (c.tau[j] / 2.0))).collect();
        let w0 = omega.iter().sum::<f64>() / 30.0;
        assert!((c.alpha[3] - omega[3] - w0).abs() < 1e-12);
    }

    #[test]
    fn invalid_configs() {
        let spec = identity_spec(3, 0.3);
        let mut c = SamplerConfig::defaults(&spec, None, 1.0, 1).unwrap();
        c.validate(3).unwrap();
        c.k = 4;
        assert!(c.validate(3).is_err());
        c.k = 1;
        c.burn_in = c.iters;
        assert!(c.validate(3).is_err());
        c.equilibrium_init = true;
        assert!(c.validate(3).is_ok());
    }
}
