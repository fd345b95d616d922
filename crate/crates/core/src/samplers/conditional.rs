use super::mls::{chain_rng, MlsKernel};
use super::{Chain, SamplerConfig};
use crate::error::{Error, Result};
use crate::error_model::ErrorModel;
use crate::problem::ProblemSpec;
use crate::state::AugmentedState;

/// MH sampler for π(b_A*, s_I* | A*): only P1/P2 moves, so the active set never
/// changes and no determinant is evaluated.
pub fn run_conditional_mls(
    spec: &ProblemSpec,
    beta: &[f64],
    model: &ErrorModel,
    a_star: &[usize],
    config: &SamplerConfig,
    init: Option<&AugmentedState>,
) -> Result<Chain> {
    let p = spec.p();
    if config.tau.len() != p {
        return Err(Error::Dimension("tau needs p entries".into()));
    }
    if config.burn_in >= config.iters {
        return Err(Error::InvalidParameter("burn-in must be shorter than the run".into()));
    }
    let mut target = vec![false; p];
    for &j in a_star {
        if j >= p {
            return Err(Error::Dimension(format!("index {j} out of range")));
        }
        target[j] = true;
    }
    let start = init.cloned().unwrap_or_else(|| conditional_start(p, &target));
    if start.active_mask() != target.as_slice() {
        return Err(Error::InvalidParameter("initial active set differs from A*".into()));
    }
    let mut kernel = MlsKernel::new(spec, beta, model, start, usize::MAX)?;
    let mut rng = chain_rng(config);
    let mut states = Vec::with_capacity(config.iters - config.burn_in);
    let mut iterations = Vec::with_capacity(config.iters - config.burn_in);
    for t in 1..=config.iters {
        for j in 0..p {
            kernel.parameter_update(j, config.tau[j], &mut rng);
        }
        kernel.resync();
        if t > config.burn_in {
            states.push(kernel.state().clone());
            iterations.push(t);
        }
    }
    Ok(Chain { states, iterations, accept: kernel.tally, seed: config.seed })
}

/// A point with the requested active set: b_j = 1 on A*, s_j = 0 elsewhere.
pub(crate) fn conditional_start(p: usize, mask: &[bool]) -> AugmentedState {
    let theta = (0..p).map(|j| if mask[j] { 1.0 } else { 0.0 }).collect();
    AugmentedState::new(theta, mask.to_vec()).expect("valid by construction")
}
