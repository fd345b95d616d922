use nalgebra::DMatrix;
use rand::Rng;

use super::mls::{chain_rng, initial_state, MlsKernel};
use super::{AcceptanceTally, Chain, SamplerConfig};
use crate::density::log_density_low;
use crate::error::{Error, Result};
use crate::error_model::ErrorModel;
use crate::problem::{build_problem, ProblemSpec};
use crate::rng::{stream, Domain};
use crate::state::AugmentedState;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RdmlsOptions {
    /// When false the design never moves and the sampler reduces to MLS.
    pub design_moves: bool,
    /// Redraws allowed for a rank-deficient bootstrap design.
    pub max_retries: usize,
}

impl Default for RdmlsOptions {
    fn default() -> Self {
        RdmlsOptions { design_moves: true, max_retries: 100 }
    }
}

impl AcceptanceTally {
    fn absorb(&mut self, other: &AcceptanceTally) {
        for i in 0..4 {
            self.proposed[i] += other.proposed[i];
            self.accepted[i] += other.accepted[i];
        }
    }
}

/// Bootstrap a design of the pool's size from its rows; redraw while rank(X) < p.
fn resample_design<R: Rng + ?Sized>(pool: &ProblemSpec, max_retries: usize, rng: &mut R) -> Result<ProblemSpec> {
    let (n, p) = (pool.n(), pool.p());
    for _ in 0..=max_retries {
        let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let x = DMatrix::from_fn(n, p, |i, j| pool.x()[(rows[i], j)]);
        let spec = build_problem(x, pool.weights().to_vec(), pool.lambda())?;
        if spec.rank() == p && spec.gram_inverse().is_ok() {
            return Ok(spec);
        }
    }
    Err(Error::RankDeficient(format!("no full-rank bootstrap design in {} draws", max_retries + 1)))
}

/// log π(state | x†) − log π(state | x), the acceptance log-ratio of a design
/// move (the design density cancels).
pub fn design_log_ratio(
    state: &AugmentedState,
    beta: &[f64],
    model: &ErrorModel,
    current: &ProblemSpec,
    proposed: &ProblemSpec,
) -> Result<f64> {
    Ok(log_density_low(state, beta, model, proposed)? - log_density_low(state, beta, model, current)?)
}

/// Random-design MLS: each iteration first proposes a bootstrap design and
/// accepts it with the density ratio at the current state, then runs one MLS
/// iteration under the accepted design. The initial design is the pool itself.
pub fn run_rdmls(
    pool: &ProblemSpec,
    beta: &[f64],
    model: &ErrorModel,
    config: &SamplerConfig,
    init: Option<&AugmentedState>,
    opts: RdmlsOptions,
) -> Result<Chain> {
    config.validate(pool.p())?;
    if pool.rank() < pool.p() || pool.is_high_dim() {
        return Err(Error::RankDeficient("the row pool must give a full-rank design with p <= n".into()));
    }
    let mut design = pool.clone();
    let mut state = initial_state(pool, beta, model, config, init)?;
    let mut rng = chain_rng(config);
    let mut design_rng = stream(config.seed, Domain::Design, config.chain_id);
    let mut tally = AcceptanceTally { design: opts.design_moves.then_some((0, 0)), ..Default::default() };
    let burn = config.effective_burn_in();
    let mut states = Vec::with_capacity(config.iters - burn);
    let mut iterations = Vec::with_capacity(config.iters - burn);
    for t in 1..=config.iters {
        if opts.design_moves {
            let prop = resample_design(pool, opts.max_retries, &mut design_rng)?;
            let lr = design_log_ratio(&state, beta, model, &design, &prop)?;
            let accepted = lr >= 0.0 || design_rng.random::<f64>().ln() < lr;
            if accepted {
                design = prop;
            }
            if let Some((p, a)) = tally.design.as_mut() {
                *p += 1;
                *a += accepted as u64;
            }
        }
        let mut kernel = MlsKernel::new(&design, beta, model, state, config.sweep_cutover)?;
        kernel.iterate(config, &mut rng);
        tally.absorb(&kernel.tally);
        state = kernel.into_state();
        if t > burn {
            states.push(state.clone());
            iterations.push(t);
        }
    }
    Ok(Chain { states, iterations, accept: tally, seed: config.seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samplers::run_mls;
    use crate::testutil::random_spec;

    #[test]
    fn identical_design_has_unit_ratio() {
        let spec = random_spec(12, 3, 0.2, 1);
        let st = AugmentedState::from_parts(3, &[1], &[0.4], &[0.2, -0.3]).unwrap();
        let copy = build_problem(spec.x().clone(), spec.weights().to_vec(), spec.lambda()).unwrap();
        let lr = design_log_ratio(&st, &[0.0, 0.5, 0.0], &ErrorModel::gaussian(1.0), &spec, &copy).unwrap();
        assert_eq!(lr, 0.0);
    }

    #[test]
    fn repeated_row_pool_fails() {
        let x = DMatrix::from_fn(6, 2, |_, j| j as f64 + 1.0);
        let pool = build_problem(x, vec![1.0, 1.0], 0.3).unwrap();
        let cfg = SamplerConfig::defaults(&pool, None, 1.0, 1).unwrap();
        let r = run_rdmls(&pool, &[0.0, 0.0], &ErrorModel::gaussian(1.0), &cfg, None, RdmlsOptions::default());
        assert!(matches!(r, Err(Error::RankDeficient(_))));
    }

    #[test]
    fn small_pool_retries_then_succeeds() {
        // two rows, two columns: half of all resamples repeat one row
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, -0.3, 1.0]);
        let pool = build_problem(x, vec![1.0, 1.0], 0.3).unwrap();
        let mut rng = stream(1, Domain::Design, 0);
        for _ in 0..20 {
            assert_eq!(resample_design(&pool, 100, &mut rng).unwrap().rank(), 2);
        }
    }

    #[test]
    fn frozen_design_reproduces_mls() {
        let spec = random_spec(15, 4, 0.2, 8);
        let beta = [0.6, 0.0, -0.2, 0.0];
        let model = ErrorModel::gaussian(1.0);
        let mut cfg = SamplerConfig::defaults(&spec, Some(&beta), 1.0, 17).unwrap();
        cfg.iters = 300;
        cfg.burn_in = 20;
        let init = AugmentedState::from_parts(4, &[0], &[0.5], &[0.0, 0.0, 0.0]).unwrap();
        let opts = RdmlsOptions { design_moves: false, ..Default::default() };
        let a = run_rdmls(&spec, &beta, &model, &cfg, Some(&init), opts).unwrap();
        let b = run_mls(&spec, &beta, &model, &cfg, Some(&init)).unwrap();
        assert_eq!(a.states, b.states);
        assert_eq!(a.accept.accepted, b.accept.accepted);
    }

    #[test]
    fn moving_design_runs() {
        let spec = random_spec(25, 3, 0.2, 4);
        let beta = [0.6, 0.0, -0.2];
        let model = ErrorModel::gaussian(1.0);
        let mut cfg = SamplerConfig::defaults(&spec, Some(&beta), 1.0, 2).unwrap();
        cfg.iters = 200;
        cfg.burn_in = 0;
        cfg.equilibrium_init = true;
        let ch = run_rdmls(&spec, &beta, &model, &cfg, None, RdmlsOptions::default()).unwrap();
        let (p, a) = ch.accept.design.unwrap();
        assert_eq!(p, 200);
        assert!(a > 0 && a < 200);
    }
}
