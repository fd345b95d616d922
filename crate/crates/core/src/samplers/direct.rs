use nalgebra::DVector;
use rand::Rng;

use super::{AcceptanceTally, Chain};
use crate::error::{Error, Result};
use crate::error_model::ErrorModel;
use crate::par::{try_map_indexed, Execution};
use crate::problem::ProblemSpec;
use crate::rng::{stream, Domain};
use crate::solver::{solve_lasso, SolverOptions};
use crate::state::AugmentedState;

/// One exact draw: ε from the error model, y = Xβ + ε, then the Lasso.
pub fn direct_draw<R: Rng + ?Sized>(
    spec: &ProblemSpec,
    beta: &[f64],
    model: &ErrorModel,
    rng: &mut R,
) -> Result<AugmentedState> {
    let eps = model.draw_noise(spec.n(), rng)?;
    let y = spec.x() * DVector::from_column_slice(beta) + eps;
    let sol = solve_lasso(spec, &y, &SolverOptions::default())?;
    Ok(AugmentedState::from_solution(&sol))
}

/// L independent draws. Replicate t uses its own random stream, so the result
/// does not depend on the execution mode.
pub fn direct_sample(spec: &ProblemSpec, beta: &[f64], model: &ErrorModel, l: usize, seed: u64) -> Result<Chain> {
    direct_sample_with(Execution::default(), spec, beta, model, l, seed)
}

pub fn direct_sample_with(
    exec: Execution,
    spec: &ProblemSpec,
    beta: &[f64],
    model: &ErrorModel,
    l: usize,
    seed: u64,
) -> Result<Chain> {
    spec.check_p(beta, "beta")?;
    if let ErrorModel::Gaussian { sigma2 } = model {
        if !(*sigma2 >= 0.0) {
            return Err(Error::InvalidParameter("sigma2 must be nonnegative".into()));
        }
    } else {
        model.validate()?;
    }
    let states = try_map_indexed(exec, l, |t| {
        let mut rng = stream(seed, Domain::Direct, t as u64);
        direct_draw(spec, beta, model, &mut rng)
    })?;
    Ok(Chain { states, iterations: (1..=l).collect(), accept: AcceptanceTally::default(), seed })
}
