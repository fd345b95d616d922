use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{direct_draw, AcceptanceTally, Chain, ProposalKind, SamplerConfig};
use crate::density::map_h;
use crate::error::{Error, Result};
use crate::error_model::ErrorModel;
use crate::linalg;
use crate::problem::ProblemSpec;
use crate::rng::{stream, Domain, StreamRng};
use crate::state::AugmentedState;
use crate::stats::norm_logpdf;
use crate::sweep::{Move, SweepState};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub kind: ProposalKind,
    pub accepted: bool,
}

/// Single-coordinate Metropolis-Hastings moves on Ω for a fixed design.
///
/// The score u = H(θ) and v = C⁻¹u are kept in sync with the state, so the
/// change in q = uᵀC⁻¹u under a one-coordinate move costs O(1) to evaluate.
pub struct MlsKernel<'a> {
    spec: &'a ProblemSpec,
    model: &'a ErrorModel,
    beta: Vec<f64>,
    c_inv: &'a DMatrix<f64>,
    log_det_c: f64,
    state: AugmentedState,
    u: DVector<f64>,
    v: DVector<f64>,
    q: f64,
    log_f: f64,
    sweep: SweepState,
    sweep_cutover: usize,
    pub tally: AcceptanceTally,
}

impl<'a> MlsKernel<'a> {
    pub fn new(
        spec: &'a ProblemSpec,
        beta: &[f64],
        model: &'a ErrorModel,
        init: AugmentedState,
        sweep_cutover: usize,
    ) -> Result<Self> {
        if spec.is_high_dim() {
            return Err(Error::InvalidParameter("the MH Lasso sampler needs p <= n".into()));
        }
        spec.check_p(beta, "beta")?;
        if init.p() != spec.p() {
            return Err(Error::Dimension("initial state has the wrong length".into()));
        }
        init.validate()?;
        model.validate()?;
        let c_inv = spec.gram_inverse()?;
        let log_det_c = spec.log_det_gram()?;
        let sweep = SweepState::new(spec, &init.active_indices())?;
        let mut k = MlsKernel {
            spec,
            model,
            beta: beta.to_vec(),
            c_inv,
            log_det_c,
            state: init,
            u: DVector::zeros(0),
            v: DVector::zeros(0),
            q: 0.0,
            log_f: 0.0,
            sweep,
            sweep_cutover,
            tally: AcceptanceTally::default(),
        };
        k.resync();
        Ok(k)
    }

    pub fn state(&self) -> &AugmentedState {
        &self.state
    }

    pub fn into_state(self) -> AugmentedState {
        self.state
    }

    /// Recompute u, v, q from the state to shed accumulated round-off.
    pub fn resync(&mut self) {
        self.u = map_h(&self.state, &self.beta, self.spec);
        self.v = self.c_inv * &self.u;
        self.q = self.u.dot(&self.v);
        self.log_f = self.log_f_at(self.q);
    }

    fn log_f_at(&self, q: f64) -> f64 {
        self.model.log_density_quadratic(q, self.spec.p(), self.spec.n(), self.log_det_c)
    }

    /// q after u ← u + a·C_j + c·e_j.
    fn q_after(&self, j: usize, a: f64, c: f64) -> f64 {
        let cjj = self.spec.gram()[(j, j)];
        let gjj = self.c_inv[(j, j)];
        self.q + 2.0 * (a * self.u[j] + c * self.v[j]) + a * a * cjj + 2.0 * a * c + c * c * gjj
    }

    fn commit(&mut self, j: usize, a: f64, c: f64, q_new: f64, value: f64, active: bool) {
        if a != 0.0 {
            self.u.axpy(a, &self.spec.gram().column(j), 1.0);
            self.v[j] += a;
        }
        if c != 0.0 {
            self.u[j] += c;
            self.v.axpy(c, &self.c_inv.column(j), 1.0);
        }
        self.q = q_new;
        self.log_f = self.log_f_at(q_new);
        self.state.set(j, value, active);
    }

    fn lw(&self, j: usize) -> f64 {
        self.spec.lambda() * self.spec.weights()[j]
    }

    fn accept<R: Rng + ?Sized>(rng: &mut R, log_ratio: f64) -> bool {
        if log_ratio.is_nan() {
            return false;
        }
        log_ratio >= 0.0 || rng.random::<f64>().ln() < log_ratio
    }

    /// P1 (active j) or P2 (inactive j). Both proposals are symmetric, so the
    /// ratio is f_U(H(θ†))/f_U(H(θ)) alone.
    pub fn parameter_update<R: Rng + ?Sized>(&mut self, j: usize, tau: f64, rng: &mut R) -> StepOutcome {
        let cur = self.state.theta()[j];
        let lw = self.lw(j);
        if self.state.is_active(j) {
            let z: f64 = rng.sample(StandardNormal);
            let prop = cur + tau * z;
            let accepted = self.propose_active_value(j, prop, rng);
            self.tally.record(ProposalKind::P1, accepted);
            StepOutcome { kind: ProposalKind::P1, accepted }
        } else {
            let prop = rng.random_range(-1.0..1.0);
            let c = lw * (prop - cur);
            let q_new = self.q_after(j, 0.0, c);
            let accepted = Self::accept(rng, self.log_f_at(q_new) - self.log_f);
            if accepted {
                self.commit(j, 0.0, c, q_new, prop, false);
            }
            self.tally.record(ProposalKind::P2, accepted);
            StepOutcome { kind: ProposalKind::P2, accepted }
        }
    }

    /// MH step moving active coordinate j to `prop` (P1 with a given value).
    pub(crate) fn propose_active_value<R: Rng + ?Sized>(&mut self, j: usize, prop: f64, rng: &mut R) -> bool {
        if prop == 0.0 {
            return false;
        }
        let cur = self.state.theta()[j];
        let a = prop - cur;
        let c = self.lw(j) * (prop.signum() - cur.signum());
        let q_new = self.q_after(j, a, c);
        let accepted = Self::accept(rng, self.log_f_at(q_new) - self.log_f);
        if accepted {
            self.commit(j, a, c, q_new, prop, true);
        }
        accepted
    }

    /// log |det D(A†)| − log |det D(A)| for toggling j.
    fn log_det_ratio(&self, j: usize, mv: Move) -> Option<f64> {
        if self.sweep.active().len() > self.sweep_cutover {
            match self.sweep.log_det_ratio(self.spec, j, mv) {
                Ok(v) => return Some(v),
                Err(Error::NonPositivePivot(_)) => {}
                Err(_) => return None,
            }
        }
        let cur = self.sweep.active().to_vec();
        let mut next = cur.clone();
        match mv {
            Move::Add => next.push(j),
            Move::Remove => next.retain(|&a| a != j),
        }
        let g = self.spec.gram();
        let a = linalg::logdet_spd(&linalg::submatrix(g, &cur, &cur), "C_AA").ok()?;
        let b = linalg::logdet_spd(&linalg::submatrix(g, &next, &next), "C_AA").ok()?;
        let lw = self.lw(j).ln();
        Some(match mv {
            Move::Add => b - a - lw,
            Move::Remove => b - a + lw,
        })
    }

    fn commit_model_move(&mut self, j: usize, mv: Move) {
        if self.sweep.apply(self.spec, j, mv).is_err() {
            // incremental update broke down numerically: rebuild from scratch
            self.sweep = SweepState::new(self.spec, &self.state.active_indices())
                .expect("active gram block became singular after an accepted move");
        }
    }

    /// P3 (active j leaves the model, s_j ~ U(−1,1)) or P4 (inactive j
    /// enters, b_j ~ N(0, τ²)).
    pub fn model_update<R: Rng + ?Sized>(&mut self, j: usize, tau: f64, rng: &mut R) -> StepOutcome {
        let cur = self.state.theta()[j];
        let lw = self.lw(j);
        if self.state.is_active(j) {
            let prop = rng.random_range(-1.0..1.0);
            let a = -cur;
            let c = lw * (prop - cur.signum());
            let accepted = match self.log_det_ratio(j, Move::Remove) {
                Some(ldr) => {
                    let q_new = self.q_after(j, a, c);
                    let lr = self.log_f_at(q_new) - self.log_f + ldr + norm_logpdf(cur, 0.0, tau) - 0.5f64.ln();
                    let ok = Self::accept(rng, lr);
                    if ok {
                        self.commit(j, a, c, q_new, prop, false);
                        self.commit_model_move(j, Move::Remove);
                    }
                    ok
                }
                None => false,
            };
            self.tally.record(ProposalKind::P3, accepted);
            StepOutcome { kind: ProposalKind::P3, accepted }
        } else {
            let z: f64 = rng.sample(StandardNormal);
            let prop = tau * z;
            let accepted = if prop == 0.0 {
                false
            } else {
                let a = prop;
                let c = lw * (prop.signum() - cur);
                match self.log_det_ratio(j, Move::Add) {
                    Some(ldr) => {
                        let q_new = self.q_after(j, a, c);
                        let lr =
                            self.log_f_at(q_new) - self.log_f + ldr + 0.5f64.ln() - norm_logpdf(prop, 0.0, tau);
                        let ok = Self::accept(rng, lr);
                        if ok {
                            self.commit(j, a, c, q_new, prop, true);
                            self.commit_model_move(j, Move::Add);
                        }
                        ok
                    }
                    None => false,
                }
            };
            self.tally.record(ProposalKind::P4, accepted);
            StepOutcome { kind: ProposalKind::P4, accepted }
        }
    }

    /// One full iteration: model updates on K coordinates drawn without
    /// replacement with probability ∝ α, parameter updates on the rest.
    pub fn iterate<R: Rng + ?Sized>(&mut self, config: &SamplerConfig, rng: &mut R) {
        let p = self.spec.p();
        let chosen = weighted_subset(&config.alpha, config.k, rng);
        let mut in_m = vec![false; p];
        for &j in &chosen {
            in_m[j] = true;
        }
        for j in 0..p {
            if in_m[j] {
                self.model_update(j, config.tau[j], rng);
            }
        }
        for j in 0..p {
            if !in_m[j] {
                self.parameter_update(j, config.tau[j], rng);
            }
        }
        self.resync();
    }
}

/// K indices drawn without replacement, each draw with probability
/// proportional to the remaining weights.
pub(crate) fn weighted_subset<R: Rng + ?Sized>(weights: &[f64], k: usize, rng: &mut R) -> Vec<usize> {
    let mut remaining: Vec<usize> = (0..weights.len()).collect();
    let mut out = Vec::with_capacity(k);
    for _ in 0..k.min(weights.len()) {
        let total: f64 = remaining.iter().map(|&i| weights[i]).sum();
        let mut target = rng.random::<f64>() * total;
        let mut pick = remaining.len() - 1;
        for (pos, &i) in remaining.iter().enumerate() {
            target -= weights[i];
            if target < 0.0 {
                pick = pos;
                break;
            }
        }
        out.push(remaining.remove(pick));
    }
    out
}

pub(crate) fn initial_state(
    spec: &ProblemSpec,
    beta: &[f64],
    model: &ErrorModel,
    config: &SamplerConfig,
    init: Option<&AugmentedState>,
) -> Result<AugmentedState> {
    if config.equilibrium_init {
        let mut rng = stream(config.seed, Domain::Init, config.chain_id);
        return direct_draw(spec, beta, model, &mut rng);
    }
    init.cloned()
        .ok_or_else(|| Error::InvalidParameter("an initial state is required without equilibrium init".into()))
}

pub(crate) fn chain_rng(config: &SamplerConfig) -> StreamRng {
    stream(config.seed, Domain::Chain, config.chain_id)
}

/// Metropolis-Hastings Lasso sampler for π under a fixed design.
pub fn run_mls(
    spec: &ProblemSpec,
    beta: &[f64],
    model: &ErrorModel,
    config: &SamplerConfig,
    init: Option<&AugmentedState>,
) -> Result<Chain> {
    config.validate(spec.p())?;
    let start = initial_state(spec, beta, model, config, init)?;
    let mut kernel = MlsKernel::new(spec, beta, model, start, config.sweep_cutover)?;
    let mut rng = chain_rng(config);
    let burn = config.effective_burn_in();
    let mut states = Vec::with_capacity(config.iters - burn);
    let mut iterations = Vec::with_capacity(config.iters - burn);
    for t in 1..=config.iters {
        kernel.iterate(config, &mut rng);
        if t > burn {
            states.push(kernel.state().clone());
            iterations.push(t);
        }
    }
    Ok(Chain { states, iterations, accept: kernel.tally, seed: config.seed })
}
