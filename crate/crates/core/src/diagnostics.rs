//! Chain summaries, autocorrelation-based efficiency and histogram output.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::samplers::Chain;
use crate::state::AugmentedState;
use crate::stats::{log_sum_exp, quantile_type7, weighted_quantile};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub n_states: usize,
    /// P(β̂_j ≠ 0).
    pub selection_prob: Vec<f64>,
    pub q025: Vec<f64>,
    pub q975: Vec<f64>,
    /// Mean and SD of β̂_j given β̂_j ≠ 0 (absent if never selected).
    pub cond_mean: Vec<Option<f64>>,
    pub cond_sd: Vec<Option<f64>>,
    /// Relative frequency of each visited model, keyed by the hex mask.
    pub model_freq: BTreeMap<String, f64>,
}

/// Unnormalized weights: all ones without log-weights, else exp(lw − max).
fn raw_weights(len: usize, log_weights: Option<&[f64]>) -> Result<Vec<f64>> {
    match log_weights {
        None => Ok(vec![1.0; len]),
        Some(lw) => {
            if lw.len() != len {
                return Err(Error::Dimension("one log-weight per state".into()));
            }
            let z = log_sum_exp(lw.iter().copied());
            if !z.is_finite() {
                return Err(Error::Degenerate("weights do not normalize".into()));
            }
            let top = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            Ok(lw.iter().map(|w| (w - top).exp()).collect())
        }
    }
}

/// Per-coordinate and per-model summaries, optionally weighted (for
/// importance samples).
pub fn summarize_states(states: &[AugmentedState], log_weights: Option<&[f64]>) -> Result<SummaryStats> {
    if states.is_empty() {
        return Err(Error::InvalidParameter("empty chain".into()));
    }
    let w = raw_weights(states.len(), log_weights)?;
    let total: f64 = w.iter().sum();
    let p = states[0].p();
    let betas: Vec<Vec<f64>> = states.iter().map(|s| s.beta_hat()).collect();
    let mut out = SummaryStats {
        n_states: states.len(),
        selection_prob: Vec::with_capacity(p),
        q025: Vec::with_capacity(p),
        q975: Vec::with_capacity(p),
        cond_mean: Vec::with_capacity(p),
        cond_sd: Vec::with_capacity(p),
        model_freq: BTreeMap::new(),
    };
    for j in 0..p {
        let col: Vec<f64> = betas.iter().map(|b| b[j]).collect();
        let (mut mass, mut m1) = (0.0, 0.0);
        for (v, wi) in col.iter().zip(&w) {
            if *v != 0.0 {
                mass += wi;
                m1 += wi * v;
            }
        }
        out.selection_prob.push((mass / total).clamp(0.0, 1.0));
        if log_weights.is_some() {
            out.q025.push(weighted_quantile(&col, &w, 0.025));
            out.q975.push(weighted_quantile(&col, &w, 0.975));
        } else {
            out.q025.push(quantile_type7(&col, 0.025));
            out.q975.push(quantile_type7(&col, 0.975));
        }
        if mass > 0.0 {
            let mu = m1 / mass;
            let var: f64 =
                col.iter().zip(&w).filter(|(v, _)| **v != 0.0).map(|(v, wi)| wi * (v - mu).powi(2)).sum::<f64>() / mass;
            out.cond_mean.push(Some(mu));
            out.cond_sd.push(Some(var.max(0.0).sqrt()));
        } else {
            out.cond_mean.push(None);
            out.cond_sd.push(None);
        }
    }
    for (s, wi) in states.iter().zip(&w) {
        *out.model_freq.entry(s.mask_hex()).or_insert(0.0) += wi / total;
    }
    Ok(out)
}

pub fn summarize_chain(chain: &Chain, log_weights: Option<&[f64]>) -> Result<SummaryStats> {
    summarize_states(&chain.states, log_weights)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyReport {
    /// ρ_0 = 1, ρ_1, … up to and including the truncation lag.
    pub acf: Vec<f64>,
    /// ψ(N) for N = 1, 2, … (ψ(1) = 1).
    pub psi: Vec<f64>,
    /// ψ(∞) ≈ 1 + 2Σ_{t<T} ρ_t with T the truncation lag.
    pub psi_inf: f64,
    pub truncation_lag: usize,
    pub ess: f64,
    /// m/ψ(∞) for cost ratio m.
    pub gamma: f64,
}

/// Longest ψ(N) curve that is reported.
const PSI_CURVE_LEN: usize = 2000;

/// Efficiency of a scalar series. The ACF (biased estimator) is truncated at
/// the first lag where |ρ_t| < 2/√N.
pub fn series_diagnostics(values: &[f64], cost_ratio: f64) -> Result<EfficiencyReport> {
    let n = values.len();
    if n < 10 {
        return Err(Error::InvalidParameter(format!("need at least 10 values, got {n}")));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let dev: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let c0 = dev.iter().map(|d| d * d).sum::<f64>() / n as f64;
    if !(c0 > (1e-12 * mean.abs()).powi(2)) {
        return Err(Error::Degenerate("series has zero variance".into()));
    }
    let cut = 2.0 / (n as f64).sqrt();
    let mut acf = vec![1.0];
    let mut lag = 1;
    while lag < n / 2 {
        let c: f64 = dev[..n - lag].iter().zip(&dev[lag..]).map(|(a, b)| a * b).sum::<f64>() / n as f64;
        let rho = c / c0;
        acf.push(rho);
        if rho.abs() < cut {
            break;
        }
        lag += 1;
    }
    let truncation_lag = acf.len() - 1;
    let psi_inf = 1.0 + 2.0 * acf[1..truncation_lag].iter().sum::<f64>();
    let psi = (1..=n.min(PSI_CURVE_LEN))
        .map(|big_n| {
            let upto = (big_n - 1).min(truncation_lag - 1);
            1.0 + 2.0 * (1..=upto).map(|t| (1.0 - t as f64 / big_n as f64) * acf[t]).sum::<f64>()
        })
        .collect();
    let ess = if psi_inf > 0.0 { (n as f64 / psi_inf).min(n as f64) } else { n as f64 };
    Ok(EfficiencyReport { acf, psi, psi_inf, truncation_lag, ess, gamma: cost_ratio / psi_inf })
}

pub fn chain_diagnostics(
    chain: &Chain,
    g: &dyn Fn(&AugmentedState) -> f64,
    cost_ratio: f64,
) -> Result<EfficiencyReport> {
    let v: Vec<f64> = chain.states.iter().map(g).collect();
    series_diagnostics(&v, cost_ratio)
}

/// Equal-width histogram over [lo, hi] as (bin center, mass) pairs. Mass is
/// the (weighted) fraction of all values, so values outside the range are
/// dropped from the total mass.
pub fn histogram(values: &[f64], log_weights: Option<&[f64]>, lo: f64, hi: f64, bins: usize) -> Result<Vec<(f64, f64)>> {
    if bins == 0 || !(hi > lo) {
        return Err(Error::InvalidParameter("need bins >= 1 and hi > lo".into()));
    }
    let w = raw_weights(values.len(), log_weights)?;
    let total: f64 = w.iter().sum();
    let width = (hi - lo) / bins as f64;
    let mut mass = vec![0.0; bins];
    for (v, wi) in values.iter().zip(&w) {
        if *v >= lo && *v <= hi {
            let b = (((v - lo) / width) as usize).min(bins - 1);
            mass[b] += wi / total;
        }
    }
    Ok(mass.into_iter().enumerate().map(|(b, m)| (lo + (b as f64 + 0.5) * width, m)).collect())
}

/// Headerless two-column CSV.
pub fn write_histogram_csv<W: Write>(out: W, hist: &[(f64, f64)]) -> Result<()> {
    let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for (c, m) in hist {
        wr.write_record(&[c.to_string(), m.to_string()])?;
    }
    wr.flush()?;
    Ok(())
}
