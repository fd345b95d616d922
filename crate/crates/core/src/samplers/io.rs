//! Chain serialization: one headerless numeric CSV row per kept state,
//! `iteration, β̂_1..β̂_p, S_1..S_p`, plus a JSON sidecar. The active set is
//! recovered as {j : β̂_j ≠ 0}.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{AcceptanceTally, Chain};
use crate::error::{Error, Result};
use crate::state::AugmentedState;

pub fn write_chain_csv<W: Write>(chain: &Chain, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for (state, it) in chain.states.iter().zip(&chain.iterations) {
        let mut row = Vec::with_capacity(2 * state.p() + 1);
        row.push(it.to_string());
        row.extend(state.beta_hat().iter().map(|v| v.to_string()));
        row.extend(state.subgradient().iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Parse a chain CSV back into states and iteration numbers.
pub fn read_chain_csv<R: Read>(input: R, p: usize) -> Result<(Vec<AugmentedState>, Vec<usize>)> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(input);
    let mut states = Vec::new();
    let mut iters = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = line + 1;
        if rec.len() != 2 * p + 1 {
            return Err(Error::Data(format!("row {row} has {} fields, expected {}", rec.len(), 2 * p + 1)));
        }
        let it: usize = rec[0].trim().parse().map_err(|_| Error::Data(format!("bad iteration on row {row}")))?;
        let vals = (1..=2 * p)
            .map(|k| rec[k].trim().parse::<f64>().map_err(|_| Error::Data(format!("bad value on row {row}"))))
            .collect::<Result<Vec<f64>>>()?;
        let (beta, s) = vals.split_at(p);
        let mask: Vec<bool> = beta.iter().map(|&b| b != 0.0).collect();
        let theta = (0..p).map(|j| if mask[j] { beta[j] } else { s[j] }).collect();
        for j in (0..p).filter(|&j| mask[j]) {
            if s[j] != beta[j].signum() {
                return Err(Error::Data(format!("row {row}: subgradient disagrees with the sign of coordinate {}", j + 1)));
            }
        }
        states.push(AugmentedState::new(theta, mask).map_err(|e| Error::Data(format!("row {row}: {e}")))?);
        iters.push(it);
    }
    Ok((states, iters))
}

/// Number of coefficients p in a chain CSV, read from its first row.
pub fn chain_csv_width<R: Read>(input: R) -> Result<usize> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(input);
    match r.records().next() {
        Some(rec) => {
            let len = rec?.len();
            if len < 3 || len % 2 == 0 {
                return Err(Error::Data(format!("a chain row needs 2p + 1 fields, found {len}")));
            }
            Ok((len - 1) / 2)
        }
        None => Err(Error::Data("empty chain file".into())),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSidecar {
    pub kept_states: usize,
    pub seed: u64,
    pub acceptance: AcceptanceTally,
    pub acceptance_rates: [Option<f64>; 4],
    pub warnings: Vec<String>,
    pub config: serde_json::Value,
}

impl ChainSidecar {
    pub fn new(chain: &Chain, config: serde_json::Value) -> Self {
        use super::ProposalKind::*;
        ChainSidecar {
            kept_states: chain.len(),
            seed: chain.seed,
            acceptance: chain.accept.clone(),
            acceptance_rates: [P1, P2, P3, P4].map(|k| chain.accept.rate(k)),
            warnings: chain.accept.warnings(),
            config,
        }
    }
}
