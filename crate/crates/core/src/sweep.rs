//! Incremental tracking of C_AA⁻¹ and log det C_AA under single-index moves.
//!
//! Adding or removing one index is a sweep (or reverse sweep) on a single
//! position of −C_AA⁻¹ bordered by the new row and column.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::problem::ProblemSpec;

/// Accepted moves between full recomputations of the tracked inverse.
pub const REFRESH_EVERY: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move {
    Add,
    Remove,
}

/// Sweep a symmetric matrix on position k, in place.
pub fn sweep(g: &mut DMatrix<f64>, k: usize) {
    let d = g[(k, k)];
    let m = g.nrows();
    for i in 0..m {
        for j in 0..m {
            if i != k && j != k {
                g[(i, j)] -= g[(i, k)] * g[(k, j)] / d;
            }
        }
    }
    for i in 0..m {
        if i != k {
            g[(i, k)] /= d;
            g[(k, i)] /= d;
        }
    }
    g[(k, k)] = -1.0 / d;
}

/// Inverse of [`sweep`] on the same position.
pub fn reverse_sweep(g: &mut DMatrix<f64>, k: usize) {
    let d = g[(k, k)];
    let m = g.nrows();
    for i in 0..m {
        for j in 0..m {
            if i != k && j != k {
                g[(i, j)] -= g[(i, k)] * g[(k, j)] / d;
            }
        }
    }
    for i in 0..m {
        if i != k {
            g[(i, k)] /= -d;
            g[(k, i)] /= -d;
        }
    }
    g[(k, k)] = -1.0 / d;
}

#[derive(Debug, Clone)]
pub struct SweepState {
    active: Vec<usize>,
    inv_caa: DMatrix<f64>,
    logdet_caa: f64,
    moves_since_refresh: usize,
}

impl SweepState {
    pub fn new(spec: &ProblemSpec, active: &[usize]) -> Result<Self> {
        let caa = linalg::submatrix(spec.gram(), active, active);
        let (inv_caa, logdet_caa) = if active.is_empty() {
            (DMatrix::zeros(0, 0), 0.0)
        } else {
            let ch = linalg::cholesky(caa, "C_AA")?;
            let ld = 2.0 * ch.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
            (ch.inverse(), ld)
        };
        Ok(SweepState { active: active.to_vec(), inv_caa, logdet_caa, moves_since_refresh: 0 })
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }
    pub fn inv_caa(&self) -> &DMatrix<f64> {
        &self.inv_caa
    }
    pub fn logdet_caa(&self) -> f64 {
        self.logdet_caa
    }

    fn position(&self, j: usize) -> Option<usize> {
        self.active.iter().position(|&a| a == j)
    }

    /// r_det = C_jj − C_jA C_AA⁻¹ C_Aj, the factor by which det C_AA grows
    /// when j enters; also returns C_AA⁻¹ C_Aj.
    fn add_pivot(&self, spec: &ProblemSpec, j: usize) -> Result<(f64, DVector<f64>)> {
        let c = spec.gram();
        let col = DVector::from_iterator(self.active.len(), self.active.iter().map(|&a| c[(a, j)]));
        let v = &self.inv_caa * &col;
        let r = c[(j, j)] - col.dot(&v);
        if !(r > c[(j, j)] * 1e-13) {
            return Err(Error::NonPositivePivot(r));
        }
        Ok((r, v))
    }

    /// r_det for removing j, read off the diagonal of the tracked inverse.
    fn remove_pivot(&self, j: usize) -> Result<(usize, f64)> {
        let k = self
            .position(j)
            .ok_or_else(|| Error::InvalidParameter(format!("index {j} is not active")))?;
        let d = self.inv_caa[(k, k)];
        if !(d > 0.0) {
            return Err(Error::NonPositivePivot(d));
        }
        Ok((k, 1.0 / d))
    }

    /// log det C_{A†A†} − log det C_AA for the proposed move.
    pub fn log_gram_ratio(&self, spec: &ProblemSpec, j: usize, mv: Move) -> Result<f64> {
        match mv {
            Move::Add => {
                if self.position(j).is_some() {
                    return Err(Error::InvalidParameter(format!("index {j} is already active")));
                }
                Ok(self.add_pivot(spec, j)?.0.ln())
            }
            Move::Remove => Ok(-self.remove_pivot(j)?.1.ln()),
        }
    }

    /// log |det D(A†)| − log |det D(A)|.
    pub fn log_det_ratio(&self, spec: &ProblemSpec, j: usize, mv: Move) -> Result<f64> {
        let lw = (spec.weights()[j] * spec.lambda()).ln();
        let g = self.log_gram_ratio(spec, j, mv)?;
        Ok(match mv {
            Move::Add => g - lw,
            Move::Remove => g + lw,
        })
    }

    /// Commit a move. Every [`REFRESH_EVERY`] commits the inverse is rebuilt
    /// from scratch.
    pub fn apply(&mut self, spec: &ProblemSpec, j: usize, mv: Move) -> Result<()> {
        match mv {
            Move::Add => {
                let (r, v) = self.add_pivot(spec, j)?;
                let m = self.active.len();
                let mut g = DMatrix::zeros(m + 1, m + 1);
                g.view_mut((0, 0), (m, m)).copy_from(&(-&self.inv_caa));
                for i in 0..m {
                    g[(i, m)] = v[i];
                    g[(m, i)] = v[i];
                }
                g[(m, m)] = r;
                sweep(&mut g, m);
                self.inv_caa = -g;
                self.active.push(j);
                self.logdet_caa += r.ln();
            }
            Move::Remove => {
                let (k, r) = self.remove_pivot(j)?;
                let mut g = -&self.inv_caa;
                reverse_sweep(&mut g, k);
                self.inv_caa = -g.remove_row(k).remove_column(k);
                self.active.remove(k);
                self.logdet_caa -= r.ln();
            }
        }
        self.moves_since_refresh += 1;
        if self.moves_since_refresh >= REFRESH_EVERY {
            self.refresh(spec)?;
        }
        Ok(())
    }

    pub fn refresh(&mut self, spec: &ProblemSpec) -> Result<()> {
        *self = SweepState::new(spec, &self.active)?;
        Ok(())
    }
}

/// Ratio |det D(A†)| / |det D(A)| together with the updated state. The input
/// state is left untouched so a rejected proposal costs nothing to undo.
pub fn sweep_det_ratio(state: &SweepState, spec: &ProblemSpec, j: usize, mv: Move) -> Result<(f64, SweepState)> {
    let lr = state.log_det_ratio(spec, j, mv)?;
    let mut next = state.clone();
    next.apply(spec, j, mv)?;
    Ok((lr.exp(), next))
}
