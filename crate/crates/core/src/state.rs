//! Points of the augmented sample space: (b_A, s_I, A) stored as (θ, A) with
//! θ_j = b_j for active j and θ_j = s_j otherwise.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::LassoSolution;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentedState {
    theta: Vec<f64>,
    active: Vec<bool>,
}

impl AugmentedState {
    /// Validating constructor: active coordinates must be nonzero and
    /// inactive ones must lie in [−1, 1].
    pub fn new(theta: Vec<f64>, active: Vec<bool>) -> Result<Self> {
        if theta.len() != active.len() {
            return Err(Error::Dimension("theta and active mask differ in length".into()));
        }
        let st = AugmentedState { theta, active };
        st.validate()?;
        Ok(st)
    }

    pub fn from_parts(p: usize, active: &[usize], b_active: &[f64], s_inactive: &[f64]) -> Result<Self> {
        if active.len() != b_active.len() || active.len() + s_inactive.len() != p {
            return Err(Error::Dimension("parts do not add up to p coordinates".into()));
        }
        let mut mask = vec![false; p];
        for &j in active {
            if j >= p || mask[j] {
                return Err(Error::Dimension(format!("bad active index {j}")));
            }
            mask[j] = true;
        }
        let mut theta = vec![0.0; p];
        for (k, &j) in active.iter().enumerate() {
            theta[j] = b_active[k];
        }
        let mut s = s_inactive.iter();
        for j in 0..p {
            if !mask[j] {
                theta[j] = *s.next().unwrap();
            }
        }
        Self::new(theta, mask)
    }

    /// State of a Lasso solution. Inactive subgradient entries are clipped to
    /// [−1, 1] to absorb solver round-off.
    pub fn from_solution(sol: &LassoSolution) -> Self {
        let p = sol.beta_hat.len();
        let active: Vec<bool> = sol.beta_hat.iter().map(|&b| b != 0.0).collect();
        let theta = (0..p)
            .map(|j| if active[j] { sol.beta_hat[j] } else { sol.subgrad[j].clamp(-1.0, 1.0) })
            .collect();
        AugmentedState { theta, active }
    }

    pub fn validate(&self) -> Result<()> {
        for (j, (&t, &a)) in self.theta.iter().zip(&self.active).enumerate() {
            if !t.is_finite() {
                return Err(Error::OutsideSpace(format!("coordinate {j} is not finite")));
            }
            if a && t == 0.0 {
                return Err(Error::OutsideSpace(format!("active coordinate {j} is zero")));
            }
            if !a && t.abs() > 1.0 {
                return Err(Error::OutsideSpace(format!("inactive coordinate {j} has |s| = {} > 1", t.abs())));
            }
        }
        Ok(())
    }

    pub fn p(&self) -> usize {
        self.theta.len()
    }
    pub fn theta(&self) -> &[f64] {
        &self.theta
    }
    pub fn active_mask(&self) -> &[bool] {
        &self.active
    }
    pub fn is_active(&self, j: usize) -> bool {
        self.active[j]
    }
    pub fn n_active(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }
    pub fn active_indices(&self) -> Vec<usize> {
        (0..self.p()).filter(|&j| self.active[j]).collect()
    }
    pub fn inactive_indices(&self) -> Vec<usize> {
        (0..self.p()).filter(|&j| !self.active[j]).collect()
    }
    pub fn b_active(&self) -> Vec<f64> {
        (0..self.p()).filter(|&j| self.active[j]).map(|j| self.theta[j]).collect()
    }
    pub fn s_inactive(&self) -> Vec<f64> {
        (0..self.p()).filter(|&j| !self.active[j]).map(|j| self.theta[j]).collect()
    }

    /// β̂ as a full p-vector (zeros off the active set).
    pub fn beta_hat(&self) -> Vec<f64> {
        (0..self.p()).map(|j| if self.active[j] { self.theta[j] } else { 0.0 }).collect()
    }

    /// S as a full p-vector (signs on the active set).
    pub fn subgradient(&self) -> Vec<f64> {
        (0..self.p()).map(|j| if self.active[j] { self.theta[j].signum() } else { self.theta[j] }).collect()
    }

    pub(crate) fn set(&mut self, j: usize, value: f64, active: bool) {
        self.theta[j] = value;
        self.active[j] = active;
    }

    /// Active set as a hexadecimal bitmask, bit j standing for coordinate j.
    pub fn mask_hex(&self) -> String {
        let p = self.p();
        let digits = p.div_ceil(4).max(1);
        (0..digits)
            .rev()
            .map(|d| {
                let nib = (0..4).filter(|&b| 4 * d + b < p && self.active[4 * d + b]).fold(0u32, |a, b| a | (1 << b));
                std::char::from_digit(nib, 16).unwrap()
            })
            .collect()
    }

    pub fn mask_from_hex(hex: &str, p: usize) -> Result<Vec<bool>> {
        let mut mask = vec![false; p];
        for (d, ch) in hex.trim().chars().rev().enumerate() {
            let nib = ch.to_digit(16).ok_or_else(|| Error::Data(format!("bad hex digit '{ch}'")))?;
            for b in 0..4 {
                if nib & (1 << b) != 0 {
                    let j = 4 * d + b;
                    if j >= p {
                        return Err(Error::Data(format!("mask sets bit {j} but p = {p}")));
                    }
                    mask[j] = true;
                }
            }
        }
        Ok(mask)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parts_roundtrip() {
        let st = AugmentedState::from_parts(4, &[2, 0], &[1.5, -0.2], &[0.3, -1.0]).unwrap();
        // b values pair with the active list as given, not sorted
        assert_eq!(st.theta(), &[-0.2, 0.3, 1.5, -1.0]);
        assert_eq!(st.active_indices(), vec![0, 2]);
        assert_eq!(st.beta_hat(), vec![-0.2, 0.0, 1.5, 0.0]);
        assert_eq!(st.subgradient(), vec![-1.0, 0.3, 1.0, -1.0]);
    }

    #[test]
    fn membership_violations() {
        assert!(matches!(AugmentedState::new(vec![0.0], vec![true]), Err(Error::OutsideSpace(_))));
        assert!(matches!(AugmentedState::new(vec![1.1], vec![false]), Err(Error::OutsideSpace(_))));
        assert!(AugmentedState::new(vec![1.0], vec![false]).is_ok());
    }

    #[test]
    fn hex_mask_layout() {
        let st = AugmentedState::new(vec![1.0, 0.0, 0.0, 0.0, 2.0], vec![true, false, false, false, true]).unwrap();
        assert_eq!(st.mask_hex(), "11");
    }

    proptest! {
        #[test]
        fn hex_mask_roundtrip(mask in proptest::collection::vec(any::<bool>(), 1..40)) {
            let theta: Vec<f64> = mask.iter().map(|&a| if a { 1.0 } else { 0.5 }).collect();
            let st = AugmentedState::new(theta, mask.clone()).unwrap();
            prop_assert_eq!(AugmentedState::mask_from_hex(&st.mask_hex(), mask.len()).unwrap(), mask);
        }
    }
}
