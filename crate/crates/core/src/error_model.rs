//! Distribution of U = Xᵀε/n (or of its row-space coordinates R when p > n).
//!
//! Every supported model is elliptical in the metric of C (or Λ), so its
//! log-density depends on u only through q = uᵀC⁻¹u.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ErrorModel {
    /// ε ~ N(0, σ²I).
    Gaussian { sigma2: f64 },
    /// Multivariate t with `dof` degrees of freedom and scale σ².
    StudentT { dof: f64, scale: f64 },
    /// Radial histogram of the whitened score, with a residual pool for
    /// resampling noise.
    EmpiricalElliptical(RadialHistogram),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialHistogram {
    /// h₀ = 0 < h₁ < … < h_M.
    pub edges: Vec<f64>,
    /// K_m, number of bootstrap radii in [h_{m−1}, h_m).
    pub counts: Vec<u64>,
    /// Total number of bootstrap radii, including those beyond h_M.
    pub total: u64,
    /// Dimension of the whitened vector.
    pub dim: usize,
    /// Log-linear tail beyond h_M as (slope, anchor radius, anchor log-density).
    pub tail: Option<(f64, f64, f64)>,
    /// Residuals used to resample ε.
    pub residuals: Vec<f64>,
}

fn log_unit_ball_volume(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    h * std::f64::consts::PI.ln() - ln_gamma(h + 1.0)
}

/// ln(b^d − a^d) for 0 ≤ a < b.
fn log_shell(a: f64, b: f64, d: usize) -> f64 {
    d as f64 * b.ln() + (-(a / b).powi(d as i32)).ln_1p()
}

impl RadialHistogram {
    /// Build the histogram and fit the tail on the last three nonempty bins.
    pub fn new(edges: Vec<f64>, counts: Vec<u64>, total: u64, dim: usize, residuals: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 || edges[0] != 0.0 || edges.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("bin edges must increase strictly from 0".into()));
        }
        if counts.len() + 1 != edges.len() {
            return Err(Error::Dimension("need one count per bin".into()));
        }
        let inside: u64 = counts.iter().sum();
        if inside == 0 || total < inside {
            return Err(Error::Degenerate("radial histogram has no mass".into()));
        }
        let nonempty: Vec<usize> = (0..counts.len()).filter(|&m| counts[m] > 0).collect();
        let (first, last) = (nonempty[0], *nonempty.last().unwrap());
        if (first..=last).any(|m| counts[m] == 0) {
            return Err(Error::Degenerate(
                "empty bins inside the bulk of the radial histogram; increase the bootstrap size".into(),
            ));
        }
        let mut h = RadialHistogram { edges, counts, total, dim, tail: None, residuals };
        let window: Vec<usize> = nonempty.iter().rev().take(3).copied().collect();
        if window.len() >= 2 {
            let pts: Vec<(f64, f64)> = window
                .iter()
                .map(|&m| (0.5 * (h.edges[m] + h.edges[m + 1]), h.bin_log_density(m)))
                .collect();
            let k = pts.len() as f64;
            let rx = pts.iter().map(|p| p.0).sum::<f64>() / k;
            let ry = pts.iter().map(|p| p.1).sum::<f64>() / k;
            let sxy: f64 = pts.iter().map(|p| (p.0 - rx) * (p.1 - ry)).sum();
            let sxx: f64 = pts.iter().map(|p| (p.0 - rx).powi(2)).sum();
            let slope = sxy / sxx;
            if slope < 0.0 && slope.is_finite() {
                h.tail = Some((slope, rx, ry));
            }
        }
        Ok(h)
    }

    fn bin_log_density(&self, m: usize) -> f64 {
        if self.counts[m] == 0 {
            return f64::NEG_INFINITY;
        }
        (self.counts[m] as f64).ln()
            - (self.total as f64).ln()
            - log_unit_ball_volume(self.dim)
            - log_shell(self.edges[m], self.edges[m + 1], self.dim)
    }

    /// log f̂ of the whitened vector at radius r.
    pub fn log_density_at_radius(&self, r: f64) -> f64 {
        let top = *self.edges.last().unwrap();
        if r >= top {
            return match self.tail {
                Some((slope, r0, y0)) => y0 + slope * (r - r0),
                None => f64::NEG_INFINITY,
            };
        }
        let m = self.edges.partition_point(|&e| e <= r) - 1;
        self.bin_log_density(m)
    }
}

impl ErrorModel {
    pub fn gaussian(sigma2: f64) -> Self {
        ErrorModel::Gaussian { sigma2 }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ErrorModel::Gaussian { sigma2 } if !(*sigma2 > 0.0 && sigma2.is_finite()) => {
                Err(Error::InvalidParameter(format!("sigma2 must be positive, got {sigma2}")))
            }
            ErrorModel::StudentT { dof, scale } if !(*dof > 0.0 && *scale > 0.0) => {
                Err(Error::InvalidParameter("t model needs positive dof and scale".into()))
            }
            _ => Ok(()),
        }
    }

    /// Log-density of a `dim`-vector v whose shape matrix is S/n_obs for
    /// Gaussian and t models (S itself for the whitened elliptical model),
    /// given q = vᵀS⁻¹v and log det S.
    pub fn log_density_quadratic(&self, q: f64, dim: usize, n_obs: usize, log_det_shape: f64) -> f64 {
        let d = dim as f64;
        let nf = n_obs as f64;
        match self {
            ErrorModel::Gaussian { sigma2 } => {
                -0.5 * d * (2.0 * std::f64::consts::PI * sigma2 / nf).ln() - 0.5 * log_det_shape - 0.5 * nf * q / sigma2
            }
            ErrorModel::StudentT { dof, scale } => {
                ln_gamma(0.5 * (dof + d)) - ln_gamma(0.5 * dof) - 0.5 * d * (dof * std::f64::consts::PI * scale / nf).ln()
                    - 0.5 * log_det_shape
                    - 0.5 * (dof + d) * (nf * q / (dof * scale)).ln_1p()
            }
            ErrorModel::EmpiricalElliptical(h) => h.log_density_at_radius(q.max(0.0).sqrt()) - 0.5 * log_det_shape,
        }
    }

    /// Draw a noise vector ε of length n.
    pub fn draw_noise<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<DVector<f64>> {
        match self {
            ErrorModel::Gaussian { sigma2 } => {
                let sd = sigma2.max(0.0).sqrt();
                Ok(DVector::from_fn(n, |_, _| sd * rng.sample::<f64, _>(StandardNormal)))
            }
            ErrorModel::StudentT { dof, scale } => {
                let chi = ChiSquared::new(*dof).map_err(|e| Error::InvalidParameter(e.to_string()))?;
                let mix = (dof / chi.sample(rng)).sqrt() * scale.sqrt();
                Ok(DVector::from_fn(n, |_, _| mix * rng.sample::<f64, _>(StandardNormal)))
            }
            ErrorModel::EmpiricalElliptical(h) => {
                if h.residuals.is_empty() {
                    return Err(Error::Unsupported("elliptical model without a residual pool cannot be sampled".into()));
                }
                let k = h.residuals.len();
                Ok(DVector::from_fn(n, |_, _| h.residuals[rng.random_range(0..k)]))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_matches_direct_formula() {
        // one-dimensional: v ~ N(0, σ² s / n)
        let m = ErrorModel::gaussian(2.0);
        let (s, n, v) = (1.5f64, 4usize, 0.7f64);
        let var = 2.0 * s / n as f64;
        let direct = -0.5 * (2.0 * std::f64::consts::PI * var).ln() - 0.5 * v * v / var;
        assert!((m.log_density_quadratic(v * v / s, 1, n, s.ln()) - direct).abs() < 1e-13);
    }

    #[test]
    fn student_t_univariate_reference() {
        // standard t with 3 dof at 1.0: pdf = 0.2067483357831720...
        let m = ErrorModel::StudentT { dof: 3.0, scale: 1.0 };
        let v = m.log_density_quadratic(1.0, 1, 1, 0.0);
        assert!((v.exp() - 0.206_748_335_783_172).abs() < 1e-12);
    }

    #[test]
    fn single_bin_is_flat() {
        let h = RadialHistogram::new(vec![0.0, 2.0], vec![100], 100, 2, vec![]).unwrap();
        assert!(h.tail.is_none());
        let a = h.log_density_at_radius(0.1);
        assert_eq!(a, h.log_density_at_radius(1.9));
        // mass 1 spread over a disk of radius 2
        assert!((a - (1.0 / (std::f64::consts::PI * 4.0)).ln()).abs() < 1e-12);
        assert_eq!(h.log_density_at_radius(2.5), f64::NEG_INFINITY);
    }

    #[test]
    fn bulk_gap_is_rejected() {
        let r = RadialHistogram::new(vec![0.0, 1.0, 2.0, 3.0], vec![5, 0, 5], 10, 1, vec![]);
        assert!(matches!(r, Err(Error::Degenerate(_))));
    }

    #[test]
    fn tail_is_log_linear_and_decreasing() {
        let h = RadialHistogram::new(vec![0.0, 1.0, 2.0, 3.0, 4.0], vec![40, 30, 20, 10], 100, 1, vec![]).unwrap();
        let (slope, _, _) = h.tail.unwrap();
        assert!(slope < 0.0);
        let d1 = h.log_density_at_radius(5.0) - h.log_density_at_radius(4.5);
        assert!((d1 - 0.5 * slope).abs() < 1e-12);
    }
}
