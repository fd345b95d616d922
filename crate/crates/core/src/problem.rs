//! Regression context: design, penalty weights, λ and the Gram matrix.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

/// Design-dependent quantities that do not change with λ or the weights.
#[derive(Debug)]
pub struct Design {
    x: DMatrix<f64>,
    c: DMatrix<f64>,
    rank: usize,
    c_inv: Option<DMatrix<f64>>,
    log_det_c: Option<f64>,
}

impl Design {
    fn new(x: DMatrix<f64>) -> Self {
        let n = x.nrows() as f64;
        let mut c = x.transpose() * &x / n;
        c = (&c + c.transpose()) * 0.5;
        let rank = linalg::numerical_rank(&x);
        let (c_inv, log_det_c) = if rank == x.ncols() {
            match linalg::cholesky(c.clone(), "gram") {
                Ok(ch) => {
                    let ld = 2.0 * ch.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
                    (Some(ch.inverse()), Some(ld))
                }
                Err(_) => (None, None),
            }
        } else {
            (None, None)
        };
        Design { x, c, rank, c_inv, log_det_c }
    }
}

/// Immutable problem context shared by densities and samplers. Cloning is
/// cheap: the design is reference counted.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    design: Arc<Design>,
    w: Arc<Vec<f64>>,
    lambda: f64,
}

pub fn build_problem(x: DMatrix<f64>, w: Vec<f64>, lambda: f64) -> Result<ProblemSpec> {
    let (n, p) = x.shape();
    if n == 0 || p == 0 {
        return Err(Error::Dimension(format!("design is {n}x{p}")));
    }
    if w.len() != p {
        return Err(Error::Dimension(format!("{} weights for {p} columns", w.len())));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("design contains non-finite entries".into()));
    }
    if w.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidParameter("penalty weights must be positive".into()));
    }
    check_lambda(lambda)?;
    Ok(ProblemSpec { design: Arc::new(Design::new(x)), w: Arc::new(w), lambda })
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
    }
    Ok(())
}

impl ProblemSpec {
    pub fn x(&self) -> &DMatrix<f64> {
        &self.design.x
    }
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.design.c
    }
    pub fn n(&self) -> usize {
        self.design.x.nrows()
    }
    pub fn p(&self) -> usize {
        self.design.x.ncols()
    }
    pub fn weights(&self) -> &[f64] {
        &self.w
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn rank(&self) -> usize {
        self.design.rank
    }
    /// Set when the numerical rank of X is below min(n, p), so the general
    /// position assumption is very likely violated.
    pub fn rank_deficient(&self) -> bool {
        self.design.rank < self.n().min(self.p())
    }
    pub fn is_high_dim(&self) -> bool {
        self.p() > self.n()
    }

    /// Same design and weights with another penalty level.
    pub fn with_lambda(&self, lambda: f64) -> Result<ProblemSpec> {
        check_lambda(lambda)?;
        Ok(ProblemSpec { design: Arc::clone(&self.design), w: Arc::clone(&self.w), lambda })
    }

    pub fn gram_inverse(&self) -> Result<&DMatrix<f64>> {
        self.design
            .c_inv
            .as_ref()
            .ok_or_else(|| Error::Singular("gram matrix is not invertible".into()))
    }

    pub fn log_det_gram(&self) -> Result<f64> {
        self.design
            .log_det_c
            .ok_or_else(|| Error::Singular("gram matrix is not invertible".into()))
    }

    /// Xᵀv / n.
    pub fn xt_over_n(&self, v: &DVector<f64>) -> DVector<f64> {
        self.x().tr_mul(v) / self.n() as f64
    }

    pub fn check_p(&self, v: &[f64], what: &str) -> Result<()> {
        if v.len() != self.p() {
            return Err(Error::Dimension(format!("{what} has length {}, expected {}", v.len(), self.p())));
        }
        Ok(())
    }
}

/// log |det D(A)| = |I| log λ + log det C_AA + Σ_{j∈I} log w_j.
pub fn log_det_d(active: &[usize], spec: &ProblemSpec) -> Result<f64> {
    let p = spec.p();
    let mut in_a = vec![false; p];
    for &j in active {
        if j >= p {
            return Err(Error::Dimension(format!("index {j} out of range")));
        }
        in_a[j] = true;
    }
    let caa = linalg::submatrix(spec.gram(), active, active);
    let ld = linalg::logdet_spd(&caa, "C_AA")?;
    let inactive: f64 = (0..p).filter(|&j| !in_a[j]).map(|j| (spec.lambda() * spec.weights()[j]).ln()).sum();
    Ok(ld + inactive)
}
