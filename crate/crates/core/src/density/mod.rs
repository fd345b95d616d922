//! Closed-form joint density of the augmented estimator.

mod high;
mod low;

pub use high::{
    constraint_residual, h_r, jacobian_t, log_abs_det_t, log_density_high, log_density_high_with_null_basis,
    null_basis, C_TOL,
};
pub use low::{d_matrix, log_density_low, map_h, normal_moments, quad_form_gram_inverse};
