//! Dense Gaussian statistics used by the synthetic likelihood.

mod conditional;
mod density;
mod moments;
mod spd;

pub use conditional::{gaussian_conditional, gaussian_conditional_raw, GaussianConditional, JointMoments};
pub use density::{ghurye_olkin_logdensity, gaussian_logpdf, log_det_spd, multivariate_t_logpdf};
pub use moments::{estimate_moments, symmetrize, RunningMoments, SummaryMatrix};
pub use spd::{
    eigen_floor, is_symmetric, matrix_sqrt, repair_spd, repair_spd_with_floor, shrink_covariance,
    DEFAULT_EIGEN_FLOOR,
};

use nalgebra::{DMatrix, DVector};

/// Moment estimates and log-density of the synthetic likelihood at one parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct SLEstimate {
    pub mu_hat: DVector<f64>,
    pub sigma_hat: DMatrix<f64>,
    pub log_density: f64,
    pub m_used: usize,
    /// Whether `sigma_hat` had to be pushed back to positive definiteness.
    pub repaired: bool,
}
