use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};
use crate::stats::matrix_sqrt;
use crate::ParamVector;

use super::Proposal;

/// Gaussian random walk `θ' = θ + C^{1/2} z` with a fixed covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomWalk {
    sqrt: DMatrix<f64>,
}

impl RandomWalk {
    pub fn new(cov: &DMatrix<f64>) -> Result<Self> {
        Ok(Self { sqrt: matrix_sqrt(cov)? })
    }

    /// Diagonal covariance from per-coordinate standard deviations.
    pub fn from_sd(sd: &[f64]) -> Result<Self> {
        if sd.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(invalid("random-walk standard deviations must be finite and non-negative"));
        }
        let var = DVector::from_iterator(sd.len(), sd.iter().map(|s| s * s));
        Self::new(&DMatrix::from_diagonal(&var))
    }

    pub fn dim(&self) -> usize {
        self.sqrt.nrows()
    }

    pub fn sqrt(&self) -> &DMatrix<f64> {
        &self.sqrt
    }

    pub fn propose_with_noise(&self, theta: &ParamVector, z: &DVector<f64>) -> ParamVector {
        theta + &self.sqrt * z
    }
}

pub(crate) fn standard_normal_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| rng.sample(StandardNormal))
}

impl Proposal for RandomWalk {
    fn propose<R: Rng + ?Sized>(&mut self, current: &ParamVector, rng: &mut R) -> Result<ParamVector> {
        if current.len() != self.dim() {
            return Err(invalid(format!(
                "random walk has dimension {} but theta has {}",
                self.dim(),
                current.len()
            )));
        }
        let z = standard_normal_vector(self.dim(), rng);
        Ok(self.propose_with_noise(current, &z))
    }

    fn log_ratio(&self, _current: &ParamVector, _proposed: &ParamVector) -> Result<f64> {
        Ok(0.0)
    }
}

/// One random-walk draw with covariance `c`.
pub fn random_walk_propose<R: Rng + ?Sized>(theta: &ParamVector, c: &DMatrix<f64>, rng: &mut R) -> Result<ParamVector> {
    RandomWalk::new(c)?.propose(theta, rng)
}
