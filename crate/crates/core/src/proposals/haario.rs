use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::stats::{matrix_sqrt, RunningMoments};
use crate::ParamVector;

use super::random_walk::standard_normal_vector;

/// Squared scale factor numerator `2.4²`; the covariance is scaled by `2.4²/d`.
pub const HAARIO_SCALE: f64 = 2.4 * 2.4;

/// Adaptive-Metropolis covariance over the accepted-parameter history.
///
/// For `r <= burnin` the initial covariance is used; afterwards
/// `(2.4²/d)(cov(history) + εI)`, recomputed when `(r - burnin - 1)` is a
/// multiple of the update interval and cached in between.
#[derive(Debug, Clone)]
pub struct HaarioState {
    c_init: DMatrix<f64>,
    burnin: usize,
    epsilon: f64,
    update_interval: usize,
    history: RunningMoments,
    cached: Option<(DMatrix<f64>, DMatrix<f64>)>,
    init_sqrt: DMatrix<f64>,
}

impl HaarioState {
    pub fn new(c_init: DMatrix<f64>, burnin: usize) -> Result<Self> {
        if !c_init.is_square() || c_init.nrows() == 0 {
            return Err(invalid("initial covariance must be a non-empty square matrix"));
        }
        let init_sqrt = matrix_sqrt(&c_init)?;
        let d = c_init.nrows();
        Ok(Self {
            c_init,
            burnin,
            epsilon: 1e-8,
            update_interval: 30,
            history: RunningMoments::new(d),
            cached: None,
            init_sqrt,
        })
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_update_interval(mut self, interval: usize) -> Self {
        self.update_interval = interval.max(1);
        self
    }

    pub fn dim(&self) -> usize {
        self.c_init.nrows()
    }

    pub fn burnin(&self) -> usize {
        self.burnin
    }

    pub fn update_interval(&self) -> usize {
        self.update_interval
    }

    pub fn history_len(&self) -> usize {
        self.history.count()
    }

    pub fn push(&mut self, theta: &ParamVector) -> Result<()> {
        self.history.push(theta)
    }

    fn refresh_due(&self, r: usize) -> bool {
        self.cached.is_none() || (r - self.burnin - 1) % self.update_interval == 0
    }

    fn ensure(&mut self, r: usize) -> Result<()> {
        if r <= self.burnin || !self.refresh_due(r) {
            return Ok(());
        }
        if self.history.count() < 2 {
            return Err(Error::InvalidState(format!(
                "adaptive covariance needs at least two history points, have {}",
                self.history.count()
            )));
        }
        let d = self.dim();
        let cov = (self.history.covariance() + DMatrix::identity(d, d) * self.epsilon) * (HAARIO_SCALE / d as f64);
        let sqrt = matrix_sqrt(&cov)?;
        self.cached = Some((cov, sqrt));
        Ok(())
    }

    /// Proposal covariance at iteration `r` (1-based).
    pub fn covariance(&mut self, r: usize) -> Result<DMatrix<f64>> {
        self.ensure(r)?;
        Ok(match (&self.cached, r <= self.burnin) {
            (Some((c, _)), false) => c.clone(),
            _ => self.c_init.clone(),
        })
    }

    pub fn propose<R: Rng + ?Sized>(&mut self, r: usize, current: &ParamVector, rng: &mut R) -> Result<ParamVector> {
        self.ensure(r)?;
        let sqrt = match (&self.cached, r <= self.burnin) {
            (Some((_, s)), false) => s,
            _ => &self.init_sqrt,
        };
        let z = standard_normal_vector(self.dim(), rng);
        Ok(current + sqrt * z)
    }
}
