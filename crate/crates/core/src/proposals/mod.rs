//! Proposal kernels for the Metropolis–Hastings sampler.

mod bootstrap;
mod guided;
mod haario;
mod random_walk;

pub use bootstrap::{bootstrap_mean, bootstrap_rejection_summary};
pub use guided::{GuidedMode, GuidedProposal};
pub use haario::{HaarioState, HAARIO_SCALE};
pub use random_walk::{random_walk_propose, RandomWalk};

use rand::Rng;

use crate::{ParamVector, Result};

/// A Metropolis–Hastings proposal on the sampling scale.
pub trait Proposal {
    fn propose<R: Rng + ?Sized>(&mut self, current: &ParamVector, rng: &mut R) -> Result<ParamVector>;

    /// `ln g(current | proposed) - ln g(proposed | current)`.
    fn log_ratio(&self, current: &ParamVector, proposed: &ParamVector) -> Result<f64>;
}

impl<P: Proposal + ?Sized> Proposal for &mut P {
    fn propose<R: Rng + ?Sized>(&mut self, current: &ParamVector, rng: &mut R) -> Result<ParamVector> {
        (**self).propose(current, rng)
    }

    fn log_ratio(&self, current: &ParamVector, proposed: &ParamVector) -> Result<f64> {
        (**self).log_ratio(current, proposed)
    }
}
