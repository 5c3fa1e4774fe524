//! Metropolis–Hastings machinery: priors, correlated auxiliary variates, the
//! synthetic-likelihood estimator and the staged chain driver.

mod chain;
mod estimator;
mod mh;
mod prior;
mod variates;

pub use chain::{run_chain, ChainConfig, ChainTrace, ModelBundle, Stage, StageSchedule, TraceRecord};
pub use estimator::{DensityKind, LikelihoodConfig, SLOutcome, SyntheticLikelihood};
pub use mh::{accept, log_acceptance, mcwm_step, mh_decide, mh_step, MhOutcome, MhState};
pub use prior::{PriorComponent, PriorSpec};
pub use variates::{BlockLayout, VariateStore};
