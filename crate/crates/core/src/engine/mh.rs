use rand::Rng;

use crate::error::Result;
use crate::proposals::Proposal;
use crate::ParamVector;

/// Log Metropolis–Hastings ratio with the conventions for infinite terms:
/// a proposal outside the prior or with `ℓ = -inf` is never accepted, and a
/// finite proposal always beats a current state with `ℓ = -inf`.
pub fn log_acceptance(log_lik_prop: f64, log_lik_cur: f64, log_q_ratio: f64, log_prior_prop: f64, log_prior_cur: f64) -> f64 {
    if log_prior_prop == f64::NEG_INFINITY || log_lik_prop == f64::NEG_INFINITY || log_lik_prop.is_nan() {
        return f64::NEG_INFINITY;
    }
    if log_lik_cur == f64::NEG_INFINITY || log_prior_cur == f64::NEG_INFINITY {
        return f64::INFINITY;
    }
    let r = (log_lik_prop - log_lik_cur) + log_q_ratio + (log_prior_prop - log_prior_cur);
    if r.is_nan() {
        f64::NEG_INFINITY
    } else {
        r
    }
}

/// Accept iff `ln u < log α` for `u ~ U(0, 1)`; consumes one uniform.
pub fn accept<R: Rng + ?Sized>(log_alpha: f64, rng: &mut R) -> bool {
    let u: f64 = rng.random();
    log_alpha >= 0.0 || u.ln() < log_alpha
}

/// The chain position together with whatever the estimator attached to it.
#[derive(Debug, Clone)]
pub struct MhState<T> {
    pub theta: ParamVector,
    pub log_lik: f64,
    pub log_prior: f64,
    pub payload: Option<T>,
}

#[derive(Debug, Clone)]
pub struct MhOutcome<T> {
    pub state: MhState<T>,
    pub accepted: bool,
    pub log_alpha: f64,
    /// Estimator calls made during the step.
    pub evaluations: usize,
}

/// Decide between `current` and an already generated proposal.
///
/// The estimator is not called when the proposal has zero prior density.
pub fn mh_decide<T, F, R>(
    current: MhState<T>,
    proposed: ParamVector,
    log_q_ratio: f64,
    prior: &dyn Fn(&ParamVector) -> f64,
    estimator: &mut F,
    rng: &mut R,
) -> Result<MhOutcome<T>>
where
    F: FnMut(&ParamVector) -> Result<(f64, T)>,
    R: Rng + ?Sized,
{
    let log_prior = prior(&proposed);
    if log_prior == f64::NEG_INFINITY {
        return Ok(MhOutcome { state: current, accepted: false, log_alpha: f64::NEG_INFINITY, evaluations: 0 });
    }
    let (log_lik, payload) = estimator(&proposed)?;
    let log_alpha = log_acceptance(log_lik, current.log_lik, log_q_ratio, log_prior, current.log_prior);
    if accept(log_alpha, rng) {
        let state = MhState { theta: proposed, log_lik, log_prior, payload: Some(payload) };
        Ok(MhOutcome { state, accepted: true, log_alpha, evaluations: 1 })
    } else {
        Ok(MhOutcome { state: current, accepted: false, log_alpha, evaluations: 1 })
    }
}

/// One Metropolis–Hastings iteration reusing the current likelihood estimate.
pub fn mh_step<T, Q, F, R>(
    current: MhState<T>,
    proposal: &mut Q,
    estimator: &mut F,
    prior: &dyn Fn(&ParamVector) -> f64,
    rng: &mut R,
) -> Result<MhOutcome<T>>
where
    Q: Proposal,
    F: FnMut(&ParamVector) -> Result<(f64, T)>,
    R: Rng + ?Sized,
{
    let proposed = proposal.propose(&current.theta, rng)?;
    let log_q_ratio = proposal.log_ratio(&current.theta, &proposed)?;
    mh_decide(current, proposed, log_q_ratio, prior, estimator, rng)
}

/// Markov-chain-within-Metropolis: the current likelihood is re-estimated
/// before the proposal is assessed, so a lucky estimate cannot trap the chain.
pub fn mcwm_step<T, Q, F, R>(
    current: MhState<T>,
    proposal: &mut Q,
    estimator: &mut F,
    prior: &dyn Fn(&ParamVector) -> f64,
    rng: &mut R,
) -> Result<MhOutcome<T>>
where
    Q: Proposal,
    F: FnMut(&ParamVector) -> Result<(f64, T)>,
    R: Rng + ?Sized,
{
    let (log_lik, payload) = estimator(&current.theta)?;
    let refreshed = MhState { log_lik, payload: Some(payload), ..current };
    let mut out = mh_step(refreshed, proposal, estimator, prior, rng)?;
    out.evaluations += 1;
    Ok(out)
}
