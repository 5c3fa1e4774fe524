use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::estimator::{LikelihoodConfig, SLOutcome, SyntheticLikelihood};
use super::mh::{mcwm_step, mh_step, MhOutcome, MhState};
use super::prior::PriorSpec;
use super::variates::VariateStore;
use crate::error::{invalid, Error, Result};
use crate::proposals::{bootstrap_rejection_summary, GuidedMode, GuidedProposal, HaarioState, Proposal, RandomWalk};
use crate::simulators::{to_natural, to_sampling, Model, Transform};
use crate::stats::SummaryMatrix;
use crate::ParamVector;

/// Generator streams derived from the chain seed.
const STREAM_CHAIN: u64 = 0;
const STREAM_VARIATES: u64 = 1;
const STREAM_BLOCKS: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    Burnin,
    Asl,
    Adaptive,
}

impl Stage {
    pub const ALL: [Stage; 3] = [Stage::Burnin, Stage::Asl, Stage::Adaptive];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Burnin => "burnin",
            Self::Asl => "asl",
            Self::Adaptive => "adaptive",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| invalid(format!("unknown stage `{s}`")))
    }
}

/// Iteration counts of the burnin → guided → adaptive schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageSchedule {
    pub burnin: usize,
    pub mcwm_in_burnin: bool,
    pub asl: usize,
    pub adaptive: usize,
    /// Simulations per likelihood estimate.
    pub m: usize,
    /// Reduced simulation count for the adaptive stage.
    pub m_post: Option<usize>,
}

impl StageSchedule {
    pub fn total(&self) -> usize {
        self.burnin + self.asl + self.adaptive
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 2 || self.m_post.is_some_and(|m| m < 2) {
            return Err(Error::InvalidConfig("simulation counts must be at least 2".into()));
        }
        if self.asl > 0 && self.burnin < 2 {
            return Err(Error::InvalidConfig(
                "the guided stage needs at least two burnin iterations to seed its history".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ChainConfig {
    pub schedule: StageSchedule,
    /// Random-walk covariance on the sampling scale (burnin and the start of adaptation).
    pub rw_cov: DMatrix<f64>,
    pub haario_interval: usize,
    pub haario_epsilon: f64,
    pub asl_mode: GuidedMode,
    pub bootstrap_on_reject: bool,
    pub likelihood: LikelihoodConfig,
    /// Number of variate blocks for correlated likelihoods; `None` draws fresh variates.
    pub csl_blocks: Option<usize>,
    /// Starting point on the natural scale.
    pub start: Vec<f64>,
    pub seed: u64,
}

impl ChainConfig {
    pub fn new(schedule: StageSchedule, rw_cov: DMatrix<f64>, start: Vec<f64>, seed: u64) -> Self {
        Self {
            schedule,
            rw_cov,
            haario_interval: 30,
            haario_epsilon: 1e-8,
            asl_mode: GuidedMode::Gaussian,
            bootstrap_on_reject: true,
            likelihood: LikelihoodConfig::default(),
            csl_blocks: None,
            start,
            seed,
        }
    }
}

/// The model, its observed summaries and the prior: everything a chain needs
/// besides tuning.
#[derive(Debug, Clone)]
pub struct ModelBundle {
    pub model: Arc<dyn Model>,
    pub s_obs: DVector<f64>,
    pub prior: PriorSpec,
}

impl ModelBundle {
    pub fn transforms(&self) -> &[Transform] {
        self.prior.transforms()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub theta: Vec<f64>,
    pub theta_sampling: Vec<f64>,
    pub log_lik: f64,
    pub accepted: bool,
    pub stage: Stage,
    pub block: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChainTrace {
    pub param_names: Vec<String>,
    pub records: Vec<TraceRecord>,
}

impl ChainTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn stage(&self, stage: Stage) -> impl Iterator<Item = &TraceRecord> {
        self.records.iter().filter(move |r| r.stage == stage)
    }

    /// Acceptance rate over one stage, or the whole chain; `None` when empty.
    pub fn acceptance_rate(&self, stage: Option<Stage>) -> Option<f64> {
        let (n, acc) = self
            .records
            .iter()
            .filter(|r| stage.is_none_or(|s| r.stage == s))
            .fold((0usize, 0usize), |(n, a), r| (n + 1, a + usize::from(r.accepted)));
        (n > 0).then(|| acc as f64 / n as f64)
    }

    /// Natural-scale values of parameter `j`.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.records.iter().map(|r| r.theta[j]).collect()
    }

    pub fn tail(&self, n: usize) -> ChainTrace {
        let start = self.records.len().saturating_sub(n);
        ChainTrace { param_names: self.param_names.clone(), records: self.records[start..].to_vec() }
    }
}

/// What the estimator attaches to an evaluated point.
#[derive(Debug, Clone, Default)]
struct Payload {
    summaries: Option<SummaryMatrix>,
    store: Option<VariateStore>,
}

/// Likelihood evaluation on the sampling scale with the chain's generator streams.
struct Evaluator {
    estimator: SyntheticLikelihood,
    transforms: Vec<Transform>,
    variate_rng: ChaCha8Rng,
    block_rng: ChaCha8Rng,
    last_block: Option<usize>,
}

impl Evaluator {
    fn evaluate(&mut self, y: &ParamVector, store: Option<&VariateStore>, refresh: bool) -> Result<(f64, Payload)> {
        self.last_block = None;
        let Ok(theta) = to_natural(&self.transforms, y.as_slice()) else {
            return Ok((f64::NEG_INFINITY, Payload::default()));
        };
        let model = self.estimator.model().clone();
        let (outcome, store): (SLOutcome, Option<VariateStore>) = match store {
            Some(current) if refresh => {
                let (next, k) = current.refresh(model.as_ref(), &mut self.block_rng, &mut self.variate_rng);
                self.last_block = Some(k);
                (self.estimator.estimate_with(&theta, next.sims())?, Some(next))
            }
            Some(current) => (self.estimator.estimate_with(&theta, current.sims())?, None),
            None => (self.estimator.estimate_fresh(&theta, &mut self.variate_rng)?, None),
        };
        Ok((outcome.log_lik, Payload { summaries: outcome.summaries, store }))
    }
}

/// Proposal wrapper that maps every draw to its canonical representative.
struct Canonical<'a, P> {
    inner: P,
    canon: &'a dyn Fn(ParamVector) -> ParamVector,
}

impl<P: Proposal> Proposal for Canonical<'_, P> {
    fn propose<R: Rng + ?Sized>(&mut self, current: &ParamVector, rng: &mut R) -> Result<ParamVector> {
        Ok((self.canon)(self.inner.propose(current, rng)?))
    }

    fn log_ratio(&self, current: &ParamVector, proposed: &ParamVector) -> Result<f64> {
        self.inner.log_ratio(current, proposed)
    }
}

/// Guided proposal fitted to natural-scale parameters, presented on the
/// sampling scale: `ln q_y(y) = ln q(θ(y)) + ln |dθ/dy|`. Draws outside a
/// transform's domain come back as NaN, which the prior rejects.
struct GuidedOnSampling<'a> {
    guided: &'a mut GuidedProposal,
    transforms: &'a [Transform],
}

impl GuidedOnSampling<'_> {
    fn log_density(&self, y: &ParamVector) -> Result<f64> {
        let Ok(x) = to_natural(self.transforms, y.as_slice()) else { return Ok(f64::NEG_INFINITY) };
        let mut log_jac = 0.0;
        for (t, &yi) in self.transforms.iter().zip(y.iter()) {
            match t.log_jacobian(yi) {
                Ok(v) => log_jac += v,
                Err(_) => return Ok(f64::NEG_INFINITY),
            }
        }
        Ok(self.guided.log_density(&ParamVector::from_vec(x))? + log_jac)
    }
}

impl Proposal for GuidedOnSampling<'_> {
    fn propose<R: Rng + ?Sized>(&mut self, _current: &ParamVector, rng: &mut R) -> Result<ParamVector> {
        let x = self.guided.draw(rng)?;
        Ok(to_sampling(self.transforms, x.as_slice())
            .map(ParamVector::from_vec)
            .unwrap_or_else(|_| ParamVector::from_element(x.len(), f64::NAN)))
    }

    fn log_ratio(&self, current: &ParamVector, proposed: &ParamVector) -> Result<f64> {
        let lp = self.log_density(proposed)?;
        if lp == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(self.log_density(current)? - lp)
    }
}

/// Adaptive random walk at a fixed iteration index.
struct HaarioAt<'a> {
    state: &'a mut HaarioState,
    r: usize,
}

impl Proposal for HaarioAt<'_> {
    fn propose<R: Rng + ?Sized>(&mut self, current: &ParamVector, rng: &mut R) -> Result<ParamVector> {
        self.state.propose(self.r, current, rng)
    }

    fn log_ratio(&self, _current: &ParamVector, _proposed: &ParamVector) -> Result<f64> {
        Ok(0.0)
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn validate(bundle: &ModelBundle, cfg: &ChainConfig) -> Result<()> {
    cfg.schedule.validate()?;
    let d = bundle.model.dim();
    if bundle.prior.dim() != d || cfg.start.len() != d {
        return Err(Error::InvalidConfig(format!(
            "model has {d} parameters; prior has {} and start has {}",
            bundle.prior.dim(),
            cfg.start.len()
        )));
    }
    if cfg.rw_cov.shape() != (d, d) {
        return Err(Error::InvalidConfig(format!("random-walk covariance must be {d}x{d}")));
    }
    if let Some(g) = cfg.csl_blocks {
        if !bundle.model.supports_csl() {
            return Err(Error::InvalidConfig(format!(
                "correlated likelihoods need a fixed variate budget, which `{}` lacks",
                bundle.model.id()
            )));
        }
        if cfg.schedule.mcwm_in_burnin {
            return Err(Error::InvalidConfig("MCWM cannot be combined with correlated likelihoods".into()));
        }
        let m_min = cfg.schedule.m_post.map_or(cfg.schedule.m, |mp| mp.min(cfg.schedule.m));
        if g == 0 || g > m_min {
            return Err(Error::InvalidConfig(format!("block count G = {g} must lie in 1..={m_min}")));
        }
    }
    if let GuidedMode::Student { nu } = cfg.asl_mode {
        if !(nu > 0.0) {
            return Err(Error::InvalidConfig(format!("Student degrees of freedom must be positive, got {nu}")));
        }
    }
    Ok(())
}

fn mean_summary(p: &Payload) -> Option<DVector<f64>> {
    p.summaries.as_ref().map(|s| s.column_means())
}

/// Run the burnin → guided → adaptive chain.
pub fn run_chain(bundle: &ModelBundle, cfg: &ChainConfig) -> Result<ChainTrace> {
    validate(bundle, cfg)?;
    let sched = cfg.schedule;
    let model = bundle.model.clone();
    let transforms = bundle.transforms().to_vec();
    let mut rng = stream(cfg.seed, STREAM_CHAIN);
    let mut ev = Evaluator {
        estimator: SyntheticLikelihood::new(model.clone(), bundle.s_obs.clone(), sched.m, cfg.likelihood)?,
        transforms: transforms.clone(),
        variate_rng: stream(cfg.seed, STREAM_VARIATES),
        block_rng: stream(cfg.seed, STREAM_BLOCKS),
        last_block: None,
    };

    let canon = |y: ParamVector| -> ParamVector {
        let Ok(mut x) = to_natural(&transforms, y.as_slice()) else { return y };
        model.canonicalize(&mut x);
        to_sampling(&transforms, &x).map(ParamVector::from_vec).unwrap_or(y)
    };
    let prior = |y: &ParamVector| bundle.prior.log_density(y.as_slice());
    let natural = |y: &ParamVector| to_natural(&transforms, y.as_slice()).map(ParamVector::from_vec);

    let mut start = cfg.start.clone();
    model.canonicalize(&mut start);
    let y0 = ParamVector::from_vec(
        to_sampling(&transforms, &start).map_err(|e| Error::InvalidConfig(format!("start: {e}")))?,
    );
    let lp0 = prior(&y0);
    if lp0 == f64::NEG_INFINITY {
        return Err(Error::InvalidConfig(format!("start {start:?} lies outside the prior support")));
    }
    let mut store = match cfg.csl_blocks {
        Some(g) => Some(VariateStore::draw(model.as_ref(), sched.m, g, &mut ev.variate_rng)?),
        None => None,
    };
    let (ll0, payload0) = ev.evaluate(&y0, store.as_ref(), false)?;
    let mut state = MhState { theta: y0, log_lik: ll0, log_prior: lp0, payload: Some(payload0) };

    let mut records = Vec::with_capacity(sched.total());
    let names: Vec<String> = model.param_names().iter().map(|s| s.to_string()).collect();

    // Apply an MH outcome: adopt the proposal's variates on acceptance and log the iteration.
    let mut finish = |out: MhOutcome<Payload>,
                      stage: Stage,
                      store: &mut Option<VariateStore>,
                      block: Option<usize>|
     -> Result<MhState<Payload>> {
        let mut st = out.state;
        if out.accepted {
            if let Some(p) = st.payload.as_mut() {
                if let Some(next) = p.store.take() {
                    *store = Some(next);
                }
            }
        }
        let theta = to_natural(&transforms, st.theta.as_slice())?;
        records.push(TraceRecord {
            theta,
            theta_sampling: st.theta.as_slice().to_vec(),
            log_lik: st.log_lik,
            accepted: out.accepted,
            stage,
            block,
        });
        Ok(st)
    };

    // Stage 1: fixed random walk, optionally with MCWM.
    let mut rw = RandomWalk::new(&cfg.rw_cov)?;
    let mut burnin_states = Vec::with_capacity(sched.burnin);
    let mut pairs: Vec<(ParamVector, DVector<f64>)> = Vec::new();
    let mut burnin_accepts = 0usize;
    for _ in 0..sched.burnin {
        let mut proposal = Canonical { inner: &mut rw, canon: &canon };
        let out = {
            let current_store = store.as_ref();
            let mut est = |y: &ParamVector| ev.evaluate(y, current_store, true);
            if sched.mcwm_in_burnin {
                mcwm_step(state, &mut proposal, &mut est, &prior, &mut rng)?
            } else {
                mh_step(state, &mut proposal, &mut est, &prior, &mut rng)?
            }
        };
        burnin_accepts += usize::from(out.accepted);
        let block = ev.last_block;
        state = finish(out, Stage::Burnin, &mut store, block)?;
        burnin_states.push(state.theta.clone());
        if sched.asl > 0 {
            if let Some(s_bar) = state.payload.as_ref().and_then(mean_summary) {
                pairs.push((natural(&state.theta)?, s_bar));
            }
        }
    }

    // Stage 2: guided independence proposals, learnt on the natural scale.
    let mut asl_states = Vec::with_capacity(sched.asl);
    if sched.asl > 0 {
        if burnin_accepts == 0 {
            return Err(Error::InvalidState(format!(
                "all {} burnin proposals were rejected; the guided proposal has no parameter spread to learn from",
                sched.burnin
            )));
        }
        if pairs.len() < 2 {
            return Err(Error::InvalidState(
                "fewer than two burnin states produced summaries; cannot seed the guided proposal".into(),
            ));
        }
        let mut guided = GuidedProposal::new(bundle.s_obs.clone(), model.dim(), cfg.asl_mode)?;
        for (y, s) in &pairs {
            guided.append(y, s)?;
        }
        for _ in 0..sched.asl {
            let out = {
                let current_store = store.as_ref();
                let mut est = |y: &ParamVector| ev.evaluate(y, current_store, true);
                let inner = GuidedOnSampling { guided: &mut guided, transforms: &transforms };
                let mut proposal = Canonical { inner, canon: &canon };
                mh_step(state, &mut proposal, &mut est, &prior, &mut rng)?
            };
            let accepted = out.accepted;
            let block = ev.last_block;
            state = finish(out, Stage::Asl, &mut store, block)?;
            let payload = state.payload.as_ref();
            let s_bar = match (accepted, cfg.bootstrap_on_reject, payload.and_then(|p| p.summaries.as_ref())) {
                (false, true, Some(s)) => Some(bootstrap_rejection_summary(s, &mut rng)?),
                (_, _, Some(s)) => Some(s.column_means()),
                (_, _, None) => None,
            };
            if let Some(s_bar) = s_bar {
                guided.append(&natural(&state.theta)?, &s_bar)?;
            }
            asl_states.push(state.theta.clone());
        }
    }

    // Stage 3: adaptive random walk seeded from the guided draws.
    if sched.adaptive > 0 {
        if let Some(m_post) = sched.m_post.filter(|&mp| mp != sched.m) {
            ev.estimator = ev.estimator.with_simulations(m_post)?;
            if let Some(g) = cfg.csl_blocks {
                store = Some(VariateStore::draw(model.as_ref(), m_post, g, &mut ev.variate_rng)?);
            }
            let (ll, payload) = ev.evaluate(&state.theta, store.as_ref(), false)?;
            state.log_lik = ll;
            state.payload = Some(payload);
        }
        let history: Vec<ParamVector> = if asl_states.len() >= 2 {
            asl_states
        } else {
            burnin_states.into_iter().chain(asl_states).collect()
        };
        let lag = if history.len() >= 2 { 0 } else { cfg.haario_interval };
        let mut haario = HaarioState::new(cfg.rw_cov.clone(), lag)?
            .with_epsilon(cfg.haario_epsilon)
            .with_update_interval(cfg.haario_interval);
        for y in &history {
            haario.push(y)?;
        }
        for r in 1..=sched.adaptive {
            let out = {
                let current_store = store.as_ref();
                let mut est = |y: &ParamVector| ev.evaluate(y, current_store, true);
                let mut proposal = Canonical { inner: HaarioAt { state: &mut haario, r }, canon: &canon };
                mh_step(state, &mut proposal, &mut est, &prior, &mut rng)?
            };
            let block = ev.last_block;
            state = finish(out, Stage::Adaptive, &mut store, block)?;
            haario.push(&state.theta)?;
        }
    }

    Ok(ChainTrace { param_names: names, records })
}
