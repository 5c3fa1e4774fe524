use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use synlik::engine::{
    run_chain, ChainConfig, DensityKind, LikelihoodConfig, ModelBundle, PriorComponent, PriorSpec, Stage,
    StageSchedule,
};
use synlik::simulators::{build_model, Dataset, Model, ModelOptions, SimVariates, Transform, VariateLayout};
use synlik::{Error, Result};

/// One noisy observation of θ per simulation: s = θ + z.
#[derive(Debug)]
struct Shift;

impl Model for Shift {
    fn id(&self) -> &'static str {
        "shift"
    }
    fn param_names(&self) -> &'static [&'static str] {
        &["a", "b"]
    }
    fn transforms(&self) -> Vec<Transform> {
        vec![Transform::Identity; 2]
    }
    fn summary_dim(&self) -> usize {
        2
    }
    fn layout(&self) -> VariateLayout {
        VariateLayout::fixed(2, 0)
    }
    fn validate(&self, _theta: &[f64]) -> Result<()> {
        Ok(())
    }
    fn simulate(&self, theta: &[f64], v: &SimVariates) -> Result<Dataset> {
        Ok(Dataset::univariate(theta.iter().zip(&v.normals).map(|(t, z)| t + z).collect()))
    }
    fn summarize(&self, data: &Dataset) -> Result<DVector<f64>> {
        Ok(DVector::from_column_slice(&data.values))
    }
}

const PRIOR_SD: f64 = 2.0;

fn shift_bundle(s_obs: [f64; 2]) -> ModelBundle {
    let prior = PriorSpec::new(
        vec![PriorComponent::Normal { mean: 0.0, sd: PRIOR_SD }; 2],
        vec![Transform::Identity; 2],
    )
    .unwrap();
    ModelBundle { model: Arc::new(Shift), s_obs: DVector::from_column_slice(&s_obs), prior }
}

fn schedule(burnin: usize, asl: usize, adaptive: usize, m: usize) -> StageSchedule {
    StageSchedule { burnin, mcwm_in_burnin: false, asl, adaptive, m, m_post: None }
}

fn config(sched: StageSchedule, seed: u64) -> ChainConfig {
    ChainConfig::new(sched, DMatrix::identity(2, 2) * 0.25, vec![0.5, -0.5], seed)
}

#[test]
fn stage_labels_follow_the_schedule() {
    let trace = run_chain(&shift_bundle([1.0, 2.0]), &config(schedule(200, 300, 2800, 10), 1)).unwrap();
    assert_eq!(trace.len(), 3300);
    for (i, r) in trace.records.iter().enumerate() {
        let want = if i < 200 {
            Stage::Burnin
        } else if i < 500 {
            Stage::Asl
        } else {
            Stage::Adaptive
        };
        assert_eq!(r.stage, want, "iteration {i}");
    }
}

#[test]
fn adaptive_only_schedule() {
    let trace = run_chain(&shift_bundle([1.0, 2.0]), &config(schedule(0, 0, 400, 10), 2)).unwrap();
    assert_eq!(trace.len(), 400);
    assert!(trace.records.iter().all(|r| r.stage == Stage::Adaptive));
    assert!(trace.acceptance_rate(None).unwrap() > 0.05);
}

#[test]
fn rejections_repeat_the_previous_state() {
    let trace = run_chain(&shift_bundle([1.0, 2.0]), &config(schedule(50, 50, 300, 10), 3)).unwrap();
    assert!(trace.records.iter().any(|r| !r.accepted));
    for w in trace.records.windows(2) {
        if !w[1].accepted {
            assert_eq!(w[1].theta, w[0].theta);
            assert_eq!(w[1].log_lik.to_bits(), w[0].log_lik.to_bits());
        }
    }
}

#[test]
fn same_seed_same_trace() {
    let b = shift_bundle([1.0, 2.0]);
    let mut cfg = config(schedule(30, 30, 100, 12), 4);
    cfg.csl_blocks = Some(3);
    let a = run_chain(&b, &cfg).unwrap();
    assert_eq!(a, run_chain(&b, &cfg).unwrap());
    cfg.seed = 5;
    assert_ne!(a, run_chain(&b, &cfg).unwrap());
}

#[test]
fn single_block_csl_equals_fresh_variates() {
    let b = shift_bundle([1.0, 2.0]);
    let plain = config(schedule(40, 40, 200, 10), 6);
    let mut csl = plain.clone();
    csl.csl_blocks = Some(1);
    let (a, c) = (run_chain(&b, &plain).unwrap(), run_chain(&b, &csl).unwrap());
    for (x, y) in a.records.iter().zip(&c.records) {
        assert_eq!(x.theta, y.theta);
        assert_eq!(x.log_lik.to_bits(), y.log_lik.to_bits());
        assert_eq!(x.accepted, y.accepted);
        assert_eq!(y.block.unwrap_or(0), 0);
    }
}

#[test]
fn csl_records_refreshed_blocks() {
    let b = shift_bundle([1.0, 2.0]);
    let mut cfg = config(schedule(0, 0, 300, 12), 7);
    cfg.csl_blocks = Some(4);
    let trace = run_chain(&b, &cfg).unwrap();
    let mut seen = [false; 4];
    for r in &trace.records {
        seen[r.block.unwrap()] = true;
    }
    assert!(seen.iter().all(|s| *s));
}

/// Batch-means standard error of a chain's mean.
fn batch_se(x: &[f64], batches: usize) -> f64 {
    let len = x.len() / batches;
    let means: Vec<f64> = x.chunks_exact(len).map(|c| c.iter().sum::<f64>() / len as f64).collect();
    let grand = means.iter().sum::<f64>() / means.len() as f64;
    let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (means.len() as f64 - 1.0);
    (var / means.len() as f64).sqrt()
}

#[test]
fn unbiased_likelihood_targets_the_exact_posterior() {
    // s ~ N(θ, I): the unbiased density is exact, so the chain targets the
    // conjugate posterior N(s·τ²/(1+τ²), τ²/(1+τ²)).
    let s_obs = [1.5, -0.8];
    let b = shift_bundle(s_obs);
    let mut cfg = config(schedule(500, 0, 20_000, 30), 8);
    cfg.likelihood = LikelihoodConfig { density: DensityKind::Unbiased, shrinkage: None };
    let trace = run_chain(&b, &cfg).unwrap();
    let post: Vec<_> = trace.stage(Stage::Adaptive).collect();
    let shrink = PRIOR_SD.powi(2) / (1.0 + PRIOR_SD.powi(2));
    for j in 0..2 {
        let x: Vec<f64> = post.iter().map(|r| r.theta[j]).collect();
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        let se = batch_se(&x, 40);
        let want = s_obs[j] * shrink;
        assert!((mean - want).abs() < 3.0 * se, "coordinate {j}: {mean} vs {want} (se {se})");
    }
}

#[test]
fn all_burnin_rejections_abort_the_guided_stage() {
    let prior = PriorSpec::new(
        vec![PriorComponent::Uniform { lo: -1.0, hi: 1.0 }; 2],
        vec![Transform::Identity; 2],
    )
    .unwrap();
    let b = ModelBundle { model: Arc::new(Shift), s_obs: DVector::from_vec(vec![0.0, 0.0]), prior };
    let mut cfg = ChainConfig::new(schedule(5, 5, 0, 10), DMatrix::identity(2, 2) * 1e12, vec![0.0, 0.0], 9);
    cfg.likelihood.density = DensityKind::Gaussian;
    assert!(matches!(run_chain(&b, &cfg), Err(Error::InvalidState(_))));
}

#[test]
fn configuration_errors() {
    let b = shift_bundle([0.0, 0.0]);
    let mut cfg = config(schedule(10, 0, 10, 10), 0);
    cfg.csl_blocks = Some(2);
    cfg.schedule.mcwm_in_burnin = true;
    assert!(matches!(run_chain(&b, &cfg), Err(Error::InvalidConfig(_))));

    let mut cfg = config(schedule(10, 0, 10, 10), 0);
    cfg.csl_blocks = Some(11);
    assert!(matches!(run_chain(&b, &cfg), Err(Error::InvalidConfig(_))));

    let mut cfg = config(schedule(10, 0, 10, 5), 0);
    cfg.likelihood.density = DensityKind::Unbiased;
    assert!(matches!(run_chain(&b, &cfg), Err(Error::InvalidConfig(_))));

    assert!(matches!(run_chain(&b, &config(schedule(1, 5, 0, 10), 0)), Err(Error::InvalidConfig(_))));

    let model = build_model("boombust", &ModelOptions::default()).unwrap();
    let prior = PriorSpec::new(
        vec![PriorComponent::Uniform { lo: 0.0, hi: 100.0 }; 4],
        vec![Transform::Identity; 4],
    )
    .unwrap();
    let bb = ModelBundle { model, s_obs: DVector::zeros(12), prior };
    let mut cfg = ChainConfig::new(schedule(0, 0, 5, 50), DMatrix::identity(4, 4), vec![0.4, 50.0, 0.09, 0.05], 0);
    cfg.csl_blocks = Some(5);
    assert!(matches!(run_chain(&bb, &cfg), Err(Error::InvalidConfig(_))));
}

#[test]
fn start_outside_prior_is_rejected() {
    let prior = PriorSpec::new(vec![PriorComponent::Uniform { lo: 0.0, hi: 1.0 }; 2], vec![Transform::Identity; 2]).unwrap();
    let b = ModelBundle { model: Arc::new(Shift), s_obs: DVector::zeros(2), prior };
    let cfg = ChainConfig::new(schedule(0, 0, 5, 10), DMatrix::identity(2, 2), vec![2.0, 0.5], 0);
    assert!(matches!(run_chain(&b, &cfg), Err(Error::InvalidConfig(_))));
}

#[test]
fn reduced_simulations_after_guidance() {
    let b = shift_bundle([1.0, 2.0]);
    let mut cfg = config(schedule(20, 20, 50, 40), 10);
    cfg.schedule.m_post = Some(10);
    cfg.csl_blocks = Some(5);
    let trace = run_chain(&b, &cfg).unwrap();
    assert_eq!(trace.len(), 90);
}
