use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use synlik::engine::{
    ChainConfig, DensityKind, LikelihoodConfig, ModelBundle, PriorComponent, PriorSpec, StageSchedule,
};
use synlik::proposals::GuidedMode;
use synlik::simulators::{build_model, draw_variates, to_natural, Model, ModelOptions, Transform, MODEL_IDS};

use crate::data::read_dataset;

/// Generator stream reserved for the observed dataset.
const STREAM_DATA: u64 = 7;
/// Generator stream reserved for random starting points.
const STREAM_START: u64 = 8;
/// Shortest burnin the smoke profile leaves in front of a guided stage.
pub const SMOKE_MIN_GUIDED_BURNIN: usize = 25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub model: String,
    #[serde(default)]
    pub model_options: ModelOptionsConfig,
    pub data: DataConfig,
    pub prior: Vec<PriorEntry>,
    pub schedule: ScheduleConfig,
    pub proposal: ProposalConfig,
    #[serde(default)]
    pub likelihood: LikelihoodSection,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub report: ReportConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelOptionsConfig {
    pub n: Option<usize>,
    pub perturbed: Option<bool>,
    pub gamma_true: Option<f64>,
    pub redshift_draws: Option<usize>,
    pub w_a: Option<f64>,
    pub h0: Option<f64>,
}

impl From<&ModelOptionsConfig> for ModelOptions {
    fn from(c: &ModelOptionsConfig) -> Self {
        ModelOptions {
            n: c.n,
            perturbed: c.perturbed,
            gamma_true: c.gamma_true,
            redshift_draws: c.redshift_draws,
            w_a: c.w_a,
            h0: c.h0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// `generate` (simulate at `truth` with `seed`) or `file`.
    pub source: String,
    pub truth: Option<Vec<f64>>,
    #[serde(default)]
    pub seed: u64,
    /// Dataset file, relative to the config file.
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorEntry {
    /// `uniform`, `normal`, `beta` or `std-normal-transformed`.
    pub kind: String,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    /// Sampling-scale transform; defaults to the model's.
    pub transform: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub burnin: usize,
    #[serde(default)]
    pub mcwm: bool,
    pub asl: usize,
    pub adaptive: usize,
    pub m: usize,
    pub m_post: Option<usize>,
}

fn default_interval() -> usize {
    30
}

fn default_epsilon() -> f64 {
    1e-8
}

fn default_true() -> bool {
    true
}

fn default_mode() -> String {
    "gaussian".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProposalConfig {
    /// Natural-scale start shared by all replicates.
    pub start: Option<Vec<f64>>,
    /// Start given on the sampling (transformed) scale.
    pub start_sampling: Option<Vec<f64>>,
    /// Per-replicate start drawn uniformly from `[lo, hi]` in every coordinate.
    pub start_uniform: Option<[f64; 2]>,
    /// Random-walk standard deviations on the sampling scale.
    pub rw_sd: Option<Vec<f64>>,
    /// Random-walk variances on the sampling scale.
    pub rw_var: Option<Vec<f64>>,
    #[serde(default = "default_interval")]
    pub haario_interval: usize,
    #[serde(default = "default_epsilon")]
    pub haario_epsilon: f64,
    /// `gaussian` or `student`.
    #[serde(default = "default_mode")]
    pub asl_mode: String,
    pub nu: Option<f64>,
    #[serde(default = "default_true")]
    pub bootstrap_on_reject: bool,
}

fn default_density() -> String {
    "unbiased".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LikelihoodSection {
    /// `gaussian` (plug-in) or `unbiased`.
    #[serde(default = "default_density")]
    pub density: String,
    pub shrinkage: Option<f64>,
    pub csl_blocks: Option<usize>,
}

impl Default for LikelihoodSection {
    fn default() -> Self {
        Self { density: default_density(), shrinkage: None, csl_blocks: None }
    }
}

fn default_replicates() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    /// Explicit per-replicate seeds; otherwise `seed, seed + 1, …`.
    pub seeds: Option<Vec<u64>>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { seed: 0, replicates: 1, seeds: None }
    }
}

fn default_level() -> f64 {
    0.95
}

fn default_stride() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportConfig {
    /// Keep only the last `tail` adaptive-stage draws.
    pub tail: Option<usize>,
    #[serde(default = "default_stride")]
    pub thin: usize,
    #[serde(default = "default_level")]
    pub level: f64,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self { tail: None, thin: 1, level: 0.95 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// Every problem found in one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigErrors(pub Vec<FieldError>);

impl ConfigErrors {
    pub fn paths(&self) -> Vec<&str> {
        self.0.iter().map(|e| e.path.as_str()).collect()
    }
}

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid configuration:")?;
        for e in &self.0 {
            write!(f, "\n  {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

#[derive(Default)]
struct Issues(Vec<FieldError>);

impl Issues {
    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.0.push(FieldError { path: path.into(), message: message.into() });
    }

    fn check(&mut self, ok: bool, path: impl Into<String>, message: impl Into<String>) {
        if !ok {
            self.push(path, message);
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigErrors> {
        toml::from_str(text).map_err(|e| {
            let span = e.span().map(|s| format!(" (byte {})", s.start)).unwrap_or_default();
            ConfigErrors(vec![FieldError { path: "<toml>".into(), message: format!("{}{span}", e.message()) }])
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigErrors> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            ConfigErrors(vec![FieldError { path: path.display().to_string(), message: e.to_string() }])
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Per-replicate seeds.
    pub fn seeds(&self) -> Vec<u64> {
        self.run.seeds.clone().unwrap_or_else(|| (0..self.run.replicates as u64).map(|i| self.run.seed.wrapping_add(i)).collect())
    }

    /// Scales every stage (and the report window) down by `factor`. A burnin
    /// feeding a guided stage keeps at least `SMOKE_MIN_GUIDED_BURNIN`
    /// iterations so it still produces moves to learn from.
    pub fn scaled(&self, factor: usize) -> Self {
        let mut c = self.clone();
        let shrink = |n: usize| if n == 0 { 0 } else { n.div_ceil(factor).max(1) };
        c.schedule.burnin = shrink(c.schedule.burnin);
        c.schedule.asl = shrink(c.schedule.asl);
        c.schedule.adaptive = shrink(c.schedule.adaptive);
        if c.schedule.asl > 0 {
            c.schedule.burnin = c.schedule.burnin.max(self.schedule.burnin.min(SMOKE_MIN_GUIDED_BURNIN));
        }
        c.report.tail = c.report.tail.map(shrink);
        c
    }

    /// Validates every field and resolves the observed summaries. Relative
    /// data paths are taken from `base_dir`.
    pub fn prepare(&self, base_dir: &Path) -> Result<Experiment, ConfigErrors> {
        let mut issues = Issues::default();

        let model = if MODEL_IDS.contains(&self.model.as_str()) {
            match build_model(&self.model, &(&self.model_options).into()) {
                Ok(m) => Some(m),
                Err(e) => {
                    issues.push("model_options", e.to_string());
                    None
                }
            }
        } else {
            issues.push("model", format!("unknown model `{}` (expected one of {})", self.model, MODEL_IDS.join(", ")));
            None
        };
        let Some(model) = model else {
            return Err(ConfigErrors(issues.0));
        };
        let d = model.dim();

        let prior = self.check_prior(&*model, &mut issues);
        self.check_schedule(&mut issues);
        self.check_proposal(d, prior.as_ref(), &mut issues);
        self.check_likelihood(&*model, &mut issues);
        self.check_run_and_report(&mut issues);
        let s_obs = self.observed_summaries(&model, base_dir, &mut issues);

        if !issues.0.is_empty() {
            return Err(ConfigErrors(issues.0));
        }
        let (prior, s_obs) = (prior.expect("checked"), s_obs.expect("checked"));
        let bundle = ModelBundle { model, s_obs, prior };
        Ok(Experiment { config: self.clone(), bundle })
    }

    fn check_prior(&self, model: &dyn Model, issues: &mut Issues) -> Option<PriorSpec> {
        let d = model.dim();
        if self.prior.len() != d {
            issues.push("prior", format!("model `{}` has {d} parameters but {} priors are given", self.model, self.prior.len()));
            return None;
        }
        let defaults = model.transforms();
        let mut comps = Vec::with_capacity(d);
        let mut transforms = Vec::with_capacity(d);
        for (i, (p, t_default)) in self.prior.iter().zip(defaults).enumerate() {
            let path = |f: &str| format!("prior[{i}].{f}");
            let before = issues.0.len();
            let need = |issues: &mut Issues, v: Option<f64>, f: &str| {
                if v.is_none() {
                    issues.push(path(f), format!("required for kind `{}`", p.kind));
                }
                v.unwrap_or(f64::NAN)
            };
            let comp = match p.kind.as_str() {
                "uniform" => Some(PriorComponent::Uniform { lo: need(issues, p.lo, "lo"), hi: need(issues, p.hi, "hi") }),
                "normal" => Some(PriorComponent::Normal { mean: need(issues, p.mean, "mean"), sd: need(issues, p.sd, "sd") }),
                "beta" => Some(PriorComponent::Beta { a: need(issues, p.a, "a"), b: need(issues, p.b, "b") }),
                "std-normal-transformed" => Some(PriorComponent::StdNormalTransformed),
                other => {
                    issues.push(path("kind"), format!("unknown prior kind `{other}`"));
                    None
                }
            };
            if let Some(c) = comp.filter(|_| issues.0.len() == before) {
                match c.validate() {
                    Ok(()) => comps.push(c),
                    Err(e) => issues.push(format!("prior[{i}]"), e.to_string()),
                }
            }
            match p.transform.as_deref().map(Transform::parse).transpose() {
                Ok(t) => transforms.push(t.unwrap_or(t_default)),
                Err(e) => issues.push(path("transform"), e.to_string()),
            }
        }
        if comps.len() != d || transforms.len() != d {
            return None;
        }
        match PriorSpec::new(comps, transforms) {
            Ok(p) => Some(p),
            Err(e) => {
                issues.push("prior", e.to_string());
                None
            }
        }
    }

    fn check_schedule(&self, issues: &mut Issues) {
        let s = &self.schedule;
        issues.check(s.m >= 2, "schedule.m", "must be at least 2");
        if let Some(m) = s.m_post {
            issues.check(m >= 2, "schedule.m_post", "must be at least 2");
        }
        issues.check(s.burnin + s.asl + s.adaptive > 0, "schedule", "at least one iteration is required");
        if s.asl > 0 {
            issues.check(s.burnin >= 2, "schedule.burnin", "the guided stage needs at least 2 burnin iterations");
        }
    }

    fn check_proposal(&self, d: usize, prior: Option<&PriorSpec>, issues: &mut Issues) {
        let p = &self.proposal;
        let given = [p.start.is_some(), p.start_sampling.is_some(), p.start_uniform.is_some()];
        if given.iter().filter(|&&g| g).count() != 1 {
            issues.push("proposal.start", "give exactly one of `start`, `start_sampling` and `start_uniform`");
        } else if let Some([lo, hi]) = p.start_uniform {
            issues.check(lo.is_finite() && hi.is_finite() && lo < hi, "proposal.start_uniform", "needs finite lo < hi")
        } else {
            let (field, values) = match (&p.start, &p.start_sampling) {
                (Some(v), _) => ("proposal.start", v),
                (_, Some(v)) => ("proposal.start_sampling", v),
                _ => unreachable!("one start is given"),
            };
            if values.len() != d {
                issues.push(field, format!("expected {d} values, got {}", values.len()));
            } else if let Some(prior) = prior {
                let y = match &p.start {
                    Some(start) => synlik::simulators::to_sampling(prior.transforms(), start),
                    None => Ok(values.clone()),
                };
                let ok = y.map(|y| prior.log_density(&y) > f64::NEG_INFINITY).unwrap_or(false);
                issues.check(ok, field, "lies outside the prior support");
            }
        }
        match (&p.rw_sd, &p.rw_var) {
            (Some(_), Some(_)) | (None, None) => issues.push("proposal.rw_sd", "give exactly one of `rw_sd` and `rw_var`"),
            (Some(v), None) | (None, Some(v)) => {
                let field = if p.rw_sd.is_some() { "proposal.rw_sd" } else { "proposal.rw_var" };
                if v.len() != d {
                    issues.push(field, format!("expected {d} values, got {}", v.len()));
                }
                issues.check(v.iter().all(|x| x.is_finite() && *x >= 0.0), field, "entries must be finite and non-negative");
            }
        }
        issues.check(p.haario_interval >= 1, "proposal.haario_interval", "must be at least 1");
        issues.check(p.haario_epsilon.is_finite() && p.haario_epsilon >= 0.0, "proposal.haario_epsilon", "must be finite and non-negative");
        match p.asl_mode.as_str() {
            "gaussian" => issues.check(p.nu.is_none(), "proposal.nu", "only used with asl_mode = \"student\""),
            "student" => {
                if let Some(nu) = p.nu {
                    issues.check(nu > 0.0 && nu.is_finite(), "proposal.nu", "must be positive");
                }
            }
            other => issues.push("proposal.asl_mode", format!("unknown mode `{other}` (gaussian | student)")),
        }
    }

    fn check_likelihood(&self, model: &dyn Model, issues: &mut Issues) {
        let l = &self.likelihood;
        let s = &self.schedule;
        let d_s = model.summary_dim();
        match l.density.as_str() {
            "gaussian" => {}
            "unbiased" => {
                for (m, f) in [(Some(s.m), "schedule.m"), (s.m_post, "schedule.m_post")] {
                    if let Some(m) = m {
                        issues.check(m > d_s + 3, f, format!("the unbiased density needs more than {} simulations", d_s + 3));
                    }
                }
            }
            other => issues.push("likelihood.density", format!("unknown density `{other}` (gaussian | unbiased)")),
        }
        if let Some(g) = l.shrinkage {
            issues.check(g > 0.0 && g <= 1.0, "likelihood.shrinkage", "must lie in (0, 1]");
        }
        if let Some(g) = l.csl_blocks {
            let m_min = s.m_post.map_or(s.m, |mp| mp.min(s.m));
            issues.check(model.supports_csl(), "likelihood.csl_blocks", format!("model `{}` has no fixed variate interface", model.id()));
            issues.check(g >= 1 && g <= m_min, "likelihood.csl_blocks", format!("must lie in 1..={m_min}"));
            issues.check(!s.mcwm, "likelihood.csl_blocks", "cannot be combined with schedule.mcwm");
        }
    }

    fn check_run_and_report(&self, issues: &mut Issues) {
        issues.check(self.run.replicates >= 1, "run.replicates", "must be at least 1");
        if let Some(seeds) = &self.run.seeds {
            issues.check(seeds.len() == self.run.replicates, "run.seeds", format!("expected {} seeds", self.run.replicates));
        }
        issues.check(self.report.thin >= 1, "report.thin", "must be at least 1");
        issues.check(self.report.level > 0.0 && self.report.level <= 1.0, "report.level", "must lie in (0, 1]");
        if let Some(t) = self.report.tail {
            issues.check(t >= 1, "report.tail", "must be at least 1");
        }
    }

    fn observed_summaries(&self, model: &Arc<dyn Model>, base_dir: &Path, issues: &mut Issues) -> Option<DVector<f64>> {
        let d = model.dim();
        let data = match self.data.source.as_str() {
            "generate" => {
                let Some(truth) = &self.data.truth else {
                    issues.push("data.truth", "required when source = \"generate\"");
                    return None;
                };
                if truth.len() != d {
                    issues.push("data.truth", format!("expected {d} values, got {}", truth.len()));
                    return None;
                }
                if let Err(e) = model.validate(truth) {
                    issues.push("data.truth", e.to_string());
                    return None;
                }
                issues.check(self.data.path.is_none(), "data.path", "only used with source = \"file\"");
                let mut rng = ChaCha8Rng::seed_from_u64(self.data.seed);
                rng.set_stream(STREAM_DATA);
                let mut v = draw_variates(&**model, &mut rng);
                model.prepare(&mut v);
                model.simulate(truth, &v)
            }
            "file" => {
                let Some(path) = &self.data.path else {
                    issues.push("data.path", "required when source = \"file\"");
                    return None;
                };
                match read_dataset(&base_dir.join(path)) {
                    Ok(data) => Ok(data),
                    Err(e) => {
                        issues.push("data.path", e.to_string());
                        return None;
                    }
                }
            }
            other => {
                issues.push("data.source", format!("unknown source `{other}` (generate | file)"));
                return None;
            }
        };
        match data.and_then(|data| model.summarize(&data)) {
            Ok(s) => Some(s),
            Err(e) => {
                issues.push("data", format!("observed summaries: {e}"));
                None
            }
        }
    }
}

/// A validated configuration with its observed summaries resolved.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub bundle: ModelBundle,
}

impl Experiment {
    pub fn chain_config(&self, seed: u64) -> ChainConfig {
        let c = &self.config;
        let d = self.bundle.model.dim();
        let schedule = StageSchedule {
            burnin: c.schedule.burnin,
            mcwm_in_burnin: c.schedule.mcwm,
            asl: c.schedule.asl,
            adaptive: c.schedule.adaptive,
            m: c.schedule.m,
            m_post: c.schedule.m_post,
        };
        let var: Vec<f64> = match (&c.proposal.rw_sd, &c.proposal.rw_var) {
            (Some(sd), _) => sd.iter().map(|s| s * s).collect(),
            (_, Some(v)) => v.clone(),
            _ => unreachable!("validated"),
        };
        let start = match (&c.proposal.start, &c.proposal.start_sampling, c.proposal.start_uniform) {
            (Some(s), _, _) => s.clone(),
            (_, Some(y), _) => to_natural(self.bundle.prior.transforms(), y).expect("validated"),
            (_, _, Some([lo, hi])) => {
                use rand::Rng;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(STREAM_START);
                (0..d).map(|_| rng.random_range(lo..=hi)).collect()
            }
            _ => unreachable!("validated"),
        };
        let mut cfg = ChainConfig::new(schedule, DMatrix::from_diagonal(&DVector::from_vec(var)), start, seed);
        cfg.haario_interval = c.proposal.haario_interval;
        cfg.haario_epsilon = c.proposal.haario_epsilon;
        cfg.asl_mode = match c.proposal.asl_mode.as_str() {
            "student" => GuidedMode::Student { nu: c.proposal.nu.unwrap_or(GuidedMode::DEFAULT_NU) },
            _ => GuidedMode::Gaussian,
        };
        cfg.bootstrap_on_reject = c.proposal.bootstrap_on_reject;
        cfg.likelihood = LikelihoodConfig {
            density: if c.likelihood.density == "gaussian" { DensityKind::Gaussian } else { DensityKind::Unbiased },
            shrinkage: c.likelihood.shrinkage,
        };
        cfg.csl_blocks = c.likelihood.csl_blocks;
        cfg
    }
}
