//! Benchmark simulators behind a common [`Model`] interface.
//!
//! A simulation is a pure function of the natural-scale parameter and a
//! [`SimVariates`] bundle. Models with a fixed variate budget draw normals
//! and open-interval uniforms; streamed models (boom-and-bust) consume a
//! seeded generator instead and do not support correlated likelihoods.

mod boombust;
mod gk;
mod mixture;
pub mod quadrature;
mod stable;
mod supernova;
mod transform;

pub use boombust::BoomBust;
pub use gk::GAndK;
pub use mixture::Mixture;
pub use stable::{stable_draw, AlphaStable};
pub use supernova::{distance_modulus, redshift_bin_centres, Supernova};
pub use transform::{to_natural, to_sampling, Transform};

use std::sync::Arc;

use nalgebra::DVector;
use rand::Rng;
use rand_distr::{Open01, StandardNormal};

use crate::error::{invalid, Result};

/// Per-simulation variate budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VariateLayout {
    pub normals: usize,
    pub uniforms: usize,
    /// The simulation draws from its own seeded stream instead.
    pub streamed: bool,
}

impl VariateLayout {
    pub fn fixed(normals: usize, uniforms: usize) -> Self {
        Self { normals, uniforms, streamed: false }
    }

    pub fn streamed() -> Self {
        Self { normals: 0, uniforms: 0, streamed: true }
    }

    /// Fresh variates for one simulation: normals, then uniforms, then seed.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> SimVariates {
        let normals = (0..self.normals).map(|_| rng.sample(StandardNormal)).collect();
        let uniforms = (0..self.uniforms).map(|_| rng.sample(Open01)).collect();
        let seed = if self.streamed { rng.random() } else { 0 };
        SimVariates { normals, uniforms, seed, aux: Vec::new() }
    }
}

/// The pseudo-random input of a single simulation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimVariates {
    pub normals: Vec<f64>,
    pub uniforms: Vec<f64>,
    pub seed: u64,
    /// Model-specific precomputation derived from the raw variates.
    pub aux: Vec<f64>,
}

impl SimVariates {
    pub fn from_normals(normals: Vec<f64>) -> Self {
        Self { normals, ..Self::default() }
    }

    pub fn from_uniforms(uniforms: Vec<f64>) -> Self {
        Self { uniforms, ..Self::default() }
    }

    pub fn from_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }
}

/// Raw simulated data, row-major with `columns` values per observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub values: Vec<f64>,
    pub columns: usize,
}

impl Dataset {
    pub fn univariate(values: Vec<f64>) -> Self {
        Self { values, columns: 1 }
    }

    pub fn rows(&self) -> usize {
        self.values.len() / self.columns.max(1)
    }
}

pub trait Model: Send + Sync + std::fmt::Debug {
    fn id(&self) -> &'static str;

    fn param_names(&self) -> &'static [&'static str];

    fn dim(&self) -> usize {
        self.param_names().len()
    }

    /// Default sampling-scale transforms for the chain.
    fn transforms(&self) -> Vec<Transform>;

    fn summary_dim(&self) -> usize;

    fn layout(&self) -> VariateLayout;

    fn supports_csl(&self) -> bool {
        !self.layout().streamed
    }

    /// Reject parameters outside the model's admissible domain.
    fn validate(&self, theta: &[f64]) -> Result<()>;

    /// Map a parameter to its canonical representative (label switching).
    fn canonicalize(&self, _theta: &mut [f64]) {}

    /// Precompute anything that depends on the variates only; called once per
    /// fresh draw. Implementations must not change simulation results.
    fn prepare(&self, _v: &mut SimVariates) {}

    fn simulate(&self, theta: &[f64], v: &SimVariates) -> Result<Dataset>;

    fn summarize(&self, data: &Dataset) -> Result<DVector<f64>>;

    fn simulate_summary(&self, theta: &[f64], v: &SimVariates) -> Result<DVector<f64>> {
        self.summarize(&self.simulate(theta, v)?)
    }
}

/// Fresh prepared variates for any model.
pub fn draw_variates<R: Rng + ?Sized>(model: &dyn Model, rng: &mut R) -> SimVariates {
    let mut v = model.layout().draw(rng);
    model.prepare(&mut v);
    v
}

pub(crate) fn check_theta(model: &dyn Model, theta: &[f64]) -> Result<()> {
    if theta.len() != model.dim() {
        return Err(invalid(format!(
            "{} expects {} parameters, got {}",
            model.id(),
            model.dim(),
            theta.len()
        )));
    }
    if theta.iter().any(|x| !x.is_finite()) {
        return Err(invalid(format!("{} parameters must be finite: {theta:?}", model.id())));
    }
    Ok(())
}

pub(crate) fn check_budget(model: &dyn Model, v: &SimVariates) -> Result<()> {
    let l = model.layout();
    if v.normals.len() != l.normals || v.uniforms.len() != l.uniforms {
        return Err(invalid(format!(
            "{} needs {} normals and {} uniforms, got {} and {}",
            model.id(),
            l.normals,
            l.uniforms,
            v.normals.len(),
            v.uniforms.len()
        )));
    }
    Ok(())
}

/// Model-specific knobs that the registry accepts; unset fields take the
/// model defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModelOptions {
    /// Observations per dataset.
    pub n: Option<usize>,
    pub perturbed: Option<bool>,
    pub gamma_true: Option<f64>,
    pub redshift_draws: Option<usize>,
    pub w_a: Option<f64>,
    pub h0: Option<f64>,
}

pub const MODEL_IDS: [&str; 5] = ["gk", "boombust", "mixture", "stable", "supernova"];

pub fn build_model(id: &str, opts: &ModelOptions) -> Result<Arc<dyn Model>> {
    let model: Arc<dyn Model> = match id {
        "gk" => Arc::new(GAndK::new(opts.n.unwrap_or(GAndK::DEFAULT_N))?),
        "boombust" => Arc::new(BoomBust::new()),
        "mixture" => Arc::new(Mixture::new(opts.n.unwrap_or(Mixture::DEFAULT_N))?),
        "stable" => Arc::new(AlphaStable::new(
            opts.n.unwrap_or(AlphaStable::DEFAULT_N),
            opts.perturbed.unwrap_or(true),
            opts.gamma_true.unwrap_or(1.0),
        )?),
        "supernova" => {
            let mut m = Supernova::new(opts.redshift_draws.unwrap_or(Supernova::DEFAULT_DRAWS))?;
            if let Some(w_a) = opts.w_a {
                m = m.with_w_a(w_a);
            }
            if let Some(h0) = opts.h0 {
                m = m.with_h0(h0)?;
            }
            Arc::new(m)
        }
        other => {
            return Err(invalid(format!(
                "unknown model `{other}` (expected one of {})",
                MODEL_IDS.join(", ")
            )))
        }
    };
    Ok(model)
}
