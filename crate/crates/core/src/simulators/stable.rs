use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DVector;

use super::{check_budget, check_theta, Dataset, Model, SimVariates, Transform, VariateLayout};
use crate::error::{invalid, Result};
use crate::summaries::mcculloch_summaries;

/// α values treated with the α = 1 formulas by the perturbed sampler.
pub const PERTURBED_WINDOW: (f64, f64) = (0.97, 1.03);

/// One Chambers–Mallows–Stuck draw from `w = −ln u1` and `u2 ∈ (−π/2, π/2)`,
/// using Weron's form of the α = 1 branch.
///
/// The perturbed sampler applies the α = 1 branch throughout the window
/// around 1 instead of at α = 1 only.
pub fn stable_draw(theta: &[f64], perturbed: bool, u1: f64, u2: f64) -> f64 {
    let (alpha, beta, gamma, delta) = (theta[0], theta[1], theta[2], theta[3]);
    let w = -u1.ln();
    let unit_branch = if perturbed {
        (PERTURBED_WINDOW.0..=PERTURBED_WINDOW.1).contains(&alpha)
    } else {
        alpha == 1.0
    };
    if unit_branch {
        let shifted = FRAC_PI_2 + beta * u2;
        let y = (shifted * u2.tan() - beta * (w * u2.cos() / shifted).ln()) / FRAC_PI_2;
        gamma * y + 2.0 / PI * beta * gamma * gamma.ln() + delta
    } else {
        let t = beta * (PI * alpha / 2.0).tan();
        let b = t.atan() / alpha;
        let s = (1.0 + t * t).powf(1.0 / (2.0 * alpha));
        let y = s * (alpha * (u2 + b)).sin() / u2.cos().powf(1.0 / alpha)
            * ((u2 - alpha * (u2 + b)).cos() / w).powf((1.0 - alpha) / alpha);
        gamma * y + delta
    }
}

/// α-stable model with McCulloch quantile summaries; two uniforms per draw.
#[derive(Debug, Clone)]
pub struct AlphaStable {
    n: usize,
    perturbed: bool,
    gamma_true: f64,
}

impl AlphaStable {
    pub const DEFAULT_N: usize = 500;

    pub fn new(n: usize, perturbed: bool, gamma_true: f64) -> Result<Self> {
        if n < 20 {
            return Err(invalid(format!("alpha-stable needs at least 20 observations, got {n}")));
        }
        if !(gamma_true > 0.0) {
            return Err(invalid("gamma_true must be positive"));
        }
        Ok(Self { n, perturbed, gamma_true })
    }

    pub fn perturbed(&self) -> bool {
        self.perturbed
    }
}

impl Model for AlphaStable {
    fn id(&self) -> &'static str {
        "stable"
    }

    fn param_names(&self) -> &'static [&'static str] {
        &["alpha", "beta", "gamma", "delta"]
    }

    fn transforms(&self) -> Vec<Transform> {
        vec![Transform::StableAlpha, Transform::StableBeta, Transform::Log, Transform::Identity]
    }

    fn summary_dim(&self) -> usize {
        4
    }

    fn layout(&self) -> VariateLayout {
        VariateLayout::fixed(0, 2 * self.n)
    }

    fn validate(&self, theta: &[f64]) -> Result<()> {
        check_theta(self, theta)?;
        let (a, b, g) = (theta[0], theta[1], theta[2]);
        if !(a > 0.5 && a <= 2.0) || !(-1.0..=1.0).contains(&b) || g <= 0.0 {
            return Err(invalid(format!(
                "alpha-stable needs alpha in (0.5, 2], beta in [-1, 1], gamma > 0; got {theta:?}"
            )));
        }
        Ok(())
    }

    fn simulate(&self, theta: &[f64], v: &SimVariates) -> Result<Dataset> {
        self.validate(theta)?;
        check_budget(self, v)?;
        let values = v
            .uniforms
            .chunks_exact(2)
            .map(|u| stable_draw(theta, self.perturbed, u[0], PI * (u[1] - 0.5)))
            .collect();
        Ok(Dataset::univariate(values))
    }

    fn summarize(&self, data: &Dataset) -> Result<DVector<f64>> {
        mcculloch_summaries(&data.values, self.gamma_true)
    }
}
