use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Beta as BetaDist, Distribution, StandardNormal};
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Result};
use crate::simulators::Transform;

/// One independent prior factor, stated on the natural scale unless noted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PriorComponent {
    Uniform { lo: f64, hi: f64 },
    Normal { mean: f64, sd: f64 },
    Beta { a: f64, b: f64 },
    /// Standard normal on the sampling (transformed) scale; no Jacobian.
    StdNormalTransformed,
}

impl PriorComponent {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Uniform { lo, hi } => lo.is_finite() && hi.is_finite() && lo < hi,
            Self::Normal { mean, sd } => mean.is_finite() && sd > 0.0 && sd.is_finite(),
            Self::Beta { a, b } => a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite(),
            Self::StdNormalTransformed => true,
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("invalid prior hyperparameters {self:?}")))
        }
    }

    /// Log-density on the natural scale (or on the sampling scale for
    /// [`PriorComponent::StdNormalTransformed`]).
    pub fn log_density(&self, x: f64) -> f64 {
        match *self {
            Self::Uniform { lo, hi } => {
                if x >= lo && x <= hi {
                    -(hi - lo).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            Self::Normal { mean, sd } => {
                let z = (x - mean) / sd;
                -0.5 * (2.0 * PI).ln() - sd.ln() - 0.5 * z * z
            }
            Self::Beta { a, b } => {
                if x > 0.0 && x < 1.0 {
                    ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + (a - 1.0) * x.ln() + (b - 1.0) * (1.0 - x).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            Self::StdNormalTransformed => -0.5 * (2.0 * PI).ln() - 0.5 * x * x,
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            Self::Normal { mean, sd } => mean + sd * rng.sample::<f64, _>(StandardNormal),
            Self::Beta { a, b } => BetaDist::new(a, b).expect("validated").sample(rng),
            Self::StdNormalTransformed => rng.sample(StandardNormal),
        }
    }
}

/// Independent product prior evaluated on the chain's sampling scale.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorSpec {
    components: Vec<PriorComponent>,
    transforms: Vec<Transform>,
}

impl PriorSpec {
    pub fn new(components: Vec<PriorComponent>, transforms: Vec<Transform>) -> Result<Self> {
        if components.len() != transforms.len() || components.is_empty() {
            return Err(invalid(format!(
                "prior has {} components but {} transforms",
                components.len(),
                transforms.len()
            )));
        }
        for c in &components {
            c.validate()?;
        }
        Ok(Self { components, transforms })
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[PriorComponent] {
        &self.components
    }

    pub fn transforms(&self) -> &[Transform] {
        &self.transforms
    }

    /// Log prior density of a sampling-scale point, including the Jacobian of
    /// each transform for priors stated on the natural scale.
    pub fn log_density(&self, y: &[f64]) -> f64 {
        if y.len() != self.dim() {
            return f64::NEG_INFINITY;
        }
        let mut total = 0.0;
        for ((c, t), &yi) in self.components.iter().zip(&self.transforms).zip(y) {
            let term = match c {
                PriorComponent::StdNormalTransformed => c.log_density(yi),
                _ => match (t.to_natural(yi), t.log_jacobian(yi)) {
                    (Ok(x), Ok(lj)) => c.log_density(x) + lj,
                    _ => f64::NEG_INFINITY,
                },
            };
            if !(term > f64::NEG_INFINITY) {
                return f64::NEG_INFINITY;
            }
            total += term;
        }
        total
    }

    /// A prior draw on the natural scale.
    pub fn sample_natural<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        self.components
            .iter()
            .zip(&self.transforms)
            .map(|(c, t)| match c {
                PriorComponent::StdNormalTransformed => t.to_natural(c.sample(rng)),
                _ => Ok(c.sample(rng)),
            })
            .collect()
    }
}
