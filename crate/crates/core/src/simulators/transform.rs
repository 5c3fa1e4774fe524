use crate::error::{invalid, Error, Result};

/// Map from a parameter's natural scale to the scale the chain moves on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    Identity,
    Log,
    /// `ln(α − 0.5) / (2 − α)` on `(0.5, 2)`.
    StableAlpha,
    /// `ln(β + 1) / (1 − β)` on `(−1, 1)`.
    StableBeta,
}

const ALPHA_BOUNDS: (f64, f64) = (0.5, 2.0);
const BETA_BOUNDS: (f64, f64) = (-1.0, 1.0);

fn alpha_forward(a: f64) -> f64 {
    (a - 0.5).ln() / (2.0 - a)
}

fn beta_forward(b: f64) -> f64 {
    (b + 1.0).ln() / (1.0 - b)
}

/// Invert an increasing map on the open interval `(lo, hi)` by bisection.
fn bisect(f: fn(f64) -> f64, y: f64, (lo, hi): (f64, f64)) -> Result<f64> {
    if !y.is_finite() {
        return Err(invalid(format!("cannot invert non-finite value {y}")));
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if f(mid) < y {
            a = mid;
        } else {
            b = mid;
        }
    }
    let x = 0.5 * (a + b);
    if x <= lo || x >= hi {
        return Err(Error::NumericFailure(format!(
            "transformed value {y} maps outside ({lo}, {hi}) in floating point"
        )));
    }
    Ok(x)
}

impl Transform {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "identity" => Ok(Self::Identity),
            "log" => Ok(Self::Log),
            "stable-alpha" => Ok(Self::StableAlpha),
            "stable-beta" => Ok(Self::StableBeta),
            other => Err(invalid(format!("unknown transform `{other}`"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Identity => "identity",
            Self::Log => "log",
            Self::StableAlpha => "stable-alpha",
            Self::StableBeta => "stable-beta",
        }
    }

    pub fn to_sampling(&self, x: f64) -> Result<f64> {
        let inside = |(lo, hi): (f64, f64)| x > lo && x < hi;
        let y = match self {
            Self::Identity => x,
            Self::Log if x > 0.0 => x.ln(),
            Self::StableAlpha if inside(ALPHA_BOUNDS) => alpha_forward(x),
            Self::StableBeta if inside(BETA_BOUNDS) => beta_forward(x),
            _ => return Err(invalid(format!("{x} is outside the domain of the {} transform", self.name()))),
        };
        Ok(y)
    }

    pub fn to_natural(&self, y: f64) -> Result<f64> {
        match self {
            Self::Identity => Ok(y),
            Self::Log => Ok(y.exp()),
            Self::StableAlpha => bisect(alpha_forward, y, ALPHA_BOUNDS),
            Self::StableBeta => bisect(beta_forward, y, BETA_BOUNDS),
        }
    }

    /// `ln |dx/dy|` at sampling-scale value `y`.
    pub fn log_jacobian(&self, y: f64) -> Result<f64> {
        match self {
            Self::Identity => Ok(0.0),
            Self::Log => Ok(y),
            Self::StableAlpha => {
                let a = self.to_natural(y)?;
                // d/dα of ln(α−0.5)/(2−α) = [(2−α)/(α−0.5) + ln(α−0.5)] / (2−α)²
                let num = (2.0 - a) / (a - 0.5) + (a - 0.5).ln();
                Ok(2.0 * (2.0 - a).ln() - num.ln())
            }
            Self::StableBeta => {
                let b = self.to_natural(y)?;
                let num = (1.0 - b) / (1.0 + b) + (1.0 + b).ln();
                Ok(2.0 * (1.0 - b).ln() - num.ln())
            }
        }
    }
}

/// Apply per-coordinate transforms from the natural to the sampling scale.
pub fn to_sampling(transforms: &[Transform], natural: &[f64]) -> Result<Vec<f64>> {
    check_len(transforms, natural)?;
    transforms.iter().zip(natural).map(|(t, x)| t.to_sampling(*x)).collect()
}

pub fn to_natural(transforms: &[Transform], sampling: &[f64]) -> Result<Vec<f64>> {
    check_len(transforms, sampling)?;
    transforms.iter().zip(sampling).map(|(t, y)| t.to_natural(*y)).collect()
}

fn check_len(transforms: &[Transform], x: &[f64]) -> Result<()> {
    if transforms.len() != x.len() {
        return Err(invalid(format!(
            "{} transforms for a parameter of length {}",
            transforms.len(),
            x.len()
        )));
    }
    Ok(())
}
