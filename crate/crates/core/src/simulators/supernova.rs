use nalgebra::DVector;
use statrs::distribution::{ContinuousCDF, Normal};

use super::quadrature::integrate;
use super::{check_budget, check_theta, Dataset, Model, SimVariates, Transform, VariateLayout};
use crate::error::{invalid, Result};
use crate::summaries::{supernova_summaries, SUPERNOVA_SUMMARY_DIM};

/// Speed of light in km/s.
pub const C_LIGHT: f64 = 299_792.458;
const Z_BOUNDS: (f64, f64) = (0.01, 1.2);
const Z_MEAN: f64 = 0.5;
const Z_SD: f64 = 0.05;
const REL_TOL: f64 = 1e-8;

/// Dimensionless Hubble rate for a flat universe with CPL dark energy.
pub fn hubble_rate(z: f64, omega_m: f64, w0: f64, w_a: f64) -> f64 {
    let a = 1.0 + z;
    let de = (1.0 - omega_m) * a.powf(3.0 * (1.0 + w0 + w_a)) * (-3.0 * w_a * z / a).exp();
    (omega_m * a * a * a + de).sqrt()
}

/// Distance moduli at ascending positive redshifts, integrating `1/E`
/// cumulatively between consecutive redshifts.
pub fn distance_modulus(z: &[f64], omega_m: f64, w0: f64, w_a: f64, h0: f64) -> Result<Vec<f64>> {
    if z.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(invalid("redshifts must be positive and finite"));
    }
    if z.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("redshifts must be ascending"));
    }
    if !(omega_m > 0.0 && omega_m <= 1.0) {
        return Err(invalid(format!("omega_m must lie in (0, 1], got {omega_m}")));
    }
    let hubble = 100.0 * h0;
    let inv_e = |x: f64| 1.0 / hubble_rate(x, omega_m, w0, w_a);
    let mut acc = 0.0;
    let mut prev = 0.0;
    let mut out = Vec::with_capacity(z.len());
    for &zi in z {
        acc += integrate(inv_e, prev, zi, REL_TOL)?;
        prev = zi;
        out.push(5.0 * (C_LIGHT * (1.0 + zi) / hubble * acc).log10() + 25.0);
    }
    Ok(out)
}

fn redshift_law() -> (Normal, f64, f64) {
    let law = Normal::new(Z_MEAN, Z_SD).expect("valid normal");
    let lo = law.cdf(Z_BOUNDS.0);
    let hi = law.cdf(Z_BOUNDS.1);
    (law, lo, hi)
}

/// Truncated-normal redshift from a uniform by inversion.
pub fn truncated_redshift(u: f64) -> f64 {
    let (law, lo, hi) = redshift_law();
    law.inverse_cdf(lo + u * (hi - lo)).clamp(Z_BOUNDS.0, Z_BOUNDS.1)
}

/// Centres of `bins` equal-width bins spanning `[z_min, z_max]`.
pub fn redshift_bin_centres(z_min: f64, z_max: f64, bins: usize) -> Vec<f64> {
    let width = (z_max - z_min) / bins as f64;
    (0..bins).map(|i| z_min + (i as f64 + 0.5) * width).collect()
}

/// Flat-universe supernova distance-modulus model; the randomness is the
/// redshift sample, which only enters through its range.
#[derive(Debug, Clone)]
pub struct Supernova {
    draws: usize,
    h0: f64,
    w_a: f64,
}

impl Supernova {
    pub const DEFAULT_DRAWS: usize = 10_000;
    pub const H0: f64 = 0.7;

    pub fn new(draws: usize) -> Result<Self> {
        if draws < 2 {
            return Err(invalid("supernova model needs at least two redshift draws"));
        }
        Ok(Self { draws, h0: Self::H0, w_a: 0.0 })
    }

    pub fn with_w_a(mut self, w_a: f64) -> Self {
        self.w_a = w_a;
        self
    }

    pub fn with_h0(mut self, h0: f64) -> Result<Self> {
        if !(h0 > 0.0) {
            return Err(invalid("h0 must be positive"));
        }
        self.h0 = h0;
        Ok(self)
    }

    fn uniform_range(v: &SimVariates) -> (f64, f64) {
        if v.aux.len() == 2 {
            return (v.aux[0], v.aux[1]);
        }
        v.uniforms
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &u| (lo.min(u), hi.max(u)))
    }

    /// The 20 ascending bin centres implied by a redshift sample.
    pub fn redshifts(&self, v: &SimVariates) -> Result<Vec<f64>> {
        check_budget(self, v)?;
        // Inversion is monotone, so the extreme uniforms give the extreme redshifts.
        let (u_lo, u_hi) = Self::uniform_range(v);
        Ok(redshift_bin_centres(truncated_redshift(u_lo), truncated_redshift(u_hi), SUPERNOVA_SUMMARY_DIM))
    }
}

impl Model for Supernova {
    fn id(&self) -> &'static str {
        "supernova"
    }

    fn param_names(&self) -> &'static [&'static str] {
        &["omega_m", "w0"]
    }

    fn transforms(&self) -> Vec<Transform> {
        vec![Transform::Log, Transform::Identity]
    }

    fn summary_dim(&self) -> usize {
        SUPERNOVA_SUMMARY_DIM
    }

    fn layout(&self) -> VariateLayout {
        VariateLayout::fixed(0, self.draws)
    }

    fn validate(&self, theta: &[f64]) -> Result<()> {
        check_theta(self, theta)?;
        if !(theta[0] > 0.0 && theta[0] <= 1.0) {
            return Err(invalid(format!("omega_m must lie in (0, 1], got {}", theta[0])));
        }
        Ok(())
    }

    fn prepare(&self, v: &mut SimVariates) {
        let (lo, hi) = Self::uniform_range(v);
        v.aux = vec![lo, hi];
    }

    fn simulate(&self, theta: &[f64], v: &SimVariates) -> Result<Dataset> {
        self.validate(theta)?;
        let z = self.redshifts(v)?;
        Ok(Dataset::univariate(distance_modulus(&z, theta[0], theta[1], self.w_a, self.h0)?))
    }

    fn summarize(&self, data: &Dataset) -> Result<DVector<f64>> {
        supernova_summaries(&data.values)
    }
}
