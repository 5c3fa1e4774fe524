use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Poisson};

use super::{check_theta, Dataset, Model, SimVariates, Transform, VariateLayout};
use crate::error::{invalid, Error, Result};
use crate::summaries::boombust_summaries;

/// Boom-and-bust population model: Poisson growth below the threshold κ,
/// binomial survival above it, plus Poisson(β) immigration.
#[derive(Debug, Clone)]
pub struct BoomBust {
    steps: usize,
    keep: usize,
    n1: u64,
}

fn poisson<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> Result<u64> {
    if lambda == 0.0 {
        return Ok(0);
    }
    let d = Poisson::new(lambda).map_err(|e| Error::Simulation(format!("Poisson({lambda}): {e}")))?;
    Ok(rng.sample(d) as u64)
}

impl BoomBust {
    pub const STEPS: usize = 300;
    pub const KEEP: usize = 250;
    pub const N1: u64 = 10;

    pub fn new() -> Self {
        Self { steps: Self::STEPS, keep: Self::KEEP, n1: Self::N1 }
    }

    /// One transition of the population.
    pub fn step<R: Rng + ?Sized>(&self, theta: &[f64], n: u64, rng: &mut R) -> Result<u64> {
        let (r, kappa, alpha, beta) = (theta[0], theta[1], theta[2], theta[3]);
        let core = if n as f64 <= kappa {
            poisson(n as f64 * (1.0 + r), rng)?
        } else {
            let b = Binomial::new(n, alpha).map_err(|e| Error::Simulation(format!("Binomial({n}, {alpha}): {e}")))?;
            rng.sample(b)
        };
        Ok(core + poisson(beta, rng)?)
    }

    pub fn simulate_path<R: Rng + ?Sized>(&self, theta: &[f64], rng: &mut R) -> Result<Vec<f64>> {
        self.validate(theta)?;
        let mut n = self.n1;
        let mut path = Vec::with_capacity(self.steps);
        path.push(n as f64);
        for _ in 1..self.steps {
            n = self.step(theta, n, rng)?;
            path.push(n as f64);
        }
        Ok(path.split_off(self.steps - self.keep))
    }
}

impl Default for BoomBust {
    fn default() -> Self {
        Self::new()
    }
}

impl Model for BoomBust {
    fn id(&self) -> &'static str {
        "boombust"
    }

    fn param_names(&self) -> &'static [&'static str] {
        &["r", "kappa", "alpha", "beta"]
    }

    fn transforms(&self) -> Vec<Transform> {
        vec![Transform::Identity; 4]
    }

    fn summary_dim(&self) -> usize {
        12
    }

    fn layout(&self) -> VariateLayout {
        VariateLayout::streamed()
    }

    fn validate(&self, theta: &[f64]) -> Result<()> {
        check_theta(self, theta)?;
        let (r, kappa, alpha, beta) = (theta[0], theta[1], theta[2], theta[3]);
        if r < -1.0 || kappa <= 0.0 || !(0.0..=1.0).contains(&alpha) || beta < 0.0 {
            return Err(invalid(format!(
                "boom-bust needs r >= -1, kappa > 0, alpha in [0, 1], beta >= 0; got {theta:?}"
            )));
        }
        Ok(())
    }

    fn simulate(&self, theta: &[f64], v: &SimVariates) -> Result<Dataset> {
        let mut rng = ChaCha8Rng::seed_from_u64(v.seed);
        Ok(Dataset::univariate(self.simulate_path(theta, &mut rng)?))
    }

    fn summarize(&self, data: &Dataset) -> Result<DVector<f64>> {
        boombust_summaries(&data.values)
    }
}
