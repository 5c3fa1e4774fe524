use nalgebra::DVector;

use super::{check_budget, check_theta, Dataset, Model, SimVariates, Transform, VariateLayout};
use crate::error::{invalid, Result};
use crate::summaries::{gk_summaries, gk_summaries_from_quantiles, interpolate, order_statistics, quantile_position, quantile_ranks, GK_LEVELS};

/// g-and-k quantile distribution driven by one standard normal per draw.
#[derive(Debug, Clone)]
pub struct GAndK {
    n: usize,
    c: f64,
}

/// Largest `c` for which the quantile function is monotone whenever `k ≥ 0`.
const MONOTONE_C: f64 = 0.83;

impl GAndK {
    pub const DEFAULT_N: usize = 1000;
    pub const C: f64 = 0.8;

    pub fn new(n: usize) -> Result<Self> {
        if n < 8 {
            return Err(invalid(format!("g-and-k needs at least 8 observations, got {n}")));
        }
        Ok(Self { n, c: Self::C })
    }

    pub fn with_c(mut self, c: f64) -> Self {
        self.c = c;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn quantile(&self, theta: &[f64], u: f64) -> f64 {
        let (a, b, g, k) = (theta[0], theta[1], theta[2], theta[3]);
        let e = (-g * u).exp();
        let skew = if e.is_infinite() { -1.0 } else { (1.0 - e) / (1.0 + e) };
        a + b * (1.0 + self.c * skew) * (1.0 + u * u).powf(k) * u
    }

    fn monotone(&self, theta: &[f64]) -> bool {
        theta[3] >= 0.0 && (0.0..=MONOTONE_C).contains(&self.c)
    }
}

impl Model for GAndK {
    fn id(&self) -> &'static str {
        "gk"
    }

    fn param_names(&self) -> &'static [&'static str] {
        &["A", "B", "g", "k"]
    }

    fn transforms(&self) -> Vec<Transform> {
        vec![Transform::Log; 4]
    }

    fn summary_dim(&self) -> usize {
        4
    }

    fn layout(&self) -> VariateLayout {
        VariateLayout::fixed(self.n, 0)
    }

    fn validate(&self, theta: &[f64]) -> Result<()> {
        check_theta(self, theta)?;
        if theta[1] <= 0.0 || theta[3] <= -0.5 {
            return Err(invalid(format!("g-and-k needs B > 0 and k > -0.5, got {theta:?}")));
        }
        Ok(())
    }

    /// Stores the order statistics of the normals needed by the octiles, so
    /// that monotone parameter values skip the full simulate-and-sort.
    fn prepare(&self, v: &mut SimVariates) {
        if v.normals.len() == self.n {
            v.aux = order_statistics(&v.normals, &quantile_ranks(self.n, &GK_LEVELS));
        }
    }

    fn simulate(&self, theta: &[f64], v: &SimVariates) -> Result<Dataset> {
        self.validate(theta)?;
        check_budget(self, v)?;
        Ok(Dataset::univariate(v.normals.iter().map(|&u| self.quantile(theta, u)).collect()))
    }

    fn summarize(&self, data: &Dataset) -> Result<DVector<f64>> {
        gk_summaries(&data.values)
    }

    fn simulate_summary(&self, theta: &[f64], v: &SimVariates) -> Result<DVector<f64>> {
        let ranks = quantile_ranks(self.n, &GK_LEVELS);
        if !self.monotone(theta) || v.aux.len() != ranks.len() {
            return self.summarize(&self.simulate(theta, v)?);
        }
        self.validate(theta)?;
        check_budget(self, v)?;
        let at = |r: usize| {
            let i = ranks.binary_search(&r).expect("rank precomputed");
            self.quantile(theta, v.aux[i])
        };
        let q: Vec<f64> = GK_LEVELS
            .iter()
            .map(|&p| {
                let (lo, hi, frac) = quantile_position(self.n, p);
                interpolate(at(lo), at(hi), frac)
            })
            .collect();
        gk_summaries_from_quantiles(&q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulators::draw_variates;
    use proptest::prelude::*;
    use rand::SeedableRng;

    #[test]
    fn zero_normal_gives_location() {
        let m = GAndK::new(10).unwrap();
        for theta in [[3.0, 1.0, 2.0, 0.5], [-1.0, 7.0, -3.0, 2.0]] {
            assert_eq!(m.quantile(&theta, 0.0), theta[0]);
        }
    }

    #[test]
    fn identity_reduction() {
        let m = GAndK::new(10).unwrap();
        assert_eq!(m.quantile(&[0.0, 1.0, 0.0, 0.0], 1.7), 1.7);
    }

    #[test]
    fn fast_path_matches_full_simulation() {
        let m = GAndK::new(1000).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for theta in [[3.0, 1.0, 2.0, 0.5], [7.389, 7.389, 2.718, 1.221], [0.1, 0.2, 0.0, 0.0]] {
            let v = draw_variates(&m, &mut rng);
            let fast = m.simulate_summary(&theta, &v).unwrap();
            let full = m.summarize(&m.simulate(&theta, &v).unwrap()).unwrap();
            assert!((&fast - &full).amax() < 1e-12 * (1.0 + full.amax()), "{fast} vs {full}");
        }
    }

    #[test]
    fn negative_kurtosis_takes_full_path() {
        let m = GAndK::new(100).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let v = draw_variates(&m, &mut rng);
        let theta = [0.0, 1.0, 4.0, -0.4];
        assert_eq!(
            m.simulate_summary(&theta, &v).unwrap(),
            m.summarize(&m.simulate(&theta, &v).unwrap()).unwrap()
        );
    }

    #[test]
    fn invalid_parameters() {
        let m = GAndK::new(10).unwrap();
        assert!(m.validate(&[0.0, 0.0, 1.0, 1.0]).is_err());
        assert!(m.validate(&[0.0, 1.0, 1.0, -0.6]).is_err());
        assert!(m.validate(&[0.0, 1.0, 1.0]).is_err());
    }

    proptest! {
        #[test]
        fn monotone_in_u(a in -5.0f64..5.0, b in 0.1f64..5.0, g in 0.0f64..5.0, k in 0.0f64..3.0) {
            let m = GAndK::new(10).unwrap();
            let theta = [a, b, g, k];
            let mut prev = f64::NEG_INFINITY;
            for i in -400..=400 {
                let q = m.quantile(&theta, f64::from(i) * 0.01);
                prop_assert!(q >= prev);
                prev = q;
            }
        }
    }
}
