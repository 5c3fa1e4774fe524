use nalgebra::{DVector, Matrix2, Vector2};

use super::{check_budget, check_theta, Dataset, Model, SimVariates, Transform, VariateLayout};
use crate::error::{invalid, Result};
use crate::summaries::mixture_summaries;

/// Equal-weight two-component bivariate Gaussian mixture with known
/// covariances; the parameter is `(μ1⁽¹⁾, μ1⁽²⁾, μ2⁽¹⁾, μ2⁽²⁾)`.
#[derive(Debug, Clone)]
pub struct Mixture {
    n: usize,
    sigma1: Matrix2<f64>,
    sigma2: Matrix2<f64>,
    chol1: Matrix2<f64>,
    chol2: Matrix2<f64>,
}

fn lower_cholesky(s: &Matrix2<f64>) -> Result<Matrix2<f64>> {
    s.cholesky()
        .map(|c| c.l())
        .ok_or_else(|| invalid("mixture covariance must be positive definite"))
}

impl Mixture {
    pub const DEFAULT_N: usize = 5000;

    pub fn new(n: usize) -> Result<Self> {
        Self::with_covariances(n, Matrix2::new(16.0, 0.0, 0.0, 16.0), Matrix2::new(16.0, 12.0, 12.0, 16.0))
    }

    pub fn with_covariances(n: usize, sigma1: Matrix2<f64>, sigma2: Matrix2<f64>) -> Result<Self> {
        if n < 10 {
            return Err(invalid(format!("mixture needs at least 10 observations, got {n}")));
        }
        Ok(Self { n, chol1: lower_cholesky(&sigma1)?, chol2: lower_cholesky(&sigma2)?, sigma1, sigma2 })
    }

    fn points(data: &Dataset) -> Vec<Vector2<f64>> {
        data.values.chunks_exact(2).map(|p| Vector2::new(p[0], p[1])).collect()
    }
}

impl Model for Mixture {
    fn id(&self) -> &'static str {
        "mixture"
    }

    fn param_names(&self) -> &'static [&'static str] {
        &["mu1_x", "mu1_y", "mu2_x", "mu2_y"]
    }

    fn transforms(&self) -> Vec<Transform> {
        vec![Transform::Identity; 4]
    }

    fn summary_dim(&self) -> usize {
        4
    }

    fn layout(&self) -> VariateLayout {
        VariateLayout::fixed(2 * self.n, self.n)
    }

    fn validate(&self, theta: &[f64]) -> Result<()> {
        check_theta(self, theta)
    }

    fn canonicalize(&self, theta: &mut [f64]) {
        if theta[0] > theta[2] {
            theta.swap(0, 2);
        }
        if theta[1] > theta[3] {
            theta.swap(1, 3);
        }
    }

    fn simulate(&self, theta: &[f64], v: &SimVariates) -> Result<Dataset> {
        self.validate(theta)?;
        check_budget(self, v)?;
        let mu1 = Vector2::new(theta[0], theta[1]);
        let mu2 = Vector2::new(theta[2], theta[3]);
        let mut values = Vec::with_capacity(2 * self.n);
        for (i, &u) in v.uniforms.iter().enumerate() {
            let z = Vector2::new(v.normals[2 * i], v.normals[2 * i + 1]);
            let x = if u < 0.5 { mu1 + self.chol1 * z } else { mu2 + self.chol2 * z };
            values.extend_from_slice(&[x.x, x.y]);
        }
        Ok(Dataset { values, columns: 2 })
    }

    fn summarize(&self, data: &Dataset) -> Result<DVector<f64>> {
        Ok(mixture_summaries(&Self::points(data), &self.sigma1, &self.sigma2)?.summary)
    }
}
