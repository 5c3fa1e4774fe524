use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::ChiSquared;

use crate::error::{invalid, Error, Result};
use crate::stats::{
    gaussian_conditional, gaussian_logpdf, matrix_sqrt, multivariate_t_logpdf, GaussianConditional, JointMoments,
    RunningMoments,
};
use crate::ParamVector;

use super::random_walk::standard_normal_vector;
use super::Proposal;

/// Shape of the guided independence proposal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GuidedMode {
    Gaussian,
    /// Multivariate Student-t with `nu + d_s` degrees of freedom.
    Student { nu: f64 },
}

impl GuidedMode {
    pub const DEFAULT_NU: f64 = 5.0;
}

#[derive(Debug, Clone)]
struct Cached {
    conditional: GaussianConditional,
    sqrt: DMatrix<f64>,
}

/// Guided proposal: the conditional law of `θ` given the observed summaries
/// under a Gaussian fitted to the accumulated `(θ, s̄)` pairs.
#[derive(Debug, Clone)]
pub struct GuidedProposal {
    d_theta: usize,
    s_obs: DVector<f64>,
    mode: GuidedMode,
    batch: usize,
    pending: usize,
    history: Vec<(ParamVector, DVector<f64>)>,
    moments: RunningMoments,
    cached: Option<Cached>,
}

impl GuidedProposal {
    pub fn new(s_obs: DVector<f64>, d_theta: usize, mode: GuidedMode) -> Result<Self> {
        if d_theta == 0 || s_obs.is_empty() {
            return Err(invalid("guided proposal needs non-empty parameter and summary dimensions"));
        }
        if let GuidedMode::Student { nu } = mode {
            if !(nu > 0.0) {
                return Err(invalid(format!("Student degrees of freedom must be positive, got {nu}")));
            }
        }
        let dim = d_theta + s_obs.len();
        Ok(Self {
            d_theta,
            s_obs,
            mode,
            batch: 1,
            pending: 0,
            history: Vec::new(),
            moments: RunningMoments::new(dim),
            cached: None,
        })
    }

    /// Recompute the conditional every `n` appends rather than after each one.
    pub fn with_batch(mut self, n: usize) -> Self {
        self.batch = n.max(1);
        self
    }

    pub fn mode(&self) -> GuidedMode {
        self.mode
    }

    pub fn d_theta(&self) -> usize {
        self.d_theta
    }

    pub fn d_s(&self) -> usize {
        self.s_obs.len()
    }

    pub fn len(&self) -> usize {
        self.history.len()
    }

    pub fn is_empty(&self) -> bool {
        self.history.is_empty()
    }

    pub fn history(&self) -> &[(ParamVector, DVector<f64>)] {
        &self.history
    }

    pub fn append(&mut self, theta: &ParamVector, s_bar: &DVector<f64>) -> Result<()> {
        if theta.len() != self.d_theta || s_bar.len() != self.d_s() {
            return Err(invalid(format!(
                "pair has dimensions ({}, {}) but proposal expects ({}, {})",
                theta.len(),
                s_bar.len(),
                self.d_theta,
                self.d_s()
            )));
        }
        let mut joint = DVector::zeros(self.d_theta + self.d_s());
        joint.rows_mut(0, self.d_theta).copy_from(theta);
        joint.rows_mut(self.d_theta, self.d_s()).copy_from(s_bar);
        self.moments.push(&joint)?;
        self.history.push((theta.clone(), s_bar.clone()));
        self.pending += 1;
        if self.history.len() >= 2 && (self.cached.is_none() || self.pending >= self.batch) {
            self.refresh()?;
        }
        Ok(())
    }

    /// Force a recomputation of the conditional from the current history.
    pub fn refresh(&mut self) -> Result<()> {
        let conditional = gaussian_conditional(&self.joint_moments()?, &self.s_obs)?;
        let sqrt = matrix_sqrt(&conditional.cov)?;
        self.cached = Some(Cached { conditional, sqrt });
        self.pending = 0;
        Ok(())
    }

    pub fn joint_moments(&self) -> Result<JointMoments> {
        if self.history.len() < 2 {
            return Err(Error::InvalidState(format!(
                "guided proposal needs at least two pairs, have {}",
                self.history.len()
            )));
        }
        JointMoments::new(self.moments.mean().clone(), self.moments.covariance(), self.d_theta)
    }

    pub fn conditional(&self) -> Option<&GaussianConditional> {
        self.cached.as_ref().map(|c| &c.conditional)
    }

    fn cached(&self) -> Result<&Cached> {
        self.cached
            .as_ref()
            .ok_or_else(|| Error::InvalidState("guided proposal has no conditional yet".into()))
    }

    /// Student scale multiplier `(ν + δ) / (ν + d_s)` applied to the conditional covariance.
    fn student_factor(&self, nu: f64, discrepancy: f64) -> f64 {
        (nu + discrepancy) / (nu + self.d_s() as f64)
    }

    /// Draw with injected standard-normal `z` and, in Student mode, χ² variate.
    pub fn propose_with(&self, z: &DVector<f64>, chi2: Option<f64>) -> Result<ParamVector> {
        let c = self.cached()?;
        if z.len() != self.d_theta {
            return Err(invalid("noise vector has the wrong dimension"));
        }
        let step = &c.sqrt * z;
        match self.mode {
            GuidedMode::Gaussian => Ok(&c.conditional.mean + step),
            GuidedMode::Student { nu } => {
                let chi2 = chi2.ok_or_else(|| invalid("Student draw needs a chi-squared variate"))?;
                if !(chi2 > 0.0) {
                    return Err(invalid("chi-squared variate must be positive"));
                }
                let dof = nu + self.d_s() as f64;
                let mult = (self.student_factor(nu, c.conditional.discrepancy) * dof / chi2).sqrt();
                Ok(&c.conditional.mean + step * mult)
            }
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ParamVector> {
        let z = standard_normal_vector(self.d_theta, rng);
        let chi2 = match self.mode {
            GuidedMode::Gaussian => None,
            GuidedMode::Student { nu } => {
                let dist = ChiSquared::new(nu + self.d_s() as f64)
                    .map_err(|e| invalid(format!("chi-squared: {e}")))?;
                Some(rng.sample(dist))
            }
        };
        self.propose_with(&z, chi2)
    }

    /// Log-density of the current proposal at `theta`.
    pub fn log_density(&self, theta: &ParamVector) -> Result<f64> {
        let c = self.cached()?;
        match self.mode {
            GuidedMode::Gaussian => gaussian_logpdf(theta, &c.conditional.mean, &c.conditional.cov),
            GuidedMode::Student { nu } => {
                let scale = &c.conditional.cov * self.student_factor(nu, c.conditional.discrepancy);
                multivariate_t_logpdf(theta, &c.conditional.mean, &scale, nu + self.d_s() as f64)
            }
        }
    }
}

impl Proposal for GuidedProposal {
    fn propose<R: Rng + ?Sized>(&mut self, _current: &ParamVector, rng: &mut R) -> Result<ParamVector> {
        self.draw(rng)
    }

    fn log_ratio(&self, current: &ParamVector, proposed: &ParamVector) -> Result<f64> {
        Ok(self.log_density(current)? - self.log_density(proposed)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use std::f64::consts::PI;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    fn scalar_state(mode: GuidedMode, s_obs: f64) -> GuidedProposal {
        let mut g = GuidedProposal::new(v(&[s_obs]), 1, mode).unwrap();
        for (t, s) in [(0.0, 1.0), (1.0, 2.5), (2.0, 2.0)] {
            g.append(&v(&[t]), &v(&[s])).unwrap();
        }
        g
    }

    #[test]
    fn three_pair_scalar_oracle() {
        let g = scalar_state(GuidedMode::Gaussian, 3.0);
        let ts = [0.0, 1.0, 2.0];
        let ss = [1.0, 2.5, 2.0];
        let mt = ts.iter().sum::<f64>() / 3.0;
        let ms = ss.iter().sum::<f64>() / 3.0;
        let vt = ts.iter().map(|t| (t - mt).powi(2)).sum::<f64>() / 2.0;
        let vs = ss.iter().map(|s| (s - ms).powi(2)).sum::<f64>() / 2.0;
        let cts = ts.iter().zip(&ss).map(|(t, s)| (t - mt) * (s - ms)).sum::<f64>() / 2.0;
        let c = g.conditional().unwrap();
        assert!((c.mean[0] - (mt + cts / vs * (3.0 - ms))).abs() < 1e-12);
        assert!((c.cov[(0, 0)] - (vt - cts * cts / vs)).abs() < 1e-12);
    }

    #[test]
    fn append_grows_and_changes_moments() {
        let mut g = scalar_state(GuidedMode::Gaussian, 3.0);
        let before = g.joint_moments().unwrap();
        g.append(&v(&[5.0]), &v(&[4.0])).unwrap();
        assert_eq!(g.len(), 4);
        assert_ne!(g.joint_moments().unwrap(), before);
        assert!(g.append(&v(&[1.0, 2.0]), &v(&[4.0])).is_err());
    }

    #[test]
    fn identical_pairs_collapse_to_point() {
        let mut g = GuidedProposal::new(v(&[1.0, 1.0]), 2, GuidedMode::Gaussian).unwrap();
        for _ in 0..5 {
            g.append(&v(&[0.5, -0.5]), &v(&[2.0, 3.0])).unwrap();
        }
        let c = g.conditional().unwrap();
        assert!(c.repaired);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let x = g.draw(&mut rng).unwrap();
        assert!((x - v(&[0.5, -0.5])).amax() < 1e-3);
    }

    #[test]
    fn zero_noise_gives_conditional_mean() {
        let g = scalar_state(GuidedMode::Gaussian, 1.7);
        let x = g.propose_with(&v(&[0.0]), None).unwrap();
        assert_eq!(x, g.conditional().unwrap().mean);
    }

    fn centred_student(nu: f64) -> GuidedProposal {
        // s_obs equals the summary sample mean, so the discrepancy vanishes.
        let mut g = GuidedProposal::new(v(&[2.0]), 1, GuidedMode::Student { nu }).unwrap();
        for (t, s) in [(0.0, 1.0), (1.0, 3.0), (2.0, 2.0)] {
            g.append(&v(&[t]), &v(&[s])).unwrap();
        }
        g
    }

    #[test]
    fn student_zero_discrepancy_multiplier() {
        let nu = 5.0;
        let g = centred_student(nu);
        let c = g.conditional().unwrap();
        assert!(c.discrepancy.abs() < 1e-14);
        let z = v(&[1.3]);
        let dof = nu + 1.0;
        let got = g.propose_with(&z, Some(dof)).unwrap();
        let want = c.mean[0] + c.cov[(0, 0)].sqrt() * 1.3 * (nu / dof).sqrt();
        assert!((got[0] - want).abs() < 1e-12);
    }

    #[test]
    fn student_large_nu_matches_gaussian() {
        let nu = 1e12;
        let g = centred_student(nu);
        let mut gauss = g.clone();
        gauss.mode = GuidedMode::Gaussian;
        let z = v(&[-0.7]);
        let a = g.propose_with(&z, Some(nu + 1.0)).unwrap();
        let b = gauss.propose_with(&z, None).unwrap();
        assert!((a - b).amax() < 1e-9);
    }

    #[test]
    fn log_density_values() {
        // Four corners of a square centred at the origin give a conditional
        // N(0, I) when theta and s are independent.
        let mut g = GuidedProposal::new(v(&[0.0]), 2, GuidedMode::Gaussian).unwrap();
        let r = (0.75f64).sqrt();
        for (a, b, s) in [(r, r, 1.0), (r, -r, -1.0), (-r, r, -1.0), (-r, -r, 1.0)] {
            g.append(&v(&[a, b]), &v(&[s])).unwrap();
        }
        let c = g.conditional().unwrap();
        assert!((c.cov.clone() - DMatrix::identity(2, 2)).amax() < 1e-12);
        assert!((g.log_density(&c.mean).unwrap() + (2.0 * PI).ln()).abs() < 1e-12);
        let a = v(&[0.3, 0.0]);
        let b = v(&[-0.3, 0.0]);
        assert!(g.log_ratio(&a, &b).unwrap().abs() < 1e-12);
    }

    #[test]
    fn scalar_log_density_oracle() {
        let g = scalar_state(GuidedMode::Gaussian, 3.0);
        let c = g.conditional().unwrap();
        let (m, var) = (c.mean[0], c.cov[(0, 0)]);
        let x = 0.9;
        let want = -0.5 * (2.0 * PI * var).ln() - 0.5 * (x - m).powi(2) / var;
        assert!((g.log_density(&v(&[x])).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn draws_centre_on_conditional_mean() {
        let g = scalar_state(GuidedMode::Gaussian, 3.0);
        let c = g.conditional().unwrap().clone();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let n = 10_000;
        let mean = (0..n).map(|_| g.draw(&mut rng).unwrap()[0]).sum::<f64>() / n as f64;
        assert!((mean - c.mean[0]).abs() < 4.0 * c.cov[(0, 0)].sqrt() / (n as f64).sqrt());
    }

    #[test]
    fn independent_of_current_position() {
        let mut g = scalar_state(GuidedMode::Student { nu: 5.0 }, 3.0);
        let mut r1 = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut r2 = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let a = g.propose(&v(&[-100.0]), &mut r1).unwrap();
        let b = g.propose(&v(&[100.0]), &mut r2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn no_conditional_before_two_pairs() {
        let mut g = GuidedProposal::new(v(&[0.0]), 1, GuidedMode::Gaussian).unwrap();
        g.append(&v(&[1.0]), &v(&[1.0])).unwrap();
        assert!(matches!(g.propose_with(&v(&[0.0]), None), Err(Error::InvalidState(_))));
    }

    proptest! {
        #[test]
        fn incremental_equals_batch(
            pairs in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0, -5.0f64..5.0), 8..40),
            s_obs in -3.0f64..3.0,
        ) {
            let mut g = GuidedProposal::new(v(&[s_obs, 0.0]), 1, GuidedMode::Gaussian).unwrap();
            for (t, a, b) in &pairs {
                g.append(&v(&[*t]), &v(&[*a, *b])).unwrap();
            }
            let n = pairs.len() as f64;
            let rows: Vec<[f64; 3]> = pairs.iter().map(|(t, a, b)| [*t, *a, *b]).collect();
            let mean: Vec<f64> = (0..3).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
            let mut cov = DMatrix::zeros(3, 3);
            for r in &rows {
                for i in 0..3 {
                    for j in 0..3 {
                        cov[(i, j)] += (r[i] - mean[i]) * (r[j] - mean[j]) / (n - 1.0);
                    }
                }
            }
            let batch = gaussian_conditional(&JointMoments::new(v(&mean), cov, 1).unwrap(), &v(&[s_obs, 0.0])).unwrap();
            let inc = g.conditional().unwrap();
            prop_assert!((&inc.mean - &batch.mean).amax() < 1e-10 * (1.0 + batch.mean.amax()));
            prop_assert!((&inc.cov - &batch.cov).amax() < 1e-10 * (1.0 + batch.cov.amax()));
        }
    }
}
