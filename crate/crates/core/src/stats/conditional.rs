use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{invalid, Error, Result};

use super::{repair_spd, symmetrize};

/// Mean and covariance of a joint `(θ, s)` vector, with `θ` occupying the
/// leading `d_theta` coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct JointMoments {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    d_theta: usize,
}

impl JointMoments {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>, d_theta: usize) -> Result<Self> {
        let d = mean.len();
        if cov.nrows() != d || cov.ncols() != d {
            return Err(invalid(format!(
                "covariance is {}x{} but mean has length {d}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        if d_theta == 0 || d_theta >= d {
            return Err(invalid(format!(
                "d_theta = {d_theta} must lie strictly between 0 and {d}"
            )));
        }
        Ok(Self {
            mean,
            cov: symmetrize(&cov),
            d_theta,
        })
    }

    pub fn d_theta(&self) -> usize {
        self.d_theta
    }

    pub fn d_s(&self) -> usize {
        self.mean.len() - self.d_theta
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn m_theta(&self) -> DVector<f64> {
        self.mean.rows(0, self.d_theta).into_owned()
    }

    pub fn m_s(&self) -> DVector<f64> {
        self.mean.rows(self.d_theta, self.d_s()).into_owned()
    }

    pub fn s_theta(&self) -> DMatrix<f64> {
        self.cov.view((0, 0), (self.d_theta, self.d_theta)).into_owned()
    }

    pub fn s_theta_s(&self) -> DMatrix<f64> {
        self.cov.view((0, self.d_theta), (self.d_theta, self.d_s())).into_owned()
    }

    /// Exactly the transpose of [`Self::s_theta_s`].
    pub fn s_s_theta(&self) -> DMatrix<f64> {
        self.s_theta_s().transpose()
    }

    pub fn s_s(&self) -> DMatrix<f64> {
        let d = self.d_theta;
        self.cov.view((d, d), (self.d_s(), self.d_s())).into_owned()
    }
}

/// Conditional law of `θ` given `s = s_obs` under the joint Gaussian.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianConditional {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    /// Mahalanobis discrepancy `(s - m_s)ᵀ S_s⁻¹ (s - m_s)`.
    pub discrepancy: f64,
    /// True when `S_s` or the Schur complement needed SPD repair.
    pub repaired: bool,
}

/// Conditional mean and Schur complement without repairing the latter.
pub fn gaussian_conditional_raw(moments: &JointMoments, s_obs: &DVector<f64>) -> Result<GaussianConditional> {
    if s_obs.len() != moments.d_s() {
        return Err(invalid(format!(
            "observed summaries have length {} but joint has d_s = {}",
            s_obs.len(),
            moments.d_s()
        )));
    }
    let (s_s, repaired) = repair_spd(&moments.s_s())?;
    let ch = Cholesky::new(s_s)
        .ok_or_else(|| Error::DegenerateCovariance("S_s singular after repair".into()))?;
    let resid = s_obs - moments.m_s();
    let w = ch.solve(&resid);
    let s_theta_s = moments.s_theta_s();
    let mean = moments.m_theta() + &s_theta_s * &w;
    let gain_t = ch.solve(&moments.s_s_theta());
    let cov = symmetrize(&(moments.s_theta() - &s_theta_s * gain_t));
    Ok(GaussianConditional {
        mean,
        cov,
        discrepancy: resid.dot(&w),
        repaired,
    })
}

/// `m_θ + S_θs S_s⁻¹ (s_obs - m_s)` and `S_θ - S_θs S_s⁻¹ S_sθ`, with the
/// conditional covariance repaired to positive definiteness when needed.
pub fn gaussian_conditional(moments: &JointMoments, s_obs: &DVector<f64>) -> Result<GaussianConditional> {
    let mut out = gaussian_conditional_raw(moments, s_obs)?;
    let (cov, repaired) = repair_spd(&out.cov)?;
    out.cov = cov;
    out.repaired |= repaired;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SymmetricEigen;
    use proptest::prelude::*;

    #[test]
    fn independent_blocks_pass_through() {
        let mean = DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
        let cov = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 3.0, 1.0, 4.0]));
        let jm = JointMoments::new(mean, cov, 2).unwrap();
        let c = gaussian_conditional(&jm, &DVector::from_vec(vec![10.0, -7.0])).unwrap();
        assert_eq!(c.mean, jm.m_theta());
        assert_eq!(c.cov, jm.s_theta());
    }

    #[test]
    fn scalar_oracle() {
        let jm = JointMoments::new(DVector::zeros(2), DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]), 1).unwrap();
        let c = gaussian_conditional(&jm, &DVector::from_element(1, 1.0)).unwrap();
        // m = 0 + 1 * (1/2) * 1 ; S = 2 - 1 * (1/2) * 1
        assert!((c.mean[0] - 0.5).abs() < 1e-15);
        assert!((c.cov[(0, 0)] - 1.5).abs() < 1e-15);
        assert!((c.discrepancy - 0.5).abs() < 1e-15);
    }

    #[test]
    fn observed_at_summary_mean_keeps_theta_mean() {
        let cov = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.3, 0.5, 1.0, 0.2, 0.3, 0.2, 1.5]);
        let mean = DVector::from_vec(vec![1.0, 2.0, -1.0]);
        let jm = JointMoments::new(mean, cov, 1).unwrap();
        let c = gaussian_conditional(&jm, &jm.m_s()).unwrap();
        assert_eq!(c.mean, jm.m_theta());
        assert!(c.cov[(0, 0)] < 2.0);
        assert_eq!(c.discrepancy, 0.0);
    }

    #[test]
    fn cross_block_is_exact_transpose() {
        let b = DMatrix::from_fn(5, 5, |i, j| ((i * 3 + j * 7) % 5) as f64 - 2.0);
        let cov = &b * b.transpose();
        let jm = JointMoments::new(DVector::zeros(5), cov, 2).unwrap();
        assert_eq!(jm.s_s_theta(), jm.s_theta_s().transpose());
    }

    #[test]
    fn dimension_errors() {
        assert!(JointMoments::new(DVector::zeros(3), DMatrix::identity(2, 2), 1).is_err());
        assert!(JointMoments::new(DVector::zeros(3), DMatrix::identity(3, 3), 3).is_err());
        let jm = JointMoments::new(DVector::zeros(3), DMatrix::identity(3, 3), 1).unwrap();
        assert!(gaussian_conditional(&jm, &DVector::zeros(1)).is_err());
    }

    fn random_joint(vals: &[f64], mean: &[f64], d: usize, d_theta: usize) -> JointMoments {
        let b = DMatrix::from_row_slice(d, d, vals);
        let cov = &b * b.transpose() + DMatrix::identity(d, d) * 0.1;
        JointMoments::new(DVector::from_row_slice(mean), cov, d_theta).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]
        #[test]
        fn mean_unchanged_when_observed_equals_summary_mean(
            vals in proptest::collection::vec(-2.0f64..2.0, 25),
            mean in proptest::collection::vec(-5.0f64..5.0, 5),
            d_theta in 1usize..5,
        ) {
            let jm = random_joint(&vals, &mean, 5, d_theta);
            let c = gaussian_conditional(&jm, &jm.m_s()).unwrap();
            prop_assert!((c.mean - jm.m_theta()).amax() < 1e-12);
        }

        #[test]
        fn schur_complement_is_psd(
            vals in proptest::collection::vec(-2.0f64..2.0, 25),
            mean in proptest::collection::vec(-5.0f64..5.0, 5),
            s_obs in proptest::collection::vec(-5.0f64..5.0, 4),
            d_theta in 1usize..5,
        ) {
            let jm = random_joint(&vals, &mean, 5, d_theta);
            let obs = DVector::from_row_slice(&s_obs[..5 - d_theta]);
            let raw = gaussian_conditional_raw(&jm, &obs).unwrap();
            let min = SymmetricEigen::new(raw.cov).eigenvalues.min();
            prop_assert!(min > -1e-10, "min eigenvalue {}", min);
        }
    }
}
