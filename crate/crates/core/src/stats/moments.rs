use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Result};

/// `M` replicate summary vectors stacked as rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryMatrix {
    data: DMatrix<f64>,
}

impl SummaryMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let first = rows.first().ok_or_else(|| invalid("summary matrix needs at least one row"))?;
        let dim = first.len();
        if dim == 0 {
            return Err(invalid("summary vectors must be non-empty"));
        }
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != dim) {
            return Err(invalid(format!(
                "row {i} has length {} but row 0 has length {dim}",
                r.len()
            )));
        }
        Ok(Self {
            data: DMatrix::from_fn(rows.len(), dim, |i, j| rows[i][j]),
        })
    }

    pub fn from_matrix(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(invalid("summary matrix must have at least one row and column"));
        }
        Ok(Self { data })
    }

    /// Number of replicates `M`.
    pub fn replicates(&self) -> usize {
        self.data.nrows()
    }

    /// Summary dimension `d_s`.
    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn row(&self, i: usize) -> DVector<f64> {
        self.data.row(i).transpose()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn column_means(&self) -> DVector<f64> {
        let m = self.replicates() as f64;
        DVector::from_fn(self.dim(), |j, _| self.data.column(j).sum() / m)
    }
}

/// `(A + Aᵀ) / 2`.
pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Sample mean and unbiased (`1/(M-1)`) sample covariance of the rows.
pub fn estimate_moments(summaries: &SummaryMatrix) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let m = summaries.replicates();
    if m < 2 {
        return Err(invalid(format!("need at least 2 replicates, got {m}")));
    }
    let x = summaries.as_matrix();
    if x.iter().any(|v| !v.is_finite()) {
        return Err(invalid("summary matrix contains non-finite entries"));
    }
    let mu = summaries.column_means();
    let mut centered = x.clone();
    for mut row in centered.row_iter_mut() {
        row -= mu.transpose();
    }
    let cov = centered.transpose() * &centered / (m as f64 - 1.0);
    Ok((mu, symmetrize(&cov)))
}

/// Streaming mean / covariance accumulator (Welford).
#[derive(Debug, Clone, PartialEq)]
pub struct RunningMoments {
    count: usize,
    mean: DVector<f64>,
    comoment: DMatrix<f64>,
}

impl RunningMoments {
    pub fn new(dim: usize) -> Self {
        Self {
            count: 0,
            mean: DVector::zeros(dim),
            comoment: DMatrix::zeros(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn push(&mut self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.dim() {
            return Err(invalid(format!(
                "expected a vector of length {}, got {}",
                self.dim(),
                x.len()
            )));
        }
        self.count += 1;
        let delta = x - &self.mean;
        self.mean += &delta / self.count as f64;
        let delta_after = x - &self.mean;
        self.comoment.ger(1.0, &delta, &delta_after, 1.0);
        Ok(())
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    /// Unbiased covariance; zero matrix while fewer than two points were seen.
    pub fn covariance(&self) -> DMatrix<f64> {
        if self.count < 2 {
            return DMatrix::zeros(self.dim(), self.dim());
        }
        symmetrize(&(&self.comoment / (self.count as f64 - 1.0)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_pass(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let m = rows.len();
        let d = rows[0].len();
        let mut mean = vec![0.0; d];
        for r in rows {
            for j in 0..d {
                mean[j] += r[j];
            }
        }
        for v in &mut mean {
            *v /= m as f64;
        }
        let mut cov = vec![vec![0.0; d]; d];
        for r in rows {
            for a in 0..d {
                for b in 0..d {
                    cov[a][b] += (r[a] - mean[a]) * (r[b] - mean[b]);
                }
            }
        }
        for row in &mut cov {
            for v in row.iter_mut() {
                *v /= (m - 1) as f64;
            }
        }
        (mean, cov)
    }

    #[test]
    fn two_point_sample() {
        let s = SummaryMatrix::from_rows(&[vec![0.0], vec![2.0]]).unwrap();
        let (mu, sigma) = estimate_moments(&s).unwrap();
        assert_eq!(mu[0], 1.0);
        assert_eq!(sigma[(0, 0)], 2.0);
    }

    #[test]
    fn identical_rows_give_zero_covariance() {
        let row = vec![1.5, -2.0, 3.25];
        let s = SummaryMatrix::from_rows(&vec![row.clone(); 6]).unwrap();
        let (mu, sigma) = estimate_moments(&s).unwrap();
        assert_eq!(mu.as_slice(), row.as_slice());
        assert!(sigma.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn fixed_five_by_three_matches_two_pass() {
        let rows = vec![
            vec![0.3, -1.2, 4.0],
            vec![1.7, 0.4, 3.1],
            vec![-0.8, 2.2, 5.5],
            vec![0.0, -0.3, 4.4],
            vec![2.5, 1.1, 2.9],
        ];
        let (mu_o, cov_o) = two_pass(&rows);
        let (mu, cov) = estimate_moments(&SummaryMatrix::from_rows(&rows).unwrap()).unwrap();
        for a in 0..3 {
            assert!((mu[a] - mu_o[a]).abs() < 1e-12);
            for b in 0..3 {
                assert!((cov[(a, b)] - cov_o[a][b]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn errors() {
        let one = SummaryMatrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        assert!(matches!(estimate_moments(&one), Err(crate::Error::InvalidInput(_))));
        let nan = SummaryMatrix::from_rows(&[vec![1.0], vec![f64::NAN]]).unwrap();
        assert!(matches!(estimate_moments(&nan), Err(crate::Error::InvalidInput(_))));
        assert!(SummaryMatrix::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn covariance_is_exactly_symmetric() {
        let rows: Vec<Vec<f64>> = (0..17)
            .map(|i| (0..5).map(|j| ((i * 7 + j * 13) % 11) as f64 * 0.37 - 1.1).collect())
            .collect();
        let (_, cov) = estimate_moments(&SummaryMatrix::from_rows(&rows).unwrap()).unwrap();
        assert_eq!(cov, cov.transpose());
    }

    proptest! {
        #[test]
        fn matches_two_pass_oracle(
            (m, d) in (2usize..=50, 1usize..=10),
            seed in any::<u64>(),
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let rows: Vec<Vec<f64>> = (0..m)
                .map(|_| (0..d).map(|_| rng.random_range(-10.0..10.0)).collect())
                .collect();
            let (mu_o, cov_o) = two_pass(&rows);
            let (mu, cov) = estimate_moments(&SummaryMatrix::from_rows(&rows).unwrap()).unwrap();
            for a in 0..d {
                prop_assert!((mu[a] - mu_o[a]).abs() < 1e-10);
                for b in 0..d {
                    prop_assert!((cov[(a, b)] - cov_o[a][b]).abs() < 1e-10);
                }
            }
        }

        #[test]
        fn streaming_equals_batch(m in 2usize..40, d in 1usize..8, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let rows: Vec<Vec<f64>> = (0..m)
                .map(|_| (0..d).map(|_| rng.random_range(-5.0..5.0)).collect())
                .collect();
            let mut acc = RunningMoments::new(d);
            for r in &rows {
                acc.push(&DVector::from_column_slice(r)).unwrap();
            }
            let (mu, cov) = estimate_moments(&SummaryMatrix::from_rows(&rows).unwrap()).unwrap();
            prop_assert!((acc.mean() - mu).amax() < 1e-10);
            prop_assert!((acc.covariance() - cov).amax() < 1e-10);
        }
    }
}
