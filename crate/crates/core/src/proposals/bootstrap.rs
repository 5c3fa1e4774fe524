use nalgebra::DVector;
use rand::Rng;

use crate::error::{invalid, Result};
use crate::stats::SummaryMatrix;

/// Mean of the rows selected by `indices` (with repetition).
pub fn bootstrap_mean(summaries: &SummaryMatrix, indices: &[usize]) -> Result<DVector<f64>> {
    if indices.is_empty() {
        return Err(invalid("bootstrap needs at least one index"));
    }
    let m = summaries.replicates();
    let x = summaries.as_matrix();
    let mut acc = DVector::zeros(summaries.dim());
    for &i in indices {
        if i >= m {
            return Err(invalid(format!("bootstrap index {i} out of range for {m} rows")));
        }
        acc += x.row(i).transpose();
    }
    Ok(acc / indices.len() as f64)
}

/// Mean of an `M`-size resample with replacement of the `M` rows; stands in
/// for the summary mean of a rejected guided proposal.
pub fn bootstrap_rejection_summary<R: Rng + ?Sized>(summaries: &SummaryMatrix, rng: &mut R) -> Result<DVector<f64>> {
    let m = summaries.replicates();
    let idx: Vec<usize> = (0..m).map(|_| rng.random_range(0..m)).collect();
    bootstrap_mean(summaries, &idx)
}
