use nalgebra::DVector;

use super::four_moments;
use crate::error::{invalid, Result};

/// Four moments of the series, its first differences and its shifted ratios
/// `(y_i + 1)/(y_{i−1} + 1)`.
pub fn boombust_summaries(y: &[f64]) -> Result<DVector<f64>> {
    if y.len() < 3 {
        return Err(invalid(format!("boom-bust summaries need at least 3 points, got {}", y.len())));
    }
    let diff: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    let ratio: Vec<f64> = y.windows(2).map(|w| (w[1] + 1.0) / (w[0] + 1.0)).collect();
    let mut out = Vec::with_capacity(12);
    for series in [y, &diff, &ratio] {
        out.extend(four_moments(series));
    }
    Ok(DVector::from_vec(out))
}
