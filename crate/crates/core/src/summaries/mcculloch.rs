use nalgebra::DVector;

use super::{quantile_sorted, sorted_copy};
use crate::error::{Error, Result};

/// Quantile levels `q5, q25, q50, q75, q95`.
pub const MCCULLOCH_LEVELS: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

/// Quantile-based tail, skewness and scale estimates plus the sample mean.
pub fn mcculloch_summaries(y: &[f64], gamma_true: f64) -> Result<DVector<f64>> {
    if y.len() < 20 {
        return Err(Error::InvalidInput(format!(
            "McCulloch summaries need at least 20 points, got {}",
            y.len()
        )));
    }
    if !(gamma_true > 0.0) {
        return Err(Error::InvalidInput(format!("gamma_true must be positive, got {gamma_true}")));
    }
    let x = sorted_copy(y);
    let [q5, q25, q50, q75, q95] = MCCULLOCH_LEVELS.map(|p| quantile_sorted(&x, p));
    let iqr = q75 - q25;
    let wide = q95 - q5;
    if !(iqr > 0.0 && wide > 0.0) || !(iqr.is_finite() && wide.is_finite()) {
        return Err(Error::DegenerateSummary(format!(
            "quantile spreads are not positive (iqr {iqr}, q95-q5 {wide})"
        )));
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    Ok(DVector::from_vec(vec![
        wide / iqr,
        (q95 + q5 - 2.0 * q50) / wide,
        iqr / gamma_true,
        mean,
    ]))
}
