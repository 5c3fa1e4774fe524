use nalgebra::DVector;

use super::{quantile_sorted, sorted_copy};
use crate::error::{Error, Result};

/// Octile levels used by the g-and-k summaries.
pub const GK_LEVELS: [f64; 7] = [0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875];

/// Robust location, scale, skewness and kurtosis from the octiles.
pub fn gk_summaries(data: &[f64]) -> Result<DVector<f64>> {
    if data.len() < 8 {
        return Err(Error::InvalidInput(format!(
            "g-and-k summaries need at least 8 points, got {}",
            data.len()
        )));
    }
    let x = sorted_copy(data);
    let q: Vec<f64> = GK_LEVELS.iter().map(|&p| quantile_sorted(&x, p)).collect();
    gk_summaries_from_quantiles(&q)
}

/// Summaries from the seven octiles `P12.5, P25, …, P87.5`.
pub fn gk_summaries_from_quantiles(q: &[f64]) -> Result<DVector<f64>> {
    let (e1, q1, e3, q2, e5, q3, e7) = (q[0], q[1], q[2], q[3], q[4], q[5], q[6]);
    let s_b = q3 - q1;
    if !(s_b > 0.0) || !s_b.is_finite() {
        return Err(Error::DegenerateSummary(format!("interquartile range is {s_b}")));
    }
    let s_a = q2;
    let s_g = (q3 + q1 - 2.0 * s_a) / s_b;
    let s_k = (e7 - e5 + e3 - e1) / s_b;
    Ok(DVector::from_vec(vec![s_a, s_b, s_g, s_k]))
}
