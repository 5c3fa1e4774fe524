use nalgebra::DVector;

use crate::error::{invalid, Result};

pub const SUPERNOVA_SUMMARY_DIM: usize = 20;

/// The binned distance moduli are their own summary.
pub fn supernova_summaries(mu: &[f64]) -> Result<DVector<f64>> {
    if mu.len() != SUPERNOVA_SUMMARY_DIM {
        return Err(invalid(format!(
            "supernova summaries expect {SUPERNOVA_SUMMARY_DIM} values, got {}",
            mu.len()
        )));
    }
    Ok(DVector::from_column_slice(mu))
}
