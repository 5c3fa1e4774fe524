use nalgebra::{Cholesky, DMatrix, SymmetricEigen};

use crate::error::{invalid, Error, Result};

use super::symmetrize;

/// Relative eigenvalue floor used by [`repair_spd`].
pub const DEFAULT_EIGEN_FLOOR: f64 = 1e-8;

const SYMMETRY_TOL: f64 = 1e-9;

/// Absolute floor for a matrix whose largest eigenvalue is `largest`.
pub fn eigen_floor(largest: f64, relative: f64) -> f64 {
    relative * largest.max(1.0)
}

pub fn is_symmetric(a: &DMatrix<f64>, tol: f64) -> bool {
    if !a.is_square() {
        return false;
    }
    let scale = a.amax().max(1.0);
    let n = a.nrows();
    (0..n).all(|i| (0..i).all(|j| (a[(i, j)] - a[(j, i)]).abs() <= tol * scale))
}

fn check_symmetric(a: &DMatrix<f64>) -> Result<()> {
    if a.iter().any(|v| !v.is_finite()) {
        return Err(invalid("matrix contains non-finite entries"));
    }
    if !is_symmetric(a, SYMMETRY_TOL) {
        return Err(invalid("matrix is not symmetric"));
    }
    Ok(())
}

/// Symmetric positive-definite repair by eigenvalue clipping with the default floor.
pub fn repair_spd(sigma: &DMatrix<f64>) -> Result<(DMatrix<f64>, bool)> {
    repair_spd_with_floor(sigma, DEFAULT_EIGEN_FLOOR)
}

/// Returns `sigma` untouched when its Cholesky factorisation succeeds; otherwise
/// clips every eigenvalue below `relative * max(λ_max, 1)` up to that floor.
pub fn repair_spd_with_floor(sigma: &DMatrix<f64>, relative: f64) -> Result<(DMatrix<f64>, bool)> {
    check_symmetric(sigma)?;
    if Cholesky::new(sigma.clone()).is_some() {
        return Ok((sigma.clone(), false));
    }
    let eig = SymmetricEigen::new(symmetrize(sigma));
    let largest = eig.eigenvalues.max();
    let mut floor = eigen_floor(largest, relative);
    // Reconstruction round-off can in principle defeat Cholesky at the floor.
    for _ in 0..8 {
        let clipped = eig.eigenvalues.map(|l| l.max(floor));
        let rebuilt = &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
        let rebuilt = symmetrize(&rebuilt);
        if Cholesky::new(rebuilt.clone()).is_some() {
            return Ok((rebuilt, true));
        }
        floor *= 10.0;
    }
    Err(Error::DegenerateCovariance(
        "eigenvalue clipping did not produce a positive-definite matrix".into(),
    ))
}

/// Convex shrinkage of the correlation matrix toward the identity:
/// `D^{1/2} [γ C + (1-γ) I] D^{1/2}`.
pub fn shrink_covariance(sigma: &DMatrix<f64>, gamma: f64) -> Result<DMatrix<f64>> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(invalid(format!("shrinkage gamma {gamma} outside [0, 1]")));
    }
    check_symmetric(sigma)?;
    let n = sigma.nrows();
    if let Some(i) = (0..n).find(|&i| sigma[(i, i)] <= 0.0) {
        return Err(Error::DegenerateCovariance(format!(
            "non-positive variance {} at index {i}",
            sigma[(i, i)]
        )));
    }
    let sd: Vec<f64> = (0..n).map(|i| sigma[(i, i)].sqrt()).collect();
    let out = DMatrix::from_fn(n, n, |i, j| {
        let corr = if i == j { 1.0 } else { sigma[(i, j)] / (sd[i] * sd[j]) };
        let shrunk = if i == j { 1.0 } else { gamma * corr };
        sd[i] * shrunk * sd[j]
    });
    Ok(symmetrize(&out))
}

/// A square root `L` with `L Lᵀ = A` for symmetric positive semi-definite `A`.
///
/// Uses the lower Cholesky factor when it exists and falls back to the
/// symmetric eigen square root with negative eigenvalues clipped to zero.
pub fn matrix_sqrt(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_symmetric(a)?;
    if let Some(ch) = Cholesky::new(a.clone()) {
        return Ok(ch.l());
    }
    let eig = SymmetricEigen::new(symmetrize(a));
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn min_eig(a: &DMatrix<f64>) -> f64 {
        SymmetricEigen::new(a.clone()).eigenvalues.min()
    }

    #[test]
    fn identity_is_untouched() {
        let id = DMatrix::<f64>::identity(3, 3);
        let (out, repaired) = repair_spd(&id).unwrap();
        assert!(!repaired);
        assert_eq!(out, id);
    }

    #[test]
    fn negative_diagonal_entry_is_clipped() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -0.1]);
        let (out, repaired) = repair_spd(&a).unwrap();
        assert!(repaired);
        let floor = eigen_floor(1.0, DEFAULT_EIGEN_FLOOR);
        assert!((out[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((out[(1, 1)] - floor).abs() < 1e-15);
        assert!(out[(0, 1)].abs() < 1e-15);
    }

    #[test]
    fn indefinite_two_by_two() {
        // eigenvalues 3 and -1
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let (out, repaired) = repair_spd(&a).unwrap();
        assert!(repaired);
        let floor = eigen_floor(3.0, DEFAULT_EIGEN_FLOOR);
        let eig = SymmetricEigen::new(out.clone()).eigenvalues;
        assert!((eig.min() - floor).abs() < 1e-12);
        assert!((eig.max() - 3.0).abs() < 1e-12);
        // oracle: V diag(3, floor) Vᵀ with V the ±45° rotation
        let h = 0.5;
        let oracle = DMatrix::from_row_slice(2, 2, &[h * (3.0 + floor), h * (3.0 - floor), h * (3.0 - floor), h * (3.0 + floor)]);
        assert!((out - oracle).amax() < 1e-12);
    }

    #[test]
    fn non_symmetric_is_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(repair_spd(&a), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn shrinkage_examples() {
        let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 0.8 * 2.0, 0.8 * 2.0, 4.0]);
        assert_eq!(shrink_covariance(&sigma, 1.0).unwrap(), sigma);
        let diag = shrink_covariance(&sigma, 0.0).unwrap();
        assert_eq!(diag, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 4.0]));
        let s = shrink_covariance(&sigma, 0.95).unwrap();
        assert!((s[(0, 1)] - 1.52).abs() < 1e-12);
        assert!((s[(1, 0)] - 1.52).abs() < 1e-12);
        assert_eq!(s[(0, 0)], 1.0);
        assert_eq!(s[(1, 1)], 4.0);
    }

    #[test]
    fn shrinkage_rejects_zero_variance() {
        let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(shrink_covariance(&sigma, 0.5), Err(Error::DegenerateCovariance(_))));
    }

    #[test]
    fn sqrt_of_zero_is_zero() {
        let z = DMatrix::<f64>::zeros(3, 3);
        assert_eq!(matrix_sqrt(&z).unwrap(), z);
    }

    proptest! {
        #[test]
        fn repair_is_idempotent(vals in proptest::collection::vec(-3.0f64..3.0, 16)) {
            let a = DMatrix::from_row_slice(4, 4, &vals);
            let a = symmetrize(&a);
            let (once, _) = repair_spd(&a).unwrap();
            let (twice, repaired_again) = repair_spd(&once).unwrap();
            prop_assert!(!repaired_again);
            prop_assert_eq!(once.clone(), twice);
            prop_assert!(min_eig(&once) > 0.0);
        }

        #[test]
        fn sqrt_reconstructs(vals in proptest::collection::vec(-2.0f64..2.0, 9)) {
            let b = DMatrix::from_row_slice(3, 3, &vals);
            let a = &b * b.transpose();
            let l = matrix_sqrt(&a).unwrap();
            prop_assert!((&l * l.transpose() - &a).amax() < 1e-9);
        }
    }
}
