use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Error, Result};

fn cholesky(sigma: &DMatrix<f64>, what: &str) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(sigma.clone())
        .ok_or_else(|| Error::DegenerateCovariance(format!("{what} is not positive definite")))
}

fn log_det_from(ch: &Cholesky<f64, Dyn>) -> f64 {
    2.0 * ch.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>()
}

/// `ln |A|` for symmetric positive-definite `A`.
pub fn log_det_spd(a: &DMatrix<f64>) -> Result<f64> {
    Ok(log_det_from(&cholesky(a, "matrix")?))
}

fn check_dims(s: &DVector<f64>, mu: &DVector<f64>, sigma: &DMatrix<f64>) -> Result<()> {
    let d = s.len();
    if mu.len() != d || sigma.nrows() != d || sigma.ncols() != d {
        return Err(invalid(format!(
            "dimension mismatch: s has {d}, mu {}, sigma {}x{}",
            mu.len(),
            sigma.nrows(),
            sigma.ncols()
        )));
    }
    Ok(())
}

/// Multivariate normal log-density `ln N(s; mu, sigma)`.
pub fn gaussian_logpdf(s: &DVector<f64>, mu: &DVector<f64>, sigma: &DMatrix<f64>) -> Result<f64> {
    check_dims(s, mu, sigma)?;
    let ch = cholesky(sigma, "covariance")?;
    let diff = s - mu;
    let y = ch
        .l_dirty()
        .solve_lower_triangular(&diff)
        .ok_or_else(|| Error::DegenerateCovariance("singular Cholesky factor".into()))?;
    let d = s.len() as f64;
    Ok(-0.5 * (d * (2.0 * PI).ln() + log_det_from(&ch) + y.norm_squared()))
}

// ln c(k, v) with c(k,v) = 2^{-kv/2} π^{-k(k-1)/4} / ∏_{i=1}^k Γ((v-i+1)/2)
fn ln_wishart_const(k: usize, v: f64) -> f64 {
    let kf = k as f64;
    let gammas: f64 = (1..=k).map(|i| ln_gamma(0.5 * (v - i as f64 + 1.0))).sum();
    -0.5 * kf * v * 2f64.ln() - 0.25 * kf * (kf - 1.0) * PI.ln() - gammas
}

/// Log of the Ghurye–Olkin unbiased estimator of the Gaussian density at `s`
/// given the sample mean and covariance of `m` replicates.
///
/// Returns `-inf` when `(M-1) Σ̂ - (s-μ̂)(s-μ̂)ᵀ / (1 - 1/M)` is not positive definite.
pub fn ghurye_olkin_logdensity(
    s: &DVector<f64>,
    mu_hat: &DVector<f64>,
    sigma_hat: &DMatrix<f64>,
    m: usize,
) -> Result<f64> {
    check_dims(s, mu_hat, sigma_hat)?;
    let d = s.len();
    if m <= d + 3 {
        return Err(invalid(format!(
            "unbiased density needs M > d_s + 3 (M = {m}, d_s = {d})"
        )));
    }
    let mf = m as f64;
    let df = d as f64;
    let scaled = sigma_hat * (mf - 1.0);
    let diff = s - mu_hat;
    let psi_arg = &scaled - (&diff * diff.transpose()) / (1.0 - 1.0 / mf);
    let psi_arg = super::symmetrize(&psi_arg);
    let Some(psi_ch) = Cholesky::new(psi_arg) else {
        return Ok(f64::NEG_INFINITY);
    };
    let ln_det_psi = log_det_from(&psi_ch);
    let ln_det_scaled = log_det_spd(&scaled)?;
    Ok(-0.5 * df * (2.0 * PI).ln() + ln_wishart_const(d, mf - 2.0)
        - ln_wishart_const(d, mf - 1.0)
        - 0.5 * df * (1.0 - 1.0 / mf).ln()
        - 0.5 * (mf - df - 2.0) * ln_det_scaled
        + 0.5 * (mf - df - 3.0) * ln_det_psi)
}

/// Multivariate Student-t log-density with location `loc`, scale matrix
/// `scale` and `dof` degrees of freedom.
pub fn multivariate_t_logpdf(
    x: &DVector<f64>,
    loc: &DVector<f64>,
    scale: &DMatrix<f64>,
    dof: f64,
) -> Result<f64> {
    check_dims(x, loc, scale)?;
    if !(dof > 0.0) {
        return Err(invalid(format!("degrees of freedom must be positive, got {dof}")));
    }
    let ch = cholesky(scale, "scale matrix")?;
    let y = ch
        .l_dirty()
        .solve_lower_triangular(&(x - loc))
        .ok_or_else(|| Error::DegenerateCovariance("singular Cholesky factor".into()))?;
    let p = x.len() as f64;
    Ok(ln_gamma(0.5 * (dof + p)) - ln_gamma(0.5 * dof) - 0.5 * p * (dof * PI).ln()
        - 0.5 * log_det_from(&ch)
        - 0.5 * (dof + p) * (y.norm_squared() / dof).ln_1p())
}
