use thiserror::Error;

/// Fewest draws the posterior summaries accept.
pub const MIN_DRAWS: usize = 100;

#[derive(Debug, Error, PartialEq)]
pub enum DiagnosticError {
    #[error("need at least {MIN_DRAWS} draws, got {0}")]
    TooFewDraws(usize),
    #[error("draws contain non-finite values")]
    NonFinite,
    #[error("level must lie in (0, 1], got {0}")]
    Level(f64),
    #[error("columns have different lengths")]
    Ragged,
}

fn check(x: &[f64]) -> Result<(), DiagnosticError> {
    if x.len() < MIN_DRAWS {
        return Err(DiagnosticError::TooFewDraws(x.len()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(DiagnosticError::NonFinite);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ess {
    pub value: f64,
    /// Set when the column is constant and the value defaults to 1.
    pub degenerate: bool,
}

/// Effective sample size `n / τ` with `τ = -1 + 2 Σ Γ_k`, where
/// `Γ_k = ρ̂_{2k} + ρ̂_{2k+1}` is summed while positive.
pub fn ess(x: &[f64]) -> Result<Ess, DiagnosticError> {
    check(x)?;
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let c: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let autocov = |lag: usize| c[..n - lag].iter().zip(&c[lag..]).map(|(a, b)| a * b).sum::<f64>() / n as f64;
    let c0 = autocov(0);
    if c0 <= 0.0 {
        return Ok(Ess { value: 1.0, degenerate: true });
    }
    let mut tau = -1.0;
    let mut k = 0;
    while 2 * k + 1 < n {
        let gamma = (autocov(2 * k) + autocov(2 * k + 1)) / c0;
        if gamma <= 0.0 {
            break;
        }
        tau += 2.0 * gamma;
        k += 1;
    }
    Ok(Ess { value: n as f64 / tau.max(f64::MIN_POSITIVE), degenerate: false })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EssSummary {
    pub min: f64,
    pub per_param: Vec<Ess>,
}

pub fn ess_min(columns: &[Vec<f64>]) -> Result<EssSummary, DiagnosticError> {
    if columns.windows(2).any(|w| w[0].len() != w[1].len()) {
        return Err(DiagnosticError::Ragged);
    }
    let per_param = columns.iter().map(|c| ess(c)).collect::<Result<Vec<_>, _>>()?;
    let min = per_param.iter().map(|e| e.value).fold(f64::INFINITY, f64::min);
    Ok(EssSummary { min, per_param })
}

/// Shortest interval spanning `⌈level·n⌉` sorted draws; ties go to the lowest start.
pub fn hpd_interval(samples: &[f64], level: f64) -> Result<(f64, f64), DiagnosticError> {
    if !(level > 0.0 && level <= 1.0) {
        return Err(DiagnosticError::Level(level));
    }
    check(samples)?;
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    let k = ((level * n as f64).ceil() as usize).clamp(1, n);
    let mut best = 0;
    for i in 1..=n - k {
        if s[i + k - 1] - s[i] < s[best + k - 1] - s[best] {
            best = i;
        }
    }
    Ok((s[best], s[best + k - 1]))
}

/// Rows `0, stride, 2·stride, …`.
pub fn thin<T: Clone>(rows: &[T], stride: usize) -> Vec<T> {
    assert!(stride >= 1, "thinning stride must be at least 1");
    rows.iter().step_by(stride).cloned().collect()
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}
