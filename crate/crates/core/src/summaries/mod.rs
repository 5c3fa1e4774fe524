//! Summary statistics for the benchmark models.
//!
//! Quantiles use linear interpolation between order statistics with plotting
//! position `(i − 0.5)/n`; moments use the `n − 1` variance divisor and `1/n`
//! central moments for skewness and kurtosis.

mod boombust;
mod gk;
mod mcculloch;
mod mixture;
mod supernova;

pub use boombust::boombust_summaries;
pub use gk::{gk_summaries, gk_summaries_from_quantiles, GK_LEVELS};
pub use mcculloch::{mcculloch_summaries, MCCULLOCH_LEVELS};
pub use mixture::{farthest_pair, mixture_summaries, sort_component_means, MixtureFit};
pub use supernova::{supernova_summaries, SUPERNOVA_SUMMARY_DIM};

/// Order statistics and weight for the `p`-quantile of `n` sorted values:
/// the quantile is `x[lo] + frac·(x[hi] − x[lo])` (0-based indices).
pub fn quantile_position(n: usize, p: f64) -> (usize, usize, f64) {
    assert!(n > 0, "quantile of an empty sample");
    let h = n as f64 * p + 0.5;
    if h <= 1.0 {
        return (0, 0, 0.0);
    }
    if h >= n as f64 {
        return (n - 1, n - 1, 0.0);
    }
    let lo = h.floor();
    (lo as usize - 1, lo as usize, h - lo)
}

pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let (lo, hi, frac) = quantile_position(sorted.len(), p);
    interpolate(sorted[lo], sorted[hi], frac)
}

#[inline]
pub(crate) fn interpolate(lo: f64, hi: f64, frac: f64) -> f64 {
    if frac == 0.0 {
        lo
    } else {
        lo + frac * (hi - lo)
    }
}

pub(crate) fn sorted_copy(data: &[f64]) -> Vec<f64> {
    let mut x = data.to_vec();
    x.sort_unstable_by(f64::total_cmp);
    x
}

/// Values of the order statistics at the (sorted, 0-based) `ranks`, found by
/// successive selection without a full sort.
pub fn order_statistics(data: &[f64], ranks: &[usize]) -> Vec<f64> {
    let mut x = data.to_vec();
    let mut out = Vec::with_capacity(ranks.len());
    let mut start = 0;
    for &r in ranks {
        assert!(r >= start, "ranks must be strictly increasing");
        let (_, v, _) = x[start..].select_nth_unstable_by(r - start, f64::total_cmp);
        out.push(*v);
        start = r + 1;
    }
    out
}

/// Sorted unique ranks needed for the given quantile levels of `n` values.
pub fn quantile_ranks(n: usize, levels: &[f64]) -> Vec<usize> {
    let mut ranks: Vec<usize> = levels
        .iter()
        .flat_map(|&p| {
            let (lo, hi, _) = quantile_position(n, p);
            [lo, hi]
        })
        .collect();
    ranks.sort_unstable();
    ranks.dedup();
    ranks
}

/// Mean, variance (`n − 1`), skewness and kurtosis of a series.
pub fn four_moments(x: &[f64]) -> [f64; 4] {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in x {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let var = if x.len() > 1 { m2 / (n - 1.0) } else { 0.0 };
    let (m2, m3, m4) = (m2 / n, m3 / n, m4 / n);
    if m2 <= 0.0 {
        return [mean, 0.0, 0.0, 0.0];
    }
    [mean, var, m3 / m2.powf(1.5), m4 / (m2 * m2)]
}
