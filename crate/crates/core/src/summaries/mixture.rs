use nalgebra::{Matrix2, Vector2};
use nalgebra::DVector;

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureFit {
    /// `(μ̂1⁽¹⁾, μ̂1⁽²⁾, μ̂2⁽¹⁾, μ̂2⁽²⁾)` after coordinate-wise sorting.
    pub summary: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
}

const MAX_ITER: usize = 200;
const TOL: f64 = 1e-8;

fn cross(o: Vector2<f64>, a: Vector2<f64>, b: Vector2<f64>) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Convex hull vertices (monotone chain), counter-clockwise.
fn convex_hull(points: &[Vector2<f64>]) -> Vec<Vector2<f64>> {
    let mut p = points.to_vec();
    p.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    p.dedup();
    if p.len() <= 2 {
        return p;
    }
    let mut hull: Vec<Vector2<f64>> = Vec::with_capacity(2 * p.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Vector2<f64>>> =
            if pass == 0 { Box::new(p.iter()) } else { Box::new(p.iter().rev()) };
        for &q in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], q) <= 0.0 {
                hull.pop();
            }
            hull.push(q);
        }
        hull.pop();
    }
    hull
}

/// The two points with the largest Euclidean separation (ties resolved by
/// hull order, which is deterministic).
pub fn farthest_pair(points: &[Vector2<f64>]) -> (Vector2<f64>, Vector2<f64>) {
    let hull = convex_hull(points);
    let mut best = (hull[0], hull[0]);
    let mut best_d = -1.0;
    for i in 0..hull.len() {
        for j in i + 1..hull.len() {
            let d = (hull[i] - hull[j]).norm_squared();
            if d > best_d {
                best_d = d;
                best = (hull[i], hull[j]);
            }
        }
    }
    best
}

/// Label-switching fix: sort each coordinate across the two components, giving
/// `(min x, min y, max x, max y)`.
pub fn sort_component_means(m1: Vector2<f64>, m2: Vector2<f64>) -> DVector<f64> {
    DVector::from_vec(vec![m1.x.min(m2.x), m1.y.min(m2.y), m1.x.max(m2.x), m1.y.max(m2.y)])
}

/// EM for the two means of an equal-weight bivariate mixture with known
/// covariances, initialised at the farthest pair of points.
pub fn mixture_summaries(points: &[Vector2<f64>], sigma1: &Matrix2<f64>, sigma2: &Matrix2<f64>) -> Result<MixtureFit> {
    if points.len() < 10 {
        return Err(invalid(format!("mixture summaries need at least 10 points, got {}", points.len())));
    }
    let (p1, p2) = (
        sigma1.try_inverse().ok_or_else(|| invalid("Σ1 is singular"))?,
        sigma2.try_inverse().ok_or_else(|| invalid("Σ2 is singular"))?,
    );
    // Half log-determinant difference enters the responsibility log-odds.
    let half_logdet = 0.5 * (sigma2.determinant().ln() - sigma1.determinant().ln());
    let (mut m1, mut m2) = farthest_pair(points);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_ITER {
        iterations += 1;
        let (mut w1, mut w2) = (0.0, 0.0);
        let (mut a1, mut a2) = (Vector2::zeros(), Vector2::zeros());
        for x in points {
            let d1 = x - m1;
            let d2 = x - m2;
            // log N1 − log N2
            let log_odds = -0.5 * d1.dot(&(p1 * d1)) + 0.5 * d2.dot(&(p2 * d2)) + half_logdet;
            let r1 = if log_odds >= 0.0 {
                1.0 / (1.0 + (-log_odds).exp())
            } else {
                let e = log_odds.exp();
                e / (1.0 + e)
            };
            let r2 = 1.0 - r1;
            w1 += r1;
            w2 += r2;
            a1 += x * r1;
            a2 += x * r2;
        }
        let n1 = if w1 > 0.0 { a1 / w1 } else { m1 };
        let n2 = if w2 > 0.0 { a2 / w2 } else { m2 };
        let shift = (n1 - m1).amax().max((n2 - m2).amax());
        m1 = n1;
        m2 = n2;
        if shift < TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        log::debug!("mixture EM stopped after {MAX_ITER} iterations without converging");
    }
    Ok(MixtureFit {
        summary: sort_component_means(m1, m2),
        iterations,
        converged,
    })
}
