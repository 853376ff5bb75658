//! Gauss–Legendre quadrature on [-1, 1], mapped per knot interval.
//!
//! Every contour integral in this crate (length, field, mutual inductance,
//! sensitivities) runs through one of these rules, so objective and
//! constraints always see the same discretization.

use crate::error::{Error, Result};

pub const MAX_ORDER: usize = 64;

/// A Gauss–Legendre rule: `order` nodes in (-1, 1) with positive weights
/// summing to 2. Exact for polynomials up to degree `2*order - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// ∫_{t0}^{t1} f(t) dt by the affine-mapped rule.
    pub fn integrate_interval<F: Fn(f64) -> f64>(&self, t0: f64, t1: f64, f: F) -> f64 {
        let half = 0.5 * (t1 - t0);
        let mid = 0.5 * (t0 + t1);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * half * f(mid + half * x))
            .sum()
    }
}

/// Legendre polynomial P_n and its derivative at x, by the three-term
/// recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Build the order-`q` Gauss–Legendre rule by Newton iteration on the roots
/// of P_q, polished to ~1e-15 residual. `1 <= q <= 64`.
pub fn gauss_legendre(q: usize) -> Result<QuadratureRule> {
    if q == 0 || q > MAX_ORDER {
        return Err(Error::InvalidParameter(format!(
            "quadrature order {q} outside 1..={MAX_ORDER}"
        )));
    }
    if q == 1 {
        return Ok(QuadratureRule {
            nodes: vec![0.0],
            weights: vec![2.0],
        });
    }

    let mut nodes = vec![0.0; q];
    let mut weights = vec![0.0; q];
    let half = q / 2;
    for i in 0..half {
        // Tricomi-style initial guess for the i-th root (descending order)
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(q, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        // one extra polish step
        let (p, dp) = legendre_with_derivative(q, x);
        x -= p / dp;

        let (_, dp) = legendre_with_derivative(q, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // mirror the roots so symmetry about 0 is exact
        nodes[q - 1 - i] = x;
        nodes[i] = -x;
        weights[i] = w;
        weights[q - 1 - i] = w;
    }
    if q % 2 == 1 {
        let (_, dp) = legendre_with_derivative(q, 0.0);
        nodes[half] = 0.0;
        weights[half] = 2.0 / (dp * dp);
    }
    Ok(QuadratureRule { nodes, weights })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rejects_bad_order() {
        assert!(gauss_legendre(0).is_err());
        assert!(gauss_legendre(65).is_err());
    }

    #[test]
    fn one_point_rule_is_midpoint() {
        let r = gauss_legendre(1).unwrap();
        assert_eq!(r.nodes(), &[0.0]);
        assert_eq!(r.weights(), &[2.0]);
    }

    #[test]
    fn two_point_rule_is_classical() {
        let r = gauss_legendre(2).unwrap();
        let x = 1.0 / 3f64.sqrt();
        assert_abs_diff_eq!(r.nodes()[0], -x, epsilon = 1e-15);
        assert_abs_diff_eq!(r.nodes()[1], x, epsilon = 1e-15);
        assert_abs_diff_eq!(r.weights()[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.weights()[1], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn weights_sum_to_two_nodes_increasing_symmetric() {
        for q in 1..=MAX_ORDER {
            let r = gauss_legendre(q).unwrap();
            let sum: f64 = r.weights().iter().sum();
            assert_abs_diff_eq!(sum, 2.0, epsilon = 1e-14);
            for i in 1..q {
                assert!(r.nodes()[i] > r.nodes()[i - 1]);
            }
            for i in 0..q {
                assert_eq!(r.nodes()[i], -r.nodes()[q - 1 - i], "q={q} i={i}");
            }
        }
    }

    #[test]
    fn polynomial_exactness() {
        // order-q rule integrates x^d exactly for d <= 2q-1
        for q in [2usize, 4, 8, 16, 32, 64] {
            let r = gauss_legendre(q).unwrap();
            for d in (0..2 * q).step_by(2) {
                let exact = 2.0 / (d as f64 + 1.0);
                let approx: f64 = r
                    .nodes()
                    .iter()
                    .zip(r.weights())
                    .map(|(&x, &w)| w * x.powi(d as i32))
                    .sum();
                assert!(
                    ((approx - exact) / exact).abs() <= 1e-13,
                    "q={q} degree={d}: {approx} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn q16_integrates_x30() {
        let r = gauss_legendre(16).unwrap();
        let val: f64 = r
            .nodes()
            .iter()
            .zip(r.weights())
            .map(|(&x, &w)| w * x.powi(30))
            .sum();
        assert_abs_diff_eq!(val, 2.0 / 31.0, epsilon = 1e-14);
    }

    #[test]
    fn interval_integration() {
        let r = gauss_legendre(4).unwrap();
        assert_abs_diff_eq!(r.integrate_interval(0.0, 0.125, |_| 1.0), 0.125, epsilon = 1e-16);
        let r2 = gauss_legendre(2).unwrap();
        assert_abs_diff_eq!(r2.integrate_interval(0.0, 1.0, |t| t), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn periodic_integral_vanishes() {
        // sin(2πt) over the 8 knot intervals of [0,1] sums to zero
        let r = gauss_legendre(8).unwrap();
        let total: f64 = (0..8)
            .map(|k| {
                r.integrate_interval(k as f64 / 8.0, (k + 1) as f64 / 8.0, |t| {
                    (2.0 * std::f64::consts::PI * t).sin()
                })
            })
            .sum();
        assert_abs_diff_eq!(total, 0.0, epsilon = 1e-12);
    }
}
