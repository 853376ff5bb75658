//! Periodic uniform-knot B-spline basis functions.
//!
//! The basis `R^p_m` (m = 0..N-1) of degree `p` lives on the unit parameter
//! interval with uniform knots `t_k = k/N`. Each function is supported on
//! `p+1` consecutive knot intervals, wrapping modulo `N`, so that the family
//! forms a partition of unity on [0, 1] and spans closed curves.
//!
//! On its support the function is a shifted copy of the cardinal B-spline:
//! with the local coordinate `x = (t - t_m)/Δ` (wrapped periodically),
//! `R^p_m(t) = N^p_j(x)` for `x` in `[j, j+1]`, `j = 0..p`. The degree-2
//! pieces are
//!
//! ```text
//! N²₀(x) = x²/2,   N²₁(x) = (-2x² + 6x - 3)/2,   N²₂(x) = (x-3)²/2
//! ```
//!
//! and degrees 1 and 3 come from the same cardinal family.

use crate::error::{Error, Result};

/// Periodic B-spline basis of degree `p` with `N` functions on uniform knots.
///
/// Immutable after construction; evaluation is pure and thread-safe.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicBasis {
    degree: usize,
    count: usize,
}

impl PeriodicBasis {
    /// Supported degrees. Degree 2 is the workhorse; 1 and 3 share the same
    /// machinery so consistency across degrees can be tested.
    pub const SUPPORTED_DEGREES: [usize; 3] = [1, 2, 3];

    pub fn new(degree: usize, count: usize) -> Result<Self> {
        if !Self::SUPPORTED_DEGREES.contains(&degree) {
            return Err(Error::InvalidParameter(format!(
                "unsupported B-spline degree {degree} (supported: 1, 2, 3)"
            )));
        }
        if count <= degree {
            return Err(Error::InvalidParameter(format!(
                "need more basis functions than the degree (N={count}, p={degree})"
            )));
        }
        Ok(Self { degree, count })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Number of basis functions (= number of control points).
    pub fn count(&self) -> usize {
        self.count
    }

    /// Uniform knot span Δ = 1/N.
    pub fn knot_span(&self) -> f64 {
        1.0 / self.count as f64
    }

    fn check_m(&self, m: usize) -> Result<()> {
        if m >= self.count {
            return Err(Error::IndexOutOfRange {
                what: "basis function",
                index: m,
                len: self.count,
            });
        }
        Ok(())
    }

    fn check_t(t: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::ParamOutOfRange { t });
        }
        Ok(())
    }

    /// Locate the knot interval containing `t` and the fraction within it.
    /// `t = 1` wraps to interval 0 (closed-curve periodicity).
    pub(crate) fn locate(&self, t: f64) -> (usize, f64) {
        let n = self.count as f64;
        let scaled = t * n;
        let mut k = scaled.floor() as usize;
        if k >= self.count {
            // only reachable for t == 1
            return (0, 0.0);
        }
        let mut frac = scaled - k as f64;
        if frac >= 1.0 {
            // guard against floating roundup at interval boundaries
            k += 1;
            frac = 0.0;
            if k == self.count {
                return (0, 0.0);
            }
        }
        (k, frac)
    }

    /// Piece offset of basis `m` in interval `k`, if the interval belongs to
    /// its support.
    fn piece_offset(&self, m: usize, k: usize) -> Option<usize> {
        let n = self.count;
        let j = (k + n - m) % n;
        (j <= self.degree).then_some(j)
    }

    /// `R^p_m(t)`. Zero outside the support; `t` must lie in [0, 1].
    pub fn value(&self, m: usize, t: f64) -> Result<f64> {
        self.check_m(m)?;
        Self::check_t(t)?;
        let (k, frac) = self.locate(t);
        Ok(match self.piece_offset(m, k) {
            Some(j) => piece_value(self.degree, j, j as f64 + frac),
            None => 0.0,
        })
    }

    /// `dR^p_m/dt`, the exact derivative of the piecewise polynomial
    /// (includes the 1/Δ chain-rule factor).
    ///
    /// At knot points this is the one-sided limit from the right; at `t = 1`
    /// it is the left limit, so a degree-1 basis still reports the slope of
    /// its final piece there.
    pub fn derivative(&self, m: usize, t: f64) -> Result<f64> {
        self.check_m(m)?;
        Self::check_t(t)?;
        let (k, frac) = if t == 1.0 {
            (self.count - 1, 1.0)
        } else {
            self.locate(t)
        };
        Ok(match self.piece_offset(m, k) {
            Some(j) => piece_derivative(self.degree, j, j as f64 + frac) * self.count as f64,
            None => 0.0,
        })
    }

    /// The `p+1` knot-interval indices making up `supp(R^p_m)`, starting at
    /// `m` and wrapping modulo `N`, so the split-support functions near the
    /// end of the index range list their tail intervals first.
    pub fn support_intervals(&self, m: usize) -> Result<Vec<usize>> {
        self.check_m(m)?;
        Ok((0..=self.degree).map(|i| (m + i) % self.count).collect())
    }
}

/// Value of the cardinal piece `N^p_j` at local coordinate `x` in `[j, j+1]`.
///
/// Closed forms for the supported degrees; these are the polynomials the
/// generic recursion reproduces.
pub(crate) fn piece_value(p: usize, j: usize, x: f64) -> f64 {
    debug_assert!(j <= p);
    match (p, j) {
        (1, 0) => x,
        (1, 1) => 2.0 - x,
        (2, 0) => 0.5 * x * x,
        (2, 1) => 0.5 * (-2.0 * x * x + 6.0 * x - 3.0),
        (2, 2) => 0.5 * (x - 3.0) * (x - 3.0),
        (3, 0) => x * x * x / 6.0,
        (3, 1) => (-3.0 * x * x * x + 12.0 * x * x - 12.0 * x + 4.0) / 6.0,
        (3, 2) => (3.0 * x * x * x - 24.0 * x * x + 60.0 * x - 44.0) / 6.0,
        (3, 3) => {
            let u = 4.0 - x;
            u * u * u / 6.0
        }
        _ => unreachable!("degree checked at construction"),
    }
}

/// Derivative `dN^p_j/dx` of the cardinal piece (local coordinate).
pub(crate) fn piece_derivative(p: usize, j: usize, x: f64) -> f64 {
    debug_assert!(j <= p);
    match (p, j) {
        (1, 0) => 1.0,
        (1, 1) => -1.0,
        (2, 0) => x,
        (2, 1) => 3.0 - 2.0 * x,
        (2, 2) => x - 3.0,
        (3, 0) => 0.5 * x * x,
        (3, 1) => 0.5 * (-3.0 * x * x + 8.0 * x - 4.0),
        (3, 2) => 0.5 * (3.0 * x * x - 16.0 * x + 20.0),
        (3, 3) => {
            let u = 4.0 - x;
            -0.5 * u * u
        }
        _ => unreachable!("degree checked at construction"),
    }
}

/// Cardinal B-spline `B_p(x)` on `[0, p+1]` by the Cox–de Boor recursion on
/// integer knots. Independent of the closed-form pieces; used to validate
/// them.
pub fn cardinal_bspline_recursive(p: usize, x: f64) -> f64 {
    if p == 0 {
        return if (0.0..1.0).contains(&x) { 1.0 } else { 0.0 };
    }
    let pf = p as f64;
    (x / pf) * cardinal_bspline_recursive(p - 1, x)
        + ((pf + 1.0 - x) / pf) * cardinal_bspline_recursive(p - 1, x - 1.0)
}
