//! Independent analytic and brute-force references.
//!
//! Everything here is deliberately computed by a different route than the
//! production code it checks: complete elliptic integrals by AGM iteration,
//! the coaxial-circle mutual inductance and its radius derivative in closed
//! form, a dense piecewise-linear Neumann estimator, and plain central
//! finite differences.
//!
//! Elliptic-integral convention: the argument is the *parameter* `m = k²`,
//! not the modulus `k`. The coaxial closed forms below are written as
//! `K(k²)`, `E(k²)`, so call sites pass `k²` directly. Mixing up modulus and
//! parameter is the classic failure mode here.

use crate::curve::{CoilCurve, Vec3};
use crate::error::{Error, Result};

const AGM_EPS: f64 = 1e-16;
const AGM_MAX_ITER: usize = 40;

/// Complete elliptic integral of the first kind, `K(m)` with `m = k²`:
/// `∫_0^{π/2} dφ / sqrt(1 - m sin²φ)`. Requires `0 <= m < 1`.
pub fn elliptic_k(m: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&m) {
        return Err(Error::InvalidParameter(format!(
            "elliptic K parameter m={m} outside [0, 1)"
        )));
    }
    let mut a = 1.0f64;
    let mut b = (1.0 - m).sqrt();
    for _ in 0..AGM_MAX_ITER {
        if (a - b).abs() <= AGM_EPS * a {
            break;
        }
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
    }
    Ok(std::f64::consts::FRAC_PI_2 / a)
}

/// Complete elliptic integral of the second kind, `E(m)` with `m = k²`:
/// `∫_0^{π/2} sqrt(1 - m sin²φ) dφ`. Requires `0 <= m <= 1`.
pub fn elliptic_e(m: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&m) {
        return Err(Error::InvalidParameter(format!(
            "elliptic E parameter m={m} outside [0, 1]"
        )));
    }
    if m == 1.0 {
        return Ok(1.0);
    }
    let mut a = 1.0f64;
    let mut b = (1.0 - m).sqrt();
    // E = K · (1 - Σ_n 2^{n-1} c_n²) with c_0² = m and c_{n+1} = (a_n - b_n)/2;
    // accumulate 2^n c_n² and halve once at the end.
    let mut c2_sum = m;
    let mut pow2 = 1.0;
    for _ in 0..AGM_MAX_ITER {
        if (a - b).abs() <= AGM_EPS * a {
            break;
        }
        let c = 0.5 * (a - b);
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
        pow2 *= 2.0;
        c2_sum += pow2 * c * c;
    }
    let k = std::f64::consts::FRAC_PI_2 / a;
    Ok(k * (1.0 - 0.5 * c2_sum))
}

/// Exact mutual inductance of two coaxial circles of radii `a` (transmitter)
/// and `b` (receiver) at axial distance `d`:
///
/// `M = (2 μ b / k) sqrt(a/b) [(1 - k²/2) K(k²) - E(k²)]`,
/// `k² = 4ab / ((a+b)² + d²)`.
pub fn coaxial_mi(a: f64, b: f64, d: f64, mu: f64) -> Result<f64> {
    if a <= 0.0 || b <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "coaxial radii must be positive (a={a}, b={b})"
        )));
    }
    let k2 = 4.0 * a * b / ((a + b).powi(2) + d * d);
    if k2 >= 1.0 {
        return Err(Error::InvalidParameter(
            "coincident circles: k^2 >= 1".into(),
        ));
    }
    let k = k2.sqrt();
    Ok(2.0 * mu * b / k * (a / b).sqrt() * ((1.0 - 0.5 * k2) * elliptic_k(k2)? - elliptic_e(k2)?))
}

/// Derivative of `coaxial_mi` with respect to the receiver radius `b`:
///
/// `dM/db = (μ k / 2) sqrt(b/a) [(a² - b² - d²)/((a-b)² + d²) E(k²) + K(k²)]`.
pub fn coaxial_mi_db(a: f64, b: f64, d: f64, mu: f64) -> Result<f64> {
    if a <= 0.0 || b <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "coaxial radii must be positive (a={a}, b={b})"
        )));
    }
    if (a - b).powi(2) + d * d == 0.0 {
        return Err(Error::InvalidParameter("touching circles".into()));
    }
    let k2 = 4.0 * a * b / ((a + b).powi(2) + d * d);
    if k2 >= 1.0 {
        return Err(Error::InvalidParameter(
            "coincident circles: k^2 >= 1".into(),
        ));
    }
    let k = k2.sqrt();
    let ratio = (a * a - b * b - d * d) / ((a - b).powi(2) + d * d);
    Ok(0.5 * mu * k * (b / a).sqrt() * (ratio * elliptic_e(k2)? + elliptic_k(k2)?))
}

/// Project per-control-point sensitivities onto uniform radial motion:
/// `Σ_m d_m · (P_m - center) / b`. For control points nominally on a circle
/// of radius `b` about `center` this is the discrete dM/db.
pub fn radial_sensitivity(curve: &CoilCurve, d: &[Vec3], center: Vec3, b: f64) -> Result<f64> {
    if b <= 0.0 {
        return Err(Error::InvalidParameter(format!("radius b={b} must be positive")));
    }
    if d.len() != curve.control_points().len() {
        return Err(Error::InvalidParameter(format!(
            "sensitivity count {} does not match control point count {}",
            d.len(),
            curve.control_points().len()
        )));
    }
    Ok(curve
        .control_points()
        .iter()
        .zip(d)
        .map(|(&p, &dm)| dm.dot(p - center) / b)
        .sum())
}

/// Central finite differences `(f(x + h e_i) - f(x - h e_i)) / 2h` for every
/// component. The verification oracle for every analytic gradient in the
/// crate.
pub fn finite_difference_gradient<F>(f: F, x: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    if h <= 0.0 {
        return Err(Error::InvalidParameter(format!("step h={h} must be positive")));
    }
    let mut grad = vec![0.0; x.len()];
    let mut work = x.to_vec();
    for i in 0..x.len() {
        work[i] = x[i] + h;
        let up = f(&work)?;
        work[i] = x[i] - h;
        let dn = f(&work)?;
        work[i] = x[i];
        grad[i] = (up - dn) / (2.0 * h);
    }
    Ok(grad)
}

/// Brute-force Neumann mutual inductance of two closed polylines with
/// midpoint kernel evaluation: `(μ/4π) Σ_i Σ_j Δs_i · Δs_j / |m_i - m_j|`.
///
/// Independent of the Gauss–Legendre path; used by tests to validate it.
pub fn polyline_mi(points_a: &[Vec3], points_b: &[Vec3], mu: f64) -> f64 {
    let seg = |pts: &[Vec3]| -> (Vec<Vec3>, Vec<Vec3>) {
        let n = pts.len();
        let mut mids = Vec::with_capacity(n);
        let mut dels = Vec::with_capacity(n);
        for i in 0..n {
            let p0 = pts[i];
            let p1 = pts[(i + 1) % n];
            mids.push((p0 + p1) * 0.5);
            dels.push(p1 - p0);
        }
        (mids, dels)
    };
    let (ma, da) = seg(points_a);
    let (mb, db) = seg(points_b);
    let mut total = 0.0;
    for (mi, di) in ma.iter().zip(&da) {
        let mut row = 0.0;
        for (mj, dj) in mb.iter().zip(&db) {
            row += di.dot(*dj) / (*mi - *mj).norm();
        }
        total += row;
    }
    mu / (4.0 * std::f64::consts::PI) * total
}

/// Sample a coil as a closed polyline with `segments` uniform parameter steps.
pub fn sample_polyline(curve: &CoilCurve, segments: usize) -> Result<Vec<Vec3>> {
    (0..segments)
        .map(|i| curve.point(i as f64 / segments as f64))
        .collect()
}
