//! Closed coil curves: a periodic B-spline basis plus control points.
//!
//! A curve is `s(t) = Σ_m R^p_m(t) P_m` for `t` in [0, 1]; the periodic basis
//! makes it closed automatically. Control points are the design variables of
//! the shape optimization, so alongside evaluation this module carries the
//! arc length and its exact gradient with respect to the control points.

use std::io::Write;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::bspline::PeriodicBasis;
use crate::error::{Error, Result};
use crate::quadrature::QuadratureRule;

/// Cartesian point/vector in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn component(self, axis: usize) -> f64 {
        match axis {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        [v.x, v.y, v.z]
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        self * -1.0
    }
}

/// Degenerate-velocity threshold as a fraction of the bounding-box diagonal:
/// below it the length gradient would divide by a vanishing |s'(t)|.
const VELOCITY_EPS_FRACTION: f64 = 1e-12;

/// A closed wire coil as a periodic B-spline curve.
///
/// Control point index increases with the curve parameter; the current flows
/// in the direction of increasing `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoilCurve {
    basis: PeriodicBasis,
    control_points: Vec<Vec3>,
    label: String,
}

impl CoilCurve {
    pub fn new(basis: PeriodicBasis, control_points: Vec<Vec3>, label: impl Into<String>) -> Result<Self> {
        if control_points.len() != basis.count() {
            return Err(Error::InvalidParameter(format!(
                "control point count {} does not match basis count {}",
                control_points.len(),
                basis.count()
            )));
        }
        if let Some(p) = control_points.iter().find(|p| !p.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite control point {p:?}"
            )));
        }
        Ok(Self {
            basis,
            control_points,
            label: label.into(),
        })
    }

    pub fn basis(&self) -> &PeriodicBasis {
        &self.basis
    }

    pub fn control_points(&self) -> &[Vec3] {
        &self.control_points
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Replace the control points, keeping basis and label.
    pub fn with_control_points(&self, control_points: Vec<Vec3>) -> Result<Self> {
        Self::new(self.basis.clone(), control_points, self.label.clone())
    }

    /// Curve point `s(t) = Σ_m R^p_m(t) P_m`; only the `p+1` local basis
    /// functions contribute.
    pub fn point(&self, t: f64) -> Result<Vec3> {
        self.combine(t, false)
    }

    /// Curve velocity `ds/dt`.
    pub fn velocity(&self, t: f64) -> Result<Vec3> {
        self.combine(t, true)
    }

    fn combine(&self, t: f64, derivative: bool) -> Result<Vec3> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::ParamOutOfRange { t });
        }
        let n = self.basis.count();
        let mut acc = Vec3::ZERO;
        // Sum only over the basis functions supported at t. Interval k is
        // covered by m = (k - j) mod N for piece offsets j = 0..=p. The
        // derivative at t = 1 is the left limit, so it lives in the last
        // interval rather than the wrapped-around first one.
        let k = if derivative && t == 1.0 {
            n - 1
        } else {
            self.basis.locate(t).0
        };
        for j in 0..=self.basis.degree() {
            let m = (k + n - j) % n;
            let w = if derivative {
                self.basis.derivative(m, t)?
            } else {
                self.basis.value(m, t)?
            };
            acc += self.control_points[m] * w;
        }
        Ok(acc)
    }

    /// Diagonal of the axis-aligned bounding box of the control points.
    /// Scale reference for the degeneracy and near-singularity guards.
    pub fn bounding_box_diagonal(&self) -> f64 {
        let mut lo = self.control_points[0];
        let mut hi = lo;
        for p in &self.control_points {
            lo = Vec3::new(lo.x.min(p.x), lo.y.min(p.y), lo.z.min(p.z));
            hi = Vec3::new(hi.x.max(p.x), hi.y.max(p.y), hi.z.max(p.z));
        }
        (hi - lo).norm()
    }

    /// Arc length ∫ |s'(t)| dt, one Gauss–Legendre panel per knot interval.
    pub fn length(&self, rule: &QuadratureRule) -> f64 {
        let n = self.basis.count();
        let delta = self.basis.knot_span();
        let samples = SampledCurve::new(self, rule);
        let mut total = 0.0;
        for k in 0..n {
            for q in 0..rule.order() {
                total += rule.weights()[q] * 0.5 * delta * samples.vel[k * rule.order() + q].norm();
            }
        }
        total
    }

    /// Exact gradient of `length` with respect to each control point:
    /// component (k,l) is ∫ Ṙ^p_k s'_l / |s'| dt over the support of R^p_k.
    ///
    /// Errors with `DegenerateVelocity` if |s'| falls below
    /// 1e-12 × bounding-box diagonal at any quadrature node.
    pub fn length_gradient(&self, rule: &QuadratureRule) -> Result<Vec<Vec3>> {
        let n = self.basis.count();
        let p = self.basis.degree();
        let delta = self.basis.knot_span();
        let eps_v = VELOCITY_EPS_FRACTION * self.bounding_box_diagonal();
        let samples = SampledCurve::new(self, rule);
        let tables = BasisTables::new(&self.basis, rule);

        let mut grad = vec![Vec3::ZERO; n];
        for k in 0..n {
            for q in 0..rule.order() {
                let v = samples.vel[k * rule.order() + q];
                let speed = v.norm();
                if speed <= eps_v {
                    let t = (k as f64 + 0.5 * (rule.nodes()[q] + 1.0)) * delta;
                    return Err(Error::DegenerateVelocity {
                        t,
                        speed,
                        threshold: eps_v,
                    });
                }
                let w = rule.weights()[q] * 0.5 * delta;
                let unit = v * (1.0 / speed);
                for j in 0..=p {
                    let m = (k + n - j) % n;
                    grad[m] += unit * (w * tables.dval_dt[j][q]);
                }
            }
        }
        Ok(grad)
    }

    /// Sample the curve at `samples` uniform parameters (plus the closing
    /// point) and write CSV rows `t,x,y,z`.
    pub fn write_polyline_csv<W: Write>(&self, samples: usize, mut out: W) -> Result<()> {
        writeln!(out, "t,x,y,z")?;
        for i in 0..=samples {
            let t = i as f64 / samples as f64;
            let s = self.point(t)?;
            writeln!(out, "{t:.17e},{:.17e},{:.17e},{:.17e}", s.x, s.y, s.z)?;
        }
        Ok(())
    }
}

/// Basis piece values and parameter-derivatives at the quadrature nodes.
///
/// The local node coordinates repeat in every knot interval, so one table per
/// (basis, rule) pair serves the whole curve; `dval_dt` already carries the
/// 1/Δ factor.
pub(crate) struct BasisTables {
    pub val: Vec<Vec<f64>>,     // [piece j][node q]
    pub dval_dt: Vec<Vec<f64>>, // [piece j][node q]
}

impl BasisTables {
    pub fn new(basis: &PeriodicBasis, rule: &QuadratureRule) -> Self {
        let p = basis.degree();
        let n = basis.count() as f64;
        let mut val = vec![vec![0.0; rule.order()]; p + 1];
        let mut dval = vec![vec![0.0; rule.order()]; p + 1];
        for j in 0..=p {
            for (q, &xi) in rule.nodes().iter().enumerate() {
                let x = j as f64 + 0.5 * (xi + 1.0);
                val[j][q] = crate::bspline::piece_value(p, j, x);
                dval[j][q] = crate::bspline::piece_derivative(p, j, x) * n;
            }
        }
        Self { val, dval_dt: dval }
    }
}

/// Curve geometry evaluated at every quadrature node: position and velocity
/// for interval k, node q at index `k * order + q`.
pub(crate) struct SampledCurve {
    pub pos: Vec<Vec3>,
    pub vel: Vec<Vec3>,
}

impl SampledCurve {
    pub fn new(curve: &CoilCurve, rule: &QuadratureRule) -> Self {
        let basis = curve.basis();
        let n = basis.count();
        let p = basis.degree();
        let tables = BasisTables::new(basis, rule);
        let cps = curve.control_points();
        let mut pos = vec![Vec3::ZERO; n * rule.order()];
        let mut vel = vec![Vec3::ZERO; n * rule.order()];
        for k in 0..n {
            for q in 0..rule.order() {
                let mut s = Vec3::ZERO;
                let mut sd = Vec3::ZERO;
                for j in 0..=p {
                    let m = (k + n - j) % n;
                    s += cps[m] * tables.val[j][q];
                    sd += cps[m] * tables.dval_dt[j][q];
                }
                pos[k * rule.order() + q] = s;
                vel[k * rule.order() + q] = sd;
            }
        }
        Self { pos, vel }
    }
}

/// Coil with control points equally spaced ON a circle (not fitted to it),
/// counter-clockwise when viewed from +axis. The realized curve is a
/// slightly smaller near-circle; the shrinkage vanishes as N grows.
pub fn circle_coil(
    center: Vec3,
    radius: f64,
    axis: Vec3,
    n: usize,
    degree: usize,
    label: impl Into<String>,
) -> Result<CoilCurve> {
    if radius <= 0.0 || !radius.is_finite() {
        return Err(Error::InvalidParameter(format!("circle radius {radius}")));
    }
    if (axis.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "circle axis must be a unit vector, |axis| = {}",
            axis.norm()
        )));
    }
    let basis = PeriodicBasis::new(degree, n)?;
    // in-plane frame; for axis = +z this puts CP_0 on the +x axis
    let seed = if axis.x.abs() < 0.9 {
        Vec3::new(1.0, 0.0, 0.0)
    } else {
        Vec3::new(0.0, 1.0, 0.0)
    };
    let u_raw = seed - axis * seed.dot(axis);
    let u = u_raw * (1.0 / u_raw.norm());
    let v = axis.cross(u);
    let cps = (0..n)
        .map(|j| {
            let phi = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
            center + u * (radius * phi.cos()) + v * (radius * phi.sin())
        })
        .collect();
    CoilCurve::new(basis, cps, label)
}

/// Toroidal winding with control points on the torus surface:
/// `p(t) = ((a - b cos ft) cos t, (a - b cos ft) sin t, b sin ft)`
/// sampled at `t_j = 2π j / N`. `a`/`b` are the outer/inner radii and `f`
/// the number of turns.
pub fn torus_coil(
    outer_radius: f64,
    inner_radius: f64,
    turns: u32,
    n: usize,
    degree: usize,
    label: impl Into<String>,
) -> Result<CoilCurve> {
    if !(outer_radius > inner_radius && inner_radius > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "torus radii must satisfy a > b > 0 (a={outer_radius}, b={inner_radius})"
        )));
    }
    if turns == 0 {
        return Err(Error::InvalidParameter("torus needs at least one turn".into()));
    }
    let basis = PeriodicBasis::new(degree, n)?;
    let f = turns as f64;
    let cps = (0..n)
        .map(|j| {
            let t = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
            let r = outer_radius - inner_radius * (f * t).cos();
            Vec3::new(r * t.cos(), r * t.sin(), inner_radius * (f * t).sin())
        })
        .collect();
    CoilCurve::new(basis, cps, label)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gauss_legendre;
    use approx::assert_abs_diff_eq;

    fn unit_z() -> Vec3 {
        Vec3::new(0.0, 0.0, 1.0)
    }

    #[test]
    fn constant_control_points_give_constant_curve() {
        let basis = PeriodicBasis::new(2, 8).unwrap();
        let c = Vec3::new(0.3, -1.2, 2.5);
        let curve = CoilCurve::new(basis, vec![c; 8], "const").unwrap();
        for i in 0..=40 {
            let t = i as f64 / 40.0;
            let s = curve.point(t).unwrap();
            assert_abs_diff_eq!((s - c).norm(), 0.0, epsilon = 1e-14);
            assert_abs_diff_eq!(curve.velocity(t).unwrap().norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn realized_circle_lies_inside_control_circle() {
        let curve = circle_coil(Vec3::ZERO, 2.0, unit_z(), 32, 2, "c").unwrap();
        for i in 0..200 {
            let t = i as f64 / 200.0;
            let r = curve.point(t).unwrap().norm();
            assert!(r < 2.0, "t={t}: |s|={r}");
        }
    }

    #[test]
    fn translation_shifts_points_exactly() {
        let curve = circle_coil(Vec3::ZERO, 1.5, unit_z(), 16, 2, "c").unwrap();
        let u = Vec3::new(0.1, -0.7, 0.4);
        let shifted = curve
            .with_control_points(curve.control_points().iter().map(|&p| p + u).collect())
            .unwrap();
        for i in 0..=50 {
            let t = i as f64 / 50.0;
            let d = shifted.point(t).unwrap() - curve.point(t).unwrap() - u;
            assert_abs_diff_eq!(d.norm(), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn closure_at_parameter_wrap() {
        let curve = torus_coil(2.0, 1.0, 16, 64, 2, "t").unwrap();
        let gap = (curve.point(0.0).unwrap() - curve.point(1.0).unwrap()).norm();
        assert!(gap <= 1e-12);
        let approach = (curve.point(0.0).unwrap() - curve.point(1.0 - 1e-9).unwrap()).norm();
        assert!(approach <= 1e-6 * curve.bounding_box_diagonal());
    }

    #[test]
    fn degree_one_velocity_at_wrap_is_left_limit() {
        // piecewise-linear velocity jumps at knots; at t = 1 the last
        // segment's slope applies
        let basis = PeriodicBasis::new(1, 8).unwrap();
        let cps: Vec<Vec3> = (0..8)
            .map(|i| Vec3::new((i * i % 5) as f64, (i * 3 % 7) as f64, 0.0))
            .collect();
        let curve = CoilCurve::new(basis, cps, "poly").unwrap();
        let v_end = curve.velocity(1.0).unwrap();
        let v_near = curve.velocity(1.0 - 1e-9).unwrap();
        assert!((v_end - v_near).norm() <= 1e-6 * v_end.norm().max(1.0));
        // and the wrapped start generally differs (different segment)
        let v_start = curve.velocity(0.0).unwrap();
        assert!((v_end - v_start).norm() > 1.0);
    }

    #[test]
    fn velocity_matches_finite_differences() {
        let curve = circle_coil(Vec3::new(1.0, 0.0, 1.0), 2.0, unit_z(), 16, 2, "c").unwrap();
        let h = 1e-6;
        for i in 1..40 {
            let t = i as f64 / 41.0;
            let fd = (curve.point(t + h).unwrap() - curve.point(t - h).unwrap()) * (1.0 / (2.0 * h));
            let v = curve.velocity(t).unwrap();
            assert!((fd - v).norm() <= 1e-6 * v.norm().max(1.0), "t={t}");
        }
    }

    #[test]
    fn circle_velocity_near_tangent() {
        let curve = circle_coil(Vec3::ZERO, 1.3, unit_z(), 32, 2, "c").unwrap();
        for i in 0..64 {
            let t = (i as f64 + 0.37) / 64.0;
            let s = curve.point(t).unwrap();
            let v = curve.velocity(t).unwrap();
            let radial = v.dot(s).abs();
            assert!(radial <= 1e-3 * v.norm() * 1.3, "t={t}: {radial}");
        }
    }

    #[test]
    fn circle_control_point_placement() {
        let curve = circle_coil(Vec3::ZERO, 1.0, unit_z(), 32, 2, "c").unwrap();
        let cps = curve.control_points();
        assert_abs_diff_eq!((cps[0] - Vec3::new(1.0, 0.0, 0.0)).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((cps[8] - Vec3::new(0.0, 1.0, 0.0)).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn circle_rejects_non_unit_axis() {
        let err = circle_coil(Vec3::ZERO, 1.0, Vec3::new(0.0, 0.0, 1.1), 8, 2, "c");
        assert!(err.is_err());
    }

    #[test]
    fn circle_length_anchor() {
        // N=32 control points on a radius-2 circle: the realized closed
        // B-spline is slightly shorter than 4π
        let rule = gauss_legendre(16).unwrap();
        let curve = circle_coil(Vec3::new(1.0, 0.0, 1.0), 2.0, unit_z(), 32, 2, "c").unwrap();
        let len = curve.length(&rule);
        assert_abs_diff_eq!(len, 12.50594, epsilon = 1e-4);
        assert!(len < 4.0 * std::f64::consts::PI);
    }

    #[test]
    fn circle_deviation_shrinks_with_n() {
        let rule = gauss_legendre(16).unwrap();
        let dev = |n: usize| {
            let c = circle_coil(Vec3::ZERO, 1.0, unit_z(), n, 2, "c").unwrap();
            (0..100)
                .map(|i| (c.point(i as f64 / 100.0).unwrap().norm() - 1.0).abs())
                .fold(0.0f64, f64::max)
        };
        let _ = rule;
        let d8 = dev(8);
        let d16 = dev(16);
        let d32 = dev(32);
        assert!(d16 < d8 && d32 < d16, "{d8} {d16} {d32}");
    }

    #[test]
    fn torus_anchors() {
        let rule = gauss_legendre(16).unwrap();
        let curve = torus_coil(2.0, 1.0, 16, 64, 2, "t").unwrap();
        let cps = curve.control_points();
        assert_abs_diff_eq!((cps[0] - Vec3::new(1.0, 0.0, 0.0)).norm(), 0.0, epsilon = 1e-15);
        for p in cps {
            let ring = ((p.x * p.x + p.y * p.y).sqrt() - 2.0).powi(2) + p.z * p.z;
            assert_abs_diff_eq!(ring, 1.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(curve.length(&rule), 74.44167, epsilon = 1e-3);
    }

    #[test]
    fn length_scales_homogeneously() {
        let rule = gauss_legendre(16).unwrap();
        let curve = torus_coil(2.0, 1.0, 4, 32, 2, "t").unwrap();
        let lambda = 1.7;
        let scaled = curve
            .with_control_points(curve.control_points().iter().map(|&p| p * lambda).collect())
            .unwrap();
        let ratio = scaled.length(&rule) / curve.length(&rule);
        assert!((ratio - lambda).abs() / lambda <= 1e-12);
    }

    #[test]
    fn length_invariant_under_rotation() {
        let rule = gauss_legendre(16).unwrap();
        let curve = torus_coil(2.0, 1.0, 4, 32, 2, "t").unwrap();
        // rotate by 0.8 rad about x, then 1.1 rad about z
        let (ca, sa) = (0.8f64.cos(), 0.8f64.sin());
        let (cb, sb) = (1.1f64.cos(), 1.1f64.sin());
        let rot = |p: Vec3| {
            let q = Vec3::new(p.x, ca * p.y - sa * p.z, sa * p.y + ca * p.z);
            Vec3::new(cb * q.x - sb * q.y, sb * q.x + cb * q.y, q.z)
        };
        let rotated = curve
            .with_control_points(curve.control_points().iter().map(|&p| rot(p)).collect())
            .unwrap();
        let (l0, l1) = (curve.length(&rule), rotated.length(&rule));
        assert!((l1 - l0).abs() / l0 <= 1e-12);
    }

    #[test]
    fn length_gradient_matches_finite_differences() {
        let rule = gauss_legendre(16).unwrap();
        for n in [8usize, 16, 32] {
            // perturbed circle so the configuration has no special symmetry
            let base = circle_coil(Vec3::ZERO, 1.0, unit_z(), n, 2, "c").unwrap();
            let cps: Vec<Vec3> = base
                .control_points()
                .iter()
                .enumerate()
                .map(|(i, &p)| {
                    p + Vec3::new(
                        0.03 * ((i * 7 % 5) as f64 - 2.0),
                        0.02 * ((i * 3 % 7) as f64 - 3.0),
                        0.04 * ((i % 3) as f64 - 1.0),
                    )
                })
                .collect();
            let curve = base.with_control_points(cps).unwrap();
            let grad = curve.length_gradient(&rule).unwrap();
            let h = 1e-6;
            for m in 0..n {
                for axis in 0..3 {
                    let mut up = curve.control_points().to_vec();
                    let mut dn = up.clone();
                    let mut e = Vec3::ZERO;
                    match axis {
                        0 => e.x = h,
                        1 => e.y = h,
                        _ => e.z = h,
                    }
                    up[m] += e;
                    dn[m] += -e;
                    let lu = curve.with_control_points(up).unwrap().length(&rule);
                    let ld = curve.with_control_points(dn).unwrap().length(&rule);
                    let fd = (lu - ld) / (2.0 * h);
                    let exact = grad[m].component(axis);
                    let denom = exact.abs().max(1e-8);
                    assert!(
                        ((fd - exact) / denom).abs() <= 1e-6,
                        "n={n} m={m} axis={axis}: fd={fd} exact={exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn circle_length_gradient_is_radial() {
        let rule = gauss_legendre(16).unwrap();
        let curve = circle_coil(Vec3::ZERO, 1.0, unit_z(), 32, 2, "c").unwrap();
        let grad = curve.length_gradient(&rule).unwrap();
        for (m, g) in grad.iter().enumerate() {
            let radial = curve.control_points()[m];
            let cosang = (g.dot(radial) / (g.norm() * radial.norm())).clamp(-1.0, 1.0);
            assert!(cosang.acos() <= 1e-2, "m={m}: angle {}", cosang.acos());
        }
    }

    #[test]
    fn length_gradient_sums_to_zero() {
        let rule = gauss_legendre(16).unwrap();
        let curve = torus_coil(2.0, 1.0, 8, 48, 2, "t").unwrap();
        let grad = curve.length_gradient(&rule).unwrap();
        let total = grad.iter().fold(Vec3::ZERO, |a, &g| a + g);
        assert!(total.norm() <= 1e-10, "|sum| = {}", total.norm());
    }

    #[test]
    fn degenerate_curve_refuses_length_gradient() {
        let rule = gauss_legendre(8).unwrap();
        let basis = PeriodicBasis::new(2, 8).unwrap();
        let curve = CoilCurve::new(basis, vec![Vec3::new(1.0, 2.0, 3.0); 8], "point").unwrap();
        match curve.length_gradient(&rule) {
            Err(Error::DegenerateVelocity { .. }) => {}
            other => panic!("expected DegenerateVelocity, got {other:?}"),
        }
    }

    #[test]
    fn polyline_export_shape() {
        let curve = circle_coil(Vec3::ZERO, 1.0, unit_z(), 8, 2, "c").unwrap();
        let mut buf = Vec::new();
        curve.write_polyline_csv(16, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,x,y,z");
        assert_eq!(lines.len(), 18); // header + 17 samples (closing point included)
    }
}
