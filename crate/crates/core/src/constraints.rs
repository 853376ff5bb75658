//! Bound constraints on control-point displacement and nonlinear inequality
//! constraints on coil length, with gradients, all in the packed
//! design-vector layout.

use crate::curve::Vec3;
use crate::error::{Error, Result};
use crate::objective::DesignMap;
use crate::quadrature::gauss_legendre;
use crate::scene::{Coupling, Scene};

/// Sentinel magnitude standing in for an unbounded axis; the solver treats
/// anything at this magnitude as inactive.
pub const UNBOUNDED: f64 = 1e19;

/// Allowed displacement window of one designable coil, as offsets from the
/// initial geometry. Infinite entries mean unbounded; equal lower/upper
/// offsets freeze an axis.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundSpec {
    pub coil: usize,
    pub kind: BoundKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BoundKind {
    /// Per-axis offsets applied to every control point of a free-coupled coil.
    PerControlPoint { lower: [f64; 3], upper: [f64; 3] },
    /// Offsets on the single radius variable of a radially coupled coil.
    Radius { lower: f64, upper: f64 },
}

impl BoundSpec {
    pub fn validate(&self) -> Result<()> {
        let check = |lo: f64, up: f64, what: &str| -> Result<()> {
            if lo.is_nan() || up.is_nan() || lo > up {
                return Err(Error::Scene(format!(
                    "infeasible {what} bound offsets [{lo}, {up}]"
                )));
            }
            if lo > 0.0 || up < 0.0 {
                return Err(Error::Scene(format!(
                    "initial point infeasible: 0 outside {what} offsets [{lo}, {up}]"
                )));
            }
            Ok(())
        };
        match &self.kind {
            BoundKind::PerControlPoint { lower, upper } => {
                for axis in 0..3 {
                    check(lower[axis], upper[axis], ["x", "y", "z"][axis])?;
                }
            }
            BoundKind::Radius { lower, upper } => check(*lower, *upper, "radius")?,
        }
        Ok(())
    }
}

/// Relative length window of one coil: the length must stay within
/// `[f_lower, f_upper] × ℓ(x_init)`, with the initial length cached by the
/// scene at load time.
#[derive(Debug, Clone, PartialEq)]
pub struct LengthSpec {
    pub coil: usize,
    pub f_lower: f64,
    pub f_upper: f64,
}

impl LengthSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.f_lower > 0.0 && self.f_lower <= 1.0 && self.f_upper >= 1.0) {
            return Err(Error::Scene(format!(
                "length window fractions must satisfy 0 < f_lower <= 1 <= f_upper \
                 (got [{}, {}])",
                self.f_lower, self.f_upper
            )));
        }
        Ok(())
    }
}

/// Absolute bound vectors in the packed design layout. Unbounded slots carry
/// the ±1e19 sentinel; frozen axes produce equal lower/upper entries.
pub fn bound_vectors(scene: &Scene) -> Result<(Vec<f64>, Vec<f64>)> {
    let map = DesignMap::new(scene)?;
    let mut lower = vec![-UNBOUNDED; map.dim()];
    let mut upper = vec![UNBOUNDED; map.dim()];
    for spec in &scene.bounds {
        spec.validate()?;
        let Some(range) = map.coil_slice(spec.coil) else {
            return Err(Error::Scene(format!(
                "bounds reference coil {} which contributes no design variables",
                spec.coil
            )));
        };
        match (&spec.kind, &scene.coils[spec.coil].coupling) {
            (BoundKind::PerControlPoint { lower: lo, upper: up }, Coupling::Free) => {
                let cps = scene.coils[spec.coil].curve.control_points();
                for (m, p) in cps.iter().enumerate() {
                    for axis in 0..3 {
                        let idx = range.start + 3 * m + axis;
                        lower[idx] = if lo[axis].is_finite() {
                            p.component(axis) + lo[axis]
                        } else {
                            -UNBOUNDED
                        };
                        upper[idx] = if up[axis].is_finite() {
                            p.component(axis) + up[axis]
                        } else {
                            UNBOUNDED
                        };
                    }
                }
            }
            (BoundKind::Radius { lower: lo, upper: up }, Coupling::Radial { .. }) => {
                let base = map.pack(scene)[range.start];
                lower[range.start] = if lo.is_finite() { base + lo } else { -UNBOUNDED };
                upper[range.start] = if up.is_finite() { base + up } else { UNBOUNDED };
            }
            _ => {
                return Err(Error::Scene(format!(
                    "bound kind does not match the coupling of coil {}",
                    spec.coil
                )));
            }
        }
    }
    Ok((lower, upper))
}

/// Values `(g_lower, g_upper)` of every length constraint at design `x`;
/// both are ≤ 0 exactly when the coil length lies inside its window.
pub fn length_constraints(scene: &Scene, x: &[f64]) -> Result<Vec<(f64, f64)>> {
    let map = DesignMap::new(scene)?;
    let curves = map.apply(scene, x)?;
    let rule = gauss_legendre(scene.quadrature)?;
    scene
        .length_specs
        .iter()
        .map(|spec| {
            spec.validate()?;
            let len = curves[spec.coil].length(&rule);
            let init = scene.initial_length(spec.coil);
            Ok((
                -len + spec.f_lower * init, // g_lower
                len - spec.f_upper * init,  // g_upper
            ))
        })
        .collect()
}

/// Gradients `(∇g_lower, ∇g_upper)` of every length constraint in the packed
/// layout: ±∇ℓ scattered into the constrained coil's slots (zeros
/// elsewhere), with `∇g_upper = -∇g_lower` exactly.
pub fn length_constraint_gradients(scene: &Scene, x: &[f64]) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    let map = DesignMap::new(scene)?;
    let curves = map.apply(scene, x)?;
    let rule = gauss_legendre(scene.quadrature)?;
    scene
        .length_specs
        .iter()
        .map(|spec| {
            let mut grad_len = vec![0.0; map.dim()];
            // frozen coils contribute no variables; their window cannot move
            if map.coil_slice(spec.coil).is_some() {
                let per_cp: Vec<Vec3> = curves[spec.coil].length_gradient(&rule)?;
                map.scatter_gradient(spec.coil, &per_cp, 1.0, &mut grad_len);
            }
            let g_lower: Vec<f64> = grad_len.iter().map(|&v| -v).collect();
            Ok((g_lower, grad_len))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::pack;
    use crate::oracle::finite_difference_gradient;
    use approx::assert_abs_diff_eq;

    fn scene_with_two_constrained_coils() -> Scene {
        Scene::parse_str(
            r#"{
            "quadrature": 16,
            "coils": [
                {"label": "A", "designable": true,
                 "generator": {"type": "circle", "center": [0,0,0], "radius": 1.0, "count": 12}},
                {"label": "B", "designable": true,
                 "generator": {"type": "circle", "center": [0,0,2], "radius": 1.5, "count": 10}}
            ],
            "pairs": [{"alpha": 0, "beta": 1, "target": 0.0}],
            "bounds": [{"coil": "A", "lower": [null, null, -0.5], "upper": [null, null, 0.5]}],
            "length_constraints": [
                {"coil": "A", "f_lower": 0.99, "f_upper": 1.01},
                {"coil": "B", "f_lower": 0.95, "f_upper": 1.05}
            ]
        }"#,
        )
        .unwrap()
    }

    #[test]
    fn bound_vectors_layout() {
        let scene = scene_with_two_constrained_coils();
        let (lower, upper) = bound_vectors(&scene).unwrap();
        assert_eq!(lower.len(), 3 * 12 + 3 * 10);
        let cps = scene.coils[0].curve.control_points();
        for m in 0..12 {
            // x and y unbounded (sentinel), z windowed at ±0.5
            assert_eq!(lower[3 * m], -UNBOUNDED);
            assert_eq!(upper[3 * m + 1], UNBOUNDED);
            assert_abs_diff_eq!(lower[3 * m + 2], cps[m].z - 0.5, epsilon = 1e-15);
            assert_abs_diff_eq!(upper[3 * m + 2], cps[m].z + 0.5, epsilon = 1e-15);
        }
        // second coil has no bound spec at all
        for i in 36..66 {
            assert_eq!(lower[i], -UNBOUNDED);
            assert_eq!(upper[i], UNBOUNDED);
        }
    }

    #[test]
    fn zero_offset_bounds_freeze_to_initial() {
        let scene = Scene::parse_str(
            r#"{
            "coils": [
                {"label": "A", "designable": true,
                 "generator": {"type": "circle", "center": [0,0,0], "radius": 1.0, "count": 8}},
                {"label": "B", "generator": {"type": "circle", "center": [0,0,1], "radius": 1.0, "count": 8}}
            ],
            "pairs": [{"alpha": 0, "beta": 1, "target": 0.0}],
            "bounds": [{"coil": "A", "lower": [0.0, 0.0, 0.0], "upper": [0.0, 0.0, 0.0]}]
        }"#,
        )
        .unwrap();
        let (lower, upper) = bound_vectors(&scene).unwrap();
        let x = pack(&scene).unwrap();
        assert_eq!(lower, x);
        assert_eq!(upper, x);
    }

    #[test]
    fn infeasible_bound_spec_is_rejected() {
        let spec = BoundSpec {
            coil: 0,
            kind: BoundKind::PerControlPoint {
                lower: [0.1, 0.0, 0.0],
                upper: [0.2, 0.0, 0.0],
            },
        };
        assert!(spec.validate().is_err());
        let swapped = BoundSpec {
            coil: 0,
            kind: BoundKind::Radius { lower: 0.5, upper: -0.5 },
        };
        assert!(swapped.validate().is_err());
    }

    #[test]
    fn length_constraints_at_initial_point() {
        let scene = scene_with_two_constrained_coils();
        let x = pack(&scene).unwrap();
        let gs = length_constraints(&scene, &x).unwrap();
        let l0 = scene.initial_length(0);
        assert_abs_diff_eq!(gs[0].0, -0.01 * l0, epsilon = 1e-12);
        assert_abs_diff_eq!(gs[0].1, -0.01 * l0, epsilon = 1e-12);
        // strictly feasible whenever f_lower < 1 < f_upper
        assert!(gs.iter().all(|&(lo, up)| lo < 0.0 && up < 0.0));
    }

    #[test]
    fn length_fraction_validation() {
        let bad = LengthSpec { coil: 0, f_lower: 1.2, f_upper: 1.4 };
        assert!(bad.validate().is_err());
        let bad2 = LengthSpec { coil: 0, f_lower: 0.0, f_upper: 1.1 };
        assert!(bad2.validate().is_err());
    }

    #[test]
    fn gradients_match_finite_differences_and_mirror() {
        let scene = scene_with_two_constrained_coils();
        let mut x = pack(&scene).unwrap();
        // nudge off the symmetric configuration
        for (i, v) in x.iter_mut().enumerate() {
            *v += 1e-2 * ((i * 37 % 11) as f64 - 5.0) / 11.0;
        }
        let grads = length_constraint_gradients(&scene, &x).unwrap();
        for (ci, (g_lo, g_up)) in grads.iter().enumerate() {
            for (a, b) in g_lo.iter().zip(g_up) {
                assert_eq!(*a, -*b);
            }
            let fd = finite_difference_gradient(
                |v| Ok(length_constraints(&scene, v)?[ci].0),
                &x,
                1e-6,
            )
            .unwrap();
            let scale = g_lo.iter().fold(0.0f64, |acc, g| acc.max(g.abs()));
            for (i, (g, f)) in g_lo.iter().zip(&fd).enumerate() {
                assert!(
                    (g - f).abs() <= 1e-6 * scale.max(1e-12),
                    "constraint {ci} component {i}: {g} vs {f}"
                );
            }
        }
    }

    #[test]
    fn gradient_supported_only_on_own_coil() {
        let scene = scene_with_two_constrained_coils();
        let x = pack(&scene).unwrap();
        let grads = length_constraint_gradients(&scene, &x).unwrap();
        // constraint 0 on coil A occupies slots 0..36; constraint 1 the rest
        assert!(grads[0].0[36..].iter().all(|&v| v == 0.0));
        assert!(grads[0].0[..36].iter().any(|&v| v != 0.0));
        assert!(grads[1].0[..36].iter().all(|&v| v == 0.0));
        assert!(grads[1].0[36..].iter().any(|&v| v != 0.0));
    }
}
