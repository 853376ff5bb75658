//! Property tests for the structural invariants: partition of unity,
//! pack/unpack bijectivity, and the homogeneity of length and mutual
//! inductance under uniform scaling.

use coilflux::bspline::PeriodicBasis;
use coilflux::curve::Vec3;
use coilflux::em;
use coilflux::objective::{pack, unpack, PairSpec};
use coilflux::scene::{Coupling, Scene, SceneCoil};
use coilflux::solver::SolverConfig;
use coilflux::{circle_coil, gauss_legendre, CoilCurve};
use proptest::prelude::*;

fn arb_basis() -> impl Strategy<Value = PeriodicBasis> {
    (1usize..=3, 0usize..40).prop_map(|(p, extra)| PeriodicBasis::new(p, p + 2 + extra).unwrap())
}

fn curve_from(points: &[(f64, f64, f64)], degree: usize) -> CoilCurve {
    let basis = PeriodicBasis::new(degree, points.len()).unwrap();
    let cps = points.iter().map(|&(x, y, z)| Vec3::new(x, y, z)).collect();
    CoilCurve::new(basis, cps, "prop").unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partition_of_unity_everywhere(basis in arb_basis(), t in 0.0f64..=1.0) {
        let n = basis.count();
        let sum: f64 = (0..n).map(|m| basis.value(m, t).unwrap()).sum();
        prop_assert!((sum - 1.0).abs() <= 1e-12, "sum {} at t={}", sum, t);
        let dsum: f64 = (0..n).map(|m| basis.derivative(m, t).unwrap()).sum();
        prop_assert!(dsum.abs() <= 1e-9 * n as f64, "derivative sum {} at t={}", dsum, t);
    }

    #[test]
    fn basis_values_in_unit_range(basis in arb_basis(), t in 0.0f64..=1.0, m_seed in 0usize..1000) {
        let m = m_seed % basis.count();
        let v = basis.value(m, t).unwrap();
        prop_assert!((0.0..=1.0 + 1e-15).contains(&v));
    }

    #[test]
    fn length_scales_linearly(
        points in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0), 5..20),
        lambda in 0.3f64..4.0,
    ) {
        let curve = curve_from(&points, 2);
        let rule = gauss_legendre(8).unwrap();
        let len = curve.length(&rule);
        prop_assume!(len > 1e-6);
        let scaled = curve
            .with_control_points(curve.control_points().iter().map(|&p| p * lambda).collect())
            .unwrap();
        let ratio = scaled.length(&rule) / len;
        prop_assert!((ratio - lambda).abs() <= 1e-12 * lambda.max(1.0));
    }
}

proptest! {
    // mutual-inductance cases cost a full double contour integral each
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn mutual_inductance_homogeneous_degree_one(lambda in 0.5f64..3.0, dz in 0.6f64..2.0) {
        let rule = gauss_legendre(8).unwrap();
        let axis = Vec3::new(0.0, 0.0, 1.0);
        let a = circle_coil(Vec3::ZERO, 1.0, axis, 10, 2, "a").unwrap();
        let b = circle_coil(Vec3::new(0.0, 0.3, dz), 0.8, axis, 12, 2, "b").unwrap();
        let m = em::mutual_inductance(&a, &b, &rule, 1.0).unwrap();
        let scale = |c: &CoilCurve| {
            c.with_control_points(c.control_points().iter().map(|&p| p * lambda).collect())
                .unwrap()
        };
        let ms = em::mutual_inductance(&scale(&a), &scale(&b), &rule, 1.0).unwrap();
        prop_assert!(((ms - lambda * m) / (lambda * m)).abs() <= 1e-12);
    }

    #[test]
    fn pack_unpack_roundtrip(
        points in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0), 6..16),
        offset in -3.0f64..3.0,
    ) {
        let designable = curve_from(&points, 2);
        let frozen_points: Vec<(f64, f64, f64)> =
            points.iter().map(|&(x, y, z)| (x, y, z + offset + 5.0)).collect();
        let frozen = CoilCurve::new(
            PeriodicBasis::new(2, frozen_points.len()).unwrap(),
            frozen_points.iter().map(|&(x, y, z)| Vec3::new(x, y, z)).collect(),
            "frozen",
        )
        .unwrap();
        let scene = Scene::new(
            1.0,
            4,
            vec![
                SceneCoil { curve: designable, designable: true, current: 0.0, coupling: Coupling::Free },
                SceneCoil { curve: frozen, designable: false, current: 0.0, coupling: Coupling::Free },
            ],
            vec![PairSpec { alpha: 0, beta: 1, target: 0.0 }],
            vec![],
            vec![],
            SolverConfig::default(),
        )
        .unwrap();
        let x = pack(&scene).unwrap();
        prop_assert_eq!(x.len(), 3 * points.len());
        let curves = unpack(&scene, &x).unwrap();
        for (coil, curve) in scene.coils.iter().zip(&curves) {
            prop_assert_eq!(coil.curve.control_points(), curve.control_points());
        }
    }
}
