//! The scalar objective `J = ½ Σ_κ (M_κ - M̄_κ)²` over the scene's measured
//! coil pairs, its gradient in the packed design vector, and the
//! pack/unpack convention itself.
//!
//! Design-vector layout: designable coils in scene order; a freely coupled
//! coil contributes its control points in index order, each as (x, y, z);
//! a radially coupled coil contributes a single variable, its nominal
//! radius. Frozen coils contribute nothing but still participate in every
//! mutual-inductance evaluation.

use crate::curve::{CoilCurve, Vec3};
use crate::em;
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;
use crate::scene::{Coupling, Scene};

/// One measured coil pair with its target mutual inductance (henry).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairSpec {
    pub alpha: usize,
    pub beta: usize,
    pub target: f64,
}

#[derive(Debug, Clone)]
enum DesignKind {
    Free {
        count: usize,
    },
    Radial {
        center: Vec3,
        base_cps: Vec<Vec3>,
        base_radius: f64,
    },
}

#[derive(Debug, Clone)]
struct DesignEntry {
    coil: usize,
    offset: usize,
    kind: DesignKind,
}

/// Bijective map between the designable coils' geometry and the flat design
/// vector.
#[derive(Debug, Clone)]
pub struct DesignMap {
    entries: Vec<DesignEntry>,
    dim: usize,
}

impl DesignMap {
    pub fn new(scene: &Scene) -> Result<Self> {
        let mut entries = Vec::new();
        let mut offset = 0;
        for (i, coil) in scene.coils.iter().enumerate() {
            if !coil.designable {
                continue;
            }
            let kind = match &coil.coupling {
                Coupling::Free => {
                    let count = coil.curve.control_points().len();
                    let kind = DesignKind::Free { count };
                    offset += 3 * count;
                    kind
                }
                Coupling::Radial { center } => {
                    let base_cps = coil.curve.control_points().to_vec();
                    let base_radius = base_cps.iter().map(|&p| (p - *center).norm()).sum::<f64>()
                        / base_cps.len() as f64;
                    if base_radius <= 0.0 {
                        return Err(Error::Scene(format!(
                            "radially coupled coil {:?} has zero nominal radius",
                            coil.curve.label()
                        )));
                    }
                    offset += 1;
                    DesignKind::Radial {
                        center: *center,
                        base_cps,
                        base_radius,
                    }
                }
            };
            let entry_offset = match &kind {
                DesignKind::Free { count } => offset - 3 * count,
                DesignKind::Radial { .. } => offset - 1,
            };
            entries.push(DesignEntry {
                coil: i,
                offset: entry_offset,
                kind,
            });
        }
        Ok(Self { entries, dim: offset })
    }

    /// Total number of design variables (3·ΣN over free coils plus one per
    /// radial coil).
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Coil indices that contribute design variables, in packing order.
    pub fn designable_coils(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.coil).collect()
    }

    /// Variable range of one designable coil in the packed vector.
    pub fn coil_slice(&self, coil: usize) -> Option<std::ops::Range<usize>> {
        self.entries.iter().find(|e| e.coil == coil).map(|e| {
            let len = match &e.kind {
                DesignKind::Free { count } => 3 * count,
                DesignKind::Radial { .. } => 1,
            };
            e.offset..e.offset + len
        })
    }

    /// Flatten the scene's current designable geometry into a design vector.
    pub fn pack(&self, scene: &Scene) -> Vec<f64> {
        let mut x = vec![0.0; self.dim];
        for entry in &self.entries {
            match &entry.kind {
                DesignKind::Free { .. } => {
                    let cps = scene.coils[entry.coil].curve.control_points();
                    for (m, p) in cps.iter().enumerate() {
                        x[entry.offset + 3 * m] = p.x;
                        x[entry.offset + 3 * m + 1] = p.y;
                        x[entry.offset + 3 * m + 2] = p.z;
                    }
                }
                DesignKind::Radial { base_radius, .. } => {
                    x[entry.offset] = *base_radius;
                }
            }
        }
        x
    }

    /// Realize a design vector as coil curves (frozen coils pass through
    /// unchanged). Inverse of `pack` on the designable coils.
    pub fn apply(&self, scene: &Scene, x: &[f64]) -> Result<Vec<CoilCurve>> {
        if x.len() != self.dim {
            return Err(Error::DesignLengthMismatch {
                got: x.len(),
                expected: self.dim,
            });
        }
        let mut curves: Vec<CoilCurve> = scene.coils.iter().map(|c| c.curve.clone()).collect();
        for entry in &self.entries {
            match &entry.kind {
                DesignKind::Free { count } => {
                    let cps = (0..*count)
                        .map(|m| {
                            Vec3::new(
                                x[entry.offset + 3 * m],
                                x[entry.offset + 3 * m + 1],
                                x[entry.offset + 3 * m + 2],
                            )
                        })
                        .collect();
                    curves[entry.coil] = curves[entry.coil].with_control_points(cps)?;
                }
                DesignKind::Radial {
                    center,
                    base_cps,
                    base_radius,
                } => {
                    let radius = x[entry.offset];
                    let cps = if radius == *base_radius {
                        // exact round trip at the base state
                        base_cps.clone()
                    } else {
                        let scale = radius / base_radius;
                        base_cps
                            .iter()
                            .map(|&p| *center + (p - *center) * scale)
                            .collect()
                    };
                    curves[entry.coil] = curves[entry.coil].with_control_points(cps)?;
                }
            }
        }
        Ok(curves)
    }

    /// Scatter a per-control-point gradient of one coil into the packed
    /// layout, applying the coupling chain rule. No-op for frozen coils.
    pub fn scatter_gradient(&self, coil: usize, per_cp: &[Vec3], factor: f64, out: &mut [f64]) {
        let Some(entry) = self.entries.iter().find(|e| e.coil == coil) else {
            return;
        };
        match &entry.kind {
            DesignKind::Free { count } => {
                debug_assert_eq!(per_cp.len(), *count);
                for (m, g) in per_cp.iter().enumerate() {
                    out[entry.offset + 3 * m] += factor * g.x;
                    out[entry.offset + 3 * m + 1] += factor * g.y;
                    out[entry.offset + 3 * m + 2] += factor * g.z;
                }
            }
            DesignKind::Radial {
                center,
                base_cps,
                base_radius,
            } => {
                // dP_m/db = (P̄_m - o)/b̄, constant along the radial ray
                let mut acc = 0.0;
                for (g, p) in per_cp.iter().zip(base_cps) {
                    acc += g.dot(*p - *center) / base_radius;
                }
                out[entry.offset] += factor * acc;
            }
        }
    }
}

/// Pack the scene's designable geometry into a fresh design vector.
pub fn pack(scene: &Scene) -> Result<Vec<f64>> {
    Ok(DesignMap::new(scene)?.pack(scene))
}

/// Realize a design vector as coil curves.
pub fn unpack(scene: &Scene, x: &[f64]) -> Result<Vec<CoilCurve>> {
    DesignMap::new(scene)?.apply(scene, x)
}

/// `J(x) = ½ Σ_κ (M^{(α_κ,β_κ)} - M̄^{(α_κ,β_κ)})²`.
pub fn objective(scene: &Scene, x: &[f64]) -> Result<f64> {
    let map = DesignMap::new(scene)?;
    objective_with(scene, &map, x)
}

pub(crate) fn objective_with(scene: &Scene, map: &DesignMap, x: &[f64]) -> Result<f64> {
    let curves = map.apply(scene, x)?;
    let rule = gauss_legendre(scene.quadrature)?;
    let mut j = 0.0;
    for pair in &scene.pairs {
        let m = em::mutual_inductance(&curves[pair.alpha], &curves[pair.beta], &rule, scene.mu)?;
        j += 0.5 * (m - pair.target) * (m - pair.target);
    }
    Ok(j)
}

/// Gradient of `objective` in the packed layout: per pair, the residual
/// `(M - M̄)` times the shape sensitivities, accumulated into each
/// designable coil's slots. Deterministic pair-order summation.
pub fn objective_gradient(scene: &Scene, x: &[f64]) -> Result<Vec<f64>> {
    let map = DesignMap::new(scene)?;
    Ok(objective_value_gradient_with(scene, &map, x)?.1)
}

pub(crate) fn objective_value_gradient_with(
    scene: &Scene,
    map: &DesignMap,
    x: &[f64],
) -> Result<(f64, Vec<f64>)> {
    let curves = map.apply(scene, x)?;
    let rule = gauss_legendre(scene.quadrature)?;
    let mut j = 0.0;
    let mut grad = vec![0.0; map.dim()];
    for pair in &scene.pairs {
        let ca = &curves[pair.alpha];
        let cb = &curves[pair.beta];
        let (m, sens) = em::mi_with_sensitivity(ca, cb, &rule, scene.mu)?;
        let residual = m - pair.target;
        j += 0.5 * residual * residual;
        map.scatter_gradient(pair.alpha, &sens.d, residual, &mut grad);
        map.scatter_gradient(pair.beta, &sens.d_prime, residual, &mut grad);
    }
    Ok((j, grad))
}
