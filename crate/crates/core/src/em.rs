//! Magnetostatics of wire coils: Biot–Savart field, vector potential, the
//! Neumann mutual inductance, its control-point coefficient matrix, and the
//! per-control-point shape sensitivities.
//!
//! All contour integrals are tensor-product Gauss–Legendre sums with one
//! panel per knot interval on each curve. Interval-pair terms are
//! accumulated in increasing interval order (parallel workers return their
//! rows, which are reduced sequentially), so results are reproducible run to
//! run; only reorderings below ~1e-15 relative ever appear between thread
//! counts, and tests absorb them.

use rayon::prelude::*;

use crate::curve::{BasisTables, CoilCurve, SampledCurve, Vec3};
use crate::error::{Error, Result};
use crate::quadrature::QuadratureRule;

/// Near-singularity guard: minimum node separation as a fraction of the
/// larger bounding-box diagonal. The 1/|s-s'| kernel is unbounded, so a
/// configuration below this is refused rather than silently polluted.
const SINGULAR_EPS_FRACTION: f64 = 1e-6;

const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

/// Control-point coefficient matrix `m_{a,b}` of the discretized Neumann
/// formula: `M = Σ_{a,b} m_{a,b} P_a · P'_b`.
#[derive(Debug, Clone)]
pub struct MICoefficients {
    coeffs: Vec<f64>,
    rows: usize,
    cols: usize,
    label_a: String,
    label_b: String,
}

impl MICoefficients {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.coeffs[a * self.cols + b]
    }

    pub fn labels(&self) -> (&str, &str) {
        (&self.label_a, &self.label_b)
    }

    /// `Σ_{a,b} m_{a,b} P_a · P'_b` for the given control points.
    pub fn reconstruct(&self, cps_a: &[Vec3], cps_b: &[Vec3]) -> Result<f64> {
        if cps_a.len() != self.rows || cps_b.len() != self.cols {
            return Err(Error::InvalidParameter(format!(
                "control point counts ({}, {}) do not match coefficient shape ({}, {})",
                cps_a.len(),
                cps_b.len(),
                self.rows,
                self.cols
            )));
        }
        let mut total = 0.0;
        for (a, pa) in cps_a.iter().enumerate() {
            let mut row = 0.0;
            for (b, pb) in cps_b.iter().enumerate() {
                row += self.get(a, b) * pa.dot(*pb);
            }
            total += row;
        }
        Ok(total)
    }
}

/// Shape sensitivities of one mutual inductance: `d[m] = ∂M/∂P_m` for the
/// first coil and `d_prime[n] = ∂M/∂P'_n` for the second.
#[derive(Debug, Clone)]
pub struct SensitivitySet {
    pub d: Vec<Vec3>,
    pub d_prime: Vec<Vec3>,
}

/// Geometry of one coil sampled at all quadrature nodes, with the per-node
/// integration weight (Gauss weight × Δ/2) attached.
struct CoilMesh<'c> {
    curve: &'c CoilCurve,
    samples: SampledCurve,
    tables: BasisTables,
    node_weight: Vec<f64>,
    order: usize,
}

impl<'c> CoilMesh<'c> {
    fn new(curve: &'c CoilCurve, rule: &QuadratureRule) -> Self {
        let delta = curve.basis().knot_span();
        Self {
            curve,
            samples: SampledCurve::new(curve, rule),
            tables: BasisTables::new(curve.basis(), rule),
            node_weight: rule.weights().iter().map(|w| 0.5 * w * delta).collect(),
            order: rule.order(),
        }
    }

    fn intervals(&self) -> usize {
        self.curve.basis().count()
    }

    fn degree(&self) -> usize {
        self.curve.basis().degree()
    }

    fn pos(&self, k: usize, q: usize) -> Vec3 {
        self.samples.pos[k * self.order + q]
    }

    fn vel(&self, k: usize, q: usize) -> Vec3 {
        self.samples.vel[k * self.order + q]
    }
}

fn guard_limit(a: &CoilCurve, b: &CoilCurve) -> f64 {
    SINGULAR_EPS_FRACTION * a.bounding_box_diagonal().max(b.bounding_box_diagonal())
}

fn check_point_distance(coil: &CoilMesh, x: Vec3, limit: f64) -> Result<()> {
    let mut min_dist = f64::INFINITY;
    for s in &coil.samples.pos {
        min_dist = min_dist.min((x - *s).norm());
    }
    if min_dist <= limit {
        return Err(Error::NearSingular { min_dist, limit });
    }
    Ok(())
}

/// Biot–Savart field of `coil` carrying `current` at point `x`:
/// `B(x) = (μ I / 4π) ∮ ds' × (x - s') / |x - s'|³`.
pub fn magnetic_field(
    coil: &CoilCurve,
    current: f64,
    x: Vec3,
    rule: &QuadratureRule,
    mu: f64,
) -> Result<Vec3> {
    let mesh = CoilMesh::new(coil, rule);
    check_point_distance(&mesh, x, SINGULAR_EPS_FRACTION * coil.bounding_box_diagonal())?;
    let mut acc = Vec3::ZERO;
    for k in 0..mesh.intervals() {
        for q in 0..mesh.order {
            let s = mesh.pos(k, q);
            let v = mesh.vel(k, q);
            let r = x - s;
            let dist = r.norm();
            acc += v.cross(r) * (mesh.node_weight[q] / (dist * dist * dist));
        }
    }
    Ok(acc * (mu * current / FOUR_PI))
}

/// Vector potential of `coil` carrying `current` at point `x`:
/// `A(x) = (μ I / 4π) ∮ ds' / |x - s'|`.
pub fn vector_potential(
    coil: &CoilCurve,
    current: f64,
    x: Vec3,
    rule: &QuadratureRule,
    mu: f64,
) -> Result<Vec3> {
    let mesh = CoilMesh::new(coil, rule);
    check_point_distance(&mesh, x, SINGULAR_EPS_FRACTION * coil.bounding_box_diagonal())?;
    let mut acc = Vec3::ZERO;
    for k in 0..mesh.intervals() {
        for q in 0..mesh.order {
            let s = mesh.pos(k, q);
            let v = mesh.vel(k, q);
            acc += v * (mesh.node_weight[q] / (x - s).norm());
        }
    }
    Ok(acc * (mu * current / FOUR_PI))
}

/// Flux of the field of `source` (carrying `current`) through `receiver`,
/// evaluated as the contour integral `∮ A · ds` on the receiver with the
/// same quadrature as everything else.
pub fn flux_through(
    receiver: &CoilCurve,
    source: &CoilCurve,
    current: f64,
    rule: &QuadratureRule,
    mu: f64,
) -> Result<f64> {
    let mesh = CoilMesh::new(receiver, rule);
    let mut total = 0.0;
    for k in 0..mesh.intervals() {
        for q in 0..mesh.order {
            let a = vector_potential(source, current, mesh.pos(k, q), rule, mu)?;
            total += mesh.node_weight[q] * a.dot(mesh.vel(k, q));
        }
    }
    Ok(total)
}

fn min_node_distance(a: &CoilMesh, b: &CoilMesh) -> f64 {
    a.samples
        .pos
        .par_iter()
        .map(|&sa| {
            b.samples
                .pos
                .iter()
                .map(|&sb| (sa - sb).norm())
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| f64::INFINITY, f64::min)
}

fn checked_meshes<'a>(
    coil_a: &'a CoilCurve,
    coil_b: &'a CoilCurve,
    rule: &QuadratureRule,
) -> Result<(CoilMesh<'a>, CoilMesh<'a>)> {
    let ma = CoilMesh::new(coil_a, rule);
    let mb = CoilMesh::new(coil_b, rule);
    let limit = guard_limit(coil_a, coil_b);
    let min_dist = min_node_distance(&ma, &mb);
    if min_dist <= limit {
        return Err(Error::NearSingular { min_dist, limit });
    }
    Ok((ma, mb))
}

/// Neumann mutual inductance `M = (μ/4π) ∮∮ ds · ds' / |s - s'|` between two
/// disjoint coils.
pub fn mutual_inductance(
    coil_a: &CoilCurve,
    coil_b: &CoilCurve,
    rule: &QuadratureRule,
    mu: f64,
) -> Result<f64> {
    let (ma, mb) = checked_meshes(coil_a, coil_b, rule)?;
    Ok(mutual_inductance_meshes(&ma, &mb, mu))
}

fn mutual_inductance_meshes(ma: &CoilMesh, mb: &CoilMesh, mu: f64) -> f64 {
    let rows: Vec<f64> = (0..ma.intervals())
        .into_par_iter()
        .map(|k| {
            let mut row = 0.0;
            for q in 0..ma.order {
                let sa = ma.pos(k, q);
                let va = ma.vel(k, q);
                let wa = ma.node_weight[q];
                for l in 0..mb.intervals() {
                    for r in 0..mb.order {
                        let diff = sa - mb.pos(l, r);
                        row += wa * mb.node_weight[r] * va.dot(mb.vel(l, r)) / diff.norm();
                    }
                }
            }
            row
        })
        .collect();
    rows.iter().sum::<f64>() * mu / FOUR_PI
}

/// The coefficient matrix `m_{a,b}` of Eq. `M = Σ m_{a,b} P_a · P'_b`;
/// each entry only sees the `(p+1) × (p'+1)` interval pairs where both basis
/// functions are supported.
pub fn mi_coefficients(
    coil_a: &CoilCurve,
    coil_b: &CoilCurve,
    rule: &QuadratureRule,
    mu: f64,
) -> Result<MICoefficients> {
    let (ma, mb) = checked_meshes(coil_a, coil_b, rule)?;
    let n_a = ma.intervals();
    let n_b = mb.intervals();
    let pa = ma.degree();
    let pb = mb.degree();

    // one row block per interval of A, merged in interval order
    let blocks: Vec<Vec<f64>> = (0..n_a)
        .into_par_iter()
        .map(|k| {
            let mut block = vec![0.0; (pa + 1) * n_b];
            for q in 0..ma.order {
                let sa = ma.pos(k, q);
                let wa = ma.node_weight[q];
                for l in 0..n_b {
                    for r in 0..mb.order {
                        let kern = wa * mb.node_weight[r] / (sa - mb.pos(l, r)).norm();
                        for ja in 0..=pa {
                            let da = ma.tables.dval_dt[ja][q];
                            for jb in 0..=pb {
                                let b = (l + n_b - jb) % n_b;
                                block[ja * n_b + b] += kern * da * mb.tables.dval_dt[jb][r];
                            }
                        }
                    }
                }
            }
            block
        })
        .collect();

    let mut coeffs = vec![0.0; n_a * n_b];
    for (k, block) in blocks.iter().enumerate() {
        for ja in 0..=pa {
            let a = (k + n_a - ja) % n_a;
            for b in 0..n_b {
                coeffs[a * n_b + b] += block[ja * n_b + b];
            }
        }
    }
    for c in &mut coeffs {
        *c *= mu / FOUR_PI;
    }
    Ok(MICoefficients {
        coeffs,
        rows: n_a,
        cols: n_b,
        label_a: coil_a.label().to_string(),
        label_b: coil_b.label().to_string(),
    })
}

/// Shape sensitivities `d_m = ∂M/∂P_m` and `d'_n = ∂M/∂P'_n`.
///
/// These are the exact derivatives of the quadrature-discretized Neumann sum,
/// so finite differences of `mutual_inductance` reproduce them to roundoff.
pub fn mi_sensitivity(
    coil_a: &CoilCurve,
    coil_b: &CoilCurve,
    rule: &QuadratureRule,
    mu: f64,
) -> Result<SensitivitySet> {
    Ok(mi_with_sensitivity(coil_a, coil_b, rule, mu)?.1)
}

/// Mutual inductance together with both sensitivity halves in one sweep;
/// the optimizer's hot path.
pub fn mi_with_sensitivity(
    coil_a: &CoilCurve,
    coil_b: &CoilCurve,
    rule: &QuadratureRule,
    mu: f64,
) -> Result<(f64, SensitivitySet)> {
    let (ma, mb) = checked_meshes(coil_a, coil_b, rule)?;
    let (m, d) = half_sensitivity(&ma, &mb, mu);
    let (_, d_prime) = half_sensitivity(&mb, &ma, mu);
    Ok((m, SensitivitySet { d, d_prime }))
}

/// Sensitivity of M with respect to the control points of the first mesh:
///
/// `d_m = (μ/4π) Σ_{k ∈ supp(R_m)} ∫_{I_k} ∫_{C'} [ Ṙ_m s'̇ / |s-s'|
///        - R_m (ṡ·ṡ')(s-s') / |s-s'|³ ] dt dt'`.
fn half_sensitivity(ma: &CoilMesh, mb: &CoilMesh, mu: f64) -> (f64, Vec<Vec3>) {
    let n_a = ma.intervals();
    let pa = ma.degree();

    let blocks: Vec<(f64, Vec<Vec3>)> = (0..n_a)
        .into_par_iter()
        .map(|k| {
            let mut mi_row = 0.0;
            let mut block = vec![Vec3::ZERO; pa + 1];
            for q in 0..ma.order {
                let sa = ma.pos(k, q);
                let va = ma.vel(k, q);
                let wa = ma.node_weight[q];
                // inner contour integrals over the other coil at this node
                let mut vel_over_r = Vec3::ZERO;
                let mut kernel_pull = Vec3::ZERO;
                for l in 0..mb.intervals() {
                    for r in 0..mb.order {
                        let wb = mb.node_weight[r];
                        let vb = mb.vel(l, r);
                        let diff = sa - mb.pos(l, r);
                        let dist = diff.norm();
                        vel_over_r += vb * (wb / dist);
                        kernel_pull += diff * (wb * va.dot(vb) / (dist * dist * dist));
                    }
                }
                mi_row += wa * va.dot(vel_over_r);
                for (j, slot) in block.iter_mut().enumerate() {
                    *slot += vel_over_r * (wa * ma.tables.dval_dt[j][q])
                        - kernel_pull * (wa * ma.tables.val[j][q]);
                }
            }
            (mi_row, block)
        })
        .collect();

    let mut mi = 0.0;
    let mut d = vec![Vec3::ZERO; n_a];
    for (k, (mi_row, block)) in blocks.iter().enumerate() {
        mi += mi_row;
        for (j, contrib) in block.iter().enumerate() {
            let m = (k + n_a - j) % n_a;
            d[m] += *contrib;
        }
    }
    for dm in &mut d {
        *dm = *dm * (mu / FOUR_PI);
    }
    (mi * mu / FOUR_PI, d)
}

/// Axis-aligned plane for field-grid export.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneSpec {
    /// 0 = x, 1 = y, 2 = z: the axis held constant.
    pub axis: usize,
    pub value: f64,
    /// Ranges and sample counts for the two remaining axes, in (x, y, z)
    /// order with `axis` removed.
    pub range_u: (f64, f64),
    pub range_v: (f64, f64),
    pub samples_u: usize,
    pub samples_v: usize,
}

impl PlaneSpec {
    fn point(&self, u: f64, v: f64) -> Vec3 {
        match self.axis {
            0 => Vec3::new(self.value, u, v),
            1 => Vec3::new(u, self.value, v),
            _ => Vec3::new(u, v, self.value),
        }
    }
}

/// Evaluate the total field of all (coil, current) pairs on a plane grid and
/// write CSV rows `x,y,z,Bx,By,Bz,Bmag`, with `Bmag` truncated at `cap` when
/// given. Grid points inside the near-singularity guard of any coil emit a
/// `singular` flag instead of field values.
pub fn write_field_grid_csv<W: std::io::Write>(
    coils: &[(&CoilCurve, f64)],
    plane: &PlaneSpec,
    rule: &QuadratureRule,
    mu: f64,
    cap: Option<f64>,
    mut out: W,
) -> Result<()> {
    if plane.samples_u < 2 || plane.samples_v < 2 {
        return Err(Error::InvalidParameter(
            "field grid needs at least 2 samples per axis".into(),
        ));
    }
    writeln!(out, "x,y,z,Bx,By,Bz,Bmag")?;
    for i in 0..plane.samples_u {
        let u = plane.range_u.0
            + (plane.range_u.1 - plane.range_u.0) * i as f64 / (plane.samples_u - 1) as f64;
        for j in 0..plane.samples_v {
            let v = plane.range_v.0
                + (plane.range_v.1 - plane.range_v.0) * j as f64 / (plane.samples_v - 1) as f64;
            let x = plane.point(u, v);
            let mut total = Vec3::ZERO;
            let mut singular = false;
            for &(coil, current) in coils {
                match magnetic_field(coil, current, x, rule, mu) {
                    Ok(b) => total += b,
                    Err(Error::NearSingular { .. }) => {
                        singular = true;
                        break;
                    }
                    Err(e) => return Err(e),
                }
            }
            if singular {
                writeln!(out, "{:.17e},{:.17e},{:.17e},nan,nan,nan,singular", x.x, x.y, x.z)?;
            } else {
                let mag = match cap {
                    Some(c) => total.norm().min(c),
                    None => total.norm(),
                };
                writeln!(
                    out,
                    "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                    x.x, x.y, x.z, total.x, total.y, total.z, mag
                )?;
            }
        }
    }
    Ok(())
}
