//! Scene definition and I/O: the coils, measured pairs with targets,
//! constraints and numerical settings of one optimization problem, plus the
//! JSON file format and result exporters.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::constraints::{BoundKind, BoundSpec, LengthSpec};
use crate::curve::{circle_coil, torus_coil, CoilCurve, Vec3};
use crate::error::{Error, Result};
use crate::objective::PairSpec;
use crate::quadrature::gauss_legendre;
use crate::solver::SolverConfig;

/// How a designable coil's control points map to design variables.
#[derive(Debug, Clone, PartialEq)]
pub enum Coupling {
    /// Every control-point coordinate is its own variable.
    Free,
    /// All control points move radially in lockstep about `center`; the
    /// single design variable is the nominal radius.
    Radial { center: Vec3 },
}

/// One coil in a scene. The current only matters for field export; mutual
/// inductances are current-independent.
#[derive(Debug, Clone)]
pub struct SceneCoil {
    pub curve: CoilCurve,
    pub designable: bool,
    pub current: f64,
    pub coupling: Coupling,
}

/// A fully validated optimization problem.
#[derive(Debug, Clone)]
pub struct Scene {
    pub mu: f64,
    pub quadrature: usize,
    pub coils: Vec<SceneCoil>,
    pub pairs: Vec<PairSpec>,
    pub bounds: Vec<BoundSpec>,
    pub length_specs: Vec<LengthSpec>,
    pub solver: SolverConfig,
    /// Coil lengths at load time, with this scene's quadrature; the length
    /// windows are anchored here so a later quadrature change cannot shift
    /// the feasible set mid-run.
    initial_lengths: Vec<f64>,
}

impl Scene {
    /// Validate and assemble a scene, caching the initial coil lengths with
    /// the scene's quadrature.
    pub fn new(
        mu: f64,
        quadrature: usize,
        coils: Vec<SceneCoil>,
        pairs: Vec<PairSpec>,
        bounds: Vec<BoundSpec>,
        length_specs: Vec<LengthSpec>,
        solver: SolverConfig,
    ) -> Result<Scene> {
        let rule = gauss_legendre(quadrature)?;
        if coils.is_empty() {
            return Err(Error::Scene("scene needs at least one coil".into()));
        }
        let mut labels: Vec<&str> = coils.iter().map(|c| c.curve.label()).collect();
        labels.sort_unstable();
        labels.dedup();
        if labels.len() != coils.len() {
            return Err(Error::Scene("coil labels must be unique".into()));
        }
        for p in &pairs {
            if p.alpha >= coils.len() || p.beta >= coils.len() {
                return Err(Error::Scene(format!(
                    "pair ({}, {}) references a coil outside 0..{}",
                    p.alpha,
                    p.beta,
                    coils.len()
                )));
            }
            if p.alpha == p.beta {
                return Err(Error::Scene(format!(
                    "pair ({}, {}) must reference two distinct coils",
                    p.alpha, p.beta
                )));
            }
        }
        for b in &bounds {
            if b.coil >= coils.len() {
                return Err(Error::Scene(format!("bounds reference unknown coil {}", b.coil)));
            }
            if !coils[b.coil].designable {
                return Err(Error::Scene(format!(
                    "bounds given for non-designable coil {:?}",
                    coils[b.coil].curve.label()
                )));
            }
            b.validate()?;
        }
        for l in &length_specs {
            if l.coil >= coils.len() {
                return Err(Error::Scene(format!(
                    "length constraint references unknown coil {}",
                    l.coil
                )));
            }
            l.validate()?;
        }
        solver.validate()?;
        let initial_lengths = coils.iter().map(|c| c.curve.length(&rule)).collect();
        Ok(Scene {
            mu,
            quadrature,
            coils,
            pairs,
            bounds,
            length_specs,
            solver,
            initial_lengths,
        })
    }

    pub fn initial_length(&self, coil: usize) -> f64 {
        self.initial_lengths[coil]
    }

    pub fn coil_index(&self, label: &str) -> Option<usize> {
        self.coils.iter().position(|c| c.curve.label() == label)
    }

    pub fn parse_str(text: &str) -> Result<Scene> {
        let file: SceneFile = serde_json::from_str(text)?;
        Scene::from_file(file)
    }

    pub fn load(path: &Path) -> Result<Scene> {
        let text = fs::read_to_string(path)?;
        Scene::parse_str(&text)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }

    fn from_file(file: SceneFile) -> Result<Scene> {
        let mu = file.mu.unwrap_or(1.0);
        let quadrature = file.quadrature.unwrap_or(16);
        if file.coils.is_empty() {
            return Err(Error::Scene("scene needs at least one coil".into()));
        }
        let mut coils = Vec::with_capacity(file.coils.len());
        for c in &file.coils {
            let degree = c.degree.unwrap_or(2);
            let curve = match &c.generator {
                GeneratorFile::Circle {
                    center,
                    radius,
                    axis,
                    count,
                } => {
                    let axis = axis.map(Vec3::from).unwrap_or(Vec3::new(0.0, 0.0, 1.0));
                    circle_coil(Vec3::from(*center), *radius, axis, *count, degree, &c.label)?
                }
                GeneratorFile::Torus {
                    outer_radius,
                    inner_radius,
                    turns,
                    count,
                } => torus_coil(*outer_radius, *inner_radius, *turns, *count, degree, &c.label)?,
                GeneratorFile::ExplicitCps { points } => {
                    let basis = crate::bspline::PeriodicBasis::new(degree, points.len())?;
                    CoilCurve::new(basis, points.iter().map(|&p| Vec3::from(p)).collect(), &c.label)?
                }
            };
            let coupling = match &c.coupling {
                None | Some(CouplingFile::Free) => Coupling::Free,
                Some(CouplingFile::Radial { center }) => Coupling::Radial {
                    center: Vec3::from(*center),
                },
            };
            coils.push(SceneCoil {
                curve,
                designable: c.designable,
                current: c.current.unwrap_or(0.0),
                coupling,
            });
        }

        let pairs = file
            .pairs
            .iter()
            .map(|p| PairSpec {
                alpha: p.alpha,
                beta: p.beta,
                target: p.target,
            })
            .collect();

        let find_coil = |label: &str| -> Result<usize> {
            coils
                .iter()
                .position(|c| c.curve.label() == label)
                .ok_or_else(|| Error::Scene(format!("unknown coil label {label:?}")))
        };

        let mut bounds = Vec::new();
        for b in &file.bounds {
            let coil = find_coil(&b.coil)?;
            if !coils[coil].designable {
                return Err(Error::Scene(format!(
                    "bounds given for non-designable coil {:?}",
                    b.coil
                )));
            }
            let kind = match (&coils[coil].coupling, &b.lower, &b.upper, b.radius_lower, b.radius_upper) {
                (Coupling::Free, lower, upper, None, None) => {
                    let to_abs = |v: &Option<[Option<f64>; 3]>, sign: f64| -> [f64; 3] {
                        match v {
                            Some(arr) => {
                                let mut out = [sign * f64::INFINITY; 3];
                                for (o, c) in out.iter_mut().zip(arr) {
                                    if let Some(val) = c {
                                        *o = *val;
                                    }
                                }
                                out
                            }
                            None => [sign * f64::INFINITY; 3],
                        }
                    };
                    BoundKind::PerControlPoint {
                        lower: to_abs(lower, -1.0),
                        upper: to_abs(upper, 1.0),
                    }
                }
                (Coupling::Radial { .. }, None, None, rl, ru) => BoundKind::Radius {
                    lower: rl.unwrap_or(f64::NEG_INFINITY),
                    upper: ru.unwrap_or(f64::INFINITY),
                },
                (Coupling::Free, ..) => {
                    return Err(Error::Scene(format!(
                        "coil {:?} is freely coupled; use per-axis lower/upper bounds",
                        b.coil
                    )));
                }
                (Coupling::Radial { .. }, ..) => {
                    return Err(Error::Scene(format!(
                        "coil {:?} is radially coupled; use radius_lower/radius_upper bounds",
                        b.coil
                    )));
                }
            };
            bounds.push(BoundSpec { coil, kind });
        }

        let mut length_specs = Vec::new();
        for l in &file.length_constraints {
            let coil = find_coil(&l.coil)?;
            length_specs.push(LengthSpec {
                coil,
                f_lower: l.f_lower,
                f_upper: l.f_upper,
            });
        }

        let solver = file.solver.unwrap_or_default().into_config()?;
        Scene::new(mu, quadrature, coils, pairs, bounds, length_specs, solver)
    }

    fn to_file(&self) -> SceneFile {
        SceneFile {
            mu: Some(self.mu),
            quadrature: Some(self.quadrature),
            coils: self
                .coils
                .iter()
                .map(|c| CoilFile {
                    label: c.curve.label().to_string(),
                    degree: Some(c.curve.basis().degree()),
                    designable: c.designable,
                    current: Some(c.current),
                    generator: GeneratorFile::ExplicitCps {
                        points: c.curve.control_points().iter().map(|&p| p.into()).collect(),
                    },
                    coupling: match c.coupling {
                        Coupling::Free => None,
                        Coupling::Radial { center } => {
                            Some(CouplingFile::Radial { center: center.into() })
                        }
                    },
                })
                .collect(),
            pairs: self
                .pairs
                .iter()
                .map(|p| PairFile {
                    alpha: p.alpha,
                    beta: p.beta,
                    target: p.target,
                })
                .collect(),
            bounds: self
                .bounds
                .iter()
                .map(|b| {
                    let finite = |v: f64| v.is_finite().then_some(v);
                    match b.kind {
                        BoundKind::PerControlPoint { lower, upper } => BoundFile {
                            coil: self.coils[b.coil].curve.label().to_string(),
                            lower: Some([finite(lower[0]), finite(lower[1]), finite(lower[2])]),
                            upper: Some([finite(upper[0]), finite(upper[1]), finite(upper[2])]),
                            radius_lower: None,
                            radius_upper: None,
                        },
                        BoundKind::Radius { lower, upper } => BoundFile {
                            coil: self.coils[b.coil].curve.label().to_string(),
                            lower: None,
                            upper: None,
                            radius_lower: finite(lower),
                            radius_upper: finite(upper),
                        },
                    }
                })
                .collect(),
            length_constraints: self
                .length_specs
                .iter()
                .map(|l| LengthFile {
                    coil: self.coils[l.coil].curve.label().to_string(),
                    f_lower: l.f_lower,
                    f_upper: l.f_upper,
                })
                .collect(),
            solver: Some(SolverFile {
                rel_tol_j: Some(self.solver.rel_tol_j),
                max_iters: Some(self.solver.max_iters),
            }),
        }
    }

    /// Scene with the same settings but new coil geometry (used to export an
    /// optimized state).
    pub fn with_coils(&self, curves: Vec<CoilCurve>) -> Result<Scene> {
        if curves.len() != self.coils.len() {
            return Err(Error::Scene(format!(
                "coil count mismatch: {} vs {}",
                curves.len(),
                self.coils.len()
            )));
        }
        let mut scene = self.clone();
        for (coil, curve) in scene.coils.iter_mut().zip(curves) {
            coil.curve = curve;
        }
        Ok(scene)
    }
}

// ---------------------------------------------------------------------------
// file schema

#[derive(Debug, Serialize, Deserialize)]
struct SceneFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    quadrature: Option<usize>,
    coils: Vec<CoilFile>,
    #[serde(default)]
    pairs: Vec<PairFile>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    bounds: Vec<BoundFile>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    length_constraints: Vec<LengthFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    solver: Option<SolverFile>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CoilFile {
    label: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    degree: Option<usize>,
    generator: GeneratorFile,
    #[serde(default)]
    designable: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    current: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    coupling: Option<CouplingFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
enum GeneratorFile {
    Circle {
        center: [f64; 3],
        radius: f64,
        #[serde(skip_serializing_if = "Option::is_none")]
        axis: Option<[f64; 3]>,
        count: usize,
    },
    Torus {
        outer_radius: f64,
        inner_radius: f64,
        turns: u32,
        count: usize,
    },
    ExplicitCps {
        points: Vec<[f64; 3]>,
    },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
enum CouplingFile {
    Free,
    Radial { center: [f64; 3] },
}

#[derive(Debug, Serialize, Deserialize)]
struct PairFile {
    alpha: usize,
    beta: usize,
    target: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct BoundFile {
    coil: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    lower: Option<[Option<f64>; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    upper: Option<[Option<f64>; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    radius_lower: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    radius_upper: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct LengthFile {
    coil: String,
    f_lower: f64,
    f_upper: f64,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct SolverFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    rel_tol_j: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_iters: Option<usize>,
}

impl SolverFile {
    fn into_config(self) -> Result<SolverConfig> {
        let mut cfg = SolverConfig::default();
        if let Some(tol) = self.rel_tol_j {
            cfg.rel_tol_j = tol;
        }
        if let Some(iters) = self.max_iters {
            cfg.max_iters = iters;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

// ---------------------------------------------------------------------------
// exporters

/// Write `content` to `path` atomically (temp file in the same directory,
/// then rename).
pub fn write_atomic(path: &Path, content: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let mut tmp = PathBuf::from(dir);
    tmp.push(format!(
        ".{}.tmp",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("out")
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(content)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    pub(crate) fn example2_json() -> String {
        r#"{
            "mu": 1.0,
            "quadrature": 16,
            "coils": [
                {"label": "C", "degree": 2, "designable": true, "current": 0.0,
                 "generator": {"type": "circle", "center": [1.0, 0.0, 1.0], "radius": 2.0, "count": 32}},
                {"label": "Cp", "degree": 2, "designable": false, "current": 1.0,
                 "generator": {"type": "circle", "center": [0.0, 0.0, 0.0], "radius": 1.0, "count": 32}}
            ],
            "pairs": [{"alpha": 0, "beta": 1, "target": 0.1}],
            "bounds": [{"coil": "C", "lower": [null, null, -0.5], "upper": [null, null, 0.5]}],
            "length_constraints": [{"coil": "C", "f_lower": 0.99, "f_upper": 1.01}]
        }"#
        .to_string()
    }

    #[test]
    fn parses_example2_fixture() {
        let scene = Scene::parse_str(&example2_json()).unwrap();
        assert_eq!(scene.coils.len(), 2);
        assert_eq!(scene.quadrature, 16);
        assert!(scene.coils[0].designable);
        assert!(!scene.coils[1].designable);
        assert_eq!(scene.pairs[0].target, 0.1);
        assert_abs_diff_eq!(scene.initial_length(0), 12.50594, epsilon = 1e-4);
        // z window is ±0.5, x and y unbounded
        match scene.bounds[0].kind {
            BoundKind::PerControlPoint { lower, upper } => {
                assert!(lower[0].is_infinite() && upper[1].is_infinite());
                assert_eq!(lower[2], -0.5);
                assert_eq!(upper[2], 0.5);
            }
            _ => panic!("expected per-control-point bounds"),
        }
    }

    #[test]
    fn rejects_duplicate_labels_and_bad_pairs() {
        let bad_label = example2_json().replace("\"Cp\"", "\"C\"");
        assert!(Scene::parse_str(&bad_label).is_err());
        let bad_pair = example2_json().replace("\"beta\": 1", "\"beta\": 0");
        assert!(Scene::parse_str(&bad_pair).is_err());
        let bad_index = example2_json().replace("\"beta\": 1", "\"beta\": 7");
        assert!(Scene::parse_str(&bad_index).is_err());
    }

    #[test]
    fn rejects_bounds_on_frozen_coil() {
        let bad = example2_json().replace("{\"coil\": \"C\",", "{\"coil\": \"Cp\",");
        assert!(Scene::parse_str(&bad).is_err());
    }

    #[test]
    fn roundtrip_preserves_numbers_exactly() {
        let scene = Scene::parse_str(&example2_json()).unwrap();
        let text = scene.to_json_string().unwrap();
        let again = Scene::parse_str(&text).unwrap();
        for (a, b) in scene.coils.iter().zip(&again.coils) {
            assert_eq!(a.curve.control_points(), b.curve.control_points());
            assert_eq!(a.current, b.current);
        }
        assert_eq!(scene.mu, again.mu);
        assert_eq!(scene.pairs[0].target, again.pairs[0].target);
        assert_eq!(scene.initial_length(0), again.initial_length(0));
    }

    #[test]
    fn radial_coupling_parses() {
        let json = r#"{
            "coils": [
                {"label": "C", "designable": true,
                 "generator": {"type": "circle", "center": [0,0,0], "radius": 1.0, "count": 32},
                 "coupling": {"type": "radial", "center": [0.0, 0.0, 0.0]}},
                {"label": "Cp",
                 "generator": {"type": "circle", "center": [0,0,-1], "radius": 1.0, "count": 32}}
            ],
            "pairs": [{"alpha": 0, "beta": 1, "target": 0.0}]
        }"#;
        let scene = Scene::parse_str(json).unwrap();
        assert_eq!(
            scene.coils[0].coupling,
            Coupling::Radial { center: Vec3::ZERO }
        );
        assert_eq!(scene.mu, 1.0);
        assert_eq!(scene.quadrature, 16);
    }

    #[test]
    fn atomic_write_creates_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.txt");
        write_atomic(&path, b"hello").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "hello");
    }
}
