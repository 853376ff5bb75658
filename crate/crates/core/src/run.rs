//! End-to-end runs over a scene: build the NLP callbacks from the objective
//! and constraint modules, drive the solver, summarize, and export.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::constraints::{bound_vectors, length_constraint_gradients, length_constraints};
use crate::curve::CoilCurve;
use crate::em;
use crate::error::{Error, Result};
use crate::objective::{objective, objective_gradient, objective_value_gradient_with, DesignMap};
use crate::oracle::finite_difference_gradient;
use crate::quadrature::gauss_legendre;
use crate::scene::{write_atomic, Scene};
use crate::solver::{minimize, NlpProblem, OptimizationTrace, SolverStatus, ValueGrad};

#[derive(Debug, Clone, Serialize)]
pub struct PairResult {
    pub alpha: usize,
    pub beta: usize,
    pub label_alpha: String,
    pub label_beta: String,
    pub mutual_inductance: f64,
    pub target: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoilReport {
    pub label: String,
    pub length: f64,
    pub initial_length: f64,
    /// Feasible window [f_lower·ℓ_init, f_upper·ℓ_init] when the coil has a
    /// length constraint.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub length_window: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub status: SolverStatus,
    pub iterations: usize,
    pub final_j: f64,
    pub maximize: bool,
    pub pairs: Vec<PairResult>,
    pub coils: Vec<CoilReport>,
    pub message: String,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub x: Vec<f64>,
    pub curves: Vec<CoilCurve>,
    pub trace: OptimizationTrace,
    pub summary: RunSummary,
}

/// Mutual inductance of every measured pair at the scene's current geometry.
pub fn evaluate_pairs(scene: &Scene) -> Result<Vec<PairResult>> {
    let rule = gauss_legendre(scene.quadrature)?;
    scene
        .pairs
        .iter()
        .map(|p| {
            let m = em::mutual_inductance(
                &scene.coils[p.alpha].curve,
                &scene.coils[p.beta].curve,
                &rule,
                scene.mu,
            )?;
            Ok(PairResult {
                alpha: p.alpha,
                beta: p.beta,
                label_alpha: scene.coils[p.alpha].curve.label().to_string(),
                label_beta: scene.coils[p.beta].curve.label().to_string(),
                mutual_inductance: m,
                target: p.target,
            })
        })
        .collect()
}

/// Run the constrained optimization on a scene. `maximize` negates the
/// objective and gradient (the trace then records the negated values); the
/// summary always reports the true J.
pub fn optimize_scene(scene: &Scene, maximize: bool) -> Result<RunOutcome> {
    let map = DesignMap::new(scene)?;
    if map.dim() == 0 {
        return Err(Error::Scene(
            "scene has no designable coils: empty design vector".into(),
        ));
    }
    if scene.pairs.is_empty() {
        return Err(Error::Scene("scene has no measured pairs".into()));
    }
    let x0 = map.pack(scene);
    let (lower, upper) = bound_vectors(scene)?;
    let sign = if maximize { -1.0 } else { 1.0 };

    let objective_cb: ValueGrad = {
        let map = map.clone();
        Box::new(move |x: &[f64]| {
            let (j, mut g) = objective_value_gradient_with(scene, &map, x)?;
            for v in &mut g {
                *v *= sign;
            }
            Ok((sign * j, g))
        })
    };

    let mut inequalities: Vec<ValueGrad> = Vec::new();
    for (ci, _spec) in scene.length_specs.iter().enumerate() {
        // lower window side: g = -ℓ + f_lower·ℓ_init
        inequalities.push(Box::new(move |x: &[f64]| {
            let g = length_constraints(scene, x)?[ci].0;
            let grad = length_constraint_gradients(scene, x)?[ci].0.clone();
            Ok((g, grad))
        }));
        // upper window side: g = ℓ - f_upper·ℓ_init
        inequalities.push(Box::new(move |x: &[f64]| {
            let g = length_constraints(scene, x)?[ci].1;
            let grad = length_constraint_gradients(scene, x)?[ci].1.clone();
            Ok((g, grad))
        }));
    }

    let aux_map = map.clone();
    let rule = gauss_legendre(scene.quadrature)?;
    let aux_rule = rule.clone();
    let problem = NlpProblem {
        dim: map.dim(),
        objective: objective_cb,
        inequalities,
        lower,
        upper,
        aux: Some(Box::new(move |x: &[f64]| match aux_map.apply(scene, x) {
            Ok(curves) => curves.iter().map(|c| c.length(&aux_rule)).collect(),
            Err(_) => vec![f64::NAN; scene.coils.len()],
        })),
        aux_labels: scene
            .coils
            .iter()
            .map(|c| format!("length_{}", c.curve.label()))
            .collect(),
    };

    let (x, trace) = minimize(&problem, &x0, &scene.solver)?;
    let curves = map.apply(scene, &x)?;
    let final_scene = scene.with_coils(curves.clone())?;
    let final_j = objective(scene, &x)?;
    let pairs = evaluate_pairs(&final_scene)?;
    let coils = scene
        .coils
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let window = scene
                .length_specs
                .iter()
                .find(|l| l.coil == i)
                .map(|l| {
                    let init = scene.initial_length(i);
                    (l.f_lower * init, l.f_upper * init)
                });
            CoilReport {
                label: c.curve.label().to_string(),
                length: curves[i].length(&rule),
                initial_length: scene.initial_length(i),
                length_window: window,
            }
        })
        .collect();

    let summary = RunSummary {
        status: trace.status,
        iterations: trace.records.last().map(|r| r.iter).unwrap_or(0),
        final_j,
        maximize,
        pairs,
        coils,
        message: trace.message.clone(),
    };
    Ok(RunOutcome {
        x,
        curves,
        trace,
        summary,
    })
}

/// Per-coil comparison of the analytic objective gradient (and any length
/// constraint gradients) against central finite differences.
#[derive(Debug, Clone, Serialize)]
pub struct GradCheckReport {
    pub step: f64,
    pub coils: Vec<CoilGradCheck>,
    pub max_rel_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoilGradCheck {
    pub label: String,
    pub objective_rel_error: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub length_rel_error: Option<f64>,
}

/// Relative error with an absolute floor, so exact zeros compare cleanly.
fn rel_error(analytic: &[f64], fd: &[f64]) -> f64 {
    let scale = analytic
        .iter()
        .fold(0.0f64, |a, v| a.max(v.abs()))
        .max(1e-12);
    analytic
        .iter()
        .zip(fd)
        .map(|(a, f)| (a - f).abs() / scale)
        .fold(0.0, f64::max)
}

pub fn gradient_check(scene: &Scene, step: f64) -> Result<GradCheckReport> {
    let map = DesignMap::new(scene)?;
    if map.dim() == 0 {
        return Err(Error::Scene(
            "scene has no designable coils: empty design vector".into(),
        ));
    }
    let x = map.pack(scene);
    let analytic = objective_gradient(scene, &x)?;
    let fd = finite_difference_gradient(|v| objective(scene, v), &x, step)?;

    let length_grads = length_constraint_gradients(scene, &x)?;
    let mut coils = Vec::new();
    let mut overall = 0.0f64;
    for (i, coil) in scene.coils.iter().enumerate() {
        let Some(range) = map.coil_slice(i) else {
            continue;
        };
        let obj_err = rel_error(&analytic[range.clone()], &fd[range.clone()]);
        overall = overall.max(obj_err);
        let mut len_err = None;
        for (ci, spec) in scene.length_specs.iter().enumerate() {
            if spec.coil != i {
                continue;
            }
            let fd_len = finite_difference_gradient(
                |v| Ok(length_constraints(scene, v)?[ci].0),
                &x,
                step,
            )?;
            let e = rel_error(&length_grads[ci].0[range.clone()], &fd_len[range.clone()]);
            len_err = Some(len_err.unwrap_or(0.0f64).max(e));
            overall = overall.max(e);
        }
        coils.push(CoilGradCheck {
            label: coil.curve.label().to_string(),
            objective_rel_error: obj_err,
            length_rel_error: len_err,
        });
    }
    Ok(GradCheckReport {
        step,
        coils,
        max_rel_error: overall,
    })
}

/// Write the artifacts of a completed run into `out_dir`: summary JSON,
/// trace CSV, the optimized scene, and per-coil control-point and polyline
/// CSVs. Files are written atomically.
pub fn export_results(scene: &Scene, outcome: &RunOutcome, out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir)?;

    let summary = serde_json::to_string_pretty(&outcome.summary)?;
    write_atomic(&out_dir.join("summary.json"), summary.as_bytes())?;

    let mut trace_csv = Vec::new();
    outcome.trace.write_csv(&mut trace_csv)?;
    write_atomic(&out_dir.join("trace.csv"), &trace_csv)?;

    let optimized = scene.with_coils(outcome.curves.clone())?;
    write_atomic(
        &out_dir.join("scene_optimized.json"),
        optimized.to_json_string()?.as_bytes(),
    )?;

    for curve in &outcome.curves {
        let mut cps = String::from("m,x,y,z\n");
        for (m, p) in curve.control_points().iter().enumerate() {
            cps.push_str(&format!("{m},{:.17e},{:.17e},{:.17e}\n", p.x, p.y, p.z));
        }
        write_atomic(&out_dir.join(format!("cps_{}.csv", curve.label())), cps.as_bytes())?;

        let mut poly = Vec::new();
        curve.write_polyline_csv(256, &mut poly)?;
        write_atomic(
            &out_dir.join(format!("polyline_{}.csv", curve.label())),
            &poly,
        )?;
    }
    Ok(())
}
