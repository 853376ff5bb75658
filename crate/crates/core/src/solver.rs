//! Constrained gradient-based NLP driver: sequential quadratic programming
//! with a damped BFGS approximation of the Lagrangian Hessian and an
//! L1-merit line search, minimizing a callback objective subject to box
//! bounds and nonlinear inequality constraints `g_i(x) <= 0`.
//!
//! The quadratic subproblem (minimize `½ dᵀB d + ∇Jᵀd` under the linearized
//! constraints and shifted bounds) is handed to a dual active-set QP solver;
//! bounds are therefore honored exactly at every accepted iterate rather
//! than penalized. Design variables whose lower and upper bounds coincide
//! are eliminated before the subproblem.

use std::io::Write;

use crate::error::{Error, Result};

/// Bounds at or beyond this magnitude are treated as absent in the QP.
const BOUND_ACTIVE_LIMIT: f64 = 1e18;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Stop when |J_k - J_{k-1}| / max(|J_k|, 1e-30) falls below this and the
    /// iterate is feasible.
    pub rel_tol_j: f64,
    pub max_iters: usize,
    /// Feasibility tolerance on every g_i at the returned point.
    pub constraint_tol: f64,
    /// Armijo sufficient-decrease coefficient of the merit line search.
    pub armijo_c: f64,
    /// Backtracking factor per rejected trial step.
    pub backtrack: f64,
    pub max_line_search: usize,
    /// Reset the BFGS matrix to identity when y·s <= this × |y||s|.
    pub curvature_reset: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rel_tol_j: 1e-5,
            max_iters: 1000,
            constraint_tol: 1e-8,
            armijo_c: 1e-4,
            backtrack: 0.5,
            max_line_search: 30,
            curvature_reset: 1e-12,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.rel_tol_j) {
            return Err(Error::InvalidParameter(format!(
                "rel_tol_j must be positive, got {}",
                self.rel_tol_j
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be at least 1".into()));
        }
        if !positive(self.backtrack) || self.backtrack >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "backtrack factor must lie in (0, 1), got {}",
                self.backtrack
            )));
        }
        if !positive(self.armijo_c) || self.armijo_c >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "armijo_c must lie in (0, 1), got {}",
                self.armijo_c
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverStatus {
    Converged,
    MaxIters,
    SolverFailure,
}

/// One accepted iterate. `aux` carries caller-defined observables (the scene
/// layer records per-coil lengths there).
#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub iter: usize,
    pub j: f64,
    pub max_violation: f64,
    pub step_norm: f64,
    pub aux: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct OptimizationTrace {
    pub records: Vec<IterationRecord>,
    pub status: SolverStatus,
    pub message: String,
    pub aux_labels: Vec<String>,
}

impl OptimizationTrace {
    /// CSV export: `iter,J,max_violation,<aux...>,step_norm`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        write!(out, "iter,J,max_violation")?;
        for label in &self.aux_labels {
            write!(out, ",{label}")?;
        }
        writeln!(out, ",step_norm")?;
        for r in &self.records {
            write!(out, "{},{:.17e},{:.17e}", r.iter, r.j, r.max_violation)?;
            for a in &r.aux {
                write!(out, ",{a:.17e}")?;
            }
            writeln!(out, ",{:.17e}", r.step_norm)?;
        }
        Ok(())
    }
}

/// Objective / constraint callback: x -> (value, gradient).
pub type ValueGrad<'a> = Box<dyn Fn(&[f64]) -> Result<(f64, Vec<f64>)> + 'a>;

/// Per-iterate observable callback recorded into the trace.
pub type AuxFn<'a> = Box<dyn Fn(&[f64]) -> Vec<f64> + 'a>;

pub struct NlpProblem<'a> {
    pub dim: usize,
    pub objective: ValueGrad<'a>,
    /// Inequalities g_i(x) <= 0 with gradients.
    pub inequalities: Vec<ValueGrad<'a>>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Optional per-iterate observables recorded in the trace.
    pub aux: Option<AuxFn<'a>>,
    pub aux_labels: Vec<String>,
}

impl<'a> NlpProblem<'a> {
    /// Unbounded problem; callers fill in constraints and bounds as needed.
    pub fn new(dim: usize, objective: ValueGrad<'a>) -> Self {
        Self {
            dim,
            objective,
            inequalities: Vec::new(),
            lower: vec![-crate::constraints::UNBOUNDED; dim],
            upper: vec![crate::constraints::UNBOUNDED; dim],
            aux: None,
            aux_labels: Vec::new(),
        }
    }
}

struct Evaluation {
    j: f64,
    grad: Vec<f64>,
    g: Vec<f64>,
    g_grads: Vec<Vec<f64>>,
}

fn evaluate(problem: &NlpProblem, x: &[f64]) -> Result<Evaluation> {
    let check_len = |what: &str, len: usize| -> Result<()> {
        if len != problem.dim {
            return Err(Error::InvalidParameter(format!(
                "{what} gradient has length {len}, expected {}",
                problem.dim
            )));
        }
        Ok(())
    };
    let (j, grad) = (problem.objective)(x)?;
    check_len("objective", grad.len())?;
    let mut g = Vec::with_capacity(problem.inequalities.len());
    let mut g_grads = Vec::with_capacity(problem.inequalities.len());
    for cons in &problem.inequalities {
        let (gi, gg) = cons(x)?;
        check_len("constraint", gg.len())?;
        g.push(gi);
        g_grads.push(gg);
    }
    Ok(Evaluation { j, grad, g, g_grads })
}

fn max_violation(g: &[f64]) -> f64 {
    g.iter().fold(0.0f64, |a, &v| a.max(v))
}

fn merit(j: f64, g: &[f64], weights: &[f64]) -> f64 {
    j + g
        .iter()
        .zip(weights)
        .map(|(&gi, &w)| w * gi.max(0.0))
        .sum::<f64>()
}

/// Minimize the problem from `x0`. Solver-path breakdowns (line-search
/// collapse, QP infeasibility) come back as a `SolverFailure` status with
/// the partial trace; hard errors (bad dimensions, callback failure at the
/// start point) are `Err`.
pub fn minimize(
    problem: &NlpProblem,
    x0: &[f64],
    config: &SolverConfig,
) -> Result<(Vec<f64>, OptimizationTrace)> {
    config.validate()?;
    let n = problem.dim;
    if x0.len() != n || problem.lower.len() != n || problem.upper.len() != n {
        return Err(Error::InvalidParameter(format!(
            "dimension mismatch: dim={n}, x0={}, bounds=({}, {})",
            x0.len(),
            problem.lower.len(),
            problem.upper.len()
        )));
    }
    for i in 0..n {
        if problem.lower[i] > problem.upper[i] {
            return Err(Error::InvalidParameter(format!(
                "lower bound exceeds upper bound at index {i}"
            )));
        }
    }

    let mut notes = Vec::new();
    let mut x = x0.to_vec();
    clamp(&mut x, &problem.lower, &problem.upper);
    if x.iter().zip(x0).any(|(a, b)| a != b) {
        notes.push("initial point clamped into bounds".to_string());
    }

    // variables with equal bounds are fixed; the subproblem sees only the rest
    let free: Vec<usize> = (0..n)
        .filter(|&i| problem.upper[i] > problem.lower[i])
        .collect();
    let nf = free.len();

    let record_aux = |x: &[f64]| problem.aux.as_ref().map(|f| f(x)).unwrap_or_default();
    let mut trace = OptimizationTrace {
        records: Vec::new(),
        status: SolverStatus::Converged,
        message: String::new(),
        aux_labels: problem.aux_labels.clone(),
    };

    let mut eval = evaluate(problem, &x)?;
    trace.records.push(IterationRecord {
        iter: 0,
        j: eval.j,
        max_violation: max_violation(&eval.g),
        step_norm: 0.0,
        aux: record_aux(&x),
    });

    if nf == 0 {
        trace.message = join_notes(&notes, "all variables fixed by bounds");
        return Ok((x, trace));
    }

    let mut bfgs = identity(nf);
    let mut merit_weights = vec![0.0; problem.inequalities.len()];
    let x_scale = |x: &[f64]| 1.0 + x.iter().fold(0.0f64, |a, &v| a.max(v.abs()));

    for iter in 1..=config.max_iters {
        let grad_free: Vec<f64> = free.iter().map(|&i| eval.grad[i]).collect();
        let qp = match solve_subproblem(
            &bfgs,
            &grad_free,
            &eval,
            &free,
            &x,
            &problem.lower,
            &problem.upper,
        ) {
            Ok(qp) => qp,
            Err(msg) => {
                trace.status = SolverStatus::SolverFailure;
                trace.message = join_notes(&notes, &format!("QP subproblem failed: {msg}"));
                return Ok((x, trace));
            }
        };

        let step_inf = qp.d.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        let feasible_now = max_violation(&eval.g) <= config.constraint_tol;
        if step_inf <= 1e-14 * x_scale(&x) && feasible_now {
            trace.message = join_notes(&notes, "KKT step vanished");
            break;
        }

        // classic SLSQP merit-weight update
        for (w, &lam) in merit_weights.iter_mut().zip(&qp.lambda) {
            *w = lam.abs().max(0.5 * (*w + lam.abs()));
        }

        let phi0 = merit(eval.j, &eval.g, &merit_weights);
        let descent = dot(&grad_free, &qp.d)
            - eval
                .g
                .iter()
                .zip(&merit_weights)
                .map(|(&gi, &w)| w * gi.max(0.0))
                .sum::<f64>();

        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..config.max_line_search {
            let mut x_trial = x.clone();
            for (slot, &i) in free.iter().enumerate() {
                x_trial[i] += alpha * qp.d[slot];
            }
            clamp(&mut x_trial, &problem.lower, &problem.upper);
            match evaluate(problem, &x_trial) {
                Ok(trial) => {
                    let phi = merit(trial.j, &trial.g, &merit_weights);
                    let armijo = phi <= phi0 + config.armijo_c * alpha * descent;
                    // fall back to plain decrease when the model predicts
                    // no descent (relaxed QP near infeasible points)
                    if armijo || (descent >= 0.0 && phi < phi0) {
                        accepted = Some((x_trial, trial));
                        break;
                    }
                }
                Err(_) => {
                    // trial point broke an evaluation guard; shrink the step
                }
            }
            alpha *= config.backtrack;
        }

        let Some((x_new, eval_new)) = accepted else {
            if step_inf <= 1e-10 * x_scale(&x) && feasible_now {
                trace.message = join_notes(&notes, "step collapsed at a feasible point");
                break;
            }
            trace.status = SolverStatus::SolverFailure;
            trace.message = join_notes(&notes, "line search collapse");
            return Ok((x, trace));
        };

        // damped BFGS on the Lagrangian gradient difference
        let lagr_old = lagrangian_gradient(&eval, &grad_free, &free, &qp.lambda);
        let grad_new_free: Vec<f64> = free.iter().map(|&i| eval_new.grad[i]).collect();
        let lagr_new = lagrangian_gradient(&eval_new, &grad_new_free, &free, &qp.lambda);
        let s: Vec<f64> = free
            .iter()
            .map(|&i| x_new[i] - x[i])
            .collect();
        let y: Vec<f64> = lagr_new.iter().zip(&lagr_old).map(|(a, b)| a - b).collect();
        bfgs_update(&mut bfgs, &s, &y, config.curvature_reset);

        let step_norm = s.iter().map(|v| v * v).sum::<f64>().sqrt();
        let rel_change = (eval_new.j - eval.j).abs() / eval_new.j.abs().max(1e-30);
        let viol = max_violation(&eval_new.g);

        x = x_new;
        eval = eval_new;
        trace.records.push(IterationRecord {
            iter,
            j: eval.j,
            max_violation: viol,
            step_norm,
            aux: record_aux(&x),
        });

        if rel_change < config.rel_tol_j && viol <= config.constraint_tol {
            trace.message = join_notes(&notes, "relative objective change below tolerance");
            break;
        }
        if iter == config.max_iters {
            trace.status = SolverStatus::MaxIters;
            trace.message = join_notes(&notes, "iteration limit reached");
        }
    }

    Ok((x, trace))
}

fn join_notes(notes: &[String], tail: &str) -> String {
    let mut parts = notes.to_vec();
    parts.push(tail.to_string());
    parts.join("; ")
}

fn clamp(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for i in 0..x.len() {
        x[i] = x[i].max(lower[i]).min(upper[i]);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn identity(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    m
}

fn lagrangian_gradient(eval: &Evaluation, grad_free: &[f64], free: &[usize], lambda: &[f64]) -> Vec<f64> {
    let mut out = grad_free.to_vec();
    for (gg, &lam) in eval.g_grads.iter().zip(lambda) {
        if lam != 0.0 {
            for (slot, &i) in free.iter().enumerate() {
                out[slot] += lam * gg[i];
            }
        }
    }
    out
}

struct QpStep {
    d: Vec<f64>,
    /// Multipliers of the general (nonlinear) constraints, in problem order.
    lambda: Vec<f64>,
}

/// Assemble and solve the SQP subproblem in the free variables:
/// min ½ dᵀB d + gᵀd  s.t.  ∇g_iᵀ d + g_i ≤ 0  and  l - x ≤ d ≤ u - x.
/// If the linearization is infeasible, retry once demanding only that
/// violated constraints do not get worse.
fn solve_subproblem(
    bfgs: &[f64],
    grad_free: &[f64],
    eval: &Evaluation,
    free: &[usize],
    x: &[f64],
    lower: &[f64],
    upper: &[f64],
) -> std::result::Result<QpStep, String> {
    let nf = free.len();
    let m = eval.g.len();

    let mut amat: Vec<f64> = Vec::new();
    let mut bvec: Vec<f64> = Vec::new();
    for (gg, &gi) in eval.g_grads.iter().zip(&eval.g) {
        for &i in free {
            amat.push(gg[i]);
        }
        bvec.push(-gi);
    }
    for (slot, &i) in free.iter().enumerate() {
        if lower[i] > -BOUND_ACTIVE_LIMIT {
            let mut row = vec![0.0; nf];
            row[slot] = -1.0;
            amat.extend_from_slice(&row);
            bvec.push(x[i] - lower[i]);
        }
        if upper[i] < BOUND_ACTIVE_LIMIT {
            let mut row = vec![0.0; nf];
            row[slot] = 1.0;
            amat.extend_from_slice(&row);
            bvec.push(upper[i] - x[i]);
        }
    }

    let attempt = |bv: &[f64]| -> std::result::Result<quadprog::Solution, String> {
        let mut q = bfgs.to_vec();
        quadprog::solve_qp(&mut q, grad_free, &amat, bv, 0, false).map_err(|e| e.to_string())
    };

    let solution = match attempt(&bvec) {
        Ok(s) => s,
        Err(first_err) if first_err.contains("infeasible") => {
            // ask only that violated constraints do not get worse
            let mut relaxed = bvec.clone();
            for r in relaxed.iter_mut().take(m) {
                *r = r.max(0.0);
            }
            attempt(&relaxed).map_err(|e| format!("{first_err}; relaxed retry: {e}"))?
        }
        Err(e) => return Err(e),
    };

    Ok(QpStep {
        d: solution.sol,
        lambda: solution.lagr[..m].to_vec(),
    })
}

/// Powell-damped BFGS update of the Hessian approximation, with a full reset
/// to identity when the curvature condition fails badly.
fn bfgs_update(b: &mut Vec<f64>, s: &[f64], y: &[f64], curvature_reset: f64) {
    let n = s.len();
    let s_norm = s.iter().map(|v| v * v).sum::<f64>().sqrt();
    let y_norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    if s_norm == 0.0 {
        return;
    }
    let sy = dot(s, y);
    if sy <= curvature_reset * s_norm * y_norm {
        *b = identity(n);
        return;
    }

    // Bs and sᵀBs
    let mut bs = vec![0.0; n];
    for i in 0..n {
        bs[i] = dot(&b[i * n..(i + 1) * n], s);
    }
    let sbs = dot(s, &bs);
    if sbs <= 0.0 {
        *b = identity(n);
        return;
    }

    let (r, sr): (Vec<f64>, f64) = if sy >= 0.2 * sbs {
        (y.to_vec(), sy)
    } else {
        let theta = 0.8 * sbs / (sbs - sy);
        let r: Vec<f64> = y
            .iter()
            .zip(&bs)
            .map(|(&yi, &bsi)| theta * yi + (1.0 - theta) * bsi)
            .collect();
        let sr = dot(s, &r);
        (r, sr)
    };
    if sr <= 0.0 {
        *b = identity(n);
        return;
    }

    for i in 0..n {
        for j in 0..n {
            b[i * n + j] += r[i] * r[j] / sr - bs[i] * bs[j] / sbs;
        }
    }
}
