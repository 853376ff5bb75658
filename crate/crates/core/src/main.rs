//! Command-line front end: inductance reports, gradient checks, optimization
//! runs, field-grid export, and the coaxial-circle verification sweep.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use coilflux::curve::Vec3;
use coilflux::em::{self, PlaneSpec};
use coilflux::error::Error;
use coilflux::oracle;
use coilflux::run;
use coilflux::scene::{write_atomic, Scene};
use coilflux::solver::SolverStatus;
use coilflux::{circle_coil, gauss_legendre};

/// Shape optimization of mutual inductances among closed wire coils.
#[derive(Parser)]
#[command(name = "coilflux", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the mutual inductance of each measured pair in a scene.
    Mi {
        scene: PathBuf,
        /// Restrict to one pair, given as two coil indices.
        #[arg(long, num_args = 2, value_names = ["ALPHA", "BETA"])]
        pair: Option<Vec<usize>>,
    },
    /// Compare analytic gradients against central finite differences.
    GradCheck {
        scene: PathBuf,
        /// Finite-difference step.
        #[arg(long, default_value_t = 1e-6)]
        step: f64,
    },
    /// Run the constrained shape optimization and export the results.
    Optimize {
        scene: PathBuf,
        /// Output directory for summary, trace, and geometry files.
        #[arg(long)]
        out: PathBuf,
        /// Maximize the objective instead of minimizing it.
        #[arg(long)]
        maximize: bool,
    },
    /// Evaluate the total magnetic field on an axis-aligned plane grid.
    Field {
        scene: PathBuf,
        /// Plane specification, e.g. `y=0`.
        #[arg(long)]
        plane: String,
        /// Ranges of the two in-plane axes in x,y,z order, e.g. `-3:3,-1:2`.
        #[arg(long)]
        range: String,
        /// Sample counts for the two in-plane axes, e.g. `60,40`.
        #[arg(long)]
        samples: String,
        /// Truncate the reported |B| at this value.
        #[arg(long)]
        cap: Option<f64>,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep the coaxial-circle configuration and compare the discrete
    /// mutual inductance and its radius sensitivity against the analytic
    /// elliptic-integral forms.
    VerifyCoaxial {
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        #[arg(long, default_value_t = 1.0)]
        d: f64,
        #[arg(long, default_value_t = 0.1)]
        bmin: f64,
        #[arg(long, default_value_t = 4.0)]
        bmax: f64,
        #[arg(long, default_value_t = 40)]
        steps: usize,
        /// Control points per coil.
        #[arg(long, default_value_t = 32)]
        n: usize,
        /// Gauss-Legendre points per knot interval.
        #[arg(long, default_value_t = 16)]
        q: usize,
        /// Also sweep N at b=1 and fit the error decay slope.
        #[arg(long)]
        convergence: bool,
    },
}

fn main() -> ExitCode {
    // worker threads for the interval-pair loops; default: all cores
    if let Ok(threads) = std::env::var("COILFLUX_THREADS") {
        if let Ok(k) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
        }
    }

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };

    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::NearSingular { .. }
                | Error::DegenerateVelocity { .. }
                | Error::SolverFailure(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn dispatch(cli: Cli) -> coilflux::Result<ExitCode> {
    match cli.command {
        Command::Mi { scene, pair } => cmd_mi(&scene, pair),
        Command::GradCheck { scene, step } => cmd_grad_check(&scene, step),
        Command::Optimize { scene, out, maximize } => cmd_optimize(&scene, &out, maximize),
        Command::Field {
            scene,
            plane,
            range,
            samples,
            cap,
            out,
        } => cmd_field(&scene, &plane, &range, &samples, cap, &out),
        Command::VerifyCoaxial {
            a,
            d,
            bmin,
            bmax,
            steps,
            n,
            q,
            convergence,
        } => cmd_verify_coaxial(a, d, bmin, bmax, steps, n, q, convergence),
    }
}

fn cmd_mi(path: &Path, pair: Option<Vec<usize>>) -> coilflux::Result<ExitCode> {
    let scene = Scene::load(path)?;
    println!(
        "# quadrature Q={} per interval, mu={}",
        scene.quadrature, scene.mu
    );
    let results = run::evaluate_pairs(&scene)?;
    let selected: Vec<_> = match &pair {
        Some(p) => results
            .into_iter()
            .filter(|r| (r.alpha == p[0] && r.beta == p[1]) || (r.alpha == p[1] && r.beta == p[0]))
            .collect(),
        None => results,
    };
    if selected.is_empty() {
        return Err(Error::Scene("no matching pair in scene".into()));
    }
    for r in selected {
        println!(
            "M({}, {}) = {:.9e} H  (target {:.9e}, deviation {:+.3e})",
            r.label_alpha,
            r.label_beta,
            r.mutual_inductance,
            r.target,
            r.mutual_inductance - r.target
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_grad_check(path: &Path, step: f64) -> coilflux::Result<ExitCode> {
    let scene = Scene::load(path)?;
    let report = run::gradient_check(&scene, step)?;
    println!("# finite-difference step {step:.3e}");
    for coil in &report.coils {
        match coil.length_rel_error {
            Some(len) => println!(
                "{}: objective max rel err {:.3e}, length-constraint max rel err {:.3e}",
                coil.label, coil.objective_rel_error, len
            ),
            None => println!(
                "{}: objective max rel err {:.3e}",
                coil.label, coil.objective_rel_error
            ),
        }
    }
    if report.max_rel_error > 1e-5 {
        println!("FAIL: max relative error {:.3e} > 1e-5", report.max_rel_error);
        return Ok(ExitCode::from(2));
    }
    println!("PASS: max relative error {:.3e}", report.max_rel_error);
    Ok(ExitCode::SUCCESS)
}

fn cmd_optimize(path: &Path, out: &Path, maximize: bool) -> coilflux::Result<ExitCode> {
    let scene = Scene::load(path)?;
    let outcome = run::optimize_scene(&scene, maximize)?;
    run::export_results(&scene, &outcome, out)?;
    println!(
        "status: {:?} after {} iterations; final J = {:.6e}",
        outcome.summary.status, outcome.summary.iterations, outcome.summary.final_j
    );
    for p in &outcome.summary.pairs {
        println!(
            "M({}, {}) = {:.9e} H (target {:.9e})",
            p.label_alpha, p.label_beta, p.mutual_inductance, p.target
        );
    }
    for c in &outcome.summary.coils {
        match c.length_window {
            Some((lo, hi)) => println!(
                "length {} = {:.7} m (window [{:.7}, {:.7}])",
                c.label, c.length, lo, hi
            ),
            None => println!("length {} = {:.7} m", c.label, c.length),
        }
    }
    println!("results written to {}", out.display());
    if outcome.summary.status == SolverStatus::SolverFailure {
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_plane(plane: &str, range: &str, samples: &str) -> coilflux::Result<PlaneSpec> {
    let err = |msg: &str| Error::InvalidParameter(msg.to_string());
    let (axis_str, value_str) = plane
        .split_once('=')
        .ok_or_else(|| err("plane must look like `y=0`"))?;
    let axis = match axis_str.trim() {
        "x" => 0,
        "y" => 1,
        "z" => 2,
        other => return Err(err(&format!("unknown plane axis {other:?}"))),
    };
    let value: f64 = value_str
        .trim()
        .parse()
        .map_err(|_| err("plane value must be a number"))?;

    let parse_range = |s: &str| -> coilflux::Result<(f64, f64)> {
        let (lo, hi) = s
            .split_once(':')
            .ok_or_else(|| err("each range must look like `lo:hi`"))?;
        Ok((
            lo.trim().parse().map_err(|_| err("bad range number"))?,
            hi.trim().parse().map_err(|_| err("bad range number"))?,
        ))
    };
    let ranges: Vec<&str> = range.split(',').collect();
    if ranges.len() != 2 {
        return Err(err("expected two ranges separated by a comma"));
    }
    let counts: Vec<usize> = samples
        .split(',')
        .map(|s| s.trim().parse().map_err(|_| err("bad sample count")))
        .collect::<coilflux::Result<_>>()?;
    if counts.len() != 2 {
        return Err(err("expected two sample counts separated by a comma"));
    }
    Ok(PlaneSpec {
        axis,
        value,
        range_u: parse_range(ranges[0])?,
        range_v: parse_range(ranges[1])?,
        samples_u: counts[0],
        samples_v: counts[1],
    })
}

fn cmd_field(
    path: &Path,
    plane: &str,
    range: &str,
    samples: &str,
    cap: Option<f64>,
    out: &Path,
) -> coilflux::Result<ExitCode> {
    let scene = Scene::load(path)?;
    let spec = parse_plane(plane, range, samples)?;
    let rule = gauss_legendre(scene.quadrature)?;
    let coils: Vec<(&coilflux::CoilCurve, f64)> = scene
        .coils
        .iter()
        .map(|c| (&c.curve, c.current))
        .collect();
    let mut buf = Vec::new();
    em::write_field_grid_csv(&coils, &spec, &rule, scene.mu, cap, &mut buf)?;
    if let Some(dir) = out.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    write_atomic(out, &buf)?;
    println!(
        "field grid ({} x {} points) written to {}",
        spec.samples_u,
        spec.samples_v,
        out.display()
    );
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn cmd_verify_coaxial(
    a: f64,
    d: f64,
    bmin: f64,
    bmax: f64,
    steps: usize,
    n: usize,
    q: usize,
    convergence: bool,
) -> coilflux::Result<ExitCode> {
    let rule = gauss_legendre(q)?;
    let axis = Vec3::new(0.0, 0.0, 1.0);
    let transmitter = circle_coil(Vec3::new(0.0, 0.0, -d), a, axis, n, 2, "Cp")?;

    println!("# coaxial verification: a={a}, d={d}, N=N'={n}, Q={q}");
    println!(
        "{:>8} {:>14} {:>14} {:>10} {:>14} {:>14} {:>10}",
        "b", "M_num", "M_exact", "relerr", "dMdb_num", "dMdb_exact", "relerr"
    );
    let mut max_m_err = 0.0f64;
    let mut max_d_err = 0.0f64;
    for i in 0..steps {
        let b = bmin + (bmax - bmin) * i as f64 / (steps - 1).max(1) as f64;
        let receiver = circle_coil(Vec3::ZERO, b, axis, n, 2, "C")?;
        let m_num = em::mutual_inductance(&receiver, &transmitter, &rule, 1.0)?;
        let m_exact = oracle::coaxial_mi(a, b, d, 1.0)?;
        let sens = em::mi_sensitivity(&receiver, &transmitter, &rule, 1.0)?;
        let d_num = oracle::radial_sensitivity(&receiver, &sens.d, Vec3::ZERO, b)?;
        let d_exact = oracle::coaxial_mi_db(a, b, d, 1.0)?;
        let m_err = (m_num - m_exact).abs() / m_exact.abs().max(1e-300);
        let d_err = (d_num - d_exact).abs() / d_exact.abs().max(1e-300);
        max_m_err = max_m_err.max(m_err);
        max_d_err = max_d_err.max(d_err);
        println!(
            "{b:>8.4} {m_num:>14.7e} {m_exact:>14.7e} {m_err:>10.2e} {d_num:>+14.6e} {d_exact:>+14.6e} {d_err:>10.2e}"
        );
    }
    println!("# max relative error: M {max_m_err:.3e}, dM/db {max_d_err:.3e}");

    if convergence {
        println!("# convergence of dM/db at b=1 against N (geometric error dominates)");
        let ns = [8usize, 16, 32, 64, 128];
        let mut errs = Vec::new();
        for &nn in &ns {
            let receiver = circle_coil(Vec3::ZERO, 1.0, axis, nn, 2, "C")?;
            let xmit = circle_coil(Vec3::new(0.0, 0.0, -d), a, axis, nn, 2, "Cp")?;
            let sens = em::mi_sensitivity(&receiver, &xmit, &rule, 1.0)?;
            let num = oracle::radial_sensitivity(&receiver, &sens.d, Vec3::ZERO, 1.0)?;
            let exact = oracle::coaxial_mi_db(a, 1.0, d, 1.0)?;
            let e = (num - exact).abs() / exact.abs();
            println!("N={nn:>4}: rel err {e:.4e}");
            errs.push(e);
        }
        let slope = log_log_slope(&ns, &errs);
        println!("# fitted log-log slope: {slope:.3}");
    }
    Ok(ExitCode::SUCCESS)
}

fn log_log_slope(ns: &[usize], errs: &[f64]) -> f64 {
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}
