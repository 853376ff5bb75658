//! C ABI for the coil shape optimizer.
//!
//! Scenes and optimization results are opaque handles created and destroyed
//! by this library; every fallible call returns a `CoilfluxStatus` and
//! writes its result through out-pointers. The generated header lives at
//! `include/coilflux.h`.
//!
//! Handles are not synchronized; share them across threads only behind the
//! caller's own locking. Passing a handle after `*_free`, or a pointer that
//! did not come from this library, is undefined behavior.

use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use coilflux::error::Error;
use coilflux::objective::{objective, objective_gradient, DesignMap};
use coilflux::run::{evaluate_pairs, optimize_scene, RunOutcome};
use coilflux::scene::Scene;
use coilflux::solver::SolverStatus;

/// Result codes of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoilfluxStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    InvalidInput = 4,
    NearSingular = 5,
    DegenerateVelocity = 6,
    SolverFailure = 7,
    BufferTooSmall = 8,
    IoError = 9,
    InternalPanic = 10,
}

/// Terminal state of an optimization run.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoilfluxRunStatus {
    Converged = 0,
    MaxIters = 1,
    SolverFailure = 2,
}

/// Opaque scene handle.
pub struct CoilfluxScene {
    scene: Scene,
}

/// Opaque optimization-result handle.
pub struct CoilfluxRun {
    outcome: RunOutcome,
}

fn status_of(err: &Error) -> CoilfluxStatus {
    match err {
        Error::NearSingular { .. } => CoilfluxStatus::NearSingular,
        Error::DegenerateVelocity { .. } => CoilfluxStatus::DegenerateVelocity,
        Error::SolverFailure(_) => CoilfluxStatus::SolverFailure,
        Error::Json(_) | Error::Scene(_) => CoilfluxStatus::ParseError,
        Error::Io(_) => CoilfluxStatus::IoError,
        _ => CoilfluxStatus::InvalidInput,
    }
}

fn guard<F: FnOnce() -> CoilfluxStatus>(f: F) -> CoilfluxStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => CoilfluxStatus::InternalPanic,
    }
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn coilflux_status_message(status: CoilfluxStatus) -> *const c_char {
    let msg: &'static [u8] = match status {
        CoilfluxStatus::Ok => b"ok\0",
        CoilfluxStatus::NullPointer => b"null pointer argument\0",
        CoilfluxStatus::InvalidUtf8 => b"string is not valid UTF-8\0",
        CoilfluxStatus::ParseError => b"scene failed to parse or validate\0",
        CoilfluxStatus::InvalidInput => b"invalid argument\0",
        CoilfluxStatus::NearSingular => b"near-singular coil configuration\0",
        CoilfluxStatus::DegenerateVelocity => b"degenerate curve velocity\0",
        CoilfluxStatus::SolverFailure => b"solver failure\0",
        CoilfluxStatus::BufferTooSmall => b"output buffer too small\0",
        CoilfluxStatus::IoError => b"I/O error\0",
        CoilfluxStatus::InternalPanic => b"internal panic\0",
    };
    msg.as_ptr() as *const c_char
}

/// Parse a scene from a JSON document. On success writes a new handle that
/// must be released with `coilflux_scene_free`.
/// # Safety
/// `json` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn coilflux_scene_parse(
    json: *const c_char,
    out: *mut *mut CoilfluxScene,
) -> CoilfluxStatus {
    guard(|| {
        if json.is_null() || out.is_null() {
            return CoilfluxStatus::NullPointer;
        }
        let text = match unsafe { CStr::from_ptr(json) }.to_str() {
            Ok(t) => t,
            Err(_) => return CoilfluxStatus::InvalidUtf8,
        };
        match Scene::parse_str(text) {
            Ok(scene) => {
                let handle = Box::new(CoilfluxScene { scene });
                unsafe { *out = Box::into_raw(handle) };
                CoilfluxStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Release a scene handle. Null is a no-op.
/// # Safety
/// `scene` must be null or a handle from `coilflux_scene_parse` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn coilflux_scene_free(scene: *mut CoilfluxScene) {
    if !scene.is_null() {
        drop(unsafe { Box::from_raw(scene) });
    }
}

/// Serialize a scene back to JSON. The returned string must be released with
/// `coilflux_string_free`.
/// # Safety
/// `scene` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn coilflux_scene_to_json(
    scene: *const CoilfluxScene,
    out: *mut *mut c_char,
) -> CoilfluxStatus {
    guard(|| {
        if scene.is_null() || out.is_null() {
            return CoilfluxStatus::NullPointer;
        }
        let scene = unsafe { &(*scene).scene };
        match scene.to_json_string() {
            Ok(json) => match CString::new(json) {
                Ok(cstr) => {
                    unsafe { *out = cstr.into_raw() };
                    CoilfluxStatus::Ok
                }
                Err(_) => CoilfluxStatus::InvalidInput,
            },
            Err(e) => status_of(&e),
        }
    })
}

/// Release a string returned by this library. Null is a no-op.
/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn coilflux_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// # Safety
/// `scene` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn coilflux_scene_coil_count(scene: *const CoilfluxScene) -> usize {
    if scene.is_null() {
        return 0;
    }
    unsafe { &(*scene).scene }.coils.len()
}

/// # Safety
/// `scene` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn coilflux_scene_pair_count(scene: *const CoilfluxScene) -> usize {
    if scene.is_null() {
        return 0;
    }
    unsafe { &(*scene).scene }.pairs.len()
}

/// Number of design variables (length of the packed design vector).
/// # Safety
/// `scene` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn coilflux_scene_design_dim(scene: *const CoilfluxScene) -> usize {
    if scene.is_null() {
        return 0;
    }
    let scene = unsafe { &(*scene).scene };
    DesignMap::new(scene).map(|m| m.dim()).unwrap_or(0)
}

/// Mutual inductance of measured pair `pair` at the scene's geometry (henry).
/// # Safety
/// `scene` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn coilflux_pair_mutual_inductance(
    scene: *const CoilfluxScene,
    pair: usize,
    out: *mut f64,
) -> CoilfluxStatus {
    guard(|| {
        if scene.is_null() || out.is_null() {
            return CoilfluxStatus::NullPointer;
        }
        let scene = unsafe { &(*scene).scene };
        if pair >= scene.pairs.len() {
            return CoilfluxStatus::InvalidInput;
        }
        match evaluate_pairs(scene) {
            Ok(results) => {
                unsafe { *out = results[pair].mutual_inductance };
                CoilfluxStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Arc length of coil `coil` at the scene's geometry (meters).
/// # Safety
/// `scene` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn coilflux_coil_length(
    scene: *const CoilfluxScene,
    coil: usize,
    out: *mut f64,
) -> CoilfluxStatus {
    guard(|| {
        if scene.is_null() || out.is_null() {
            return CoilfluxStatus::NullPointer;
        }
        let scene = unsafe { &(*scene).scene };
        if coil >= scene.coils.len() {
            return CoilfluxStatus::InvalidInput;
        }
        match coilflux::gauss_legendre(scene.quadrature) {
            Ok(rule) => {
                unsafe { *out = scene.coils[coil].curve.length(&rule) };
                CoilfluxStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Pack the scene's designable geometry into `out` (length `len` must equal
/// the design dimension).
/// # Safety
/// `scene` must be a live handle and `out` must point to at least `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn coilflux_pack(
    scene: *const CoilfluxScene,
    out: *mut f64,
    len: usize,
) -> CoilfluxStatus {
    guard(|| {
        if scene.is_null() || out.is_null() {
            return CoilfluxStatus::NullPointer;
        }
        let scene = unsafe { &(*scene).scene };
        let map = match DesignMap::new(scene) {
            Ok(m) => m,
            Err(e) => return status_of(&e),
        };
        if len < map.dim() {
            return CoilfluxStatus::BufferTooSmall;
        }
        let x = map.pack(scene);
        unsafe { ptr::copy_nonoverlapping(x.as_ptr(), out, x.len()) };
        CoilfluxStatus::Ok
    })
}

/// Objective J at design vector `x` (pass null to use the scene's current
/// geometry).
/// # Safety
/// `scene` must be a live handle; `x` null or `x_len` doubles; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn coilflux_objective(
    scene: *const CoilfluxScene,
    x: *const f64,
    x_len: usize,
    out: *mut f64,
) -> CoilfluxStatus {
    guard(|| {
        if scene.is_null() || out.is_null() {
            return CoilfluxStatus::NullPointer;
        }
        let scene = unsafe { &(*scene).scene };
        let packed;
        let xs: &[f64] = if x.is_null() {
            packed = match DesignMap::new(scene) {
                Ok(m) => m.pack(scene),
                Err(e) => return status_of(&e),
            };
            &packed
        } else {
            unsafe { std::slice::from_raw_parts(x, x_len) }
        };
        match objective(scene, xs) {
            Ok(j) => {
                unsafe { *out = j };
                CoilfluxStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Gradient of the objective at design vector `x` (null for the current
/// geometry); `grad` must hold the design dimension.
/// # Safety
/// `scene` must be a live handle; `x` null or `x_len` doubles; `grad` must point to at least `grad_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn coilflux_objective_gradient(
    scene: *const CoilfluxScene,
    x: *const f64,
    x_len: usize,
    grad: *mut f64,
    grad_len: usize,
) -> CoilfluxStatus {
    guard(|| {
        if scene.is_null() || grad.is_null() {
            return CoilfluxStatus::NullPointer;
        }
        let scene = unsafe { &(*scene).scene };
        let map = match DesignMap::new(scene) {
            Ok(m) => m,
            Err(e) => return status_of(&e),
        };
        if grad_len < map.dim() {
            return CoilfluxStatus::BufferTooSmall;
        }
        let packed;
        let xs: &[f64] = if x.is_null() {
            packed = map.pack(scene);
            &packed
        } else {
            unsafe { std::slice::from_raw_parts(x, x_len) }
        };
        match objective_gradient(scene, xs) {
            Ok(g) => {
                unsafe { ptr::copy_nonoverlapping(g.as_ptr(), grad, g.len()) };
                CoilfluxStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Run the constrained optimization. On success writes a result handle to be
/// released with `coilflux_run_free`.
/// # Safety
/// `scene` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn coilflux_optimize(
    scene: *const CoilfluxScene,
    maximize: bool,
    out: *mut *mut CoilfluxRun,
) -> CoilfluxStatus {
    guard(|| {
        if scene.is_null() || out.is_null() {
            return CoilfluxStatus::NullPointer;
        }
        let scene = unsafe { &(*scene).scene };
        match optimize_scene(scene, maximize) {
            Ok(outcome) => {
                let handle = Box::new(CoilfluxRun { outcome });
                unsafe { *out = Box::into_raw(handle) };
                CoilfluxStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Release an optimization result. Null is a no-op.
/// # Safety
/// `run` must be null or a handle from `coilflux_optimize` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn coilflux_run_free(run: *mut CoilfluxRun) {
    if !run.is_null() {
        drop(unsafe { Box::from_raw(run) });
    }
}

/// Final objective value of a completed run (the true J, regardless of the
/// maximize flag).
/// # Safety
/// `run` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn coilflux_run_final_objective(run: *const CoilfluxRun) -> f64 {
    if run.is_null() {
        return f64::NAN;
    }
    unsafe { &(*run).outcome }.summary.final_j
}

/// # Safety
/// `run` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn coilflux_run_iterations(run: *const CoilfluxRun) -> usize {
    if run.is_null() {
        return 0;
    }
    unsafe { &(*run).outcome }.summary.iterations
}

/// # Safety
/// `run` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn coilflux_run_status(run: *const CoilfluxRun) -> CoilfluxRunStatus {
    if run.is_null() {
        return CoilfluxRunStatus::SolverFailure;
    }
    match unsafe { &(*run).outcome }.summary.status {
        SolverStatus::Converged => CoilfluxRunStatus::Converged,
        SolverStatus::MaxIters => CoilfluxRunStatus::MaxIters,
        SolverStatus::SolverFailure => CoilfluxRunStatus::SolverFailure,
    }
}

/// Copy the optimized design vector into `out` (length `len` must cover the
/// design dimension).
/// # Safety
/// `run` must be a live handle and `out` must point to at least `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn coilflux_run_design(
    run: *const CoilfluxRun,
    out: *mut f64,
    len: usize,
) -> CoilfluxStatus {
    guard(|| {
        if run.is_null() || out.is_null() {
            return CoilfluxStatus::NullPointer;
        }
        let x = &unsafe { &(*run).outcome }.x;
        if len < x.len() {
            return CoilfluxStatus::BufferTooSmall;
        }
        unsafe { ptr::copy_nonoverlapping(x.as_ptr(), out, x.len()) };
        CoilfluxStatus::Ok
    })
}

/// Write the run's artifacts (summary, trace, optimized scene, geometry
/// CSVs) into a directory.
/// # Safety
/// `scene` and `run` must be live handles and `out_dir` a valid NUL-terminated path.
#[no_mangle]
pub unsafe extern "C" fn coilflux_run_export(
    scene: *const CoilfluxScene,
    run: *const CoilfluxRun,
    out_dir: *const c_char,
) -> CoilfluxStatus {
    guard(|| {
        if scene.is_null() || run.is_null() || out_dir.is_null() {
            return CoilfluxStatus::NullPointer;
        }
        let dir = match unsafe { CStr::from_ptr(out_dir) }.to_str() {
            Ok(d) => d,
            Err(_) => return CoilfluxStatus::InvalidUtf8,
        };
        let scene = unsafe { &(*scene).scene };
        let outcome = &unsafe { &(*run).outcome };
        match coilflux::run::export_results(scene, outcome, std::path::Path::new(dir)) {
            Ok(()) => CoilfluxStatus::Ok,
            Err(e) => status_of(&e),
        }
    })
}
