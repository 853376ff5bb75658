//! Exercises the C ABI exactly as a foreign caller would: through raw
//! pointers, out-parameters, and status codes.

use std::ffi::{CStr, CString};
use std::ptr;

use coilflux_ffi::*;

const SCENE_JSON: &str = r#"{
    "quadrature": 16,
    "coils": [
        {"label": "C", "designable": true,
         "generator": {"type": "circle", "center": [0,0,0], "radius": 1.0, "count": 16},
         "coupling": {"type": "radial", "center": [0.0, 0.0, 0.0]}},
        {"label": "Cp", "current": 1.0,
         "generator": {"type": "circle", "center": [0,0,-1], "radius": 1.0, "count": 16}}
    ],
    "pairs": [{"alpha": 0, "beta": 1, "target": 0.0}]
}"#;

fn parse(json: &str) -> *mut CoilfluxScene {
    let cjson = CString::new(json).unwrap();
    let mut scene: *mut CoilfluxScene = ptr::null_mut();
    let status = unsafe { coilflux_scene_parse(cjson.as_ptr(), &mut scene) };
    assert_eq!(status, CoilfluxStatus::Ok);
    assert!(!scene.is_null());
    scene
}

#[test]
fn parse_inspect_free() {
    unsafe {
        let scene = parse(SCENE_JSON);
        assert_eq!(coilflux_scene_coil_count(scene), 2);
        assert_eq!(coilflux_scene_pair_count(scene), 1);
        assert_eq!(coilflux_scene_design_dim(scene), 1);

        let mut m = f64::NAN;
        assert_eq!(
            coilflux_pair_mutual_inductance(scene, 0, &mut m),
            CoilfluxStatus::Ok
        );
        assert!(m > 0.3 && m < 0.5, "coaxial unit-circle M = {m}");

        let mut len = f64::NAN;
        assert_eq!(coilflux_coil_length(scene, 0, &mut len), CoilfluxStatus::Ok);
        assert!((len - 2.0 * std::f64::consts::PI).abs() < 0.2);

        coilflux_scene_free(scene);
    }
}

#[test]
fn objective_and_gradient_roundtrip() {
    unsafe {
        let scene = parse(SCENE_JSON);
        let dim = coilflux_scene_design_dim(scene);
        assert_eq!(dim, 1);

        let mut x = vec![0.0; dim];
        assert_eq!(
            coilflux_pack(scene, x.as_mut_ptr(), x.len()),
            CoilfluxStatus::Ok
        );
        assert!((x[0] - 1.0).abs() < 1e-12, "radius variable {x:?}");

        let mut j_null = f64::NAN;
        let mut j_explicit = f64::NAN;
        assert_eq!(
            coilflux_objective(scene, ptr::null(), 0, &mut j_null),
            CoilfluxStatus::Ok
        );
        assert_eq!(
            coilflux_objective(scene, x.as_ptr(), x.len(), &mut j_explicit),
            CoilfluxStatus::Ok
        );
        assert_eq!(j_null, j_explicit);
        assert!(j_null > 0.0);

        let mut grad = vec![0.0; dim];
        assert_eq!(
            coilflux_objective_gradient(scene, ptr::null(), 0, grad.as_mut_ptr(), grad.len()),
            CoilfluxStatus::Ok
        );
        // J = M²/2 grows with the radius at b = 1 in this configuration
        assert!(grad[0] > 0.0);

        assert_eq!(
            coilflux_objective_gradient(scene, ptr::null(), 0, grad.as_mut_ptr(), 0),
            CoilfluxStatus::BufferTooSmall
        );
        coilflux_scene_free(scene);
    }
}

#[test]
fn optimize_and_export() {
    unsafe {
        let scene = parse(SCENE_JSON);
        let mut run: *mut CoilfluxRun = ptr::null_mut();
        assert_eq!(coilflux_optimize(scene, true, &mut run), CoilfluxStatus::Ok);
        assert_eq!(coilflux_run_status(run), CoilfluxRunStatus::Converged);
        assert!(coilflux_run_iterations(run) > 0);
        let j = coilflux_run_final_objective(run);
        assert!(j > 0.14, "maximized J = {j}");

        let mut x = vec![0.0; 1];
        assert_eq!(
            coilflux_run_design(run, x.as_mut_ptr(), x.len()),
            CoilfluxStatus::Ok
        );
        assert!((x[0] - 1.77).abs() < 0.08, "optimized radius {}", x[0]);

        let dir = tempfile::tempdir().unwrap();
        let cdir = CString::new(dir.path().to_str().unwrap()).unwrap();
        assert_eq!(
            coilflux_run_export(scene, run, cdir.as_ptr()),
            CoilfluxStatus::Ok
        );
        assert!(dir.path().join("summary.json").exists());
        assert!(dir.path().join("trace.csv").exists());

        coilflux_run_free(run);
        coilflux_scene_free(scene);
    }
}

#[test]
fn scene_json_roundtrip() {
    unsafe {
        let scene = parse(SCENE_JSON);
        let mut json: *mut std::ffi::c_char = ptr::null_mut();
        assert_eq!(coilflux_scene_to_json(scene, &mut json), CoilfluxStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap().to_string();
        coilflux_string_free(json);
        coilflux_scene_free(scene);

        let again = parse(&text);
        assert_eq!(coilflux_scene_coil_count(again), 2);
        coilflux_scene_free(again);
    }
}

#[test]
fn error_paths() {
    unsafe {
        // null pointers
        let mut out: *mut CoilfluxScene = ptr::null_mut();
        assert_eq!(
            coilflux_scene_parse(ptr::null(), &mut out),
            CoilfluxStatus::NullPointer
        );

        // malformed JSON
        let bad = CString::new("{not json").unwrap();
        assert_eq!(
            coilflux_scene_parse(bad.as_ptr(), &mut out),
            CoilfluxStatus::ParseError
        );

        // invalid scene (duplicate labels)
        let dup = SCENE_JSON.replace("\"Cp\"", "\"C\"");
        let cdup = CString::new(dup).unwrap();
        assert_eq!(
            coilflux_scene_parse(cdup.as_ptr(), &mut out),
            CoilfluxStatus::ParseError
        );

        // out-of-range indices
        let scene = parse(SCENE_JSON);
        let mut m = 0.0;
        assert_eq!(
            coilflux_pair_mutual_inductance(scene, 5, &mut m),
            CoilfluxStatus::InvalidInput
        );
        assert_eq!(
            coilflux_coil_length(scene, 9, &mut m),
            CoilfluxStatus::InvalidInput
        );
        coilflux_scene_free(scene);

        // frees tolerate null
        coilflux_scene_free(ptr::null_mut());
        coilflux_run_free(ptr::null_mut());
        coilflux_string_free(ptr::null_mut());

        // status messages are readable C strings
        let msg = CStr::from_ptr(coilflux_status_message(CoilfluxStatus::NearSingular));
        assert!(msg.to_str().unwrap().contains("singular"));
    }
}
