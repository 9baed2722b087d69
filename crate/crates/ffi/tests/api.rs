use std::ffi::{CStr, CString};
use std::ptr;

use quasibound_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(qb_last_error_message()) }.to_string_lossy().into_owned()
}

fn washboard() -> *mut QbPotential {
    let mut pot = ptr::null_mut();
    assert_eq!(unsafe { qb_potential_washboard(&mut pot) }, QbStatus::Ok);
    pot
}

const STEP: &str = r#"{"shape": "step", "v_left": 0.0, "v_right": 10.0, "x_min": 0.0, "x_max": 1.0,
    "v_left_asymptote": 0.0, "v_right_asymptote": 10.0}"#;

#[test]
fn potential_from_json_and_reflection() {
    let json = CString::new(STEP).unwrap();
    let mut pot = ptr::null_mut();
    assert_eq!(unsafe { qb_potential_from_json(json.as_ptr(), &mut pot) }, QbStatus::Ok);
    assert_eq!(last_error(), "");

    let (mut vl, mut vr) = (0.0, 0.0);
    assert_eq!(unsafe { qb_potential_asymptotes(pot, &mut vl, &mut vr) }, QbStatus::Ok);
    assert_eq!((vl, vr), (0.0, 10.0));

    let mut r = QbReflection::default();
    assert_eq!(unsafe { qb_reflection(pot, 5.0, 0, &mut r) }, QbStatus::Ok);
    assert!(((r.r_re * r.r_re + r.r_im * r.r_im).sqrt() - 1.0).abs() < 1e-12);
    let d = (r.phi + std::f64::consts::FRAC_PI_4).rem_euclid(std::f64::consts::PI);
    assert!(d.min(std::f64::consts::PI - d) < 1e-9);

    assert_eq!(unsafe { qb_reflection(pot, 12.0, 0, &mut r) }, QbStatus::Transfer);
    assert!(last_error().starts_with("transfer::"), "{}", last_error());
    unsafe { qb_potential_free(pot) };
}

#[test]
fn bad_json_reports_config_errors() {
    let mut pot = ptr::null_mut();
    let json =
        CString::new(r#"{"shape": "cone", "x_min": 0, "x_max": 1, "v_left_asymptote": 0, "v_right_asymptote": 1}"#).unwrap();
    assert_eq!(unsafe { qb_potential_from_json(json.as_ptr(), &mut pot) }, QbStatus::Config);
    assert!(pot.is_null());
    assert!(last_error().contains("config::UnknownShape"));

    let json = CString::new(STEP.replace("\"x_max\": 1.0", "\"x_max\": -1.0")).unwrap();
    assert_eq!(unsafe { qb_potential_from_json(json.as_ptr(), &mut pot) }, QbStatus::Potential);
    assert_eq!(unsafe { qb_potential_from_json(ptr::null(), &mut pot) }, QbStatus::NullPointer);
}

#[test]
fn null_handles_are_rejected() {
    let mut v = 0.0;
    assert_eq!(unsafe { qb_potential_evaluate(ptr::null(), 0.0, &mut v) }, QbStatus::NullPointer);
    let pot = washboard();
    assert_eq!(unsafe { qb_potential_evaluate(pot, 0.0, ptr::null_mut()) }, QbStatus::NullPointer);
    assert_eq!(unsafe { qb_potential_evaluate(pot, 0.0, &mut v) }, QbStatus::Ok);
    assert!((v + 10.0).abs() < 1e-12);
    assert_eq!(unsafe { qb_phase_curve_len(ptr::null()) }, 0);
    unsafe {
        qb_potential_free(ptr::null_mut());
        qb_phase_curve_free(ptr::null_mut());
        qb_potential_free(pot);
    }
}

#[test]
fn scan_and_resonances() {
    let pot = washboard();
    let mut curve = ptr::null_mut();
    assert_eq!(unsafe { qb_scan_phase(pot, 7.0, 9.0, 0.0, 0, &mut curve) }, QbStatus::Ok);
    let n = unsafe { qb_phase_curve_len(curve) };
    assert!(n > 100);

    let mut prev = f64::NEG_INFINITY;
    for i in [0, n / 2, n - 1] {
        let mut s = QbPhaseSample::default();
        assert_eq!(unsafe { qb_phase_curve_sample(curve, i, &mut s) }, QbStatus::Ok);
        assert!(s.energy > prev);
        prev = s.energy;
    }
    let mut s = QbPhaseSample::default();
    assert_eq!(unsafe { qb_phase_curve_sample(curve, n, &mut s) }, QbStatus::InvalidArgument);

    let mut count = 0;
    assert_eq!(unsafe { qb_find_resonances(curve, ptr::null_mut(), 0, &mut count) }, QbStatus::BufferTooSmall);
    assert_eq!(count, 1);
    let mut out = [QbResonance { e0: 0.0, halfwidth: 0.0, peak_height: 0.0, method: QbFitMethod::PeakFwhm }; 4];
    assert_eq!(unsafe { qb_find_resonances(curve, out.as_mut_ptr(), out.len(), &mut count) }, QbStatus::Ok);
    assert_eq!(count, 1);
    assert!((out[0].e0 - 7.8716).abs() < 1e-3);
    assert_eq!(out[0].method, QbFitMethod::ZeroCrossing);

    assert_eq!(unsafe { qb_scan_phase(pot, 9.0, 7.0, 0.0, 0, &mut curve) }, QbStatus::Resonance);
    assert!(curve.is_null());
    assert!(last_error().contains("InvalidRange"));
    unsafe { qb_potential_free(pot) };
}

#[test]
fn thick_barrier_log_magnitude() {
    let json = CString::new(
        r#"{"shape": "square_barrier", "v_base": 0.0, "v_top": 20.0, "width": 60.0, "x_min": 0.0, "x_max": 60.0,
            "v_left_asymptote": 0.0, "v_right_asymptote": 25.0}"#,
    )
    .unwrap();
    let mut pot = ptr::null_mut();
    assert_eq!(unsafe { qb_potential_from_json(json.as_ptr(), &mut pot) }, QbStatus::Ok);
    let mut r = QbReflection::default();
    assert_eq!(unsafe { qb_reflection(pot, 5.0, 0, &mut r) }, QbStatus::Ok);
    assert!(r.ln_abs_t11 > 600.0 && r.ln_abs_t11.is_finite());
    assert!(((r.r_re * r.r_re + r.r_im * r.r_im).sqrt() - 1.0).abs() < 1e-12);
    unsafe { qb_potential_free(pot) };
}

#[test]
fn intensity_into_caller_buffer() {
    let pot = washboard();
    let settings = QbInterferometer {
        a1: 1.0,
        a2: 0.7,
        alpha1: 0.0,
        alpha2: 0.4 * std::f64::consts::PI,
        delta_v: 0.2,
        e_incident: 0.0,
        n_slices: 0,
    };
    let grid: Vec<f64> = (0..50).map(|i| 7.5 + 0.01 * i as f64).collect();
    let mut out = vec![0.0; grid.len()];
    assert_eq!(unsafe { qb_simulate_intensity(pot, &settings, grid.as_ptr(), grid.len(), out.as_mut_ptr()) }, QbStatus::Ok);
    assert!(out.iter().all(|&i| (0.09 - 1e-12..=2.89 + 1e-12).contains(&i)));

    let bad = QbInterferometer { a2: -1.0, ..settings };
    assert_eq!(
        unsafe { qb_simulate_intensity(pot, &bad, grid.as_ptr(), grid.len(), out.as_mut_ptr()) },
        QbStatus::Interferometer
    );
    assert_eq!(unsafe { qb_simulate_intensity(pot, &settings, grid.as_ptr(), 0, out.as_mut_ptr()) }, QbStatus::InvalidArgument);
    unsafe { qb_potential_free(pot) };
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(qb_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
