use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_quasibound"))
}

fn example(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const STEP: &str = r#"{"shape": "step", "v_left": 0.0, "v_right": 10.0, "x_min": 0.0, "x_max": 1.0,
    "v_left_asymptote": 0.0, "v_right_asymptote": 10.0}"#;

fn interferometer(dir: &TempDir, a2: f64) -> PathBuf {
    let text = format!(
        r#"{{"potential": {STEP}, "a1": 1.0, "a2": {a2}, "alpha2": 1.2566370614359172, "delta_v": 0.3,
            "v_min": 1.0, "v_max": 8.0, "v_points": 41, "noise_sigma": 0.0, "seed": 1, "n_slices": 256}}"#
    );
    write(dir, &format!("interf_{a2}.json"), &text)
}

fn rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect()
}

#[test]
fn errors_exit_nonzero_with_a_qualified_name() {
    let dir = TempDir::new().unwrap();
    let out = run(&["scan-phase", "--config", "/nonexistent/pot.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error [config::Read]"));

    let bad =
        write(&dir, "bad.json", r#"{"shape": "cone", "x_min": 0, "x_max": 1, "v_left_asymptote": 0, "v_right_asymptote": 1}"#);
    let out = run(&["dump-potential", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("[config::UnknownShape]"));

    let step = write(&dir, "step.json", STEP);
    let out = run(&["scan-phase", "--config", step.to_str().unwrap(), "--emin", "5", "--emax", "4"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("[resonance::InvalidRange]"));

    let out = run(&["find-resonances"]);
    assert_eq!(out.status.code(), Some(2), "clap usage error");
}

#[test]
fn scan_output_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let step = write(&dir, "step.json", STEP);
    let args = ["scan-phase", "--config", step.to_str().unwrap(), "--emin", "0.5", "--emax", "9.5"];
    let first = stdout(&run(&args));
    assert_eq!(first, stdout(&run(&args)));
    assert!(first.starts_with("E_eV,phi_rad,dphi_dE,a,b,inv_t11sq\n"));
    for r in rows(&first) {
        let exact = -((10.0 - r[0]) / r[0]).sqrt().atan();
        let phi = (r[1] - exact).rem_euclid(std::f64::consts::PI);
        assert!(phi.min(std::f64::consts::PI - phi) < 1e-6, "E={} phi={}", r[0], r[1]);
    }
}

#[test]
fn step_has_no_resonances() {
    let dir = TempDir::new().unwrap();
    let step = write(&dir, "step.json", STEP);
    let report = dir.path().join("r.json");
    stdout(&run(&["find-resonances", "--config", step.to_str().unwrap(), "--out", report.to_str().unwrap()]));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(v["resonances"].as_array().unwrap().len(), 0);
    assert!(v["samples"].as_u64().unwrap() > 10);
}

#[test]
fn resonances_from_a_phase_csv() {
    let dir = TempDir::new().unwrap();
    let mut text = String::from("E_eV,phi_rad\n");
    for i in 0..=2000 {
        let e = 2.0 + 2.0 * i as f64 / 2000.0;
        text += &format!("{e},{}\n", ((e - 3.1) / 0.02).atan() + 0.05 * e);
    }
    let curve = write(&dir, "phase.csv", &text);
    let out = stdout(&run(&["find-resonances", "--curve", curve.to_str().unwrap()]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let res = v["resonances"].as_array().unwrap();
    assert_eq!(res.len(), 1);
    assert!((res[0]["E0"].as_f64().unwrap() - 3.1).abs() < 1e-4);
    assert!((res[0]["halfwidth"].as_f64().unwrap() - 0.02).abs() < 4e-4);
    assert!(res[0]["wigner_delay_s"].as_f64().unwrap() > 0.0);

    let broken = write(&dir, "broken.csv", "E_eV,phi_rad\n1.0,abc\n");
    let out = run(&["find-resonances", "--curve", broken.to_str().unwrap()]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("[io::"));
}

#[test]
fn dump_potential_grid() {
    let wash = example("washboard.json");
    let one = stdout(&run(&["dump-potential", "--config", wash.to_str().unwrap(), "--points", "1"]));
    let r = rows(&one);
    assert_eq!(r.len(), 1);
    assert_eq!(r[0][0], 0.0);
    assert!((r[0][1] + 10.0).abs() < 1e-12);

    let many = stdout(&run(&["dump-potential", "--config", wash.to_str().unwrap(), "--points", "98"]));
    assert!(many.starts_with("x_nm,V_eV\n"));
    let r = rows(&many);
    assert_eq!(r.len(), 98);
    assert!((r[97][0] - 9.7).abs() < 1e-12);
}

#[test]
fn vanishing_bias_step_gives_constant_intensity() {
    let dir = TempDir::new().unwrap();
    let cfg = interferometer(&dir, 0.7);
    let r = rows(&stdout(&run(&["interfere", "--config", cfg.to_str().unwrap(), "--dv", "0"])));
    assert_eq!(r.len(), 41);
    for row in &r {
        assert!((row[1] - r[0][1]).abs() < 1e-12);
    }
}

#[test]
fn second_arm_amplitude_scales_the_contrast() {
    let dir = TempDir::new().unwrap();
    let contrast = |a2: f64| {
        let cfg = interferometer(&dir, a2);
        let r = rows(&stdout(&run(&["interfere", "--config", cfg.to_str().unwrap()])));
        let mean = 1.0 + a2 * a2;
        r.iter().map(|row| (row[1] - mean).abs()).fold(0.0, f64::max)
    };
    let (c1, c2) = (contrast(0.2), contrast(0.4));
    assert!(c1 > 0.0);
    assert!((c2 / c1 - 2.0).abs() < 1e-9, "{c1} {c2}");
}

#[test]
fn processing_writes_samples_and_report() {
    let dir = TempDir::new().unwrap();
    let cfg = interferometer(&dir, 0.7);
    let intensity = dir.path().join("i.csv");
    stdout(&run(&["interfere", "--config", cfg.to_str().unwrap(), "--out", intensity.to_str().unwrap()]));
    // a step phase sweeps less than π, so the extrema do not reveal the envelope
    let out = run(&["process-intensity", "--input", intensity.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("[interferometer::EnvelopeNotAttained]"));

    let out = stdout(&run(&["process-intensity", "--config", cfg.to_str().unwrap(), "--calibrated"]));
    assert!(out.starts_with("V_eV,processed,regime\n"));
    assert_eq!(out.lines().count(), 42);

    // and it holds no resonance peaks to recover
    let report = dir.path().join("rep.json");
    let out =
        run(&["process-intensity", "--config", cfg.to_str().unwrap(), "--calibrated", "--report", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("[interferometer::PeaksNotSeparated]"));
}
