//! Acceptance checks, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines are printed even when output is captured.

mod common;

use std::f64::consts::{FRAC_PI_4, PI};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{max_norm, plane_wave_transfer, slab_potential, step_spec};
use quasibound::config::load_interferometer;
use quasibound::interferometer::{critical_points, process_intensity, recover_resonance, simulate_intensity, Regime};
use quasibound::numeric::parabola_vertex;
use quasibound::potential::{discretize, PhysicalParams, PotentialSpec, Shape, HBAR2_OVER_2ME};
use quasibound::resonance::{
    background_fit, find_resonances, lorentz_profile, scan_phase, FitMethod, PhaseCurve, ResonanceFit, ScanOptions,
};
use quasibound::transfer::{phase_difference_mod_pi, reflection, transfer_matrix, DEFAULT_SLICES};

type Outcome = (bool, String);

fn example(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples").join(name)
}

fn washboard_scan() -> (PhaseCurve, Vec<ResonanceFit>) {
    let curve = scan_phase(&PotentialSpec::reference_washboard(), -9.9, 19.0, &ScanOptions::default()).unwrap();
    let fits = find_resonances(&curve).unwrap();
    (curve, fits)
}

fn near(fits: &[ResonanceFit], e: f64) -> ResonanceFit {
    *fits.iter().min_by(|a, b| (a.e0 - e).abs().total_cmp(&(b.e0 - e).abs())).expect("a resonance")
}

fn metastable_states() -> Outcome {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_quasibound"))
        .args(["find-resonances", "--config", example("washboard.json").to_str().unwrap(), "--emin", "-9.9", "--emax", "19.0"])
        .output()
        .expect("binary runs");
    let secs = start.elapsed().as_secs_f64();
    if !out.status.success() {
        return (false, String::from_utf8_lossy(&out.stderr).into_owned());
    }
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let e0: Vec<f64> = v["resonances"].as_array().unwrap().iter().map(|r| r["E0"].as_f64().unwrap()).collect();
    let ok = e0.len() == 2 && (e0[0] - 0.32).abs() <= 0.03 && (e0[1] - 7.87).abs() <= 0.05 && secs < 120.0;
    (ok, format!("E0 = {e0:?} eV in {secs:.2} s"))
}

fn unitarity() -> Outcome {
    let pot = discretize(&PotentialSpec::reference_washboard(), DEFAULT_SLICES).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let worst = (0..1000)
        .map(|_| {
            let e = rng.random_range(-9.5..19.0);
            (reflection(&pot, e).unwrap().r.norm() - 1.0).abs()
        })
        .fold(0.0, f64::max);
    (worst < 1e-9, format!("max ||r| - 1| = {worst:.2e}"))
}

fn step_oracle() -> Outcome {
    let pot = discretize(&step_spec(10.0), DEFAULT_SLICES).unwrap();
    let worst = (0..100)
        .map(|i| {
            let e = 0.5 + 9.0 * i as f64 / 99.0;
            let (k, kappa) = ((e / HBAR2_OVER_2ME).sqrt(), ((10.0 - e) / HBAR2_OVER_2ME).sqrt());
            phase_difference_mod_pi(reflection(&pot, e).unwrap().phi, -(kappa / k).atan()).abs()
        })
        .fold(0.0, f64::max);
    let mid = phase_difference_mod_pi(reflection(&pot, 5.0).unwrap().phi, -FRAC_PI_4).abs();
    (worst < 1e-6 && mid < 1e-9, format!("max error {worst:.2e} rad, at 5 eV {mid:.2e} rad"))
}

fn lorentzian_cross_check(curve: &PhaseCurve, fits: &[ResonanceFit]) -> Outcome {
    let fit = near(fits, 7.87);
    if fit.method != FitMethod::ZeroCrossing {
        return (false, format!("7.87 eV resonance fitted by {:?}", fit.method));
    }
    let hw = fit.halfwidth;
    let pts = curve.window_samples(fit.window(2.0), 2001).unwrap();

    let j = (1..pts.len() - 1).max_by(|&a, &b| pts[a].dphi_de.total_cmp(&pts[b].dphi_de)).unwrap();
    let p = |i: usize| (pts[i].energy, pts[i].dphi_de);
    let argmax = parabola_vertex(p(j - 1), p(j), p(j + 1)).map_or(pts[j].energy, |v| v.0);
    let a = (argmax - fit.e0).abs() / hw;

    let peak = fit.lorentzian_inv_t11_sq(fit.e0).unwrap();
    let b = pts.iter().map(|s| (s.inv_t11_sq - fit.lorentzian_inv_t11_sq(s.energy).unwrap()).abs()).fold(0.0, f64::max) / peak;

    let c = lorentz_profile(curve, fit.window(2.0)).unwrap().max_relative_residual;
    (
        a < 0.02 && b < 0.01 && c < 0.01,
        format!(
            "(a) |E0 - argmax| = {:.2}% hw, (b) {:.2}% of peak, (c) parabola residual {:.2}%",
            100.0 * a,
            100.0 * b,
            100.0 * c
        ),
    )
}

fn phase_steps(curve: &PhaseCurve, fits: &[ResonanceFit]) -> Outcome {
    let steps: Vec<f64> = fits.iter().map(|f| background_fit(curve, f).unwrap().step / PI).collect();
    let ok = !steps.is_empty() && steps.iter().all(|s| (s - 1.0).abs() < 0.05);
    (ok, format!("step/π = {steps:.4?}"))
}

fn interferometer_pattern() -> Outcome {
    let setup = load_interferometer(&example("fig6.json")).unwrap();
    let cfg = &setup.config;
    let curve = simulate_intensity(&setup.potential, cfg).unwrap();
    let n_crit = critical_points(&curve, 0.0).len();

    let e0 = converged_center(&setup.potential);
    let mid = e0 - 0.5 * cfg.delta_v;
    let span = curve.i_max_observed - curve.i_min_observed;
    let (lo, hi) = (curve.samples[0].v, curve.samples.last().unwrap().v);
    let defect = curve
        .samples
        .iter()
        .filter_map(|s| {
            let m = 2.0 * mid - s.v;
            (lo..=hi).contains(&m).then(|| (s.i - curve.intensity_at(m).unwrap()).abs())
        })
        .fold(0.0, f64::max)
        / span;

    let (i_lo, i_hi) = ((cfg.a1 - cfg.a2).powi(2), (cfg.a1 + cfg.a2).powi(2));
    let eps = 1e-12;
    let bounded = curve.samples.iter().all(|s| s.i >= i_lo - eps && s.i <= i_hi + eps);
    (
        n_crit == 5 && defect < 0.02 && bounded,
        format!("{n_crit} critical points, symmetry defect {:.2}%, bounds respected: {bounded}", 100.0 * defect),
    )
}

fn converged_center(spec: &PotentialSpec) -> f64 {
    let curve = scan_phase(spec, 7.0, 9.0, &ScanOptions::default()).unwrap();
    near(&find_resonances(&curve).unwrap(), 7.87).e0
}

fn processing_round_trip() -> Outcome {
    let setup = load_interferometer(&example("fig6.json")).unwrap();
    let cfg = &setup.config;
    let curve = simulate_intensity(&setup.potential, cfg).unwrap();
    let processed = process_intensity(&curve).unwrap();

    let pot = discretize(&setup.potential, cfg.n_slices).unwrap();
    let dphi = |e: f64| reflection(&pot, e).unwrap().dphi_de;
    let exact: Vec<f64> =
        processed.samples.iter().map(|s| 2.0 * (dphi(cfg.e_incident + s.v) - dphi(cfg.e_incident + s.v + cfg.delta_v))).collect();
    let peak = exact.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    let err = processed
        .samples
        .iter()
        .zip(&exact)
        .filter(|(s, _)| s.regime == Regime::Regular)
        .map(|(s, x)| (s.value - x).abs())
        .fold(0.0, f64::max)
        / peak;

    let rec = recover_resonance(&processed, cfg.delta_v).unwrap();
    let sep = (rec.separation - cfg.delta_v).abs() / cfg.delta_v;
    let direct = scan_phase(&setup.potential, 7.0, 9.0, &ScanOptions::default()).unwrap();
    let fit = near(&find_resonances(&direct).unwrap(), 7.87);
    let center = (rec.resonance_energy - fit.e0).abs() / fit.halfwidth;
    (
        err < 0.01 && sep < 0.02 && center < 0.03,
        format!(
            "regular-sample error {:.3}% of peak, separation {:.6} eV ({:.2}%), center off by {:.2}% hw",
            100.0 * err,
            rec.separation,
            100.0 * sep,
            100.0 * center
        ),
    )
}

fn brute_force_slabs() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut worst, mut worst_conj, mut done) = (0.0f64, 0.0f64, 0);
    while done < 200 {
        let n = rng.random_range(0..=5);
        let slabs: Vec<(f64, f64)> = (0..n).map(|_| (rng.random_range(0.05..1.0), rng.random_range(-5.0..25.0))).collect();
        let e: f64 = rng.random_range(0.05..19.95);
        if slabs.iter().any(|&(_, v)| (e - v).abs() < 1e-3) {
            continue;
        }
        let t = transfer_matrix(&slab_potential(&slabs, 0.0, 20.0), e).unwrap().physical();
        let oracle = plane_wave_transfer(0.0, &slabs, 0.0, 20.0, HBAR2_OVER_2ME, e);
        let scale = max_norm(&oracle);
        for i in 0..2 {
            for j in 0..2 {
                worst = worst.max((t[i][j] - oracle[i][j]).norm() / scale);
            }
        }
        worst_conj = worst_conj.max((t[1][0] - t[0][0].conj()).norm() / scale);
        done += 1;
    }
    (worst < 1e-10 && worst_conj < 1e-10, format!("max relative deviation {worst:.2e}, |t21 - conj t11| {worst_conj:.2e}"))
}

fn thick_barrier() -> Outcome {
    let spec = PotentialSpec::new(
        Shape::SquareBarrier { v_base: 0.0, v_top: 20.0, width: 60.0 },
        0.0,
        60.0,
        0.0,
        25.0,
        PhysicalParams::default(),
    )
    .unwrap();
    let pot = discretize(&spec, DEFAULT_SLICES).unwrap();
    let (mut worst, mut ln_t11) = (0.0f64, f64::INFINITY);
    for i in 0..200 {
        let e = 0.5 + 14.5 * i as f64 / 199.0;
        let p = reflection(&pot, e).unwrap();
        let finite = p.r.re.is_finite() && p.r.im.is_finite() && p.phi.is_finite() && p.dphi_de.is_finite();
        worst = worst.max(if finite { (p.r.norm() - 1.0).abs() } else { f64::INFINITY });
        ln_t11 = ln_t11.min(0.5 * p.t11_sq_log);
    }
    (ln_t11 > 600.0 && worst < 1e-8, format!("min ln|t11| = {ln_t11:.1}, max ||r| - 1| = {worst:.2e}"))
}

fn check(n: usize, name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let (ok, detail) = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
        (false, format!("panicked: {}", msg.unwrap_or_default()))
    });
    println!("criterion {n} {}: {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    ok
}

fn main() -> ExitCode {
    let (curve, fits) = washboard_scan();
    let results = [
        check(1, "metastable states", metastable_states),
        check(2, "unitarity", unitarity),
        check(3, "step closed form", step_oracle),
        check(4, "Lorentzian cross-validation", || lorentzian_cross_check(&curve, &fits)),
        check(5, "phase step", || phase_steps(&curve, &fits)),
        check(6, "interferometer pattern", interferometer_pattern),
        check(7, "processing round trip", processing_round_trip),
        check(8, "brute-force slabs", brute_force_slabs),
        check(9, "thick barrier", thick_barrier),
    ];
    let passed = results.iter().filter(|&&ok| ok).count();
    println!("acceptance: {passed}/{} passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
