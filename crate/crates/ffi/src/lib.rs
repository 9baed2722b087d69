//! C interface to `quasibound`.
//!
//! Every fallible call returns a [`QbStatus`]; on failure the message is kept
//! per thread and read back with [`qb_last_error_message`]. Handles are opaque
//! and released with their `_free` function. No call unwinds across the
//! boundary: a panic is reported as `QB_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::{Arc, OnceLock};

use quasibound::config::parse_potential;
use quasibound::interferometer::{simulate_intensity, InterferometerConfig};
use quasibound::potential::{discretize, DiscretizedPotential, PotentialSpec};
use quasibound::resonance::{find_resonances, scan_discretized, FitMethod, PhaseCurve, ScanOptions};
use quasibound::transfer::{reflection, TransferError, DEFAULT_SLICES};
use quasibound::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Potential = 4,
    Transfer = 5,
    Resonance = 6,
    Interferometer = 7,
    /// Output buffer too small; the required count was still written.
    BufferTooSmall = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QbFitMethod {
    ZeroCrossing = 0,
    PeakFwhm = 1,
}

/// A validated potential together with its default discretization.
pub struct QbPotential {
    spec: PotentialSpec,
    default_grid: OnceLock<Arc<DiscretizedPotential>>,
}

/// An adaptively sampled reflection-phase curve.
pub struct QbPhaseCurve {
    curve: PhaseCurve,
}

/// Reflection at one energy. `ln_abs_t11` stays finite where |t11| itself
/// would overflow.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct QbReflection {
    pub energy: f64,
    pub r_re: f64,
    pub r_im: f64,
    pub phi: f64,
    pub dphi_de: f64,
    pub ln_abs_t11: f64,
}

/// One phase-curve sample; `a`, `b` and `inv_t11_sq` share the curve's
/// normalization.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct QbPhaseSample {
    pub energy: f64,
    pub phi: f64,
    pub dphi_de: f64,
    pub a: f64,
    pub b: f64,
    pub inv_t11_sq: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QbResonance {
    pub e0: f64,
    pub halfwidth: f64,
    pub peak_height: f64,
    pub method: QbFitMethod,
}

/// Two-arm interferometer settings; the bias grid is passed separately.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QbInterferometer {
    pub a1: f64,
    pub a2: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub delta_v: f64,
    pub e_incident: f64,
    /// 0 selects the default slab count.
    pub n_slices: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: QbStatus, msg: &str) -> QbStatus {
    set_error(msg);
    status
}

fn from_error(err: Error) -> QbStatus {
    let name = err.qualified_name();
    let status = match name.split("::").next() {
        Some("config") | Some("io") => QbStatus::Config,
        Some("potential") => QbStatus::Potential,
        Some("transfer") => QbStatus::Transfer,
        Some("resonance") => QbStatus::Resonance,
        Some("interferometer") => QbStatus::Interferometer,
        _ => QbStatus::InvalidArgument,
    };
    fail(status, &format!("{name}: {err}"))
}

/// Runs `f` with panics turned into `QB_STATUS_PANIC`.
fn guard(f: impl FnOnce() -> Result<(), QbStatus>) -> QbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            QbStatus::Ok
        }
        Ok(Err(status)) => status,
        Err(_) => fail(QbStatus::Panic, "internal panic"),
    }
}

fn non_null<'a, T>(p: *const T, what: &str) -> Result<&'a T, QbStatus> {
    // SAFETY: callers pass either null or a pointer obtained from this library
    // (or a valid C object of type T) that outlives the call.
    unsafe { p.as_ref() }.ok_or_else(|| fail(QbStatus::NullPointer, &format!("{what} is null")))
}

fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, QbStatus> {
    // SAFETY: as for `non_null`, with exclusive access for the duration of the call.
    unsafe { p.as_mut() }.ok_or_else(|| fail(QbStatus::NullPointer, &format!("{what} is null")))
}

impl QbPotential {
    fn grid(&self, n_slices: usize) -> Result<Arc<DiscretizedPotential>, QbStatus> {
        let build = |n| discretize(&self.spec, n).map(Arc::new).map_err(|e| from_error(Error::Transfer(TransferError::from(e))));
        if n_slices == 0 || n_slices == DEFAULT_SLICES {
            if let Some(g) = self.default_grid.get() {
                return Ok(g.clone());
            }
            let g = build(DEFAULT_SLICES)?;
            return Ok(self.default_grid.get_or_init(|| g).clone());
        }
        build(n_slices)
    }

    fn boxed(spec: PotentialSpec) -> *mut QbPotential {
        Box::into_raw(Box::new(QbPotential { spec, default_grid: OnceLock::new() }))
    }
}

/// Message of the last failed call on this thread, empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn qb_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a potential from a JSON configuration document.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn qb_potential_from_json(json: *const c_char, out: *mut *mut QbPotential) -> QbStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = std::ptr::null_mut();
        if json.is_null() {
            return Err(fail(QbStatus::NullPointer, "json is null"));
        }
        // SAFETY: checked non-null; the caller guarantees NUL termination.
        let text =
            unsafe { CStr::from_ptr(json) }.to_str().map_err(|_| fail(QbStatus::InvalidArgument, "json is not valid UTF-8"))?;
        let spec = parse_potential(text).map_err(|e| from_error(e.into()))?;
        *out = QbPotential::boxed(spec);
        Ok(())
    })
}

/// The reference washboard potential.
///
/// # Safety
/// `out` must be a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn qb_potential_washboard(out: *mut *mut QbPotential) -> QbStatus {
    guard(|| {
        *out_ptr(out, "out")? = QbPotential::boxed(PotentialSpec::reference_washboard());
        Ok(())
    })
}

/// Releases a potential. Null is ignored.
///
/// # Safety
/// `pot` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qb_potential_free(pot: *mut QbPotential) {
    if !pot.is_null() {
        // SAFETY: created by Box::into_raw in this library.
        drop(unsafe { Box::from_raw(pot) });
    }
}

/// V(x) in eV.
///
/// # Safety
/// `pot` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qb_potential_evaluate(pot: *const QbPotential, x: f64, out: *mut f64) -> QbStatus {
    guard(|| {
        let pot = non_null(pot, "potential")?;
        *out_ptr(out, "out")? = pot.spec.evaluate(x);
        Ok(())
    })
}

/// Left and right asymptotes in eV.
///
/// # Safety
/// `pot` must be a live handle; both outputs writable.
#[no_mangle]
pub unsafe extern "C" fn qb_potential_asymptotes(pot: *const QbPotential, v_left: *mut f64, v_right: *mut f64) -> QbStatus {
    guard(|| {
        let pot = non_null(pot, "potential")?;
        *out_ptr(v_left, "v_left")? = pot.spec.v_left();
        *out_ptr(v_right, "v_right")? = pot.spec.v_right();
        Ok(())
    })
}

/// Reflection at `energy` with `n_slices` slabs (0 for the default).
///
/// # Safety
/// `pot` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qb_reflection(
    pot: *const QbPotential,
    energy: f64,
    n_slices: usize,
    out: *mut QbReflection,
) -> QbStatus {
    guard(|| {
        let pot = non_null(pot, "potential")?;
        let out = out_ptr(out, "out")?;
        let grid = pot.grid(n_slices)?;
        let p = reflection(&grid, energy).map_err(|e| from_error(e.into()))?;
        *out = QbReflection {
            energy: p.energy,
            r_re: p.r.re,
            r_im: p.r.im,
            phi: p.phi,
            dphi_de: p.dphi_de,
            ln_abs_t11: 0.5 * p.t11_sq_log,
        };
        Ok(())
    })
}

/// Adaptive phase scan over `(e_lo, e_hi)`. `max_phase_step <= 0` and
/// `n_slices == 0` select the defaults.
///
/// # Safety
/// `pot` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qb_scan_phase(
    pot: *const QbPotential,
    e_lo: f64,
    e_hi: f64,
    max_phase_step: f64,
    n_slices: usize,
    out: *mut *mut QbPhaseCurve,
) -> QbStatus {
    guard(|| {
        let pot = non_null(pot, "potential")?;
        let out = out_ptr(out, "out")?;
        *out = std::ptr::null_mut();
        let mut opts = ScanOptions::default();
        if max_phase_step > 0.0 {
            opts.max_phase_step = max_phase_step;
        }
        let curve = scan_discretized(pot.grid(n_slices)?, e_lo, e_hi, &opts).map_err(|e| from_error(e.into()))?;
        *out = Box::into_raw(Box::new(QbPhaseCurve { curve }));
        Ok(())
    })
}

/// Releases a phase curve. Null is ignored.
///
/// # Safety
/// `curve` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qb_phase_curve_free(curve: *mut QbPhaseCurve) {
    if !curve.is_null() {
        // SAFETY: created by Box::into_raw in this library.
        drop(unsafe { Box::from_raw(curve) });
    }
}

/// Number of samples, 0 for a null handle.
///
/// # Safety
/// `curve` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qb_phase_curve_len(curve: *const QbPhaseCurve) -> usize {
    // SAFETY: null or live, per the contract.
    unsafe { curve.as_ref() }.map_or(0, |c| c.curve.len())
}

/// Sample `index` of the curve, in increasing energy.
///
/// # Safety
/// `curve` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qb_phase_curve_sample(curve: *const QbPhaseCurve, index: usize, out: *mut QbPhaseSample) -> QbStatus {
    guard(|| {
        let curve = non_null(curve, "curve")?;
        let out = out_ptr(out, "out")?;
        let s = curve.curve.samples().get(index).ok_or_else(|| {
            fail(QbStatus::InvalidArgument, &format!("index {index} out of range for {} samples", curve.curve.len()))
        })?;
        *out = QbPhaseSample { energy: s.energy, phi: s.phi, dphi_de: s.dphi_de, a: s.a, b: s.b, inv_t11_sq: s.inv_t11_sq };
        Ok(())
    })
}

/// Fits the resonances of `curve` into `out[0..capacity]`. `count` receives
/// the number found; if it exceeds `capacity` nothing is written and
/// `QB_STATUS_BUFFER_TOO_SMALL` is returned. `out` may be null when
/// `capacity` is 0.
///
/// # Safety
/// `curve` must be a live handle, `out` valid for `capacity` elements and
/// `count` writable.
#[no_mangle]
pub unsafe extern "C" fn qb_find_resonances(
    curve: *const QbPhaseCurve,
    out: *mut QbResonance,
    capacity: usize,
    count: *mut usize,
) -> QbStatus {
    guard(|| {
        let curve = non_null(curve, "curve")?;
        let count = out_ptr(count, "count")?;
        let fits = find_resonances(&curve.curve).map_err(|e| from_error(e.into()))?;
        *count = fits.len();
        if fits.len() > capacity {
            return Err(fail(QbStatus::BufferTooSmall, &format!("{} resonances, capacity {capacity}", fits.len())));
        }
        if fits.is_empty() {
            return Ok(());
        }
        if out.is_null() {
            return Err(fail(QbStatus::NullPointer, "out is null"));
        }
        // SAFETY: non-null and valid for `capacity >= fits.len()` elements.
        let slots = unsafe { std::slice::from_raw_parts_mut(out, fits.len()) };
        for (slot, f) in slots.iter_mut().zip(&fits) {
            *slot = QbResonance {
                e0: f.e0,
                halfwidth: f.halfwidth,
                peak_height: f.peak_height,
                method: match f.method {
                    FitMethod::ZeroCrossing => QbFitMethod::ZeroCrossing,
                    FitMethod::PeakFWHM => QbFitMethod::PeakFwhm,
                },
            };
        }
        Ok(())
    })
}

/// Noise-free interferometer intensity at the `n` biases of `v_grid`
/// (strictly increasing), written to `out[0..n]`.
///
/// # Safety
/// `pot` must be a live handle, `settings` readable, and `v_grid` and `out`
/// valid for `n` elements.
#[no_mangle]
pub unsafe extern "C" fn qb_simulate_intensity(
    pot: *const QbPotential,
    settings: *const QbInterferometer,
    v_grid: *const f64,
    n: usize,
    out: *mut f64,
) -> QbStatus {
    guard(|| {
        let pot = non_null(pot, "potential")?;
        let s = non_null(settings, "settings")?;
        if n == 0 {
            return Err(fail(QbStatus::InvalidArgument, "empty bias grid"));
        }
        if v_grid.is_null() || out.is_null() {
            return Err(fail(QbStatus::NullPointer, "v_grid or out is null"));
        }
        // SAFETY: non-null and valid for n elements, per the contract.
        let grid = unsafe { std::slice::from_raw_parts(v_grid, n) }.to_vec();
        let mut cfg =
            InterferometerConfig::new(s.a1, s.a2, s.alpha1, s.alpha2, s.delta_v, grid).map_err(|e| from_error(e.into()))?;
        cfg.e_incident = s.e_incident;
        cfg.n_slices = if s.n_slices == 0 { DEFAULT_SLICES } else { s.n_slices };
        let curve = simulate_intensity(&pot.spec, &cfg).map_err(|e| from_error(e.into()))?;
        // SAFETY: non-null and valid for n elements.
        let dst = unsafe { std::slice::from_raw_parts_mut(out, n) };
        for (d, s) in dst.iter_mut().zip(&curve.samples) {
            *d = s.i;
        }
        Ok(())
    })
}
