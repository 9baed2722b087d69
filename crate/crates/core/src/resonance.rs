//! Reflection-phase curves, Wigner delays and resonance fits.
//!
//! Near a quasibound state t11 ≈ e^{-iθ}[(E - E₀) + i·hw] up to a slowly varying
//! factor, so its real and imaginary parts are straight lines
//! `a = α(E - E_r)`, `b = β(E - E_i)`. The resonance centre and half width follow
//! from the two zero crossings weighted by the squared slopes:
//!
//! ```text
//! E₀ = (α² E_r + β² E_i) / (α² + β²)      hw = |α β (E_r - E_i)| / (α² + β²)
//! ```
//!
//! and both `dφ/dE` and `1/|t11|²` are Lorentzians of that centre and width.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::{self, interpolate, least_squares, line_fit, median, parabola_vertex, quadratic_fit};
use crate::potential::{discretize, DiscretizedPotential, PotentialSpec};
use crate::transfer::{phase_difference_mod_pi, reflection, ReflectionPoint, TransferError, DEFAULT_SLICES};

/// ħ in eV·s.
pub const HBAR_EV_S: f64 = 6.58212e-16;

/// Peaks must exceed this multiple of the median |dφ/dE| to be considered.
const PROMINENCE_FACTOR: f64 = 5.0;
/// Fit windows extend this many estimated half widths to each side.
const WINDOW_HALFWIDTHS: f64 = 10.0;
/// A feature is a quasibound state only if its background-corrected phase step
/// is at least this fraction of π.
const MIN_STEP_FRACTION: f64 = 0.5;
/// The background dθ/dE under an accepted peak may be at most this fraction
/// of the peak height, otherwise the Lorentzian description does not apply.
const MAX_BACKGROUND_FRACTION: f64 = 0.05;
/// Zero crossings are refined to this energy resolution.
const CROSSING_TOL: f64 = 1e-10;
/// Fresh transfer evaluations used for slope and background fits.
const FIT_POINTS: usize = 201;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ResonanceError {
    #[error("invalid energy range ({lo}, {hi}) for band ({v_left}, {v_right})")]
    InvalidRange { lo: f64, hi: f64, v_left: f64, v_right: f64 },
    #[error("adaptive grid exceeded {limit} samples")]
    GridExploded { limit: usize },
    #[error("energy {energy} eV outside curve range [{lo}, {hi}]")]
    OutOfRange { energy: f64, lo: f64, hi: f64 },
    #[error("no sign change of {component}(E) inside the fit window")]
    NoZeroCrossing { component: &'static str },
    #[error("{count} sign changes of {component}(E) inside the fit window")]
    MultipleCrossings { component: &'static str, count: usize },
    #[error("dφ/dE does not fall to half maximum inside the window")]
    NoHalfMaximum,
    #[error("degenerate fit: {0}")]
    DegenerateFit(&'static str),
    #[error("phase curve is empty")]
    EmptyCurve,
    #[error("curve energies must be strictly increasing")]
    UnsortedEnergies,
    #[error(transparent)]
    Transfer(#[from] TransferError),
}

impl ResonanceError {
    pub fn name(&self) -> &'static str {
        match self {
            Self::InvalidRange { .. } => "InvalidRange",
            Self::GridExploded { .. } => "GridExploded",
            Self::OutOfRange { .. } => "OutOfRange",
            Self::NoZeroCrossing { .. } => "NoZeroCrossing",
            Self::MultipleCrossings { .. } => "MultipleCrossings",
            Self::NoHalfMaximum => "NoHalfMaximum",
            Self::DegenerateFit(_) => "DegenerateFit",
            Self::EmptyCurve => "EmptyCurve",
            Self::UnsortedEnergies => "UnsortedEnergies",
            Self::Transfer(e) => e.name(),
        }
    }
}

/// One point of a phase curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSample {
    pub energy: f64,
    /// Unwrapped reflection phase in rad.
    pub phi: f64,
    pub dphi_de: f64,
    /// Re t11 in curve units (see [`PhaseCurve`]).
    pub a: f64,
    /// Im t11 in curve units.
    pub b: f64,
    /// 1/|t11|² in curve units.
    pub inv_t11_sq: f64,
}

/// Sampled φ(E) with its derivative and the t11 decomposition.
///
/// `a`, `b` and `inv_t11_sq` share one normalization per curve: physical t11
/// equals `(a + ib) · e^{ln_ref/2}` where `ln_ref` is the smallest ln|t11|² on
/// the curve, so `inv_t11_sq ≤ 1` with equality at the deepest point.
#[derive(Debug, Clone)]
pub struct PhaseCurve {
    samples: Vec<PhaseSample>,
    ln_ref: f64,
    source: Option<Arc<DiscretizedPotential>>,
}

impl PhaseCurve {
    /// Builds a curve from precomputed samples (synthetic or loaded data).
    pub fn from_samples(samples: Vec<PhaseSample>) -> Result<Self, ResonanceError> {
        if samples.is_empty() {
            return Err(ResonanceError::EmptyCurve);
        }
        if samples.windows(2).any(|w| !(w[1].energy > w[0].energy)) {
            return Err(ResonanceError::UnsortedEnergies);
        }
        Ok(Self { samples, ln_ref: 0.0, source: None })
    }

    /// Curve from energies and unwrapped phases only; dφ/dE is taken by
    /// second-order finite differences and a, b, 1/|t11|² are left as NaN.
    pub fn from_phase(energies: &[f64], phi: &[f64]) -> Result<Self, ResonanceError> {
        let dphi = numeric::derivative(energies, phi);
        let samples = energies
            .iter()
            .zip(phi)
            .zip(dphi)
            .map(|((&energy, &phi), dphi_de)| PhaseSample {
                energy,
                phi,
                dphi_de,
                a: f64::NAN,
                b: f64::NAN,
                inv_t11_sq: f64::NAN,
            })
            .collect();
        Self::from_samples(samples)
    }

    fn from_points(points: &[ReflectionPoint], source: Arc<DiscretizedPotential>) -> Self {
        let ln_ref = points.iter().map(|p| p.t11_sq_log).fold(f64::INFINITY, f64::min);
        let mut phi = points[0].phi;
        let samples = points
            .iter()
            .enumerate()
            .map(|(i, p)| {
                if i > 0 {
                    phi += phase_difference_mod_pi(p.phi, points[i - 1].phi);
                }
                Self::sample_from_point(p, phi, ln_ref)
            })
            .collect();
        Self { samples, ln_ref, source: Some(source) }
    }

    fn sample_from_point(p: &ReflectionPoint, phi: f64, ln_ref: f64) -> PhaseSample {
        let stored = (p.a * p.a + p.b * p.b).sqrt();
        let mag = (0.5 * (p.t11_sq_log - ln_ref)).exp() / stored;
        PhaseSample {
            energy: p.energy,
            phi,
            dphi_de: p.dphi_de,
            a: p.a * mag,
            b: p.b * mag,
            inv_t11_sq: (ln_ref - p.t11_sq_log).exp(),
        }
    }

    pub fn samples(&self) -> &[PhaseSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn energy_range(&self) -> (f64, f64) {
        (self.samples[0].energy, self.samples[self.samples.len() - 1].energy)
    }

    /// ln|t11|² that corresponds to `inv_t11_sq = 1`.
    pub fn ln_ref(&self) -> f64 {
        self.ln_ref
    }

    /// Discretized potential the curve was scanned from, if any.
    pub fn source(&self) -> Option<&Arc<DiscretizedPotential>> {
        self.source.as_ref()
    }

    fn energies(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.energy).collect()
    }

    fn column(&self, f: impl Fn(&PhaseSample) -> f64) -> Vec<f64> {
        self.samples.iter().map(f).collect()
    }

    /// Linearly interpolated dφ/dE.
    pub fn dphi_at(&self, energy: f64) -> Result<f64, ResonanceError> {
        let (lo, hi) = self.energy_range();
        interpolate(&self.energies(), &self.column(|s| s.dphi_de), energy).ok_or(ResonanceError::OutOfRange { energy, lo, hi })
    }

    /// Fresh sample at `energy` in this curve's units. The phase is the
    /// principal value shifted by a multiple of π to sit next to the curve.
    fn evaluate(&self, energy: f64) -> Result<Option<PhaseSample>, ResonanceError> {
        let Some(pot) = &self.source else { return Ok(None) };
        let p = reflection(pot, energy)?;
        let reference =
            interpolate(&self.energies(), &self.column(|s| s.phi), energy.clamp(self.energy_range().0, self.energy_range().1))
                .unwrap_or(p.phi);
        let phi = reference + phase_difference_mod_pi(p.phi, reference);
        Ok(Some(Self::sample_from_point(&p, phi, self.ln_ref)))
    }

    /// Uniform fresh samples over `window` when a source potential is known,
    /// otherwise the stored samples that fall inside it.
    pub fn window_samples(&self, window: (f64, f64), n: usize) -> Result<Vec<PhaseSample>, ResonanceError> {
        if let Some(pot) = &self.source {
            let energies: Vec<f64> = (0..n).map(|i| window.0 + (window.1 - window.0) * i as f64 / (n - 1) as f64).collect();
            let points = energies.par_iter().map(|&e| reflection(pot, e)).collect::<Result<Vec<_>, _>>()?;
            let reference = interpolate(
                &self.energies(),
                &self.column(|s| s.phi),
                window.0.clamp(self.energy_range().0, self.energy_range().1),
            )
            .unwrap_or(points[0].phi);
            let mut phi = reference + phase_difference_mod_pi(points[0].phi, reference);
            return Ok(points
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    if i > 0 {
                        phi += phase_difference_mod_pi(p.phi, points[i - 1].phi);
                    }
                    Self::sample_from_point(p, phi, self.ln_ref)
                })
                .collect());
        }
        Ok(self.samples.iter().filter(|s| s.energy >= window.0 && s.energy <= window.1).copied().collect())
    }
}

/// Knobs for [`scan_phase`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    pub n_slices: usize,
    /// Uniform samples before refinement.
    pub initial_samples: usize,
    /// Largest allowed phase change between neighbouring samples (rad).
    pub max_phase_step: f64,
    /// Samples required inside the half-maximum span of every dφ/dE peak.
    pub min_peak_samples: usize,
    pub max_samples: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self { n_slices: DEFAULT_SLICES, initial_samples: 257, max_phase_step: 0.3, min_peak_samples: 20, max_samples: 1_000_000 }
    }
}

/// Adaptively sampled phase curve of `spec` over `(e_lo, e_hi)`.
pub fn scan_phase(spec: &PotentialSpec, e_lo: f64, e_hi: f64, opts: &ScanOptions) -> Result<PhaseCurve, ResonanceError> {
    let pot = discretize(spec, opts.n_slices).map_err(TransferError::from)?;
    scan_discretized(Arc::new(pot), e_lo, e_hi, opts)
}

/// [`scan_phase`] on an already discretized potential.
pub fn scan_discretized(
    pot: Arc<DiscretizedPotential>,
    e_lo: f64,
    e_hi: f64,
    opts: &ScanOptions,
) -> Result<PhaseCurve, ResonanceError> {
    if !(pot.v_left() < e_lo && e_lo < e_hi && e_hi < pot.v_right()) {
        return Err(ResonanceError::InvalidRange { lo: e_lo, hi: e_hi, v_left: pot.v_left(), v_right: pot.v_right() });
    }
    let n0 = opts.initial_samples.max(3);
    let energies: Vec<f64> = (0..n0).map(|i| e_lo + (e_hi - e_lo) * i as f64 / (n0 - 1) as f64).collect();
    let mut points = evaluate_all(&pot, &energies)?;

    loop {
        let mut split = phase_jumps(&points, opts.max_phase_step);
        if split.is_empty() {
            split = unresolved_peaks(&points, opts.min_peak_samples);
        }
        let midpoints: Vec<f64> = split
            .into_iter()
            .filter_map(|i| {
                let (lo, hi) = (points[i].energy, points[i + 1].energy);
                let mid = 0.5 * (lo + hi);
                (mid > lo && mid < hi).then_some(mid)
            })
            .collect();
        if midpoints.is_empty() {
            break;
        }
        if points.len() + midpoints.len() > opts.max_samples {
            return Err(ResonanceError::GridExploded { limit: opts.max_samples });
        }
        points.extend(evaluate_all(&pot, &midpoints)?);
        points.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    }
    Ok(PhaseCurve::from_points(&points, pot))
}

fn evaluate_all(pot: &DiscretizedPotential, energies: &[f64]) -> Result<Vec<ReflectionPoint>, TransferError> {
    energies.par_iter().map(|&e| reflection(pot, e)).collect()
}

fn wrap_2pi(d: f64) -> f64 {
    let d = (d + PI).rem_euclid(2.0 * PI) - PI;
    if d == -PI {
        PI
    } else {
        d
    }
}

/// Intervals whose phase change is too large. t11 itself is checked as well
/// because a full π rotation across a narrow resonance is invisible in φ mod π.
fn phase_jumps(points: &[ReflectionPoint], max_step: f64) -> Vec<usize> {
    (0..points.len() - 1)
        .filter(|&i| {
            let (p, q) = (&points[i], &points[i + 1]);
            phase_difference_mod_pi(q.phi, p.phi).abs() >= max_step || wrap_2pi(q.t11_phase() - p.t11_phase()).abs() >= max_step
        })
        .collect()
}

/// Intervals inside the half-maximum span of any dφ/dE peak that holds fewer
/// than `min_samples` samples.
fn unresolved_peaks(points: &[ReflectionPoint], min_samples: usize) -> Vec<usize> {
    let d: Vec<f64> = points.iter().map(|p| p.dphi_de).collect();
    let mut split = Vec::new();
    for j in 1..d.len().saturating_sub(1) {
        if !(d[j] > 0.0 && d[j] > d[j - 1] && d[j] >= d[j + 1]) {
            continue;
        }
        let half = 0.5 * d[j];
        let mut lo = j;
        while lo > 0 && d[lo - 1] >= half {
            lo -= 1;
        }
        let mut hi = j;
        while hi + 1 < d.len() && d[hi + 1] >= half {
            hi += 1;
        }
        if hi - lo + 1 < min_samples {
            split.extend(lo.saturating_sub(1)..hi.min(d.len() - 2) + 1);
        }
    }
    split.sort_unstable();
    split.dedup();
    split
}

/// Wigner delay ħ·dφ/dE in seconds, with dφ/dE interpolated linearly.
pub fn wigner_delay(curve: &PhaseCurve, energy: f64) -> Result<f64, ResonanceError> {
    Ok(HBAR_EV_S * curve.dphi_at(energy)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitMethod {
    ZeroCrossing,
    PeakFWHM,
}

/// Centre and half width of one resonance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonanceFit {
    #[serde(rename = "E0")]
    pub e0: f64,
    pub halfwidth: f64,
    /// Zero crossing of Re t11 (zero-crossing fits only).
    #[serde(rename = "Er")]
    pub er: Option<f64>,
    /// Zero crossing of Im t11.
    #[serde(rename = "Ei")]
    pub ei: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    /// dφ/dE at the peak (rad/eV).
    pub peak_height: f64,
    pub method: FitMethod,
}

impl ResonanceFit {
    /// `[E₀ - n·hw, E₀ + n·hw]`.
    pub fn window(&self, n: f64) -> (f64, f64) {
        (self.e0 - n * self.halfwidth, self.e0 + n * self.halfwidth)
    }

    /// 1/|t11|² implied by the zero-crossing slopes, 1/((α²+β²)((E-E₀)²+hw²)).
    /// `None` for peak-width fits, which carry no slopes.
    pub fn lorentzian_inv_t11_sq(&self, energy: f64) -> Option<f64> {
        let (alpha, beta) = (self.alpha?, self.beta?);
        let x = energy - self.e0;
        Some(1.0 / ((alpha * alpha + beta * beta) * (x * x + self.halfwidth * self.halfwidth)))
    }
}

fn clip(window: (f64, f64), curve: &PhaseCurve) -> (f64, f64) {
    let (lo, hi) = curve.energy_range();
    (window.0.max(lo), window.1.min(hi))
}

/// Finds and fits isolated resonances: dφ/dE peaks above five times the median
/// |dφ/dE| that carry a phase step of at least π/2 over a background whose
/// slope is small against the peak.
pub fn find_resonances(curve: &PhaseCurve) -> Result<Vec<ResonanceFit>, ResonanceError> {
    let s = curve.samples();
    if s.is_empty() {
        return Err(ResonanceError::EmptyCurve);
    }
    let threshold = PROMINENCE_FACTOR * median(s.iter().map(|p| p.dphi_de.abs())).unwrap_or(0.0);
    let mut candidates: Vec<usize> = (1..s.len().saturating_sub(1))
        .filter(|&j| {
            let d = s[j].dphi_de;
            d > threshold && d > 0.0 && d > s[j - 1].dphi_de && d >= s[j + 1].dphi_de
        })
        .collect();
    candidates.sort_by(|&i, &j| s[j].dphi_de.total_cmp(&s[i].dphi_de));

    let mut fits: Vec<ResonanceFit> = Vec::new();
    for j in candidates {
        let energy = s[j].energy;
        if fits.iter().any(|f| (energy - f.e0).abs() <= WINDOW_HALFWIDTHS * f.halfwidth) {
            continue;
        }
        let hw_guess = 1.0 / s[j].dphi_de;
        let window = clip((energy - WINDOW_HALFWIDTHS * hw_guess, energy + WINDOW_HALFWIDTHS * hw_guess), curve);
        let fit = match fit_resonance(curve, window) {
            Ok(fit) => fit,
            // crossings too close to resolve also land here
            Err(
                ResonanceError::NoZeroCrossing { .. }
                | ResonanceError::MultipleCrossings { .. }
                | ResonanceError::DegenerateFit(_),
            ) => match fit_peak_fwhm(curve, window) {
                Ok(fit) => fit,
                Err(ResonanceError::NoHalfMaximum | ResonanceError::DegenerateFit(_)) => continue,
                Err(e) => return Err(e),
            },
            Err(e) => return Err(e),
        };
        let bg = match background_fit(curve, &fit) {
            Ok(bg) => bg,
            Err(ResonanceError::DegenerateFit(_)) => continue,
            Err(e) => return Err(e),
        };
        if bg.step >= MIN_STEP_FRACTION * PI && bg.slope.abs() <= MAX_BACKGROUND_FRACTION * fit.peak_height {
            fits.push(fit);
        }
    }
    fits.sort_by(|a, b| a.e0.total_cmp(&b.e0));
    Ok(fits)
}

fn sign_changes(values: &[f64]) -> Vec<usize> {
    (0..values.len().saturating_sub(1)).filter(|&i| (values[i] > 0.0) != (values[i + 1] > 0.0)).collect()
}

/// Zero-crossing fit of one resonance.
pub fn fit_resonance(curve: &PhaseCurve, window: (f64, f64)) -> Result<ResonanceFit, ResonanceError> {
    let inside: Vec<PhaseSample> =
        curve.samples().iter().filter(|s| s.energy >= window.0 && s.energy <= window.1).copied().collect();
    if inside.len() < 3 {
        return Err(ResonanceError::DegenerateFit("fewer than three samples in window"));
    }
    let energies: Vec<f64> = inside.iter().map(|s| s.energy).collect();
    let a: Vec<f64> = inside.iter().map(|s| s.a).collect();
    let b: Vec<f64> = inside.iter().map(|s| s.b).collect();
    if a.iter().chain(&b).any(|v| !v.is_finite()) {
        return Err(ResonanceError::NoZeroCrossing { component: "a" });
    }
    let er = locate_crossing(curve, &energies, &a, "a", |s| s.a)?;
    let ei = locate_crossing(curve, &energies, &b, "b", |s| s.b)?;

    let quarter = 0.25 * (window.1 - window.0);
    let mid = 0.5 * (er + ei);
    let slope_window = ((mid - quarter).max(window.0), (mid + quarter).min(window.1));
    let mut pts = curve.window_samples(slope_window, FIT_POINTS)?;
    if pts.len() < 2 {
        pts = inside.clone();
    }
    let xs: Vec<f64> = pts.iter().map(|s| s.energy).collect();
    let (_, alpha) =
        line_fit(&xs, &pts.iter().map(|s| s.a).collect::<Vec<_>>(), mid).ok_or(ResonanceError::DegenerateFit("slope of a"))?;
    let (_, beta) =
        line_fit(&xs, &pts.iter().map(|s| s.b).collect::<Vec<_>>(), mid).ok_or(ResonanceError::DegenerateFit("slope of b"))?;

    let (e0, halfwidth) = weighted_center(er, ei, alpha, beta);
    if !(halfwidth > 0.0 && halfwidth.is_finite() && e0.is_finite()) {
        return Err(ResonanceError::DegenerateFit("zero half width"));
    }
    let peak_height = match curve.evaluate(e0)? {
        Some(s) => s.dphi_de,
        None => curve.dphi_at(e0)?,
    };
    Ok(ResonanceFit {
        e0,
        halfwidth,
        er: Some(er),
        ei: Some(ei),
        alpha: Some(alpha),
        beta: Some(beta),
        peak_height,
        method: FitMethod::ZeroCrossing,
    })
}

/// Centre and half width from the zero crossings and slopes of Re/Im t11.
pub fn weighted_center(er: f64, ei: f64, alpha: f64, beta: f64) -> (f64, f64) {
    let (a2, b2) = (alpha * alpha, beta * beta);
    ((a2 * er + b2 * ei) / (a2 + b2), (alpha * beta * (er - ei)).abs() / (a2 + b2))
}

fn locate_crossing(
    curve: &PhaseCurve,
    energies: &[f64],
    values: &[f64],
    component: &'static str,
    pick: impl Fn(&PhaseSample) -> f64,
) -> Result<f64, ResonanceError> {
    let changes = sign_changes(values);
    let i = match changes.len() {
        0 => return Err(ResonanceError::NoZeroCrossing { component }),
        1 => changes[0],
        count => return Err(ResonanceError::MultipleCrossings { component, count }),
    };
    let (mut lo, mut hi) = (energies[i], energies[i + 1]);
    let (mut f_lo, mut f_hi) = (values[i], values[i + 1]);
    if curve.source().is_none() {
        return Ok(lo - f_lo * (hi - lo) / (f_hi - f_lo));
    }
    while hi - lo > CROSSING_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = pick(&curve.evaluate(mid)?.expect("source present"));
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
    }
    Ok(lo - f_lo * (hi - lo) / (f_hi - f_lo))
}

/// Fit from the half-maximum points of dφ/dE.
pub fn fit_peak_fwhm(curve: &PhaseCurve, window: (f64, f64)) -> Result<ResonanceFit, ResonanceError> {
    let pts: Vec<(f64, f64)> =
        curve.samples().iter().filter(|s| s.energy >= window.0 && s.energy <= window.1).map(|s| (s.energy, s.dphi_de)).collect();
    peak_fwhm(&pts).map(|(e0, halfwidth, peak_height)| ResonanceFit {
        e0,
        halfwidth,
        er: None,
        ei: None,
        alpha: None,
        beta: None,
        peak_height,
        method: FitMethod::PeakFWHM,
    })
}

/// Centre, half width and height of the tallest peak in `(x, y)` samples,
/// from linear interpolation of the half-maximum crossings.
pub(crate) fn peak_fwhm(pts: &[(f64, f64)]) -> Result<(f64, f64, f64), ResonanceError> {
    if pts.len() < 3 {
        return Err(ResonanceError::NoHalfMaximum);
    }
    let j = (0..pts.len()).max_by(|&i, &k| pts[i].1.total_cmp(&pts[k].1)).unwrap();
    let mut height = pts[j].1;
    if j > 0 && j + 1 < pts.len() {
        if let Some((_, y)) = parabola_vertex(pts[j - 1], pts[j], pts[j + 1]) {
            height = height.max(y);
        }
    }
    if !(height > 0.0) {
        return Err(ResonanceError::NoHalfMaximum);
    }
    let half = 0.5 * height;
    let cross = |i: usize, k: usize| {
        let (x0, y0) = pts[i];
        let (x1, y1) = pts[k];
        x0 + (half - y0) * (x1 - x0) / (y1 - y0)
    };
    let left = (1..=j).rev().find(|&i| pts[i - 1].1 < half).map(|i| cross(i - 1, i));
    let right = (j..pts.len() - 1).find(|&i| pts[i + 1].1 < half).map(|i| cross(i, i + 1));
    match (left, right) {
        (Some(l), Some(r)) => Ok((0.5 * (l + r), 0.5 * (r - l), height)),
        _ => Err(ResonanceError::NoHalfMaximum),
    }
}

/// Resonance step and linear background of φ near a fitted resonance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackgroundFit {
    /// Total background-corrected phase change across the resonance (rad).
    pub step: f64,
    /// dθ/dE of the linear background (rad/eV).
    pub slope: f64,
    /// Background value at E₀.
    pub offset: f64,
}

/// Fits `φ ≈ θ₀ + θ'(E - E₀) + (step/π)·atan((E - E₀)/hw)` over ±10 half widths.
pub fn background_fit(curve: &PhaseCurve, fit: &ResonanceFit) -> Result<BackgroundFit, ResonanceError> {
    let window = clip(fit.window(WINDOW_HALFWIDTHS), curve);
    let pts = curve.window_samples(window, FIT_POINTS)?;
    let xs: Vec<f64> = pts.iter().map(|s| s.energy).collect();
    let ys: Vec<f64> = pts.iter().map(|s| s.phi).collect();
    let (e0, hw) = (fit.e0, fit.halfwidth);
    let [offset, slope, amplitude] = least_squares(&xs, &ys, |e| [1.0, e - e0, ((e - e0) / hw).atan() / PI])
        .ok_or(ResonanceError::DegenerateFit("background fit"))?;
    Ok(BackgroundFit { step: amplitude, slope, offset })
}

/// One row of [`lorentz_profile`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePoint {
    pub energy: f64,
    /// 1/|t11|² scaled to unit maximum over the window.
    pub inv_t11_sq: f64,
    /// Pointwise inverse of `inv_t11_sq`; a parabola for a Lorentzian.
    pub inverse: f64,
    /// Residual of the quadratic fit to `inverse` at this energy.
    pub parabola_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LorentzProfile {
    pub points: Vec<ProfilePoint>,
    /// Vertex of the fitted parabola.
    pub vertex: f64,
    /// Largest |residual| relative to the largest inverse value in the window.
    pub max_relative_residual: f64,
}

/// 1/|t11|² over `window` with a parabola check on its inverse.
pub fn lorentz_profile(curve: &PhaseCurve, window: (f64, f64)) -> Result<LorentzProfile, ResonanceError> {
    let pts = curve.window_samples(window, FIT_POINTS)?;
    if pts.len() < 3 || pts.iter().any(|s| !s.inv_t11_sq.is_finite()) {
        return Err(ResonanceError::DegenerateFit("window holds no usable 1/|t11|² samples"));
    }
    let peak = pts.iter().map(|s| s.inv_t11_sq).fold(0.0, f64::max);
    let xs: Vec<f64> = pts.iter().map(|s| s.energy).collect();
    let inverse: Vec<f64> = pts.iter().map(|s| peak / s.inv_t11_sq).collect();
    let center = 0.5 * (window.0 + window.1);
    let [c0, c1, c2] = quadratic_fit(&xs, &inverse, center).ok_or(ResonanceError::DegenerateFit("parabola"))?;
    let scale = inverse.iter().fold(0.0, |m: f64, &v| m.max(v));
    let mut max_resid: f64 = 0.0;
    let points = pts
        .iter()
        .zip(&inverse)
        .map(|(s, &inv)| {
            let d = s.energy - center;
            let resid = inv - (c0 + c1 * d + c2 * d * d);
            max_resid = max_resid.max(resid.abs());
            ProfilePoint { energy: s.energy, inv_t11_sq: s.inv_t11_sq / peak, inverse: inv, parabola_residual: resid }
        })
        .collect();
    Ok(LorentzProfile { points, vertex: center - c1 / (2.0 * c2), max_relative_residual: max_resid / scale })
}
