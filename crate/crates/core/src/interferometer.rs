//! Differential reflection resonance spectrometer.
//!
//! A beam is split into two arms that reflect off identical potentials biased
//! at `-V` and `-V-δV`. The recombined amplitude is
//! `a₁e^{iα₁} r(V) + a₂e^{iα₂} r(V+δV)` with `r = e^{2iφ}`, so the detector sees
//!
//! ```text
//! I(V) = a₁² + a₂² + 2a₁a₂ cos[(α₁-α₂) + 2(φ(V) - φ(V+δV))]
//! ```
//!
//! Since `2a₁a₂ sin[·] = ±√((I_max-I)(I-I_min))`, dividing dI/dV by that root
//! recovers `2(φ'(V) - φ'(V+δV))`, a difference of two Lorentzians δV apart.
//! Where the root vanishes the intensity is expanded to second order and the
//! magnitude becomes `√(2|I''| / (I_max - I_min))`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use thiserror::Error;

use crate::numeric::{self, interpolate, parabola_vertex};
use crate::potential::{discretize, DiscretizedPotential, PotentialSpec};
use crate::resonance::{peak_fwhm, FitMethod, ResonanceFit};
use crate::transfer::{reflection, TransferError, DEFAULT_SLICES};

/// Critical-point regime: `(I_max-I)(I-I_min) < CRITICAL_FRACTION · (I_max-I_min)²`.
pub const CRITICAL_FRACTION: f64 = 1e-4;
/// Both envelope values must be reached, after parabolic refinement, at two or
/// more extrema within this fraction of `I_max - I_min`.
pub const ENVELOPE_TOL: f64 = 1e-6;
/// Largest accepted relative mismatch between peak separation and δV.
const SEPARATION_TOL: f64 = 0.25;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InterferometerError {
    #[error("invalid interferometer configuration: {0}")]
    InvalidConfig(String),
    #[error("intensity curve needs at least 5 samples, got {0}")]
    TooFewSamples(usize),
    #[error("bias values must be strictly increasing")]
    UnsortedGrid,
    #[error("intensity is flat: no interference contrast")]
    DegenerateIntensity,
    #[error("intensity envelope {which} not attained at two extrema; widen the scan or supply the arm intensities")]
    EnvelopeNotAttained { which: &'static str },
    #[error("processed profile does not hold two separated peaks")]
    PeaksNotSeparated,
    #[error("peak separation {found} eV does not match δV = {expected} eV")]
    SeparationMismatch { expected: f64, found: f64 },
    #[error(transparent)]
    Transfer(#[from] TransferError),
}

impl InterferometerError {
    pub fn name(&self) -> &'static str {
        match self {
            Self::InvalidConfig(_) => "InvalidConfig",
            Self::TooFewSamples(_) => "TooFewSamples",
            Self::UnsortedGrid => "UnsortedGrid",
            Self::DegenerateIntensity => "DegenerateIntensity",
            Self::EnvelopeNotAttained { .. } => "EnvelopeNotAttained",
            Self::PeaksNotSeparated => "PeaksNotSeparated",
            Self::SeparationMismatch { .. } => "SeparationMismatch",
            Self::Transfer(e) => e.name(),
        }
    }
}

/// Arm amplitudes, phases, bias separation and scan grid.
#[derive(Debug, Clone, PartialEq)]
pub struct InterferometerConfig {
    pub a1: f64,
    pub a2: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    /// δV in eV.
    pub delta_v: f64,
    /// Energy of the incident beam in eV.
    pub e_incident: f64,
    pub v_grid: Vec<f64>,
    /// Standard deviation of additive Gaussian noise on I (0 disables).
    pub noise_sigma: f64,
    pub seed: u64,
    pub n_slices: usize,
}

impl InterferometerConfig {
    pub fn new(a1: f64, a2: f64, alpha1: f64, alpha2: f64, delta_v: f64, v_grid: Vec<f64>) -> Result<Self, InterferometerError> {
        let cfg = Self {
            a1,
            a2,
            alpha1,
            alpha2,
            delta_v,
            e_incident: 0.0,
            v_grid,
            noise_sigma: 0.0,
            seed: 0,
            n_slices: DEFAULT_SLICES,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), InterferometerError> {
        let bad = |m: &str| Err(InterferometerError::InvalidConfig(m.to_string()));
        if !(self.a1 > 0.0 && self.a2 > 0.0) {
            return bad("arm amplitudes must be positive");
        }
        if !(self.delta_v >= 0.0 && self.delta_v.is_finite()) {
            return bad("delta_v must be non-negative");
        }
        if self.v_grid.is_empty() {
            return bad("bias grid is empty");
        }
        if self.v_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(InterferometerError::UnsortedGrid);
        }
        if !(self.noise_sigma >= 0.0) {
            return bad("noise_sigma must be non-negative");
        }
        if self.n_slices == 0 {
            return bad("n_slices must be positive");
        }
        Ok(())
    }

    /// Uniform bias grid from `v_min` to `v_max` inclusive.
    pub fn uniform_grid(v_min: f64, v_max: f64, points: usize) -> Vec<f64> {
        match points {
            0 => vec![],
            1 => vec![v_min],
            n => (0..n).map(|i| v_min + (v_max - v_min) * i as f64 / (n - 1) as f64).collect(),
        }
    }

    /// `((a₁-a₂)², (a₁+a₂)²)`.
    pub fn envelope(&self) -> (f64, f64) {
        ((self.a1 - self.a2).powi(2), (self.a1 + self.a2).powi(2))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntensitySample {
    pub v: f64,
    pub i: f64,
}

/// Detector intensity over the bias scan.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityCurve {
    pub samples: Vec<IntensitySample>,
    pub i_max_observed: f64,
    pub i_min_observed: f64,
    /// Calibrated `(I_min, I_max)` from known arm intensities, when available.
    pub envelope: Option<(f64, f64)>,
    pub delta_v: Option<f64>,
    pub e_incident: f64,
}

impl IntensityCurve {
    /// Curve from raw data, e.g. a measured scan.
    pub fn from_samples(samples: Vec<IntensitySample>) -> Self {
        let i_max_observed = samples.iter().map(|s| s.i).fold(f64::NEG_INFINITY, f64::max);
        let i_min_observed = samples.iter().map(|s| s.i).fold(f64::INFINITY, f64::min);
        Self { samples, i_max_observed, i_min_observed, envelope: None, delta_v: None, e_incident: 0.0 }
    }

    /// Interpolated intensity.
    pub fn intensity_at(&self, v: f64) -> Option<f64> {
        let vs: Vec<f64> = self.samples.iter().map(|s| s.v).collect();
        let is: Vec<f64> = self.samples.iter().map(|s| s.i).collect();
        interpolate(&vs, &is, v)
    }
}

/// Phase argument `(α₁-α₂) + 2(φ(V) - φ(V+δV))` at bias `v`, from the
/// unbiased potential at the shifted energies. Only `2φ` enters, which is
/// single valued, so no unwrapping is needed.
pub fn phase_argument(pot: &DiscretizedPotential, cfg: &InterferometerConfig, v: f64) -> Result<f64, TransferError> {
    let arm1 = reflection(pot, cfg.e_incident + v)?;
    let arm2 = reflection(pot, cfg.e_incident + v + cfg.delta_v)?;
    Ok((cfg.alpha1 - cfg.alpha2) + (arm1.r / arm2.r).arg())
}

/// Simulated intensity over `cfg.v_grid`.
pub fn simulate_intensity(spec: &PotentialSpec, cfg: &InterferometerConfig) -> Result<IntensityCurve, InterferometerError> {
    cfg.validate()?;
    let pot = discretize(spec, cfg.n_slices).map_err(TransferError::from)?;
    let args = cfg.v_grid.par_iter().map(|&v| phase_argument(&pot, cfg, v)).collect::<Result<Vec<_>, _>>()?;
    let base = cfg.a1 * cfg.a1 + cfg.a2 * cfg.a2;
    let contrast = 2.0 * cfg.a1 * cfg.a2;
    let mut intensities: Vec<f64> = args.iter().map(|psi| base + contrast * psi.cos()).collect();
    if cfg.noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let normal = Normal::new(0.0, cfg.noise_sigma).map_err(|e| InterferometerError::InvalidConfig(e.to_string()))?;
        intensities.iter_mut().for_each(|i| *i += normal.sample(&mut rng));
    }
    let samples = cfg.v_grid.iter().zip(intensities).map(|(&v, i)| IntensitySample { v, i }).collect();
    let mut curve = IntensityCurve::from_samples(samples);
    curve.delta_v = Some(cfg.delta_v);
    curve.e_incident = cfg.e_incident;
    Ok(curve)
}

/// Local extrema of `ys` as `(index, is_max)`, plateaus reported once.
fn local_extrema(ys: &[f64]) -> Vec<(usize, bool)> {
    let mut out = Vec::new();
    let mut last_dir = 0i8;
    let mut last_change = 0usize;
    for i in 1..ys.len() {
        let dir = match ys[i].partial_cmp(&ys[i - 1]) {
            Some(std::cmp::Ordering::Greater) => 1,
            Some(std::cmp::Ordering::Less) => -1,
            _ => 0,
        };
        if dir == 0 {
            continue;
        }
        if last_dir != 0 && dir != last_dir {
            // extremum sits at the last sample before the direction changed
            out.push((last_change, last_dir > 0));
        }
        last_dir = dir;
        last_change = i;
    }
    out
}

/// Bias values of the critical points of the intensity, ignoring wiggles
/// smaller than `min_relative` of the intensity range.
pub fn critical_points(curve: &IntensityCurve, min_relative: f64) -> Vec<f64> {
    let vs: Vec<f64> = curve.samples.iter().map(|s| s.v).collect();
    let is: Vec<f64> = curve.samples.iter().map(|s| s.i).collect();
    let span = curve.i_max_observed - curve.i_min_observed;
    if is.len() < 3 || !(span > 0.0) {
        return vec![];
    }
    let threshold = min_relative * span;
    // endpoints anchor the alternating sequence but are not critical points
    let mut seq: Vec<usize> =
        std::iter::once(0).chain(local_extrema(&is).into_iter().map(|(i, _)| i)).chain(std::iter::once(is.len() - 1)).collect();
    loop {
        let smallest = (1..seq.len()).map(|k| (k, (is[seq[k]] - is[seq[k - 1]]).abs())).min_by(|a, b| a.1.total_cmp(&b.1));
        match smallest {
            Some((k, d)) if d < threshold && seq.len() > 2 => {
                // drop the pair straddling the small step, never the endpoints
                if k == 1 {
                    seq.remove(1);
                } else if k == seq.len() - 1 {
                    seq.remove(k - 1);
                } else {
                    seq.drain(k - 1..=k);
                }
            }
            _ => break,
        }
    }
    seq[1..seq.len() - 1].iter().map(|&i| vs[i]).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Regular,
    CriticalPoint,
}

impl Regime {
    pub fn code(&self) -> char {
        match self {
            Regime::Regular => 'R',
            Regime::CriticalPoint => 'C',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessedSample {
    pub v: f64,
    /// Estimate of `2(φ'(V) - φ'(V+δV))` in rad/eV.
    pub value: f64,
    pub regime: Regime,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProcessedCurve {
    pub samples: Vec<ProcessedSample>,
    /// `(I_min, I_max)` used for normalization.
    pub envelope: (f64, f64),
    pub e_incident: f64,
    /// Filled when the intensity curve carried δV and both peaks were found.
    pub recovered_fits: Vec<ResonanceFit>,
}

impl ProcessedCurve {
    pub fn value_at(&self, v: f64) -> Option<f64> {
        let vs: Vec<f64> = self.samples.iter().map(|s| s.v).collect();
        let ys: Vec<f64> = self.samples.iter().map(|s| s.value).collect();
        interpolate(&vs, &ys, v)
    }
}

/// `(I_min, I_max)` estimated from the refined extrema of the data.
pub fn estimate_envelope(curve: &IntensityCurve) -> Result<(f64, f64), InterferometerError> {
    let vs: Vec<f64> = curve.samples.iter().map(|s| s.v).collect();
    let is: Vec<f64> = curve.samples.iter().map(|s| s.i).collect();
    let mut maxima = Vec::new();
    let mut minima = Vec::new();
    for (j, is_max) in local_extrema(&is) {
        let value = if j > 0 && j + 1 < is.len() {
            parabola_vertex((vs[j - 1], is[j - 1]), (vs[j], is[j]), (vs[j + 1], is[j + 1])).map_or(is[j], |(_, y)| y)
        } else {
            is[j]
        };
        if is_max {
            maxima.push(value.max(is[j]));
        } else {
            minima.push(value.min(is[j]));
        }
    }
    let i_max = maxima.iter().copied().fold(curve.i_max_observed, f64::max);
    let i_min = minima.iter().copied().fold(curve.i_min_observed, f64::min);
    let span = i_max - i_min;
    if !(span > 0.0) {
        return Err(InterferometerError::DegenerateIntensity);
    }
    let tol = ENVELOPE_TOL * span;
    if maxima.iter().filter(|&&m| i_max - m <= tol).count() < 2 {
        return Err(InterferometerError::EnvelopeNotAttained { which: "I_max" });
    }
    if minima.iter().filter(|&&m| m - i_min <= tol).count() < 2 {
        return Err(InterferometerError::EnvelopeNotAttained { which: "I_min" });
    }
    Ok((i_min, i_max))
}

fn is_uniform(xs: &[f64]) -> bool {
    let h = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
    xs.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs())
}

/// First and second derivatives; five-point central stencils on uniform grids.
fn derivatives(xs: &[f64], ys: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = xs.len();
    let mut d1 = numeric::derivative(xs, ys);
    let mut d2 = numeric::derivative(xs, &d1);
    if n >= 5 && is_uniform(xs) {
        let h = (xs[n - 1] - xs[0]) / (n - 1) as f64;
        for i in 2..n - 2 {
            d1[i] = (ys[i - 2] - 8.0 * ys[i - 1] + 8.0 * ys[i + 1] - ys[i + 2]) / (12.0 * h);
            d2[i] = (-ys[i - 2] + 16.0 * ys[i - 1] - 30.0 * ys[i] + 16.0 * ys[i + 1] - ys[i + 2]) / (12.0 * h * h);
        }
    }
    (d1, d2)
}

/// Normalized derivative of the intensity, an estimate of `2(φ'(V) - φ'(V+δV))`.
///
/// The `±` branch is chosen for continuity: at each extremum of I the sign is
/// kept or flipped, whichever continues the linear trend of the preceding
/// values. The overall sign is fixed so that the lobe at higher bias is
/// positive, as for positive Wigner delays.
pub fn process_intensity(curve: &IntensityCurve) -> Result<ProcessedCurve, InterferometerError> {
    let n = curve.samples.len();
    if n < 5 {
        return Err(InterferometerError::TooFewSamples(n));
    }
    let vs: Vec<f64> = curve.samples.iter().map(|s| s.v).collect();
    if vs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(InterferometerError::UnsortedGrid);
    }
    if !(curve.i_max_observed > curve.i_min_observed) {
        return Err(InterferometerError::DegenerateIntensity);
    }
    let (i_min, i_max) = match curve.envelope {
        Some(env) => env,
        None => estimate_envelope(curve)?,
    };
    let span = i_max - i_min;
    if !(span > 0.0) {
        return Err(InterferometerError::DegenerateIntensity);
    }
    let is: Vec<f64> = curve.samples.iter().map(|s| s.i).collect();
    let (d1, d2) = derivatives(&vs, &is);

    let mut out: Vec<ProcessedSample> = Vec::with_capacity(n);
    let mut sigma = 1.0;
    // the two most recent regular samples as (V, value)
    let mut recent: [Option<(f64, f64)>; 2] = [None, None];
    let mut last_slope_sign = 0.0;
    let mut after_critical = false;
    for j in 0..n {
        let product = ((i_max - is[j]) * (is[j] - i_min)).max(0.0);
        if product < CRITICAL_FRACTION * span * span {
            // magnitude only; the sign is filled in once both neighbours are known
            out.push(ProcessedSample {
                v: vs[j],
                value: d2[j].abs().sqrt() / (0.5 * span).sqrt(),
                regime: Regime::CriticalPoint,
            });
            after_critical = true;
            continue;
        }
        let raw = d1[j] / product.sqrt();
        let slope_sign = d1[j].signum();
        if after_critical || slope_sign != last_slope_sign {
            // across a critical run, extrapolate both sides to the middle of the gap
            let mut at = vs[j];
            let mut probe = raw;
            if after_critical {
                let next = (j + 1 < n).then(|| ((i_max - is[j + 1]) * (is[j + 1] - i_min)).max(0.0));
                if let (Some((v1, _)), Some(pn)) = (recent[0], next.filter(|&pn| pn >= CRITICAL_FRACTION * span * span)) {
                    let raw_next = d1[j + 1] / pn.sqrt();
                    at = 0.5 * (v1 + vs[j]);
                    probe = raw + (raw_next - raw) / (vs[j + 1] - vs[j]) * (at - vs[j]);
                }
            }
            let predict = match recent {
                [Some((v1, y1)), Some((v0, y0))] => Some(y1 + (y1 - y0) / (v1 - v0) * (at - v1)),
                [Some((_, y1)), None] => Some(y1),
                _ => None,
            };
            if let Some(p) = predict {
                if (p + sigma * probe).abs() > (p - sigma * probe).abs() {
                    sigma = -sigma;
                }
            }
        }
        let value = -sigma * raw;
        if d1[j] != 0.0 {
            last_slope_sign = slope_sign;
        }
        after_critical = false;
        recent = [Some((vs[j], value)), recent[0]];
        out.push(ProcessedSample { v: vs[j], value, regime: Regime::Regular });
    }
    sign_critical_runs(&mut out);

    orient(&mut out);
    let mut processed =
        ProcessedCurve { samples: out, envelope: (i_min, i_max), e_incident: curve.e_incident, recovered_fits: vec![] };
    if let Some(dv) = curve.delta_v {
        if let Ok(rec) = recover_resonance(&processed, dv) {
            processed.recovered_fits = rec.peaks.to_vec();
        }
    }
    Ok(processed)
}

/// Gives each run of critical samples the sign of the straight line joining the
/// regular samples on either side of it.
fn sign_critical_runs(samples: &mut [ProcessedSample]) {
    let n = samples.len();
    let mut j = 0;
    while j < n {
        if samples[j].regime == Regime::Regular {
            j += 1;
            continue;
        }
        let start = j;
        while j < n && samples[j].regime == Regime::CriticalPoint {
            j += 1;
        }
        let left = start.checked_sub(1).map(|k| (samples[k].v, samples[k].value));
        let right = (j < n).then(|| (samples[j].v, samples[j].value));
        for s in &mut samples[start..j] {
            let guide = match (left, right) {
                (Some((v0, y0)), Some((v1, y1))) => y0 + (y1 - y0) * (s.v - v0) / (v1 - v0),
                (Some((_, y)), None) | (None, Some((_, y))) => y,
                (None, None) => 1.0,
            };
            if guide < 0.0 {
                s.value = -s.value;
            }
        }
    }
}

/// Flips the whole curve so that the lobe at higher bias is positive.
fn orient(samples: &mut [ProcessedSample]) {
    let weight: f64 = samples.iter().map(|s| s.value.abs()).sum();
    if !(weight > 0.0) {
        return;
    }
    let center = samples.iter().map(|s| s.value.abs() * s.v).sum::<f64>() / weight;
    let moment: f64 = samples.iter().map(|s| s.value * (s.v - center)).sum();
    if moment < 0.0 {
        samples.iter_mut().for_each(|s| s.value = -s.value);
    }
}

/// Two Lorentzian peaks recovered from a processed curve.
#[derive(Debug, Clone, PartialEq)]
pub struct Recovery {
    /// PeakFWHM fits in bias units, ordered by bias.
    pub peaks: [ResonanceFit; 2],
    /// Bias of the peak produced by the arm biased at `-V`.
    pub resonance_bias: f64,
    /// Resonance energy `E_incident + resonance_bias`.
    pub resonance_energy: f64,
    pub separation: f64,
}

/// Locates the two |value| peaks and fits each from its half-maximum points.
pub fn recover_resonance(processed: &ProcessedCurve, delta_v: f64) -> Result<Recovery, InterferometerError> {
    let s = &processed.samples;
    let mags: Vec<f64> = s.iter().map(|p| p.value.abs()).collect();
    if mags.len() < 5 {
        return Err(InterferometerError::PeaksNotSeparated);
    }
    // tallest peak, then tallest peak on the far side of the deepest dip between
    let first = (0..mags.len()).max_by(|&i, &j| mags[i].total_cmp(&mags[j])).unwrap();
    let second = (0..mags.len())
        .filter(|&k| k != first)
        .filter(|&k| {
            let (lo, hi) = if k < first { (k, first) } else { (first, k) };
            let dip = mags[lo..=hi].iter().copied().fold(f64::INFINITY, f64::min);
            dip < 0.5 * mags[k]
        })
        .max_by(|&i, &j| mags[i].total_cmp(&mags[j]))
        .ok_or(InterferometerError::PeaksNotSeparated)?;
    let (left, right) = if first < second { (first, second) } else { (second, first) };
    let split = (left..=right).min_by(|&i, &j| mags[i].total_cmp(&mags[j])).unwrap();

    let fit_range = |range: std::ops::Range<usize>| -> Result<ResonanceFit, InterferometerError> {
        let pts: Vec<(f64, f64)> = range.map(|k| (s[k].v, mags[k])).collect();
        let (e0, halfwidth, peak_height) = peak_fwhm(&pts).map_err(|_| InterferometerError::PeaksNotSeparated)?;
        Ok(ResonanceFit { e0, halfwidth, er: None, ei: None, alpha: None, beta: None, peak_height, method: FitMethod::PeakFWHM })
    };
    let lower = fit_range(0..split + 1)?;
    let upper = fit_range(split..s.len())?;
    let separation = upper.e0 - lower.e0;
    if (separation - delta_v).abs() > SEPARATION_TOL * delta_v {
        return Err(InterferometerError::SeparationMismatch { expected: delta_v, found: separation });
    }
    // arm 1 contributes +2φ'(V): the positive lobe
    let upper_value = processed.value_at(upper.e0).unwrap_or(0.0);
    let resonance_bias = if upper_value >= 0.0 { upper.e0 } else { lower.e0 };
    Ok(Recovery { peaks: [lower, upper], resonance_bias, resonance_energy: processed.e_incident + resonance_bias, separation })
}
