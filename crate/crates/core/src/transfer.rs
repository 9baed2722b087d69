//! Transfer matrices across piecewise-constant potentials in the fully
//! reflecting band `v_left < E < v_right`.
//!
//! Amplitudes on the left are plane waves `A e^{ik(x-x_min)} + B e^{-ik(x-x_min)}`;
//! on the right they are real exponentials `D e^{-κ(x-x_max)} + G e^{κ(x-x_max)}`,
//! ordered (decaying, growing). With that ordering
//!
//! ```text
//! [A]   [t11 t12] [D]
//! [B] = [t21 t22] [G]
//! ```
//!
//! the physical solution has `G = 0`, so `r = B/A = t21/t11`, and because the
//! state `(ψ, ψ')` is real for real energies, `t21 = conj(t11)` and
//! `t22 = conj(t12)` hold exactly.
//!
//! Propagation runs from `x_max` to `x_min` on the real state vector. Each slab
//! matrix is written in terms of `z = (E - V)/p` so that the oscillatory,
//! evanescent and flat (`E = V`) cases share one expression; the flat case
//! reduces to the linear solution `ψ = c1 + c2 (x - x0)`.

use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_2, LN_2, PI};
use thiserror::Error;

use crate::potential::{discretize, DiscretizedPotential, PotentialError, PotentialSpec};

/// Slab count used when no explicit resolution is requested.
pub const DEFAULT_SLICES: usize = 8192;

const CONVERGENCE_START: usize = 256;
const CONVERGENCE_LIMIT: usize = 1 << 20;

/// Above this κw a slab's growth factor e^{κw} is moved into the log scale.
const EVANESCENT_SPLIT: f64 = 20.0;
/// Below this |z w²| the slab entries are summed from their Taylor series.
const SERIES_LIMIT: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransferError {
    #[error("energy {energy} eV is not above the left asymptote {v_left} eV: no incident channel")]
    EnergyBelowLeftAsymptote { energy: f64, v_left: f64 },
    #[error("energy {energy} eV is not below the right asymptote {v_right} eV: transmission channel open")]
    TransmissionChannelOpen { energy: f64, v_right: f64 },
    #[error("reflection phase did not converge to {tol} rad (last change {last_change} rad at {n_slices} slices)")]
    NoConvergence { n_slices: usize, last_change: f64, tol: f64 },
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error(transparent)]
    Potential(#[from] PotentialError),
}

impl TransferError {
    pub fn name(&self) -> &'static str {
        match self {
            Self::EnergyBelowLeftAsymptote { .. } => "EnergyBelowLeftAsymptote",
            Self::TransmissionChannelOpen { .. } => "TransmissionChannelOpen",
            Self::NoConvergence { .. } => "NoConvergence",
            Self::InvalidTolerance(_) => "InvalidTolerance",
            Self::Potential(e) => e.name(),
        }
    }
}

/// Basis in which the matrix elements are expressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    /// Left: `e^{±ik(x-x_min)}`. Right: `e^{∓κ(x-x_max)}`, decaying first.
    PlaneWaveToEvanescent,
}

/// Transfer matrix at one energy, stored with its magnitude factored out:
/// the physical element is the stored element times `e^{log_scale}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix {
    pub t11: Complex64,
    pub t12: Complex64,
    pub t21: Complex64,
    pub t22: Complex64,
    pub log_scale: f64,
    pub energy: f64,
    pub basis: Basis,
}

impl TransferMatrix {
    pub fn elements(&self) -> [[Complex64; 2]; 2] {
        [[self.t11, self.t12], [self.t21, self.t22]]
    }

    /// Unscaled elements. Overflows for deep barriers; meant for small systems.
    pub fn physical(&self) -> [[Complex64; 2]; 2] {
        let s = self.log_scale.exp();
        self.elements().map(|row| row.map(|t| t * s))
    }

    /// Largest stored element magnitude.
    pub fn max_element(&self) -> f64 {
        self.elements().iter().flatten().map(|t| t.norm()).fold(0.0, f64::max)
    }

    pub fn determinant_log(&self) -> Complex64 {
        let det = self.t11 * self.t22 - self.t12 * self.t21;
        det.ln() + 2.0 * self.log_scale
    }
}

/// Reflection data at one energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionPoint {
    pub energy: f64,
    /// `t21 / t11`.
    pub r: Complex64,
    /// Principal value `arg(r)/2` in `(-π/2, π/2]`.
    pub phi: f64,
    /// Re t11 of the stored (scaled) matrix.
    pub a: f64,
    /// Im t11 of the stored (scaled) matrix.
    pub b: f64,
    /// Log scale of the stored matrix; physical t11 = (a + ib) e^{log_scale}.
    pub log_scale: f64,
    /// ln |t11|² of the physical element.
    pub t11_sq_log: f64,
    /// dφ/dE in rad/eV, differentiated through the propagation.
    pub dphi_de: f64,
    /// Slab count the result was computed with.
    pub n_slices: usize,
}

impl ReflectionPoint {
    /// `-arg(t11)`, which agrees with `phi` modulo π but also registers the
    /// π rotation of t11 across a resonance.
    pub fn t11_phase(&self) -> f64 {
        -self.b.atan2(self.a)
    }
}

type Mat2 = [[f64; 2]; 2];

#[inline]
fn mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

#[inline]
fn add(a: &Mat2, b: &Mat2) -> Mat2 {
    [[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]]
}

#[inline]
fn scale(a: &mut Mat2, s: f64) {
    a.iter_mut().flatten().for_each(|x| *x *= s);
}

/// Entries of one slab: `C = cos(√z w)`, `S = sin(√z w)/√z` and `dS/dz`,
/// all multiplied by `e^{-log_factor}`.
struct SlabEntries {
    c: f64,
    s: f64,
    ds_dz: f64,
    log_factor: f64,
}

fn slab_entries(z: f64, w: f64) -> SlabEntries {
    let y = z * w * w;
    if y.abs() < SERIES_LIMIT {
        // C = Σ (-y)^n/(2n)!, S = w Σ (-y)^n/(2n+1)!, dS/dz = w³ Σ_{n≥1} n (-1)^n y^{n-1}/(2n+1)!
        let (mut c, mut s, mut ds) = (0.0, 0.0, 0.0);
        let mut term = 1.0; // (-y)^n
        let mut prev = 0.0; // (-y)^{n-1}
        let mut fact_even = 1.0; // (2n)!
        for n in 0..10 {
            let fact_odd = fact_even * (2 * n + 1) as f64;
            c += term / fact_even;
            s += term / fact_odd;
            if n >= 1 {
                ds -= n as f64 * prev / fact_odd;
            }
            prev = term;
            term *= -y;
            fact_even = fact_odd * (2 * n + 2) as f64;
        }
        return SlabEntries { c, s: w * s, ds_dz: w * w * w * ds, log_factor: 0.0 };
    }
    let (c, s, log_factor) = if z > 0.0 {
        let q = z.sqrt();
        let (sin, cos) = (q * w).sin_cos();
        (cos, sin / q, 0.0)
    } else {
        let kappa = (-z).sqrt();
        let kw = kappa * w;
        if kw > EVANESCENT_SPLIT {
            let e = (-2.0 * kw).exp();
            (0.5 * (1.0 + e), 0.5 * (1.0 - e) / kappa, kw)
        } else {
            (kw.cosh(), kw.sinh() / kappa, 0.0)
        }
    };
    SlabEntries { c, s, ds_dz: (w * c - s) / (2.0 * z), log_factor }
}

/// Product of backward slab matrices from `x_max` to `x_min` acting on the
/// real state `(ψ, ψ')`, with its energy derivative. The true product is
/// `m * e^{log_scale}`.
struct Propagation {
    m: Mat2,
    dm: Mat2,
    log_scale: f64,
}

fn propagate(pot: &DiscretizedPotential, energy: f64) -> Propagation {
    let p = pot.params().kinetic_prefactor();
    let mut m: Mat2 = [[1.0, 0.0], [0.0, 1.0]];
    let mut dm: Mat2 = [[0.0; 2]; 2];
    let mut exp2: i64 = 0;
    let mut log_extra = 0.0;
    for slice in pot.slices().iter().rev() {
        let z = (energy - slice.v) / p;
        let SlabEntries { c, s, ds_dz, log_factor } = slab_entries(z, slice.width);
        let b: Mat2 = [[c, -s], [z * s, c]];
        let dc_dz = -0.5 * slice.width * s;
        let db: Mat2 = [[dc_dz / p, -ds_dz / p], [(s + z * ds_dz) / p, dc_dz / p]];
        dm = add(&mul(&db, &m), &mul(&b, &dm));
        m = mul(&b, &m);
        log_extra += log_factor;

        let peak = m.iter().flatten().fold(0.0f64, |acc, x| acc.max(x.abs()));
        if !(2f64.powi(-64)..=2f64.powi(64)).contains(&peak) && peak > 0.0 {
            let e = peak.log2().floor() as i32;
            let factor = 2f64.powi(-e);
            scale(&mut m, factor);
            scale(&mut dm, factor);
            exp2 += e as i64;
        }
    }
    Propagation { m, dm, log_scale: exp2 as f64 * LN_2 + log_extra }
}

fn check_band(pot: &DiscretizedPotential, energy: f64) -> Result<(), TransferError> {
    if !(energy > pot.v_left()) {
        return Err(TransferError::EnergyBelowLeftAsymptote { energy, v_left: pot.v_left() });
    }
    if !(energy < pot.v_right()) {
        return Err(TransferError::TransmissionChannelOpen { energy, v_right: pot.v_right() });
    }
    Ok(())
}

struct Evaluation {
    matrix: TransferMatrix,
    /// dt11/dE in the same scaling as `matrix.t11`.
    dt11: Complex64,
}

fn evaluate(pot: &DiscretizedPotential, energy: f64) -> Result<Evaluation, TransferError> {
    check_band(pot, energy)?;
    let p = pot.params().kinetic_prefactor();
    let k = ((energy - pot.v_left()) / p).sqrt();
    let kappa = ((pot.v_right() - energy) / p).sqrt();
    let dk = 0.5 / (p * k);
    let dkappa = -0.5 / (p * kappa);

    let Propagation { m, dm, log_scale } = propagate(pot, energy);

    // Columns of R: (ψ, ψ') at x_max of the decaying and growing solutions.
    let dec = [m[0][0] - kappa * m[0][1], m[1][0] - kappa * m[1][1]];
    let gro = [m[0][0] + kappa * m[0][1], m[1][0] + kappa * m[1][1]];
    let ddec = [dm[0][0] - kappa * dm[0][1] - dkappa * m[0][1], dm[1][0] - kappa * dm[1][1] - dkappa * m[1][1]];

    // L^{-1} maps (ψ, ψ') at x_min to (A, B): A = (ψ - iψ'/k)/2, B = conj(A).
    let to_amplitude = |u: f64, v: f64| Complex64::new(0.5 * u, -0.5 * v / k);
    let t11 = to_amplitude(dec[0], dec[1]);
    let t12 = to_amplitude(gro[0], gro[1]);
    let dt11 = Complex64::new(0.5 * ddec[0], -0.5 * ddec[1] / k + 0.5 * dec[1] * dk / (k * k));

    let peak = [t11.norm(), t12.norm()].into_iter().fold(0.0, f64::max);
    let norm = if peak > 0.0 && peak.is_finite() { peak } else { 1.0 };
    let inv = 1.0 / norm;
    let matrix = TransferMatrix {
        t11: t11 * inv,
        t12: t12 * inv,
        t21: t11.conj() * inv,
        t22: t12.conj() * inv,
        log_scale: log_scale + norm.ln(),
        energy,
        basis: Basis::PlaneWaveToEvanescent,
    };
    Ok(Evaluation { matrix, dt11: dt11 * inv })
}

/// Transfer matrix of `pot` at `energy`.
pub fn transfer_matrix(pot: &DiscretizedPotential, energy: f64) -> Result<TransferMatrix, TransferError> {
    evaluate(pot, energy).map(|e| e.matrix)
}

/// Reflection amplitude, phase and t11 decomposition at `energy`.
pub fn reflection(pot: &DiscretizedPotential, energy: f64) -> Result<ReflectionPoint, TransferError> {
    let Evaluation { matrix, dt11 } = evaluate(pot, energy)?;
    let t11 = matrix.t11;
    let r = matrix.t21 / t11;
    Ok(ReflectionPoint {
        energy,
        r,
        phi: principal_half_angle(r.arg()),
        a: t11.re,
        b: t11.im,
        log_scale: matrix.log_scale,
        t11_sq_log: t11.norm_sqr().ln() + 2.0 * matrix.log_scale,
        dphi_de: -(dt11 / t11).im,
        n_slices: pot.slices().len(),
    })
}

/// Maps `arg(r) ∈ (-π, π]` to `φ ∈ (-π/2, π/2]`.
fn principal_half_angle(arg: f64) -> f64 {
    let phi = 0.5 * arg;
    if phi <= -FRAC_PI_2 {
        phi + PI
    } else {
        phi
    }
}

/// Difference of two phases defined modulo π, reduced to `(-π/2, π/2]`.
pub fn phase_difference_mod_pi(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    if d > FRAC_PI_2 {
        d - PI
    } else {
        d
    }
}

/// Reflection at `energy`, doubling the slab count from 256 until the phase
/// changes by less than `tol` between successive refinements.
pub fn converge_reflection(spec: &PotentialSpec, energy: f64, tol: f64) -> Result<ReflectionPoint, TransferError> {
    if !(tol > 0.0) {
        return Err(TransferError::InvalidTolerance(tol));
    }
    let mut n = CONVERGENCE_START;
    let mut prev = reflection(&discretize(spec, n)?, energy)?;
    loop {
        n *= 2;
        let next = reflection(&discretize(spec, n)?, energy)?;
        let change = phase_difference_mod_pi(next.phi, prev.phi).abs();
        if change < tol {
            return Ok(next);
        }
        if n >= CONVERGENCE_LIMIT {
            return Err(TransferError::NoConvergence { n_slices: n, last_change: change, tol });
        }
        prev = next;
    }
}
