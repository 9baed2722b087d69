#![allow(dead_code)]

use num_complex::Complex64;
use quasibound::potential::{DiscretizedPotential, PhysicalParams, PotentialSpec, Shape};

pub type CMat = [[Complex64; 2]; 2];

fn cmul(a: &CMat, b: &CMat) -> CMat {
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn cinv(a: &CMat) -> CMat {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    [[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]]
}

/// `(ψ, ψ')` at `x` of the waves `e^{±iq(x - x0)}`, one per column.
fn waves(q: Complex64, x: f64, x0: f64) -> CMat {
    let i = Complex64::i();
    let f = (i * q * (x - x0)).exp();
    let g = (-i * q * (x - x0)).exp();
    [[f, g], [i * q * f, -i * q * g]]
}

/// Transfer matrix built by multiplying interface matrices of complex plane
/// waves `e^{±iq(x - x_j)}`, one region at a time. On the right `q = iκ`, so the
/// first column is the decaying wave.
pub fn plane_wave_transfer(x_min: f64, slabs: &[(f64, f64)], v_left: f64, v_right: f64, p: f64, energy: f64) -> CMat {
    let q = |v: f64| Complex64::new((energy - v) / p, 0.0).sqrt();
    // regions: (q, reference point, left edge)
    let mut regions = vec![(q(v_left), x_min, f64::NEG_INFINITY)];
    let mut x = x_min;
    for &(w, v) in slabs {
        regions.push((q(v), x, x));
        x += w;
    }
    regions.push((q(v_right), x, x));
    let mut t = [[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)], [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]];
    for pair in regions.windows(2) {
        let (ql, xl, _) = pair[0];
        let (qr, xr, edge) = pair[1];
        let step = cmul(&cinv(&waves(ql, edge, xl)), &waves(qr, edge, xr));
        t = cmul(&t, &step);
    }
    t
}

pub fn max_norm(m: &CMat) -> f64 {
    m.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max)
}

pub fn step_spec(v_right: f64) -> PotentialSpec {
    PotentialSpec::new(Shape::Step { v_left: 0.0, v_right }, 0.0, 1.0, 0.0, v_right, PhysicalParams::default()).unwrap()
}

pub fn slab_potential(slabs: &[(f64, f64)], v_left: f64, v_right: f64) -> DiscretizedPotential {
    DiscretizedPotential::from_slabs(0.0, slabs, v_left, v_right, PhysicalParams::default()).unwrap()
}

/// `hw / ((x - x0)² + hw²)`.
pub fn lorentzian(x: f64, x0: f64, hw: f64) -> f64 {
    hw / ((x - x0).powi(2) + hw * hw)
}
