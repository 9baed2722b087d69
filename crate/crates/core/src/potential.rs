//! One-dimensional potential profiles with distinct left and right asymptotes.
//!
//! Lengths are in nm and energies in eV throughout. A [`PotentialSpec`] covers
//! the finite interval `[x_min, x_max]`; to the left it continues at `v_left`
//! and to the right at `v_right`. For reflection problems `v_right` is chosen
//! above every energy of interest so that no transmitted channel exists.

use thiserror::Error;

/// ħ²/(2mₑ) in eV·nm².
pub const HBAR2_OVER_2ME: f64 = 0.038_099_8;

/// Tolerance for `v_left` to agree with the profile at `x_min`.
const ASYMPTOTE_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PotentialError {
    #[error("x_min ({x_min}) must be below x_max ({x_max})")]
    EmptyInterval { x_min: f64, x_max: f64 },
    #[error("left asymptote {v_left} eV does not match the profile value {profile} eV at x_min")]
    LeftAsymptoteMismatch { v_left: f64, profile: f64 },
    #[error("right asymptote {v_right} eV lies below the profile value {profile} eV at x_max")]
    RightAsymptoteTooLow { v_right: f64, profile: f64 },
    #[error("invalid physical parameters: {0}")]
    InvalidParams(String),
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("n_slices must be at least 1")]
    ZeroSlices,
}

impl PotentialError {
    pub fn name(&self) -> &'static str {
        match self {
            Self::EmptyInterval { .. } => "EmptyInterval",
            Self::LeftAsymptoteMismatch { .. } => "LeftAsymptoteMismatch",
            Self::RightAsymptoteTooLow { .. } => "RightAsymptoteTooLow",
            Self::InvalidParams(_) => "InvalidParams",
            Self::InvalidShape(_) => "InvalidShape",
            Self::ZeroSlices => "ZeroSlices",
        }
    }
}

/// Particle mass and the kinetic prefactor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    /// Mass in units of the electron mass.
    pub mass: f64,
    /// ħ²/(2mₑ) in eV·nm².
    pub hbar2_over_2me: f64,
}

impl PhysicalParams {
    pub fn new(mass: f64) -> Result<Self, PotentialError> {
        Self::with_prefactor(mass, HBAR2_OVER_2ME)
    }

    pub fn with_prefactor(mass: f64, hbar2_over_2me: f64) -> Result<Self, PotentialError> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(PotentialError::InvalidParams(format!("mass must be positive, got {mass}")));
        }
        if !(hbar2_over_2me > 0.0 && hbar2_over_2me.is_finite()) {
            return Err(PotentialError::InvalidParams(format!("hbar2_over_2me must be positive, got {hbar2_over_2me}")));
        }
        Ok(Self { mass, hbar2_over_2me })
    }

    /// ħ²/(2M) in eV·nm², the factor relating energy to squared wavenumber.
    #[inline]
    pub fn kinetic_prefactor(&self) -> f64 {
        self.hbar2_over_2me / self.mass
    }
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self { mass: 1.0, hbar2_over_2me: HBAR2_OVER_2ME }
    }
}

/// Profile shape inside `[x_min, x_max]`.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// `v0 cos(x / l) + v1 x`
    Washboard { v0: f64, v1: f64, l: f64 },
    /// `v_left` at and left of `x_min`, `v_right` everywhere right of it.
    Step { v_left: f64, v_right: f64 },
    /// `v_top` on `(x_min, x_min + width]`, `v_base` elsewhere in the interval.
    SquareBarrier { v_base: f64, v_top: f64, width: f64 },
    /// Linear interpolation between `(x, V)` knots, clamped outside the knots.
    PiecewiseLinear { knots: Vec<(f64, f64)> },
    /// Tabulated values, linearly interpolated and clamped outside the table.
    Sampled { xs: Vec<f64>, vs: Vec<f64> },
}

impl Shape {
    fn profile(&self, x: f64, x_min: f64) -> f64 {
        match self {
            Shape::Washboard { v0, v1, l } => v0 * (x / l).cos() + v1 * x,
            Shape::Step { v_left, v_right } => {
                if x <= x_min {
                    *v_left
                } else {
                    *v_right
                }
            }
            Shape::SquareBarrier { v_base, v_top, width } => {
                if x > x_min && x <= x_min + width {
                    *v_top
                } else {
                    *v_base
                }
            }
            Shape::PiecewiseLinear { knots } => interpolate_clamped(knots.len(), |i| knots[i].0, |i| knots[i].1, x),
            Shape::Sampled { xs, vs } => interpolate_clamped(xs.len(), |i| xs[i], |i| vs[i], x),
        }
    }

    fn validate(&self) -> Result<(), PotentialError> {
        let bad = |msg: String| Err(PotentialError::InvalidShape(msg));
        match self {
            Shape::Washboard { l, .. } if *l == 0.0 => bad("washboard length scale l must be nonzero".into()),
            Shape::SquareBarrier { width, .. } if *width < 0.0 => bad("barrier width must be non-negative".into()),
            Shape::PiecewiseLinear { knots } => {
                if knots.is_empty() {
                    return bad("piecewise-linear profile needs at least one knot".into());
                }
                if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return bad("knot positions must be strictly increasing".into());
                }
                Ok(())
            }
            Shape::Sampled { xs, vs } => {
                if xs.is_empty() || xs.len() != vs.len() {
                    return bad(format!("sampled profile needs matching nonempty xs/vs ({} vs {})", xs.len(), vs.len()));
                }
                if xs.windows(2).any(|w| w[1] <= w[0]) {
                    return bad("sampled xs must be strictly increasing".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

fn interpolate_clamped(n: usize, x_at: impl Fn(usize) -> f64, v_at: impl Fn(usize) -> f64, x: f64) -> f64 {
    if x <= x_at(0) {
        return v_at(0);
    }
    if x >= x_at(n - 1) {
        return v_at(n - 1);
    }
    // first knot strictly greater than x
    let (mut lo, mut hi) = (0, n - 1);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if x_at(mid) <= x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (x0, x1) = (x_at(lo), x_at(hi));
    let t = (x - x0) / (x1 - x0);
    v_at(lo) * (1.0 - t) + v_at(hi) * t
}

/// A validated potential: profile on `[x_min, x_max]` plus both asymptotes.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec {
    shape: Shape,
    x_min: f64,
    x_max: f64,
    v_left: f64,
    v_right: f64,
    params: PhysicalParams,
    /// Uniform energy offset added to the shape profile (see [`apply_bias`]).
    offset: f64,
}

impl PotentialSpec {
    pub fn new(
        shape: Shape,
        x_min: f64,
        x_max: f64,
        v_left: f64,
        v_right: f64,
        params: PhysicalParams,
    ) -> Result<Self, PotentialError> {
        shape.validate()?;
        if !(x_min < x_max) {
            return Err(PotentialError::EmptyInterval { x_min, x_max });
        }
        let spec = Self { shape, x_min, x_max, v_left, v_right, params, offset: 0.0 };
        let at_min = spec.profile(x_min);
        if (at_min - v_left).abs() > ASYMPTOTE_TOL {
            return Err(PotentialError::LeftAsymptoteMismatch { v_left, profile: at_min });
        }
        let at_max = spec.profile(x_max);
        if v_right < at_max - ASYMPTOTE_TOL {
            return Err(PotentialError::RightAsymptoteTooLow { v_right, profile: at_max });
        }
        Ok(spec)
    }

    /// The washboard of the reference configuration shipped as `washboard.json`.
    pub fn reference_washboard() -> Self {
        Self::new(
            Shape::Washboard { v0: -10.0, v1: 1.0, l: 1.0 },
            0.0,
            9.7,
            -10.0,
            19.9,
            PhysicalParams::new(REFERENCE_MASS_ME).expect("positive mass"),
        )
        .expect("reference washboard is valid")
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }
    pub fn x_min(&self) -> f64 {
        self.x_min
    }
    pub fn x_max(&self) -> f64 {
        self.x_max
    }
    pub fn v_left(&self) -> f64 {
        self.v_left
    }
    pub fn v_right(&self) -> f64 {
        self.v_right
    }
    pub fn params(&self) -> PhysicalParams {
        self.params
    }
    /// Total bias offset applied so far.
    pub fn offset(&self) -> f64 {
        self.offset
    }

    fn profile(&self, x: f64) -> f64 {
        self.shape.profile(x, self.x_min) + self.offset
    }

    /// Potential energy at `x`; the asymptotes apply outside `[x_min, x_max]`.
    pub fn evaluate(&self, x: f64) -> f64 {
        if x < self.x_min {
            self.v_left
        } else if x > self.x_max {
            self.v_right
        } else {
            self.profile(x)
        }
    }
}

/// Effective mass (in mₑ) of the shipped washboard configuration.
///
/// With lengths in nm this puts ħ²/(2M) at 3.80998 eV·nm², which places the two
/// quasibound states of the reference washboard at 0.33 eV and 7.87 eV.
pub const REFERENCE_MASS_ME: f64 = 0.01;

/// Shifts the whole potential, asymptotes included, by `-bias` eV.
pub fn apply_bias(spec: &PotentialSpec, bias: f64) -> PotentialSpec {
    let mut out = spec.clone();
    out.offset -= bias;
    out.v_left -= bias;
    out.v_right -= bias;
    out
}

/// One piecewise-constant slab.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slice {
    pub x_left: f64,
    pub width: f64,
    pub v: f64,
}

/// Piecewise-constant approximation used for transfer-matrix propagation.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedPotential {
    slices: Vec<Slice>,
    x_min: f64,
    v_left: f64,
    v_right: f64,
    params: PhysicalParams,
}

impl DiscretizedPotential {
    /// Builds a slab stack starting at `x_min`. An empty stack is allowed and
    /// represents a bare step between the two asymptotes.
    pub fn from_slabs(
        x_min: f64,
        slabs: &[(f64, f64)],
        v_left: f64,
        v_right: f64,
        params: PhysicalParams,
    ) -> Result<Self, PotentialError> {
        let mut x = x_min;
        let mut slices = Vec::with_capacity(slabs.len());
        for &(width, v) in slabs {
            if !(width > 0.0 && width.is_finite()) {
                return Err(PotentialError::InvalidShape(format!("slab width must be positive, got {width}")));
            }
            slices.push(Slice { x_left: x, width, v });
            x += width;
        }
        Ok(Self { slices, x_min, v_left, v_right, params })
    }

    pub fn slices(&self) -> &[Slice] {
        &self.slices
    }
    pub fn x_min(&self) -> f64 {
        self.x_min
    }
    pub fn x_max(&self) -> f64 {
        self.slices.last().map_or(self.x_min, |s| s.x_left + s.width)
    }
    pub fn v_left(&self) -> f64 {
        self.v_left
    }
    pub fn v_right(&self) -> f64 {
        self.v_right
    }
    pub fn params(&self) -> PhysicalParams {
        self.params
    }
}

/// Uniform midpoint discretization into `n_slices` slabs.
pub fn discretize(spec: &PotentialSpec, n_slices: usize) -> Result<DiscretizedPotential, PotentialError> {
    if n_slices == 0 {
        return Err(PotentialError::ZeroSlices);
    }
    let span = spec.x_max - spec.x_min;
    let width = span / n_slices as f64;
    let slices = (0..n_slices)
        .map(|i| {
            let x_left = spec.x_min + span * (i as f64) / (n_slices as f64);
            let x_right = spec.x_min + span * ((i + 1) as f64) / (n_slices as f64);
            Slice { x_left, width, v: spec.profile(0.5 * (x_left + x_right)) }
        })
        .collect();
    Ok(DiscretizedPotential { slices, x_min: spec.x_min, v_left: spec.v_left, v_right: spec.v_right, params: spec.params })
}
