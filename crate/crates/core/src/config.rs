//! JSON configuration files.
//!
//! A potential file looks like
//!
//! ```json
//! { "shape": "washboard", "v0": -10.0, "v1": 1.0, "l": 1.0,
//!   "x_min": 0.0, "x_max": 9.7,
//!   "v_left_asymptote": -10.0, "v_right_asymptote": 19.9, "mass_me": 0.01 }
//! ```
//!
//! An interferometer file names a potential (path relative to itself, or an
//! inline object) plus the arm settings and the bias grid.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interferometer::{InterferometerConfig, InterferometerError};
use crate::potential::{PhysicalParams, PotentialError, PotentialSpec, Shape, HBAR2_OVER_2ME};
use crate::transfer::DEFAULT_SLICES;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("malformed JSON in {path}: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error("shape '{shape}' needs the field '{field}'")]
    MissingField { shape: String, field: &'static str },
    #[error("unknown shape '{0}'")]
    UnknownShape(String),
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Interferometer(#[from] InterferometerError),
}

impl ConfigError {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Read { .. } => "Read",
            Self::Parse { .. } => "Parse",
            Self::MissingField { .. } => "MissingField",
            Self::UnknownShape(_) => "UnknownShape",
            Self::Potential(e) => e.name(),
            Self::Interferometer(e) => e.name(),
        }
    }
}

/// On-disk form of a [`PotentialSpec`]. Only the fields of the chosen shape
/// are read.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    /// `washboard`, `step`, `square_barrier`, `piecewise_linear` or `sampled`.
    pub shape: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_left: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_right: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_base: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_top: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub knots: Option<Vec<(f64, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vs: Option<Vec<f64>>,
    pub x_min: f64,
    pub x_max: f64,
    pub v_left_asymptote: f64,
    pub v_right_asymptote: f64,
    #[serde(default = "unit_mass")]
    pub mass_me: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hbar2_over_2me: Option<f64>,
}

fn unit_mass() -> f64 {
    1.0
}

impl PotentialConfig {
    pub fn to_spec(&self) -> Result<PotentialSpec, ConfigError> {
        let need =
            |v: Option<f64>, field: &'static str| v.ok_or_else(|| ConfigError::MissingField { shape: self.shape.clone(), field });
        let shape = match self.shape.as_str() {
            "washboard" => Shape::Washboard { v0: need(self.v0, "v0")?, v1: need(self.v1, "v1")?, l: need(self.l, "l")? },
            "step" => Shape::Step { v_left: need(self.v_left, "v_left")?, v_right: need(self.v_right, "v_right")? },
            "square_barrier" => Shape::SquareBarrier {
                v_base: need(self.v_base, "v_base")?,
                v_top: need(self.v_top, "v_top")?,
                width: need(self.width, "width")?,
            },
            "piecewise_linear" => Shape::PiecewiseLinear {
                knots: self
                    .knots
                    .clone()
                    .ok_or_else(|| ConfigError::MissingField { shape: self.shape.clone(), field: "knots" })?,
            },
            "sampled" => Shape::Sampled {
                xs: self.xs.clone().ok_or_else(|| ConfigError::MissingField { shape: self.shape.clone(), field: "xs" })?,
                vs: self.vs.clone().ok_or_else(|| ConfigError::MissingField { shape: self.shape.clone(), field: "vs" })?,
            },
            other => return Err(ConfigError::UnknownShape(other.to_string())),
        };
        let params = PhysicalParams::with_prefactor(self.mass_me, self.hbar2_over_2me.unwrap_or(HBAR2_OVER_2ME))?;
        Ok(PotentialSpec::new(shape, self.x_min, self.x_max, self.v_left_asymptote, self.v_right_asymptote, params)?)
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
    serde_json::from_str(&text).map_err(|source| ConfigError::Parse { path: path.to_path_buf(), source })
}

pub fn parse_potential(json: &str) -> Result<PotentialSpec, ConfigError> {
    let cfg: PotentialConfig =
        serde_json::from_str(json).map_err(|source| ConfigError::Parse { path: PathBuf::from("<inline>"), source })?;
    cfg.to_spec()
}

pub fn load_potential(path: &Path) -> Result<PotentialSpec, ConfigError> {
    read_json::<PotentialConfig>(path)?.to_spec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PotentialSource {
    Path(PathBuf),
    Inline(Box<PotentialConfig>),
}

/// On-disk interferometer setup. Phases are in rad.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterferometerFile {
    pub potential: PotentialSource,
    pub a1: f64,
    pub a2: f64,
    #[serde(default)]
    pub alpha1: f64,
    pub alpha2: f64,
    pub delta_v: f64,
    #[serde(default)]
    pub e_incident: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub v_points: usize,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_slices")]
    pub n_slices: usize,
}

fn default_slices() -> usize {
    DEFAULT_SLICES
}

/// A loaded interferometer setup with its potential resolved.
#[derive(Debug, Clone)]
pub struct InterferometerSetup {
    pub potential: PotentialSpec,
    pub config: InterferometerConfig,
}

impl InterferometerFile {
    /// Resolves the potential (relative paths against `base_dir`) and builds the
    /// validated configuration.
    pub fn resolve(&self, base_dir: &Path) -> Result<InterferometerSetup, ConfigError> {
        let potential = match &self.potential {
            PotentialSource::Path(p) => load_potential(&base_dir.join(p))?,
            PotentialSource::Inline(cfg) => cfg.to_spec()?,
        };
        let grid = InterferometerConfig::uniform_grid(self.v_min, self.v_max, self.v_points);
        let mut config = InterferometerConfig::new(self.a1, self.a2, self.alpha1, self.alpha2, self.delta_v, grid)?;
        config.e_incident = self.e_incident;
        config.noise_sigma = self.noise_sigma;
        config.seed = self.seed;
        config.n_slices = self.n_slices;
        config.validate()?;
        Ok(InterferometerSetup { potential, config })
    }
}

pub fn load_interferometer(path: &Path) -> Result<InterferometerSetup, ConfigError> {
    let file: InterferometerFile = read_json(path)?;
    file.resolve(path.parent().unwrap_or(Path::new(".")))
}

/// `α₂ - α₁` of the reference two-arm setup: a fifth of a full turn.
pub const REFERENCE_PHASE_OFFSET: f64 = 0.4 * PI;

#[cfg(test)]
mod tests {
    use super::*;

    const WASHBOARD: &str = r#"{"shape": "washboard", "v0": -10.0, "v1": 1.0, "l": 1.0,
        "x_min": 0.0, "x_max": 9.7, "v_left_asymptote": -10.0,
        "v_right_asymptote": 19.9, "mass_me": 0.01}"#;

    #[test]
    fn washboard_round_trip() {
        let spec = parse_potential(WASHBOARD).unwrap();
        assert_eq!(spec, PotentialSpec::reference_washboard());
        assert_eq!(spec.evaluate(0.0), -10.0);
    }

    #[test]
    fn missing_and_unknown_fields() {
        let err = parse_potential(
            r#"{"shape": "step", "v_left": 0.0, "x_min": 0.0, "x_max": 1.0,
            "v_left_asymptote": 0.0, "v_right_asymptote": 10.0}"#,
        )
        .unwrap_err();
        assert_eq!(err.name(), "MissingField");
        let err = parse_potential(
            r#"{"shape": "cone", "x_min": 0.0, "x_max": 1.0,
            "v_left_asymptote": 0.0, "v_right_asymptote": 10.0}"#,
        )
        .unwrap_err();
        assert_eq!(err.name(), "UnknownShape");
        let err = parse_potential(r#"{"shape": "step", "bogus": 1}"#).unwrap_err();
        assert_eq!(err.name(), "Parse");
    }

    #[test]
    fn validation_errors_surface() {
        let err = parse_potential(&WASHBOARD.replace("\"x_max\": 9.7", "\"x_max\": -1.0")).unwrap_err();
        assert_eq!(err.name(), "EmptyInterval");
        let err = parse_potential(&WASHBOARD.replace("0.01}", "-1.0}")).unwrap_err();
        assert_eq!(err.name(), "InvalidParams");
    }

    #[test]
    fn inline_interferometer_setup() {
        let json = format!(
            r#"{{"potential": {WASHBOARD}, "a1": 1.0, "a2": 0.7, "alpha2": 1.2566370614359172,
               "delta_v": 0.2, "v_min": 7.5, "v_max": 8.0, "v_points": 11}}"#
        );
        let file: InterferometerFile = serde_json::from_str(&json).unwrap();
        let setup = file.resolve(Path::new(".")).unwrap();
        assert_eq!(setup.config.v_grid.len(), 11);
        assert_eq!(setup.config.n_slices, DEFAULT_SLICES);
        assert!((setup.config.alpha2 - setup.config.alpha1 - REFERENCE_PHASE_OFFSET).abs() < 1e-15);
    }
}
