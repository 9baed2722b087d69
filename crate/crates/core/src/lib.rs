//! Reflection resonances of one-dimensional potentials with unequal asymptotes.
//!
//! Transfer matrices give the reflection amplitude `r(E) = e^{2iφ(E)}` in the
//! fully reflecting band; quasibound states appear as Lorentzian peaks of
//! `dφ/dE`. The [`interferometer`] module simulates a two-arm differential
//! measurement of those peaks and processes its intensity back into line
//! profiles.

// NaN-rejecting checks are written as negated comparisons on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod interferometer;
pub mod io;
pub mod numeric;
pub mod potential;
pub mod resonance;
pub mod transfer;

use thiserror::Error;

/// Any failure of the library, tagged with the module it came from.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Potential(#[from] potential::PotentialError),
    #[error(transparent)]
    Transfer(#[from] transfer::TransferError),
    #[error(transparent)]
    Resonance(#[from] resonance::ResonanceError),
    #[error(transparent)]
    Interferometer(#[from] interferometer::InterferometerError),
    #[error(transparent)]
    Config(#[from] config::ConfigError),
    #[error(transparent)]
    Io(#[from] io::IoError),
    #[error("{path}: {source}")]
    File { path: std::path::PathBuf, source: std::io::Error },
}

impl Error {
    /// `module::Variant` of the innermost error.
    pub fn qualified_name(&self) -> String {
        use config::ConfigError as C;
        use interferometer::InterferometerError as I;
        use resonance::ResonanceError as R;
        let (module, name) = match self {
            Error::Potential(e) => ("potential", e.name()),
            Error::Transfer(e) => transfer_origin(e),
            Error::Resonance(R::Transfer(e)) | Error::Interferometer(I::Transfer(e)) => transfer_origin(e),
            Error::Resonance(e) => ("resonance", e.name()),
            Error::Interferometer(e) => ("interferometer", e.name()),
            Error::Config(C::Potential(e)) => ("potential", e.name()),
            Error::Config(C::Interferometer(e)) => ("interferometer", e.name()),
            Error::Config(e) => ("config", e.name()),
            Error::Io(io::IoError::Curve(e)) => ("resonance", e.name()),
            Error::Io(e) => ("io", e.name()),
            Error::File { .. } => ("io", "File"),
        };
        format!("{module}::{name}")
    }
}

fn transfer_origin(e: &transfer::TransferError) -> (&'static str, &'static str) {
    match e {
        transfer::TransferError::Potential(p) => ("potential", p.name()),
        other => ("transfer", other.name()),
    }
}
