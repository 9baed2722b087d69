//! CSV reading and writing for curves.
//!
//! Numbers are written with the shortest representation that parses back to
//! the same `f64`, switching to exponent notation for very small or large
//! magnitudes, so output files are byte-for-byte reproducible.

use std::io::{Read, Write};

use thiserror::Error;

use crate::interferometer::{IntensityCurve, IntensitySample, ProcessedCurve};
use crate::potential::PotentialSpec;
use crate::resonance::{PhaseCurve, PhaseSample, ResonanceError};

pub const POTENTIAL_HEADER: [&str; 2] = ["x_nm", "V_eV"];
pub const PHASE_HEADER: [&str; 6] = ["E_eV", "phi_rad", "dphi_dE", "a", "b", "inv_t11sq"];
pub const INTENSITY_HEADER: [&str; 2] = ["V_eV", "I"];
pub const PROCESSED_HEADER: [&str; 3] = ["V_eV", "processed", "regime"];

#[derive(Debug, Error)]
pub enum IoError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("expected header {expected}, found {found}")]
    BadHeader { expected: String, found: String },
    #[error("record {record}: cannot parse '{value}' as a number")]
    BadNumber { record: usize, value: String },
    #[error("record {record}: expected {expected} fields")]
    ShortRecord { record: usize, expected: usize },
    #[error(transparent)]
    Curve(#[from] ResonanceError),
}

impl IoError {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Csv(_) => "Csv",
            Self::BadHeader { .. } => "BadHeader",
            Self::BadNumber { .. } => "BadNumber",
            Self::ShortRecord { .. } => "ShortRecord",
            Self::Curve(e) => e.name(),
        }
    }
}

pub fn format_float(x: f64) -> String {
    let m = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&m) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn write_rows<W: Write, const N: usize>(
    out: W,
    header: [&str; N],
    rows: impl Iterator<Item = [String; N]>,
) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// `V(x)` on `points` uniformly spaced positions spanning the profile interval.
pub fn write_potential<W: Write>(out: W, spec: &PotentialSpec, points: usize) -> Result<(), IoError> {
    let (a, b) = (spec.x_min(), spec.x_max());
    let xs = (0..points).map(move |i| if points == 1 { a } else { a + (b - a) * i as f64 / (points - 1) as f64 });
    write_rows(out, POTENTIAL_HEADER, xs.map(|x| [format_float(x), format_float(spec.evaluate(x))]))
}

pub fn write_phase_curve<W: Write>(out: W, curve: &PhaseCurve) -> Result<(), IoError> {
    write_rows(
        out,
        PHASE_HEADER,
        curve.samples().iter().map(|s| [s.energy, s.phi, s.dphi_de, s.a, s.b, s.inv_t11_sq].map(format_float)),
    )
}

pub fn write_intensity<W: Write>(out: W, curve: &IntensityCurve) -> Result<(), IoError> {
    write_rows(out, INTENSITY_HEADER, curve.samples.iter().map(|s| [format_float(s.v), format_float(s.i)]))
}

pub fn write_processed<W: Write>(out: W, curve: &ProcessedCurve) -> Result<(), IoError> {
    write_rows(
        out,
        PROCESSED_HEADER,
        curve.samples.iter().map(|s| [format_float(s.v), format_float(s.value), s.regime.code().to_string()]),
    )
}

/// Reads the numeric columns of a CSV whose header starts with `header`.
fn read_columns<R: Read>(input: R, header: &[&str]) -> Result<Vec<Vec<f64>>, IoError> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(true).from_reader(input);
    let found: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if found.len() < header.len() || found.iter().zip(header).any(|(f, h)| f != h) {
        return Err(IoError::BadHeader { expected: header.join(","), found: found.join(",") });
    }
    let mut rows = Vec::new();
    for (k, record) in r.records().enumerate() {
        let record = record?;
        if record.len() < header.len() {
            return Err(IoError::ShortRecord { record: k + 1, expected: header.len() });
        }
        let row = (0..header.len())
            .map(|j| record[j].parse::<f64>().map_err(|_| IoError::BadNumber { record: k + 1, value: record[j].to_string() }))
            .collect::<Result<Vec<f64>, _>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Reads a phase curve. Files with only `E_eV,phi_rad` are accepted too; the
/// derivative is then taken numerically.
pub fn read_phase_curve<R: Read>(input: R) -> Result<PhaseCurve, IoError> {
    let mut data = Vec::new();
    let mut reader = std::io::BufReader::new(input);
    reader.read_to_end(&mut data).map_err(csv::Error::from)?;
    match read_columns(data.as_slice(), &PHASE_HEADER) {
        Ok(rows) => {
            let samples = rows
                .into_iter()
                .map(|r| PhaseSample { energy: r[0], phi: r[1], dphi_de: r[2], a: r[3], b: r[4], inv_t11_sq: r[5] })
                .collect();
            Ok(PhaseCurve::from_samples(samples)?)
        }
        Err(IoError::BadHeader { .. }) => {
            let rows = read_columns(data.as_slice(), &PHASE_HEADER[..2])?;
            let energies: Vec<f64> = rows.iter().map(|r| r[0]).collect();
            let phi: Vec<f64> = rows.iter().map(|r| r[1]).collect();
            Ok(PhaseCurve::from_phase(&energies, &phi)?)
        }
        Err(e) => Err(e),
    }
}

pub fn read_intensity<R: Read>(input: R) -> Result<IntensityCurve, IoError> {
    let rows = read_columns(input, &INTENSITY_HEADER)?;
    Ok(IntensityCurve::from_samples(rows.into_iter().map(|r| IntensitySample { v: r[0], i: r[1] }).collect()))
}
