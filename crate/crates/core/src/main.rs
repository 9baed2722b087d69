use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use quasibound::config::{load_interferometer, load_potential, InterferometerSetup};
use quasibound::interferometer::{process_intensity, recover_resonance, simulate_intensity, IntensityCurve};
use quasibound::io;
use quasibound::potential::PotentialSpec;
use quasibound::resonance::{find_resonances, scan_phase, wigner_delay, PhaseCurve, ResonanceFit, ScanOptions};
use quasibound::transfer::DEFAULT_SLICES;
use quasibound::Error;

#[derive(Parser)]
#[command(name = "quasibound", version, about = "Reflection resonances of 1D potentials")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample V(x) on a uniform grid (CSV x_nm,V_eV)
    DumpPotential {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1001)]
        points: usize,
    },
    /// Adaptive reflection-phase scan (CSV)
    ScanPhase {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        scan: ScanArgs,
    },
    /// Locate and fit resonances (JSON report)
    FindResonances {
        /// Potential config to scan
        #[arg(long, required_unless_present = "curve", conflicts_with = "curve")]
        config: Option<PathBuf>,
        /// Previously written phase-curve CSV instead of a scan
        #[arg(long)]
        curve: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        scan: ScanArgs,
    },
    /// Simulated interferometer intensity (CSV V_eV,I)
    Interfere {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the bias separation δV (eV)
        #[arg(long)]
        dv: Option<f64>,
        /// Seed for the optional intensity noise
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Normalized intensity derivative (CSV V_eV,processed,regime) and peak recovery
    ProcessIntensity {
        /// Interferometer config; simulated when no --input is given
        #[arg(long, required_unless_present = "input")]
        config: Option<PathBuf>,
        /// Measured or previously simulated intensity CSV
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// JSON report of the recovered peaks
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        dv: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Normalize with (a1 ± a2)² from the config instead of the observed extrema
        #[arg(long)]
        calibrated: bool,
    },
}

#[derive(Args)]
struct ScanArgs {
    /// Lower scan energy (eV); defaults just above the left asymptote
    #[arg(long, allow_hyphen_values = true)]
    emin: Option<f64>,
    /// Upper scan energy (eV); defaults just below the right asymptote
    #[arg(long, allow_hyphen_values = true)]
    emax: Option<f64>,
    /// Largest phase change between neighbouring samples (rad)
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_SLICES)]
    slices: usize,
}

impl ScanArgs {
    fn range(&self, spec: &PotentialSpec) -> (f64, f64) {
        let inset = 1e-3 * (spec.v_right() - spec.v_left());
        (self.emin.unwrap_or(spec.v_left() + inset), self.emax.unwrap_or(spec.v_right() - inset))
    }

    fn options(&self) -> ScanOptions {
        let mut opts = ScanOptions { n_slices: self.slices, ..ScanOptions::default() };
        if let Some(tol) = self.tol {
            opts.max_phase_step = tol;
        }
        opts
    }

    fn scan(&self, spec: &PotentialSpec) -> Result<PhaseCurve, Error> {
        let (lo, hi) = self.range(spec);
        Ok(scan_phase(spec, lo, hi, &self.options())?)
    }
}

#[derive(Serialize)]
struct ResonanceEntry {
    #[serde(flatten)]
    fit: ResonanceFit,
    /// ħ dφ/dE at E0, in s.
    wigner_delay_s: f64,
}

#[derive(Serialize)]
struct ResonanceReport {
    energy_range: (f64, f64),
    samples: usize,
    resonances: Vec<ResonanceEntry>,
}

#[derive(Serialize)]
struct RecoveryReport {
    delta_v: f64,
    envelope: (f64, f64),
    separation: f64,
    resonance_bias: f64,
    resonance_energy: f64,
    peaks: Vec<ResonanceFit>,
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|source| Error::File { path: p.into(), source })?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<(), Error> {
    let mut w = output(path)?;
    let text = serde_json::to_string_pretty(value).expect("reports serialize");
    let file_err = |source| Error::File { path: path.map_or_else(|| "<stdout>".into(), Path::to_path_buf), source };
    writeln!(w, "{text}").map_err(file_err)?;
    w.flush().map_err(file_err)
}

fn open(path: &Path) -> Result<File, Error> {
    File::open(path).map_err(|source| Error::File { path: path.into(), source })
}

fn setup(config: &Path, dv: Option<f64>, seed: Option<u64>) -> Result<InterferometerSetup, Error> {
    let mut setup = load_interferometer(config)?;
    if let Some(dv) = dv {
        setup.config.delta_v = dv;
    }
    if let Some(seed) = seed {
        setup.config.seed = seed;
    }
    setup.config.validate()?;
    Ok(setup)
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::DumpPotential { config, out, points } => {
            let spec = load_potential(&config)?;
            io::write_potential(output(out.as_deref())?, &spec, points)?;
        }
        Command::ScanPhase { config, out, scan } => {
            let curve = scan.scan(&load_potential(&config)?)?;
            io::write_phase_curve(output(out.as_deref())?, &curve)?;
        }
        Command::FindResonances { config, curve, out, scan } => {
            let curve = match (config, curve) {
                (_, Some(path)) => io::read_phase_curve(open(&path)?)?,
                (Some(path), None) => scan.scan(&load_potential(&path)?)?,
                (None, None) => unreachable!("clap requires one of --config and --curve"),
            };
            let resonances = find_resonances(&curve)?
                .into_iter()
                .map(|fit| Ok(ResonanceEntry { wigner_delay_s: wigner_delay(&curve, fit.e0)?, fit }))
                .collect::<Result<Vec<_>, Error>>()?;
            let report = ResonanceReport { energy_range: curve.energy_range(), samples: curve.len(), resonances };
            write_json(out.as_deref(), &report)?;
        }
        Command::Interfere { config, out, dv, seed } => {
            let s = setup(&config, dv, seed)?;
            let curve = simulate_intensity(&s.potential, &s.config)?;
            io::write_intensity(output(out.as_deref())?, &curve)?;
        }
        Command::ProcessIntensity { config, input, out, report, dv, seed, calibrated } => {
            let s = config.as_deref().map(|c| setup(c, dv, seed)).transpose()?;
            let mut curve: IntensityCurve = match (&input, &s) {
                (Some(path), _) => io::read_intensity(open(path)?)?,
                (None, Some(s)) => simulate_intensity(&s.potential, &s.config)?,
                (None, None) => unreachable!("clap requires one of --config and --input"),
            };
            if let Some(s) = &s {
                curve.delta_v = Some(s.config.delta_v);
                curve.e_incident = s.config.e_incident;
                if calibrated {
                    curve.envelope = Some(s.config.envelope());
                }
            }
            if let Some(dv) = dv {
                curve.delta_v = Some(dv);
            }
            let processed = process_intensity(&curve)?;
            io::write_processed(output(out.as_deref())?, &processed)?;
            if let Some(path) = report {
                let delta_v = curve.delta_v.ok_or_else(|| {
                    quasibound::interferometer::InterferometerError::InvalidConfig(
                        "peak recovery needs delta_v from --dv or --config".into(),
                    )
                })?;
                let rec = recover_resonance(&processed, delta_v)?;
                let report = RecoveryReport {
                    delta_v,
                    envelope: processed.envelope,
                    separation: rec.separation,
                    resonance_bias: rec.resonance_bias,
                    resonance_energy: rec.resonance_energy,
                    peaks: rec.peaks.to_vec(),
                };
                write_json(Some(&path), &report)?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error [{}]: {e}", e.qualified_name());
            ExitCode::FAILURE
        }
    }
}
