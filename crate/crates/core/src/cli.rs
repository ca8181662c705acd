//! Command-line front end: one subcommand per experiment.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid configuration,
//! 3 numerical failure (blow-up or non-convergence).

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{Map, Value};

use crate::config::{parse_config, ExperimentKind, RunConfig};
use crate::error::{Error, Result};
use crate::experiments::run_experiment;
use crate::output::{format_value, write_report, write_timing};

pub const THREADS_ENV: &str = "HYBRID_IB_THREADS";
pub const DEFAULT_OUTPUT_DIR: &str = "output";

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "hybrid-ib", version, about = "Drag-corrected immersed-boundary experiments for slender fibers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Measure the hydrodynamic radius of a marker.
    Calibrate(RunArgs),
    /// Drag on a slender ellipsoid, extrapolated to an infinite box.
    EllipsoidDrag(RunArgs),
    /// Two bent fibers relaxing apart.
    Relax(RunArgs),
    /// One flexible fiber in shear flow.
    Shear(RunArgs),
    /// Effective viscosity of a fiber suspension.
    Suspension(RunArgs),
    /// Spectral solver against a single forced mode.
    StokesCheck(RunArgs),
    /// Print the default configuration of an experiment.
    Defaults { experiment: String },
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// JSON configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Grid spacing, as a number or a fraction such as 1/64.
    #[arg(long)]
    pub h: Option<String>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// explicit, implicit_bending or newton.
    #[arg(long)]
    pub scheme: Option<String>,
    /// hybrid, plain_ib or pure_drag.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub eta_tilde: Option<f64>,
    /// Override any parameter; the value is read as JSON, else as a string.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

impl Command {
    fn run_args(&self) -> Option<(ExperimentKind, &RunArgs)> {
        Some(match self {
            Command::Calibrate(a) => (ExperimentKind::Calibrate, a),
            Command::EllipsoidDrag(a) => (ExperimentKind::EllipsoidDrag, a),
            Command::Relax(a) => (ExperimentKind::Relax, a),
            Command::Shear(a) => (ExperimentKind::Shear, a),
            Command::Suspension(a) => (ExperimentKind::Suspension, a),
            Command::StokesCheck(a) => (ExperimentKind::StokesCheck, a),
            Command::Defaults { .. } => return None,
        })
    }
}

/// Merge the configuration file, if any, with the command-line overrides and validate.
pub fn build_config(kind: ExperimentKind, args: &RunArgs) -> Result<RunConfig> {
    let mut doc = match &args.config {
        Some(path) => match serde_json::from_str(&std::fs::read_to_string(path)?) {
            Ok(Value::Object(map)) => map,
            Ok(_) => return Err(Error::Config("configuration must be a JSON object".into())),
            Err(e) => return Err(Error::Config(format!("malformed configuration: {e}"))),
        },
        None => Map::new(),
    };
    match doc.get("experiment") {
        None => {
            doc.insert("experiment".into(), kind.name().into());
        }
        Some(Value::String(name)) if name == kind.name() => {}
        Some(other) => {
            return Err(Error::Config(format!(
                "configuration is for experiment {other}, not '{}'",
                kind.name()
            )))
        }
    }
    if let Some(seed) = args.seed {
        doc.insert("seed".into(), seed.into());
    }
    if let Some(out) = &args.out {
        doc.insert("output_dir".into(), out.to_string_lossy().into_owned().into());
    }
    let block = doc
        .entry(kind.name())
        .or_insert_with(|| Value::Object(Map::new()));
    let Value::Object(block) = block else {
        return Err(Error::Config(format!("'{}' block must be an object", kind.name())));
    };
    let strings = [("h", &args.h), ("scheme", &args.scheme), ("model", &args.model)];
    for (key, v) in strings {
        if let Some(v) = v {
            block.insert(key.into(), v.clone().into());
        }
    }
    let numbers = [("dt", args.dt), ("t_end", args.t_end), ("eta_tilde", args.eta_tilde)];
    for (key, v) in numbers {
        if let Some(v) = v {
            let n = serde_json::Number::from_f64(v).ok_or_else(|| Error::Config(format!("--{key} must be finite")))?;
            block.insert(key.into(), Value::Number(n));
        }
    }
    for item in &args.set {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got '{item}'")))?;
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        block.insert(key.trim().to_string(), value);
    }
    parse_config(&Value::Object(doc).to_string())
}

pub fn thread_count() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Config(format!("{THREADS_ENV} must be a positive integer, got '{v}'"))),
        },
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) | Error::Csv(_) => EXIT_IO,
        e if e.is_numerical() => EXIT_NUMERICAL,
        _ => EXIT_INVALID,
    }
}

/// Run the configured experiment and write its artifacts; returns the exit code.
pub fn execute(config: &RunConfig, threads: Option<usize>) -> Result<i32> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker threads: {e}")))?;
    let start = Instant::now();
    let report = pool.install(|| run_experiment(config))?;
    let wall = start.elapsed().as_secs_f64();
    let dir = PathBuf::from(config.output_dir.as_deref().unwrap_or(DEFAULT_OUTPUT_DIR));
    let written = write_report(&dir, &report, Some(&config.to_canonical_json()))?;
    write_timing(&dir, &report.name, wall, pool.current_num_threads())?;
    for (label, s) in &report.scalars {
        println!("{label} = {} {}", format_value(s.value), s.unit);
    }
    for (label, v) in &report.flags {
        println!("{label} = {v}");
    }
    for (label, v) in &report.labels {
        println!("{label} = {v}");
    }
    println!("wrote {}", written.summary.display());
    if report.flags.get("stable") == Some(&false) {
        eprintln!("error: {}", report.labels.get("failure").map_or("unstable run", String::as_str));
        return Ok(EXIT_NUMERICAL);
    }
    Ok(EXIT_OK)
}

pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    let result = match cli.command.run_args() {
        None => {
            let Command::Defaults { experiment } = &cli.command else { unreachable!() };
            ExperimentKind::from_name(experiment).map(|kind| {
                println!("{}", RunConfig::new(kind.default_params()).to_canonical_json());
                EXIT_OK
            })
        }
        Some((kind, args)) => thread_count()
            .and_then(|threads| Ok((build_config(kind, args)?, threads)))
            .and_then(|(config, threads)| execute(&config, threads)),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        exit_code(&e)
    })
}
