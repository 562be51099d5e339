//! Command-line front end: reads a run configuration, dispatches the sweep
//! and writes a CSV artifact with a JSON sidecar.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

pub mod commands;
pub mod config;

use commands::{Artifact, CommandError};
use config::{ConfigError, Overrides, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_REGRESSION: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "spurious",
    version,
    about = "Pulse-error harmonics in dynamical-decoupling spectra"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// p versus detection frequency, with peak classification
    Spectrum,
    /// p over a signal-amplitude by detuning grid
    Map,
    /// p versus total evolution time
    Timeev,
    /// Peak positions versus magnetic field
    Fieldsweep,
    /// Recompute the anomalous-phase coefficient table
    Table1,
    /// Isotope frequency coincidences
    Overlaps,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Map => "map",
            Command::Timeev => "timeev",
            Command::Fieldsweep => "fieldsweep",
            Command::Table1 => "table1",
            Command::Overlaps => "overlaps",
        }
    }
}

#[derive(Args, Debug)]
struct Common {
    /// TOML run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// CSV output path; the JSON sidecar goes next to it
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, env = "SPURIOUS_THREADS")]
    threads: Option<usize>,
    /// cpmg, xy4, xy8 or xy16
    #[arg(long, global = true)]
    seq: Option<String>,
    #[arg(long, global = true)]
    pulses: Option<usize>,
    #[arg(long, global = true)]
    rabi_mhz: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    detuning_mhz: Option<f64>,
    #[arg(long, global = true)]
    ideal_pulses: bool,
    #[arg(long, global = true)]
    fmin_mhz: Option<f64>,
    #[arg(long, global = true)]
    fmax_mhz: Option<f64>,
    #[arg(long, global = true)]
    fpoints: Option<usize>,
    /// Peak detection threshold on p
    #[arg(long, global = true)]
    threshold: Option<f64>,
    /// Relative tolerance of the harmonic classification
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    field_mt: Option<f64>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            out: self.out.clone(),
            threads: self.threads,
            seq: self.seq.clone(),
            pulses: self.pulses,
            rabi_mhz: self.rabi_mhz,
            detuning_mhz: self.detuning_mhz,
            ideal_pulses: self.ideal_pulses,
            fmin_mhz: self.fmin_mhz,
            fmax_mhz: self.fmax_mhz,
            fpoints: self.fpoints,
            threshold: self.threshold,
            tol: self.tol,
            field_mt: self.field_mt,
        }
    }
}

fn load(common: &Common) -> Result<RunConfig, ConfigError> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.apply(&common.overrides());
    cfg.validate()?;
    Ok(cfg)
}

/// `out.csv` -> `out.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

fn write(path: &Path, cmd: Command, cfg: &RunConfig, art: &Artifact) -> std::io::Result<()> {
    std::fs::write(path, &art.csv)?;
    let doc = json!({
        "tool": "spurious",
        "version": env!("CARGO_PKG_VERSION"),
        "schema": 1,
        "command": cmd.name(),
        "config": cfg,
        "summary": art.summary,
    });
    let text = serde_json::to_string_pretty(&doc).expect("config serializes to JSON");
    std::fs::write(sidecar_path(path), text + "\n")
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let cfg = match load(&cli.common) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    if let Some(n) = cfg.output.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: cannot start {n} worker threads: {e}");
            return EXIT_RUNTIME;
        }
    }
    let outcome = match cli.command {
        Command::Spectrum => commands::spectrum(&cfg),
        Command::Map => commands::map(&cfg),
        Command::Timeev => commands::timeev(&cfg),
        Command::Fieldsweep => commands::fieldsweep(&cfg),
        Command::Table1 => commands::table1(&cfg),
        Command::Overlaps => commands::overlaps(&cfg),
    };
    let art = match outcome {
        Ok(a) => a,
        Err(CommandError::Config(e)) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
        Err(CommandError::Run(e)) => {
            eprintln!("error: {e}");
            return EXIT_RUNTIME;
        }
    };
    let path = cfg
        .output
        .path
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.csv", cli.command.name())));
    if let Err(e) = write(&path, cli.command, &cfg, &art) {
        eprintln!("error: cannot write {}: {e}", path.display());
        return EXIT_RUNTIME;
    }
    if let Some(r) = &art.report {
        print!("{r}");
    }
    println!("{} -> {}", art.line, path.display());
    if art.failed {
        EXIT_REGRESSION
    } else {
        EXIT_OK
    }
}
