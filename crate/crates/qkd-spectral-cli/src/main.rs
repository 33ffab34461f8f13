//! CLI binding spectra, isolation data and channel configuration to the
//! analysis pipeline.
//!
//! Verbs: `keyrate`, `budget`, `maxdist`, `spectra {synth|peaks|isolation}`.
//! Exit codes: 0 success, 2 usage error, 3 input-data error, 4
//! numeric-domain error. Errors print a single diagnostic line to stderr.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "qkd-spectral",
    version,
    about = "Trojan-horse photon budgets and decoy-state BB84 key rates from optical spectra"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Key-rate curves over distance for one or more Trojan intensities.
    ///
    /// Writes curves.csv and summary.json into the output directory.
    Keyrate {
        /// Run configuration (flat key = value file).
        #[arg(long)]
        config: PathBuf,
        /// Trojan intensity mu_out; repeat the flag for several curves.
        /// Defaults to a single baseline curve at 0.
        #[arg(long = "mu-out", allow_negative_numbers = true)]
        mu_out: Vec<f64>,
        /// Output directory (overrides out_dir from the config).
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Per-wavelength Trojan photon budget from a COM/Pass spectrum pair.
    ///
    /// Writes budget.csv into the output directory.
    Budget {
        #[arg(long)]
        config: PathBuf,
        /// Input spectrum at the COM port (CSV).
        #[arg(long)]
        com: PathBuf,
        /// Output spectrum at the Pass port (CSV).
        #[arg(long)]
        pass: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Maximum secure distance per wavelength for a budget table.
    ///
    /// Writes distmap.csv and distmap.json into the output directory.
    Maxdist {
        #[arg(long)]
        config: PathBuf,
        /// budget.csv produced by the `budget` command.
        #[arg(long)]
        budget: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Spectrum utilities.
    Spectra {
        #[command(subcommand)]
        command: SpectraCommand,
    },
}

#[derive(Subcommand)]
enum SpectraCommand {
    /// Synthesize a comb-like test spectrum.
    Synth(SynthArgs),
    /// Detect peaks in a spectrum and write them as CSV.
    Peaks(PeaksArgs),
    /// Isolation profile from a with/without-device spectrum pair.
    Isolation {
        /// Reference trace without the device in place.
        #[arg(long)]
        without_dut: PathBuf,
        /// Trace with the device inserted.
        #[arg(long)]
        with_dut: PathBuf,
        #[arg(long, default_value = "isolation.csv")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 1550.7)]
    center_nm: f64,
    #[arg(long, default_value_t = 1.0)]
    spacing_nm: f64,
    /// Side-line pairs on each side of the center line.
    #[arg(long, default_value_t = 2)]
    lines_per_side: u32,
    #[arg(long, default_value_t = -5.0, allow_negative_numbers = true)]
    center_power_dbm: f64,
    #[arg(long, default_value_t = 10.0)]
    decay_db_per_line: f64,
    #[arg(long, default_value_t = 0.05)]
    linewidth_nm: f64,
    #[arg(long, default_value_t = -65.0, allow_negative_numbers = true)]
    noise_floor_dbm: f64,
    #[arg(long, default_value_t = 2.0)]
    resolution_pm: f64,
    #[arg(long, default_value = "comb.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct PeaksArgs {
    /// Spectrum CSV to analyze.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = -65.0, allow_negative_numbers = true)]
    noise_floor_dbm: f64,
    #[arg(long, default_value_t = 0.5)]
    min_separation_nm: f64,
    /// Full integration window placed around each peak.
    #[arg(long, default_value_t = 0.4)]
    window_nm: f64,
    #[arg(long, default_value = "peaks.csv")]
    out: PathBuf,
}

/// Errors carrying their process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Unreadable or malformed input data (exit 3).
    Input(String),
    /// Parameter outside its numeric domain (exit 4).
    Domain(String),
}

impl CliError {
    fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Domain(m) => m,
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 3,
            CliError::Domain(_) => 4,
        }
    }
}

impl From<qkd_spectral::Error> for CliError {
    fn from(e: qkd_spectral::Error) -> Self {
        use qkd_spectral::Error as E;
        match e {
            E::Domain(_) | E::DegenerateDecoy | E::Numeric(_) => CliError::Domain(e.to_string()),
            E::Parse { .. } | E::Ordering { .. } | E::OutOfRange { .. } | E::NoOverlap(_) => {
                CliError::Input(e.to_string())
            }
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Keyrate {
            config,
            mu_out,
            out_dir,
        } => commands::keyrate(&config, &mu_out, out_dir.as_deref()),
        Command::Budget {
            config,
            com,
            pass,
            out_dir,
        } => commands::budget(&config, &com, &pass, out_dir.as_deref()),
        Command::Maxdist {
            config,
            budget,
            out_dir,
        } => commands::maxdist(&config, &budget, out_dir.as_deref()),
        Command::Spectra { command } => match command {
            SpectraCommand::Synth(args) => commands::spectra_synth(&args),
            SpectraCommand::Peaks(args) => commands::spectra_peaks(&args),
            SpectraCommand::Isolation {
                without_dut,
                with_dut,
                out,
            } => commands::spectra_isolation(&without_dut, &with_dut, &out),
        },
    }
}
