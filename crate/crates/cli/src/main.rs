//! `treeweyl` batch driver.
//!
//! Exit status: 0 success, 1 I/O failure, 2 configuration error,
//! 3 numeric refusal, 4 stale artifact (from `check`).

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{run, CliError};
use output::{config_hash, recorded_hash, render, Format, Provenance};

#[derive(Debug, Parser)]
#[command(name = "treeweyl", version, about = "Spectral diagnostics for radial metric trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,
    /// Worker threads for grid sweeps.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overrides the seed of the config's rng section.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// m_+(z; 0) by both routes with their disagreement.
    Msweep,
    /// Spectral density and the thresholded spectral set.
    Density,
    /// Reflectionless defect on an energy grid.
    Reflectionless,
    /// Simon–Stolz integral table.
    Sparse,
    /// Right-limit extraction along a shift sequence.
    Rightlimit,
    /// Sparse continuation beyond a radius.
    Sparsify,
    /// Eventual periodicity of a branching sequence.
    Periodicity,
    /// Direct-sum components and multiplicities.
    Decompose,
    /// Multiplicity-weighted tree density.
    Treereport,
    /// Resolvent kernel along a line.
    ResolventProbe,
    /// Large-κ ratio table.
    Asymptotics,
    /// Eigenvalues of a finite discrete truncation.
    Discrete,
    /// Compares an artifact's recorded config hash with a config file.
    Check { artifact: PathBuf },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Msweep => "msweep",
            Command::Density => "density",
            Command::Reflectionless => "reflectionless",
            Command::Sparse => "sparse",
            Command::Rightlimit => "rightlimit",
            Command::Sparsify => "sparsify",
            Command::Periodicity => "periodicity",
            Command::Decompose => "decompose",
            Command::Treereport => "treereport",
            Command::ResolventProbe => "resolvent-probe",
            Command::Asymptotics => "asymptotics",
            Command::Discrete => "discrete",
            Command::Check { .. } => "check",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Some(config_path) = cli.config.as_ref() else {
        eprintln!("error: --config <path> is required");
        return ExitCode::from(2);
    };
    let bytes = match std::fs::read(config_path) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", config_path.display());
            return ExitCode::from(1);
        }
    };
    let hash = config_hash(&bytes);

    if let Command::Check { artifact } = &cli.command {
        let text = match std::fs::read_to_string(artifact) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: cannot read {}: {e}", artifact.display());
                return ExitCode::from(1);
            }
        };
        return match recorded_hash(&text) {
            Some(h) if h == hash => {
                println!("current: {}", artifact.display());
                ExitCode::SUCCESS
            }
            Some(h) => {
                println!("stale: {} records {h}, config hashes to {hash}", artifact.display());
                ExitCode::from(4)
            }
            None => {
                println!("stale: {} records no config hash", artifact.display());
                ExitCode::from(4)
            }
        };
    }

    let Ok(text) = String::from_utf8(bytes) else {
        eprintln!("error: config is not UTF-8");
        return ExitCode::from(2);
    };
    if let Some(threads) = cli.threads {
        if threads == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: cannot start thread pool: {e}");
            return ExitCode::from(1);
        }
    }

    let name = cli.command.name();
    let (artifact, seed) = match run(name, &text, cli.seed) {
        Ok(r) => r,
        Err(CliError::Schema(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
        Err(CliError::Invalid(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
        Err(CliError::Refusal(e)) => {
            eprintln!("refused: {e}");
            return ExitCode::from(3);
        }
    };
    let rendered = render(&artifact, &Provenance { command: name, hash: &hash, seed }, cli.format);
    let written = match &cli.out {
        Some(path) => std::fs::write(path, rendered),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(rendered.as_bytes())
        }
    };
    if let Err(e) = written {
        eprintln!("error: cannot write output: {e}");
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}
