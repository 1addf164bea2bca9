use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ssmc_cli::commands::{self, BuildOptions, MixtureSource, NewSpecies};
use ssmc_cli::{CliError, ExperimentConfig, Result};

#[derive(Parser)]
#[command(name = "ssmc", version, about = "Selective mixture characterisation by sequential response suppression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate every species and write a response library.
    BuildLibrary {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Drive all species with a single transform-limited pulse instead.
        #[arg(long)]
        naive: bool,
        /// Keep final wavefunctions so the library can be extended later.
        #[arg(long)]
        save_states: bool,
        #[arg(long)]
        hard_zero_blocks: bool,
    },
    /// Append one species to a library built with --save-states.
    ExtendLibrary {
        #[arg(long)]
        library: PathBuf,
        /// Reduced mass of the new molecule (electron masses).
        #[arg(long)]
        mass: Option<f64>,
        /// Onsite repulsion of the new lattice species (units of t0).
        #[arg(long)]
        interaction: Option<f64>,
        #[arg(long)]
        label: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recover concentrations from a synthetic mixture.
    Characterize {
        #[arg(long)]
        library: PathBuf,
        /// Comma-separated true concentrations; random when absent.
        #[arg(long, value_delimiter = ',')]
        y: Option<Vec<f64>>,
        /// Seed for the random mixture and the noise.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Relative noise level.
        #[arg(long, default_value_t = 1e-3)]
        sigma: f64,
        #[arg(long)]
        hard_zero_blocks: bool,
        /// CSV report path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a parameter scan over both methods and write CSV.
    Scan {
        #[arg(long)]
        config: PathBuf,
        /// CSV path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the first seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        hard_zero_blocks: bool,
    },
}

fn load_config(path: Option<&PathBuf>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::load(p),
        None => ExperimentConfig::parse(""),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::BuildLibrary { config, out, naive, save_states, hard_zero_blocks } => {
            let cfg = load_config(config.as_ref())?;
            let opts = BuildOptions { naive, save_states, hard_zero_blocks: hard_zero_blocks || cfg.hard_zero_blocks };
            println!("{}", commands::cmd_build_library(&cfg, &out, opts)?);
        }
        Command::ExtendLibrary { library, mass, interaction, label, out } => {
            let new = NewSpecies { mass, interaction, label };
            println!("{}", commands::cmd_extend_library(&library, &new, &out)?);
        }
        Command::Characterize { library, y, seed, sigma, hard_zero_blocks, out } => {
            let source = y.map_or(MixtureSource::Random(seed), MixtureSource::Given);
            let text = commands::cmd_characterize(&library, &source, sigma, seed, hard_zero_blocks, out.as_deref())?;
            println!("{text}");
        }
        Command::Scan { config, out, seed, hard_zero_blocks } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            cfg.hard_zero_blocks |= hard_zero_blocks;
            let rows = match &out {
                Some(path) => {
                    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
                    let mut w = BufWriter::new(file);
                    let n = commands::cmd_scan(&cfg, &mut w)?;
                    w.flush().map_err(|e| CliError::io(path, e))?;
                    n
                }
                None => commands::cmd_scan(&cfg, &mut std::io::stdout().lock())?,
            };
            log::info!("{rows} rows");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
