//! Thin command-line front end: parse a config, run the named experiment,
//! emit artifacts. All logic lives in the library; see `examples/` for
//! API-level walkthroughs.
//!
//! Exit codes: 0 all checks passed, 1 a check failed or a run diverged,
//! 2 configuration error.

use clap::{Parser, Subcommand};
use ouflow::config::ConfigFile;
use ouflow::experiments::{registry, run_experiment, ExperimentError};
use ouflow::report::write_artifacts;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "ouflow",
    version,
    about = "Pseudo-spectral lab for 2D vorticity stirred by an Ornstein-Uhlenbeck flow",
    after_help = "Default output directory: $OUFLOW_OUT, else ./out (config [io] overrides)."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment named in the config and write CSV/JSON artifacts.
    Run {
        /// TOML config file.
        #[arg(long)]
        config: PathBuf,
        /// Override the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: logical cores).
        #[arg(long)]
        jobs: Option<usize>,
        /// Override the replica count.
        #[arg(long)]
        replicas: Option<usize>,
    },
    /// List experiment presets and the claim each one probes.
    ListExperiments,
    /// Parse and validate a config without running anything.
    Validate {
        /// TOML config file.
        #[arg(long)]
        config: PathBuf,
    },
}

fn load_config(path: &PathBuf) -> Result<ConfigFile, String> {
    ConfigFile::from_path(path).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::ListExperiments => {
            for preset in registry() {
                println!("{:<14} {}", preset.name, preset.claim);
            }
            ExitCode::SUCCESS
        }
        Command::Validate { config } => match load_config(&config) {
            Ok(cfg) => {
                println!(
                    "ok: experiment {:?}, grid {}, seed {}",
                    cfg.experiment.name, cfg.simulation.grid, cfg.seed
                );
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("config error: {e}");
                ExitCode::from(2)
            }
        },
        Command::Run {
            config,
            seed,
            out,
            jobs,
            replicas,
        } => {
            let mut cfg = match load_config(&config) {
                Ok(cfg) => cfg,
                Err(e) => {
                    eprintln!("config error: {e}");
                    return ExitCode::from(2);
                }
            };
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if let Some(out) = out {
                cfg.io.out_dir = Some(out);
            }
            if let Some(replicas) = replicas {
                cfg.experiment.replicas = replicas;
            }
            if let Err(e) = cfg.validate() {
                eprintln!("config error: {e}");
                return ExitCode::from(2);
            }
            let report = match run_experiment(&cfg, jobs) {
                Ok(report) => report,
                Err(ExperimentError::Config(msg)) => {
                    eprintln!("config error: {msg}");
                    return ExitCode::from(2);
                }
                Err(e) => {
                    eprintln!("run failed: {e}");
                    return ExitCode::from(1);
                }
            };
            let out_dir = cfg.out_dir();
            match write_artifacts(&out_dir, &cfg, &report) {
                Ok(files) => {
                    print!("{}", report.summary());
                    println!("artifacts in {}: {}", out_dir.display(), files.join(", "));
                }
                Err(e) => {
                    eprintln!("cannot write artifacts: {e}");
                    return ExitCode::from(1);
                }
            }
            if report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
    }
}
