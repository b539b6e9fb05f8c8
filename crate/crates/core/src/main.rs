use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mmkeygen::experiments::{
    load_config, run_scenario_with, write_csv, write_raw, Execution, ExperimentConfig, Scenario,
};
use mmkeygen::Error;

/// Physical-layer key generation experiments for mmWave massive-MIMO links.
#[derive(Debug, Parser)]
#[command(name = "mmkeygen", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario and write its result table as CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output CSV; defaults to the config's `output` or ./results/<scenario>.csv.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        /// Also write every per-trial value to this CSV.
        #[arg(long)]
        raw: Option<PathBuf>,
        /// Run trials on one thread.
        #[arg(long)]
        sequential: bool,
    },
    /// List the scenario presets.
    Scenarios,
    /// Parse and check a config file without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn exit_for(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    if e.is_validation() {
        ExitCode::from(1)
    } else {
        ExitCode::from(2)
    }
}

fn load(path: &PathBuf) -> Result<ExperimentConfig, Error> {
    let loaded = load_config(path)?;
    for w in &loaded.warnings {
        eprintln!("warning: {w}");
    }
    Ok(loaded.config)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match cli.command {
        Command::Scenarios => {
            for s in Scenario::ALL {
                println!("{:<14} {}", s.name(), s.summary());
            }
            ExitCode::SUCCESS
        }
        Command::Validate { config } => match load(&config).and_then(|c| c.validate().map(|_| c)) {
            Ok(c) => {
                println!(
                    "{}: ok ({}, {} trials, {} SNR points)",
                    config.display(),
                    c.scenario,
                    c.trials,
                    c.snr_grid.len()
                );
                ExitCode::SUCCESS
            }
            Err(e) => exit_for(&e),
        },
        Command::Run {
            config,
            out,
            seed,
            trials,
            raw,
            sequential,
        } => {
            let mut cfg = match load(&config) {
                Ok(c) => c,
                Err(e) => return exit_for(&e),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(t) = trials {
                cfg.trials = t;
            }
            if let Err(e) = cfg.validate() {
                return exit_for(&e);
            }
            let exec = if sequential {
                Execution::Sequential
            } else {
                Execution::Parallel
            };
            let path = out.unwrap_or_else(|| cfg.output_path());
            let result = run_scenario_with(&cfg, exec).and_then(|o| {
                write_csv(&o.table, &path)?;
                if let Some(r) = &raw {
                    write_raw(&o.raw, cfg.scenario, r)?;
                }
                Ok(o.table.rows.len())
            });
            match result {
                Ok(n) => {
                    eprintln!("{}: {n} rows written to {}", cfg.scenario, path.display());
                    ExitCode::SUCCESS
                }
                Err(e) => exit_for(&e),
            }
        }
    }
}
