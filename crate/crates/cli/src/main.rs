//! `gdnls`: verification battery, radius sweep, instability runs and the
//! parameter sweep for the endpoint solitary waves.
//!
//! Exit status: 0 all checks pass, 1 some check fails, 2 invalid
//! configuration, 3 a numerical or I/O failure stopped the run.

mod commands;
mod config;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::{Outcome, RunError};
use crate::config::{ConfigError, RunConfig};

#[derive(Parser)]
#[command(name = "gdnls", version, about)]
struct Cli {
    /// JSON configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed of the randomized checks, overriding `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for `evolve` and `sweep`.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Profile, identity, second-variation, negative-direction and modulation checks.
    Verify,
    /// mu, nu and <S''psi,psi> over the cutoff radii.
    Negdir,
    /// Evolve phi + beta psi for each configured beta.
    Evolve,
    /// `verify` over the (sigma, c) grid.
    Sweep,
    /// Print the default configuration as JSON.
    PrintDefaultConfig,
}

fn load(cli: &Cli) -> Result<RunConfig, ConfigError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli, cfg: &RunConfig) -> Result<Outcome, RunError> {
    let out = &cfg.output_dir;
    let outcome = match cli.command {
        Command::Verify => commands::verify(cfg),
        Command::Negdir => commands::negdir(cfg, out)?,
        Command::Evolve => commands::evolve_cmd(cfg, out, cli.jobs)?,
        Command::Sweep => commands::sweep(cfg, cli.jobs)?,
        Command::PrintDefaultConfig => unreachable!("handled before loading"),
    };
    outcome.report.write(out)?;
    Ok(outcome)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Command::PrintDefaultConfig = cli.command {
        let text = serde_json::to_string_pretty(&RunConfig::default()).expect("serializable");
        // a closed pipe is not an error worth reporting
        let _ = writeln!(std::io::stdout(), "{text}");
        return ExitCode::SUCCESS;
    }
    let cfg = match load(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run(&cli, &cfg) {
        Ok(outcome) => {
            for c in &outcome.report.checks {
                println!(
                    "{} {}: {:.6e} vs {:.6e}",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.computed,
                    c.expected
                );
            }
            println!("report written to {}", cfg.output_dir.join("report.json").display());
            ExitCode::from(outcome.exit_code())
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
