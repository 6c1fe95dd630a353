//! `qsdc` — command-line runner for the QSDC simulator.
//!
//! Every subcommand resolves one effective configuration (defaults ←
//! config file ← flags), runs its pipeline, and emits a deterministic
//! JSON report. Wall-clock timing goes to stderr so that reports for
//! identical config + seed stay byte-identical.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use crate::config::{EveArg, Overrides};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Parser)]
#[command(name = "qsdc", version, about = "QSDC protocol simulator and analyzer")]
struct Cli {
    /// Flat key=value config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Werner mixing parameter α.
    #[arg(long, global = true, allow_negative_numbers = true)]
    alpha: Option<f64>,

    /// Doubled spin 2S of Bob's subsystem.
    #[arg(long = "two-s", global = true)]
    two_s: Option<u32>,

    /// Number of protocol / sampling rounds.
    #[arg(long = "rounds", global = true)]
    rounds: Option<usize>,

    /// Seed for all randomness.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Eavesdropper model.
    #[arg(long, global = true, value_enum)]
    eve: Option<EveArg>,

    /// Depolarizing strength q (required with --eve depolarize).
    #[arg(long = "eve-q", global = true)]
    eve_q: Option<f64>,

    /// Write the report (or CSV table) here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Output format: the JSON report, or the subcommand's CSV table.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Message bits, hex-encoded, for `session`.
    #[arg(long = "message-hex", global = true)]
    message_hex: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Certify Q-representation equivalence of the 2×2 and 2×(2S+1) states.
    Equivalence,
    /// Sweep the PPT criterion over α and locate the entanglement crossover.
    EntanglementScan,
    /// Exact and sampled CHSH statistic with the security decision.
    Chsh,
    /// Run the full protocol session.
    Session,
    /// Key-rate formula curve.
    Keyrate,
}

fn run(cli: &Cli) -> Result<String, String> {
    let flags = Overrides {
        alpha: cli.alpha,
        two_s: cli.two_s,
        rounds: cli.rounds,
        seed: cli.seed,
        eve: cli.eve,
        eve_q: cli.eve_q,
        message_hex: cli.message_hex.clone(),
    };
    let session_config = config::resolve(cli.config.as_deref(), &flags)?;
    let hash = config::config_hash(&session_config);

    let started = Instant::now();
    let (name, output) = match cli.command {
        Command::Equivalence => ("equivalence", commands::equivalence(&session_config)?),
        Command::EntanglementScan => (
            "entanglement-scan",
            commands::entanglement_scan(&session_config)?,
        ),
        Command::Chsh => ("chsh", commands::chsh(&session_config)?),
        Command::Session => ("session", commands::session(&session_config)?),
        Command::Keyrate => ("keyrate", commands::keyrate(&session_config)?),
    };
    eprintln!("{name} completed in {:.3} s", started.elapsed().as_secs_f64());

    match cli.format {
        Format::Json => Ok(report::render(&report::run_report(name, &hash, output.results))),
        Format::Csv => output
            .csv
            .ok_or_else(|| format!("`{name}` has no CSV table for this configuration")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(text) => match &cli.output {
            None => {
                print!("{text}");
                ExitCode::SUCCESS
            }
            Some(path) => match std::fs::write(path, &text) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    ExitCode::FAILURE
                }
            },
        },
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}
