use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ioncomb::config;
use ioncomb::harness;

#[derive(Parser)]
#[command(
    name = "ioncomb",
    version,
    about = "Phase profiles, gate compilation, error budgets and open-system \
             simulation for comb-addressed trapped-ion qubits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Configuration file (TOML); all-defaults configuration when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides run.out_dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Configuration overrides, section.key=value (repeatable).
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Acquired-phase profile of the qubit levels over the position grid.
    Profile(CommonArgs),
    /// Compile the configured rotation into a pulse-train schedule.
    Compile(CommonArgs),
    /// Per-channel gate-error budget.
    Budget(CommonArgs),
    /// Single open-system trajectory at the target position.
    Simulate(CommonArgs),
    /// Open-system sweep of the ion position around the overlap center.
    Sweep(CommonArgs),
}

impl Command {
    fn mode(&self) -> &'static str {
        match self {
            Command::Profile(_) => "profile",
            Command::Compile(_) => "compile",
            Command::Budget(_) => "budget",
            Command::Simulate(_) => "simulate",
            Command::Sweep(_) => "sweep",
        }
    }

    fn args(&self) -> &CommonArgs {
        match self {
            Command::Profile(a)
            | Command::Compile(a)
            | Command::Budget(a)
            | Command::Simulate(a)
            | Command::Sweep(a) => a,
        }
    }
}

fn execute(cli: &Cli) -> ioncomb::error::Result<()> {
    let args = cli.command.args();
    let mut cfg = config::load_config(args.config.as_deref())?;
    if !args.overrides.is_empty() {
        cfg = config::apply_overrides(&cfg, &args.overrides)?;
    }
    cfg.run.mode = cli.command.mode().to_string();
    let out_dir = args.out.clone().unwrap_or_else(|| cfg.run.out_dir.clone());
    let artifacts = harness::run(&cfg, &out_dir)?;
    println!("{}", artifacts.summary);
    for f in &artifacts.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category().label());
            ExitCode::from(e.category().exit_code())
        }
    }
}
