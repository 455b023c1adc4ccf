use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hu_shadow::{execute, load_scenario, resolve_out_dir, CliError, Command, Overrides};

/// Growth-rate classification, shadowing and divergence experiments for
/// non-autonomous maps.
#[derive(Parser)]
#[command(name = "hu-shadow", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Classify the growth-rate sequence of the scenario's system.
    Analyze(Common),
    /// Build a true orbit near the scenario's pseudo-orbit.
    Shadow(Common),
    /// Show that the shadowing error of a periodic system grows without bound.
    Instability(Common),
    /// Evaluate every acceptance criterion.
    Reproduce(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario file (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the orbit horizon.
    #[arg(long)]
    horizon: Option<usize>,
    /// Override the residual size.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Output directory; beats HU_SHADOW_OUT and the scenario file.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let (command, args) = match cli.command {
        Cmd::Analyze(a) => (Command::Analyze, a),
        Cmd::Shadow(a) => (Command::Shadow, a),
        Cmd::Instability(a) => (Command::Instability, a),
        Cmd::Reproduce(a) => (Command::Reproduce, a),
    };
    let scenario = match &args.config {
        Some(p) => Some(load_scenario(p)?),
        None if command == Command::Reproduce => None,
        None => return Err(CliError::Config("--config is required for this command".into())),
    };
    let file_dir = scenario.as_ref().map(|s| s.output.directory.clone());
    let out = resolve_out_dir(args.out, std::env::var_os("HU_SHADOW_OUT"), file_dir);
    let overrides = Overrides {
        horizon: args.horizon,
        epsilon: args.epsilon,
    };
    let outcome = execute(command, scenario, &overrides, &out)?;
    if let Some(text) = &outcome.report {
        print!("{text}");
    }
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    Ok(outcome.passed())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}
