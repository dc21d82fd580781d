use std::path::PathBuf;
use std::process::ExitCode;

use bdlie::Error;
use bdlie_cli::commands::EXIT_IO;
use bdlie_cli::scenario::SsaSettings;
use bdlie_cli::{parse_scenario, run_command, validate_scenario, write_status, CliError, Command, Format, Sink};
use clap::Parser;

/// Exact transition probabilities for birth-death processes with immigration.
#[derive(Debug, Parser)]
#[command(name = "bdlie", version)]
struct Args {
    command: Command,
    /// Scenario JSON file (optional for closure).
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trajectories: Option<u64>,
    #[arg(long)]
    tail_tol: Option<f64>,
}

fn load(args: &Args) -> Result<Option<bdlie_cli::Scenario>, CliError> {
    let Some(path) = &args.scenario else {
        return Ok(None);
    };
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.clone(), source })?;
    let mut sc = parse_scenario(&text)?;
    if let Some(tol) = args.tail_tol {
        sc.tail_tol = tol;
    }
    if args.seed.is_some() || args.trajectories.is_some() {
        let base = sc.ssa.clone().unwrap_or(SsaSettings {
            trajectories: bdlie_cli::commands::DEFAULT_TRAJECTORIES,
            seed: bdlie_cli::commands::DEFAULT_SEED,
        });
        sc.ssa = Some(SsaSettings {
            trajectories: args.trajectories.unwrap_or(base.trajectories),
            seed: args.seed.unwrap_or(base.seed),
        });
    }
    let violations = validate_scenario(&sc);
    if !violations.is_empty() {
        return Err(Error::Validation(violations).into());
    }
    Ok(Some(sc))
}

fn main() -> ExitCode {
    let args = Args::parse();
    let loaded = load(&args);
    let format = args
        .format
        .or_else(|| loaded.as_ref().ok().and_then(|s| s.as_ref()?.outputs.as_ref().map(|o| o.format)))
        .unwrap_or_default();
    let mut sink = match Sink::new(&args.out, format) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_IO as u8);
        }
    };
    let result = loaded.and_then(|sc| run_command(args.command, sc.as_ref(), &mut sink));
    for w in &sink.warnings {
        eprintln!("warning: {w}");
    }
    for m in &sink.messages {
        println!("{m}");
    }
    if let Err(e) = &result {
        eprintln!("error: {e}");
    }
    let code = write_status(&mut sink, args.command, &result);
    ExitCode::from(code as u8)
}
