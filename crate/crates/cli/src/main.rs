use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bqpt_cli::output::{emit, RunLog};
use bqpt_cli::settings::{CommandKind, Options, Settings};
use bqpt_cli::{execute, CliError};

/// Ground states, scaling and dynamics of a driven Kerr-type bosonic mode.
#[derive(Parser)]
#[command(name = "bqpt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ground-state observables over an (epsilon, L) grid.
    Sweep(Options),
    /// Critical and finite-size exponents against the analytic values.
    Exponents(Options),
    /// Scaling collapse of the density and the gap.
    Collapse(Options),
    /// Sweep with a symmetry-breaking linear term (default lambda = 1/sqrt(L)).
    Perturb(Options),
    /// Positive-P ensemble, or the noiseless flow with --no-noise.
    PositiveP(Options),
    /// Fast consistency checks.
    SelfTest(Options),
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let (kind, opts) = match cli.command {
        Command::Sweep(o) => (CommandKind::Sweep, o),
        Command::Exponents(o) => (CommandKind::Exponents, o),
        Command::Collapse(o) => (CommandKind::Collapse, o),
        Command::Perturb(o) => (CommandKind::Perturb, o),
        Command::PositiveP(o) => (CommandKind::PositiveP, o),
        Command::SelfTest(o) => (CommandKind::SelfTest, o),
    };
    let settings = Settings::resolve(kind, &opts)?;
    let mut log = RunLog::new();
    log.note(format!("command {}", kind.name()));
    let outcome = execute(&settings, &mut log)?;
    let written = emit(&outcome.document, &settings)?;
    log.note(format!("wrote {} file(s)", written.len()));
    if let Some(out) = &settings.out {
        log.write(out)?;
    }
    Ok(outcome.clean)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("bqpt: some points or checks failed; see the output");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("bqpt: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
