use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use etdelay::{builtin, load_config, run, CliError, Command, ScenarioConfig, BUILTIN_NAMES};

/// Event-triggered stabilization of linear time-delay systems.
#[derive(Parser)]
#[command(name = "etdelay", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve or check the LMI and report rates, dwell bound and checks.
    Design(RunArgs),
    /// Design, then simulate and write trajectory and event CSVs.
    Simulate(RunArgs),
    /// Design, simulate and write a summary report.
    Report(RunArgs),
    /// Built-in scenarios.
    #[command(subcommand)]
    Scenario(ScenarioCmd),
}

#[derive(Subcommand)]
enum ScenarioCmd {
    /// List built-in scenario names.
    List,
    /// Print a built-in scenario as a JSON config.
    Dump { name: String },
}

#[derive(Args)]
struct RunArgs {
    /// JSON scenario file.
    #[arg(
        long,
        conflicts_with = "scenario",
        required_unless_present = "scenario"
    )]
    config: Option<PathBuf>,
    /// Built-in scenario name.
    #[arg(long)]
    scenario: Option<String>,
    /// Output directory for CSV and report files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the integration step.
    #[arg(long)]
    step: Option<f64>,
    /// Override the simulation horizon.
    #[arg(long)]
    horizon: Option<f64>,
}

fn load(args: &RunArgs) -> Result<ScenarioConfig, CliError> {
    let cfg = match (&args.config, &args.scenario) {
        (Some(path), _) => load_config(path)?,
        (None, Some(name)) => builtin(name)?,
        (None, None) => unreachable!("clap enforces one source"),
    };
    Ok(cfg.with_overrides(args.step, args.horizon))
}

fn execute(cmd: Command, args: &RunArgs) -> Result<(), CliError> {
    let cfg = load(args)?;
    let out = run(&cfg, cmd, args.out.as_deref())?;
    print!("{}", out.text);
    for path in &out.written {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Cmd::Design(a) => execute(Command::Design, a),
        Cmd::Simulate(a) => execute(Command::Simulate, a),
        Cmd::Report(a) => execute(Command::Report, a),
        Cmd::Scenario(ScenarioCmd::List) => {
            for name in BUILTIN_NAMES {
                println!("{name}");
            }
            Ok(())
        }
        Cmd::Scenario(ScenarioCmd::Dump { name }) => builtin(name)
            .map(|cfg| println!("{}", cfg.to_json()))
            .map_err(CliError::from),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
