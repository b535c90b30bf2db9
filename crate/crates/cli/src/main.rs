use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use ledgerlink::experiments::{run_scenario, ConfigError, ExperimentError, Scenario, ScenarioConfig};

/// Simulates distributed ledgers reached by LoRaWAN devices.
#[derive(Debug, Parser)]
#[command(name = "ledgerlink", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Publish latency of periodic device data for each DLT.
    Case1(RunArgs),
    /// Distributed averaging by gossip, one contract or neighbor transactions.
    Case2(RunArgs),
    /// Airtime of headers and publish transactions.
    Toa(RunArgs),
    /// Header broadcast rate limits.
    Rates(RunArgs),
    /// Prints the effective configuration as a scenario file.
    ShowConfig(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Scenario file; built-in defaults when omitted.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Overrides one key, e.g. `--set case2.p=0.2`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory for the CSV files.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

fn load(args: &RunArgs, scenario: Option<Scenario>) -> Result<ScenarioConfig, ConfigError> {
    let mut cfg = match &args.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(s) = scenario {
        cfg.scenario = s;
    }
    for o in &args.overrides {
        cfg.apply_override(o)?;
    }
    if let Some(out) = &args.out {
        cfg.out = out.display().to_string();
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Writes to stdout; a reader that went away (`| head`) is not an error.
fn emit(text: &str) -> io::Result<()> {
    match io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        r => r,
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let (args, scenario) = match &cli.command {
        Command::Case1(a) => (a, Some(Scenario::Case1)),
        Command::Case2(a) => (a, Some(Scenario::Case2)),
        Command::Toa(a) => (a, Some(Scenario::Toa)),
        Command::Rates(a) => (a, Some(Scenario::Rates)),
        Command::ShowConfig(a) => (a, None),
    };
    let cfg = load(args, scenario)?;
    if scenario.is_none() {
        emit(&cfg.emit())?;
        return Ok(());
    }
    let out = PathBuf::from(&cfg.out);
    let report = run_scenario(&cfg, &out).with_context(|| format!("running {}", cfg.scenario.key()))?;
    let mut text = report.table;
    for f in &report.files {
        text.push_str(&format!("wrote {}\n", f.display()));
    }
    emit(&text)?;
    Ok(())
}

/// 2 for configuration problems, 1 for anything else that stops a run.
fn exit_code(err: &anyhow::Error) -> u8 {
    let config = err.chain().any(|e| {
        e.downcast_ref::<ConfigError>().is_some()
            || matches!(e.downcast_ref::<ExperimentError>(), Some(ExperimentError::Config(_)))
    });
    if config {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
