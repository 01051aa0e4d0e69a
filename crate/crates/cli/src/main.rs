use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wentropy::verify::CheckId;
use wentropy_cli::battery::run_battery;
use wentropy_cli::config::load_config;
use wentropy_cli::scenarios::BUILTINS;
use wentropy_cli::{run_scenario, CliError};

#[derive(Parser)]
#[command(name = "wentropy", version, about = "Entropy and Harnack verification battery for weighted 1-D geometries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario from a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (default: the config's `output`, else `wentropy-out/<scenario>`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Reject unknown config keys and omit the timestamp.
        #[arg(long)]
        strict: bool,
    },
    /// List the built-in scenarios and the checks.
    List,
    /// Print the statement, kind and tolerance rule of a check.
    Describe { check_id: String },
    /// Run built-in scenarios.
    Battery {
        /// Run every built-in scenario.
        #[arg(long)]
        all: bool,
        /// Run the named built-in scenario (repeatable).
        #[arg(long = "scenario")]
        scenarios: Vec<String>,
        #[arg(long, default_value = "wentropy-battery")]
        out: PathBuf,
        #[arg(long)]
        strict: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(command: Command) -> Result<i32, CliError> {
    match command {
        Command::Run { config, out, strict } => {
            let mut cfg = load_config(&config, strict)?;
            cfg.strict |= strict;
            let outcome = run_scenario(&cfg)?;
            let dir = out.or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("wentropy-out").join(&cfg.scenario));
            outcome.write(&dir)?;
            for r in &outcome.report.checks {
                println!("{:<24} {:<15} value={:<24} tol={}", r.id, r.status, show(r.value), show(r.tolerance));
            }
            println!("wrote {}", dir.display());
            Ok(outcome.report.exit_code())
        }
        Command::List => {
            println!("scenarios:");
            for b in BUILTINS {
                println!("  {:<24} {}", b.name, b.summary);
            }
            println!("checks:");
            for id in CheckId::ALL {
                println!("  {:<24} {:<11} \"{}\"", id.as_str(), id.kind().as_str(), id.anchor());
            }
            Ok(0)
        }
        Command::Describe { check_id } => {
            let id: CheckId = check_id.parse().map_err(|e: wentropy::Error| CliError::Config(e.to_string()))?;
            println!("{}", id.as_str());
            println!("  kind:      {}", id.kind().as_str());
            println!("  statement: \"{}\"", id.anchor());
            let rule = match id.coefficient() {
                wentropy::verify::Tolerance::Scaled(c) => format!("{c}·(h² + Δt²)·scale"),
                wentropy::verify::Tolerance::Fixed(v) => format!("{v}"),
            };
            println!("  tolerance: {rule}");
            Ok(0)
        }
        Command::Battery { all, scenarios, out, strict } => {
            if !all && scenarios.is_empty() {
                return Err(CliError::Config("battery needs --all or at least one --scenario".into()));
            }
            let names = if all { Vec::new() } else { scenarios };
            let report = run_battery(&names, &out, strict)?;
            for s in &report.scenarios {
                let failed: Vec<&str> = s
                    .report
                    .iter()
                    .flat_map(|r| r.checks.iter().filter(|c| c.status == "fail").map(|c| c.id.as_str()))
                    .collect();
                let state = match (s.exit_code, &s.error) {
                    (0, _) => "pass".to_string(),
                    (_, Some(e)) => format!("error: {e}"),
                    _ => format!("fail: {}", failed.join(", ")),
                };
                println!("{:<24} {state}", s.scenario);
            }
            println!("wrote {}", out.join(wentropy_cli::battery::BATTERY_FILE).display());
            Ok(report.exit_code())
        }
    }
}

fn show(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{v:.6e}"))
}
