use std::path::Path;

use serde::Serialize;

use crate::error::CliError;
use crate::run::{run_many, RunReport};
use crate::scenarios::{builtin_config, BUILTINS};

pub const BATTERY_FILE: &str = "battery.json";

#[derive(Debug, Serialize)]
pub struct ScenarioEntry {
    pub scenario: String,
    pub exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<RunReport>,
}

#[derive(Debug, Serialize)]
pub struct BatteryReport {
    pub scenarios: Vec<ScenarioEntry>,
}

impl BatteryReport {
    /// The largest scenario exit code.
    pub fn exit_code(&self) -> i32 {
        self.scenarios.iter().map(|s| s.exit_code).max().unwrap_or(0)
    }
}

/// Runs the named built-ins (all of them when `names` is empty), writing
/// each scenario's files under `out/<scenario>/` and the combined report to
/// `out/battery.json`.
pub fn run_battery(names: &[String], out: &Path, strict: bool) -> Result<BatteryReport, CliError> {
    let selected: Vec<&str> = if names.is_empty() { BUILTINS.iter().map(|b| b.name).collect() } else { names.iter().map(String::as_str).collect() };
    let configs = selected
        .iter()
        .map(|n| {
            let mut cfg = builtin_config(n)?;
            cfg.strict |= strict;
            Ok(cfg)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let outcomes = run_many(&configs);
    let mut scenarios = Vec::with_capacity(configs.len());
    for (cfg, outcome) in configs.iter().zip(outcomes) {
        let entry = match outcome {
            Ok(o) => {
                o.write(&out.join(&cfg.scenario))?;
                ScenarioEntry { scenario: cfg.scenario.clone(), exit_code: o.report.exit_code(), error: None, report: Some(o.report) }
            }
            Err(e) => ScenarioEntry { scenario: cfg.scenario.clone(), exit_code: e.exit_code(), error: Some(e.to_string()), report: None },
        };
        scenarios.push(entry);
    }
    let report = BatteryReport { scenarios };
    std::fs::create_dir_all(out)?;
    let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Serialize(e.to_string()))?;
    std::fs::write(out.join(BATTERY_FILE), json + "\n")?;
    Ok(report)
}
