//! The built-in scenarios, stored as TOML under `scenarios/`.

use crate::config::{parse_config, ScenarioConfig};
use crate::error::CliError;

pub struct Builtin {
    pub name: &'static str,
    pub summary: &'static str,
    pub toml: &'static str,
}

macro_rules! builtin {
    ($name:literal, $summary:literal) => {
        Builtin { name: $name, summary: $summary, toml: include_str!(concat!("../scenarios/", $name, ".toml")) }
    };
}

pub const BUILTINS: &[Builtin] = &[
    builtin!("gaussian-rigidity", "heat kernel on the flat line, equality case of the K = 0, N = 1 bounds"),
    builtin!("flat-circle", "smooth data on the flat circle (K = 0, N = 1)"),
    builtin!("ou-line", "Ornstein-Uhlenbeck line (K = 1, N = ∞)"),
    builtin!("cone-N", "heat kernel from the vertex of the 3-dimensional cone"),
    builtin!("weighted-sphere-static", "polar chart of the round 3-sphere (K = 2, N = 3)"),
    builtin!("shrinking-sphere", "round 3-sphere under Ricci flow with the conjugate potential"),
    builtin!("noncollapse-scan", "volume ratios, W scan and kernel envelopes on the flat line"),
    builtin!("logsobolev-line", "optimal log-Sobolev constant of the flat line at t = 1"),
];

pub fn find(name: &str) -> Option<&'static Builtin> {
    BUILTINS.iter().find(|b| b.name == name)
}

/// Parsed built-in config; built-ins are always parsed strictly.
pub fn builtin_config(name: &str) -> Result<ScenarioConfig, CliError> {
    let b = find(name).ok_or_else(|| CliError::Config(format!("unknown scenario `{name}`")))?;
    parse_config(b.toml, true)
}
