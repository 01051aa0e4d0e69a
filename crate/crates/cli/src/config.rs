//! Scenario configuration: TOML schema, strict parsing and validation.
//!
//! The schema is documented in the README. Parsing never touches the
//! filesystem beyond reading the config itself, so a rejected config leaves
//! no output behind.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wentropy::flows::{make_canonical, make_shrinking_sphere, CanonicalKind, FlowFamily};
use wentropy::verify::CheckId;
use wentropy::Dim;

use crate::error::CliError;

pub const MIN_GRID: usize = 64;
pub const MAX_GRID: usize = 8192;
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub scenario: String,
    pub flow: FlowConfig,
    pub grid: GridConfig,
    /// Time step Δt.
    pub dt: f64,
    /// Final time T.
    pub t_end: f64,
    #[serde(default = "default_t_start")]
    pub t_start: f64,
    /// Record every `stride`-th solver step.
    #[serde(default = "default_stride")]
    pub stride: usize,
    pub initial: InitialConfig,
    #[serde(default)]
    pub params: ParamsConfig,
    /// Check ids to run; empty means every check.
    #[serde(default)]
    pub checks: Vec<String>,
    /// Output directory, overridden by `--out`. Not echoed in reports so that
    /// reports written to different directories stay identical.
    #[serde(default, skip_serializing)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub strict: bool,
}

fn default_t_start() -> f64 {
    0.1
}

fn default_stride() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlowKind {
    FlatCircle,
    FlatLine,
    OuLine,
    Cone,
    WeightedSphere,
    ShrinkingSphere,
}

/// Flow kind and its parameters; only the parameters of the chosen kind
/// are read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub kind: FlowKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_dim: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub size: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialKind {
    /// Heat kernel from the node nearest `source`, evolved to `t_start`.
    Kernel,
    /// Smooth profile from `constant`, `cosines` and `gaussians`.
    Profile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialConfig {
    pub kind: InitialKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cosines: Vec<Cosine>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gaussians: Vec<Bump>,
}

/// `amplitude·cos(2π·mode·(x − start)/length + phase)` in the chart coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cosine {
    pub mode: u32,
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
}

/// `weight·exp(−(x − centre)²/(2·width²))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub centre: f64,
    pub width: f64,
    #[serde(default = "one")]
    pub weight: f64,
}

fn one() -> f64 {
    1.0
}

/// A dimension bound: a positive number or `"inf"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DimSpec {
    Value(f64),
    Text(String),
}

impl DimSpec {
    pub fn to_dim(&self) -> Result<Dim<f64>, CliError> {
        match self {
            DimSpec::Value(v) if *v > 0.0 && v.is_finite() => Ok(Dim::Finite(*v)),
            DimSpec::Text(s) if matches!(s.as_str(), "inf" | "infinity" | "∞") => Ok(Dim::Infinite),
            other => Err(CliError::Config(format!("dimension must be a positive number or \"inf\", got {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParamsConfig {
    /// Dimension bound N; defaults to the flow's declared bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_dim: Option<DimSpec>,
    /// Curvature bound K; defaults to the flow's declared bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub identity_dim: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub late_time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ls_time: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ls_times: Vec<f64>,
}

/// Parses TOML text. In strict mode (flag or `strict = true` in the file)
/// unknown keys are errors; otherwise they are ignored.
pub fn parse_config(text: &str, strict_flag: bool) -> Result<ScenarioConfig, CliError> {
    let mut unknown = Vec::new();
    let de = toml::Deserializer::new(text);
    let cfg: ScenarioConfig = serde_ignored::deserialize(de, |path| unknown.push(path.to_string()))
        .map_err(|e| CliError::Config(e.to_string()))?;
    if (strict_flag || cfg.strict) && !unknown.is_empty() {
        return Err(CliError::Config(format!("unknown keys in strict mode: {}", unknown.join(", "))));
    }
    Ok(cfg)
}

pub fn load_config(path: &Path, strict_flag: bool) -> Result<ScenarioConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text, strict_flag).map_err(|e| match e {
        CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

fn require(name: &str, v: Option<f64>) -> Result<f64, CliError> {
    v.ok_or_else(|| CliError::Config(format!("flow parameter `{name}` is required for this kind")))
}

impl ScenarioConfig {
    /// Checks ranges and cross-field constraints.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if !(MIN_GRID..=MAX_GRID).contains(&self.grid.size) {
            return bad(format!("grid size {} outside [{MIN_GRID}, {MAX_GRID}]", self.grid.size));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_start > 0.0) || !(self.t_end > self.t_start) || !self.t_end.is_finite() {
            return bad(format!("need 0 < t_start < t_end, got {} and {}", self.t_start, self.t_end));
        }
        if self.stride == 0 {
            return bad("stride must be at least 1".into());
        }
        for id in &self.checks {
            id.parse::<CheckId>().map_err(|e| CliError::Config(e.to_string()))?;
        }
        if let Some(n) = &self.params.n_dim {
            n.to_dim()?;
        }
        if let Some([lo, hi]) = self.params.window {
            if !(lo < hi) {
                return bad(format!("window [{lo}, {hi}] is empty"));
            }
        }
        if let Some([s, t]) = self.params.interval {
            if !(self.t_start <= s && s < t && t <= self.t_end) {
                return bad(format!("interval [{s}, {t}] must lie inside [t_start, t_end]"));
            }
        }
        match self.initial.kind {
            InitialKind::Kernel if self.initial.source.is_none() => bad("kernel initial data needs `source`".into()),
            InitialKind::Profile if self.initial.constant.is_none() && self.initial.gaussians.is_empty() => {
                bad("profile initial data needs `constant` or `gaussians`".into())
            }
            _ => Ok(()),
        }?;
        let flow = self.build_flow()?;
        if self.t_end > flow.horizon() {
            return bad(format!("t_end {} exceeds the flow horizon {}", self.t_end, flow.horizon()));
        }
        Ok(())
    }

    pub fn build_flow(&self) -> Result<FlowFamily<f64>, CliError> {
        let f = &self.flow;
        let n = self.grid.size;
        let flow = match f.kind {
            FlowKind::FlatCircle => make_canonical(CanonicalKind::FlatCircle { length: require("length", f.length)? }, n),
            FlowKind::FlatLine => make_canonical(CanonicalKind::FlatLine { a: require("a", f.a)?, b: require("b", f.b)? }, n),
            FlowKind::OuLine => make_canonical(CanonicalKind::OuLine { a: require("a", f.a)?, b: require("b", f.b)? }, n),
            FlowKind::Cone => make_canonical(
                CanonicalKind::Cone { n_dim: require("n_dim", f.n_dim)?, radius: require("radius", f.radius)? },
                n,
            ),
            FlowKind::WeightedSphere => make_canonical(CanonicalKind::WeightedSphere { n: f.n.unwrap_or(3) }, n),
            FlowKind::ShrinkingSphere => {
                make_shrinking_sphere(f.n.unwrap_or(3), require("horizon_fraction", f.horizon_fraction)?, n)
            }
        };
        flow.map_err(|e| CliError::Config(e.to_string()))
    }

    /// Requested checks in the order given, or every check.
    pub fn check_ids(&self) -> Result<Vec<CheckId>, CliError> {
        if self.checks.is_empty() {
            return Ok(CheckId::ALL.to_vec());
        }
        self.checks.iter().map(|s| s.parse().map_err(|e: wentropy::Error| CliError::Config(e.to_string()))).collect()
    }

    /// Initial density at the chart nodes for profile data.
    pub fn profile(&self, flow: &FlowFamily<f64>) -> Result<Vec<f64>, CliError> {
        let grid = flow.grid();
        let (start, length) = (grid.start(), grid.length());
        let init = &self.initial;
        let u: Vec<f64> = grid
            .nodes()
            .iter()
            .map(|x| {
                let mut v = init.constant.unwrap_or(0.0);
                for c in &init.cosines {
                    let arg = std::f64::consts::TAU * f64::from(c.mode) * (x - start) / length + c.phase;
                    v += c.amplitude * arg.cos();
                }
                for g in &init.gaussians {
                    let d = (x - g.centre) / g.width;
                    v += g.weight * (-0.5 * d * d).exp();
                }
                v
            })
            .collect();
        if u.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(CliError::Config("initial profile must be positive at every node".into()));
        }
        Ok(u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
scenario = "t"
dt = 0.01
t_end = 1.0
[flow]
kind = "flat-circle"
length = 6.283185307179586
[grid]
size = 128
[initial]
kind = "profile"
constant = 1.0
"#;

    #[test]
    fn minimal_config_parses_and_validates() {
        let cfg = parse_config(BASE, true).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.t_start, 0.1);
        assert_eq!(cfg.check_ids().unwrap().len(), CheckId::ALL.len());
    }

    #[test]
    fn missing_dt_is_a_config_error() {
        let text = BASE.replace("dt = 0.01\n", "");
        let err = parse_config(&text, false).unwrap_err();
        assert!(err.to_string().contains("dt"), "{err}");
    }

    #[test]
    fn unknown_keys_only_fail_in_strict_mode() {
        let text = format!("{BASE}\nbogus = 3\n").replace("[initial]", "colour = 1\n[initial]");
        assert!(parse_config(&text, false).is_ok());
        let err = parse_config(&text, true).unwrap_err().to_string();
        assert!(err.contains("colour"), "{err}");
    }

    #[test]
    fn grid_bounds_are_enforced() {
        for (size, ok) in [(63, false), (64, true), (8192, true), (8193, false)] {
            let cfg = parse_config(&BASE.replace("size = 128", &format!("size = {size}")), true).unwrap();
            assert_eq!(cfg.validate().is_ok(), ok, "size {size}");
        }
    }

    #[test]
    fn unknown_check_ids_are_rejected() {
        let text = BASE.replace("dt = 0.01", "dt = 0.01\nchecks = [\"NOPE\"]");
        assert!(parse_config(&text, true).unwrap().validate().is_err());
    }

    #[test]
    fn dimension_spec() {
        assert_eq!(DimSpec::Text("inf".into()).to_dim().unwrap(), Dim::Infinite);
        assert_eq!(DimSpec::Value(2.0).to_dim().unwrap(), Dim::Finite(2.0));
        assert!(DimSpec::Value(-1.0).to_dim().is_err());
    }
}
