use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use wentropy::entropy::{entropy_panel, w_via_derivative};
use wentropy::flows::FlowFamily;
use wentropy::heat::{kernel_trajectory, solve_strided, Trajectory};
use wentropy::verify::{run_check, CheckParams, CheckResult, Status};

use crate::config::{InitialKind, ScenarioConfig, SCHEMA_VERSION};
use crate::error::CliError;

pub const REPORT_FILE: &str = "report.json";
pub const SERIES_FILE: &str = "series.csv";
pub const SERIES_COLUMNS: [&str; 9] = ["t", "H", "I", "H_NK", "W_NK_direct", "W_via_derivative", "entropy_power", "Y_a", "nash"];

#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub id: String,
    pub kind: String,
    /// `null` when the check was not applicable.
    pub value: Option<f64>,
    pub tolerance: Option<f64>,
    pub pass: bool,
    pub status: String,
    pub anchor: String,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub note: String,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, Option<f64>>,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

impl From<&CheckResult<f64>> for CheckRecord {
    fn from(r: &CheckResult<f64>) -> Self {
        Self {
            id: r.id.as_str().to_string(),
            kind: r.kind.as_str().to_string(),
            value: finite(r.value),
            tolerance: finite(r.tolerance),
            pass: r.passed(),
            status: r.status.as_str().to_string(),
            anchor: r.anchor.to_string(),
            note: r.note.clone(),
            details: r.details.iter().map(|(k, v)| (k.clone(), finite(*v))).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Environment {
    pub version: &'static str,
    pub schema: u32,
    pub flow: String,
    pub grid_size: usize,
    pub chart_h: f64,
    pub dt: f64,
    pub recorded_states: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub config: ScenarioConfig,
    pub environment: Environment,
    pub checks: Vec<CheckRecord>,
    pub series_files: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp_unix: Option<u64>,
}

impl RunReport {
    /// 0 when every check passed or was not applicable, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.checks.iter().all(|c| c.status != Status::Fail.as_str()) {
            0
        } else {
            1
        }
    }
}

/// A finished run held in memory until it is written out.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: RunReport,
    pub results: Vec<CheckResult<f64>>,
    /// `(file name, contents)` of the series and detail files.
    pub files: Vec<(String, Vec<u8>)>,
}

impl Outcome {
    pub fn report_json(&self) -> Result<String, CliError> {
        serde_json::to_string_pretty(&self.report).map_err(|e| CliError::Serialize(e.to_string()))
    }

    /// Writes the report, the series CSV and the detail CSVs into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        std::fs::create_dir_all(dir)?;
        for (name, bytes) in &self.files {
            std::fs::write(dir.join(name), bytes)?;
        }
        std::fs::write(dir.join(REPORT_FILE), self.report_json()? + "\n")?;
        Ok(())
    }
}

/// Parameters for the checks from the config and the flow's declared class.
pub fn check_params(cfg: &ScenarioConfig, flow: &FlowFamily<f64>) -> Result<CheckParams<f64>, CliError> {
    let p = &cfg.params;
    let class = flow.class();
    let mut out = CheckParams {
        n_dim: match &p.n_dim {
            Some(spec) => spec.to_dim()?,
            None => class.n_dim,
        },
        k: p.k.unwrap_or(class.k),
        identity_dim: p.identity_dim,
        window: p.window.map(|[a, b]| (a, b)),
        interval: p.interval.map(|[a, b]| (a, b)),
        ls_times: p.ls_times.clone(),
        fundamental: cfg.initial.kind == InitialKind::Kernel,
        ..CheckParams::default()
    };
    if let Some(a) = p.a {
        out.a = a;
    }
    if let Some(s) = p.samples {
        out.samples = s;
    }
    if let Some(e) = p.epsilon {
        out.epsilon = e;
    }
    if let Some(t) = p.late_time {
        out.late_time = t;
    }
    if let Some(t) = p.ls_time {
        out.ls_time = t;
    }
    if let Some(x) = cfg.initial.source {
        out.source = Some(flow.grid().nearest(x));
    }
    Ok(out)
}

pub fn build_trajectory(cfg: &ScenarioConfig, flow: &FlowFamily<f64>) -> Result<Trajectory<f64>, CliError> {
    let traj = match cfg.initial.kind {
        InitialKind::Kernel => {
            let x0 = flow.grid().nearest(cfg.initial.source.unwrap_or(0.0));
            kernel_trajectory(flow, x0, cfg.t_start, cfg.t_end, cfg.dt, cfg.stride)
        }
        InitialKind::Profile => {
            let u0 = cfg.profile(flow)?;
            solve_strided(&u0, flow, cfg.t_start, cfg.t_end, cfg.dt, cfg.stride)
        }
    };
    traj.map_err(|e| CliError::from_core("heat flow", e))
}

/// Validates the config, solves the heat flow, runs the requested checks
/// concurrently and assembles the report. Nothing is written to disk.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<Outcome, CliError> {
    cfg.validate()?;
    let ids = cfg.check_ids()?;
    let flow = cfg.build_flow()?;
    let params = check_params(cfg, &flow)?;
    let traj = build_trajectory(cfg, &flow)?;
    let results: Vec<CheckResult<f64>> = ids
        .par_iter()
        .map(|id| run_check(*id, &flow, Some(&traj), &params).map_err(|e| CliError::from_core(format!("check {id}"), e)))
        .collect::<Result<_, _>>()?;

    let mut files = vec![(SERIES_FILE.to_string(), series_csv(&traj, &params)?)];
    for r in &results {
        if !r.details.is_empty() {
            files.push((format!("check_{}.csv", r.id.as_str()), details_csv(r)?));
        }
    }
    let strict = cfg.strict;
    let report = RunReport {
        config: cfg.clone(),
        environment: Environment {
            version: env!("CARGO_PKG_VERSION"),
            schema: SCHEMA_VERSION,
            flow: flow.label().to_string(),
            grid_size: flow.grid().len(),
            chart_h: flow.grid().h(),
            dt: cfg.dt,
            recorded_states: traj.len(),
        },
        checks: results.iter().map(CheckRecord::from).collect(),
        series_files: files.iter().map(|(n, _)| n.clone()).collect(),
        timestamp_unix: (!strict).then(unix_now),
    };
    Ok(Outcome { report, results, files })
}

fn unix_now() -> u64 {
    std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// 17 significant digits, `NaN` for missing values.
pub fn fmt17(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else {
        format!("{x:.16e}")
    }
}

fn csv_error(e: impl std::fmt::Display) -> CliError {
    CliError::Serialize(e.to_string())
}

/// Entropy panel at every recorded state. Columns that need a finite
/// dimension use `N` (or the identity dimension when `N` is infinite) and
/// are `NaN` when neither is finite.
pub fn series_csv(traj: &Trajectory<f64>, params: &CheckParams<f64>) -> Result<Vec<u8>, CliError> {
    let n = params.n_dim.finite().or(params.identity_dim);
    let via: BTreeMap<usize, f64> = match n {
        Some(nn) => w_via_derivative(traj, nn, params.k)
            .map_err(|e| CliError::from_core("series", e))?
            .into_iter()
            .enumerate()
            .map(|(j, (_, w))| (j + 1, w))
            .collect(),
        None => BTreeMap::new(),
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SERIES_COLUMNS).map_err(csv_error)?;
    for j in 0..traj.len() {
        let state = traj.state(j);
        let geom = traj.geometry(j).map_err(|e| CliError::from_core("series", e))?;
        let h = wentropy::entropy::boltzmann_entropy(&state, &geom);
        let i = wentropy::entropy::fisher_information(&state, &geom);
        let nan = f64::NAN;
        let (h_nk, w_nk, power, y_a, nash) = match n {
            Some(nn) => match entropy_panel(&state, &geom, nn, params.k, params.a) {
                Ok(p) => (p.h_nk, p.w_nk_direct, p.entropy_power, p.y_a, p.nash),
                Err(_) => (nan, nan, nan, nan, nan),
            },
            None => (nan, nan, nan, nan, nan),
        };
        let row = [state.t, h, i, h_nk, w_nk, via.get(&j).copied().unwrap_or(nan), power, y_a, nash];
        w.write_record(row.iter().map(|x| fmt17(*x))).map_err(csv_error)?;
    }
    w.into_inner().map_err(csv_error)
}

fn details_csv(r: &CheckResult<f64>) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["name", "value"]).map_err(csv_error)?;
    for (name, v) in &r.details {
        w.write_record([name.clone(), fmt17(*v)]).map_err(csv_error)?;
    }
    w.into_inner().map_err(csv_error)
}

/// Runs several configs concurrently; results come back in input order.
pub fn run_many(configs: &[ScenarioConfig]) -> Vec<Result<Outcome, CliError>> {
    configs.par_iter().map(run_scenario).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt17(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt17(f64::NAN), "NaN");
        let back: f64 = fmt17(std::f64::consts::PI).parse().unwrap();
        assert_eq!(back, std::f64::consts::PI);
    }
}
