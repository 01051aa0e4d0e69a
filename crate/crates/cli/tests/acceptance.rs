//! End-to-end acceptance run: one pass/fail line per criterion, non-zero exit
//! when any criterion fails.

use std::process::Command;
use std::time::{Duration, Instant};

use wentropy::entropy::{fisher_information, w_nk_direct};
use wentropy::flows::{make_canonical, make_shrinking_sphere, super_ricci_defect, CanonicalKind, FlowFamily};
use wentropy::heat::kernel_trajectory;
use wentropy::logsobolev::{euler_lagrange_residual, optimal_constant_multistart, Budget};
use wentropy::verify::{gradient_margin, gradient_margin_dense, run_check, CheckId, CheckParams, CheckResult, Status};
use wentropy::Dim;
use wentropy_cli::config::ScenarioConfig;
use wentropy_cli::scenarios::builtin_config;
use wentropy_cli::run_scenario;

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn ensure(ok: bool, msg: String) -> Verdict {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn within(elapsed: Duration, limit_s: u64) -> Result<(), String> {
    if elapsed.as_secs_f64() <= limit_s as f64 {
        Ok(())
    } else {
        Err(format!("took {:.1}s, limit {limit_s}s", elapsed.as_secs_f64()))
    }
}

fn flat_line(cells: usize) -> FlowFamily<f64> {
    make_canonical(CanonicalKind::FlatLine { a: -16.0, b: 16.0 }, cells).expect("flat line")
}

fn gaussian_rigidity() -> Verdict {
    let start = Instant::now();
    let n = 8192;
    let flow = flat_line(n);
    let h = 32.0 / n as f64;
    let traj = kernel_trajectory(&flow, n / 2, 0.5, 4.0, h, 1).map_err(|e| e.to_string())?;
    let (mut w_max, mut i_max) = (0.0f64, 0.0f64);
    for j in 0..traj.len() {
        let (state, geom) = (traj.state(j), traj.geometry(j).map_err(|e| e.to_string())?);
        w_max = w_max.max(w_nk_direct(&state, &geom, 1.0, 0.0).abs());
        i_max = i_max.max((2.0 * state.t * fisher_information(&state, &geom) - 1.0).abs());
    }
    within(start.elapsed(), 30)?;
    ensure(
        w_max <= 1e-3 && i_max <= 1e-3,
        format!("max|W_1| = {w_max:.2e}, max|2tI - 1| = {i_max:.2e} over {} states, {:.1}s", traj.len(), start.elapsed().as_secs_f64()),
    )
}

fn cone_fisher() -> Verdict {
    let start = Instant::now();
    let flow = make_canonical(CanonicalKind::Cone { n_dim: 3.0, radius: 16.0 }, 2048).map_err(|e| e.to_string())?;
    let h = 16.0 / 2048.0;
    let traj = kernel_trajectory(&flow, 0, 0.5, 2.0, h, 1).map_err(|e| e.to_string())?;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for j in 0..traj.len() {
        let (state, geom) = (traj.state(j), traj.geometry(j).map_err(|e| e.to_string())?);
        let r = fisher_information(&state, &geom) * 2.0 * state.t / 3.0;
        lo = lo.min(r);
        hi = hi.max(r);
    }
    within(start.elapsed(), 60)?;
    ensure(lo >= 0.97 && hi <= 1.01, format!("I*2t/3 in [{lo:.5}, {hi:.5}], {:.1}s", start.elapsed().as_secs_f64()))
}

const IDENTITIES: [&str; 4] = ["FIRST_DISSIPATION", "W_DEFINITION", "SECOND_DISSIPATION", "HARNACK_EVOLUTION"];

fn at_resolution(name: &str, size: usize, dt: f64, checks: &[&str]) -> Result<Vec<CheckResult<f64>>, String> {
    let mut cfg: ScenarioConfig = builtin_config(name).map_err(|e| e.to_string())?;
    cfg.grid.size = size;
    cfg.dt = dt;
    cfg.checks = checks.iter().map(|s| s.to_string()).collect();
    Ok(run_scenario(&cfg).map_err(|e| e.to_string())?.results)
}

fn identity_battery() -> Verdict {
    let mut lines = Vec::new();
    let mut ok = true;
    // (scenario, cells at h = 1/256)
    for (name, coarse) in [("flat-circle", 2048usize), ("ou-line", 4096)] {
        let a = at_resolution(name, coarse, 1.0 / 256.0, &IDENTITIES)?;
        let b = at_resolution(name, 2 * coarse, 1.0 / 512.0, &IDENTITIES)?;
        for (ra, rb) in a.iter().zip(&b) {
            let ratio = ra.value / rb.value;
            let good = ratio >= 3.5 && rb.value <= 1e-3;
            ok &= good;
            lines.push(format!("{name}/{}: ratio {ratio:.2}, fine {:.1e}", ra.id, rb.value));
        }
    }
    ensure(ok, lines.join("; "))
}

const MONOTONE: [&str; 7] = ["W_MONOTONE", "RICCATI_EDI", "ENTROPY_POWER_CONCAVE", "FISHER_BOUND", "LOG_ENTROPY_DECAY", "LI_YAU", "HARNACK_NU"];

fn monotonicity_battery() -> Verdict {
    let mut ok = true;
    let mut notes = Vec::new();
    for name in ["gaussian-rigidity", "flat-circle", "ou-line", "cone-N", "weighted-sphere-static"] {
        let mut cfg = builtin_config(name).map_err(|e| e.to_string())?;
        cfg.checks = MONOTONE.iter().map(|s| s.to_string()).collect();
        let results = run_scenario(&cfg).map_err(|e| e.to_string())?.results;
        let applied = results.iter().filter(|r| r.status != Status::NotApplicable).count();
        for r in &results {
            if r.status == Status::Fail {
                ok = false;
                notes.push(format!("{name}/{} failed with {:.2e}", r.id, r.value));
            }
            let equality = name == "gaussian-rigidity" || (name == "cone-N" && r.id == CheckId::FisherBound);
            if equality && (r.value.is_nan() || r.value.abs() > 1e-3) {
                ok = false;
                notes.push(format!("{name}/{} equality margin {:.2e}", r.id, r.value));
            }
        }
        notes.push(format!("{name}: {applied} applicable"));
    }
    ensure(ok, notes.join("; "))
}

fn dynamic_characterizations() -> Verdict {
    let mut ok = true;
    let mut notes = Vec::new();
    let checks = ["DYNAMIC_BOCHNER", "GRADIENT_ESTIMATE", "W2_CONTRACTION"];
    for name in ["flat-circle", "ou-line", "shrinking-sphere"] {
        let mut cfg = builtin_config(name).map_err(|e| e.to_string())?;
        cfg.checks = checks.iter().map(|s| s.to_string()).collect();
        for r in run_scenario(&cfg).map_err(|e| e.to_string())?.results {
            ok &= r.passed();
            if !r.passed() {
                notes.push(format!("{name}/{} {}", r.id, r.status.as_str()));
            }
        }
    }
    let small: [(&str, FlowFamily<f64>, Dim<f64>, f64); 3] = [
        ("flat-circle", make_canonical(CanonicalKind::FlatCircle { length: 8.0 }, 128).map_err(|e| e.to_string())?, Dim::Finite(1.0), 0.0),
        ("ou-line", make_canonical(CanonicalKind::OuLine { a: -6.0, b: 6.0 }, 128).map_err(|e| e.to_string())?, Dim::Infinite, 1.0),
        ("shrinking-sphere", make_shrinking_sphere(3, 0.8, 128).map_err(|e| e.to_string())?, Dim::Finite(3.0), 0.0),
    ];
    let mut worst = 0.0f64;
    for (name, flow, n, k) in &small {
        let len = flow.grid().length();
        let u: Vec<f64> = flow.grid().nodes().iter().map(|x| 1.0 + 0.5 * (std::f64::consts::TAU * x / len).cos()).collect();
        let a = gradient_margin(flow, &u, 0.02, 0.06, 1e-3, *n, *k).map_err(|e| e.to_string())?;
        let b = gradient_margin_dense(flow, &u, 0.02, 0.06, 1e-3, *n, *k).map_err(|e| e.to_string())?;
        let d = a.margin.iter().zip(&b.margin).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        if d.is_nan() || d > 1e-8 {
            ok = false;
            notes.push(format!("{name}: oracle gap {d:.1e}"));
        }
        worst = worst.max(d);
    }
    notes.push(format!("9 checks on 3 scenarios, dense oracle gap {worst:.1e}"));
    ensure(ok, notes.join("; "))
}

fn soliton() -> Verdict {
    let start = Instant::now();
    let mut cfg = builtin_config("shrinking-sphere").map_err(|e| e.to_string())?;
    cfg.checks = ["PERELMAN_SOLITON", "MEASURE_INVARIANCE", "W_MONOTONE"].iter().map(|s| s.to_string()).collect();
    let results = run_scenario(&cfg).map_err(|e| e.to_string())?.results;
    let soliton = &results[0];
    let measure = &results[1];
    let w = &results[2];
    // Super Ricci defect at two resolutions: zero up to O(h²).
    let defect = |cells: usize| -> Result<f64, String> {
        let flow = make_shrinking_sphere::<f64>(3, 0.8, cells).map_err(|e| e.to_string())?;
        let mut worst = 0.0f64;
        for j in 0..=8 {
            let t = flow.horizon() * 0.1 * j as f64;
            let d = super_ricci_defect(&flow, Dim::Finite(3.0), 0.0, t).map_err(|e| e.to_string())?;
            let mask = flow.grid().interior_mask(3.0 * flow.grid().h());
            let interior = d.field.iter().zip(&mask).filter(|(_, m)| **m);
            worst = worst.max(interior.fold(0.0f64, |a, (b, _)| a.max(b.abs())));
        }
        Ok(worst)
    };
    let (d1, d2) = (defect(512)?, defect(1024)?);
    let h = std::f64::consts::PI / 1024.0;
    within(start.elapsed(), 60)?;
    // Either exact to rounding or shrinking at second order.
    let second_order = d2 <= 1e-12 || d1 / d2 >= 3.5;
    let ok = soliton.value <= 1e-10 && measure.value <= 1e-10 && w.passed() && d1 <= 40.0 * h * h && d2 <= 10.0 * h * h && second_order;
    ensure(
        ok,
        format!(
            "W spread {:.1e}, measure drift {:.1e}, W_MONOTONE {}, defect {d1:.1e} -> {d2:.1e} (ratio {:.2}), {:.1}s",
            soliton.value,
            measure.value,
            w.status.as_str(),
            d1 / d2,
            start.elapsed().as_secs_f64()
        ),
    )
}

fn noncollapse() -> Verdict {
    let start = Instant::now();
    let mut notes = Vec::new();
    let mut ok = true;
    let line = flat_line(2048);
    let cone = make_canonical(CanonicalKind::Cone { n_dim: 3.0, radius: 16.0 }, 2048).map_err(|e| e.to_string())?;
    for (name, flow, n, source) in [("flat_line", &line, 1.0, 1024usize), ("cone(3)", &cone, 3.0, 0)] {
        let p = CheckParams { n_dim: Dim::Finite(n), source: Some(source), ..CheckParams::default() };
        let r = run_check(CheckId::NoncollapseEquiv, flow, None, &p).map_err(|e| e.to_string())?;
        let get = |key: &str| r.details.iter().find(|(k, _)| k == key).map(|(_, v)| *v).unwrap_or(f64::NAN);
        let (c, a) = (get("C"), get("A"));
        ok &= r.passed() && c > 0.0 && a.is_finite();
        notes.push(format!("{name}: C = {c:.4}, A = {a:.2e}"));
    }
    let p = CheckParams { n_dim: Dim::Finite(1.0), source: Some(1024), ..CheckParams::default() };
    let kappa = run_check(CheckId::WInfinityKappa, &line, None, &p).map_err(|e| e.to_string())?;
    ok &= kappa.passed() && kappa.value <= 5e-3;
    notes.push(format!("|W_inf - log kappa| = {:.1e}", kappa.value));
    within(start.elapsed(), 120)?;
    ensure(ok, notes.join("; "))
}

fn log_sobolev() -> Verdict {
    let start = Instant::now();
    let line = flat_line(2048);
    let geom = line.geometry_at(1.0).map_err(|e| e.to_string())?;
    let sol = optimal_constant_multistart(&geom, 1.0, 1.0, 0.0, Budget::default()).map_err(|e| e.to_string())?;
    let el = euler_lagrange_residual(&sol, &geom).map_err(|e| e.to_string())?;
    let sphere = make_shrinking_sphere::<f64>(3, 0.8, 512).map_err(|e| e.to_string())?;
    let times: Vec<f64> = (1..=5).map(|j| sphere.horizon() * 0.15 * j as f64).collect();
    let p = CheckParams { n_dim: Dim::Finite(3.0), ls_times: times, ..CheckParams::default() };
    let mono = run_check(CheckId::MuMonotone, &sphere, None, &p).map_err(|e| e.to_string())?;
    within(start.elapsed(), 300)?;
    ensure(
        sol.mu.abs() <= 5e-3 && el <= 1e-3 && mono.passed(),
        format!("mu = {:.2e}, EL residual {el:.1e}, mu monotone on sphere: {}, {:.1}s", sol.mu, mono.status.as_str(), start.elapsed().as_secs_f64()),
    )
}

fn determinism() -> Verdict {
    let bin = env!("CARGO_BIN_EXE_wentropy");
    let dirs = [tempfile::tempdir().map_err(|e| e.to_string())?, tempfile::tempdir().map_err(|e| e.to_string())?];
    let mut outputs = Vec::new();
    for d in &dirs {
        let status = Command::new(bin)
            .args(["battery", "--all", "--strict", "--out"])
            .arg(d.path())
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(format!("battery exited with {:?}: {}", status.status.code(), String::from_utf8_lossy(&status.stdout)));
        }
        outputs.push(std::fs::read(d.path().join("battery.json")).map_err(|e| e.to_string())?);
    }
    ensure(outputs[0] == outputs[1], format!("battery.json {} bytes, identical: {}", outputs[0].len(), outputs[0] == outputs[1]))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("gaussian rigidity", gaussian_rigidity),
        ("cone Fisher law", cone_fisher),
        ("identity battery", identity_battery),
        ("monotonicity battery", monotonicity_battery),
        ("dynamic characterizations", dynamic_characterizations),
        ("shrinking-sphere soliton", soliton),
        ("non-collapsing equivalence", noncollapse),
        ("log-Sobolev", log_sobolev),
        ("determinism", determinism),
    ];
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let (tag, detail) = match f() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failures += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {} [{tag}] {name}: {detail}", i + 1);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
