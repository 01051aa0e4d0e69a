//! Closed-form and frozen reference values.

use std::f64::consts::{PI, TAU};

use wentropy::entropy::{boltzmann_entropy, fisher_information, perelman_w_sphere};
use wentropy::flows::{make_canonical, make_shrinking_sphere, CanonicalKind};
use wentropy::heat::heat_kernel;
use wentropy::logsobolev::{optimal_constant_multistart, Budget};
use wentropy::space::{Grid1D, WeightedGeometry};
use wentropy::transport::wasserstein2;

fn circle_kernel_series(x: f64, length: f64, t: f64) -> f64 {
    let mut sum = 1.0;
    for k in 1..200 {
        let k = k as f64;
        sum += 2.0 * (-4.0 * PI * PI * k * k * t / (length * length)).exp() * (TAU * k * x / length).cos();
    }
    sum / length
}

#[test]
fn circle_kernel_matches_theta_series() {
    let length = 4.0;
    let n = 1024;
    let flow = make_canonical(CanonicalKind::FlatCircle::<f64> { length }, n).unwrap();
    let x0 = n / 2;
    let t = 0.3;
    let state = heat_kernel(&flow, x0, t, 1.0 / 1024.0).unwrap();
    let nodes = flow.grid().nodes();
    let peak = circle_kernel_series(0.0, length, t);
    let worst = nodes
        .iter()
        .zip(&state.u)
        .map(|(x, u)| {
            let mut d = x - nodes[x0];
            d -= length * (d / length).round();
            (u - circle_kernel_series(d, length, t)).abs()
        })
        .fold(0.0, f64::max);
    assert!(worst / peak < 1e-4, "relative kernel error {}", worst / peak);
}

#[test]
fn gaussian_entropy_and_fisher() {
    let n = 4096;
    let flow = make_canonical(CanonicalKind::FlatLine { a: -16.0f64, b: 16.0 }, n).unwrap();
    for t in [0.5, 1.0, 2.0] {
        let state = heat_kernel(&flow, n / 2, t, 1.0 / 256.0).unwrap();
        let geom = flow.geometry_at(t).unwrap();
        let h = boltzmann_entropy(&state, &geom);
        let exact = 0.5 * (4.0 * PI * std::f64::consts::E * t).ln();
        assert!((h - exact).abs() < 1e-4, "t = {t}: H = {h}, exact {exact}");
        let i = fisher_information(&state, &geom);
        assert!((2.0 * t * i - 1.0).abs() < 1e-4, "t = {t}: 2tI = {}", 2.0 * t * i);
    }
}

#[test]
fn cone_fisher_information() {
    let flow = make_canonical(CanonicalKind::Cone { n_dim: 3.0f64, radius: 16.0 }, 2048).unwrap();
    for t in [0.5, 1.0, 2.0] {
        let state = heat_kernel(&flow, 0, t, 1.0 / 128.0).unwrap();
        let geom = flow.geometry_at(t).unwrap();
        let i = fisher_information(&state, &geom);
        assert!((i * 2.0 * t / 3.0 - 1.0).abs() < 1e-3, "t = {t}: I = {i}");
    }
}

fn gaussian(geom: &WeightedGeometry<f64>, m: f64, s: f64) -> Vec<f64> {
    geom.grid().nodes().iter().map(|x| (-(x - m) * (x - m) / (2.0 * s * s)).exp()).collect()
}

#[test]
fn wasserstein_between_gaussians() {
    let grid = Grid1D::interval(-20.0, 20.0, 4096).unwrap();
    let geom = WeightedGeometry::from_fn(grid, 1.0, |_| (1.0, 0.0)).unwrap();
    for (m1, s1, m2, s2) in [(0.0, 1.0, 2.0, 1.0), (-1.0, 0.5, 1.5, 2.0), (0.3, 1.2, 0.3, 0.7)] {
        let w = wasserstein2(&geom, &gaussian(&geom, m1, s1), &gaussian(&geom, m2, s2)).unwrap();
        let exact = ((m1 - m2) * (m1 - m2) + (s1 - s2) * (s1 - s2)).sqrt();
        assert!((w - exact).abs() < 1e-4, "W2 = {w}, exact {exact}");
    }
}

#[test]
fn wasserstein_scales_with_the_metric() {
    // Doubling the metric coefficient stretches arclength by √2.
    let grid = Grid1D::interval(-10.0, 10.0, 2048).unwrap();
    let flat = WeightedGeometry::from_fn(grid.clone(), 1.0, |_| (1.0, 0.0)).unwrap();
    let wide = WeightedGeometry::from_fn(grid, 1.0, |_| (2.0, 0.0)).unwrap();
    let (a, b) = (gaussian(&flat, -1.0, 1.0), gaussian(&flat, 1.0, 1.0));
    let w1 = wasserstein2(&flat, &a, &b).unwrap();
    let w2 = wasserstein2(&wide, &a, &b).unwrap();
    assert!((w2 / w1 - 2f64.sqrt()).abs() < 1e-8);
}

#[test]
fn perelman_w_of_the_round_three_sphere() {
    // Constant f on the soliton: W = log(vol / (4πτ)^{3/2}) − 3/2 = log(2√π) − 3/2.
    let exact = (2.0 * PI.sqrt()).ln() - 1.5;
    assert!((exact + 0.234_487_876_515_354_63).abs() < 1e-15);
    let flow = make_shrinking_sphere::<f64>(3, 0.8, 1024).unwrap();
    for tau in [0.05, 0.1, 0.2] {
        let w = perelman_w_sphere(&flow, tau).unwrap();
        assert!((w.w - exact).abs() < 1e-5, "tau = {tau}: W = {}", w.w);
        assert!((w.r_tau - 1.5).abs() < 1e-12);
    }
}

#[test]
fn frozen_logsobolev_constant_on_the_sphere() {
    let flow = make_shrinking_sphere::<f64>(3, 0.8, 512).unwrap();
    let geom = flow.geometry_at(0.06).unwrap();
    let sol = optimal_constant_multistart(&geom, 0.06, 3.0, 0.0, Budget::default()).unwrap();
    assert!(sol.converged);
    assert!((sol.mu - FROZEN_SPHERE_MU).abs() < 1e-8, "mu = {}", sol.mu);
}

/// `μ_0(0.06)` for N = 3 on the shrinking 3-sphere, 512 cells, default budget.
const FROZEN_SPHERE_MU: f64 = -2.608_778_584_853_213;
