//! Scalar functionals of heat-flow densities: Boltzmann entropy, Fisher
//! information, the `H_{N,K}` / `W_{N,K}` family, entropy power, logarithmic
//! entropy, Nash entropy and Perelman's entropy of the shrinking sphere.
//!
//! Two potentials appear. Γ-calculus fields use plain `log u`; everything
//! named `W` uses `f = −log u − (N/2) log 4πt` from [`HeatState::f`].

use crate::error::{Error, Result};
use crate::flows::FlowFamily;
use crate::heat::{HeatState, Trajectory};
use crate::scalar::Real;
use crate::space::{build_operators, WeightedGeometry};

/// `H = −∫u log u dμ` with `0·log 0 = 0`.
pub fn boltzmann_entropy<S: Real>(state: &HeatState<S>, geom: &WeightedGeometry<S>) -> S {
    -geom
        .measure()
        .iter()
        .zip(&state.u)
        .filter(|(_, u)| **u > S::zero())
        .map(|(m, u)| *m * *u * u.ln())
        .sum::<S>()
}

/// Fisher information `I = ∫Γ(u, log u) dμ`, the exact dissipation rate of the
/// semi-discrete entropy: `d/dt H(u) = I` whenever `∂_t u = Lu` and `μ` is fixed.
pub fn fisher_information<S: Real>(state: &HeatState<S>, geom: &WeightedGeometry<S>) -> S {
    build_operators(geom).dirichlet(&state.u, &state.log_u())
}

/// The two textbook forms `(∫Γ(u,u)/u dμ, ∫Γ(log u, log u) u dμ)`.
/// They coincide in the continuum and differ by `O(h²)` on the grid.
pub fn fisher_forms<S: Real>(state: &HeatState<S>, geom: &WeightedGeometry<S>) -> (S, S) {
    let ops = build_operators(geom);
    let lu = state.log_u();
    let guu = ops.gamma(&state.u, &state.u);
    let gll = ops.gamma(&lu, &lu);
    let floor = S::log_floor();
    let a = geom.measure().iter().zip(&guu).zip(&state.u).map(|((m, g), u)| *m * *g / u.max(floor)).sum();
    let b = geom.measure().iter().zip(&gll).zip(&state.u).map(|((m, g), u)| *m * *g * *u).sum();
    (a, b)
}

/// Exact time derivative of [`fisher_information`] along `∂_t u = L_t u`,
/// including the motion of the edge conductances on time-dependent families.
pub fn fisher_rate<S: Real>(state: &HeatState<S>, flow: &FlowFamily<S>) -> Result<S> {
    let geom = flow.geometry_at(state.t)?;
    let ops = build_operators(&geom);
    let u = &state.u;
    let lu = state.log_u();
    let du = ops.apply_l(u);
    let ratio: Vec<S> = du.iter().zip(u).map(|(d, u)| *d / u.max(S::log_floor())).collect();
    let crate_ = flow.conductance_rate(state.t)?;
    let grid = geom.grid();
    let c = geom.conductance();
    let mut acc = S::zero();
    for k in 0..grid.num_edges() {
        let (i, j) = grid.edge(k);
        let dl = lu[j] - lu[i];
        let dv = u[j] - u[i];
        acc += crate_[k] * dv * dl + c[k] * ((du[j] - du[i]) * dl + dv * (ratio[j] - ratio[i]));
    }
    Ok(acc)
}

/// `H_{N,K} = H − (N/2)(1 + log 4πt) − (N/2)Kt(1 + Kt/6)`.
pub fn h_nk<S: Real>(h: S, t: S, n_dim: S, k: S) -> S {
    let half_n = n_dim / S::lit(2.0);
    h - half_n * (S::one() + (S::lit(4.0) * S::PI() * t).ln()) - half_n * k * t * (S::one() + k * t / S::lit(6.0))
}

/// `∫[t|∇f|² + f − c] u dμ` with `f` from `(N, t)`.
fn w_integral<S: Real>(state: &HeatState<S>, geom: &WeightedGeometry<S>, n_dim: S, c: S) -> S {
    let ops = build_operators(geom);
    let f = state.f(n_dim);
    let gf = ops.gamma(&f, &f);
    (0..f.len())
        .map(|i| geom.measure()[i] * state.u[i] * (state.t * gf[i] + f[i] - c))
        .sum()
}

/// `W_{N,K} = ∫[t|∇f|² + f − N(1 + Kt/2)²] u dμ`.
pub fn w_nk_direct<S: Real>(state: &HeatState<S>, geom: &WeightedGeometry<S>, n_dim: S, k: S) -> S {
    let s = S::one() + k * state.t / S::lit(2.0);
    w_integral(state, geom, n_dim, n_dim * s * s)
}

/// Nash entropy `H − (N/2) log(4πet)`.
pub fn nash_entropy<S: Real>(h: S, t: S, n_dim: S) -> S {
    h - n_dim / S::lit(2.0) * (S::lit(4.0) * S::PI() * S::E() * t).ln()
}

/// Logarithmic entropy `Y_a = H + (N/2) log(I/4 + a) + (NK − 4a)t`.
pub fn log_entropy<S: Real>(h: S, i: S, t: S, n_dim: S, k: S, a: S) -> Result<S> {
    let omega = i / S::lit(4.0) + a;
    if !(omega > S::zero()) {
        return Err(Error::Domain(format!(
            "Y_a needs I/4 + a > 0; I = {i} requires a > {}",
            -i / S::lit(4.0)
        )));
    }
    Ok(h + n_dim / S::lit(2.0) * omega.ln() + (n_dim * k - S::lit(4.0) * a) * t)
}

/// Full functional panel at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyReport<S> {
    pub t: S,
    pub h: S,
    pub i: S,
    pub h_n: S,
    pub h_nk: S,
    pub w_n_direct: S,
    pub w_nk_direct: S,
    /// Filled by [`w_via_derivative`] when the panel is part of a trajectory.
    pub w_via_derivative: Option<S>,
    pub entropy_power: S,
    pub u_n: S,
    pub y_a: S,
    pub a: S,
    pub nash: S,
    pub perelman_w: Option<S>,
}

pub fn entropy_panel<S: Real>(state: &HeatState<S>, geom: &WeightedGeometry<S>, n_dim: S, k: S, a: S) -> Result<EntropyReport<S>> {
    if !(state.t > S::zero()) {
        return Err(Error::Domain("entropy panel needs t > 0".into()));
    }
    if !(n_dim > S::zero()) || !n_dim.is_finite() {
        return Err(Error::Domain(format!("entropy panel needs a finite N > 0, got {n_dim}")));
    }
    let t = state.t;
    let h = boltzmann_entropy(state, geom);
    let i = fisher_information(state, geom);
    Ok(EntropyReport {
        t,
        h,
        i,
        h_n: h_nk(h, t, n_dim, S::zero()),
        h_nk: h_nk(h, t, n_dim, k),
        w_n_direct: w_nk_direct(state, geom, n_dim, S::zero()),
        w_nk_direct: w_nk_direct(state, geom, n_dim, k),
        w_via_derivative: None,
        entropy_power: (S::lit(2.0) * h / n_dim).exp(),
        u_n: (h / n_dim).exp(),
        y_a: log_entropy(h, i, t, n_dim, k, a)?,
        a,
        nash: nash_entropy(h, t, n_dim),
        perelman_w: None,
    })
}

/// `t ↦ d/dt(t·H_{N,K}(u(t)))` by centred differences at interior recorded times.
pub fn w_via_derivative<S: Real>(traj: &Trajectory<S>, n_dim: S, k: S) -> Result<Vec<(S, S)>> {
    if traj.len() < 3 {
        return Err(Error::Data("W via derivative needs at least three states".into()));
    }
    let th: Vec<S> = (0..traj.len())
        .map(|j| {
            let g = traj.geometry(j)?;
            let h = boltzmann_entropy(&traj.state(j), &g);
            Ok(traj.times[j] * h_nk(h, traj.times[j], n_dim, k))
        })
        .collect::<Result<_>>()?;
    Ok((1..traj.len() - 1)
        .map(|j| (traj.times[j], (th[j + 1] - th[j - 1]) / (traj.times[j + 1] - traj.times[j - 1])))
        .collect())
}

/// Area of the unit `k`-sphere.
pub fn unit_sphere_area<S: Real>(k: usize) -> S {
    let two_pi = S::lit(2.0) * S::PI();
    let mut area = if k % 2 == 0 { S::lit(2.0) } else { two_pi };
    let mut j = if k % 2 == 0 { 2 } else { 3 };
    while j <= k {
        area = area * two_pi / S::of(j - 1);
        j += 2;
    }
    area
}

/// Perelman's entropy of the shrinking sphere at backward time `τ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerelmanSphere<S> {
    pub tau: S,
    pub w: S,
    /// `∫e^{−f}(4πτ)^{−n/2} dv`, which the choice of `f` makes one.
    pub normalization: S,
    /// `R·τ`, equal to `n/2` on the soliton.
    pub r_tau: S,
}

/// `W = ∫[τ(R + |∇f|²) + f − n] e^{−f}(4πτ)^{−n/2} dv` with `R = n(n−1)/a`
/// and the constant `f` fixed by normalization; `τ` counts back from the
/// singular time `1/(2(n−1))`.
pub fn perelman_w_sphere<S: Real>(flow: &FlowFamily<S>, tau: S) -> Result<PerelmanSphere<S>> {
    let n = flow
        .shrinking_sphere_dim()
        .ok_or_else(|| Error::Domain(format!("{} is not the shrinking sphere", flow.label())))?;
    let nn = S::of(n);
    let t_sing = S::one() / (S::lit(2.0) * (nn - S::one()));
    let t = t_sing - tau;
    if !(tau > S::zero()) || t < S::zero() {
        return Err(Error::Domain(format!("τ = {tau} outside (0, {t_sing}]")));
    }
    let geom = flow.geometry_at(t)?;
    let a = geom.metric()[0];
    // Riemannian volume: the chart measure is t-independent; the a^{n/2}
    // factor and the angular sphere restore dv.
    let chart: S = geom.measure().iter().copied().sum();
    let scale = unit_sphere_area::<S>(n - 1) * a.powf(nn / S::lit(2.0));
    let vol = scale * chart;
    let heat = (S::lit(4.0) * S::PI() * tau).powf(nn / S::lit(2.0));
    let f = (vol / heat).ln();
    let density = (-f).exp() / heat;
    let normalization = geom.measure().iter().map(|m| density * scale * *m).sum();
    let r = nn * (nn - S::one()) / a;
    Ok(PerelmanSphere { tau, w: tau * r + f - nn, normalization, r_tau: r * tau })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::make_shrinking_sphere;

    #[test]
    fn sphere_areas() {
        assert_eq!(unit_sphere_area::<f64>(0), 2.0);
        assert!((unit_sphere_area::<f64>(1) - std::f64::consts::TAU).abs() < 1e-15);
        assert!((unit_sphere_area::<f64>(2) - 4.0 * std::f64::consts::PI).abs() < 1e-14);
        let s3 = 2.0 * std::f64::consts::PI.powi(2);
        assert!((unit_sphere_area::<f64>(3) - s3).abs() < 1e-13);
    }

    #[test]
    fn perelman_soliton_is_constant() {
        let flow = make_shrinking_sphere::<f64>(2, 0.9, 256).unwrap();
        let a = perelman_w_sphere(&flow, 0.45).unwrap();
        let b = perelman_w_sphere(&flow, 0.1).unwrap();
        assert!((a.w - b.w).abs() < 1e-10);
        assert!((a.r_tau - 1.0).abs() < 1e-14);
        assert!((b.normalization - 1.0).abs() < 1e-10);
    }

    #[test]
    fn y_a_domain() {
        assert!(log_entropy(0.0f64, 1.0, 1.0, 1.0, 0.0, -0.5).is_err());
        assert!(log_entropy(0.0f64, 1.0, 1.0, 1.0, 0.0, 0.0).is_ok());
    }

    #[test]
    fn k_zero_reduces() {
        assert_eq!(h_nk(1.3f64, 0.7, 2.0, 0.0), 1.3 - (1.0 + (4.0 * std::f64::consts::PI * 0.7).ln()));
    }
}
