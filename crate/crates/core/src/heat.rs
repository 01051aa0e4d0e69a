//! Heat flow `∂_t u = L_t u` by Crank–Nicolson with the generator frozen at
//! the half step, plus propagators, adjoints and fundamental solutions.

use std::sync::Arc;

use crate::error::{ensure_len, Error, Result};
use crate::flows::FlowFamily;
use crate::linalg::{Dense, TridiagFactor};
use crate::scalar::{safe_ln, Real};
use crate::space::{build_operators, WeightedGeometry};

/// A mass-one density at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatState<S> {
    pub t: S,
    pub u: Vec<S>,
}

impl<S: Real> HeatState<S> {
    /// Validates mass one (to 1e-10 relative, or the type's precision) and
    /// non-negativity.
    pub fn new(t: S, u: Vec<S>, geom: &WeightedGeometry<S>) -> Result<Self> {
        ensure_len(geom.len(), u.len())?;
        if u.iter().any(|v| *v < S::zero() || !v.is_finite()) {
            return Err(Error::Input("density must be finite and non-negative".into()));
        }
        let mass = geom.integrate(&u);
        let tol = S::lit(1e-10).max(S::epsilon() * S::of(64 * u.len()));
        if (mass - S::one()).abs() > tol {
            return Err(Error::Input(format!("density has mass {mass}, expected 1")));
        }
        Ok(Self { t, u })
    }

    /// Rescales a non-negative field to mass one.
    pub fn normalized(t: S, u: Vec<S>, geom: &WeightedGeometry<S>) -> Result<Self> {
        let u = normalize(u, geom)?;
        Ok(Self { t, u })
    }

    pub fn mass(&self, geom: &WeightedGeometry<S>) -> S {
        geom.integrate(&self.u)
    }

    /// `log u` with the positivity floor.
    pub fn log_u(&self) -> Vec<S> {
        self.u.iter().map(|v| safe_ln(*v)).collect()
    }

    /// `f = −log u − (N/2) log(4πt)`, the potential in `u = e^{−f}/(4πt)^{N/2}`.
    pub fn f(&self, n_dim: S) -> Vec<S> {
        let shift = n_dim / S::lit(2.0) * (S::lit(4.0) * S::PI() * self.t).ln();
        self.u.iter().map(|v| -safe_ln(*v) - shift).collect()
    }

    /// Edge gradients of `log u`.
    pub fn log_gradient(&self, geom: &WeightedGeometry<S>) -> Vec<S> {
        build_operators(geom).gradient(&self.log_u())
    }

    /// Number of nodes where the log floor was active.
    pub fn clamped_nodes(&self) -> usize {
        self.u.iter().filter(|v| **v < S::log_floor()).count()
    }
}

fn normalize<S: Real>(mut u: Vec<S>, geom: &WeightedGeometry<S>) -> Result<Vec<S>> {
    ensure_len(geom.len(), u.len())?;
    if u.iter().any(|v| *v < S::zero() || !v.is_finite()) {
        return Err(Error::Input("initial density must be finite and non-negative".into()));
    }
    let mass = geom.integrate(&u);
    if !(mass > S::zero()) {
        return Err(Error::Input("initial density has no mass".into()));
    }
    for v in u.iter_mut() {
        *v /= mass;
    }
    Ok(u)
}

/// Recorded heat-flow states on a uniform time grid.
#[derive(Debug, Clone)]
pub struct Trajectory<S> {
    pub times: Vec<S>,
    pub states: Vec<Vec<S>>,
    /// Spacing of the recorded times.
    pub dt: S,
    pub flow: Arc<FlowFamily<S>>,
}

impl<S: Real> Trajectory<S> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state(&self, k: usize) -> HeatState<S> {
        HeatState { t: self.times[k], u: self.states[k].clone() }
    }

    pub fn geometry(&self, k: usize) -> Result<WeightedGeometry<S>> {
        self.flow.geometry_at(self.times[k])
    }

    /// Index of the recorded time nearest to `t`.
    pub fn index_of(&self, t: S) -> usize {
        let k = ((t - self.times[0]) / self.dt).round().max(S::zero());
        k.to_usize().unwrap_or(0).min(self.len() - 1)
    }

    /// Interior indices (both neighbours recorded) whose times lie in `[lo, hi]`.
    pub fn interior_in(&self, lo: S, hi: S) -> Vec<usize> {
        let slack = self.dt * S::lit(1e-6);
        (1..self.len().saturating_sub(1))
            .filter(|&k| self.times[k] >= lo - slack && self.times[k] <= hi + slack)
            .collect()
    }
}

/// One Crank–Nicolson step operator, with the factorization cached for
/// static families.
pub struct Stepper<S> {
    flow: Arc<FlowFamily<S>>,
    cached: Option<(S, TridiagFactor<S>)>,
}

impl<S: Real> Stepper<S> {
    pub fn new(flow: Arc<FlowFamily<S>>) -> Self {
        Self { flow, cached: None }
    }

    /// Advances `u` from `t` to `t + dt`: `(M − ½dt A)u⁺ = (M + ½dt A)u`, with
    /// `M`, `A` frozen at `t + dt/2`.
    pub fn step(&mut self, u: &[S], t: S, dt: S) -> Result<Vec<S>> {
        let half = dt / S::lit(2.0);
        let geom = self.geometry(t + half)?;
        let ops = build_operators(&geom);
        let mut rhs = ops.apply_mass_plus(half, u);
        self.factor(&geom, half)?.solve(&mut rhs);
        if rhs.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite state after step at t = {t}")));
        }
        Ok(rhs)
    }

    /// Adjoint of [`Stepper::step`] with respect to `μ`:
    /// `M⁻¹(M + ½dt A)(M − ½dt A)⁻¹ M v`.
    pub fn adjoint_step(&mut self, v: &[S], t: S, dt: S) -> Result<Vec<S>> {
        let half = dt / S::lit(2.0);
        let geom = self.geometry(t + half)?;
        let mut w: Vec<S> = v.iter().zip(geom.measure()).map(|(a, m)| *a * *m).collect();
        self.factor(&geom, half)?.solve(&mut w);
        let ops = build_operators(&geom);
        let out = ops.apply_mass_plus(half, &w);
        Ok(out.iter().zip(geom.measure()).map(|(a, m)| *a / *m).collect())
    }

    /// Backward Euler step `(M − dt A)u⁺ = M u` with the generator at `t + dt`.
    pub fn implicit_step(&mut self, u: &[S], t: S, dt: S) -> Result<Vec<S>> {
        let geom = self.geometry(t + dt)?;
        let mut rhs: Vec<S> = u.iter().zip(geom.measure()).map(|(a, m)| *a * *m).collect();
        build_operators(&geom).shifted_factor(dt)?.solve(&mut rhs);
        Ok(rhs)
    }

    /// Two-stage singly diagonally implicit Runge–Kutta step with
    /// `γ = 1 − 1/√2`: second order, L-stable and stiffly accurate.
    pub fn sdirk_step(&mut self, u: &[S], t: S, dt: S) -> Result<Vec<S>> {
        let gamma = S::one() - S::FRAC_1_SQRT_2();
        let g1 = self.geometry(t + gamma * dt)?;
        let mut u1: Vec<S> = u.iter().zip(g1.measure()).map(|(a, m)| *a * *m).collect();
        build_operators(&g1).shifted_factor(gamma * dt)?.solve(&mut u1);
        let g2 = self.geometry(t + dt)?;
        let w = (S::one() - gamma) / gamma;
        let mut u2: Vec<S> = (0..u.len()).map(|i| g2.measure()[i] * (u[i] + w * (u1[i] - u[i]))).collect();
        build_operators(&g2).shifted_factor(gamma * dt)?.solve(&mut u2);
        if u2.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite state after step at t = {t}")));
        }
        Ok(u2)
    }

    fn geometry(&self, t: S) -> Result<WeightedGeometry<S>> {
        self.flow.geometry_at(t)
    }

    fn factor(&mut self, geom: &WeightedGeometry<S>, half: S) -> Result<&TridiagFactor<S>> {
        let reuse = self.flow.is_static() && matches!(&self.cached, Some((h, _)) if *h == half);
        if !reuse {
            let f = build_operators(geom).shifted_factor(half)?;
            self.cached = Some((half, f));
        }
        Ok(&self.cached.as_ref().expect("factor cached").1)
    }
}

fn step_count<S: Real>(span: S, dt: S) -> Result<usize> {
    if !(dt > S::zero()) {
        return Err(Error::Input("time step must be positive".into()));
    }
    if span < S::zero() {
        return Err(Error::Domain("end time precedes start time".into()));
    }
    let m = (span / dt).round().to_usize().unwrap_or(0);
    Ok(if span > S::zero() { m.max(1) } else { 0 })
}

/// Solves the heat equation from `u0` at `t0` to `t_end` recording every step.
pub fn solve<S: Real>(u0: &[S], flow: &FlowFamily<S>, t0: S, t_end: S, dt: S) -> Result<Trajectory<S>> {
    solve_strided(u0, flow, t0, t_end, dt, 1)
}

/// Like [`solve`], recording every `stride`-th state (recorded spacing `stride·dt`).
pub fn solve_strided<S: Real>(
    u0: &[S],
    flow: &FlowFamily<S>,
    t0: S,
    t_end: S,
    dt: S,
    stride: usize,
) -> Result<Trajectory<S>> {
    let geom0 = flow.geometry_at(t0)?;
    let u = normalize(u0.to_vec(), &geom0)?;
    evolve(u, Arc::new(flow.clone()), t0, t_end, dt, stride.max(1))
}

fn evolve<S: Real>(mut u: Vec<S>, flow: Arc<FlowFamily<S>>, t0: S, t_end: S, dt: S, stride: usize) -> Result<Trajectory<S>> {
    let m = step_count(t_end - t0, dt)?;
    let step = if m > 0 { (t_end - t0) / S::of(m) } else { dt };
    let mut stepper = Stepper::new(flow.clone());
    let mut times = vec![t0];
    let mut states = vec![u.clone()];
    for k in 0..m {
        let t = t0 + step * S::of(k);
        u = stepper.step(&u, t, step)?;
        if (k + 1) % stride == 0 {
            times.push(t0 + step * S::of(k + 1));
            states.push(u.clone());
        }
    }
    Ok(Trajectory { times, states, dt: step * S::of(stride), flow })
}

/// Dense propagator `P_{t,s}` (columns are evolved unit vectors).
pub fn propagator<S: Real>(flow: &FlowFamily<S>, s: S, t: S, dt: S) -> Result<Dense<S>> {
    if s > t {
        return Err(Error::Domain(format!("propagator needs s <= t, got s = {s}, t = {t}")));
    }
    let n = flow.grid().len();
    let m = step_count(t - s, dt)?;
    let step = if m > 0 { (t - s) / S::of(m) } else { dt };
    let mut p = Dense::identity(n);
    let mut stepper = Stepper::new(Arc::new(flow.clone()));
    for j in 0..n {
        let mut col = p.column(j);
        for k in 0..m {
            col = stepper.step(&col, s + step * S::of(k), step)?;
        }
        p.set_column(j, &col);
    }
    Ok(p)
}

/// Dense adjoint `P*_{t,s} = M⁻¹ P_{t,s}ᵀ M` of a conjugate family.
pub fn adjoint_propagator<S: Real>(flow: &FlowFamily<S>, s: S, t: S, dt: S) -> Result<Dense<S>> {
    let p = propagator(flow, s, t, dt)?;
    let mu = flow.geometry_at(s)?.measure().to_vec();
    let n = p.n;
    let mut out = Dense::zeros(n);
    for i in 0..n {
        for j in 0..n {
            out.set(i, j, p.get(j, i) * mu[j] / mu[i]);
        }
    }
    Ok(out)
}

/// Applies `P_{t,s}` to a vector.
pub fn propagate<S: Real>(flow: &FlowFamily<S>, u: &[S], s: S, t: S, dt: S) -> Result<Vec<S>> {
    if s > t {
        return Err(Error::Domain(format!("propagate needs s <= t, got s = {s}, t = {t}")));
    }
    let m = step_count(t - s, dt)?;
    let step = if m > 0 { (t - s) / S::of(m) } else { dt };
    let mut stepper = Stepper::new(Arc::new(flow.clone()));
    let mut v = u.to_vec();
    for k in 0..m {
        v = stepper.step(&v, s + step * S::of(k), step)?;
    }
    Ok(v)
}

/// Applies `P*_{t,s}` to a vector by stepping the adjoint backwards from `t` to `s`.
pub fn propagate_adjoint<S: Real>(flow: &FlowFamily<S>, v: &[S], s: S, t: S, dt: S) -> Result<Vec<S>> {
    if s > t {
        return Err(Error::Domain(format!("adjoint needs s <= t, got s = {s}, t = {t}")));
    }
    let m = step_count(t - s, dt)?;
    let step = if m > 0 { (t - s) / S::of(m) } else { dt };
    let mut stepper = Stepper::new(Arc::new(flow.clone()));
    let mut w = v.to_vec();
    for k in (0..m).rev() {
        w = stepper.adjoint_step(&w, s + step * S::of(k), step)?;
    }
    Ok(w)
}

/// Smallest time at which a point-mass kernel is resolved on the grid, `4h²`
/// in arclength units.
pub fn kernel_resolution<S: Real>(geom: &WeightedGeometry<S>) -> S {
    let amax = geom.metric().iter().fold(S::zero(), |a, b| a.max(*b));
    S::lit(4.0) * geom.h() * geom.h() * amax
}

/// Largest step for which the explicit half of Crank–Nicolson keeps a point
/// mass non-negative.
fn positivity_step<S: Real>(geom: &WeightedGeometry<S>) -> S {
    let grid = geom.grid();
    let c = geom.conductance();
    let mut best = S::infinity();
    for i in 0..grid.len() {
        let (l, r) = grid.incident_edges(i);
        let sum = l.map_or(S::zero(), |k| c[k]) + r.map_or(S::zero(), |k| c[k]);
        best = best.min(S::lit(2.0) * geom.measure()[i] / sum);
    }
    S::lit(0.9) * best
}

/// Evolves a unit point mass at node `x0` from time 0 to `t`.
///
/// Crank–Nicolson barely damps modes with `λ·dt ≫ 1`, and a point mass
/// excites all of them. The first `8·t_res` units of time use backward Euler
/// (positivity preserving) with steps growing by 10%. An L-stable second
/// order scheme then takes steps bounded by a quarter of the elapsed time,
/// growing by 50% up to `dt`, and the last step lands exactly on `t`.
fn point_mass_to<S: Real>(flow: &Arc<FlowFamily<S>>, x0: usize, t: S, dt: S) -> Result<Vec<S>> {
    let geom = flow.geometry_at(S::zero())?;
    if x0 >= geom.len() {
        return Err(Error::Input(format!("kernel source node {x0} outside the grid")));
    }
    let mut u = vec![S::zero(); geom.len()];
    u[x0] = S::one() / geom.measure()[x0];
    let mut stepper = Stepper::new(flow.clone());
    let first = positivity_step(&geom).min(dt);
    let smoothing = (S::lit(8.0) * kernel_resolution(&geom)).min(t);
    let mut elapsed = S::zero();
    let mut h = first;
    while elapsed < smoothing {
        let mut step = h.min(smoothing - elapsed);
        if smoothing - elapsed - step < first / S::lit(2.0) {
            step = smoothing - elapsed;
        }
        u = stepper.implicit_step(&u, elapsed, step)?;
        elapsed += step;
        h *= S::lit(1.1);
    }
    while t - elapsed > S::zero() {
        let remaining = t - elapsed;
        let mut step = (h * S::lit(1.5)).min(elapsed / S::lit(4.0)).min(dt);
        if remaining - step < step / S::lit(2.0) {
            step = remaining;
        }
        u = stepper.sdirk_step(&u, elapsed, step)?;
        elapsed += step;
        h = step;
    }
    Ok(u)
}

/// Fundamental solution from node `x0` at time `t`, normalized to mass one.
/// Refuses `t ≤ 4h²`.
pub fn heat_kernel<S: Real>(flow: &FlowFamily<S>, x0: usize, t: S, dt: S) -> Result<HeatState<S>> {
    let geom = flow.geometry_at(S::zero())?;
    let tmin = kernel_resolution(&geom);
    if t <= tmin {
        return Err(Error::Domain(format!("t = {t} is below the kernel resolution {tmin}")));
    }
    heat_kernel_unchecked(flow, x0, t, dt)
}

/// [`heat_kernel`] without the resolution guard; the boolean reports whether
/// `t` was below the resolution limit.
pub fn heat_kernel_lenient<S: Real>(flow: &FlowFamily<S>, x0: usize, t: S, dt: S) -> Result<(HeatState<S>, bool)> {
    let geom = flow.geometry_at(S::zero())?;
    let below = t <= kernel_resolution(&geom);
    Ok((heat_kernel_unchecked(flow, x0, t, dt)?, below))
}

fn heat_kernel_unchecked<S: Real>(flow: &FlowFamily<S>, x0: usize, t: S, dt: S) -> Result<HeatState<S>> {
    let flow = Arc::new(flow.clone());
    let u = point_mass_to(&flow, x0, t, dt)?;
    let geom = flow.geometry_at(t)?;
    HeatState::normalized(t, u, &geom)
}

/// Heat-kernel trajectory from node `x0`: graded start up to `t0`, then
/// uniform steps of `dt` to `t_end`, recording every `stride`-th state.
pub fn kernel_trajectory<S: Real>(
    flow: &FlowFamily<S>,
    x0: usize,
    t0: S,
    t_end: S,
    dt: S,
    stride: usize,
) -> Result<Trajectory<S>> {
    let start = heat_kernel(flow, x0, t0, dt)?;
    evolve(start.u, Arc::new(flow.clone()), t0, t_end, dt, stride.max(1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::{make_canonical, CanonicalKind};

    fn circle(n: usize) -> FlowFamily<f64> {
        make_canonical(CanonicalKind::FlatCircle { length: std::f64::consts::TAU }, n).unwrap()
    }

    #[test]
    fn uniform_is_stationary() {
        let flow = circle(64);
        let traj = solve(&vec![1.0; 64], &flow, 0.0, 1.0, 0.05).unwrap();
        let last = traj.states.last().unwrap();
        let v = 1.0 / std::f64::consts::TAU;
        assert!(last.iter().all(|x| (x - v).abs() < 1e-14));
    }

    #[test]
    fn semigroup_and_identity() {
        let flow = circle(48);
        let dt = 0.0125;
        let id = propagator(&flow, 0.1, 0.1, dt).unwrap();
        assert_eq!(id, Dense::identity(48));
        let p02 = propagator(&flow, 0.0, 0.2, dt).unwrap();
        let p01 = propagator(&flow, 0.0, 0.1, dt).unwrap();
        let p12 = propagator(&flow, 0.1, 0.2, dt).unwrap();
        assert!(p02.max_abs_diff(&p12.matmul(&p01)) < 1e-10);
        let adj = adjoint_propagator(&flow, 0.0, 0.2, dt).unwrap();
        assert!(adj.max_abs_diff(&p02) < 1e-12);
        assert!(propagator(&flow, 0.2, 0.1, dt).is_err());
    }

    #[test]
    fn kernel_refuses_unresolved_times() {
        let flow = circle(64);
        let h = std::f64::consts::TAU / 64.0;
        assert!(heat_kernel(&flow, 0, 2.0 * h * h, h).is_err());
        let (_, below) = heat_kernel_lenient(&flow, 0, 2.0 * h * h, h).unwrap();
        assert!(below);
    }
}
