//! Optimal constant of the entropy log-Sobolev inequality
//! `μ_K(t) = inf { W_{N,K}(u, t) : ∫(4πt)^{−N/2} u² dμ = 1 }`.
//!
//! With `s = (4πt)^{−N/2}`, a normalized `u` has density `s u²` and potential
//! `f = −2 log u`, so the objective is
//! `J(u) = 4ts∫Γ(u,u) − s∫u² log u² − N(1 + Kt/2)²`. The search variable is
//! `v` with `u = e^{−v/2}`; each iterate is renormalized exactly.

use crate::error::{Error, Result};
use crate::flows::FlowFamily;
use crate::linalg::TridiagFactor;
use crate::scalar::{Dim, Real};
use crate::space::{build_operators, WeightedGeometry};
use crate::verify::{CheckId, CheckResult};

/// Result of one minimization.
#[derive(Debug, Clone, PartialEq)]
pub struct LogSobolevSolution<S> {
    pub t: S,
    pub n_dim: S,
    pub k: S,
    /// Best objective value, the estimate of `μ_K(t)`.
    pub mu: S,
    /// Extremal profile with `∫s u² dμ = 1`.
    pub u: Vec<S>,
    /// Largest `|∫s u² dμ − 1|` over accepted iterates.
    pub constraint_residual: S,
    pub el_residual: S,
    pub iterations: usize,
    pub converged: bool,
    /// Spread of the final values over starting points (zero for one start).
    pub spread: S,
}

/// Iteration controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budget {
    pub max_iterations: usize,
    /// Window length for the relative-change stopping rule.
    pub window: usize,
    pub rel_change: f64,
}

impl Default for Budget {
    fn default() -> Self {
        Self { max_iterations: 20_000, window: 50, rel_change: 1e-10 }
    }
}

struct Problem<'a, S> {
    geom: &'a WeightedGeometry<S>,
    t: S,
    s: S,
    c: S,
}

impl<'a, S: Real> Problem<'a, S> {
    fn new(geom: &'a WeightedGeometry<S>, t: S, n_dim: S, k: S) -> Result<Self> {
        if !(t > S::zero()) {
            return Err(Error::Domain("log-Sobolev constant needs t > 0".into()));
        }
        if !(n_dim > S::zero()) || !n_dim.is_finite() {
            return Err(Error::Domain(format!("log-Sobolev constant needs finite N > 0, got {n_dim}")));
        }
        let half = S::lit(0.5);
        let s = (S::lit(4.0) * S::PI() * t).powf(-n_dim * half);
        let q = S::one() + k * t * half;
        Ok(Self { geom, t, s, c: n_dim * q * q })
    }

    /// Shifts `v` so that `u = e^{−v/2}` is normalized; returns the constraint
    /// residual after the shift.
    fn normalize(&self, v: &mut [S]) -> S {
        let mu = self.geom.measure();
        let z: S = (0..v.len()).map(|i| self.s * mu[i] * (-v[i]).exp()).sum();
        let shift = z.ln();
        for x in v.iter_mut() {
            *x += shift;
        }
        let z2: S = (0..v.len()).map(|i| self.s * mu[i] * (-v[i]).exp()).sum();
        (z2 - S::one()).abs()
    }

    /// Objective at a normalized `v`.
    fn objective(&self, v: &[S]) -> S {
        let u = profile(v);
        let d = dirichlet(self.geom, &u);
        let mu = self.geom.measure();
        let ent: S = (0..v.len()).map(|i| mu[i] * u[i] * u[i] * (-v[i])).sum();
        S::lit(4.0) * self.t * self.s * d - self.s * ent - self.c
    }

    /// Gradient in `v` at a normalized `v` with objective `j`.
    fn gradient(&self, v: &[S], j: S) -> Vec<S> {
        let u = profile(v);
        let lu = build_operators(self.geom).apply_l(&u);
        let mu = self.geom.measure();
        let two = S::lit(2.0);
        (0..v.len())
            .map(|i| {
                let du = two * self.s * mu[i] * (-S::lit(4.0) * self.t * lu[i] + u[i] * v[i] - (j + self.c) * u[i]);
                -u[i] / two * du
            })
            .collect()
    }

    /// `diag(s μ u²) + 2ts·A_{u²}`, where `A_{u²}` is the graph Laplacian
    /// with edge weights `c_e ū_e²`.
    fn preconditioner(&self, v: &[S]) -> Result<TridiagFactor<S>> {
        let u = profile(v);
        let grid = self.geom.grid();
        let c = self.geom.conductance();
        let mu = self.geom.measure();
        let floor = S::lit(1e-300);
        let mut diag: Vec<S> = (0..v.len()).map(|i| (self.s * mu[i] * u[i] * u[i]).max(floor)).collect();
        let mut off = vec![S::zero(); grid.num_edges()];
        let w = S::lit(2.0) * self.t * self.s;
        for k in 0..grid.num_edges() {
            let (i, j) = grid.edge(k);
            let ub = (u[i] + u[j]) / S::lit(2.0);
            let e = w * c[k] * ub * ub;
            diag[i] += e;
            diag[j] += e;
            off[k] = -e;
        }
        TridiagFactor::new(&diag, &off, grid.is_periodic())
    }
}

fn profile<S: Real>(v: &[S]) -> Vec<S> {
    v.iter().map(|x| (-*x / S::lit(2.0)).exp()).collect()
}

fn dirichlet<S: Real>(geom: &WeightedGeometry<S>, u: &[S]) -> S {
    let grid = geom.grid();
    (0..grid.num_edges())
        .map(|k| {
            let (i, j) = grid.edge(k);
            let d = u[j] - u[i];
            geom.conductance()[k] * d * d
        })
        .sum()
}

/// Minimizes the log-Sobolev objective from the positive profile `init`.
pub fn optimal_constant<S: Real>(
    geom: &WeightedGeometry<S>,
    t: S,
    n_dim: S,
    k: S,
    init: &[S],
    budget: Budget,
) -> Result<LogSobolevSolution<S>> {
    let p = Problem::new(geom, t, n_dim, k)?;
    if init.len() != geom.len() {
        return Err(Error::Shape { expected: geom.len(), got: init.len() });
    }
    if init.iter().any(|x| !(*x > S::zero()) || !x.is_finite()) {
        return Err(Error::Input("log-Sobolev start must be positive and finite".into()));
    }
    let mut v: Vec<S> = init.iter().map(|x| -S::lit(2.0) * x.ln()).collect();
    let mut constraint = p.normalize(&mut v);
    let mut j = p.objective(&v);
    let mut history = vec![j];
    let mut step = S::one();
    let mut iterations = 0;
    let mut converged = false;
    let armijo = S::lit(1e-4);
    while iterations < budget.max_iterations {
        iterations += 1;
        let g = p.gradient(&v, j);
        let mut d: Vec<S> = g.iter().map(|x| -*x).collect();
        p.preconditioner(&v)?.solve(&mut d);
        let slope: S = g.iter().zip(&d).map(|(a, b)| *a * *b).sum();
        if !(slope < S::zero()) {
            converged = true;
            break;
        }
        let mut accepted = None;
        let mut lambda = step;
        for _ in 0..60 {
            let mut trial: Vec<S> = v.iter().zip(&d).map(|(a, b)| *a + lambda * *b).collect();
            let r = p.normalize(&mut trial);
            let jt = p.objective(&trial);
            if jt.is_finite() && jt <= j + armijo * lambda * slope {
                accepted = Some((trial, jt, r));
                break;
            }
            lambda /= S::lit(2.0);
        }
        let Some((trial, jt, r)) = accepted else {
            converged = true;
            break;
        };
        step = (lambda * S::lit(2.0)).min(S::one());
        v = trial;
        j = jt;
        constraint = constraint.max(r);
        history.push(j);
        if history.len() > budget.window {
            let old = history[history.len() - 1 - budget.window];
            if (old - j).abs() <= S::lit(budget.rel_change) * j.abs().max(S::one()) {
                converged = true;
                break;
            }
        }
    }
    let u = profile(&v);
    let el = el_norm(&p, &u, j);
    Ok(LogSobolevSolution { t, n_dim, k, mu: j, u, constraint_residual: constraint, el_residual: el, iterations, converged, spread: S::zero() })
}

/// The three standard starts: a smooth perturbation of the constant (the
/// constant itself is a critical point), a Gaussian of variance `2t` about
/// the middle of the chart, and that Gaussian with the same perturbation.
pub fn standard_starts<S: Real>(geom: &WeightedGeometry<S>, t: S) -> Vec<Vec<S>> {
    let x = geom.arclength_nodes();
    let (lo, hi) = (*x.first().expect("nodes"), *x.last().expect("nodes"));
    let mid = (lo + hi) / S::lit(2.0);
    let len = hi - lo;
    let periodic = geom.grid().is_periodic();
    let gauss: Vec<S> = x
        .iter()
        .map(|p| {
            let mut d = (*p - mid).abs();
            if periodic {
                d = d.min(len - d);
            }
            (-d * d / (S::lit(8.0) * t)).exp()
        })
        .collect();
    let tau = S::lit(2.0) * S::PI();
    let wave: Vec<S> = x.iter().map(|p| (S::lit(0.3) * (tau * (*p - lo) / len).sin()).exp()).collect();
    let bumped = gauss.iter().zip(&wave).map(|(g, w)| *g * *w).collect();
    vec![wave, gauss, bumped]
}

/// Best of [`optimal_constant`] over [`standard_starts`], preferring
/// converged runs; `spread` is taken over the runs considered.
pub fn optimal_constant_multistart<S: Real>(
    geom: &WeightedGeometry<S>,
    t: S,
    n_dim: S,
    k: S,
    budget: Budget,
) -> Result<LogSobolevSolution<S>> {
    let runs = standard_starts(geom, t)
        .iter()
        .map(|init| optimal_constant(geom, t, n_dim, k, init, budget))
        .collect::<Result<Vec<_>>>()?;
    // Unconverged runs only count when no start converged, and runs pinned
    // against a truncation wall only count when every run is.
    let any_converged = runs.iter().any(|r| r.converged);
    let runs: Vec<LogSobolevSolution<S>> = runs.into_iter().filter(|r| r.converged || !any_converged).collect();
    let half = S::lit(0.5);
    let walled: Vec<bool> = runs.iter().map(|r| wall_mass(geom, t, &r.u) > half).collect();
    let any_free = walled.iter().any(|w| !w);
    let pool: Vec<LogSobolevSolution<S>> = runs.into_iter().zip(walled).filter(|(_, w)| !w || !any_free).map(|(r, _)| r).collect();
    let lo = pool.iter().map(|r| r.mu).fold(S::infinity(), S::min);
    let hi = pool.iter().map(|r| r.mu).fold(S::neg_infinity(), S::max);
    let mut best = pool
        .into_iter()
        .min_by(|a, b| a.mu.partial_cmp(&b.mu).expect("finite objective"))
        .expect("three starts");
    best.spread = hi - lo;
    Ok(best)
}

/// Fraction of `∫u² dμ` within `4√t` of an interval end whose cell measure
/// is at least a hundredth of the median cell measure. Such an end is where a
/// non-compact space was cut off; poles and vertices have vanishing measure
/// and never qualify. A reflecting wall admits half-Gaussian extremals that
/// the untruncated space does not have.
pub fn wall_mass<S: Real>(geom: &WeightedGeometry<S>, t: S, u: &[S]) -> S {
    if geom.grid().is_periodic() {
        return S::zero();
    }
    let m = geom.measure();
    let mut sorted = m.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite measure"));
    let median = sorted[sorted.len() / 2];
    let cut = median * S::lit(1e-2);
    let x = geom.arclength_nodes();
    let (lo, hi) = (x[0], x[x.len() - 1]);
    let collar = S::lit(4.0) * t.sqrt();
    let (open_lo, open_hi) = (m[0] >= cut, m[m.len() - 1] >= cut);
    let mut total = S::zero();
    let mut near = S::zero();
    for i in 0..u.len() {
        let w = m[i] * u[i] * u[i];
        total += w;
        if (open_lo && x[i] - lo < collar) || (open_hi && hi - x[i] < collar) {
            near += w;
        }
    }
    if total > S::zero() {
        near / total
    } else {
        S::zero()
    }
}

fn el_norm<S: Real>(p: &Problem<'_, S>, u: &[S], mu_ls: S) -> S {
    let lu = build_operators(p.geom).apply_l(u);
    let m = p.geom.measure();
    let two = S::lit(2.0);
    let mut num = S::zero();
    let mut den = S::zero();
    for i in 0..u.len() {
        let r = -S::lit(4.0) * p.t * lu[i] - two * u[i] * u[i].ln() - (p.c + mu_ls) * u[i];
        num += m[i] * r * r;
        den += m[i] * u[i] * u[i];
    }
    (num / den).sqrt()
}

/// `‖−4tLu − 2u log u − N(1 + Kt/2)²u − μu‖ / ‖u‖` in `L²(μ)` for a
/// converged solution.
pub fn euler_lagrange_residual<S: Real>(sol: &LogSobolevSolution<S>, geom: &WeightedGeometry<S>) -> Result<S> {
    if !sol.converged {
        return Err(Error::NotConverged(format!("log-Sobolev solution after {} iterations", sol.iterations)));
    }
    profile_residual(geom, sol.t, sol.n_dim, sol.k, &sol.u, sol.mu)
}

/// The Euler-Lagrange residual of an arbitrary positive profile `u` with
/// constant `mu_ls`, without normalizing `u`.
pub fn profile_residual<S: Real>(geom: &WeightedGeometry<S>, t: S, n_dim: S, k: S, u: &[S], mu_ls: S) -> Result<S> {
    let p = Problem::new(geom, t, n_dim, k)?;
    if u.len() != geom.len() {
        return Err(Error::Shape { expected: geom.len(), got: u.len() });
    }
    Ok(el_norm(&p, u, mu_ls))
}

/// `μ_K(t_i)` along the listed times on the geometry of `flow` at each time;
/// passes when the sequence is non-increasing in the listed order within
/// `1e-3`.
pub fn mu_monotonicity<S: Real>(flow: &FlowFamily<S>, n_dim: S, k: S, times: &[S], budget: Budget) -> Result<CheckResult<S>> {
    let id = CheckId::MuMonotone;
    let class = flow.class();
    if !flow.is_conjugate() || !class.implies(k, Dim::Finite(n_dim)) {
        return Ok(CheckResult::not_applicable(
            id,
            format!("needs a conjugate ({k}, {n_dim}) family; {} is declared ({}, {})", flow.label(), class.k, class.n_dim),
        ));
    }
    if times.len() < 2 {
        return Err(Error::Input("μ monotonicity needs at least two times".into()));
    }
    let mut values = Vec::with_capacity(times.len());
    for t in times {
        let geom = flow.geometry_at(*t)?;
        values.push(optimal_constant_multistart(&geom, *t, n_dim, k, budget)?.mu);
    }
    let worst = values.windows(2).map(|w| w[1] - w[0]).fold(S::neg_infinity(), S::max);
    let mut res = CheckResult::measured(id, -worst, S::lit(1e-3));
    for (t, m) in times.iter().zip(&values) {
        res.details.push((format!("mu(t={t})"), *m));
    }
    Ok(res)
}
