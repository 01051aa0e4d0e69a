//! Li-Yau-Hamilton-Perelman Harnack quantities.
//!
//! All fields use the W-convention potential `f = −log u − (N/2) log 4πt`.
//! Pointwise identities are evaluated in arclength on the chart: for a unit
//! vector `e`, `f_s = f′/√a`, `f_ss = ∇²f(e,e)` and `V_s` is the slope of the
//! effective potential `V = φ − ((d−1)/2) log a`. The reduced `n`-dimensional
//! models enter only through `V`, so their angular Hessian directions are
//! accounted for by the `(N−1)` term rather than by extra Hessian entries.

use crate::error::{Error, Result};
use crate::flows::FlowFamily;
use crate::heat::{propagate, HeatState, Trajectory};
use crate::scalar::{Dim, Real};
use crate::space::{build_operators, chart_d1, hessian_field, potential_is_constant, potential_slope, unit_ricci, WeightedGeometry};

/// `w = 2Lf − |∇f|²`, the normalized `w_N` and `ν = w_N·u`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarnackField<S> {
    pub t: S,
    pub w: Vec<S>,
    pub w_n: Vec<S>,
    pub nu: Vec<S>,
}

/// Harnack field of a state. `k = 0` gives `w_N = t·w + f − N`; `k > 0` gives
/// the variant `tLf + t(1+kt)(Lf − |∇f|²) + f − N(1+kt/2)²` for spaces whose
/// curvature is bounded below by `−k`.
pub fn harnack_field<S: Real>(state: &HeatState<S>, geom: &WeightedGeometry<S>, n_dim: S, k: S) -> Result<HarnackField<S>> {
    let t = state.t;
    if !(t > S::zero()) {
        return Err(Error::Domain("Harnack field needs t > 0".into()));
    }
    let ops = build_operators(geom);
    let f = state.f(n_dim);
    let lf = ops.apply_l(&f);
    let gf = ops.gamma(&f, &f);
    let two = S::lit(2.0);
    let w: Vec<S> = lf.iter().zip(&gf).map(|(l, g)| two * *l - *g).collect();
    let s = S::one() + k * t / two;
    let w_n: Vec<S> = (0..f.len())
        .map(|i| {
            if k == S::zero() {
                t * w[i] + f[i] - n_dim
            } else {
                t * lf[i] + t * (S::one() + k * t) * (lf[i] - gf[i]) + f[i] - n_dim * s * s
            }
        })
        .collect();
    let nu = w_n.iter().zip(&state.u).map(|(a, u)| *a * *u).collect();
    Ok(HarnackField { t, w, w_n, nu })
}

/// `[∂_t, L_t] f` of the discrete generator `L = M⁻¹A`, i.e.
/// `M⁻¹Ȧf − M⁻¹ṀM⁻¹Af`, with the rates taken from the family.
pub fn commutator<S: Real>(flow: &FlowFamily<S>, f: &[S], t: S) -> Result<Vec<S>> {
    if flow.is_static() {
        return Ok(vec![S::zero(); f.len()]);
    }
    let geom = flow.geometry_at(t)?;
    let (c_rate, m_rate) = flow.operator_rates(t)?;
    let grid = geom.grid();
    let mut af = vec![S::zero(); f.len()];
    let mut adot = vec![S::zero(); f.len()];
    for k in 0..grid.num_edges() {
        let (i, j) = grid.edge(k);
        let d = f[j] - f[i];
        af[i] += geom.conductance()[k] * d;
        af[j] -= geom.conductance()[k] * d;
        adot[i] += c_rate[k] * d;
        adot[j] -= c_rate[k] * d;
    }
    let mu = geom.measure();
    Ok((0..f.len()).map(|i| (adot[i] - m_rate[i] * af[i] / mu[i]) / mu[i]).collect())
}

/// Continuum commutator on the chart from nodal rates:
/// `−(a_t/a²)(f″ − a′f′/(2a)) + a_t V′f′/a² − (a_t′/(2a) − a′a_t/(2a²) + V_t′) f′/a`.
/// Cross-validates [`commutator`] to `O(h²)` away from singular ends.
pub fn commutator_symbolic<S: Real>(flow: &FlowFamily<S>, f: &[S], t: S) -> Result<Vec<S>> {
    let geom = flow.geometry_at(t)?;
    let a = geom.metric();
    let at = flow.metric_rate(t)?;
    let vt = flow.chart_potential_rate(t)?;
    let v = geom.chart_potential();
    let (da, dat, dv, dvt) = (chart_d1(&geom, a), chart_d1(&geom, &at), chart_d1(&geom, &v), chart_d1(&geom, &vt));
    let d1 = chart_d1(&geom, f);
    let d2 = crate::space::chart_d2(&geom, f);
    let two = S::lit(2.0);
    Ok((0..f.len())
        .map(|i| {
            let a2 = a[i] * a[i];
            -(at[i] / a2) * (d2[i] - da[i] * d1[i] / (two * a[i])) + at[i] * dv[i] * d1[i] / a2
                - (dat[i] / (two * a[i]) - da[i] * at[i] / (two * a2) + dvt[i]) * d1[i] / a[i]
        })
        .collect())
}

/// Pointwise pieces of the `ν` evolution: the static part
/// `−2t[(f_ss − 1/(2t))² + Ric_{N,1}(e,e) f_s²] − (2t/(N−1))(V_s f_s + (N−1)/(2t))²`,
/// the stretching `(a_t/a) f_s²` and `[∂_t, L]f`.
struct EvolutionTerms<S> {
    core: Vec<S>,
    stretch: Vec<S>,
    commutator: Vec<S>,
}

fn evolution_terms<S: Real>(state: &HeatState<S>, flow: &FlowFamily<S>, n_dim: S) -> Result<EvolutionTerms<S>> {
    let t = state.t;
    let geom = flow.geometry_at(t)?;
    let one = S::one();
    let two = S::lit(2.0);
    if !n_dim.is_finite() || n_dim < one {
        return Err(Error::Convention(format!("Harnack evolution needs finite N >= 1, got {n_dim}")));
    }
    let flat_potential = n_dim == one;
    if flat_potential && !potential_is_constant(&geom) {
        return Err(Error::Convention("N = n with a non-constant potential divides by N − n".into()));
    }
    let f = state.f(n_dim);
    let sqrt_a: Vec<S> = geom.metric().iter().map(|a| a.sqrt()).collect();
    let fs: Vec<S> = chart_d1(&geom, &f).iter().zip(&sqrt_a).map(|(d, r)| *d / *r).collect();
    let fss = hessian_field(&geom, &f);
    let vs = potential_slope(&geom);
    let ric = unit_ricci(&geom, Dim::Finite(n_dim))?;
    let rate = flow.metric_rate(t)?;
    let core = (0..f.len())
        .map(|i| {
            let hess = fss[i] - one / (two * t);
            let mut c = -two * t * (hess * hess + ric[i] * fs[i] * fs[i]);
            if !flat_potential {
                let excess = n_dim - one;
                let p = vs[i] * fs[i] + excess / (two * t);
                c -= two * t / excess * p * p;
            }
            c
        })
        .collect();
    let stretch = (0..f.len()).map(|i| rate[i] / geom.metric()[i] * fs[i] * fs[i]).collect();
    Ok(EvolutionTerms { core, stretch, commutator: commutator(flow, &f, t)? })
}

/// Pointwise right-hand side of the evolution of `ν` (with `k = 0`) under a
/// forward heat flow on a conjugate family:
///
/// `(∂_t − L)ν = u{−2t[(f_ss − 1/(2t))² + Ric_{N,1}(e,e) f_s²]
///   − (2t/(N−1))(V_s f_s + (N−1)/(2t))² + t[(a_t/a) f_s² + 2[∂_t, L]f]}`.
///
/// The last bracket vanishes on static families. With `N = 1` the potential
/// term is only defined for constant `V`, where it is zero.
pub fn evolution_rhs<S: Real>(state: &HeatState<S>, flow: &FlowFamily<S>, n_dim: S) -> Result<Vec<S>> {
    let t = state.t;
    let e = evolution_terms(state, flow, n_dim)?;
    let two = S::lit(2.0);
    Ok((0..state.u.len())
        .map(|i| state.u[i] * (e.core[i] + t * (e.stretch[i] + two * e.commutator[i])))
        .collect())
}

/// Density of `dW_N/dt`:
/// `u{−2t[(f_ss − 1/(2t))² + (a_t/(2a) + Ric_{N,1}(e,e)) f_s²] − (2t/(N−1))(V_s f_s + (N−1)/(2t))²}`.
pub fn w_rate_density<S: Real>(state: &HeatState<S>, flow: &FlowFamily<S>, n_dim: S) -> Result<Vec<S>> {
    let t = state.t;
    let e = evolution_terms(state, flow, n_dim)?;
    Ok((0..state.u.len()).map(|i| state.u[i] * (e.core[i] - t * e.stretch[i])).collect())
}

/// Both sides of the `ν` evolution identity at recorded index `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionResidual<S> {
    pub t: S,
    pub lhs: Vec<S>,
    pub rhs: Vec<S>,
    /// [`smoothed_l1`] of `lhs − rhs`.
    pub l1: S,
}

/// Nodes used by pointwise checks: outside a `3h` collar at reflecting ends
/// and where the density is resolved (`u ≥ 1e-10·max u`). Log-derivatives
/// of densities below the solver's relative round-off carry no information.
pub fn checked_nodes<S: Real>(geom: &WeightedGeometry<S>, u: &[S]) -> Vec<bool> {
    let umax = u.iter().fold(S::zero(), |a, b| a.max(*b));
    let floor = S::lit(1e-10) * umax;
    geom.grid()
        .interior_mask(S::lit(3.0) * geom.h())
        .iter()
        .zip(u)
        .map(|(m, v)| *m && *v >= floor)
        .collect()
}

/// Scale `s` of the resolvent smoothing used by [`smoothed_l1`].
pub const RESIDUAL_SMOOTHING: f64 = 1e-3;

/// `Σ μ|(I − sL)⁻²(r·1_mask)|` over the masked nodes, `s` = [`RESIDUAL_SMOOTHING`].
///
/// Residuals of identities that apply `L` to a field which already contains
/// second differences of `u` are fourth differences, whose floating point
/// floor grows like `ε/h⁴`. A smoothing at a scale that does not depend on
/// `h` damps grid-scale round-off while keeping the norm consistent: a wrong
/// identity still leaves an `O(1)` residual and a correct one converges at
/// the order of the discretization.
pub fn smoothed_l1<S: Real>(geom: &WeightedGeometry<S>, r: &[S], mask: &[bool]) -> Result<S> {
    let factor = build_operators(geom).shifted_factor(S::lit(RESIDUAL_SMOOTHING))?;
    let mu = geom.measure();
    let mut v: Vec<S> = (0..r.len()).map(|i| if mask[i] { r[i] * mu[i] } else { S::zero() }).collect();
    factor.solve(&mut v);
    for i in 0..v.len() {
        v[i] *= mu[i];
    }
    factor.solve(&mut v);
    Ok((0..v.len()).filter(|i| mask[*i]).map(|i| mu[i] * v[i].abs()).sum())
}

/// `(∂_t − L)ν` by centred differences along the trajectory against
/// [`evolution_rhs`], at interior recorded index `k`.
pub fn evolution_residual<S: Real>(traj: &Trajectory<S>, n_dim: S, k: usize) -> Result<EvolutionResidual<S>> {
    if k == 0 || k + 1 >= traj.len() {
        return Err(Error::Data(format!("index {k} is not interior to the trajectory")));
    }
    let nu_at = |j: usize| -> Result<Vec<S>> {
        let g = traj.geometry(j)?;
        Ok(harnack_field(&traj.state(j), &g, n_dim, S::zero())?.nu)
    };
    let (prev, cur, next) = (nu_at(k - 1)?, nu_at(k)?, nu_at(k + 1)?);
    let geom = traj.geometry(k)?;
    let l_nu = build_operators(&geom).apply_l(&cur);
    let span = traj.times[k + 1] - traj.times[k - 1];
    let lhs: Vec<S> = (0..cur.len()).map(|i| (next[i] - prev[i]) / span - l_nu[i]).collect();
    let state = traj.state(k);
    let rhs = evolution_rhs(&state, &traj.flow, n_dim)?;
    let mask = checked_nodes(&geom, &state.u);
    let diff: Vec<S> = lhs.iter().zip(&rhs).map(|(a, b)| *a - *b).collect();
    let l1 = smoothed_l1(&geom, &diff, &mask)?;
    Ok(EvolutionResidual { t: traj.times[k], lhs, rhs, l1 })
}

/// [`smoothed_l1`] of `((∂_t − L)w + 2Γ₂(f,f) + 2Γ(w,f))·u` with `f = −log u`, `w = 2Lf − Γ(f,f)`,
/// at interior index `k` of a trajectory on a static family.
pub fn w_evolution_residual<S: Real>(traj: &Trajectory<S>, k: usize) -> Result<S> {
    if !traj.flow.is_static() {
        return Err(Error::Domain("the w evolution identity is stated for static families".into()));
    }
    if k == 0 || k + 1 >= traj.len() {
        return Err(Error::Data(format!("index {k} is not interior to the trajectory")));
    }
    let geom = traj.geometry(k)?;
    let ops = build_operators(&geom);
    let w_of = |j: usize| {
        let f: Vec<S> = traj.state(j).log_u().iter().map(|v| -*v).collect();
        let lf = ops.apply_l(&f);
        let gf = ops.gamma(&f, &f);
        let w: Vec<S> = lf.iter().zip(&gf).map(|(l, g)| S::lit(2.0) * *l - *g).collect();
        (f, w)
    };
    let (_, wp) = w_of(k - 1);
    let (_, wn) = w_of(k + 1);
    let (f, w) = w_of(k);
    let span = traj.times[k + 1] - traj.times[k - 1];
    let lw = ops.apply_l(&w);
    let g2 = ops.gamma2(&f);
    let gwf = ops.gamma(&w, &f);
    let mask = checked_nodes(&geom, &traj.states[k]);
    let r: Vec<S> = (0..f.len())
        .map(|i| ((wn[i] - wp[i]) / span - lw[i] + S::lit(2.0) * (g2[i] + gwf[i])) * traj.states[k][i])
        .collect();
    smoothed_l1(&geom, &r, &mask)
}

/// Li-Yau residual `N/(2t) − (Γ(u,u)/u² − ∂_t u/u)` at recorded index `k`, with
/// `∂_t u` from centred differences along the trajectory. Nodes outside
/// [`checked_nodes`] are reported as `+∞`.
pub fn liyau_residual<S: Real>(traj: &Trajectory<S>, k: usize, n_dim: S) -> Result<Vec<S>> {
    if k == 0 || k + 1 >= traj.len() {
        return Err(Error::Data("Li-Yau residual needs neighbouring states for ∂_t u".into()));
    }
    let geom = traj.geometry(k)?;
    let u = &traj.states[k];
    let guu = build_operators(&geom).gamma(u, u);
    let span = traj.times[k + 1] - traj.times[k - 1];
    let t = traj.times[k];
    let mask = checked_nodes(&geom, u);
    Ok((0..u.len())
        .map(|i| {
            if !mask[i] {
                return S::infinity();
            }
            let ut = (traj.states[k + 1][i] - traj.states[k - 1][i]) / span;
            n_dim / (S::lit(2.0) * t) - (guu[i] / (u[i] * u[i]) - ut / u[i])
        })
        .collect())
}

/// `t ↦ max_x Q(t)` with `Q(t) = P_{T,t}ν(t) − ∫_{t_0}^{t} P_{T,s}C(s) ds`, where
/// `T` is the final recorded time and `C` the moving-metric term of
/// [`evolution_rhs`]. Each sample is propagated forward to `T`; `Q` is
/// non-increasing in `t` whenever `(∂_t − L)ν − C ≤ 0`.
pub fn propagated_monotonicity<S: Real>(traj: &Trajectory<S>, n_dim: S, k: S, samples: &[usize]) -> Result<Vec<(S, S)>> {
    let flow = &traj.flow;
    let t_end = *traj.times.last().ok_or_else(|| Error::Data("empty trajectory".into()))?;
    let dt = traj.dt;
    let moving = !flow.is_static();
    // Accumulated correction at every recorded time, trapezoid in s.
    let mut correction: Vec<Vec<S>> = Vec::new();
    if moving {
        let n = traj.states[0].len();
        let mut acc = vec![S::zero(); n];
        let mut prev: Option<Vec<S>> = None;
        correction.push(acc.clone());
        for j in 0..traj.len() {
            let state = traj.state(j);
            let c = moving_term(&state, flow, n_dim)?;
            let pc = propagate(flow, &c, traj.times[j], t_end, dt)?;
            if let Some(p) = prev {
                for i in 0..n {
                    acc[i] += dt / S::lit(2.0) * (p[i] + pc[i]);
                }
                correction.push(acc.clone());
            }
            prev = Some(pc);
        }
    }
    samples
        .iter()
        .map(|&j| {
            let geom = traj.geometry(j)?;
            let nu = harnack_field(&traj.state(j), &geom, n_dim, k)?.nu;
            let mut q = propagate(flow, &nu, traj.times[j], t_end, dt)?;
            if moving {
                for (qi, ci) in q.iter_mut().zip(&correction[j]) {
                    *qi -= *ci;
                }
            }
            let mask = geom.grid().interior_mask(S::lit(3.0) * geom.h());
            let max = q.iter().zip(&mask).filter(|(_, m)| **m).fold(S::neg_infinity(), |a, (v, _)| a.max(*v));
            Ok((traj.times[j], max))
        })
        .collect()
}

/// `t[(a_t/a) f_s² + 2[∂_t, L]f] u`.
fn moving_term<S: Real>(state: &HeatState<S>, flow: &FlowFamily<S>, n_dim: S) -> Result<Vec<S>> {
    let t = state.t;
    let e = evolution_terms(state, flow, n_dim)?;
    let two = S::lit(2.0);
    Ok((0..state.u.len())
        .map(|i| t * (e.stretch[i] + two * e.commutator[i]) * state.u[i])
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::{make_canonical, make_shrinking_sphere, CanonicalKind};

    #[test]
    fn static_commutator_vanishes() {
        let flow = make_canonical(CanonicalKind::FlatCircle { length: 6.0f64 }, 32).unwrap();
        let f: Vec<f64> = (0..32).map(|i| (i as f64).sin()).collect();
        assert!(commutator(&flow, &f, 0.3).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn sphere_commutator_matches_secant() {
        let flow = make_shrinking_sphere::<f64>(2, 0.9, 512).unwrap();
        let f: Vec<f64> = flow.grid().nodes().iter().map(|t| t.cos()).collect();
        let (t, eps) = (0.1, 1e-4);
        let c = commutator(&flow, &f, t).unwrap();
        let lp = build_operators(&flow.geometry_at(t + eps).unwrap()).apply_l(&f);
        let lm = build_operators(&flow.geometry_at(t - eps).unwrap()).apply_l(&f);
        for i in 0..512 {
            let secant = (lp[i] - lm[i]) / (2.0 * eps);
            assert!((c[i] - secant).abs() < 1e-5, "node {i}: {} vs {secant}", c[i]);
        }
        let constant = commutator(&flow, &vec![2.0; 512], t).unwrap();
        assert!(constant.iter().all(|v| v.abs() < 1e-12));
    }
}
