//! Named checks of the entropy identities and inequalities with residuals,
//! margins, tolerances and a three-state outcome.
//!
//! Identities report a residual (pass when `value ≤ tolerance`); inequalities
//! report the worst sampled margin (pass when `value ≥ −tolerance`). A check
//! whose curvature-dimension requirement is not implied by the declared
//! class of the family is reported as not applicable and never fails.
//! Discretization tolerances follow `c·(h² + Δt²)·scale` with `h` the
//! arclength grid spacing, `Δt` the recorded time step, `scale` the natural
//! magnitude of the compared quantities and `c` calibrated once on the
//! Gaussian (see [`CheckId::coefficient`]).

use std::fmt;
use std::str::FromStr;

use crate::entropy::{boltzmann_entropy, fisher_information, fisher_rate, nash_entropy, perelman_w_sphere, w_nk_direct, w_via_derivative};
use crate::error::{Error, Result};
use crate::flows::{super_ricci_defect, FlowFamily};
use crate::harnack::{checked_nodes, evolution_residual, harnack_field, liyau_residual, propagated_monotonicity, w_rate_density};
use crate::heat::{kernel_resolution, kernel_trajectory, propagate, propagate_adjoint, propagator, HeatState, Stepper, Trajectory};
use crate::linalg::Dense;
use crate::logsobolev::{self, Budget};
use crate::scalar::{Dim, Real};
use crate::space::{build_operators, chart_d1, hessian_field, potential_is_constant, potential_slope, unit_ricci, WeightedGeometry};
use crate::transport::wasserstein2;

macro_rules! check_ids {
    ($($variant:ident => $name:literal, $kind:ident;)*) => {
        /// Every named check.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum CheckId { $($variant),* }

        impl CheckId {
            pub const ALL: &'static [CheckId] = &[$(CheckId::$variant),*];

            pub fn as_str(self) -> &'static str {
                match self { $(CheckId::$variant => $name),* }
            }

            pub fn kind(self) -> CheckKind {
                match self { $(CheckId::$variant => CheckKind::$kind),* }
            }
        }

        impl FromStr for CheckId {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok(CheckId::$variant),)*
                    other => Err(Error::UnknownCheck(other.to_string())),
                }
            }
        }
    };
}

check_ids! {
    FirstDissipation => "FIRST_DISSIPATION", Identity;
    SecondDissipation => "SECOND_DISSIPATION", Identity;
    WDefinition => "W_DEFINITION", Identity;
    WDerivativeFormula => "W_DERIVATIVE_FORMULA", Identity;
    EntropyPowerIdentity => "ENTROPY_POWER_IDENTITY", Identity;
    HarnackEvolution => "HARNACK_EVOLUTION", Identity;
    WMonotone => "W_MONOTONE", Inequality;
    RiccatiEdi => "RICCATI_EDI", Inequality;
    EntropyPowerConcave => "ENTROPY_POWER_CONCAVE", Inequality;
    FisherBound => "FISHER_BOUND", Inequality;
    LogEntropyDecay => "LOG_ENTROPY_DECAY", Inequality;
    DynamicBochner => "DYNAMIC_BOCHNER", Inequality;
    GradientEstimate => "GRADIENT_ESTIMATE", Inequality;
    W2Contraction => "W2_CONTRACTION", Inequality;
    LiYau => "LI_YAU", Inequality;
    HarnackNu => "HARNACK_NU", Inequality;
    HarnackPropagated => "HARNACK_PROPAGATED", Inequality;
    NoncollapseEquiv => "NONCOLLAPSE_EQUIV", Asymptotic;
    WInfinityKappa => "W_INFINITY_KAPPA", Asymptotic;
    HeatKernelBounds => "HEAT_KERNEL_BOUNDS", Asymptotic;
    NashMonotone => "NASH_MONOTONE", Asymptotic;
    PerelmanSoliton => "PERELMAN_SOLITON", Identity;
    MeasureInvariance => "MEASURE_INVARIANCE", Identity;
    SuperRicciDefect => "SUPER_RICCI_DEFECT", Inequality;
    LogsobolevConstant => "LOGSOBOLEV_CONSTANT", Inequality;
    EulerLagrange => "EULER_LAGRANGE", Identity;
    MuMonotone => "MU_MONOTONE", Inequality;
}

impl fmt::Display for CheckId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckKind {
    Identity,
    Inequality,
    Asymptotic,
}

impl CheckKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CheckKind::Identity => "identity",
            CheckKind::Inequality => "inequality",
            CheckKind::Asymptotic => "asymptotic",
        }
    }
}

/// Direction of the pass test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    /// Pass when `value ≤ tolerance`.
    AtMost,
    /// Pass when `value ≥ −tolerance`.
    AtLeast,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    NotApplicable,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::NotApplicable => "not-applicable",
        }
    }
}

impl CheckId {
    pub fn sense(self) -> Sense {
        match self {
            CheckId::WInfinityKappa | CheckId::HeatKernelBounds => Sense::AtMost,
            CheckId::NoncollapseEquiv | CheckId::NashMonotone => Sense::AtLeast,
            id if id.kind() == CheckKind::Identity => Sense::AtMost,
            _ => Sense::AtLeast,
        }
    }

    /// Statement checked, in the notation of this crate.
    pub fn anchor(self) -> &'static str {
        match self {
            CheckId::FirstDissipation => "dH/dt = I(u) = ∫Γ(u, log u) dμ for H = −∫u log u dμ along the heat flow",
            CheckId::SecondDissipation => {
                "d²H/dt² = −2∫[|∇²log u|² + (½∂_t g + Ric_∞)(∇log u, ∇log u)] u dμ"
            }
            CheckId::WDefinition => "W_{N,K}(u,t) = ∫[t|∇f|² + f − N(1 + Kt/2)²] u dμ equals d/dt(t·H_{N,K}(u,t))",
            CheckId::WDerivativeFormula => {
                "dW_N/dt = −2t∫[|∇²f − g/(2t)|² + (½∂_t g + Ric_{N})(∇f,∇f)] u dμ − (2t/(N−n))∫(∇φ·∇f + (N−n)/(2t))² u dμ"
            }
            CheckId::EntropyPowerIdentity => {
                "H″ + (2/N)H′² + 2KH′ = −2∫(½∂_t g + Ric_N − K)(∇log u,∇log u)u − (2(N−n)/N)∫(L log u + (N/(N−n))∇φ·∇log u)²u − (2/N)∫(L log u − ∫L log u·u)²u"
            }
            CheckId::HarnackEvolution => {
                "(∂_t − L)ν = u{−2t[|∇²f − g/(2t)|² + Ric_N(∇f,∇f)] − (2t/(N−n))(∇φ·∇f + (N−n)/(2t))² + t[∂_t g(∇f,∇f) + 2[∂_t, L]f]} with ν = [t(2Lf − |∇f|²) + f − N]u"
            }
            CheckId::WMonotone => "dW_{N,K}/dt ≤ −(2t/N)∫(L log u + (N/2)(1/t − K))² u dμ on (K,N) super Ricci flows with K ≥ 0",
            CheckId::RiccatiEdi => "H″ + (2/N)H′² + 2KH′ ≤ 0 on (K,N) super Ricci flows",
            CheckId::EntropyPowerConcave => "𝒩″ + 2K𝒩′ ≤ 0 for the entropy power 𝒩 = exp(2H/N)",
            CheckId::FisherBound => "I(u(t)) = dH/dt ≤ NK/(e^{2Kt} − 1), and ≤ N/(2t) when K = 0",
            CheckId::LogEntropyDecay => {
                "dY_a/dt ≤ −(1/(4ω))∫(L log u + 4ω)² u dμ + aNK/ω with ω = I/4 + a and Y_a = H + (N/2) log ω + (NK − 4a)t"
            }
            CheckId::DynamicBochner => "Γ₂(u) − ½∂_tΓ(u) ≥ KΓ(u) + (Lu)²/N pointwise",
            CheckId::GradientEstimate => {
                "e^{2Kt}|∇P_{t,s}u|² ≤ e^{2Ks}P_{t,s}|∇u|² − (2/N)∫_s^t e^{2Kr}(P_{t,r}L_r P_{r,s}u)² dr"
            }
            CheckId::W2Contraction => "W₂ at time s of the dual heat flows from t ≤ e^{−K(t−s)} W₂ at time t",
            CheckId::LiYau => "|∇u|²/u² − ∂_t u/u ≤ N/(2t) on CD(0,N) spaces",
            CheckId::HarnackNu => "ν = [t(2Lf − |∇f|²) + f − N]u ≤ 0 on CD(0,N) spaces",
            CheckId::HarnackPropagated => {
                "t ↦ max_x [P_{T,t}ν(t) − ∫ P_{T,s}(moving-metric term) ds] is non-increasing"
            }
            CheckId::NoncollapseEquiv => "μ(B(x,r)) ≥ C r^N for all sampled balls together with inf_τ W_N ≥ −A",
            CheckId::WInfinityKappa => "lim_{t→∞} W_N = log κ with κ = lim μ(B(x,r))/(ω_N r^N)",
            CheckId::HeatKernelBounds => {
                "C₁⁻¹e^{−C₂t}V(x,√t)⁻¹exp(−d²/((4−ε)t)) ≤ p_t(x,y) ≤ C₁e^{C₂t}V(x,√t)⁻¹exp(−d²/((4+ε)t))"
            }
            CheckId::NashMonotone => "the Nash entropy H − (N/2) log(4πet) is non-increasing",
            CheckId::PerelmanSoliton => "Perelman's W of the shrinking sphere is constant in τ",
            CheckId::MeasureInvariance => "the conjugate measure e^{−φ}dvol is constant in t",
            CheckId::SuperRicciDefect => "½∂_t g + Ric_N − K ≥ 0 along the family",
            CheckId::LogsobolevConstant => "W_{N,K}(u,t) ≥ μ_K(t) for the computed optimal constant",
            CheckId::EulerLagrange => "−4tLu − 2u log u − N(1 + Kt/2)²u = μ_K(t)u at the extremal",
            CheckId::MuMonotone => "t ↦ μ_K(t) is non-increasing on (K,N) super Ricci flows",
        }
    }

    /// The calibrated constant `c` in `tolerance = c·(h² + Δt²)·scale`, or the
    /// fixed tolerance for checks that are not discretization limited.
    pub fn coefficient(self) -> Tolerance {
        use Tolerance::*;
        match self {
            CheckId::FirstDissipation => Scaled(10.0),
            CheckId::SecondDissipation => Scaled(40.0),
            CheckId::WDefinition => Scaled(10.0),
            CheckId::WDerivativeFormula => Scaled(20.0),
            CheckId::EntropyPowerIdentity => Scaled(20.0),
            CheckId::HarnackEvolution => Scaled(50.0),
            CheckId::WMonotone => Scaled(10.0),
            CheckId::RiccatiEdi => Scaled(10.0),
            CheckId::EntropyPowerConcave => Scaled(10.0),
            CheckId::FisherBound => Scaled(2.0),
            CheckId::LogEntropyDecay => Scaled(10.0),
            CheckId::DynamicBochner => Scaled(20.0),
            CheckId::GradientEstimate => Scaled(10.0),
            CheckId::W2Contraction => Scaled(10.0),
            CheckId::LiYau => Scaled(50.0),
            CheckId::HarnackNu => Scaled(2.0),
            CheckId::HarnackPropagated => Scaled(10.0),
            CheckId::NoncollapseEquiv => Fixed(0.0),
            CheckId::WInfinityKappa => Fixed(5e-3),
            CheckId::HeatKernelBounds => Fixed(10.0),
            CheckId::NashMonotone => Scaled(2.0),
            CheckId::PerelmanSoliton => Fixed(1e-10),
            CheckId::MeasureInvariance => Fixed(1e-10),
            CheckId::SuperRicciDefect => Scaled(10.0),
            CheckId::LogsobolevConstant => Fixed(5e-3),
            CheckId::EulerLagrange => Fixed(1e-3),
            CheckId::MuMonotone => Fixed(1e-3),
        }
    }
}

/// Tolerance policy of a check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tolerance {
    Scaled(f64),
    Fixed(f64),
}

impl Tolerance {
    pub fn resolve<S: Real>(self, h: S, dt: S, scale: S) -> S {
        match self {
            Tolerance::Scaled(c) => S::lit(c) * (h * h + dt * dt) * scale.abs().max(S::one()),
            Tolerance::Fixed(v) => S::lit(v),
        }
    }
}

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult<S> {
    pub id: CheckId,
    pub kind: CheckKind,
    pub sense: Sense,
    /// Residual for identities, worst margin for inequalities.
    pub value: S,
    pub tolerance: S,
    pub status: Status,
    /// Observed refinement order, when two grid levels were run.
    pub order: Option<S>,
    pub anchor: &'static str,
    pub note: String,
    /// Named by-products (fitted constants, per-time values).
    pub details: Vec<(String, S)>,
}

impl<S: Real> CheckResult<S> {
    /// A result whose status follows from `value` and `tolerance`.
    pub fn measured(id: CheckId, value: S, tolerance: S) -> Self {
        let sense = id.sense();
        let pass = value.is_finite()
            && match sense {
                Sense::AtMost => value <= tolerance,
                Sense::AtLeast => value >= -tolerance,
            };
        Self {
            id,
            kind: id.kind(),
            sense,
            value,
            tolerance,
            status: if pass { Status::Pass } else { Status::Fail },
            order: None,
            anchor: id.anchor(),
            note: String::new(),
            details: Vec::new(),
        }
    }

    pub fn not_applicable(id: CheckId, note: String) -> Self {
        Self {
            id,
            kind: id.kind(),
            sense: id.sense(),
            value: S::nan(),
            tolerance: S::nan(),
            status: Status::NotApplicable,
            order: None,
            anchor: id.anchor(),
            note,
            details: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    /// Passed or not applicable.
    pub fn ok(&self) -> bool {
        self.status != Status::Fail
    }

    fn with_details(mut self, details: Vec<(String, S)>) -> Self {
        self.details = details;
        self
    }
}

/// `log₂(coarse/fine)` of two residuals from grids one halving apart.
pub fn refinement_order<S: Real>(coarse: S, fine: S) -> Option<S> {
    (coarse > S::zero() && fine > S::zero()).then(|| (coarse / fine).log2())
}

/// Parameters shared by all checks.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckParams<S> {
    /// Dimension bound for inequalities.
    pub n_dim: Dim<S>,
    /// Curvature bound for inequalities.
    pub k: S,
    /// Parameter `a` of the logarithmic entropy.
    pub a: S,
    /// Finite dimension used by identities whose terms need one; defaults
    /// to `n_dim` when that is finite.
    pub identity_dim: Option<S>,
    /// Time window of the sampled states.
    pub window: Option<(S, S)>,
    /// Maximum number of sampled times.
    pub samples: usize,
    /// `(s, t)` for the gradient estimate and the transport contraction.
    pub interval: Option<(S, S)>,
    /// Densities at time `t` for the transport contraction.
    pub transport_pair: Option<(Vec<S>, Vec<S>)>,
    /// `ε` of the heat-kernel envelope.
    pub epsilon: S,
    /// Kernel source node for the asymptotic checks (default: middle node).
    pub source: Option<usize>,
    /// Whether the trajectory is a heat kernel; `ν ≤ 0` is stated only for
    /// fundamental solutions.
    pub fundamental: bool,
    /// Time of the late W value and the upper end of the W scan.
    pub late_time: S,
    /// Time at which the log-Sobolev constant is computed.
    pub ls_time: S,
    /// Times of the `μ_K` monotonicity scan, in the order they are compared.
    pub ls_times: Vec<S>,
    pub ls_budget: Budget,
}

impl<S: Real> Default for CheckParams<S> {
    fn default() -> Self {
        Self {
            n_dim: Dim::Finite(S::one()),
            k: S::zero(),
            a: S::zero(),
            identity_dim: None,
            window: None,
            samples: 32,
            interval: None,
            transport_pair: None,
            epsilon: S::one(),
            source: None,
            fundamental: false,
            late_time: S::lit(4.0),
            ls_time: S::one(),
            ls_times: Vec::new(),
            ls_budget: Budget::default(),
        }
    }
}

impl<S: Real> CheckParams<S> {
    fn identity_n(&self) -> Option<S> {
        self.identity_dim.or(self.n_dim.finite())
    }

    fn identity_dim(&self) -> Dim<S> {
        self.identity_dim.map_or(self.n_dim, Dim::Finite)
    }
}

/// Runs any check on a family and, where needed, a trajectory on it.
pub fn run_check<S: Real>(
    id: CheckId,
    flow: &FlowFamily<S>,
    traj: Option<&Trajectory<S>>,
    params: &CheckParams<S>,
) -> Result<CheckResult<S>> {
    let need_traj = || traj.ok_or_else(|| Error::Input(format!("{id} needs a trajectory")));
    match id {
        CheckId::PerelmanSoliton => perelman_soliton(flow),
        CheckId::MeasureInvariance => measure_invariance(flow, traj, params),
        CheckId::SuperRicciDefect => super_ricci(flow, traj, params),
        CheckId::LogsobolevConstant | CheckId::EulerLagrange => logsobolev_check(id, flow, traj, params),
        CheckId::MuMonotone if params.ls_times.len() < 2 => {
            Ok(CheckResult::not_applicable(id, "needs at least two log-Sobolev times".into()))
        }
        CheckId::MuMonotone => logsobolev::mu_monotonicity(
            flow,
            params.n_dim.finite().unwrap_or(S::lit(2.0)),
            params.k,
            &params.ls_times,
            params.ls_budget,
        ),
        CheckId::NoncollapseEquiv | CheckId::WInfinityKappa | CheckId::HeatKernelBounds => check_asymptotic(id, flow, params),
        CheckId::NashMonotone => nash_monotone(need_traj()?, params),
        _ if id.kind() == CheckKind::Identity => check_identity(id, need_traj()?, params),
        _ => check_inequality(id, need_traj()?, params),
    }
}

/// Interior recorded indices inside the window, thinned to at most
/// `params.samples` evenly spread entries.
fn sample_indices<S: Real>(traj: &Trajectory<S>, params: &CheckParams<S>, t_floor: S) -> Result<Vec<usize>> {
    let (lo, hi) = params.window.unwrap_or((S::neg_infinity(), S::infinity()));
    let all: Vec<usize> = (1..traj.len().saturating_sub(1))
        .filter(|k| traj.times[*k] >= lo.max(t_floor) && traj.times[*k] <= hi)
        .collect();
    if all.is_empty() {
        return Err(Error::Data("no interior trajectory states inside the sampling window".into()));
    }
    let m = params.samples.max(2);
    if all.len() <= m {
        return Ok(all);
    }
    let mut out: Vec<usize> = (0..m).map(|j| all[j * (all.len() - 1) / (m - 1)]).collect();
    out.dedup();
    Ok(out)
}

/// Arclength grid spacing `h·√max a` at time `t`.
fn arclength_h<S: Real>(geom: &WeightedGeometry<S>) -> S {
    let amax = geom.metric().iter().fold(S::zero(), |a, b| a.max(*b));
    geom.h() * amax.sqrt()
}

struct Levels<S> {
    h: S,
    dt: S,
}

fn levels<S: Real>(traj: &Trajectory<S>) -> Result<Levels<S>> {
    Ok(Levels { h: arclength_h(&traj.geometry(0)?), dt: traj.dt })
}

fn finish<S: Real>(id: CheckId, value: S, lv: &Levels<S>, scale: S) -> CheckResult<S> {
    CheckResult::measured(id, value, id.coefficient().resolve(lv.h, lv.dt, scale))
}

fn entropy_at<S: Real>(traj: &Trajectory<S>, j: usize) -> Result<S> {
    Ok(boltzmann_entropy(&traj.state(j), &traj.geometry(j)?))
}

fn require_kind(id: CheckId, kind: CheckKind) -> Result<()> {
    if id.kind() != kind {
        return Err(Error::Input(format!("{id} is an {} check", id.kind().as_str())));
    }
    Ok(())
}

/// Weighted sum `Σ μ_i u_i x_i` over the checked nodes.
fn masked_integral<S: Real>(geom: &WeightedGeometry<S>, u: &[S], x: &[S]) -> S {
    let mask = checked_nodes(geom, u);
    (0..u.len()).filter(|i| mask[*i]).map(|i| geom.measure()[i] * u[i] * x[i]).sum()
}

/// Arclength first derivative, unit Hessian and chart `L` of `log u`.
struct LogDerivatives<S> {
    gs: Vec<S>,
    gss: Vec<S>,
    lg: Vec<S>,
    vs: Vec<S>,
}

fn log_derivatives<S: Real>(geom: &WeightedGeometry<S>, state: &HeatState<S>) -> LogDerivatives<S> {
    let g = state.log_u();
    let gs: Vec<S> = chart_d1(geom, &g).iter().zip(geom.metric()).map(|(d, a)| *d / a.sqrt()).collect();
    let gss = hessian_field(geom, &g);
    let vs = potential_slope(geom);
    let lg = (0..g.len()).map(|i| gss[i] - vs[i] * gs[i]).collect();
    LogDerivatives { gs, gss, lg, vs }
}

/// Evaluates an identity along a trajectory.
pub fn check_identity<S: Real>(id: CheckId, traj: &Trajectory<S>, params: &CheckParams<S>) -> Result<CheckResult<S>> {
    require_kind(id, CheckKind::Identity)?;
    let lv = levels(traj)?;
    let flow = &traj.flow;
    if !flow.is_conjugate() {
        return Ok(CheckResult::not_applicable(id, format!("{} is not a conjugate family", flow.label())));
    }
    let idx = sample_indices(traj, params, S::zero())?;
    let mut worst = S::zero();
    let mut scale = S::zero();
    match id {
        CheckId::FirstDissipation => {
            for &k in &idx {
                let lhs = (entropy_at(traj, k + 1)? - entropy_at(traj, k - 1)?) / (traj.times[k + 1] - traj.times[k - 1]);
                let rhs = fisher_information(&traj.state(k), &traj.geometry(k)?);
                worst = worst.max((lhs - rhs).abs());
                scale = scale.max(rhs.abs());
            }
        }
        CheckId::SecondDissipation => {
            for &k in &idx {
                let dt = traj.times[k + 1] - traj.times[k];
                let lhs = (entropy_at(traj, k + 1)? - S::lit(2.0) * entropy_at(traj, k)? + entropy_at(traj, k - 1)?) / (dt * dt);
                let geom = traj.geometry(k)?;
                let state = traj.state(k);
                let d = log_derivatives(&geom, &state);
                let ric = unit_ricci(&geom, Dim::Infinite)?;
                let rate = flow.metric_rate(state.t)?;
                let density: Vec<S> = (0..d.gs.len())
                    .map(|i| {
                        let stretch = rate[i] / (S::lit(2.0) * geom.metric()[i]);
                        d.gss[i] * d.gss[i] + (stretch + ric[i]) * d.gs[i] * d.gs[i]
                    })
                    .collect();
                let rhs = -S::lit(2.0) * masked_integral(&geom, &state.u, &density);
                worst = worst.max((lhs - rhs).abs());
                scale = scale.max(rhs.abs());
            }
        }
        CheckId::WDefinition => {
            let Some(n) = params.identity_n() else {
                return Ok(needs_finite(id));
            };
            let series = w_via_derivative(traj, n, params.k)?;
            for &k in &idx {
                let direct = w_nk_direct(&traj.state(k), &traj.geometry(k)?, n, params.k);
                let (_, via) = series[k - 1];
                worst = worst.max((direct - via).abs());
                scale = scale.max(direct.abs());
            }
        }
        CheckId::WDerivativeFormula => {
            let Some(n) = params.identity_n() else {
                return Ok(needs_finite(id));
            };
            for &k in &idx {
                let w = |j: usize| -> Result<S> { Ok(w_nk_direct(&traj.state(j), &traj.geometry(j)?, n, S::zero())) };
                let lhs = (w(k + 1)? - w(k - 1)?) / (traj.times[k + 1] - traj.times[k - 1]);
                let state = traj.state(k);
                let geom = traj.geometry(k)?;
                let density = w_rate_density(&state, flow, n)?;
                let ones = vec![S::one(); density.len()];
                let rhs = masked_integral(&geom, &ones, &density);
                worst = worst.max((lhs - rhs).abs());
                scale = scale.max(rhs.abs());
            }
        }
        CheckId::EntropyPowerIdentity => {
            let n = params.identity_dim();
            for &k in &idx {
                let state = traj.state(k);
                let geom = traj.geometry(k)?;
                let (lhs, rhs) = entropy_power_sides(&state, &geom, flow, n, params.k)?;
                worst = worst.max((lhs - rhs).abs());
                scale = scale.max(rhs.abs());
            }
        }
        CheckId::HarnackEvolution => {
            let Some(n) = params.identity_n() else {
                return Ok(needs_finite(id));
            };
            for &k in &idx {
                let r = evolution_residual(traj, n, k)?;
                let geom = traj.geometry(k)?;
                let mask = checked_nodes(&geom, &traj.states[k]);
                let size: S = (0..r.rhs.len()).filter(|i| mask[*i]).map(|i| geom.measure()[i] * r.rhs[i].abs()).sum();
                worst = worst.max(r.l1);
                scale = scale.max(size);
            }
        }
        _ => unreachable!("identity ids are matched above"),
    }
    Ok(finish(id, worst, &lv, scale))
}

fn needs_finite<S: Real>(id: CheckId) -> CheckResult<S> {
    CheckResult::not_applicable(id, "needs a finite dimension; set identity_dim".into())
}

/// Both sides of the entropy-power identity at one state.
fn entropy_power_sides<S: Real>(
    state: &HeatState<S>,
    geom: &WeightedGeometry<S>,
    flow: &FlowFamily<S>,
    n: Dim<S>,
    k: S,
) -> Result<(S, S)> {
    let two = S::lit(2.0);
    let i = fisher_information(state, geom);
    let di = fisher_rate(state, flow)?;
    let ric = unit_ricci(geom, n)?;
    let rate = flow.metric_rate(state.t)?;
    let d = log_derivatives(geom, state);
    let len = d.gs.len();
    let curvature: Vec<S> = (0..len)
        .map(|j| (rate[j] / (two * geom.metric()[j]) + ric[j] - k) * d.gs[j] * d.gs[j])
        .collect();
    let mut rhs = -two * masked_integral(geom, &state.u, &curvature);
    let mut lhs = di + two * k * i;
    match n {
        Dim::Infinite => {
            let sq: Vec<S> = (0..len).map(|j| (d.lg[j] + d.vs[j] * d.gs[j]).powi(2)).collect();
            rhs -= two * masked_integral(geom, &state.u, &sq);
        }
        Dim::Finite(nn) => {
            lhs += two / nn * i * i;
            let ones = vec![S::one(); len];
            let mass = masked_integral(geom, &state.u, &ones);
            let mean = masked_integral(geom, &state.u, &d.lg) / mass;
            let var: Vec<S> = d.lg.iter().map(|x| (*x - mean).powi(2)).collect();
            rhs -= two / nn * masked_integral(geom, &state.u, &var);
            if nn > S::one() {
                let excess = nn - S::one();
                let sq: Vec<S> = (0..len).map(|j| (d.lg[j] + nn / excess * d.vs[j] * d.gs[j]).powi(2)).collect();
                rhs -= two * excess / nn * masked_integral(geom, &state.u, &sq);
            } else if !potential_is_constant(geom) {
                return Err(Error::Convention("N = n with a non-constant potential divides by N − n".into()));
            }
        }
    }
    Ok((lhs, rhs))
}

/// Reason string when the declared class does not imply `(k, n)`.
fn class_gate<S: Real>(flow: &FlowFamily<S>, k: S, n: Dim<S>) -> Option<String> {
    let c = flow.class();
    (!c.implies(k, n)).then(|| format!("requires ({k}, {n}); {} is declared ({}, {})", flow.label(), c.k, c.n_dim))
}

/// Evaluates an inequality along a trajectory.
pub fn check_inequality<S: Real>(id: CheckId, traj: &Trajectory<S>, params: &CheckParams<S>) -> Result<CheckResult<S>> {
    require_kind(id, CheckKind::Inequality)?;
    let flow = &traj.flow;
    let lv = levels(traj)?;
    let (k, n) = (params.k, params.n_dim);
    let two = S::lit(2.0);
    let four = S::lit(4.0);
    let finite_n = n.finite();
    let gate = |k_req: S, n_req: Dim<S>| class_gate(flow, k_req, n_req);
    let static_only = |id: CheckId| -> Option<CheckResult<S>> {
        (!flow.is_static()).then(|| CheckResult::not_applicable(id, format!("{} is time dependent; stated for static spaces", flow.label())))
    };
    let na = |msg: String| Ok(CheckResult::not_applicable(id, msg));
    let mut worst = S::infinity();
    let mut scale = S::zero();
    match id {
        CheckId::WMonotone => {
            let Some(nn) = finite_n else { return na("needs finite N".into()) };
            if k < S::zero() {
                return na(format!("stated for K >= 0, got K = {k}"));
            }
            if let Some(msg) = gate(k, n) {
                return na(msg);
            }
            for &j in &sample_indices(traj, params, S::zero())? {
                let w = |m: usize| -> Result<S> { Ok(w_nk_direct(&traj.state(m), &traj.geometry(m)?, nn, k)) };
                let dw = (w(j + 1)? - w(j - 1)?) / (traj.times[j + 1] - traj.times[j - 1]);
                let state = traj.state(j);
                let geom = traj.geometry(j)?;
                let lg = build_operators(&geom).apply_l(&state.log_u());
                let t = state.t;
                let c = nn / two * (S::one() / t - k);
                let sq: Vec<S> = lg.iter().map(|x| (*x + c).powi(2)).collect();
                let rhs = two * t / nn * masked_integral(&geom, &state.u, &sq);
                worst = worst.min(-dw - rhs);
                scale = scale.max(dw.abs()).max(rhs);
            }
        }
        CheckId::RiccatiEdi => {
            if let Some(msg) = gate(k, n) {
                return na(msg);
            }
            for &j in &sample_indices(traj, params, S::zero())? {
                let state = traj.state(j);
                let geom = traj.geometry(j)?;
                let i = fisher_information(&state, &geom);
                let di = fisher_rate(&state, flow)?;
                let quad = finite_n.map_or(S::zero(), |nn| two / nn * i * i);
                worst = worst.min(-(di + quad + two * k * i));
                scale = scale.max(di.abs());
            }
        }
        CheckId::EntropyPowerConcave => {
            let Some(nn) = finite_n else { return na("needs finite N".into()) };
            if let Some(msg) = gate(k, n) {
                return na(msg);
            }
            for &j in &sample_indices(traj, params, S::zero())? {
                let p = |m: usize| -> Result<S> { Ok((two * entropy_at(traj, m)? / nn).exp()) };
                let (a, b, c) = (p(j - 1)?, p(j)?, p(j + 1)?);
                let dt = traj.times[j + 1] - traj.times[j];
                let second = (c - two * b + a) / (dt * dt);
                let first = (c - a) / (two * dt);
                worst = worst.min(-(second + two * k * first));
                scale = scale.max(first.abs());
            }
        }
        CheckId::FisherBound => {
            let Some(nn) = finite_n else { return na("needs finite N".into()) };
            if let Some(msg) = gate(k, n) {
                return na(msg);
            }
            for &j in &sample_indices(traj, params, S::zero())? {
                let state = traj.state(j);
                let i = fisher_information(&state, &traj.geometry(j)?);
                let t = state.t;
                let bound = if k == S::zero() { nn / (two * t) } else { nn * k / ((two * k * t).exp() - S::one()) };
                worst = worst.min(bound - i);
                scale = scale.max(bound);
            }
        }
        CheckId::LogEntropyDecay => {
            let Some(nn) = finite_n else { return na("needs finite N".into()) };
            if let Some(msg) = gate(k, n) {
                return na(msg);
            }
            let a = params.a;
            for &j in &sample_indices(traj, params, S::zero())? {
                let state = traj.state(j);
                let geom = traj.geometry(j)?;
                let i = fisher_information(&state, &geom);
                let omega = i / four + a;
                if !(omega > S::zero()) {
                    return Err(Error::Domain(format!("I/4 + a = {omega} must be positive at t = {}", state.t)));
                }
                let di = fisher_rate(&state, flow)?;
                let dy = i + nn / S::lit(8.0) * di / omega + nn * k - four * a;
                let lg = build_operators(&geom).apply_l(&state.log_u());
                let sq: Vec<S> = lg.iter().map(|x| (*x + four * omega).powi(2)).collect();
                let rhs = -masked_integral(&geom, &state.u, &sq) / (four * omega) + a * nn * k / omega;
                worst = worst.min(rhs - dy);
                scale = scale.max(dy.abs());
            }
        }
        CheckId::DynamicBochner => {
            if let Some(msg) = gate(k, n) {
                return na(msg);
            }
            for &j in &sample_indices(traj, params, S::zero())? {
                let state = traj.state(j);
                worst = worst.min(bochner_margin(flow, &state, n, k)?);
            }
            scale = S::one();
        }
        CheckId::GradientEstimate => {
            if let Some(msg) = gate(k, n) {
                return na(msg);
            }
            let (s, t) = interval(traj, params);
            let u = traj.states[traj.index_of(s)].clone();
            let field = gradient_margin(flow, &u, s, t, traj.dt, n, k)?;
            let geom = flow.geometry_at(t)?;
            let mask = geom.grid().interior_mask(S::lit(3.0) * geom.h());
            worst = masked_min(&field.margin, &mask);
            scale = field.scale;
        }
        CheckId::W2Contraction => {
            if let Some(msg) = gate(k, S::infinity().into_dim()) {
                return na(msg);
            }
            let (s, t) = interval(traj, params);
            let geom_t = flow.geometry_at(t)?;
            let (ra, rb) = match &params.transport_pair {
                Some(p) => p.clone(),
                None => default_pair(&geom_t),
            };
            let before = wasserstein2(&geom_t, &ra, &rb)?;
            let pa = propagate_adjoint(flow, &ra, s, t, traj.dt)?;
            let pb = propagate_adjoint(flow, &rb, s, t, traj.dt)?;
            let geom_s = flow.geometry_at(s)?;
            let after = wasserstein2(&geom_s, &pa, &pb)?;
            worst = ((-k * (t - s)).exp() * before - after) / before;
            scale = S::one();
            let res = finish(id, worst, &lv, scale);
            return Ok(res.with_details(vec![("w2_before".into(), before), ("w2_after".into(), after)]));
        }
        CheckId::LiYau | CheckId::HarnackNu => {
            if let Some(r) = static_only(id) {
                return Ok(r);
            }
            if id == CheckId::HarnackNu && !params.fundamental {
                return na("stated for heat kernels; the trajectory starts from other data".into());
            }
            let Some(nn) = finite_n else { return na("needs finite N".into()) };
            if let Some(msg) = gate(S::zero(), n) {
                return na(msg);
            }
            let t_floor = S::lit(4.0) * kernel_resolution(&traj.geometry(0)?);
            for &j in &sample_indices(traj, params, t_floor)? {
                if id == CheckId::LiYau {
                    let r = liyau_residual(traj, j, nn)?;
                    worst = worst.min(r.iter().copied().fold(S::infinity(), S::min));
                    scale = scale.max(nn / (two * traj.times[j]));
                } else {
                    let geom = traj.geometry(j)?;
                    let nu = harnack_field(&traj.state(j), &geom, nn, S::zero())?.nu;
                    let mask = checked_nodes(&geom, &traj.states[j]);
                    let top = nu.iter().zip(&mask).filter(|(_, m)| **m).fold(S::neg_infinity(), |a, (v, _)| a.max(*v));
                    worst = worst.min(-top);
                    scale = S::one();
                }
            }
        }
        CheckId::HarnackPropagated => {
            let Some(nn) = finite_n else { return na("needs finite N".into()) };
            if let Some(msg) = gate(S::zero(), n) {
                return na(msg);
            }
            let idx = sample_indices(traj, &CheckParams { samples: 20, ..params.clone() }, S::zero())?;
            let q = propagated_monotonicity(traj, nn, S::zero(), &idx)?;
            let rise = q.windows(2).map(|w| w[1].1 - w[0].1).fold(S::neg_infinity(), S::max);
            worst = -rise;
            scale = q.iter().map(|p| p.1.abs()).fold(S::zero(), S::max);
        }
        CheckId::SuperRicciDefect | CheckId::LogsobolevConstant | CheckId::MuMonotone => {
            return run_check(id, flow, Some(traj), params);
        }
        _ => unreachable!("inequality ids are matched above"),
    }
    Ok(finish(id, worst, &lv, scale))
}

trait IntoDim<S> {
    fn into_dim(self) -> Dim<S>;
}

impl<S: Real> IntoDim<S> for S {
    fn into_dim(self) -> Dim<S> {
        if self.is_infinite() {
            Dim::Infinite
        } else {
            Dim::Finite(self)
        }
    }
}

fn masked_min<S: Real>(x: &[S], mask: &[bool]) -> S {
    x.iter().zip(mask).filter(|(_, m)| **m).fold(S::infinity(), |a, (v, _)| a.min(*v))
}

/// `(s, t)` from the parameters, defaulting to the first recorded time and
/// one eighth of the recorded span after it.
fn interval<S: Real>(traj: &Trajectory<S>, params: &CheckParams<S>) -> (S, S) {
    params.interval.unwrap_or_else(|| {
        let t0 = traj.times[0];
        let t1 = *traj.times.last().expect("non-empty trajectory");
        (t0, traj.times[traj.index_of(t0 + (t1 - t0) / S::lit(8.0))])
    })
}

/// Two Gaussian bumps at one and two thirds of the chart, width 1/16 of it.
fn default_pair<S: Real>(geom: &WeightedGeometry<S>) -> (Vec<S>, Vec<S>) {
    let x = geom.arclength_nodes();
    let lo = x[0];
    let len = x[x.len() - 1] - lo;
    let sigma = len / S::lit(16.0);
    let bump = |c: S| -> Vec<S> {
        x.iter()
            .map(|p| {
                let d = (*p - c) / sigma;
                (-d * d / S::lit(2.0)).exp()
            })
            .collect()
    };
    (bump(lo + len / S::lit(3.0)), bump(lo + S::lit(2.0) * len / S::lit(3.0)))
}

/// `min_x [Γ₂(u) − ½∂_tΓ(u) − KΓ(u) − (Lu)²/N] / max_x [|Γ₂(u)| + KΓ(u)... ]`,
/// normalized by the largest of `|Γ₂(u)|` and `(Lu)²` over the checked nodes.
fn bochner_margin<S: Real>(flow: &FlowFamily<S>, state: &HeatState<S>, n: Dim<S>, k: S) -> Result<S> {
    let geom = flow.geometry_at(state.t)?;
    let ops = build_operators(&geom);
    let u = &state.u;
    let g2 = ops.gamma2(u);
    let g = ops.gamma(u, u);
    let lu = ops.apply_l(u);
    let dg = gamma_rate(flow, &geom, u, state.t)?;
    let inv_n = n.recip();
    let mask = checked_nodes(&geom, u);
    let mut norm = S::zero();
    let mut lowest = S::infinity();
    for i in 0..u.len() {
        if !mask[i] {
            continue;
        }
        norm = norm.max(g2[i].abs()).max(lu[i] * lu[i]);
        lowest = lowest.min(g2[i] - dg[i] / S::lit(2.0) - k * g[i] - inv_n * lu[i] * lu[i]);
    }
    Ok(if norm > S::zero() { lowest / norm } else { lowest })
}

/// `∂_tΓ_t(u,u)` at fixed `u` from the conductance and measure rates.
fn gamma_rate<S: Real>(flow: &FlowFamily<S>, geom: &WeightedGeometry<S>, u: &[S], t: S) -> Result<Vec<S>> {
    if flow.is_static() {
        return Ok(vec![S::zero(); u.len()]);
    }
    let (c_rate, m_rate) = flow.operator_rates(t)?;
    let grid = geom.grid();
    let mu = geom.measure();
    let mut acc = vec![S::zero(); u.len()];
    for e in 0..grid.num_edges() {
        let (i, j) = grid.edge(e);
        let d = u[j] - u[i];
        acc[i] += c_rate[e] * d * d;
        acc[j] += c_rate[e] * d * d;
    }
    let gamma = build_operators(geom).gamma(u, u);
    Ok((0..u.len()).map(|i| acc[i] / (S::lit(2.0) * mu[i]) - m_rate[i] / mu[i] * gamma[i]).collect())
}

/// Pointwise margin of the gradient estimate and the magnitude of its
/// right-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientMargin<S> {
    pub margin: Vec<S>,
    pub scale: S,
}

fn time_steps<S: Real>(s: S, t: S, dt: S) -> Result<(usize, S)> {
    if !(t > s) || !(dt > S::zero()) {
        return Err(Error::Input(format!("gradient estimate needs s < t and dt > 0, got ({s}, {t}, {dt})")));
    }
    let m = ((t - s) / dt).round().to_usize().unwrap_or(1).max(1);
    Ok((m, (t - s) / S::of(m)))
}

/// Gradient estimate margin field
/// `e^{2Ks}P_{t,s}Γ_s(u) − (2/N)∫e^{2Kr}(P_{t,r}L_rP_{r,s}u)²dr − e^{2Kt}Γ_t(P_{t,s}u)`
/// with the `r` integral by the trapezoid rule on the solver's time grid.
pub fn gradient_margin<S: Real>(flow: &FlowFamily<S>, u: &[S], s: S, t: S, dt: S, n: Dim<S>, k: S) -> Result<GradientMargin<S>> {
    let (m, step) = time_steps(s, t, dt)?;
    let flow_arc = std::sync::Arc::new(flow.clone());
    let mut stepper = Stepper::new(flow_arc);
    let mut v = u.to_vec();
    let mut integral = vec![S::zero(); u.len()];
    let inv_n = n.recip();
    let two = S::lit(2.0);
    for j in 0..=m {
        let r = s + step * S::of(j);
        if inv_n > S::zero() {
            let lv = build_operators(&flow.geometry_at(r)?).apply_l(&v);
            let w = propagate(flow, &lv, r, t, step)?;
            let weight = if j == 0 || j == m { step / two } else { step };
            let e = (two * k * r).exp();
            for i in 0..u.len() {
                integral[i] += weight * e * w[i] * w[i];
            }
        }
        if j < m {
            v = stepper.step(&v, r, step)?;
        }
    }
    let gs = flow.geometry_at(s)?;
    let gt = flow.geometry_at(t)?;
    let grad_u = build_operators(&gs).gamma(u, u);
    let p_grad = propagate(flow, &grad_u, s, t, step)?;
    let grad_pu = build_operators(&gt).gamma(&v, &v);
    finish_gradient(&p_grad, &integral, &grad_pu, s, t, k, inv_n)
}

fn finish_gradient<S: Real>(p_grad: &[S], integral: &[S], grad_pu: &[S], s: S, t: S, k: S, inv_n: S) -> Result<GradientMargin<S>> {
    let two = S::lit(2.0);
    let (es, et) = ((two * k * s).exp(), (two * k * t).exp());
    let mut scale = S::zero();
    let margin = (0..p_grad.len())
        .map(|i| {
            let rhs = es * p_grad[i] - two * inv_n * integral[i];
            scale = scale.max((es * p_grad[i]).abs());
            rhs - et * grad_pu[i]
        })
        .collect();
    Ok(GradientMargin { margin, scale })
}

/// [`gradient_margin`] evaluated with dense propagator matrices; agrees with
/// the vector path up to round-off and serves as its oracle.
pub fn gradient_margin_dense<S: Real>(flow: &FlowFamily<S>, u: &[S], s: S, t: S, dt: S, n: Dim<S>, k: S) -> Result<GradientMargin<S>> {
    let (m, step) = time_steps(s, t, dt)?;
    let len = u.len();
    let inv_n = n.recip();
    let two = S::lit(2.0);
    // tail[j] = P_{t, r_j}, built backwards from the one-step matrices.
    let mut tail = vec![Dense::identity(len); m + 1];
    for j in (0..m).rev() {
        let r = s + step * S::of(j);
        let one = propagator(flow, r, r + step, step)?;
        tail[j] = tail[j + 1].matmul(&one);
    }
    let mut integral = vec![S::zero(); len];
    if inv_n > S::zero() {
        let mut head = Dense::identity(len);
        for j in 0..=m {
            let r = s + step * S::of(j);
            let l = build_operators(&flow.geometry_at(r)?).to_dense();
            let w = tail[j].matmul(&l).matmul(&head).matvec(u);
            let weight = if j == 0 || j == m { step / two } else { step };
            let e = (two * k * r).exp();
            for i in 0..len {
                integral[i] += weight * e * w[i] * w[i];
            }
            if j < m {
                head = propagator(flow, r, r + step, step)?.matmul(&head);
            }
        }
    }
    let gs = flow.geometry_at(s)?;
    let gt = flow.geometry_at(t)?;
    let pu = tail[0].matvec(u);
    let p_grad = tail[0].matvec(&build_operators(&gs).gamma(u, u));
    let grad_pu = build_operators(&gt).gamma(&pu, &pu);
    finish_gradient(&p_grad, &integral, &grad_pu, s, t, k, inv_n)
}

fn nash_monotone<S: Real>(traj: &Trajectory<S>, params: &CheckParams<S>) -> Result<CheckResult<S>> {
    let id = CheckId::NashMonotone;
    let flow = &traj.flow;
    let Some(nn) = params.n_dim.finite() else {
        return Ok(CheckResult::not_applicable(id, "needs finite N".into()));
    };
    if let Some(msg) = class_gate(flow, S::zero(), params.n_dim) {
        return Ok(CheckResult::not_applicable(id, msg));
    }
    let lv = levels(traj)?;
    let mut worst = S::infinity();
    let mut scale = S::zero();
    for &j in &sample_indices(traj, params, S::zero())? {
        let nash = |m: usize| -> Result<S> { Ok(nash_entropy(entropy_at(traj, m)?, traj.times[m], nn)) };
        let rate = (nash(j + 1)? - nash(j - 1)?) / (traj.times[j + 1] - traj.times[j - 1]);
        worst = worst.min(-rate);
        scale = scale.max(nn / (S::lit(2.0) * traj.times[j]));
    }
    Ok(finish(id, worst, &lv, scale))
}

fn perelman_soliton<S: Real>(flow: &FlowFamily<S>) -> Result<CheckResult<S>> {
    let id = CheckId::PerelmanSoliton;
    let Some(n) = flow.shrinking_sphere_dim() else {
        return Ok(CheckResult::not_applicable(id, format!("{} is not the shrinking sphere", flow.label())));
    };
    let t_sing = S::one() / (S::lit(2.0) * S::of(n - 1));
    let horizon = flow.horizon().min(t_sing);
    let taus: Vec<S> = (0..10).map(|j| t_sing - horizon * S::lit(0.05 + 0.1 * j as f64)).collect();
    let values = taus.iter().map(|tau| perelman_w_sphere(flow, *tau)).collect::<Result<Vec<_>>>()?;
    let w0 = values[0].w;
    let spread = values.iter().map(|v| (v.w - w0).abs()).fold(S::zero(), S::max);
    let details = values.iter().map(|v| (format!("W(tau={})", v.tau), v.w)).collect();
    Ok(CheckResult::measured(id, spread, id.coefficient().resolve(S::zero(), S::zero(), S::zero())).with_details(details))
}

fn measure_invariance<S: Real>(flow: &FlowFamily<S>, traj: Option<&Trajectory<S>>, params: &CheckParams<S>) -> Result<CheckResult<S>> {
    let id = CheckId::MeasureInvariance;
    if !flow.is_conjugate() {
        return Ok(CheckResult::not_applicable(id, format!("{} is not a conjugate family", flow.label())));
    }
    let times = flow_times(flow, traj, params)?;
    let base = flow.geometry_at(times[0])?;
    let mut worst = S::zero();
    for t in &times {
        let g = flow.geometry_at(*t)?;
        for (a, b) in g.measure().iter().zip(base.measure()) {
            worst = worst.max(((*a - *b) / *b).abs());
        }
    }
    Ok(CheckResult::measured(id, worst, id.coefficient().resolve(S::zero(), S::zero(), S::zero())))
}

/// Times for family-level checks: the sampled trajectory times, or an even
/// grid over `[0, 0.9·horizon]`.
fn flow_times<S: Real>(flow: &FlowFamily<S>, traj: Option<&Trajectory<S>>, params: &CheckParams<S>) -> Result<Vec<S>> {
    if let Some(tr) = traj {
        let mut out = vec![tr.times[0]];
        out.extend(sample_indices(tr, params, S::zero())?.into_iter().map(|k| tr.times[k]));
        return Ok(out);
    }
    let end = if flow.horizon().is_finite() { S::lit(0.9) * flow.horizon() } else { S::one() };
    let m = params.samples.max(2);
    Ok((0..m).map(|j| end * S::of(j) / S::of(m - 1)).collect())
}

fn super_ricci<S: Real>(flow: &FlowFamily<S>, traj: Option<&Trajectory<S>>, params: &CheckParams<S>) -> Result<CheckResult<S>> {
    let id = CheckId::SuperRicciDefect;
    let times = flow_times(flow, traj, params)?;
    let geom = flow.geometry_at(times[0])?;
    let h = arclength_h(&geom);
    let mut worst = S::infinity();
    let mut details = Vec::new();
    for t in &times {
        let d = super_ricci_defect(flow, params.n_dim, params.k, *t)?;
        worst = worst.min(d.min);
        details.push((format!("defect(t={t})"), d.min));
    }
    Ok(CheckResult::measured(id, worst, id.coefficient().resolve(h, S::zero(), S::one())).with_details(details))
}

fn logsobolev_check<S: Real>(
    id: CheckId,
    flow: &FlowFamily<S>,
    traj: Option<&Trajectory<S>>,
    params: &CheckParams<S>,
) -> Result<CheckResult<S>> {
    let Some(nn) = params.n_dim.finite() else {
        return Ok(CheckResult::not_applicable(id, "needs finite N".into()));
    };
    let t = params.ls_time;
    // W of the heat-flow state at time t bounds μ_K(t) from above.
    let state = traj.map(|tr| (tr, tr.index_of(t))).filter(|(tr, j)| (tr.times[*j] - t).abs() <= tr.dt);
    if id == CheckId::LogsobolevConstant && state.is_none() {
        return Ok(CheckResult::not_applicable(id, format!("no trajectory state at the log-Sobolev time {t}")));
    }
    let geom = flow.geometry_at(t)?;
    let sol = logsobolev::optimal_constant_multistart(&geom, t, nn, params.k, params.ls_budget)?;
    let mut details = vec![
        ("mu".to_string(), sol.mu),
        ("spread".to_string(), sol.spread),
        ("constraint_residual".to_string(), sol.constraint_residual),
        ("iterations".to_string(), S::of(sol.iterations)),
    ];
    let tol = id.coefficient().resolve(S::zero(), S::zero(), S::zero());
    match state {
        Some((tr, j)) if id == CheckId::LogsobolevConstant => {
            let w = w_nk_direct(&tr.state(j), &tr.geometry(j)?, nn, params.k);
            details.push(("w_state".to_string(), w));
            Ok(CheckResult::measured(id, w - sol.mu, tol).with_details(details))
        }
        _ => {
            let r = logsobolev::euler_lagrange_residual(&sol, &geom)?;
            Ok(CheckResult::measured(id, r, tol).with_details(details))
        }
    }
}

/// Evaluates an asymptotic check on a static family.
pub fn check_asymptotic<S: Real>(id: CheckId, flow: &FlowFamily<S>, params: &CheckParams<S>) -> Result<CheckResult<S>> {
    require_kind(id, CheckKind::Asymptotic)?;
    let Some(geom) = flow.static_geometry() else {
        return Ok(CheckResult::not_applicable(id, format!("{} is time dependent", flow.label())));
    };
    let Some(nn) = params.n_dim.finite() else {
        return Ok(CheckResult::not_applicable(id, "needs finite N".into()));
    };
    let h = arclength_h(geom);
    let source = params.source.unwrap_or(geom.len() / 2);
    if source >= geom.len() {
        return Err(Error::Input(format!("source node {source} outside the grid")));
    }
    let centre = geom.arclength_nodes()[source];
    let length = geom.arclength_boundaries().last().copied().expect("boundaries") - geom.arclength_boundaries()[0];
    match id {
        CheckId::NoncollapseEquiv => {
            let (r_lo, r_hi) = (S::lit(8.0) * h, length / S::lit(4.0));
            if !(r_hi > r_lo) {
                return Err(Error::Data("radius range is not resolvable on this grid".into()));
            }
            let radii = log_grid(r_lo, r_hi, 24);
            let nodes = geom.arclength_nodes();
            let stride = (nodes.len() / 64).max(1);
            let mut c = S::infinity();
            for i in (0..nodes.len()).step_by(stride).chain(std::iter::once(source)) {
                for r in &radii {
                    c = c.min(geom.ball_measure(nodes[i], *r) / r.powf(nn));
                }
            }
            let tau_lo = (S::lit(16.0) * kernel_resolution(geom)).max(S::lit(0.1));
            let tau_hi = params.late_time.min(r_hi * r_hi);
            let taus = log_grid(tau_lo, tau_hi, 12);
            let w = kernel_scan(flow, source, &taus, h, nn)?;
            let inf_w = w.iter().copied().fold(S::infinity(), S::min);
            let a = (-inf_w).max(S::zero());
            let details = vec![("C".to_string(), c), ("A".to_string(), a), ("inf_W".to_string(), inf_w)];
            let value = if a.is_finite() { c } else { -S::infinity() };
            Ok(CheckResult::measured(id, value, S::zero()).with_details(details))
        }
        CheckId::WInfinityKappa => {
            let class = flow.class();
            let compact = geom.grid().is_periodic() || (class.k > S::zero() && class.n_dim.finite().is_some());
            if compact {
                return Ok(CheckResult::not_applicable(id, "κ vanishes on a compact space".into()));
            }
            let r = length / S::lit(4.0);
            let kappa = geom.ball_measure(centre, r) / (unit_ball_volume(nn) * r.powf(nn));
            let w = kernel_scan(flow, source, &[params.late_time], h, nn)?[0];
            let tol = id.coefficient().resolve(h, h, S::one());
            let details = vec![("kappa".to_string(), kappa), ("W_late".to_string(), w)];
            Ok(CheckResult::measured(id, (w - kappa.ln()).abs(), tol).with_details(details))
        }
        CheckId::HeatKernelBounds => heat_kernel_bounds(flow, geom, source, params),
        _ => unreachable!("asymptotic ids are matched above"),
    }
}

fn log_grid<S: Real>(lo: S, hi: S, m: usize) -> Vec<S> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..m).map(|j| (a + (b - a) * S::of(j) / S::of(m - 1)).exp()).collect()
}

/// Volume of the unit ball in dimension `n` (real `n` allowed).
pub fn unit_ball_volume<S: Real>(n: S) -> S {
    let x = n.to_f64().expect("finite dimension");
    S::lit(std::f64::consts::PI.powf(x / 2.0) / libm::tgamma(x / 2.0 + 1.0))
}

/// `W_N` of the kernel from `source` at each listed time.
fn kernel_scan<S: Real>(flow: &FlowFamily<S>, source: usize, times: &[S], h: S, nn: S) -> Result<Vec<S>> {
    let first = times[0];
    let last = *times.last().expect("times");
    let dt = h.min(first / S::lit(4.0));
    let traj = kernel_trajectory(flow, source, first, last.max(first), dt, 1)?;
    times
        .iter()
        .map(|t| {
            let j = traj.index_of(*t);
            Ok(w_nk_direct(&traj.state(j), &traj.geometry(j)?, nn, S::zero()))
        })
        .collect()
}

fn heat_kernel_bounds<S: Real>(flow: &FlowFamily<S>, geom: &WeightedGeometry<S>, source: usize, params: &CheckParams<S>) -> Result<CheckResult<S>> {
    let id = CheckId::HeatKernelBounds;
    let eps = params.epsilon;
    let four = S::lit(4.0);
    if !(eps > S::zero() && eps < four) {
        return Err(Error::Input(format!("envelope ε must lie in (0, 4), got {eps}")));
    }
    let h = arclength_h(geom);
    let t_lo = (S::lit(16.0) * kernel_resolution(geom)).max(S::lit(0.05));
    let t_hi = params.late_time.min(S::lit(2.0)).max(t_lo * S::lit(2.0));
    let times = log_grid(t_lo, t_hi, 8);
    let dt = h.min(t_lo / four);
    let traj = kernel_trajectory(flow, source, t_lo, t_hi, dt, 1)?;
    let centre = geom.arclength_nodes()[source];
    let mut samples = Vec::new();
    for t in &times {
        let j = traj.index_of(*t);
        let t = traj.times[j];
        let p = &traj.states[j];
        let vol = geom.ball_measure(centre, t.sqrt());
        let top = p.iter().copied().fold(S::zero(), S::max);
        for (y, py) in p.iter().enumerate() {
            if *py < S::lit(1e-10) * top {
                continue;
            }
            let d = geom.distance(source, y);
            let upper = *py * vol * (d * d / ((four + eps) * t)).exp();
            let lower = *py * vol * (d * d / ((four - eps) * t)).exp();
            samples.push((t, upper, lower));
        }
    }
    // C₁(C₂) = max(sup upper·e^{−C₂t}, sup e^{−C₂t}/lower), minimized over C₂ ≥ 0.
    let fit = |c2: S| {
        samples.iter().fold(S::zero(), |acc, (t, up, lo)| {
            let damp = (-c2 * *t).exp();
            acc.max(*up * damp).max(damp / *lo)
        })
    };
    let (mut best_c1, mut best_c2) = (fit(S::zero()), S::zero());
    for j in 1..=200 {
        let c2 = S::lit(0.02) * S::of(j);
        let c1 = fit(c2);
        if c1 < best_c1 {
            best_c1 = c1;
            best_c2 = c2;
        }
    }
    let tol = id.coefficient().resolve(S::zero(), S::zero(), S::zero());
    let details = vec![("C1".to_string(), best_c1), ("C2".to_string(), best_c2), ("C1_at_C2_zero".to_string(), fit(S::zero()))];
    Ok(CheckResult::measured(id, best_c1, tol).with_details(details))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_round_trip() {
        for id in CheckId::ALL {
            assert_eq!(id.as_str().parse::<CheckId>().unwrap(), *id);
            assert!(!id.anchor().is_empty());
        }
        assert!(matches!("NOPE".parse::<CheckId>(), Err(Error::UnknownCheck(_))));
    }

    #[test]
    fn status_follows_sense() {
        let r = CheckResult::measured(CheckId::FirstDissipation, 1e-5, 1e-4);
        assert!(r.passed());
        let r = CheckResult::measured(CheckId::FisherBound, -1e-3, 1e-4);
        assert_eq!(r.status, Status::Fail);
        let r = CheckResult::<f64>::measured(CheckId::FisherBound, f64::NAN, 1.0);
        assert_eq!(r.status, Status::Fail);
        let r = CheckResult::<f64>::not_applicable(CheckId::LiYau, "x".into());
        assert!(r.ok() && !r.passed());
    }

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume(1.0f64) - 2.0).abs() < 1e-14);
        assert!((unit_ball_volume(2.0f64) - std::f64::consts::PI).abs() < 1e-14);
        assert!((unit_ball_volume(3.0f64) - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-13);
    }
}
