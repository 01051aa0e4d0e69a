//! Time-indexed families of weighted geometries.
//!
//! Families are evaluated lazily from closed forms: `geometry_at(t)` rebuilds
//! the chart for each requested time, so no metric trajectory is ever stored
//! or interpolated (nodal tables of the `custom` kind excepted).

use std::sync::Arc;

use crate::error::{ensure_len, Error, Result};
use crate::linalg::GL5;
use crate::scalar::{Dim, Real};
use crate::space::{unit_ricci, Grid1D, WeightedGeometry};

/// Declared `(K, n, N)` class of a super Ricci flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowClass<S> {
    pub k: S,
    pub n: S,
    pub n_dim: Dim<S>,
}

impl<S: Real> FlowClass<S> {
    pub fn new(k: S, n_dim: Dim<S>) -> Self {
        Self { k, n: S::one(), n_dim }
    }

    /// Whether a statement proved for `(k, ·, n_dim)` flows applies here:
    /// lower curvature bounds weaken downwards and dimension bounds upwards.
    pub fn implies(&self, k: S, n_dim: Dim<S>) -> bool {
        k <= self.k + S::lit(1e-12) && n_dim.at_least(self.n_dim)
    }
}

/// Static model spaces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CanonicalKind<S> {
    /// Circle of chart length `length` with `φ = 0`.
    FlatCircle { length: S },
    /// Interval `[a, b]` with `φ = 0` and reflecting ends.
    FlatLine { a: S, b: S },
    /// Interval `[a, b]` with `φ = x²/2`.
    OuLine { a: S, b: S },
    /// `(0, radius]` with `φ = −(N−1) log x`.
    Cone { n_dim: S, radius: S },
    /// `(0, π)` with `φ = −(n−1) log sin θ` and reference dimension `n`.
    WeightedSphere { n: usize },
}

/// User-supplied nodal tables `a(x_i, t_k)`, `φ(x_i, t_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CustomTable<S> {
    pub grid: Grid1D<S>,
    pub times: Vec<S>,
    pub metric: Vec<Vec<S>>,
    pub potential: Vec<Vec<S>>,
    pub ref_dim: S,
    /// Optional `∂_t a` tables, validated against secant differences.
    pub metric_rate: Option<Vec<Vec<S>>>,
    /// Optional `∂_t φ` tables, validated against secant differences.
    pub potential_rate: Option<Vec<Vec<S>>>,
    pub class: FlowClass<S>,
}

#[derive(Debug, Clone)]
enum Kind<S> {
    Static(Arc<WeightedGeometry<S>>),
    ShrinkingSphere { n: usize, base: Arc<WeightedGeometry<S>> },
    Custom(Arc<CustomTable<S>>),
    Rescaled { inner: Arc<FlowFamily<S>>, k: S, c: S },
    Conjugated { inner: Arc<FlowFamily<S>>, phi0: Vec<S> },
    Reversed { inner: Arc<FlowFamily<S>> },
}

/// A family `(g_t, φ_t)_{t∈[0,T]}` on a fixed chart grid.
#[derive(Debug, Clone)]
pub struct FlowFamily<S> {
    kind: Kind<S>,
    grid: Grid1D<S>,
    horizon: S,
    class: FlowClass<S>,
    conjugate: bool,
    label: String,
}

/// Minimum over interior nodes of `½∂_t g + Ric_{N,n}(L_t) − K g` on the unit direction.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowDefect<S> {
    pub t: S,
    pub field: Vec<S>,
    pub min: S,
}

fn canonical_grid<S: Real>(kind: &CanonicalKind<S>, cells: usize) -> Result<Grid1D<S>> {
    match *kind {
        CanonicalKind::FlatCircle { length } => Grid1D::circle(length, cells),
        CanonicalKind::FlatLine { a, b } | CanonicalKind::OuLine { a, b } => Grid1D::interval(a, b, cells),
        CanonicalKind::Cone { radius, .. } => Grid1D::interval(S::zero(), radius, cells),
        CanonicalKind::WeightedSphere { .. } => Grid1D::interval(S::zero(), S::PI(), cells),
    }
}

/// Builds a static model family on `cells` grid nodes.
pub fn make_canonical<S: Real>(kind: CanonicalKind<S>, cells: usize) -> Result<FlowFamily<S>> {
    let grid = canonical_grid(&kind, cells)?;
    let one = S::one();
    let (geom, class, label) = match kind {
        CanonicalKind::FlatCircle { .. } => (
            WeightedGeometry::from_fn(grid.clone(), one, |_| (one, S::zero()))?,
            FlowClass::new(S::zero(), Dim::Finite(one)),
            "flat_circle".to_string(),
        ),
        CanonicalKind::FlatLine { .. } => (
            WeightedGeometry::from_fn(grid.clone(), one, |_| (one, S::zero()))?,
            FlowClass::new(S::zero(), Dim::Finite(one)),
            "flat_line".to_string(),
        ),
        CanonicalKind::OuLine { .. } => (
            WeightedGeometry::from_fn(grid.clone(), one, |x| (one, x * x / S::lit(2.0)))?,
            FlowClass::new(one, Dim::Infinite),
            "ou_line".to_string(),
        ),
        CanonicalKind::Cone { n_dim, radius } => {
            if !(n_dim > one) || !n_dim.is_finite() {
                return Err(Error::Config(format!("cone needs finite N > 1, got {n_dim}")));
            }
            if !(radius > S::zero()) {
                return Err(Error::Config("cone radius must be positive".into()));
            }
            (
                WeightedGeometry::from_fn(grid.clone(), one, move |x| (one, -(n_dim - one) * x.ln()))?,
                FlowClass::new(S::zero(), Dim::Finite(n_dim)),
                format!("cone({n_dim})"),
            )
        }
        CanonicalKind::WeightedSphere { n } => {
            if n < 2 {
                return Err(Error::Config(format!("weighted sphere needs n >= 2, got {n}")));
            }
            let nn = S::of(n);
            (
                sphere_chart(grid.clone(), n)?,
                FlowClass::new(nn - one, Dim::Finite(nn)),
                format!("weighted_sphere({n})"),
            )
        }
    };
    Ok(FlowFamily {
        kind: Kind::Static(Arc::new(geom)),
        grid,
        horizon: S::infinity(),
        class,
        conjugate: true,
        label,
    })
}

fn sphere_chart<S: Real>(grid: Grid1D<S>, n: usize) -> Result<WeightedGeometry<S>> {
    let nn = S::of(n);
    WeightedGeometry::from_fn(grid, nn, move |th| (S::one(), -(nn - S::one()) * th.sin().ln()))
}

/// Wraps an arbitrary static geometry with a declared class.
pub fn static_flow<S: Real>(geom: WeightedGeometry<S>, class: FlowClass<S>, label: &str) -> FlowFamily<S> {
    FlowFamily {
        grid: geom.grid().clone(),
        kind: Kind::Static(Arc::new(geom)),
        horizon: S::infinity(),
        class,
        conjugate: true,
        label: label.to_string(),
    }
}

/// The round `S^n` under Ricci flow, `a(t) = 1 − 2(n−1)t`, on the reduced
/// chart `(0, π)` with the conjugate potential `φ_t = φ_0 + (n/2) log a(t)`.
pub fn make_shrinking_sphere<S: Real>(n: usize, horizon_fraction: S, cells: usize) -> Result<FlowFamily<S>> {
    if n < 2 {
        return Err(Error::Config(format!("shrinking sphere needs n >= 2, got {n}")));
    }
    if horizon_fraction >= S::one() {
        return Err(Error::Domain("horizon reaches the finite-time singularity".into()));
    }
    if !(horizon_fraction > S::zero()) {
        return Err(Error::Config("horizon fraction must be positive".into()));
    }
    let grid = Grid1D::interval(S::zero(), S::PI(), cells)?;
    let base = Arc::new(sphere_chart(grid.clone(), n)?);
    let nn = S::of(n);
    Ok(FlowFamily {
        kind: Kind::ShrinkingSphere { n, base },
        grid,
        horizon: horizon_fraction / (S::lit(2.0) * (nn - S::one())),
        class: FlowClass::new(S::zero(), Dim::Finite(nn)),
        conjugate: true,
        label: format!("shrinking_sphere({n})"),
    })
}

/// Validates a custom table and wraps it as a family.
pub fn make_custom<S: Real>(table: CustomTable<S>, conjugate: bool) -> Result<FlowFamily<S>> {
    let m = table.times.len();
    if m < 2 {
        return Err(Error::Config("custom flow needs at least two time slices".into()));
    }
    if table.times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Config("custom flow times must increase".into()));
    }
    ensure_len(m, table.metric.len())?;
    ensure_len(m, table.potential.len())?;
    for k in 0..m {
        ensure_len(table.grid.len(), table.metric[k].len())?;
        ensure_len(table.grid.len(), table.potential[k].len())?;
        WeightedGeometry::from_nodal(table.grid.clone(), table.metric[k].clone(), table.potential[k].clone(), table.ref_dim)?;
    }
    for (name, rates, values) in [
        ("metric", &table.metric_rate, &table.metric),
        ("potential", &table.potential_rate, &table.potential),
    ] {
        if let Some(r) = rates {
            validate_rates(name, &table.times, values, r)?;
        }
    }
    let grid = table.grid.clone();
    let horizon = table.times[m - 1] - table.times[0];
    let class = table.class;
    let flow = FlowFamily {
        kind: Kind::Custom(Arc::new(table)),
        grid,
        horizon,
        class,
        conjugate: false,
        label: "custom".into(),
    };
    if conjugate {
        enforce_conjugate(&flow)
    } else {
        Ok(flow)
    }
}

/// User rates must match centred secants of the table to 1e-6 relative.
fn validate_rates<S: Real>(name: &str, times: &[S], values: &[Vec<S>], rates: &[Vec<S>]) -> Result<()> {
    ensure_len(times.len(), rates.len())?;
    for k in 1..times.len() - 1 {
        ensure_len(values[k].len(), rates[k].len())?;
        let dt = times[k + 1] - times[k - 1];
        for i in 0..values[k].len() {
            let secant = (values[k + 1][i] - values[k - 1][i]) / dt;
            let scale = secant.abs().max(rates[k][i].abs()).max(S::lit(1e-12));
            if (secant - rates[k][i]).abs() / scale > S::lit(1e-6) {
                return Err(Error::Config(format!(
                    "{name} rate at slice {k}, node {i} disagrees with the table secant ({} vs {})",
                    rates[k][i], secant
                )));
            }
        }
    }
    Ok(())
}

impl<S: Real> CustomTable<S> {
    fn locate(&self, t: S) -> Result<(usize, S)> {
        let t = t + self.times[0];
        let m = self.times.len();
        let slack = S::lit(1e-9) * (self.times[m - 1] - self.times[0]);
        if t < self.times[0] - slack || t > self.times[m - 1] + slack {
            return Err(Error::Domain(format!("time {t} outside the custom table")));
        }
        let k = self.times.windows(2).position(|w| t <= w[1]).unwrap_or(m - 2);
        let w = ((t - self.times[k]) / (self.times[k + 1] - self.times[k])).max(S::zero()).min(S::one());
        Ok((k, w))
    }

    fn interp(rows: &[Vec<S>], k: usize, w: S) -> Vec<S> {
        rows[k].iter().zip(&rows[k + 1]).map(|(a, b)| *a + (*b - *a) * w).collect()
    }

    fn rate(&self, rows: &[Vec<S>], given: &Option<Vec<Vec<S>>>, t: S) -> Result<Vec<S>> {
        let (k, w) = self.locate(t)?;
        Ok(match given {
            Some(r) => Self::interp(r, k, w),
            None => {
                let dt = self.times[k + 1] - self.times[k];
                rows[k].iter().zip(&rows[k + 1]).map(|(a, b)| (*b - *a) / dt).collect()
            }
        })
    }
}

/// Replaces `∂_tφ` by `½ Tr(∂_t g)` and re-derives `φ_t` by time quadrature, so
/// the weighted measure no longer depends on `t`.
pub fn enforce_conjugate<S: Real>(flow: &FlowFamily<S>) -> Result<FlowFamily<S>> {
    if flow.is_static() {
        let mut out = flow.clone();
        out.conjugate = true;
        return Ok(out);
    }
    let phi0 = flow.geometry_at(S::zero())?.potential().to_vec();
    Ok(FlowFamily {
        kind: Kind::Conjugated { inner: Arc::new(flow.clone()), phi0 },
        grid: flow.grid.clone(),
        horizon: flow.horizon,
        class: flow.class,
        conjugate: true,
        label: format!("conjugate({})", flow.label),
    })
}

/// `τ(t) = −log(C − 2Kt)/(2K)`, or `t/C` when `K = 0`.
pub fn rescaled_time<S: Real>(k: S, c: S, t: S) -> Result<S> {
    if k == S::zero() {
        return Ok(t / c);
    }
    let x = -S::lit(2.0) * k * t / c;
    if !(x > -S::one()) {
        return Err(Error::Domain(format!("2Kt >= C at t = {t}")));
    }
    Ok(-(c.ln() + x.ln_1p()) / (S::lit(2.0) * k))
}

/// Time rescaling turning a `(K, n, N)` super Ricci flow into a `(0, n, N)` one:
/// `ã(·, t) = e^{−2Kτ}a(·, τ)` with the weighted measure `m̃_t = m_τ`.
pub fn time_rescale<S: Real>(flow: &FlowFamily<S>, k: S, c: S) -> Result<FlowFamily<S>> {
    if !(c > S::zero()) {
        return Err(Error::Domain("rescaling constant C must be positive".into()));
    }
    rescaled_time(k, c, S::zero())?;
    // Largest t with τ(t) inside the inner horizon.
    let horizon = if flow.horizon.is_infinite() {
        if k > S::zero() {
            c / (S::lit(2.0) * k) * (S::one() - S::lit(1e-9))
        } else {
            S::infinity()
        }
    } else if k == S::zero() {
        flow.horizon * c
    } else {
        (c - (-S::lit(2.0) * k * flow.horizon).exp()) / (S::lit(2.0) * k)
    };
    Ok(FlowFamily {
        kind: Kind::Rescaled { inner: Arc::new(flow.clone()), k, c },
        grid: flow.grid.clone(),
        horizon,
        class: FlowClass { k: flow.class.k - k, ..flow.class },
        conjugate: flow.conjugate,
        label: format!("rescaled({},K={k},C={c})", flow.label),
    })
}

/// Runs the family backwards: `t ↦ T − t`. Used for the backward-time (τ)
/// convention and as a deliberately mis-oriented control.
pub fn reverse_time<S: Real>(flow: &FlowFamily<S>) -> Result<FlowFamily<S>> {
    if flow.horizon.is_infinite() {
        return Err(Error::Domain("cannot reverse a family without a finite horizon".into()));
    }
    Ok(FlowFamily {
        kind: Kind::Reversed { inner: Arc::new(flow.clone()) },
        grid: flow.grid.clone(),
        horizon: flow.horizon,
        class: flow.class,
        conjugate: flow.conjugate,
        label: format!("reversed({})", flow.label),
    })
}

impl<S: Real> FlowFamily<S> {
    pub fn grid(&self) -> &Grid1D<S> {
        &self.grid
    }

    pub fn horizon(&self) -> S {
        self.horizon
    }

    pub fn class(&self) -> FlowClass<S> {
        self.class
    }

    pub fn is_conjugate(&self) -> bool {
        self.conjugate
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_static(&self) -> bool {
        match &self.kind {
            Kind::Static(_) => true,
            Kind::Rescaled { inner, k, .. } => inner.is_static() && *k == S::zero(),
            Kind::Conjugated { inner, .. } | Kind::Reversed { inner } => inner.is_static(),
            _ => false,
        }
    }

    /// Dimension `n` when the family is the closed-form shrinking sphere.
    pub fn shrinking_sphere_dim(&self) -> Option<usize> {
        match &self.kind {
            Kind::ShrinkingSphere { n, .. } => Some(*n),
            Kind::Conjugated { inner, .. } => inner.shrinking_sphere_dim(),
            _ => None,
        }
    }

    /// The fixed geometry of a static family.
    pub fn static_geometry(&self) -> Option<&WeightedGeometry<S>> {
        match &self.kind {
            Kind::Static(g) => Some(g),
            _ => None,
        }
    }

    /// Sets a finite horizon on a static family.
    pub fn with_horizon(mut self, horizon: S) -> Self {
        self.horizon = horizon;
        self
    }

    /// Overrides the declared class.
    pub fn with_class(mut self, class: FlowClass<S>) -> Self {
        self.class = class;
        self
    }

    pub fn geometry_at(&self, t: S) -> Result<WeightedGeometry<S>> {
        match &self.kind {
            Kind::Static(g) => Ok((**g).clone()),
            Kind::ShrinkingSphere { n, base } => base.with_metric_scale(sphere_factor(*n, t)?),
            Kind::Custom(table) => {
                let (k, w) = table.locate(t)?;
                WeightedGeometry::from_nodal(
                    table.grid.clone(),
                    CustomTable::interp(&table.metric, k, w),
                    CustomTable::interp(&table.potential, k, w),
                    table.ref_dim,
                )
            }
            Kind::Rescaled { inner, k, c } => {
                let tau = rescaled_time(*k, *c, t)?;
                inner.geometry_at(tau)?.with_metric_scale((-S::lit(2.0) * *k * tau).exp())
            }
            Kind::Conjugated { inner, phi0 } => {
                let g = inner.geometry_at(t)?;
                let phi = self.integrated_potential(inner, phi0, t)?;
                g.with_potential(phi)
            }
            Kind::Reversed { inner } => inner.geometry_at(self.horizon - t),
        }
    }

    fn integrated_potential(&self, inner: &FlowFamily<S>, phi0: &[S], t: S) -> Result<Vec<S>> {
        if t == S::zero() {
            return Ok(phi0.to_vec());
        }
        let n = phi0.len();
        let panels = 16;
        let w = t / S::of(panels);
        let mut phi = phi0.to_vec();
        // Composite Gauss-Legendre over shared samples of the trace rate.
        for p in 0..panels {
            let mid = w * (S::of(p) + S::lit(0.5));
            for &(x, wt) in &GL5 {
                let s = mid + w / S::lit(2.0) * S::lit(x);
                let tr = inner.trace_rate(s)?;
                for i in 0..n {
                    phi[i] += S::lit(wt) * w / S::lit(2.0) * tr[i] / S::lit(2.0);
                }
            }
        }
        Ok(phi)
    }

    /// `∂_t a` at nodes.
    pub fn metric_rate(&self, t: S) -> Result<Vec<S>> {
        let n = self.grid.len();
        match &self.kind {
            Kind::Static(_) => Ok(vec![S::zero(); n]),
            Kind::ShrinkingSphere { n: dim, .. } => {
                sphere_factor(*dim, t)?;
                Ok(vec![-S::lit(2.0) * (S::of(*dim) - S::one()); n])
            }
            Kind::Custom(table) => table.rate(&table.metric, &table.metric_rate, t),
            Kind::Rescaled { inner, k, c } => {
                let tau = rescaled_time(*k, *c, t)?;
                let a = inner.geometry_at(tau)?.metric().to_vec();
                let rate = inner.metric_rate(tau)?;
                if *k == S::zero() {
                    return Ok(rate.iter().map(|r| *r / *c).collect());
                }
                Ok(a.iter().zip(&rate).map(|(a, r)| -S::lit(2.0) * *k * *a + *r).collect())
            }
            Kind::Conjugated { inner, .. } => inner.metric_rate(t),
            Kind::Reversed { inner } => Ok(inner.metric_rate(self.horizon - t)?.iter().map(|r| -*r).collect()),
        }
    }

    /// `∂_t φ` at nodes.
    pub fn potential_rate(&self, t: S) -> Result<Vec<S>> {
        let n = self.grid.len();
        match &self.kind {
            Kind::Static(_) => Ok(vec![S::zero(); n]),
            Kind::ShrinkingSphere { n: dim, .. } => {
                let a = sphere_factor(*dim, t)?;
                let rate = -S::lit(2.0) * (S::of(*dim) - S::one());
                Ok(vec![S::of(*dim) / S::lit(2.0) * rate / a; n])
            }
            Kind::Custom(table) => table.rate(&table.potential, &table.potential_rate, t),
            Kind::Rescaled { inner, k, c } => {
                let tau = rescaled_time(*k, *c, t)?;
                let rate = inner.potential_rate(tau)?;
                let d = inner.geometry_at(tau)?.ref_dim();
                let dtau = if *k == S::zero() { S::one() / *c } else { (S::lit(2.0) * *k * tau).exp() };
                Ok(rate.iter().map(|r| dtau * (*r - d * *k)).collect())
            }
            Kind::Conjugated { .. } => Ok(self.trace_rate(t)?.iter().map(|r| *r / S::lit(2.0)).collect()),
            Kind::Reversed { inner } => Ok(inner.potential_rate(self.horizon - t)?.iter().map(|r| -*r).collect()),
        }
    }

    /// Full trace `Tr_g(∂_t g) = d·∂_t a / a` of the reduced `d`-dimensional model.
    pub fn trace_rate(&self, t: S) -> Result<Vec<S>> {
        let g = self.geometry_at(t)?;
        let d = g.ref_dim();
        let rate = self.metric_rate(t)?;
        Ok(rate.iter().zip(g.metric()).map(|(r, a)| d * *r / *a).collect())
    }

    /// `∂_t V` for the effective chart potential `V = φ − ((d−1)/2) log a`.
    pub fn chart_potential_rate(&self, t: S) -> Result<Vec<S>> {
        let g = self.geometry_at(t)?;
        let c = (g.ref_dim() - S::one()) / S::lit(2.0);
        let pr = self.potential_rate(t)?;
        let mr = self.metric_rate(t)?;
        Ok((0..pr.len()).map(|i| pr[i] - c * mr[i] / g.metric()[i]).collect())
    }

    /// `∂_t` of the edge conductances and cell measures by a centred secant
    /// (one-sided at the ends of a custom table).
    pub fn operator_rates(&self, t: S) -> Result<(Vec<S>, Vec<S>)> {
        if self.is_static() {
            return Ok((vec![S::zero(); self.grid.num_edges()], vec![S::zero(); self.grid.len()]));
        }
        let eps = S::lit(1e-5) * S::one().max(t.abs()).min(self.horizon.max(S::lit(1e-3)));
        let (hi, lo, span) = match (self.geometry_at(t + eps), self.geometry_at(t - eps)) {
            (Ok(p), Ok(m)) => (p, m, eps + eps),
            (Ok(p), Err(_)) => (p, self.geometry_at(t)?, eps),
            (Err(_), Ok(m)) => (self.geometry_at(t)?, m, eps),
            (Err(e), Err(_)) => return Err(e),
        };
        let diff = |a: &[S], b: &[S]| a.iter().zip(b).map(|(x, y)| (*x - *y) / span).collect::<Vec<S>>();
        Ok((diff(hi.conductance(), lo.conductance()), diff(hi.measure(), lo.measure())))
    }

    /// `∂_t` of the edge conductances.
    pub fn conductance_rate(&self, t: S) -> Result<Vec<S>> {
        Ok(self.operator_rates(t)?.0)
    }
}

fn sphere_factor<S: Real>(n: usize, t: S) -> Result<S> {
    let a = S::one() - S::lit(2.0) * (S::of(n) - S::one()) * t;
    if a > S::zero() {
        Ok(a)
    } else {
        Err(Error::Domain(format!("shrinking sphere is singular at t = {t}")))
    }
}

/// `½∂_t g + Ric_{N,n}(L_t) − K g` on the unit direction, minimised over
/// nodes outside a `3h` collar at reflecting ends.
pub fn super_ricci_defect<S: Real>(flow: &FlowFamily<S>, n_dim: Dim<S>, k: S, t: S) -> Result<FlowDefect<S>> {
    let g = flow.geometry_at(t)?;
    let ric = unit_ricci(&g, n_dim)?;
    let rate = flow.metric_rate(t)?;
    let field: Vec<S> = (0..g.len())
        .map(|i| rate[i] / (S::lit(2.0) * g.metric()[i]) + ric[i] - k)
        .collect();
    let mask = g.grid().interior_mask(S::lit(3.0) * g.h());
    let min = field
        .iter()
        .zip(&mask)
        .filter(|(_, m)| **m)
        .fold(S::infinity(), |a, (v, _)| a.min(*v));
    Ok(FlowDefect { t, field, min })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rescaled_time_values() {
        assert!((rescaled_time(1.0f64, 1.0, 0.25).unwrap() - 0.346_573_590_279_972_6).abs() < 1e-12);
        assert_eq!(rescaled_time(1.0f64, 1.0, 0.0).unwrap(), 0.0);
        assert_eq!(rescaled_time(0.0f64, 1.0, 0.3).unwrap(), 0.3);
        assert!((rescaled_time(1e-9f64, 1.0, 0.3).unwrap() - 0.3).abs() < 1e-8);
        assert!(rescaled_time(1.0f64, 1.0, 0.5).is_err());
    }

    #[test]
    fn shrinking_sphere_metric() {
        let f = make_shrinking_sphere::<f64>(2, 0.9, 64).unwrap();
        assert!((f.horizon() - 0.45).abs() < 1e-15);
        let g = f.geometry_at(0.25).unwrap();
        assert!((g.metric()[10] - 0.5).abs() < 1e-15);
        assert_eq!(f.metric_rate(0.1).unwrap()[3], -2.0);
        assert!(make_shrinking_sphere::<f64>(2, 1.0, 64).is_err());
    }

    #[test]
    fn canonical_classes() {
        let c = make_canonical(CanonicalKind::Cone { n_dim: 3.0f64, radius: 4.0 }, 64).unwrap();
        assert_eq!(c.class(), FlowClass::new(0.0, Dim::Finite(3.0)));
        let s = make_canonical(CanonicalKind::WeightedSphere::<f64> { n: 2 }, 64).unwrap();
        assert_eq!(s.class(), FlowClass::new(1.0, Dim::Finite(2.0)));
        assert!(make_canonical(CanonicalKind::Cone { n_dim: 1.0f64, radius: 4.0 }, 64).is_err());
        assert!(make_canonical(CanonicalKind::WeightedSphere::<f64> { n: 1 }, 64).is_err());
    }

    #[test]
    fn class_implication() {
        let c = FlowClass::new(1.0f64, Dim::Finite(2.0));
        assert!(c.implies(0.0, Dim::Finite(3.0)));
        assert!(c.implies(1.0, Dim::Infinite));
        assert!(!c.implies(1.5, Dim::Finite(2.0)));
        assert!(!c.implies(0.0, Dim::Finite(1.5)));
    }
}
