use super::grid::{Grid1D, Topology};
use crate::error::{ensure_len, Error, Result};
use crate::linalg::gauss_legendre;
use crate::scalar::Real;

/// A discrete weighted chart `(X, g = a·dx², φ, μ)`.
///
/// The reference volume of a reduced `d`-dimensional model is `a^{d/2} dx`, so
/// the weighted density is `ρ = e^{−φ} a^{d/2}` and `d = 1` recovers the plain
/// chart measure `e^{−φ}√a dx`. Cell measures `μ_i` integrate `ρ` over the
/// control cell and the edge conductances are `(ρ/a)(midpoint)/h`; together
/// they define a generator that is exactly symmetric with respect to `μ`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGeometry<S> {
    grid: Grid1D<S>,
    metric: Vec<S>,
    potential: Vec<S>,
    ref_dim: S,
    measure: Vec<S>,
    conductance: Vec<S>,
    cell_length: Vec<S>,
}

impl<S: Real> WeightedGeometry<S> {
    /// Builds the geometry from a closed-form profile `x ↦ (a(x), φ(x))`.
    /// Cell measures use five-point Gauss-Legendre quadrature, so integrable
    /// endpoint singularities of `φ` (cone vertex, sphere poles) are harmless.
    pub fn from_fn(grid: Grid1D<S>, ref_dim: S, profile: impl Fn(S) -> (S, S)) -> Result<Self> {
        check_dim(ref_dim)?;
        let half_d = ref_dim / S::lit(2.0);
        let density = |x: S| {
            let (a, phi) = profile(x);
            (-phi).exp() * a.powf(half_d)
        };
        let (metric, potential): (Vec<S>, Vec<S>) = grid.nodes().iter().map(|&x| profile(x)).unzip();
        let measure = (0..grid.len())
            .map(|i| {
                let (lo, hi) = grid.cell(i);
                gauss_legendre(lo, hi, density)
            })
            .collect();
        let h = grid.h();
        let conductance = (0..grid.num_edges())
            .map(|k| {
                let (a, phi) = profile(grid.edge_midpoint(k));
                (-phi).exp() * a.powf(half_d - S::one()) / h
            })
            .collect();
        let cell_length = metric.iter().map(|a: &S| a.sqrt() * h).collect();
        Self { grid, metric, potential, ref_dim, measure, conductance, cell_length }.validated()
    }

    /// Builds the geometry from nodal tables, with midpoint-rule cell measures
    /// and arithmetic edge averages of `ρ/a`.
    pub fn from_nodal(grid: Grid1D<S>, metric: Vec<S>, potential: Vec<S>, ref_dim: S) -> Result<Self> {
        check_dim(ref_dim)?;
        ensure_len(grid.len(), metric.len())?;
        ensure_len(grid.len(), potential.len())?;
        if let Some(a) = metric.iter().find(|a| !(**a > S::zero()) || !a.is_finite()) {
            return Err(Error::Geometry(format!("metric coefficient must be positive, got {a}")));
        }
        let h = grid.h();
        let half_d = ref_dim / S::lit(2.0);
        let rho: Vec<S> = metric
            .iter()
            .zip(&potential)
            .map(|(&a, &phi)| (-phi).exp() * a.powf(half_d))
            .collect();
        let measure = rho.iter().map(|&r| r * h).collect();
        let conductance = (0..grid.num_edges())
            .map(|k| {
                let (i, j) = grid.edge(k);
                (rho[i] / metric[i] + rho[j] / metric[j]) / (S::lit(2.0) * h)
            })
            .collect();
        let cell_length = metric.iter().map(|a| a.sqrt() * h).collect();
        Self { grid, metric, potential, ref_dim, measure, conductance, cell_length }.validated()
    }

    fn validated(self) -> Result<Self> {
        let bad = |v: &[S]| v.iter().any(|x| !(*x > S::zero()) || !x.is_finite());
        if bad(&self.metric) {
            return Err(Error::Geometry("metric coefficient must be positive and finite".into()));
        }
        if bad(&self.measure) {
            return Err(Error::Geometry("measure weights must be positive and finite".into()));
        }
        if bad(&self.conductance) {
            return Err(Error::Geometry("edge conductances must be positive and finite".into()));
        }
        if self.potential.iter().any(|p| !p.is_finite()) {
            return Err(Error::Geometry("potential must be finite at every node".into()));
        }
        Ok(self)
    }

    pub fn grid(&self) -> &Grid1D<S> {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn h(&self) -> S {
        self.grid.h()
    }

    /// Nodal metric coefficients `a_i`.
    pub fn metric(&self) -> &[S] {
        &self.metric
    }

    /// Nodal potential `φ_i`.
    pub fn potential(&self) -> &[S] {
        &self.potential
    }

    /// Dimension `d` of the reference volume `a^{d/2} dx`.
    pub fn ref_dim(&self) -> S {
        self.ref_dim
    }

    /// Geometric dimension of the chart; always one.
    pub fn dim(&self) -> S {
        S::one()
    }

    /// Measure weights `μ_i`.
    pub fn measure(&self) -> &[S] {
        &self.measure
    }

    pub fn conductance(&self) -> &[S] {
        &self.conductance
    }

    pub fn total_measure(&self) -> S {
        self.measure.iter().copied().sum()
    }

    /// `Σ μ_i f_i`.
    pub fn integrate(&self, f: &[S]) -> S {
        self.measure.iter().zip(f).map(|(m, v)| *m * *v).sum()
    }

    /// Effective one-dimensional potential `V = φ − ((d−1)/2)·log a`, which
    /// carries the curvature of the reduced model in the chart.
    pub fn chart_potential(&self) -> Vec<S> {
        let c = (self.ref_dim - S::one()) / S::lit(2.0);
        self.potential.iter().zip(&self.metric).map(|(&p, &a)| p - c * a.ln()).collect()
    }

    /// Copy with the metric scaled by a constant factor and the potential
    /// shifted so that the weighted measure is unchanged.
    pub fn with_metric_scale(&self, lambda: S) -> Result<Self> {
        if !(lambda > S::zero()) {
            return Err(Error::Geometry("metric scale must be positive".into()));
        }
        let shift = self.ref_dim / S::lit(2.0) * lambda.ln();
        let root = lambda.sqrt();
        Ok(Self {
            grid: self.grid.clone(),
            metric: self.metric.iter().map(|a| *a * lambda).collect(),
            potential: self.potential.iter().map(|p| *p + shift).collect(),
            ref_dim: self.ref_dim,
            measure: self.measure.clone(),
            conductance: self.conductance.iter().map(|c| *c / lambda).collect(),
            cell_length: self.cell_length.iter().map(|l| *l * root).collect(),
        })
    }

    /// Copy with a replaced potential; measures and conductances are rescaled
    /// by the nodal factor `e^{−(φ_new − φ)}` (edge values averaged).
    pub fn with_potential(&self, potential: Vec<S>) -> Result<Self> {
        ensure_len(self.len(), potential.len())?;
        let ratio: Vec<S> = potential.iter().zip(&self.potential).map(|(n, o)| (*o - *n).exp()).collect();
        let conductance = (0..self.grid.num_edges())
            .map(|k| {
                let (i, j) = self.grid.edge(k);
                self.conductance[k] * (ratio[i] + ratio[j]) / S::lit(2.0)
            })
            .collect();
        Self {
            grid: self.grid.clone(),
            metric: self.metric.clone(),
            potential,
            ref_dim: self.ref_dim,
            measure: self.measure.iter().zip(&ratio).map(|(m, r)| *m * *r).collect(),
            conductance,
            cell_length: self.cell_length.clone(),
        }
        .validated()
    }

    /// Riemannian length of each control cell, `√a_i·h`.
    pub fn cell_lengths(&self) -> &[S] {
        &self.cell_length
    }

    /// Arclength coordinate of each cell's left boundary, plus the total length.
    pub fn arclength_boundaries(&self) -> Vec<S> {
        let mut s = Vec::with_capacity(self.len() + 1);
        let mut acc = S::zero();
        s.push(acc);
        for l in &self.cell_length {
            acc += *l;
            s.push(acc);
        }
        s
    }

    /// Arclength coordinate of node centres.
    pub fn arclength_nodes(&self) -> Vec<S> {
        let b = self.arclength_boundaries();
        b.windows(2).map(|w| (w[0] + w[1]) / S::lit(2.0)).collect()
    }

    /// Riemannian distance between nodes `i` and `j`.
    pub fn distance(&self, i: usize, j: usize) -> S {
        let s = self.arclength_nodes();
        let direct = (s[i] - s[j]).abs();
        match self.grid.topology() {
            Topology::Interval => direct,
            Topology::Circle => {
                let total = *self.arclength_boundaries().last().unwrap_or(&S::zero());
                direct.min(total - direct)
            }
        }
    }

    /// Measure of the metric ball of radius `r` around the point at arclength
    /// coordinate `centre`, with cells partially covered counted by their
    /// covered length fraction.
    pub fn ball_measure(&self, centre: S, r: S) -> S {
        let b = self.arclength_boundaries();
        let total = b[self.len()];
        let overlap = |lo: S, hi: S, a: S, z: S| (hi.min(z) - lo.max(a)).max(S::zero());
        let mut acc = S::zero();
        for i in 0..self.len() {
            let (lo, hi) = (b[i], b[i + 1]);
            let mut cover = overlap(lo, hi, centre - r, centre + r);
            if self.grid.topology() == Topology::Circle {
                if r >= total / S::lit(2.0) {
                    cover = hi - lo;
                } else {
                    cover += overlap(lo, hi, centre - r + total, centre + r + total);
                    cover += overlap(lo, hi, centre - r - total, centre + r - total);
                }
            }
            acc += self.measure[i] * (cover / (hi - lo)).min(S::one());
        }
        acc
    }
}

fn check_dim<S: Real>(d: S) -> Result<()> {
    if d >= S::one() && d.is_finite() {
        Ok(())
    } else {
        Err(Error::Geometry(format!("reference dimension must be >= 1, got {d}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cone_measure_is_exact_cell_integral() {
        let g = Grid1D::interval(0.0, 4.0, 64).unwrap();
        let geom = WeightedGeometry::from_fn(g, 1.0, |x: f64| (1.0, -2.0 * x.ln())).unwrap();
        assert!((geom.total_measure() - 64.0 / 3.0).abs() < 1e-11);
        assert!((geom.ball_measure(0.0, 2.0) - 8.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_metric() {
        let g = Grid1D::interval(0.0, 1.0, 8).unwrap();
        assert!(WeightedGeometry::from_fn(g.clone(), 1.0, |_| (0.0, 0.0)).is_err());
        assert!(WeightedGeometry::from_nodal(g, vec![1.0; 7], vec![0.0; 8], 1.0).is_err());
    }

    #[test]
    fn metric_scale_preserves_measure() {
        let g = Grid1D::interval(0.1, 3.0, 32).unwrap();
        let geom = WeightedGeometry::from_fn(g, 2.0, |x: f64| (1.0 + x, -x.sin().ln())).unwrap();
        let s = geom.with_metric_scale(0.5).unwrap();
        assert_eq!(s.measure(), geom.measure());
        let rho = |m: &WeightedGeometry<f64>, i: usize| (-m.potential()[i]).exp() * m.metric()[i];
        assert!((rho(&s, 3) - rho(&geom, 3)).abs() < 1e-13);
    }

    #[test]
    fn circle_distance_wraps() {
        let g = Grid1D::<f64>::circle(1.0, 10).unwrap();
        let geom = WeightedGeometry::from_fn(g, 1.0, |_| (4.0, 0.0)).unwrap();
        assert!((geom.distance(0, 9) - 0.2).abs() < 1e-14);
        assert!((geom.ball_measure(0.0, 5.0) - 2.0).abs() < 1e-14);
    }
}
