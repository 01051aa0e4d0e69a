//! Pointwise chart calculus: covariant Hessian, Bakry-Émery Ricci curvature
//! and the Bochner decomposition, all from centred differences of nodal values.

use super::geometry::WeightedGeometry;
use super::operators::build_operators;
use crate::error::{ensure_len, Error, Result};
use crate::scalar::{Dim, Real};

/// Centred first derivative in the chart coordinate. Reflecting end nodes copy
/// their neighbour's value and are excluded from every check through
/// [`Grid1D::interior_mask`](super::Grid1D::interior_mask).
pub fn chart_d1<S: Real>(geom: &WeightedGeometry<S>, f: &[S]) -> Vec<S> {
    stencil(geom, f, |l, _, r, h| (r - l) / (S::lit(2.0) * h))
}

/// Centred second derivative in the chart coordinate.
pub fn chart_d2<S: Real>(geom: &WeightedGeometry<S>, f: &[S]) -> Vec<S> {
    stencil(geom, f, |l, c, r, h| (r - S::lit(2.0) * c + l) / (h * h))
}

fn stencil<S: Real>(geom: &WeightedGeometry<S>, f: &[S], op: impl Fn(S, S, S, S) -> S) -> Vec<S> {
    let grid = geom.grid();
    let n = grid.len();
    let h = grid.h();
    let mut out = vec![S::zero(); n];
    for (i, o) in out.iter_mut().enumerate() {
        if let (Some(l), Some(r)) = grid.neighbours(i) {
            *o = op(f[l], f[i], f[r], h);
        }
    }
    if !grid.is_periodic() {
        out[0] = out[1];
        out[n - 1] = out[n - 2];
    }
    out
}

/// `|∇f|² = f′²/a` at nodes.
pub fn grad_sq<S: Real>(geom: &WeightedGeometry<S>, f: &[S]) -> Vec<S> {
    chart_d1(geom, f).iter().zip(geom.metric()).map(|(d, a)| *d * *d / *a).collect()
}

/// `∇²f(e,e)` for the unit vector `e = a^{-1/2}∂_x`: `(f″ − a′f′/(2a))/a`.
pub fn hessian_field<S: Real>(geom: &WeightedGeometry<S>, f: &[S]) -> Vec<S> {
    let a = geom.metric();
    let da = chart_d1(geom, a);
    let d1 = chart_d1(geom, f);
    let d2 = chart_d2(geom, f);
    (0..f.len())
        .map(|i| (d2[i] - da[i] * d1[i] / (S::lit(2.0) * a[i])) / a[i])
        .collect()
}

/// Unit-direction derivative `V_s = V′/√a` of the effective chart potential.
pub fn potential_slope<S: Real>(geom: &WeightedGeometry<S>) -> Vec<S> {
    let v = geom.chart_potential();
    chart_d1(geom, &v).iter().zip(geom.metric()).map(|(d, a)| *d / a.sqrt()).collect()
}

/// Whether the effective potential is constant (the only admissible case for `N = n`).
pub fn potential_is_constant<S: Real>(geom: &WeightedGeometry<S>) -> bool {
    let v = geom.chart_potential();
    let (lo, hi) = v.iter().fold((S::infinity(), S::neg_infinity()), |(l, h), x| (l.min(*x), h.max(*x)));
    hi - lo <= S::lit(1e-12) * (S::one() + hi.abs().max(lo.abs()))
}

/// `Ric_{N,1}(e,e)` at nodes for the unit vector `e`, i.e. `∇²V(e,e) − V_s²/(N−1)`.
///
/// For finite `N > 1` this is evaluated as `−(N−1)·∇²w(e,e)/w` with
/// `w = e^{−V/(N−1)}`. The two expressions agree in the continuum, but `w` is
/// smooth at cone vertices and sphere poles (`w = x`, `w = sin θ`), so the
/// second difference stays uniformly second-order accurate up to the collar.
/// `N = ∞` drops the quadratic term; `N = 1` requires constant `V`.
pub fn unit_ricci<S: Real>(geom: &WeightedGeometry<S>, n_dim: Dim<S>) -> Result<Vec<S>> {
    let n = geom.dim();
    if !n_dim.at_least(Dim::Finite(n)) {
        return Err(Error::Domain(format!("N = {n_dim} is below the geometric dimension {n}")));
    }
    let v = geom.chart_potential();
    match n_dim {
        Dim::Infinite => Ok(hessian_field(geom, &v)),
        Dim::Finite(m) if m > n => {
            let excess = m - n;
            let v_min = v.iter().fold(S::infinity(), |a, b| a.min(*b));
            let w: Vec<S> = v.iter().map(|x| (-(*x - v_min) / excess).exp()).collect();
            let hw = hessian_field(geom, &w);
            Ok(hw.iter().zip(&w).map(|(h, w)| -excess * *h / *w).collect())
        }
        Dim::Finite(_) if potential_is_constant(geom) => Ok(vec![S::zero(); geom.len()]),
        Dim::Finite(_) => Err(Error::Model("N = n requires a constant potential".into())),
    }
}

/// `Ric_{N,n}(L)(∇f,∇f)` at nodes.
pub fn bakry_emery_ricci<S: Real>(geom: &WeightedGeometry<S>, n_dim: Dim<S>, f: &[S]) -> Result<Vec<S>> {
    ensure_len(geom.len(), f.len())?;
    let ric = unit_ricci(geom, n_dim)?;
    Ok(ric.iter().zip(grad_sq(geom, f)).map(|(r, g)| *r * g).collect())
}

/// Nodewise curvature diagnostics of one test function.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvaturePanel<S> {
    /// `Ric_{N,n}(∇f,∇f)/|∇f|²`.
    pub ric_field: Vec<S>,
    pub hessian_field: Vec<S>,
    pub gamma2_field: Vec<S>,
    /// `false` where stencils reach past a reflecting end.
    pub reliable: Vec<bool>,
}

pub fn curvature_panel<S: Real>(geom: &WeightedGeometry<S>, n_dim: Dim<S>, f: &[S]) -> Result<CurvaturePanel<S>> {
    ensure_len(geom.len(), f.len())?;
    let reliable = geom.grid().interior_mask(geom.h());
    Ok(CurvaturePanel {
        ric_field: unit_ricci(geom, n_dim)?,
        hessian_field: hessian_field(geom, f),
        gamma2_field: build_operators(geom).gamma2(f),
        reliable,
    })
}

/// Nodewise Bochner defect `Γ₂(f,f) − ‖∇²f‖² − Ric_{∞,1}(∇f,∇f)`.
pub fn bochner_defect<S: Real>(geom: &WeightedGeometry<S>, f: &[S]) -> Result<Vec<S>> {
    ensure_len(geom.len(), f.len())?;
    let g2 = build_operators(geom).gamma2(f);
    let hess = hessian_field(geom, f);
    let ric = bakry_emery_ricci(geom, Dim::Infinite, f)?;
    Ok((0..f.len()).map(|i| g2[i] - hess[i] * hess[i] - ric[i]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::Grid1D;

    fn sphere(n: f64, cells: usize) -> WeightedGeometry<f64> {
        let g = Grid1D::interval(0.0, std::f64::consts::PI, cells).unwrap();
        WeightedGeometry::from_fn(g, n, move |t: f64| (1.0, -(n - 1.0) * t.sin().ln())).unwrap()
    }

    #[test]
    fn sphere_ricci_is_n_minus_one() {
        let geom = sphere(3.0, 256);
        let ric = unit_ricci(&geom, Dim::Finite(3.0)).unwrap();
        let mask = geom.grid().interior_mask(3.0 * geom.h());
        for i in (0..256).filter(|i| mask[*i]) {
            assert!((ric[i] - 2.0).abs() < 1e-4, "{}", ric[i]);
        }
    }

    #[test]
    fn n_equal_one_needs_constant_potential() {
        let geom = sphere(2.0, 64);
        assert!(matches!(unit_ricci(&geom, Dim::Finite(1.0)), Err(Error::Model(_))));
        assert!(matches!(unit_ricci(&geom, Dim::Finite(0.5)), Err(Error::Domain(_))));
    }

    #[test]
    fn bochner_defect_shrinks_quadratically() {
        let errs: Vec<f64> = [128, 256]
            .iter()
            .map(|&n| {
                let geom = sphere(2.0, n);
                let f: Vec<f64> = geom.grid().nodes().iter().map(|t| t.cos() + 0.3 * (2.0 * t).sin()).collect();
                let d = bochner_defect(&geom, &f).unwrap();
                let mask = geom.grid().interior_mask(0.5);
                d.iter().zip(&mask).filter(|(_, m)| **m).fold(0.0f64, |a, (v, _)| a.max(v.abs()))
            })
            .collect();
        let ratio = errs[0] / errs[1];
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}, errs {errs:?}");
    }
}
