use super::geometry::WeightedGeometry;
use crate::error::{ensure_len, Result};
use crate::linalg::{Dense, TridiagFactor};
use crate::scalar::Real;

/// The generator `L`, square field `Γ` and discrete gradient of a geometry.
///
/// `(Lf)_i = μ_i⁻¹ Σ_e c_e (f_j − f_i)` and `Γ` is the graph square field
/// `Γ(f,g)_i = (2μ_i)⁻¹ Σ_e c_e (f_j − f_i)(g_j − g_i)`, so the Leibniz rule
/// `L(fg) = fLg + gLf + 2Γ(f,g)` and `∫Γ(f,g)dμ = −∫f Lg dμ` hold to round-off.
#[derive(Debug, Clone, Copy)]
pub struct OperatorSet<'a, S> {
    geom: &'a WeightedGeometry<S>,
}

pub fn build_operators<S: Real>(geom: &WeightedGeometry<S>) -> OperatorSet<'_, S> {
    OperatorSet { geom }
}

impl<'a, S: Real> OperatorSet<'a, S> {
    pub fn geometry(&self) -> &'a WeightedGeometry<S> {
        self.geom
    }

    pub fn apply_l(&self, f: &[S]) -> Vec<S> {
        let grid = self.geom.grid();
        let c = self.geom.conductance();
        let mu = self.geom.measure();
        let mut out = vec![S::zero(); f.len()];
        for k in 0..grid.num_edges() {
            let (i, j) = grid.edge(k);
            let flux = c[k] * (f[j] - f[i]);
            out[i] += flux;
            out[j] -= flux;
        }
        for (o, m) in out.iter_mut().zip(mu) {
            *o /= *m;
        }
        out
    }

    pub fn try_apply_l(&self, f: &[S]) -> Result<Vec<S>> {
        ensure_len(self.geom.len(), f.len())?;
        Ok(self.apply_l(f))
    }

    pub fn gamma(&self, f: &[S], g: &[S]) -> Vec<S> {
        let grid = self.geom.grid();
        let c = self.geom.conductance();
        let mut out = vec![S::zero(); f.len()];
        for k in 0..grid.num_edges() {
            let (i, j) = grid.edge(k);
            let e = c[k] * (f[j] - f[i]) * (g[j] - g[i]);
            out[i] += e;
            out[j] += e;
        }
        let two = S::lit(2.0);
        for (o, m) in out.iter_mut().zip(self.geom.measure()) {
            *o /= two * *m;
        }
        out
    }

    pub fn gamma2(&self, f: &[S]) -> Vec<S> {
        let gff = self.gamma(f, f);
        let lf = self.apply_l(f);
        let l_gff = self.apply_l(&gff);
        let cross = self.gamma(f, &lf);
        l_gff.iter().zip(&cross).map(|(a, b)| *a / S::lit(2.0) - *b).collect()
    }

    /// Edge gradient `(f_j − f_i)/h`, one value per edge.
    pub fn gradient(&self, f: &[S]) -> Vec<S> {
        let grid = self.geom.grid();
        let h = grid.h();
        (0..grid.num_edges())
            .map(|k| {
                let (i, j) = grid.edge(k);
                (f[j] - f[i]) / h
            })
            .collect()
    }

    /// `μ`-weighted inner product.
    pub fn inner(&self, f: &[S], g: &[S]) -> S {
        self.geom.measure().iter().zip(f).zip(g).map(|((m, a), b)| *m * *a * *b).sum()
    }

    /// Dirichlet form `Σ_e c_e (f_j − f_i)(g_j − g_i) = ∫Γ(f,g)dμ`.
    pub fn dirichlet(&self, f: &[S], g: &[S]) -> S {
        let grid = self.geom.grid();
        let c = self.geom.conductance();
        (0..grid.num_edges())
            .map(|k| {
                let (i, j) = grid.edge(k);
                c[k] * (f[j] - f[i]) * (g[j] - g[i])
            })
            .sum()
    }

    /// Dense matrix of `L`.
    pub fn to_dense(&self) -> Dense<S> {
        let grid = self.geom.grid();
        let c = self.geom.conductance();
        let mu = self.geom.measure();
        let mut m = Dense::zeros(grid.len());
        for k in 0..grid.num_edges() {
            let (i, j) = grid.edge(k);
            m.set(i, j, m.get(i, j) + c[k] / mu[i]);
            m.set(j, i, m.get(j, i) + c[k] / mu[j]);
            m.set(i, i, m.get(i, i) - c[k] / mu[i]);
            m.set(j, j, m.get(j, j) - c[k] / mu[j]);
        }
        m
    }

    /// Nodes where second-order stencils reach past a reflecting end.
    pub fn unreliable(&self) -> Vec<bool> {
        self.geom.grid().interior_mask(S::zero()).iter().map(|b| !b).collect()
    }

    /// Factorization of `M − s·A` where `M = diag(μ)` and `A` is the stiffness
    /// matrix (`M L = A`).
    pub fn shifted_factor(&self, s: S) -> Result<TridiagFactor<S>> {
        let grid = self.geom.grid();
        let c = self.geom.conductance();
        let mut diag = self.geom.measure().to_vec();
        let mut off = vec![S::zero(); grid.num_edges()];
        for k in 0..grid.num_edges() {
            let (i, j) = grid.edge(k);
            diag[i] += s * c[k];
            diag[j] += s * c[k];
            off[k] = -s * c[k];
        }
        TridiagFactor::new(&diag, &off, grid.is_periodic())
    }

    /// `(M + s·A) f`.
    pub fn apply_mass_plus(&self, s: S, f: &[S]) -> Vec<S> {
        let lf = self.apply_l(f);
        self.geom
            .measure()
            .iter()
            .zip(f)
            .zip(&lf)
            .map(|((m, v), l)| *m * (*v + s * *l))
            .collect()
    }
}

pub fn carre_du_champ<S: Real>(ops: &OperatorSet<'_, S>, f: &[S], g: &[S]) -> Result<Vec<S>> {
    let n = ops.geometry().len();
    ensure_len(n, f.len())?;
    ensure_len(n, g.len())?;
    Ok(ops.gamma(f, g))
}

pub fn gamma2<S: Real>(ops: &OperatorSet<'_, S>, f: &[S]) -> Result<Vec<S>> {
    ensure_len(ops.geometry().len(), f.len())?;
    Ok(ops.gamma2(f))
}

/// `∫Γ(f,f) dμ`.
pub fn cheeger_energy<S: Real>(geom: &WeightedGeometry<S>, f: &[S]) -> Result<S> {
    ensure_len(geom.len(), f.len())?;
    Ok(build_operators(geom).dirichlet(f, f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::Grid1D;

    fn ou() -> WeightedGeometry<f64> {
        let g = Grid1D::interval(-8.0, 8.0, 512).unwrap();
        WeightedGeometry::from_fn(g, 1.0, |x| (1.0, x * x / 2.0)).unwrap()
    }

    #[test]
    fn flat_circle_is_second_difference() {
        let g = Grid1D::circle(1.0, 16).unwrap();
        let geom = WeightedGeometry::from_fn(g, 1.0, |_| (1.0, 0.0)).unwrap();
        let m = build_operators(&geom).to_dense();
        let h2 = (1.0f64 / 16.0).powi(2);
        for i in 0..16 {
            assert!((m.get(i, i) + 2.0 / h2).abs() < 1e-9);
            assert!((m.get(i, (i + 1) % 16) - 1.0 / h2).abs() < 1e-9);
            let row: f64 = (0..16).map(|j| m.get(i, j)).sum();
            assert!(row.abs() < 1e-9);
        }
    }

    #[test]
    fn ou_generator_on_linear_function() {
        let geom = ou();
        let ops = build_operators(&geom);
        let x = geom.grid().nodes().to_vec();
        let lx = ops.apply_l(&x);
        for i in 1..511 {
            assert!((lx[i] + x[i]).abs() < 1e-3, "node {i}: {}", lx[i]);
        }
    }

    #[test]
    fn ou_gamma2_of_coordinate_is_one() {
        let geom = ou();
        let ops = build_operators(&geom);
        let x = geom.grid().nodes().to_vec();
        let g2 = ops.gamma2(&x);
        for i in 2..510 {
            assert!((g2[i] - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn cheeger_energy_of_coordinate() {
        let two_pi = std::f64::consts::TAU;
        let g = Grid1D::interval(0.0, two_pi, 256).unwrap();
        let geom = WeightedGeometry::from_fn(g, 1.0, |_| (1.0, 0.0)).unwrap();
        let x = geom.grid().nodes().to_vec();
        let e = cheeger_energy(&geom, &x).unwrap();
        assert!((e - two_pi).abs() <= geom.h() + 1e-12);
        assert_eq!(cheeger_energy(&geom, &vec![3.0; 256]).unwrap(), 0.0);
    }
}
