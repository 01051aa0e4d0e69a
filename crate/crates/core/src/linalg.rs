//! Small linear-algebra and quadrature kernels: symmetric (cyclic) tridiagonal
//! factorizations, a row-major dense matrix, Gauss-Legendre rules.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// LDLᵀ factorization of a symmetric tridiagonal matrix, optionally with the
/// two periodic corner entries (handled by Sherman-Morrison).
#[derive(Debug, Clone)]
pub struct TridiagFactor<S> {
    l: Vec<S>,
    d: Vec<S>,
    cyclic: Option<Cyclic<S>>,
}

#[derive(Debug, Clone)]
struct Cyclic<S> {
    v: Vec<S>,
    z: Vec<S>,
    denom: S,
}

impl<S: Real> TridiagFactor<S> {
    /// Factors the matrix with diagonal `diag` and off-diagonal `off[i]` coupling
    /// `i` and `i+1`. For `cyclic`, `off` has length `n` and `off[n-1]` couples
    /// `n-1` with `0`.
    pub fn new(diag: &[S], off: &[S], cyclic: bool) -> Result<Self> {
        let n = diag.len();
        if !cyclic {
            let (l, d) = ldl(diag, off)?;
            return Ok(Self { l, d, cyclic: None });
        }
        if n < 3 || off.len() != n {
            return Err(Error::Numerical("cyclic system needs n >= 3 and n couplings".into()));
        }
        let corner = off[n - 1];
        let gamma = -diag[0];
        let mut dm = diag.to_vec();
        dm[0] -= gamma;
        dm[n - 1] -= corner * corner / gamma;
        let (l, d) = ldl(&dm, &off[..n - 1])?;
        let mut u = vec![S::zero(); n];
        u[0] = gamma;
        u[n - 1] = corner;
        let mut v = vec![S::zero(); n];
        v[0] = S::one();
        v[n - 1] = corner / gamma;
        ldl_solve(&l, &d, &mut u);
        let denom = S::one() + dot(&v, &u);
        if denom == S::zero() || !denom.is_finite() {
            return Err(Error::Numerical("singular cyclic correction".into()));
        }
        Ok(Self { l, d, cyclic: Some(Cyclic { v, z: u, denom }) })
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    /// Solves in place.
    pub fn solve(&self, b: &mut [S]) {
        ldl_solve(&self.l, &self.d, b);
        if let Some(c) = &self.cyclic {
            let k = dot(&c.v, b) / c.denom;
            for (bi, &zi) in b.iter_mut().zip(&c.z) {
                *bi -= k * zi;
            }
        }
    }
}

fn ldl<S: Real>(diag: &[S], off: &[S]) -> Result<(Vec<S>, Vec<S>)> {
    let n = diag.len();
    let mut d = Vec::with_capacity(n);
    let mut l = Vec::with_capacity(n.saturating_sub(1));
    d.push(diag[0]);
    for i in 1..n {
        let li = off[i - 1] / d[i - 1];
        l.push(li);
        d.push(diag[i] - li * off[i - 1]);
    }
    if d.iter().any(|x| *x == S::zero() || !x.is_finite()) {
        return Err(Error::Numerical("zero pivot in tridiagonal factorization".into()));
    }
    Ok((l, d))
}

fn ldl_solve<S: Real>(l: &[S], d: &[S], b: &mut [S]) {
    let n = d.len();
    for i in 1..n {
        let prev = b[i - 1];
        b[i] -= l[i - 1] * prev;
    }
    for i in 0..n {
        b[i] /= d[i];
    }
    for i in (0..n.saturating_sub(1)).rev() {
        let next = b[i + 1];
        b[i] -= l[i] * next;
    }
}

pub fn dot<S: Real>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).map(|(x, y)| *x * *y).sum()
}

/// Row-major dense square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<S> {
    pub n: usize,
    pub data: Vec<S>,
}

impl<S: Real> Dense<S> {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![S::zero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = S::one();
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> S {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.n + j] = v;
    }

    pub fn column(&self, j: usize) -> Vec<S> {
        (0..self.n).map(|i| self.get(i, j)).collect()
    }

    pub fn set_column(&mut self, j: usize, col: &[S]) {
        for (i, &v) in col.iter().enumerate() {
            self.set(i, j, v);
        }
    }

    pub fn matvec(&self, x: &[S]) -> Vec<S> {
        self.data.chunks(self.n).map(|row| dot(row, x)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == S::zero() {
                    continue;
                }
                let row = &other.data[k * n..(k + 1) * n];
                let dst = &mut out.data[i * n..(i + 1) * n];
                for (o, &b) in dst.iter_mut().zip(row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Self) -> S {
        self.data
            .iter()
            .zip(&other.data)
            .fold(S::zero(), |m, (a, b)| m.max((*a - *b).abs()))
    }
}

/// Five-point Gauss-Legendre nodes and weights on `[-1, 1]`.
pub const GL5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

/// Integrates `f` over `[a, b]` with the five-point Gauss-Legendre rule.
pub fn gauss_legendre<S: Real>(a: S, b: S, mut f: impl FnMut(S) -> S) -> S {
    let half = (b - a) / S::lit(2.0);
    let mid = (a + b) / S::lit(2.0);
    GL5.iter().map(|&(x, w)| S::lit(w) * f(mid + half * S::lit(x))).sum::<S>() * half
}

/// Composite five-point Gauss-Legendre over `panels` equal sub-intervals.
pub fn gauss_legendre_composite<S: Real>(a: S, b: S, panels: usize, mut f: impl FnMut(S) -> S) -> S {
    let w = (b - a) / S::of(panels);
    (0..panels)
        .map(|k| {
            let lo = a + w * S::of(k);
            gauss_legendre(lo, lo + w, &mut f)
        })
        .sum()
}

/// Trapezoid rule on samples with uniform spacing `dx`.
pub fn trapezoid<S: Real>(values: &[S], dx: S) -> S {
    match values.len() {
        0 | 1 => S::zero(),
        n => {
            let inner: S = values[1..n - 1].iter().copied().sum();
            dx * (inner + (values[0] + values[n - 1]) / S::lit(2.0))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn apply(diag: &[f64], off: &[f64], cyclic: bool, x: &[f64]) -> Vec<f64> {
        let n = diag.len();
        (0..n)
            .map(|i| {
                let mut s = diag[i] * x[i];
                if i + 1 < n {
                    s += off[i] * x[i + 1];
                }
                if i > 0 {
                    s += off[i - 1] * x[i - 1];
                }
                if cyclic && i == 0 {
                    s += off[n - 1] * x[n - 1];
                }
                if cyclic && i == n - 1 {
                    s += off[n - 1] * x[0];
                }
                s
            })
            .collect()
    }

    #[test]
    fn tridiagonal_solves_round_trip() {
        for cyclic in [false, true] {
            let n = 9;
            let diag: Vec<f64> = (0..n).map(|i| 4.0 + 0.1 * i as f64).collect();
            let off: Vec<f64> = (0..n).map(|i| -1.0 - 0.05 * i as f64).collect();
            let x: Vec<f64> = (0..n).map(|i| (i as f64).sin() + 0.3).collect();
            let mut b = apply(&diag, &off, cyclic, &x);
            TridiagFactor::new(&diag, &off, cyclic).unwrap().solve(&mut b);
            for (a, e) in b.iter().zip(&x) {
                assert!((a - e).abs() < 1e-13, "cyclic={cyclic}");
            }
        }
    }

    #[test]
    fn gauss_legendre_is_exact_for_degree_nine() {
        let v = gauss_legendre(0.0f64, 2.0, |x| x.powi(9));
        assert!((v - 2f64.powi(10) / 10.0).abs() < 1e-11);
        let s = gauss_legendre_composite(0.0f64, std::f64::consts::PI, 8, f64::sin);
        assert!((s - 2.0).abs() < 1e-12);
    }

    #[test]
    fn dense_products() {
        let mut a = Dense::<f64>::identity(3);
        a.set(0, 2, 2.0);
        let b = a.matmul(&a);
        assert_eq!(b.get(0, 2), 4.0);
        assert_eq!(a.transpose().get(2, 0), 2.0);
        assert_eq!(a.matvec(&[1.0, 1.0, 1.0]), vec![3.0, 1.0, 1.0]);
    }
}
