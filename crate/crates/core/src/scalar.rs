//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point type the math core is generic over (`f32` or `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Converts a count or index into this scalar type.
    #[inline]
    fn of(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    /// Lossy conversion to `f64`, used for reporting.
    #[inline]
    fn to_f(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Smallest density value admitted inside a logarithm.
    #[inline]
    fn log_floor() -> Self {
        // 1e-300 underflows in f32, so the floor follows the type.
        Self::min_positive_value().max(Self::lit(1e-300))
    }
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + ToPrimitive
        + Debug
        + Display
        + Sum
        + AddAssign
        + SubAssign
        + MulAssign
        + DivAssign
        + Default
        + Send
        + Sync
        + 'static
{
}

/// Logarithm with the positivity floor applied.
#[inline]
pub fn safe_ln<S: Real>(x: S) -> S {
    x.max(S::log_floor()).ln()
}

/// Extended-real dimension parameter: finite `N` or `N = ∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dim<S> {
    Finite(S),
    Infinite,
}

impl<S: Real> Dim<S> {
    pub fn finite(self) -> Option<S> {
        match self {
            Dim::Finite(n) => Some(n),
            Dim::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Dim::Infinite)
    }

    /// `1/(N − n)`, zero for `N = ∞`.
    pub fn inv_excess(self, n: S) -> Option<S> {
        match self {
            Dim::Infinite => Some(S::zero()),
            Dim::Finite(m) if m > n => Some(S::one() / (m - n)),
            Dim::Finite(_) => None,
        }
    }

    /// `1/N`, zero for `N = ∞`.
    pub fn recip(self) -> S {
        match self {
            Dim::Infinite => S::zero(),
            Dim::Finite(m) => S::one() / m,
        }
    }

    /// Order relation on the extended reals: `self ≥ other`.
    pub fn at_least(self, other: Dim<S>) -> bool {
        match (self, other) {
            (Dim::Infinite, _) => true,
            (Dim::Finite(_), Dim::Infinite) => false,
            (Dim::Finite(a), Dim::Finite(b)) => a >= b,
        }
    }

    pub fn to_f64(self) -> Dim<f64> {
        match self {
            Dim::Infinite => Dim::Infinite,
            Dim::Finite(n) => Dim::Finite(n.to_f()),
        }
    }
}

impl<S: Real> Display for Dim<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Dim::Infinite => write!(f, "inf"),
            Dim::Finite(n) => write!(f, "{n}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floor_is_representable_in_both_widths() {
        assert_eq!(<f64 as Real>::log_floor(), 1e-300);
        assert!(<f32 as Real>::log_floor() > 0.0);
        assert!(safe_ln(0.0f64).is_finite());
    }

    #[test]
    fn dim_ordering() {
        let three = Dim::Finite(3.0);
        assert!(Dim::<f64>::Infinite.at_least(three));
        assert!(!three.at_least(Dim::Infinite));
        assert_eq!(three.inv_excess(1.0), Some(0.5));
        assert_eq!(Dim::Finite(1.0).inv_excess(1.0), None);
        assert_eq!(Dim::<f64>::Infinite.recip(), 0.0);
    }
}
