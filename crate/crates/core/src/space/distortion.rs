use crate::scalar::Real;

/// `𝔰_κ(θ)`: `sin(√κθ)/√κ`, `θ` or `sinh(√−κθ)/√−κ` by the sign of `κ`.
pub fn s_kappa<S: Real>(kappa: S, theta: S) -> S {
    if kappa > S::zero() {
        let r = kappa.sqrt();
        (r * theta).sin() / r
    } else if kappa < S::zero() {
        let r = (-kappa).sqrt();
        (r * theta).sinh() / r
    } else {
        theta
    }
}

/// `𝔠_κ(θ)`: `cos(√κθ)`, `1` or `cosh(√−κθ)`.
pub fn c_kappa<S: Real>(kappa: S, theta: S) -> S {
    if kappa > S::zero() {
        (kappa.sqrt() * theta).cos()
    } else if kappa < S::zero() {
        ((-kappa).sqrt() * theta).cosh()
    } else {
        S::one()
    }
}

/// Distortion coefficient `σ_κ^{(t)}(θ)`, `+∞` once `κθ² ≥ π²`.
pub fn distortion_coefficient<S: Real>(kappa: S, theta: S, t: S) -> S {
    let k = kappa * theta * theta;
    if k >= S::PI() * S::PI() {
        S::infinity()
    } else if k == S::zero() {
        t
    } else {
        s_kappa(kappa, t * theta) / s_kappa(kappa, theta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn reference_values() {
        assert_eq!(distortion_coefficient(0.0, 1.0, 0.5), 0.5);
        assert!(distortion_coefficient(1.0, PI, 0.3).is_infinite());
        assert!((distortion_coefficient(1.0, PI / 2.0, 1.0 / 3.0) - 0.5).abs() < 1e-15);
        assert!(distortion_coefficient(-1.0, 2.0, 0.5) < 0.5);
        assert_eq!(c_kappa(0.0, 3.0), 1.0);
        assert!((c_kappa(-1.0, 1.0) - 1f64.cosh()).abs() < 1e-15);
    }
}
