//! Closed-form macroscopic laws: the shape function, growth velocity,
//! ellipsoidal limit shape, the entropic Burgers profile with its
//! characteristics, and the limit distribution of the rescaled
//! second-class particle.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Boundary intensities of the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub lambda: f64,
    pub rho: f64,
}

/// Hydrodynamic regime, classified by the product λρ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// λρ < 1: a rarefaction fan opens from the origin.
    Rarefaction,
    /// λρ = 1: the product measure is invariant.
    Stationary,
    /// λρ > 1: shock regime, outside the supported theory.
    Shock,
}

impl ModelParams {
    pub fn new(lambda: f64, rho: f64) -> Result<Self> {
        if !(lambda >= 0.0) || !(rho >= 0.0) {
            return Err(Error::invalid("intensities must be nonnegative"));
        }
        Ok(ModelParams { lambda, rho })
    }

    pub fn regime(&self) -> Regime {
        let p = self.lambda * self.rho;
        if p < 1.0 {
            Regime::Rarefaction
        } else if p == 1.0 {
            Regime::Stationary
        } else {
            Regime::Shock
        }
    }
}

/// The macroscopic passage time α(x, t) = 2√(xt).
pub fn shape_alpha(x: f64, t: f64) -> Result<f64> {
    if x < 0.0 || t < 0.0 {
        return Err(Error::invalid("shape_alpha needs x ≥ 0 and t ≥ 0"));
    }
    Ok(2.0 * (x * t).sqrt())
}

/// Growth velocity v(u) = √(2 + u²) of the height front over slope u.
pub fn growth_velocity(u: f64) -> f64 {
    (2.0 + u * u).sqrt()
}

/// v'(u) = u / √(2 + u²).
pub fn growth_velocity_prime(u: f64) -> f64 {
    u / (2.0 + u * u).sqrt()
}

/// The ellipsoidal limit shape f(c) = √(2(1 − c²)) of the droplet grown
/// with empty boundaries (λ = ρ = 0).
pub fn limit_shape_f(c: f64) -> Result<f64> {
    if c.abs() > 1.0 {
        return Err(Error::invalid("limit_shape_f needs |c| ≤ 1"));
    }
    Ok((2.0 * (1.0 - c * c)).sqrt())
}

/// Entropic solution of the Burgers conservation law with the boundary
/// data λ (right of the fan) and ρ⁻¹ (left of it), evaluated at (x, t).
pub fn burgers_u(x: f64, t: f64, params: ModelParams) -> Result<f64> {
    if !(x > 0.0 && t > 0.0) {
        return Err(Error::invalid("burgers_u needs x > 0 and t > 0"));
    }
    if params.lambda * params.rho >= 1.0 {
        return Err(Error::invalid("burgers_u is defined for λρ < 1"));
    }
    let lambda = params.lambda;
    if params.rho > 0.0 && x <= t * params.rho * params.rho {
        Ok(1.0 / params.rho)
    } else if lambda * lambda * x <= t {
        Ok((t / x).sqrt())
    } else {
        Ok(lambda)
    }
}

/// Characteristic line x(a, t) = a + t·λ⁻² of the stationary profile.
pub fn characteristic(a: f64, t: f64, params: ModelParams) -> Result<f64> {
    if params.lambda * params.rho != 1.0 {
        return Err(Error::invalid("characteristics need the stationary regime λρ = 1"));
    }
    if a < 0.0 {
        return Err(Error::invalid("characteristic needs a ≥ 0"));
    }
    Ok(a + t / (params.lambda * params.lambda))
}

/// Limit distribution function of X_t/t (equivalently of the terminal
/// beta-path slope in x/t terms): P(Z ≤ r).
pub fn z_cdf(r: f64, params: ModelParams) -> Result<f64> {
    let (lambda, rho) = (params.lambda, params.rho);
    if rho <= 0.0 {
        return Err(Error::invalid("z_cdf needs ρ > 0"));
    }
    if lambda * rho >= 1.0 {
        return Err(Error::invalid("z_cdf is defined for λρ < 1"));
    }
    if r <= rho * rho {
        return Ok(0.0);
    }
    // For λ = 0 the upper support endpoint λ⁻² is +∞ and the middle
    // branch covers everything above ρ².
    if lambda > 0.0 && r > 1.0 / (lambda * lambda) {
        return Ok(1.0);
    }
    Ok((1.0 / rho - (1.0 / r).sqrt()) / (1.0 / rho - lambda))
}

/// Asymptotic slope W = (1 − λ²)/(1 + λ²) of the competition interface in
/// the stationary regime.
pub fn stationary_interface_slope(params: ModelParams) -> Result<f64> {
    if params.lambda * params.rho != 1.0 {
        return Err(Error::invalid("interface slope needs the stationary regime λρ = 1"));
    }
    let l2 = params.lambda * params.lambda;
    Ok((1.0 - l2) / (1.0 + l2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point::{rotate, PlanarPoint};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(lambda: f64, rho: f64) -> ModelParams {
        ModelParams::new(lambda, rho).unwrap()
    }

    #[test]
    fn regimes() {
        assert_eq!(params(0.5, 1.0).regime(), Regime::Rarefaction);
        assert_eq!(params(0.5, 2.0).regime(), Regime::Stationary);
        assert_eq!(params(2.0, 2.0).regime(), Regime::Shock);
        assert!(ModelParams::new(-1.0, 0.0).is_err());
    }

    #[test]
    fn shape_alpha_values_and_homogeneity() {
        assert_eq!(shape_alpha(1.0, 1.0).unwrap(), 2.0);
        assert_eq!(shape_alpha(4.0, 1.0).unwrap(), 4.0);
        assert!(shape_alpha(-1.0, 1.0).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let (x, t, a): (f64, f64, f64) =
                (rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0), rng.gen_range(0.0..5.0));
            let lhs = shape_alpha(a * x, a * t).unwrap();
            let rhs = a * shape_alpha(x, t).unwrap();
            assert!((lhs - rhs).abs() < 1e-10 * (1.0 + rhs));
        }
    }

    #[test]
    fn velocity_and_derivative() {
        assert!((growth_velocity(0.0) - f64::sqrt(2.0)).abs() < 1e-15);
        // Stationary identity: with u = (ρ−λ)/√2 and λρ = 1 the derivative
        // equals (ρ−λ)/(ρ+λ).
        for lambda in [0.4, 1.0, 2.5] {
            let rho = 1.0 / lambda;
            let u = (rho - lambda) / f64::sqrt(2.0);
            let want = (rho - lambda) / (rho + lambda);
            assert!((growth_velocity_prime(u) - want).abs() < 1e-12);
        }
        // Centered finite differences as an independent oracle.
        let h = 1e-5;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let u: f64 = rng.gen_range(-4.0..4.0);
            let fd = (growth_velocity(u + h) - growth_velocity(u - h)) / (2.0 * h);
            assert!((fd - growth_velocity_prime(u)).abs() < 1e-8);
        }
    }

    #[test]
    fn limit_shape_values_and_rotation_identity() {
        assert!((limit_shape_f(0.0).unwrap() - f64::sqrt(2.0)).abs() < 1e-15);
        assert_eq!(limit_shape_f(1.0).unwrap(), 0.0);
        assert_eq!(limit_shape_f(-1.0).unwrap(), 0.0);
        assert!(limit_shape_f(1.1).is_err());
        // 2√(xt) = √(2(s² − z²)) = s·f(z/s) under rotation.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let p = PlanarPoint::new(rng.gen_range(0.01..10.0), rng.gen_range(0.01..10.0));
            let q = rotate(p);
            let alpha = shape_alpha(p.x, p.t).unwrap();
            assert!((alpha - (2.0 * (q.s * q.s - q.z * q.z)).sqrt()).abs() < 1e-10);
            assert!((alpha - q.s * limit_shape_f(q.z / q.s).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn burgers_branches_and_continuity() {
        let p = params(0.5, 1.0);
        assert_eq!(burgers_u(1.0, 2.0, p).unwrap(), 1.0);
        assert_eq!(burgers_u(4.0, 1.0, p).unwrap(), 0.5);
        assert!(burgers_u(1.0, 1.0, params(1.0, 1.0)).is_err());
        assert!(burgers_u(0.0, 1.0, p).is_err());
        // Continuity across both fan boundaries.
        let t = 1.0;
        for &x in &[t / (p.rho * p.rho), t / (p.lambda * p.lambda)] {
            let eps = 1e-9;
            let lo = burgers_u(x - eps, t, p).unwrap();
            let hi = burgers_u(x + eps, t, p).unwrap();
            assert!((lo - hi).abs() < 1e-8, "jump at x = {x}");
        }
        // λ = 0: the fan extends to infinity on the right.
        let p0 = params(0.0, 1.0);
        assert!((burgers_u(1e6, 1.0, p0).unwrap() - 1e-3).abs() < 1e-12);
    }

    #[test]
    fn characteristic_lines() {
        assert_eq!(characteristic(0.0, 5.0, params(1.0, 1.0)).unwrap(), 5.0);
        assert_eq!(characteristic(1.0, 4.0, params(2.0, 0.5)).unwrap(), 2.0);
        assert!(characteristic(1.0, 1.0, params(0.5, 1.0)).is_err());
        assert!(characteristic(-1.0, 1.0, params(1.0, 1.0)).is_err());
        // Slope matches the finite-difference derivative of g(u) = 1/u at λ.
        let lambda = 1.7;
        let h = 1e-6;
        let g = |u: f64| 1.0 / u;
        let slope = -(g(lambda + h) - g(lambda - h)) / (2.0 * h);
        let p = params(lambda, 1.0 / lambda);
        let from_line = characteristic(0.0, 1.0, p).unwrap();
        assert!((slope - from_line).abs() < 1e-7);
    }

    #[test]
    fn cdf_values_and_monotonicity() {
        let p = params(0.5, 1.0);
        assert_eq!(z_cdf(1.0, p).unwrap(), 0.0);
        assert_eq!(z_cdf(4.0, p).unwrap(), 1.0);
        assert!((z_cdf(2.0, p).unwrap() - (1.0 - 1.0 / f64::sqrt(2.0)) / 0.5).abs() < 1e-12);
        assert!(z_cdf(1.0, params(1.0, 1.0)).is_err());
        assert!(z_cdf(1.0, params(0.5, 0.0)).is_err());
        let mut prev = -1.0;
        for i in 0..500 {
            let r = 0.5 + i as f64 * 0.01;
            let v = z_cdf(r, p).unwrap();
            assert!((0.0..=1.0).contains(&v));
            assert!(v >= prev - 1e-15);
            prev = v;
        }
        // λ = 0: no upper support endpoint, but still a proper limit.
        let p0 = params(0.0, 1.0);
        assert!(z_cdf(1e8, p0).unwrap() < 1.0);
        assert!(z_cdf(1e8, p0).unwrap() > 0.9998);
    }

    #[test]
    fn cdf_agrees_with_burgers_at_unit_time() {
        for (lambda, rho) in [(0.5, 1.0), (0.0, 1.0), (0.3, 2.0)] {
            let p = params(lambda, rho);
            for i in 1..200 {
                let r = i as f64 * 0.05;
                if r <= rho * rho {
                    continue;
                }
                let via_u = (1.0 / rho - burgers_u(r, 1.0, p).unwrap()) / (1.0 / rho - lambda);
                let direct = z_cdf(r, p).unwrap();
                assert!((via_u - direct.min(1.0)).abs() < 1e-12, "r = {r}");
            }
        }
    }

    #[test]
    fn interface_slope() {
        assert_eq!(stationary_interface_slope(params(1.0, 1.0)).unwrap(), 0.0);
        assert!((stationary_interface_slope(params(0.5, 2.0)).unwrap() - 0.6).abs() < 1e-15);
        assert!(stationary_interface_slope(params(0.5, 1.0)).is_err());
        // Same number through the growth velocity derivative.
        for lambda in [0.4, 0.9, 1.8] {
            let p = params(lambda, 1.0 / lambda);
            let u = (p.rho - p.lambda) / f64::sqrt(2.0);
            assert!(
                (stationary_interface_slope(p).unwrap() - growth_velocity_prime(u)).abs() < 1e-12
            );
        }
    }
}
