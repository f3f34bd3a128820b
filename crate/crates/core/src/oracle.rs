//! Classical one-phase Stefan similarity solution on the half line.
//!
//! Material initially at the melting temperature `0` occupies `x > 0`; the wall
//! `x = 0` is held at `T_w > 0`. With unit conductivity and heat capacity the
//! melt front is `s(t) = 2λ√t` where
//!
//! ```text
//! λ e^{λ²} erf(λ) = St / √π,   St = T_w / ν.
//! ```

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OnePhaseStefan {
    pub wall_temperature: f64,
    pub nu: f64,
    pub lambda: f64,
}

fn transcendental(lambda: f64, stefan: f64) -> f64 {
    lambda * (lambda * lambda).exp() * libm::erf(lambda) - stefan / std::f64::consts::PI.sqrt()
}

/// Root of the transcendental equation by bisection to absolute width `tol`.
pub fn stefan_lambda(stefan: f64, tol: f64) -> Result<f64> {
    if !(stefan > 0.0 && stefan.is_finite()) || !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("need St > 0 and tol > 0 (St = {stefan}, tol = {tol})")));
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while transcendental(hi, stefan) < 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if transcendental(mid, stefan) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

impl OnePhaseStefan {
    pub fn new(wall_temperature: f64, nu: f64) -> Result<Self> {
        if !(nu > 0.0) {
            return Err(Error::InvalidArgument(format!("latent heat must be positive, got {nu}")));
        }
        let lambda = stefan_lambda(wall_temperature / nu, 1e-12)?;
        Ok(Self { wall_temperature, nu, lambda })
    }

    pub fn stefan_number(&self) -> f64 {
        self.wall_temperature / self.nu
    }

    pub fn interface(&self, t: f64) -> f64 {
        2.0 * self.lambda * t.max(0.0).sqrt()
    }

    /// Temperature; zero in the solid region.
    pub fn temperature(&self, x: f64, t: f64) -> f64 {
        if t <= 0.0 || x >= self.interface(t) {
            return 0.0;
        }
        self.wall_temperature * (1.0 - libm::erf(x / (2.0 * t.sqrt())) / libm::erf(self.lambda))
    }

    pub fn table(&self, times: &[f64]) -> Vec<SimilarityRow> {
        times
            .iter()
            .map(|&t| SimilarityRow { t, interface: self.interface(t), interface_speed: self.lambda / t.sqrt() })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimilarityRow {
    pub t: f64,
    pub interface: f64,
    pub interface_speed: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn lambda_solves_equation() {
        for st in [0.01, 0.1, 1.0, 10.0] {
            let l = stefan_lambda(st, 1e-13).unwrap();
            assert!(transcendental(l, st).abs() < 1e-10);
        }
        // small-St limit: λ ≈ √(St/2)
        let l = stefan_lambda(1e-6, 1e-15).unwrap();
        assert_abs_diff_eq!(l, (0.5e-6_f64).sqrt(), epsilon = 1e-9);
    }

    #[test]
    fn profile_satisfies_boundary_values() {
        let s = OnePhaseStefan::new(1.0, 1.0).unwrap();
        assert_abs_diff_eq!(s.lambda, 0.6200626333, epsilon = 1e-9);
        assert_abs_diff_eq!(s.temperature(0.0, 0.5), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.temperature(s.interface(0.5) * (1.0 - 1e-12), 0.5), 0.0, epsilon = 1e-10);
        // energy balance at the front: −u_x = ν ds/dt
        let t = 0.5;
        let x = s.interface(t);
        let dx = 1e-6;
        let ux = (s.temperature(x - dx, t) - s.temperature(x - 2.0 * dx, t)) / dx;
        assert_abs_diff_eq!(-ux, s.lambda / t.sqrt(), epsilon = 1e-4);
    }
}
