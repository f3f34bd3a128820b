//! Enthalpy graph of the single-jump Stefan problem and its mollified
//! regularization.
//!
//! The graph `β` is `s ↦ s` for `s > 0`, `s ↦ s − ν` for `s < 0`, and the
//! vertical segment `[−ν, 0]` at `s = 0`. The regularization replaces the
//! Heaviside-type jump `H` by `H_ε = −ν (1 − K(s/ε))` where `K` is the
//! cumulative integral of an even polynomial bump on `[−1, 1]`. Every kernel
//! quantity used downstream (density, cumulative, and the integral of the
//! cumulative) is a closed-form polynomial, so no quadrature happens inside
//! the solver loop.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Value of the (possibly set-valued) enthalpy graph at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GraphValue {
    Single(f64),
    /// Closed interval `[lo, hi]`.
    Interval(f64, f64),
}

impl GraphValue {
    pub fn lower(&self) -> f64 {
        match *self {
            GraphValue::Single(v) => v,
            GraphValue::Interval(lo, _) => lo,
        }
    }

    pub fn upper(&self) -> f64 {
        match *self {
            GraphValue::Single(v) => v,
            GraphValue::Interval(_, hi) => hi,
        }
    }
}

/// The maximal monotone graph `β` with latent heat `ν`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnthalpyGraph {
    nu: f64,
}

impl EnthalpyGraph {
    pub fn new(nu: f64) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "latent heat must be positive, got {nu}"
            )));
        }
        Ok(Self { nu })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn eval(&self, s: f64) -> GraphValue {
        if s > 0.0 {
            GraphValue::Single(s)
        } else if s < 0.0 {
            GraphValue::Single(s - self.nu)
        } else {
            GraphValue::Interval(-self.nu, 0.0)
        }
    }
}

/// Even, compactly supported bump on `[−1, 1]` with closed-form integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MollifierKernel {
    /// `φ(t) = 15/16 (1 − t²)²`
    #[default]
    Biweight,
    /// `φ(t) = 35/32 (1 − t²)³`
    Triweight,
}

impl MollifierKernel {
    /// Kernel density `φ(t)`.
    pub fn density(&self, t: f64) -> f64 {
        if t.abs() >= 1.0 {
            return 0.0;
        }
        let a = 1.0 - t * t;
        match self {
            MollifierKernel::Biweight => 15.0 / 16.0 * a * a,
            MollifierKernel::Triweight => 35.0 / 32.0 * a * a * a,
        }
    }

    /// Cumulative `K(t) = ∫_{−1}^t φ`; `K(−1) = 0`, `K(0) = 1/2`, `K(1) = 1`.
    pub fn cdf(&self, t: f64) -> f64 {
        if t <= -1.0 {
            return 0.0;
        }
        if t >= 1.0 {
            return 1.0;
        }
        let t2 = t * t;
        match self {
            MollifierKernel::Biweight => {
                0.5 + 15.0 / 16.0 * t * (1.0 - t2 * (2.0 / 3.0 - t2 / 5.0))
            }
            MollifierKernel::Triweight => {
                0.5 + 35.0 / 32.0 * t * (1.0 - t2 * (1.0 - t2 * (3.0 / 5.0 - t2 / 7.0)))
            }
        }
    }

    /// `C(t) = ∫_{−1}^t K`. Linear with unit slope beyond `t = 1`, where `C(1) = 1`.
    pub fn cdf_integral(&self, t: f64) -> f64 {
        if t <= -1.0 {
            return 0.0;
        }
        if t >= 1.0 {
            return t;
        }
        let t2 = t * t;
        match self {
            MollifierKernel::Biweight => {
                0.5 * t + 15.0 / 16.0 * t2 * (0.5 - t2 * (1.0 / 6.0 - t2 / 30.0)) + 5.0 / 32.0
            }
            MollifierKernel::Triweight => {
                0.5 * t
                    + 35.0 / 32.0 * t2 * (0.5 - t2 * (0.25 - t2 * (0.1 - t2 / 56.0)))
                    + 35.0 / 256.0
            }
        }
    }
}

/// `β_ε(s) = s + H_ε(s)`, the strictly increasing approximation of `β`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularizedEnthalpy {
    graph: EnthalpyGraph,
    eps: f64,
    kernel: MollifierKernel,
}

impl RegularizedEnthalpy {
    pub fn new(nu: f64, eps: f64) -> Result<Self> {
        Self::with_kernel(nu, eps, MollifierKernel::default())
    }

    pub fn with_kernel(nu: f64, eps: f64, kernel: MollifierKernel) -> Result<Self> {
        let graph = EnthalpyGraph::new(nu)?;
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "mollification width must lie in (0, 1), got {eps}"
            )));
        }
        Ok(Self { graph, eps, kernel })
    }

    pub fn graph(&self) -> EnthalpyGraph {
        self.graph
    }

    pub fn nu(&self) -> f64 {
        self.graph.nu
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn kernel(&self) -> MollifierKernel {
        self.kernel
    }

    /// `H_ε(s) = −ν (1 − K(s/ε))`, ranging over `[−ν, 0]`.
    pub fn h_eps(&self, s: f64) -> f64 {
        -self.graph.nu * (1.0 - self.kernel.cdf(s / self.eps))
    }

    /// `H_ε'(s) = ν φ(s/ε) / ε`.
    pub fn h_eps_deriv(&self, s: f64) -> f64 {
        self.graph.nu * self.kernel.density(s / self.eps) / self.eps
    }

    /// `G(s) = ∫_0^s H_ε`.
    pub fn h_eps_primitive(&self, s: f64) -> f64 {
        let k = self.kernel;
        let c0 = k.cdf_integral(0.0);
        -self.graph.nu * (s - self.eps * (k.cdf_integral(s / self.eps) - c0))
    }

    pub fn beta(&self, s: f64) -> f64 {
        s + self.h_eps(s)
    }

    pub fn beta_deriv(&self, s: f64) -> f64 {
        1.0 + self.h_eps_deriv(s)
    }

    /// Convex primitive `B(s) = ∫_0^s β_ε`.
    pub fn beta_primitive(&self, s: f64) -> f64 {
        0.5 * s * s + self.h_eps_primitive(s)
    }

    /// Increment `B(s + d) − B(s)` evaluated without forming both primitives
    /// where the kernel is inactive.
    pub fn beta_primitive_increment(&self, s: f64, d: f64) -> f64 {
        let quad = d * (s + 0.5 * d);
        let lo = s.min(s + d);
        let hi = s.max(s + d);
        let jump = if lo >= self.eps {
            0.0
        } else if hi <= -self.eps {
            -self.graph.nu * d
        } else {
            self.h_eps_primitive(s + d) - self.h_eps_primitive(s)
        };
        quad + jump
    }

    /// Unique `s` with `|β_ε(s) − w| ≤ tol`.
    ///
    /// Closed form outside the mollification zone, bisection inside it.
    pub fn beta_inverse(&self, w: f64, tol: f64) -> Result<f64> {
        if !(tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "inversion tolerance must be positive, got {tol}"
            )));
        }
        let eps = self.eps;
        let nu = self.graph.nu;
        if w >= eps {
            return Ok(w);
        }
        if w <= -eps - nu {
            return Ok(w + nu);
        }
        let (mut lo, mut hi) = (-eps, eps);
        let mut mid = 0.5 * (lo + hi);
        for _ in 0..200 {
            mid = 0.5 * (lo + hi);
            let r = self.beta(mid) - w;
            if r.abs() <= tol {
                break;
            }
            if r > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= f64::EPSILON * eps {
                break;
            }
        }
        Ok(mid)
    }

    /// `Ψ_k(u) = ±∫_k^u H_ε'(s) (s − k)_± ds` for the chosen truncation side.
    ///
    /// Both signs reduce to `H_ε(u)(u − k) − G(u) + G(k)` restricted to the side
    /// of `k` where the truncation is active; the result is non-negative.
    pub fn singular_integral(&self, u: f64, k: f64, plus: bool) -> f64 {
        let active = if plus { u > k } else { u < k };
        if !active {
            return 0.0;
        }
        let lo = u.min(k);
        let hi = u.max(k);
        if lo >= self.eps || hi <= -self.eps {
            return 0.0;
        }
        let v = self.h_eps(u) * (u - k) - self.h_eps_primitive(u) + self.h_eps_primitive(k);
        v.max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn reg() -> RegularizedEnthalpy {
        RegularizedEnthalpy::new(1.0, 0.1).unwrap()
    }

    #[test]
    fn graph_branches() {
        let g = EnthalpyGraph::new(1.0).unwrap();
        assert_eq!(g.eval(2.0), GraphValue::Single(2.0));
        assert_eq!(g.eval(-0.5), GraphValue::Single(-1.5));
        assert_eq!(g.eval(0.0), GraphValue::Interval(-1.0, 0.0));
        assert!(EnthalpyGraph::new(0.0).is_err());
    }

    #[test]
    fn kernel_cdf_anchors() {
        for k in [MollifierKernel::Biweight, MollifierKernel::Triweight] {
            assert_abs_diff_eq!(k.cdf(-1.0), 0.0);
            assert_abs_diff_eq!(k.cdf(0.0), 0.5, epsilon = 1e-15);
            assert_abs_diff_eq!(k.cdf(1.0), 1.0);
            assert_abs_diff_eq!(k.cdf(1.0 - 1e-12), 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(k.cdf(-1.0 + 1e-12), 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(k.cdf_integral(1.0 - 1e-12), 1.0, epsilon = 1e-11);
            assert_abs_diff_eq!(k.cdf_integral(-1.0 + 1e-12), 0.0, epsilon = 1e-11);
            for i in 0..=100 {
                let t = -1.0 + 0.02 * i as f64;
                assert_abs_diff_eq!(k.cdf(-t), 1.0 - k.cdf(t), epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn h_eps_examples() {
        let r = reg();
        assert_abs_diff_eq!(r.h_eps(0.1), 0.0);
        assert_abs_diff_eq!(r.h_eps(-0.1), -1.0);
        assert_abs_diff_eq!(r.h_eps(0.0), -0.5, epsilon = 1e-15);
        assert_eq!(r.h_eps_deriv(0.2), 0.0);
    }

    #[test]
    fn h_eps_deriv_integrates_to_nu() {
        // composite Simpson on [−ε, ε]; the integrand is a polynomial of degree 4
        for k in [MollifierKernel::Biweight, MollifierKernel::Triweight] {
            let r = RegularizedEnthalpy::with_kernel(1.0, 0.1, k).unwrap();
            let n = 2000;
            let a = -0.1;
            let step = 0.2 / n as f64;
            let mut acc = r.h_eps_deriv(a) + r.h_eps_deriv(0.1);
            for i in 1..n {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                acc += w * r.h_eps_deriv(a + i as f64 * step);
            }
            assert_abs_diff_eq!(acc * step / 3.0, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn h_eps_deriv_matches_central_difference() {
        let r = reg();
        let d = 1e-6;
        let fd = (r.h_eps(0.03 + d) - r.h_eps(0.03 - d)) / (2.0 * d);
        assert_abs_diff_eq!(fd, r.h_eps_deriv(0.03), epsilon = 1e-6);
    }

    #[test]
    fn beta_examples() {
        let r = reg();
        assert_eq!(r.beta(3.0), 3.0);
        assert_eq!(r.beta(-2.0), -3.0);
        assert_abs_diff_eq!(r.beta(0.0), -0.5, epsilon = 1e-15);
    }

    #[test]
    fn inverse_examples() {
        let r = reg();
        assert_eq!(r.beta_inverse(3.0, 1e-12).unwrap(), 3.0);
        assert_eq!(r.beta_inverse(-3.0, 1e-12).unwrap(), -2.0);
        let s = r.beta_inverse(r.beta(0.03), 1e-12).unwrap();
        assert_abs_diff_eq!(s, 0.03, epsilon = 1e-12);
        assert!(matches!(r.beta_inverse(0.0, 0.0), Err(Error::InvalidArgument(_))));
        assert!(r.beta_inverse(0.0, -1.0).is_err());
    }

    #[test]
    fn primitive_matches_quadrature() {
        // Simpson oracle for G(s) = ∫_0^s H_ε
        let r = reg();
        for &s in &[-0.3, -0.1, -0.05, 0.0, 0.02, 0.1, 0.4] {
            let n = 4000;
            let step = s / n as f64;
            let mut acc = r.h_eps(0.0) + r.h_eps(s);
            for i in 1..n {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                acc += w * r.h_eps(i as f64 * step);
            }
            let q = acc * step / 3.0;
            assert_abs_diff_eq!(r.h_eps_primitive(s), q, epsilon = 1e-10);
        }
    }

    #[test]
    fn primitive_increment_consistent() {
        let r = reg();
        for &(s, d) in &[(0.5, 0.1), (-0.5, -0.2), (-0.05, 0.12), (0.3, -0.35)] {
            let direct = r.beta_primitive(s + d) - r.beta_primitive(s);
            assert_abs_diff_eq!(r.beta_primitive_increment(s, d), direct, epsilon = 1e-13);
        }
    }

    #[test]
    fn singular_integral_matches_quadrature() {
        let r = reg();
        let cases: [(f64, f64, bool); 4] = [(0.08, -0.05, true), (-0.08, 0.05, false), (0.2, -0.2, true), (-0.3, 0.0, false)];
        for &(u, k, plus) in &cases {
            let n = 20000;
            let (a, b) = (u.min(k), u.max(k));
            let step = (b - a) / n as f64;
            let f = |s: f64| {
                let t = if plus { (s - k).max(0.0) } else { (k - s).max(0.0) };
                r.h_eps_deriv(s) * t
            };
            let mut acc = f(a) + f(b);
            for i in 1..n {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                acc += w * f(a + i as f64 * step);
            }
            let q = acc * step / 3.0;
            assert_abs_diff_eq!(r.singular_integral(u, k, plus), q, epsilon = 1e-9);
        }
        assert_eq!(r.singular_integral(0.5, 0.2, true), 0.0);
        assert_eq!(r.singular_integral(-0.1, 0.2, true), 0.0);
    }

    #[test]
    fn kernel_independence_outside_zone() {
        let a = RegularizedEnthalpy::with_kernel(1.0, 0.05, MollifierKernel::Biweight).unwrap();
        let b = RegularizedEnthalpy::with_kernel(1.0, 0.05, MollifierKernel::Triweight).unwrap();
        for &s in &[-2.0, -0.05, 0.05, 1.0] {
            assert_abs_diff_eq!(a.beta(s), b.beta(s), epsilon = 1e-15);
        }
        // inside the zone the two shapes differ by at most ν
        for i in 0..=20 {
            let s = -0.05 + 0.005 * i as f64;
            assert!((a.beta(s) - b.beta(s)).abs() <= 1.0);
        }
    }
}
