//! Backward-Euler enthalpy solver for
//! `∂_t β_ε(u) − div(|Du|^{p−2} Du) = 0` with Dirichlet (any `p ≥ 2`) or
//! Neumann (`p = 2`) boundary data.
//!
//! Space is discretized by cell-centered finite volumes with two-point face
//! fluxes. Each step minimizes the strictly convex functional
//!
//! ```text
//! J(u) = Σ_i |cell| (B(u_i) − w_i^n u_i) + dt Σ_faces |face| d_f Φ(g_f) − dt Σ_{Neumann faces} |face| ψ u_i
//! ```
//!
//! whose gradient is the scheme residual. Iterates are Newton steps on `J`
//! followed by a backtracking line search.

pub mod data;
pub mod field;
pub mod linear;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::enthalpy::RegularizedEnthalpy;
use crate::error::{Error, Result};
use crate::geometry::{DomainGrid, Point};

pub use data::{check_declared_modulus, DataFunction, DeclaredModulus};
pub use field::SpaceTimeField;

use linear::SymmetricBuilder;

/// Isotropic flux `A(ξ) = a(|ξ|²) ξ` with potential `Φ` such that `Φ'(s) = a(s²) s`.
pub trait IsotropicCoefficient: Send + Sync + std::fmt::Debug {
    fn coefficient(&self, g2: f64) -> f64;
    fn potential(&self, g2: f64) -> f64;

    /// `d/ds [a(s²) s]` at `s² = g2`; the default differentiates numerically.
    fn slope(&self, g2: f64) -> f64 {
        let s = g2.sqrt();
        let h = 1e-6 * (1.0 + s);
        let f = |x: f64| self.coefficient(x * x) * x;
        (f(s + h) - f(s - h)) / (2.0 * h)
    }
}

/// `A(ξ) = (|ξ|² + δ_g²)^{(p−2)/2} ξ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PLaplacian {
    pub p: f64,
    pub grad_floor: f64,
}

impl IsotropicCoefficient for PLaplacian {
    fn coefficient(&self, g2: f64) -> f64 {
        if self.p == 2.0 {
            1.0
        } else {
            (g2 + self.grad_floor * self.grad_floor).powf(0.5 * (self.p - 2.0))
        }
    }

    fn potential(&self, g2: f64) -> f64 {
        if self.p == 2.0 {
            0.5 * g2
        } else {
            (g2 + self.grad_floor * self.grad_floor).powf(0.5 * self.p) / self.p
        }
    }

    fn slope(&self, g2: f64) -> f64 {
        if self.p == 2.0 {
            1.0
        } else {
            let d2 = self.grad_floor * self.grad_floor;
            (g2 + d2).powf(0.5 * (self.p - 4.0)) * ((self.p - 1.0) * g2 + d2)
        }
    }
}

/// Structure constants observed by sampling `|ξ|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructureConstants {
    /// `min A(ξ)·ξ / |ξ|^p`
    pub c_o: f64,
    /// `max |A(ξ)| / |ξ|^{p−1}`
    pub c_1: f64,
}

#[derive(Debug, Clone)]
pub struct FluxModel {
    p: f64,
    grad_floor: f64,
    custom: Option<Arc<dyn IsotropicCoefficient>>,
}

impl FluxModel {
    pub fn p_laplacian(p: f64, grad_floor: f64) -> Result<Self> {
        if !(p >= 2.0 && p.is_finite()) {
            return Err(Error::InvalidArgument(format!("p must be >= 2, got {p}")));
        }
        if !(grad_floor >= 0.0) {
            return Err(Error::InvalidArgument(format!("gradient floor must be >= 0, got {grad_floor}")));
        }
        Ok(Self { p, grad_floor, custom: None })
    }

    /// Default floor: zero for `p = 2`, `1e−8 · data_scale` otherwise.
    pub fn with_default_floor(p: f64, data_scale: f64) -> Result<Self> {
        let floor = if p == 2.0 { 0.0 } else { 1e-8 * data_scale.max(f64::MIN_POSITIVE) };
        Self::p_laplacian(p, floor)
    }

    /// Alternative isotropic coefficient; accepted only if its sampled
    /// structure constants satisfy `0 < C_o ≤ C_1 < ∞` with exponent `p`.
    pub fn with_coefficient(p: f64, coefficient: Arc<dyn IsotropicCoefficient>) -> Result<Self> {
        let model = Self { p, grad_floor: 0.0, custom: Some(coefficient) };
        let sc = model.structure_constants(1e-3, 1e3, 200);
        if !(sc.c_o > 0.0 && sc.c_1.is_finite() && sc.c_o <= sc.c_1) {
            return Err(Error::InvalidArgument(format!(
                "coefficient violates the growth bounds for p = {p} (C_o = {}, C_1 = {})",
                sc.c_o, sc.c_1
            )));
        }
        Ok(model)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn grad_floor(&self) -> f64 {
        self.grad_floor
    }

    pub fn coefficient(&self, g2: f64) -> f64 {
        match &self.custom {
            Some(c) => c.coefficient(g2),
            None => PLaplacian { p: self.p, grad_floor: self.grad_floor }.coefficient(g2),
        }
    }

    pub fn potential(&self, g2: f64) -> f64 {
        match &self.custom {
            Some(c) => c.potential(g2),
            None => PLaplacian { p: self.p, grad_floor: self.grad_floor }.potential(g2),
        }
    }

    /// Derivative of the scalar flux `s ↦ a(s²) s` at `s² = g2`.
    pub fn slope(&self, g2: f64) -> f64 {
        match &self.custom {
            Some(c) => c.slope(g2),
            None => PLaplacian { p: self.p, grad_floor: self.grad_floor }.slope(g2),
        }
    }

    pub fn flux(&self, xi: Point) -> Point {
        let a = self.coefficient(xi[0] * xi[0] + xi[1] * xi[1]);
        [a * xi[0], a * xi[1]]
    }

    /// Sample `|ξ|` log-uniformly on `[lo, hi]`.
    pub fn structure_constants(&self, lo: f64, hi: f64, samples: usize) -> StructureConstants {
        let mut c_o = f64::INFINITY;
        let mut c_1 = 0.0_f64;
        for i in 0..samples {
            let s = lo * (hi / lo).powf(i as f64 / (samples - 1).max(1) as f64);
            let a = self.coefficient(s * s);
            c_o = c_o.min(a * s * s / s.powf(self.p));
            c_1 = c_1.max(a * s / s.powf(self.p - 1.0));
        }
        StructureConstants { c_o, c_1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundaryCondition {
    Dirichlet { g: DataFunction },
    /// Prescribed outward-normal flux `A·n = ψ` with `|ψ| ≤ c2`.
    Neumann { psi: DataFunction, c2: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryData {
    pub condition: BoundaryCondition,
    pub initial: DataFunction,
    #[serde(default)]
    pub g_modulus: Option<DeclaredModulus>,
    #[serde(default)]
    pub initial_modulus: Option<DeclaredModulus>,
}

impl BoundaryData {
    pub fn dirichlet(g: DataFunction, initial: DataFunction) -> Self {
        Self { condition: BoundaryCondition::Dirichlet { g }, initial, g_modulus: None, initial_modulus: None }
    }

    pub fn neumann(psi: DataFunction, c2: f64, initial: DataFunction) -> Self {
        Self { condition: BoundaryCondition::Neumann { psi, c2 }, initial, g_modulus: None, initial_modulus: None }
    }

    pub fn is_dirichlet(&self) -> bool {
        matches!(self.condition, BoundaryCondition::Dirichlet { .. })
    }

    /// Check `|ψ| ≤ C_2` on every boundary face at `samples` times in `[0, t_final]`.
    pub fn check_neumann_bound(&self, grid: &DomainGrid, t_final: f64, samples: usize) -> Result<()> {
        if let BoundaryCondition::Neumann { psi, c2 } = &self.condition {
            for k in 0..=samples {
                let t = t_final * k as f64 / samples.max(1) as f64;
                for f in grid.boundary_faces() {
                    let v = psi.eval(f.center, t);
                    if v.abs() > *c2 * (1.0 + 1e-12) {
                        return Err(Error::InvalidArgument(format!(
                            "|psi| = {} exceeds C_2 = {c2} at {:?}, t = {t}",
                            v.abs(),
                            f.center
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub dt: f64,
    pub newton_tol: f64,
    pub max_iters: usize,
    /// Store every `stride`-th step (the final step is always stored).
    #[serde(default = "default_stride")]
    pub stride: usize,
    /// Return the last iterate instead of failing when `max_iters` is hit.
    #[serde(default)]
    pub allow_unconverged: bool,
}

fn default_stride() -> usize {
    1
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { dt: 1e-3, newton_tol: 1e-11, max_iters: 200, stride: 1, allow_unconverged: false }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.newton_tol > 0.0) || self.max_iters == 0 || self.stride == 0 {
            return Err(Error::InvalidArgument(format!("invalid solver configuration {self:?}")));
        }
        Ok(())
    }
}

/// Diagnostics for one implicit step.
#[derive(Debug, Clone, Default)]
pub struct StepStats {
    pub iterations: usize,
    /// Max-norm residual in enthalpy units at the returned iterate.
    pub residual: f64,
    /// `J(u_{k+1}) − J(u_k)` for every accepted iterate.
    pub energy_increments: Vec<f64>,
    /// Magnitude scale of `J` used for the round-off allowance.
    pub energy_scale: f64,
    pub converged: bool,
}

/// Grid, flux law, boundary data and regularized enthalpy.
#[derive(Debug, Clone)]
pub struct Problem {
    pub grid: Arc<DomainGrid>,
    pub flux: FluxModel,
    pub bc: BoundaryData,
    pub enthalpy: RegularizedEnthalpy,
}

struct FaceGeom {
    area: f64,
    h: f64,
    half: f64,
    vol: f64,
}

impl Problem {
    pub fn new(grid: Arc<DomainGrid>, flux: FluxModel, bc: BoundaryData, enthalpy: RegularizedEnthalpy) -> Result<Self> {
        if !bc.is_dirichlet() && flux.p() != 2.0 {
            return Err(Error::InvalidArgument(format!(
                "the Neumann problem is supported for p = 2 only, got p = {}",
                flux.p()
            )));
        }
        Ok(Self { grid, flux, bc, enthalpy })
    }

    fn geom(&self) -> FaceGeom {
        FaceGeom { area: self.grid.face_area(), h: self.grid.h(), half: 0.5 * self.grid.h(), vol: self.grid.cell_volume() }
    }

    pub fn initial_u(&self) -> Vec<f64> {
        (0..self.grid.len()).map(|c| self.bc.initial.eval(self.grid.center(c), 0.0)).collect()
    }

    pub fn enthalpy_of(&self, u: &[f64]) -> Vec<f64> {
        u.iter().map(|&s| self.enthalpy.beta(s)).collect()
    }

    /// `M = max{‖u_o‖_∞, ‖g‖_∞}` over cell centers, boundary faces and the given times.
    pub fn data_bound(&self, times: &[f64]) -> f64 {
        let mut m = self.initial_u().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if let BoundaryCondition::Dirichlet { g } = &self.bc.condition {
            for &t in times {
                for f in self.grid.boundary_faces() {
                    m = m.max(g.eval(f.center, t).abs());
                }
            }
        }
        m
    }

    /// Net flux into every cell at time `t`, in physical units.
    pub fn inflow(&self, u: &[f64], t: f64) -> Vec<f64> {
        let geo = self.geom();
        let mut inflow = vec![0.0; u.len()];
        for f in self.grid.interior_faces() {
            let g = (u[f.right] - u[f.left]) / geo.h;
            let q = self.flux.coefficient(g * g) * g * geo.area;
            inflow[f.left] += q;
            inflow[f.right] -= q;
        }
        for f in self.grid.boundary_faces() {
            inflow[f.cell] += match &self.bc.condition {
                BoundaryCondition::Dirichlet { g } => {
                    let gr = (g.eval(f.center, t) - u[f.cell]) / geo.half;
                    self.flux.coefficient(gr * gr) * gr * geo.area
                }
                BoundaryCondition::Neumann { psi, .. } => psi.eval(f.center, t) * geo.area,
            };
        }
        inflow
    }

    /// Step residual in enthalpy units: `β_ε(u) − w_old − dt/|cell| · inflow(u)`.
    pub fn step_residual(&self, u: &[f64], w_old: &[f64], t_new: f64, dt: f64) -> Vec<f64> {
        let geo = self.geom();
        let inflow = self.inflow(u, t_new);
        u.iter()
            .zip(w_old)
            .zip(&inflow)
            .map(|((&s, &w), &q)| self.enthalpy.beta(s) - w - dt / geo.vol * q)
            .collect()
    }

    /// Term-wise increment `J(u + d) − J(u)` and the magnitude scale of `J(u)`.
    fn energy_increment(&self, u: &[f64], d: &[f64], w_old: &[f64], t_new: f64, dt: f64) -> (f64, f64) {
        let geo = self.geom();
        let mut inc = 0.0;
        let mut scale = 0.0;
        for i in 0..u.len() {
            inc += geo.vol * (self.enthalpy.beta_primitive_increment(u[i], d[i]) - w_old[i] * d[i]);
            scale += geo.vol * (self.enthalpy.beta_primitive(u[i]).abs() + (w_old[i] * u[i]).abs());
        }
        let wgt = dt * geo.area * geo.h;
        for f in self.grid.interior_faces() {
            let g0 = (u[f.right] - u[f.left]) / geo.h;
            let g1 = (u[f.right] + d[f.right] - u[f.left] - d[f.left]) / geo.h;
            let p0 = self.flux.potential(g0 * g0);
            inc += wgt * (self.flux.potential(g1 * g1) - p0);
            scale += wgt * p0.abs();
        }
        let bw = dt * geo.area * geo.half;
        for f in self.grid.boundary_faces() {
            match &self.bc.condition {
                BoundaryCondition::Dirichlet { g } => {
                    let gv = g.eval(f.center, t_new);
                    let g0 = (gv - u[f.cell]) / geo.half;
                    let g1 = (gv - u[f.cell] - d[f.cell]) / geo.half;
                    let p0 = self.flux.potential(g0 * g0);
                    inc += bw * (self.flux.potential(g1 * g1) - p0);
                    scale += bw * p0.abs();
                }
                BoundaryCondition::Neumann { psi, .. } => {
                    let q = psi.eval(f.center, t_new) * geo.area * dt;
                    inc -= q * d[f.cell];
                    scale += (q * u[f.cell]).abs();
                }
            }
        }
        (inc, scale)
    }

    /// Frozen-coefficient Jacobian `diag(|cell| β_ε'(u)) + dt · L(a(u))`.
    fn linearization(&self, u: &[f64], t_new: f64, dt: f64) -> SymmetricBuilder {
        let geo = self.geom();
        let mut m = SymmetricBuilder::new(u.len());
        for (i, &s) in u.iter().enumerate() {
            m.add_diag(i, geo.vol * self.enthalpy.beta_deriv(s));
        }
        for f in self.grid.interior_faces() {
            let g = (u[f.right] - u[f.left]) / geo.h;
            m.add_edge(f.left, f.right, dt * geo.area * self.flux.slope(g * g) / geo.h);
        }
        if let BoundaryCondition::Dirichlet { g } = &self.bc.condition {
            for f in self.grid.boundary_faces() {
                let gr = (g.eval(f.center, t_new) - u[f.cell]) / geo.half;
                m.add_diag(f.cell, dt * geo.area * self.flux.slope(gr * gr) / geo.half);
            }
        }
        m
    }

    fn solve_linear(&self, m: &SymmetricBuilder, rhs: &[f64]) -> Result<Vec<f64>> {
        if self.grid.dim() == 1 {
            if let Some((l, d, up)) = m.tridiagonal() {
                return linear::solve_tridiagonal(&l, &d, &up, rhs);
            }
        }
        linear::solve_pcg(&m.to_csr(), rhs, 1e-13, 20 * rhs.len() + 100)
    }

    /// Advance `(u_old, w_old)` from `t_old` by `dt` with backward Euler.
    pub fn step_implicit(&self, u_old: &[f64], w_old: &[f64], t_old: f64, dt: f64, cfg: &SolverConfig) -> Result<(Vec<f64>, StepStats)> {
        let t_new = t_old + dt;
        let vol = self.grid.cell_volume();
        let mut u = u_old.to_vec();
        let mut stats = StepStats::default();
        let mut residual = self.step_residual(&u, w_old, t_new, dt);
        let mut rmax = max_abs(&residual);
        let mut iters = 0;
        while rmax > cfg.newton_tol {
            if iters >= cfg.max_iters {
                if cfg.allow_unconverged {
                    break;
                }
                return Err(Error::NonConvergence { iters, residual: rmax, time: t_new });
            }
            iters += 1;
            let m = self.linearization(&u, t_new, dt);
            let rhs: Vec<f64> = residual.iter().map(|r| -vol * r).collect();
            let delta = self.solve_linear(&m, &rhs)?;
            let slope: f64 = -rhs.iter().zip(&delta).map(|(a, b)| a * b).sum::<f64>();
            let mut alpha = 1.0;
            let mut accepted = None;
            for _ in 0..60 {
                let d: Vec<f64> = delta.iter().map(|v| alpha * v).collect();
                let (inc, scale) = self.energy_increment(&u, &d, w_old, t_new, dt);
                stats.energy_scale = scale;
                if inc <= 1e-4 * alpha * slope + 1e-13 * scale {
                    accepted = Some((d, inc));
                    break;
                }
                alpha *= 0.5;
            }
            let Some((d, inc)) = accepted else {
                if cfg.allow_unconverged {
                    break;
                }
                return Err(Error::NonConvergence { iters, residual: rmax, time: t_new });
            };
            for (ui, di) in u.iter_mut().zip(&d) {
                *ui += di;
            }
            stats.energy_increments.push(inc);
            residual = self.step_residual(&u, w_old, t_new, dt);
            rmax = max_abs(&residual);
        }
        stats.iterations = iters;
        stats.residual = rmax;
        stats.converged = rmax <= cfg.newton_tol;
        Ok((u, stats))
    }

    /// Run from the initial datum to `t_final`, storing every `stride`-th step.
    pub fn solve(&self, cfg: &SolverConfig, t_final: f64) -> Result<SpaceTimeField> {
        self.solve_with_stats(cfg, t_final).map(|(f, _)| f)
    }

    pub fn solve_with_stats(&self, cfg: &SolverConfig, t_final: f64) -> Result<(SpaceTimeField, Vec<StepStats>)> {
        cfg.validate()?;
        if !(t_final >= 0.0) {
            return Err(Error::InvalidArgument(format!("final time must be >= 0, got {t_final}")));
        }
        let mut field = SpaceTimeField::new(self.grid.clone());
        let mut u = self.initial_u();
        let mut w = self.enthalpy_of(&u);
        field.push(0.0, u.clone(), w.clone());
        let n_steps = {
            let n = t_final / cfg.dt;
            if (n - n.round()).abs() < 1e-9 * n.max(1.0) {
                n.round() as usize
            } else {
                n.ceil() as usize
            }
        };
        let mut stats = Vec::with_capacity(n_steps);
        let mut t = 0.0;
        for k in 1..=n_steps {
            let t_next = if k == n_steps { t_final } else { k as f64 * cfg.dt };
            let dt = t_next - t;
            let (u_new, s) = self.step_implicit(&u, &w, t, dt, cfg)?;
            u = u_new;
            w = self.enthalpy_of(&u);
            t = t_next;
            stats.push(s);
            if k % cfg.stride == 0 || k == n_steps {
                field.push(t, u.clone(), w.clone());
            }
        }
        Ok((field, stats))
    }

    /// Discrete weak-form residual of a stored solution against a test function:
    ///
    /// `Σ_i |cell| (w^N ζ^N − w^0 ζ^0) − Σ_n Σ_i |cell| w^n (ζ^{n+1} − ζ^n)
    ///  + Σ_n Δt_n [Σ_faces |face| d_f A_f · (Dζ)_f − Σ_{boundary} ζ_i · boundary inflow]`.
    ///
    /// The stored steps are taken as the time grid, so a field stored with
    /// stride 1 reproduces the scheme exactly and the residual is of the size
    /// of the nonlinear tolerance. Also returns the scale `Σ_n Σ_i |cell| |ζ_i^{n+1}|`.
    pub fn residual_check(&self, field: &SpaceTimeField, zeta: &dyn Fn(Point, f64) -> f64) -> (f64, f64) {
        let geo = self.geom();
        let n = field.n_steps();
        let z: Vec<Vec<f64>> = field
            .times
            .iter()
            .map(|&t| (0..self.grid.len()).map(|c| zeta(self.grid.center(c), t)).collect())
            .collect();
        let mut acc = 0.0;
        let mut scale = 0.0;
        let last = n - 1;
        for i in 0..self.grid.len() {
            acc += geo.vol * (field.w[last][i] * z[last][i] - field.w[0][i] * z[0][i]);
        }
        for s in 0..last {
            let dt = field.times[s + 1] - field.times[s];
            let u = &field.u[s + 1];
            let t = field.times[s + 1];
            for i in 0..self.grid.len() {
                acc -= geo.vol * field.w[s][i] * (z[s + 1][i] - z[s][i]);
                scale += geo.vol * z[s + 1][i].abs();
            }
            for f in self.grid.interior_faces() {
                let g = (u[f.right] - u[f.left]) / geo.h;
                let gz = (z[s + 1][f.right] - z[s + 1][f.left]) / geo.h;
                acc += dt * geo.area * geo.h * self.flux.coefficient(g * g) * g * gz;
            }
            for f in self.grid.boundary_faces() {
                let q = match &self.bc.condition {
                    BoundaryCondition::Dirichlet { g } => {
                        let gr = (g.eval(f.center, t) - u[f.cell]) / geo.half;
                        self.flux.coefficient(gr * gr) * gr * geo.area
                    }
                    BoundaryCondition::Neumann { psi, .. } => psi.eval(f.center, t) * geo.area,
                };
                acc -= dt * z[s + 1][f.cell] * q;
            }
        }
        (acc, scale)
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Outcome of the discrete maximum principle check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxPrincipleReport {
    pub data_bound: f64,
    pub max_abs_u: f64,
    /// `max |u| − M`
    pub margin: f64,
    pub pass: bool,
}

pub fn max_principle_check(problem: &Problem, field: &SpaceTimeField, tol: f64) -> Result<MaxPrincipleReport> {
    if !problem.bc.is_dirichlet() {
        return Err(Error::InvalidArgument("maximum principle check applies to Dirichlet runs".into()));
    }
    let data_bound = problem.data_bound(&field.times);
    let max_abs_u = field.max_abs_u();
    let margin = max_abs_u - data_bound;
    Ok(MaxPrincipleReport { data_bound, max_abs_u, margin, pass: margin <= tol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ShapeSpec;
    use approx::assert_abs_diff_eq;

    fn interval(n: usize) -> Arc<DomainGrid> {
        Arc::new(DomainGrid::build(&ShapeSpec::Interval { a: 0.0, b: 1.0 }, 1.0 / n as f64).unwrap())
    }

    #[test]
    fn flux_structure_constants_are_one() {
        for p in [2.0, 3.0, 4.5] {
            let f = FluxModel::p_laplacian(p, 0.0).unwrap();
            let sc = f.structure_constants(1e-3, 1e3, 100);
            assert_abs_diff_eq!(sc.c_o, 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(sc.c_1, 1.0, epsilon = 1e-12);
            let xi = [0.3, -0.4];
            let a = f.flux(xi);
            assert_abs_diff_eq!(a[0] * xi[0] + a[1] * xi[1], 0.5_f64.powf(p), epsilon = 1e-14);
        }
        assert!(FluxModel::p_laplacian(1.5, 0.0).is_err());
    }

    #[derive(Debug)]
    struct Saturating;
    impl IsotropicCoefficient for Saturating {
        fn coefficient(&self, g2: f64) -> f64 {
            1.0 + 1.0 / (1.0 + g2)
        }
        fn potential(&self, g2: f64) -> f64 {
            0.5 * (g2 + (1.0 + g2).ln())
        }
    }

    #[derive(Debug)]
    struct Vanishing;
    impl IsotropicCoefficient for Vanishing {
        fn coefficient(&self, g2: f64) -> f64 {
            (-g2).exp()
        }
        fn potential(&self, g2: f64) -> f64 {
            0.5 * (1.0 - (-g2).exp())
        }
    }

    #[test]
    fn custom_coefficient_hook() {
        let ok = FluxModel::with_coefficient(2.0, Arc::new(Saturating)).unwrap();
        let sc = ok.structure_constants(1e-3, 1e3, 50);
        assert!(sc.c_o >= 1.0 - 1e-12 && sc.c_1 <= 2.0 + 1e-12);
        assert!(FluxModel::with_coefficient(2.0, Arc::new(Vanishing)).is_err());
    }

    #[test]
    fn constant_state_is_steady() {
        let grid = interval(32);
        let r = RegularizedEnthalpy::new(1.0, 0.1).unwrap();
        let bc = BoundaryData::dirichlet(DataFunction::constant(0.7), DataFunction::constant(0.7));
        let pb = Problem::new(grid, FluxModel::p_laplacian(2.0, 0.0).unwrap(), bc, r).unwrap();
        let f = pb.solve(&SolverConfig { dt: 0.01, ..Default::default() }, 0.05).unwrap();
        assert_eq!(f.n_steps(), 6);
        for row in &f.u {
            for &v in row {
                assert_abs_diff_eq!(v, 0.7, epsilon = 1e-14);
            }
        }
        let rep = max_principle_check(&pb, &f, 1e-10).unwrap();
        assert!(rep.pass && rep.margin.abs() < 1e-14);
    }

    #[test]
    fn zero_final_time_keeps_initial_datum() {
        let grid = interval(16);
        let r = RegularizedEnthalpy::new(1.0, 0.1).unwrap();
        let bc = BoundaryData::dirichlet(DataFunction::constant(0.0), DataFunction::constant(2.0));
        let pb = Problem::new(grid, FluxModel::p_laplacian(2.0, 0.0).unwrap(), bc, r).unwrap();
        let f = pb.solve(&SolverConfig::default(), 0.0).unwrap();
        assert_eq!(f.n_steps(), 1);
        assert_eq!(f.u[0], vec![2.0; 16]);
    }

    #[test]
    fn neumann_zero_flux_conserves_enthalpy() {
        let grid = Arc::new(DomainGrid::build(&ShapeSpec::LShape { size: 1.0 }, 1.0 / 16.0).unwrap());
        let r = RegularizedEnthalpy::new(1.0, 0.05).unwrap();
        let init = DataFunction::LinearRamp { value: -0.5, gradient: [1.0, 0.6], origin: [0.0, 0.0], rate: 0.0 };
        let bc = BoundaryData::neumann(DataFunction::constant(0.0), 0.0, init);
        let pb = Problem::new(grid, FluxModel::p_laplacian(2.0, 0.0).unwrap(), bc, r).unwrap();
        let cfg = SolverConfig { dt: 1e-3, ..Default::default() };
        let f = pb.solve(&cfg, 0.01).unwrap();
        let e0 = f.total_enthalpy(0);
        for s in 1..f.n_steps() {
            let es = f.total_enthalpy(s);
            assert!((es - e0).abs() <= 1e-9 * e0.abs().max(1.0), "drift {}", es - e0);
        }
    }

    #[test]
    fn neumann_requires_p2() {
        let grid = interval(8);
        let r = RegularizedEnthalpy::new(1.0, 0.1).unwrap();
        let bc = BoundaryData::neumann(DataFunction::constant(0.0), 0.0, DataFunction::constant(0.0));
        assert!(Problem::new(grid, FluxModel::p_laplacian(3.0, 1e-8).unwrap(), bc, r).is_err());
    }

    #[test]
    fn neumann_bound_checked() {
        let grid = interval(8);
        let bc = BoundaryData::neumann(DataFunction::constant(0.5), 0.4, DataFunction::constant(0.0));
        assert!(bc.check_neumann_bound(&grid, 1.0, 4).is_err());
        let bc = BoundaryData::neumann(DataFunction::constant(0.4), 0.4, DataFunction::constant(0.0));
        assert!(bc.check_neumann_bound(&grid, 1.0, 4).is_ok());
    }

    #[test]
    fn enthalpy_totals() {
        let grid = Arc::new(DomainGrid::build(&ShapeSpec::Rectangle { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0 }, 0.125).unwrap());
        let r = RegularizedEnthalpy::new(1.0, 0.1).unwrap();
        for (c, expect) in [(0.6, 0.6), (-0.6, -1.6)] {
            let bc = BoundaryData::dirichlet(DataFunction::constant(c), DataFunction::constant(c));
            let pb = Problem::new(grid.clone(), FluxModel::p_laplacian(2.0, 0.0).unwrap(), bc, r).unwrap();
            let f = pb.solve(&SolverConfig::default(), 0.0).unwrap();
            assert_abs_diff_eq!(f.total_enthalpy(0), expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn corrupted_field_fails_max_principle() {
        let grid = interval(16);
        let r = RegularizedEnthalpy::new(1.0, 0.1).unwrap();
        let init = DataFunction::LinearRamp { value: 0.0, gradient: [1.0, 0.0], origin: [0.0, 0.0], rate: 0.0 };
        let bc = BoundaryData::dirichlet(DataFunction::constant(0.5), init);
        let pb = Problem::new(grid, FluxModel::p_laplacian(2.0, 0.0).unwrap(), bc, r).unwrap();
        let mut f = pb.solve(&SolverConfig { dt: 0.01, ..Default::default() }, 0.05).unwrap();
        let rep = max_principle_check(&pb, &f, 1e-10).unwrap();
        assert!(rep.pass, "{rep:?}");
        f.u[2][5] = 2.0 * rep.data_bound;
        assert!(!max_principle_check(&pb, &f, 1e-10).unwrap().pass);
    }
}
