//! Both sides of the Caccioppoli-type energy inequalities, evaluated on stored
//! solutions for a level `k`, a truncation side and a tent cutoff.
//!
//! Quadrature is midpoint in space and right-endpoint in time: the sample at
//! stored step `n` carries the length of `(t_{n−1}, t_n]` that lies inside the
//! cylinder. Gradients of truncations are taken across faces, as in the scheme.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{cylinder_clip, ClippedCylinder, IntrinsicCylinder, Point};
use crate::solver::{BoundaryCondition, Problem, SpaceTimeField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn truncate(self, u: f64, k: f64) -> f64 {
        match self {
            Sign::Plus => (u - k).max(0.0),
            Sign::Minus => (k - u).max(0.0),
        }
    }

    pub fn is_plus(self) -> bool {
        self == Sign::Plus
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationLevel {
    pub k: f64,
    pub sign: Sign,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffKind {
    /// Vanishes on `∂K × time` only.
    SpaceOnly,
    /// Vanishes on the whole parabolic boundary.
    SpaceTime,
}

/// Tent cutoff equal to one on the inner cylinder of relative size `σ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cutoff {
    pub kind: CutoffKind,
    pub sigma: f64,
}

/// `(ζ, |Dζ|, |∂_t ζ^p|)` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffSample {
    pub zeta: f64,
    pub grad: f64,
    pub dt_zeta_p: f64,
}

impl Cutoff {
    pub fn new(kind: CutoffKind, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma < 1.0) {
            return Err(Error::InvalidArgument(format!("cutoff sigma must lie in (0, 1), got {sigma}")));
        }
        Ok(Self { kind, sigma })
    }

    /// Constant `c` in `|Dζ| ≤ c/((1−σ)r)` and `|∂_tζ^p| ≤ c/((1−σ)θr^p)`.
    pub fn constant(&self, p: f64) -> f64 {
        match self.kind {
            CutoffKind::SpaceOnly => 1.0,
            CutoffKind::SpaceTime => p.max(1.0),
        }
    }

    pub fn sample(&self, cyl: &IntrinsicCylinder, dim: usize, x: Point, t: f64) -> CutoffSample {
        let r = cyl.rho;
        let width = (1.0 - self.sigma) * r;
        let dist = (0..dim).map(|a| (x[a] - cyl.vertex[a]).abs()).fold(0.0_f64, f64::max);
        let sx = (r - dist) / width;
        let (zx, gx) = if sx <= 0.0 {
            (0.0, 0.0)
        } else if sx >= 1.0 {
            (1.0, 0.0)
        } else {
            (sx, 1.0 / width)
        };
        let (zt, dzt) = match self.kind {
            CutoffKind::SpaceOnly => (1.0, 0.0),
            CutoffKind::SpaceTime => {
                let (lo, _) = cyl.time_range();
                let tw = (1.0 - self.sigma) * cyl.span();
                let st = (t - lo) / tw;
                if st <= 0.0 {
                    (0.0, 0.0)
                } else if st >= 1.0 {
                    (1.0, 0.0)
                } else {
                    (st, 1.0 / tw)
                }
            }
        };
        let p = cyl.p;
        CutoffSample {
            zeta: zx * zt,
            grad: zt * gx,
            dt_zeta_p: if dzt > 0.0 { p * zx.powf(p) * zt.powf(p - 1.0) * dzt } else { 0.0 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Any level; keeps the latent-heat terms and the bottom-time terms.
    General,
    /// `k ≥ 0` for `+`, `k ≤ 0` for `−`; no latent-heat terms.
    SignRestricted,
    /// `−` side with `k ≥ 0`; keeps the mushy-region mass term.
    Singular,
    /// Plain p-Laplacian form with no restriction on the level.
    Plain,
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::General => "general",
            Variant::SignRestricted => "sign_restricted",
            Variant::Singular => "singular",
            Variant::Plain => "plain",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub variant: String,
    pub k: f64,
    pub sign: Sign,
    pub sigma: f64,
    pub cutoff_constant: f64,
    pub mu_plus: f64,
    pub mu_minus: f64,
    pub omega: f64,
    /// The level respects the Dirichlet datum on the lateral part of the cylinder.
    pub admissible: bool,
    pub lhs_sup_term: f64,
    pub lhs_grad_term: f64,
    pub lhs_singular_term: f64,
    pub rhs_grad_term: f64,
    pub rhs_time_term: f64,
    pub rhs_singular_term: f64,
    pub rhs_initial_term: f64,
    pub rhs_c2_term: f64,
    pub lhs_total: f64,
    pub rhs_total: f64,
    /// `lhs_total / rhs_total`; NaN when both vanish.
    pub gamma_observed: f64,
    pub degenerate: bool,
}

/// Time weights: length of `(t_{n−1}, t_n] ∩ (lo, hi)` for each stored step.
fn time_weights(times: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let mut w = vec![0.0; times.len()];
    for n in 1..times.len() {
        let a = times[n - 1].max(lo);
        let b = times[n].min(hi);
        w[n] = (b - a).max(0.0);
    }
    w
}

/// `(u − k)_±` at every sample of the clipped cylinder; cells outside `E` are never sampled
/// and count as zero.
pub fn truncate(field: &SpaceTimeField, level: &TruncationLevel, cyl: &IntrinsicCylinder) -> Vec<(usize, usize, f64)> {
    let clip = cylinder_clip(&field.grid, cyl, &field.times);
    clip.samples().map(|(c, s)| (c, s, level.sign.truncate(field.u[s][c], level.k))).collect()
}

/// Measure of `[u < k]` inside the cylinder.
pub fn sublevel_measure(field: &SpaceTimeField, cyl: &IntrinsicCylinder, k: f64) -> f64 {
    let clip = cylinder_clip(&field.grid, cyl, &field.times);
    let (lo, hi) = cyl.time_range();
    let tw = time_weights(&field.times, lo, hi);
    let vol = field.grid.cell_volume();
    clip.samples().filter(|&(c, s)| field.u[s][c] < k).map(|(_, s)| vol * tw[s]).sum()
}

/// Regularized latent-heat terms for one truncation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhiTerm {
    /// `∬ Ψ_k(u) |∂_t ζ^p|`
    pub interior: f64,
    /// `max_t ∫ Ψ_k(u) ζ^p`
    pub top: f64,
    /// `∫ Ψ_k(u) ζ^p` on the bottom slice.
    pub bottom: f64,
}

struct Sampler<'a> {
    field: &'a SpaceTimeField,
    cyl: &'a IntrinsicCylinder,
    cutoff: &'a Cutoff,
    clip: ClippedCylinder,
    tw: Vec<f64>,
    bottom: Option<usize>,
}

impl<'a> Sampler<'a> {
    fn new(field: &'a SpaceTimeField, cyl: &'a IntrinsicCylinder, cutoff: &'a Cutoff) -> Result<Self> {
        let clip = cylinder_clip(&field.grid, cyl, &field.times);
        if clip.is_empty() {
            return Err(Error::EmptyCylinder { radius: cyl.rho });
        }
        let (lo, hi) = cyl.time_range();
        let tw = time_weights(&field.times, lo, hi);
        let bottom = clip.steps.first().copied();
        Ok(Self { field, cyl, cutoff, clip, tw, bottom })
    }

    fn cut(&self, c: usize, s: usize) -> CutoffSample {
        self.cutoff.sample(self.cyl, self.field.grid.dim(), self.field.grid.center(c), self.field.times[s])
    }
}

pub fn phi_term(field: &SpaceTimeField, problem: &Problem, level: &TruncationLevel, cutoff: &Cutoff, cyl: &IntrinsicCylinder) -> Result<PhiTerm> {
    let sm = Sampler::new(field, cyl, cutoff)?;
    let vol = field.grid.cell_volume();
    let p = cyl.p;
    let psi = |c: usize, s: usize| problem.enthalpy.singular_integral(field.u[s][c], level.k, level.sign.is_plus());
    let mut out = PhiTerm { interior: 0.0, top: 0.0, bottom: 0.0 };
    for &s in &sm.clip.steps {
        let mut slice = 0.0;
        for &c in &sm.clip.cells {
            let z = sm.cut(c, s);
            let v = psi(c, s);
            slice += vol * v * z.zeta.powf(p);
            out.interior += vol * sm.tw[s] * v * z.dt_zeta_p;
        }
        out.top = out.top.max(slice);
        if Some(s) == sm.bottom {
            out.bottom = slice;
        }
    }
    Ok(out)
}

/// Sup and inf of the Dirichlet datum over boundary faces inside the cylinder.
fn lateral_datum_range(problem: &Problem, field: &SpaceTimeField, cyl: &IntrinsicCylinder, clip: &ClippedCylinder) -> Option<(f64, f64)> {
    let BoundaryCondition::Dirichlet { g } = &problem.bc.condition else { return None };
    let mut range: Option<(f64, f64)> = None;
    for f in field.grid.boundary_faces() {
        if !field.grid.in_cube(f.cell, cyl.vertex, cyl.rho) {
            continue;
        }
        let inside = (0..field.grid.dim()).all(|a| (f.center[a] - cyl.vertex[a]).abs() <= cyl.rho + 1e-9 * field.grid.h());
        if !inside {
            continue;
        }
        for &s in &clip.steps {
            let v = g.eval(f.center, field.times[s]);
            range = Some(match range {
                None => (v, v),
                Some((lo, hi)) => (lo.min(v), hi.max(v)),
            });
        }
    }
    range
}

pub fn caccioppoli_sides(
    problem: &Problem,
    field: &SpaceTimeField,
    level: &TruncationLevel,
    cutoff: &Cutoff,
    variant: Variant,
    cyl: &IntrinsicCylinder,
) -> Result<EnergyReport> {
    match variant {
        Variant::SignRestricted => {
            let ok = match level.sign {
                Sign::Plus => level.k >= 0.0,
                Sign::Minus => level.k <= 0.0,
            };
            if !ok {
                return Err(Error::InadmissibleLevel(format!(
                    "the sign-restricted estimate needs k >= 0 on the + side and k <= 0 on the - side (k = {}, {:?})",
                    level.k, level.sign
                )));
            }
        }
        Variant::Singular => {
            if level.sign != Sign::Minus || level.k < 0.0 {
                return Err(Error::InadmissibleLevel(format!(
                    "the singular estimate needs the - side and k >= 0 (k = {}, {:?})",
                    level.k, level.sign
                )));
            }
        }
        Variant::General | Variant::Plain => {}
    }
    if variant != Variant::General && cutoff.kind != CutoffKind::SpaceTime {
        return Err(Error::InvalidArgument(format!("the {} estimate needs a space-time cutoff", variant.name())));
    }
    evaluate(problem, field, level, cutoff, variant, cyl, None)
}

/// Energy sides for the Neumann problem with `p = 2`, including `C_2² ∬ ζ² χ_[(u−k)_± > 0]`.
pub fn neumann_energy_sides(
    problem: &Problem,
    field: &SpaceTimeField,
    level: &TruncationLevel,
    cutoff: &Cutoff,
    cyl: &IntrinsicCylinder,
) -> Result<EnergyReport> {
    if problem.flux.p() != 2.0 {
        return Err(Error::WrongP(problem.flux.p()));
    }
    let BoundaryCondition::Neumann { c2, .. } = problem.bc.condition else {
        return Err(Error::InvalidArgument("the Neumann estimate needs a Neumann run".into()));
    };
    evaluate(problem, field, level, cutoff, Variant::General, cyl, Some(c2))
}

fn evaluate(
    problem: &Problem,
    field: &SpaceTimeField,
    level: &TruncationLevel,
    cutoff: &Cutoff,
    variant: Variant,
    cyl: &IntrinsicCylinder,
    c2: Option<f64>,
) -> Result<EnergyReport> {
    let sm = Sampler::new(field, cyl, cutoff)?;
    let grid = &field.grid;
    let vol = grid.cell_volume();
    let area = grid.face_area();
    let h = grid.h();
    let p = cyl.p;
    let (k, sign) = (level.k, level.sign);
    let r = &problem.enthalpy;
    let dirichlet = problem.bc.is_dirichlet();

    let mut in_clip = vec![false; grid.len()];
    for &c in &sm.clip.cells {
        in_clip[c] = true;
    }
    let mut mu_plus = f64::NEG_INFINITY;
    let mut mu_minus = f64::INFINITY;
    for (c, s) in sm.clip.samples() {
        mu_plus = mu_plus.max(field.u[s][c]);
        mu_minus = mu_minus.min(field.u[s][c]);
    }
    let admissible = match lateral_datum_range(problem, field, cyl, &sm.clip) {
        None => true,
        Some((g_lo, g_hi)) => match sign {
            Sign::Plus => k >= g_hi,
            Sign::Minus => k <= g_lo,
        },
    };

    let with_phi = variant == Variant::General;
    let singular = variant == Variant::Singular;
    let mut lhs_sup = 0.0_f64;
    let mut lhs_sing = 0.0_f64;
    let mut lhs_sup_total = 0.0_f64;
    let mut lhs_grad = 0.0;
    let mut rhs_grad = 0.0;
    let mut rhs_time = 0.0;
    let mut rhs_sing = 0.0;
    let mut rhs_init = 0.0;
    let mut rhs_c2 = 0.0;
    for &s in &sm.clip.steps {
        let u = &field.u[s];
        let t = field.times[s];
        let w = sm.tw[s];
        let mut slice_sq = 0.0;
        let mut slice_sing = 0.0;
        for &c in &sm.clip.cells {
            let z = sm.cut(c, s);
            let v = sign.truncate(u[c], k);
            let zp = z.zeta.powf(p);
            slice_sq += vol * zp * v * v;
            rhs_grad += vol * w * v.powf(p) * z.grad.powf(p);
            rhs_time += vol * w * v * v * z.dt_zeta_p;
            if with_phi {
                let psi = r.singular_integral(u[c], k, sign.is_plus());
                slice_sing += vol * zp * psi;
                rhs_sing += vol * w * psi * z.dt_zeta_p;
            } else if singular {
                let mass = -r.h_eps(u[c]);
                slice_sing += vol * k * mass * zp;
                rhs_sing += vol * w * mass * (k - u[c]).max(0.0) * z.dt_zeta_p;
            }
            if let Some(c2) = c2 {
                if v > 0.0 {
                    rhs_c2 += vol * w * c2 * c2 * z.zeta * z.zeta;
                }
            }
        }
        lhs_sup = lhs_sup.max(slice_sq);
        lhs_sing = lhs_sing.max(slice_sing);
        lhs_sup_total = lhs_sup_total.max(slice_sq + slice_sing);
        if with_phi && Some(s) == sm.bottom {
            rhs_init = slice_sq + slice_sing;
        }
        if w == 0.0 {
            continue;
        }
        for f in grid.interior_faces() {
            if !(in_clip[f.left] && in_clip[f.right]) {
                continue;
            }
            let a = grid.center(f.left);
            let b = grid.center(f.right);
            let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
            let z = cutoff.sample(cyl, grid.dim(), mid, t);
            let g = (sign.truncate(u[f.right], k) - sign.truncate(u[f.left], k)) / h;
            lhs_grad += area * h * w * z.zeta.powf(p) * g.abs().powf(p);
        }
        if dirichlet {
            for f in grid.boundary_faces() {
                if !in_clip[f.cell] {
                    continue;
                }
                let z = cutoff.sample(cyl, grid.dim(), f.center, t);
                if z.zeta == 0.0 {
                    continue;
                }
                let g = sign.truncate(u[f.cell], k) / (0.5 * h);
                lhs_grad += area * 0.5 * h * w * z.zeta.powf(p) * g.powf(p);
            }
        }
    }
    let lhs_total = lhs_sup_total + lhs_grad;
    let rhs_total = rhs_grad + rhs_time + rhs_sing + rhs_init + rhs_c2;
    let degenerate = rhs_total == 0.0;
    let gamma_observed = if degenerate {
        if lhs_total == 0.0 {
            f64::NAN
        } else {
            f64::INFINITY
        }
    } else {
        lhs_total / rhs_total
    };
    Ok(EnergyReport {
        variant: variant.name().to_string(),
        k,
        sign,
        sigma: cutoff.sigma,
        cutoff_constant: cutoff.constant(p),
        mu_plus,
        mu_minus,
        omega: mu_plus - mu_minus,
        admissible,
        lhs_sup_term: lhs_sup,
        lhs_grad_term: lhs_grad,
        lhs_singular_term: lhs_sing,
        rhs_grad_term: rhs_grad,
        rhs_time_term: rhs_time,
        rhs_singular_term: rhs_sing,
        rhs_initial_term: rhs_init,
        rhs_c2_term: rhs_c2,
        lhs_total,
        rhs_total,
        gamma_observed,
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{DomainGrid, ShapeSpec};
    use approx::assert_abs_diff_eq;

    #[test]
    fn cutoff_profile() {
        let cyl = IntrinsicCylinder::backward([0.5, 0.0], 1.0, 0.4, 1.0, 2.0).unwrap();
        let cut = Cutoff::new(CutoffKind::SpaceTime, 0.5).unwrap();
        let inner = cut.sample(&cyl, 1, [0.6, 0.0], 0.99);
        assert_eq!(inner.zeta, 1.0);
        assert_eq!(inner.grad, 0.0);
        let edge = cut.sample(&cyl, 1, [0.9, 0.0], 0.99);
        assert_eq!(edge.zeta, 0.0);
        let ramp = cut.sample(&cyl, 1, [0.8, 0.0], 0.99);
        assert_abs_diff_eq!(ramp.zeta, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(ramp.grad, 1.0 / 0.2, epsilon = 1e-12);
        // span 0.16, ramp over the first 0.08
        let early = cut.sample(&cyl, 1, [0.5, 0.0], 0.84 + 0.04);
        assert_abs_diff_eq!(early.zeta, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(early.dt_zeta_p, 2.0 * 0.5 / 0.08, epsilon = 1e-9);
        assert!(Cutoff::new(CutoffKind::SpaceOnly, 1.0).is_err());
    }

    #[test]
    fn time_weights_cover_interval() {
        let times = [0.0, 0.1, 0.2, 0.3, 0.4];
        let w = time_weights(&times, 0.15, 0.4);
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(w[2], 0.05, epsilon = 1e-15);
    }

    #[test]
    fn sublevel_counts_linear_profile() {
        let grid = std::sync::Arc::new(DomainGrid::build(&ShapeSpec::Interval { a: 0.0, b: 1.0 }, 1.0 / 64.0).unwrap());
        let mut f = SpaceTimeField::new(grid.clone());
        for n in 0..=10 {
            let u: Vec<f64> = (0..grid.len()).map(|c| grid.center(c)[0]).collect();
            f.push(n as f64 * 0.01, u.clone(), u);
        }
        let cyl = IntrinsicCylinder::backward([0.5, 0.0], 0.1, 0.25, 1.0, 2.0).unwrap();
        let full = sublevel_measure(&f, &cyl, 10.0);
        assert_abs_diff_eq!(full, 0.5 * 0.0625, epsilon = 1e-12);
        assert_eq!(sublevel_measure(&f, &cyl, 0.0), 0.0);
        let half = sublevel_measure(&f, &cyl, 0.5);
        assert!((half - 0.5 * full).abs() <= grid.h() * 0.0625 + 1e-12);
    }
}
