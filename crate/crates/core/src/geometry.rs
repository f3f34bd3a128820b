//! Rectilinear domains, the measure-density condition (G), and intrinsic
//! space-time cylinders.
//!
//! Domains are cell-centered: every active cell of an axis-aligned bounding
//! box carries one node at its center. Cubes `K_ρ(x_o)` are axis-aligned with
//! half-side `ρ`, and every measure is computed by exact cell/cube overlap.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Point in the plane; one-dimensional domains use only the first entry.
pub type Point = [f64; 2];

/// Shape descriptor used by experiment configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum ShapeSpec {
    /// 1D interval `[a, b]`.
    Interval { a: f64, b: f64 },
    /// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
    Rectangle { x0: f64, x1: f64, y0: f64, y1: f64 },
    /// `[0, size]²` minus its upper-right quadrant; reentrant corner at `(size/2, size/2)`.
    LShape { size: f64 },
    /// Unit square minus `[1 − width, 1] × [1 − depth, 1]`.
    NotchedCorner { width: f64, depth: f64 },
    /// Explicit mask on `[0, h·ncols] × [0, h·nrows]`; `'#'` marks an
    /// included cell and the first row is the top of the box.
    Custom { rows: Vec<String> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Interior,
    /// Cell sharing a face with the exterior or the bounding box.
    Lateral,
}

/// Outward side of a boundary face.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Side {
    pub axis: usize,
    pub positive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteriorFace {
    pub left: usize,
    pub right: usize,
    pub axis: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryFace {
    pub cell: usize,
    pub side: Side,
    pub center: Point,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certification {
    pub alpha_star: f64,
    pub rho_bar: f64,
    /// Lateral node attaining the largest measure ratio.
    pub worst_node: usize,
}

#[derive(Debug, Clone)]
pub struct DomainGrid {
    dim: usize,
    h: f64,
    origin: Point,
    shape: [usize; 2],
    /// Box cell -> active index.
    active: Vec<Option<usize>>,
    /// Active index -> (ix, iy).
    cells: Vec<[usize; 2]>,
    kinds: Vec<NodeKind>,
    interior_faces: Vec<InteriorFace>,
    boundary_faces: Vec<BoundaryFace>,
    spec: ShapeSpec,
    certification: Option<Certification>,
}

fn cells_along(len: f64, h: f64, what: &str) -> Result<usize> {
    let n = (len / h).round();
    if !(n >= 1.0) || ((n * h - len).abs() > 1e-9 * len.max(1.0)) {
        return Err(Error::InvalidArgument(format!(
            "{what} of length {len} is not an integer multiple of h = {h}"
        )));
    }
    Ok(n as usize)
}

fn require_feature(len: f64, h: f64, what: &str) -> Result<()> {
    if len < 2.0 * h - 1e-12 {
        return Err(Error::ResolutionTooCoarse(format!(
            "{what} = {len} is below 2h = {}",
            2.0 * h
        )));
    }
    Ok(())
}

impl DomainGrid {
    pub fn build(spec: &ShapeSpec, h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidArgument(format!("mesh width must be positive, got {h}")));
        }
        let (dim, origin, shape, mask): (usize, Point, [usize; 2], Vec<bool>) = match spec {
            ShapeSpec::Interval { a, b } => {
                if !(b > a) {
                    return Err(Error::InvalidArgument(format!("empty interval [{a}, {b}]")));
                }
                require_feature(b - a, h, "interval length")?;
                let nx = cells_along(b - a, h, "interval")?;
                (1, [*a, 0.0], [nx, 1], vec![true; nx])
            }
            ShapeSpec::Rectangle { x0, x1, y0, y1 } => {
                if !(x1 > x0 && y1 > y0) {
                    return Err(Error::InvalidArgument("degenerate rectangle".into()));
                }
                require_feature(x1 - x0, h, "rectangle width")?;
                require_feature(y1 - y0, h, "rectangle height")?;
                let nx = cells_along(x1 - x0, h, "rectangle width")?;
                let ny = cells_along(y1 - y0, h, "rectangle height")?;
                (2, [*x0, *y0], [nx, ny], vec![true; nx * ny])
            }
            ShapeSpec::LShape { size } => {
                if !(*size > 0.0) {
                    return Err(Error::InvalidArgument("L-shape size must be positive".into()));
                }
                require_feature(0.5 * size, h, "L-shape arm width")?;
                let n = cells_along(*size, h, "L-shape side")?;
                let half = 0.5 * size;
                let mut mask = vec![false; n * n];
                for iy in 0..n {
                    for ix in 0..n {
                        let x = (ix as f64 + 0.5) * h;
                        let y = (iy as f64 + 0.5) * h;
                        mask[iy * n + ix] = !(x > half && y > half);
                    }
                }
                (2, [0.0, 0.0], [n, n], mask)
            }
            ShapeSpec::NotchedCorner { width, depth } => {
                if !(*width > 0.0 && *width < 1.0 && *depth > 0.0 && *depth < 1.0) {
                    return Err(Error::InvalidArgument("notch must lie strictly inside the unit square".into()));
                }
                require_feature(*width, h, "notch width")?;
                require_feature(*depth, h, "notch depth")?;
                require_feature(1.0 - width, h, "remaining width")?;
                require_feature(1.0 - depth, h, "remaining depth")?;
                let n = cells_along(1.0, h, "unit square side")?;
                let mut mask = vec![false; n * n];
                for iy in 0..n {
                    for ix in 0..n {
                        let x = (ix as f64 + 0.5) * h;
                        let y = (iy as f64 + 0.5) * h;
                        mask[iy * n + ix] = !(x > 1.0 - width && y > 1.0 - depth);
                    }
                }
                (2, [0.0, 0.0], [n, n], mask)
            }
            ShapeSpec::Custom { rows } => {
                let ny = rows.len();
                let nx = rows.first().map(|r| r.chars().count()).unwrap_or(0);
                if nx == 0 || rows.iter().any(|r| r.chars().count() != nx) {
                    return Err(Error::InvalidArgument("custom mask rows must be non-empty and equal length".into()));
                }
                let mut mask = vec![false; nx * ny];
                for (r, row) in rows.iter().enumerate() {
                    let iy = ny - 1 - r;
                    for (ix, ch) in row.chars().enumerate() {
                        mask[iy * nx + ix] = ch == '#';
                    }
                }
                let dim = if ny == 1 { 1 } else { 2 };
                (dim, [0.0, 0.0], [nx, ny], mask)
            }
        };
        Self::from_mask(dim, h, origin, shape, &mask, spec.clone())
    }

    fn from_mask(dim: usize, h: f64, origin: Point, shape: [usize; 2], mask: &[bool], spec: ShapeSpec) -> Result<Self> {
        let [nx, ny] = shape;
        let mut active = vec![None; nx * ny];
        let mut cells = Vec::new();
        for iy in 0..ny {
            for ix in 0..nx {
                if mask[iy * nx + ix] {
                    active[iy * nx + ix] = Some(cells.len());
                    cells.push([ix, iy]);
                }
            }
        }
        if cells.is_empty() {
            return Err(Error::InvalidArgument("domain mask is empty".into()));
        }
        let mut grid = DomainGrid {
            dim,
            h,
            origin,
            shape,
            active,
            cells,
            kinds: Vec::new(),
            interior_faces: Vec::new(),
            boundary_faces: Vec::new(),
            spec,
            certification: None,
        };
        let components = grid.count_components();
        if components != 1 {
            return Err(Error::DisconnectedDomain { components });
        }
        grid.classify();
        Ok(grid)
    }

    fn neighbor(&self, cell: usize, side: Side) -> Option<usize> {
        let [ix, iy] = self.cells[cell];
        let [nx, ny] = self.shape;
        let (jx, jy) = match (side.axis, side.positive) {
            (0, true) if ix + 1 < nx => (ix + 1, iy),
            (0, false) if ix > 0 => (ix - 1, iy),
            (1, true) if iy + 1 < ny => (ix, iy + 1),
            (1, false) if iy > 0 => (ix, iy - 1),
            _ => return None,
        };
        self.active[jy * nx + jx]
    }

    fn sides(&self) -> impl Iterator<Item = Side> {
        let dim = self.dim;
        (0..dim).flat_map(|axis| [Side { axis, positive: false }, Side { axis, positive: true }])
    }

    fn count_components(&self) -> usize {
        let n = self.cells.len();
        let mut seen = vec![false; n];
        let mut components = 0;
        let sides: Vec<Side> = self.sides().collect();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            components += 1;
            seen[start] = true;
            let mut queue = VecDeque::from([start]);
            while let Some(c) = queue.pop_front() {
                for &s in &sides {
                    if let Some(nb) = self.neighbor(c, s) {
                        if !seen[nb] {
                            seen[nb] = true;
                            queue.push_back(nb);
                        }
                    }
                }
            }
        }
        components
    }

    fn classify(&mut self) {
        let sides: Vec<Side> = self.sides().collect();
        let n = self.cells.len();
        let mut kinds = vec![NodeKind::Interior; n];
        let mut interior_faces = Vec::new();
        let mut boundary_faces = Vec::new();
        for c in 0..n {
            for &s in &sides {
                match self.neighbor(c, s) {
                    Some(nb) => {
                        if s.positive {
                            interior_faces.push(InteriorFace { left: c, right: nb, axis: s.axis });
                        }
                    }
                    None => {
                        kinds[c] = NodeKind::Lateral;
                        let mut center = self.center(c);
                        center[s.axis] += if s.positive { 0.5 * self.h } else { -0.5 * self.h };
                        boundary_faces.push(BoundaryFace { cell: c, side: s, center });
                    }
                }
            }
        }
        self.kinds = kinds;
        self.interior_faces = interior_faces;
        self.boundary_faces = boundary_faces;
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn spec(&self) -> &ShapeSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn box_shape(&self) -> [usize; 2] {
        self.shape
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    pub fn face_area(&self) -> f64 {
        self.h.powi(self.dim as i32 - 1)
    }

    /// `|E|`.
    pub fn volume(&self) -> f64 {
        self.cell_volume() * self.len() as f64
    }

    pub fn center(&self, cell: usize) -> Point {
        let [ix, iy] = self.cells[cell];
        let x = self.origin[0] + (ix as f64 + 0.5) * self.h;
        let y = if self.dim == 2 { self.origin[1] + (iy as f64 + 0.5) * self.h } else { 0.0 };
        [x, y]
    }

    pub fn kind(&self, cell: usize) -> NodeKind {
        self.kinds[cell]
    }

    pub fn lateral_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&c| self.kinds[c] == NodeKind::Lateral)
    }

    pub fn interior_faces(&self) -> &[InteriorFace] {
        &self.interior_faces
    }

    pub fn boundary_faces(&self) -> &[BoundaryFace] {
        &self.boundary_faces
    }

    pub fn certification(&self) -> Option<Certification> {
        self.certification
    }

    /// Lateral node nearest to `x` (ties broken by index).
    pub fn nearest_lateral(&self, x: Point) -> Option<usize> {
        self.lateral_nodes().min_by(|&a, &b| {
            dist2(self.center(a), x).partial_cmp(&dist2(self.center(b), x)).unwrap()
        })
    }

    pub fn nearest_node(&self, x: Point) -> usize {
        (0..self.len())
            .min_by(|&a, &b| dist2(self.center(a), x).partial_cmp(&dist2(self.center(b), x)).unwrap())
            .unwrap_or(0)
    }

    /// Whether the point lies in the closure of the union of active cells.
    pub fn contains(&self, x: Point) -> bool {
        let tol = 1e-12 * self.h;
        (0..self.len()).any(|c| {
            let ctr = self.center(c);
            (0..self.dim).all(|a| (x[a] - ctr[a]).abs() <= 0.5 * self.h + tol)
        })
    }

    /// Snap a radius to the nearest positive integer multiple of `h`.
    pub fn snap_radius(&self, rho: f64) -> f64 {
        (rho / self.h).round().max(1.0) * self.h
    }

    /// `|E ∩ K_ρ(x)| / |K_ρ|` by exact cell/cube overlap.
    pub fn measure_ratio_at(&self, x: Point, rho: f64) -> f64 {
        let half = 0.5 * self.h;
        let mut covered = 0.0;
        for c in 0..self.len() {
            let ctr = self.center(c);
            let mut overlap = 1.0;
            for a in 0..self.dim {
                let lo = (ctr[a] - half).max(x[a] - rho);
                let hi = (ctr[a] + half).min(x[a] + rho);
                if hi <= lo {
                    overlap = 0.0;
                    break;
                }
                overlap *= hi - lo;
            }
            covered += overlap;
        }
        covered / (2.0 * rho).powi(self.dim as i32)
    }

    /// Measure-density ratio at a lateral node; `ρ` is snapped to a multiple of `h`.
    pub fn measure_density(&self, node: usize, rho: f64) -> Result<f64> {
        if node >= self.len() || self.kinds[node] != NodeKind::Lateral {
            return Err(Error::InvalidArgument(format!("node {node} is not a lateral boundary node")));
        }
        if rho < 2.0 * self.h - 1e-12 {
            return Err(Error::InvalidArgument(format!("radius {rho} is below 2h")));
        }
        Ok(self.measure_ratio_at(self.center(node), self.snap_radius(rho)))
    }

    /// Certify `α_* = 1 − max ratio` over all lateral nodes and radii.
    pub fn certify_alpha_star(&self, radii: &[f64]) -> Result<Certification> {
        if radii.is_empty() {
            return Err(Error::InvalidArgument("radius list is empty".into()));
        }
        let mut worst = (0.0_f64, 0usize);
        for node in self.lateral_nodes() {
            for &rho in radii {
                let ratio = self.measure_density(node, rho)?;
                if ratio > worst.0 {
                    worst = (ratio, node);
                }
            }
        }
        if worst.0 >= 1.0 {
            return Err(Error::ConditionGViolated { node: worst.1, ratio: worst.0 });
        }
        let rho_bar = radii.iter().map(|&r| self.snap_radius(r)).fold(0.0, f64::max);
        Ok(Certification { alpha_star: 1.0 - worst.0, rho_bar, worst_node: worst.1 })
    }

    /// Certify and store the result on the grid.
    pub fn certify(&mut self, radii: &[f64]) -> Result<Certification> {
        let cert = self.certify_alpha_star(radii)?;
        self.certification = Some(cert);
        Ok(cert)
    }

    /// Whether cell `c` lies in the closed cube `K_ρ(x)`.
    pub fn in_cube(&self, c: usize, x: Point, rho: f64) -> bool {
        let ctr = self.center(c);
        let tol = 1e-9 * self.h;
        (0..self.dim).all(|a| (ctr[a] - x[a]).abs() <= rho + tol)
    }
}

fn dist2(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// `θ = (ξω)^{2−p}`.
pub fn intrinsic_theta(xi_omega: f64, p: f64) -> f64 {
    xi_omega.powf(2.0 - p)
}

/// `θ̃ = (δξω)^{1−p}`.
pub fn singular_theta(delta_xi_omega: f64, p: f64) -> f64 {
    delta_xi_omega.powf(1.0 - p)
}

/// Nesting precondition `θ̃ (8ρ)^p ≤ ρ^{p−1}`.
pub fn singular_nesting_holds(theta_tilde: f64, rho: f64, p: f64) -> bool {
    theta_tilde * (8.0 * rho).powf(p) <= rho.powf(p - 1.0)
}

/// Direction of a cylinder in time relative to its vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeDirection {
    /// `(t_o − θρ^p, t_o)`
    Backward,
    /// `(t_o, t_o + θρ^p)`, used at the initial level.
    Forward,
}

/// `K_ρ(x_o) × (t_o − θρ^p, t_o)` or its forward analogue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntrinsicCylinder {
    pub vertex: Point,
    pub t_o: f64,
    pub rho: f64,
    pub theta: f64,
    pub p: f64,
    pub direction: TimeDirection,
}

impl IntrinsicCylinder {
    pub fn backward(vertex: Point, t_o: f64, rho: f64, theta: f64, p: f64) -> Result<Self> {
        Self::new(vertex, t_o, rho, theta, p, TimeDirection::Backward)
    }

    pub fn forward(vertex: Point, t_o: f64, rho: f64, theta: f64, p: f64) -> Result<Self> {
        Self::new(vertex, t_o, rho, theta, p, TimeDirection::Forward)
    }

    fn new(vertex: Point, t_o: f64, rho: f64, theta: f64, p: f64, direction: TimeDirection) -> Result<Self> {
        if !(rho > 0.0 && theta > 0.0 && theta.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "cylinder needs rho > 0 and finite theta > 0 (rho = {rho}, theta = {theta})"
            )));
        }
        Ok(Self { vertex, t_o, rho, theta, p, direction })
    }

    /// Time extent `θρ^p`.
    pub fn span(&self) -> f64 {
        self.theta * self.rho.powf(self.p)
    }

    /// `[t_lo, t_hi]` of the cylinder before clipping.
    pub fn time_range(&self) -> (f64, f64) {
        match self.direction {
            TimeDirection::Backward => (self.t_o - self.span(), self.t_o),
            TimeDirection::Forward => (self.t_o, self.t_o + self.span()),
        }
    }
}

/// Samples of a cylinder intersected with `E × [0, T]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClippedCylinder {
    pub cells: Vec<usize>,
    pub steps: Vec<usize>,
    /// The cylinder reached below `t = 0` and was cut there.
    pub clipped_at_zero: bool,
    /// The cylinder reached past the last stored time.
    pub clipped_at_end: bool,
}

impl ClippedCylinder {
    pub fn len(&self) -> usize {
        self.cells.len() * self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty() || self.steps.is_empty()
    }

    pub fn samples(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.steps.iter().flat_map(move |&s| self.cells.iter().map(move |&c| (c, s)))
    }
}

/// All `(node, step)` pairs inside the closed cylinder, restricted to `E` and the stored times.
pub fn cylinder_clip(grid: &DomainGrid, cyl: &IntrinsicCylinder, times: &[f64]) -> ClippedCylinder {
    let (lo, hi) = cyl.time_range();
    let tol = 1e-12 * (1.0 + hi.abs());
    let cells = (0..grid.len()).filter(|&c| grid.in_cube(c, cyl.vertex, cyl.rho)).collect();
    let steps = times
        .iter()
        .enumerate()
        .filter(|(_, &t)| t >= lo - tol && t <= hi + tol)
        .map(|(i, _)| i)
        .collect();
    let first = times.first().copied().unwrap_or(0.0);
    let last = times.last().copied().unwrap_or(0.0);
    ClippedCylinder {
        cells,
        steps,
        clipped_at_zero: lo < first - tol,
        clipped_at_end: hi > last + tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rectangle_full_mask() {
        let g = DomainGrid::build(&ShapeSpec::Rectangle { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0 }, 1.0 / 64.0).unwrap();
        assert_eq!(g.len(), 64 * 64);
        assert_eq!(g.lateral_nodes().count(), 4 * 64 - 4);
        assert_abs_diff_eq!(g.volume(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn l_shape_area() {
        let g = DomainGrid::build(&ShapeSpec::LShape { size: 1.0 }, 1.0 / 64.0).unwrap();
        assert_eq!(g.len(), 3 * 32 * 32);
        assert_abs_diff_eq!(g.volume(), 0.75, epsilon = 1e-12);
    }

    #[test]
    fn disconnected_custom_mask_rejected() {
        let rows = vec!["##..".to_string(), "##..".to_string(), "...#".to_string()];
        let err = DomainGrid::build(&ShapeSpec::Custom { rows }, 0.1).unwrap_err();
        assert!(matches!(err, Error::DisconnectedDomain { components: 2 }));
    }

    #[test]
    fn too_coarse_rejected() {
        let err = DomainGrid::build(&ShapeSpec::NotchedCorner { width: 0.05, depth: 0.5 }, 0.05).unwrap_err();
        assert!(matches!(err, Error::ResolutionTooCoarse(_)));
    }

    #[test]
    fn measure_density_canonical() {
        let h = 1.0 / 128.0;
        let rho = 1.0 / 8.0;
        let rect = DomainGrid::build(&ShapeSpec::Rectangle { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0 }, h).unwrap();
        let edge = rect.nearest_lateral([0.5, 0.0]).unwrap();
        assert_abs_diff_eq!(rect.measure_density(edge, rho).unwrap(), 0.5, epsilon = 2.0 * h / rho);
        let corner = rect.nearest_lateral([0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(rect.measure_density(corner, rho).unwrap(), 0.25, epsilon = 2.0 * h / rho);
        let l = DomainGrid::build(&ShapeSpec::LShape { size: 1.0 }, h).unwrap();
        let re = l.nearest_lateral([0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(l.measure_density(re, rho).unwrap(), 0.75, epsilon = 2.0 * h / rho);
        assert!(l.measure_density(l.nearest_node([0.25, 0.25]), rho).is_err());
    }

    #[test]
    fn certification_values() {
        let h = 1.0 / 64.0;
        let radii = [0.125];
        let rect = DomainGrid::build(&ShapeSpec::Rectangle { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0 }, h).unwrap();
        assert_abs_diff_eq!(rect.certify_alpha_star(&radii).unwrap().alpha_star, 0.5, epsilon = 2.0 * h / 0.125);
        let l = DomainGrid::build(&ShapeSpec::LShape { size: 1.0 }, h).unwrap();
        let c = l.certify_alpha_star(&radii).unwrap();
        assert_abs_diff_eq!(c.alpha_star, 0.25, epsilon = 2.0 * h / 0.125);
        assert_eq!(c.rho_bar, 0.125);
        let i = DomainGrid::build(&ShapeSpec::Interval { a: 0.0, b: 1.0 }, h).unwrap();
        assert_abs_diff_eq!(i.certify_alpha_star(&radii).unwrap().alpha_star, 0.5, epsilon = 2.0 * h / 0.125);
        assert!(l.certify_alpha_star(&[]).is_err());
    }

    #[test]
    fn theta_examples() {
        assert_eq!(intrinsic_theta(0.37, 2.0), 1.0);
        assert_abs_diff_eq!(intrinsic_theta(0.5, 3.0), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(intrinsic_theta(0.25, 4.0), 16.0, epsilon = 1e-12);
        assert_abs_diff_eq!(singular_theta(0.5, 2.0), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(singular_theta(0.5, 3.0), 4.0, epsilon = 1e-15);
        for &p in &[2.0, 2.5, 3.0, 4.0] {
            for &xo in &[0.1, 0.5, 1.0] {
                for &d in &[0.01, 0.5, 0.9] {
                    assert!(singular_theta(d * xo, p) >= intrinsic_theta(xo, p));
                }
            }
        }
        assert!(singular_nesting_holds(1.0, 1e-3, 2.0));
        assert!(!singular_nesting_holds(1.0, 0.5, 2.0));
    }

    #[test]
    fn clip_cases() {
        let g = DomainGrid::build(&ShapeSpec::Rectangle { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0 }, 0.1).unwrap();
        let times: Vec<f64> = (0..=10).map(|i| 0.1 * i as f64).collect();
        let inside = IntrinsicCylinder::backward([0.5, 0.5], 1.0, 0.2, 1.0, 2.0).unwrap();
        let c = cylinder_clip(&g, &inside, &times);
        assert_eq!(c.cells.len(), 16);
        assert!(!c.clipped_at_zero);
        let edge = IntrinsicCylinder::backward([0.0, 0.5], 1.0, 0.2, 1.0, 2.0).unwrap();
        let c = cylinder_clip(&g, &edge, &times);
        assert_eq!(c.cells.len(), 8);
        assert!(c.cells.iter().all(|&n| g.center(n)[0] > 0.0));
        let long = IntrinsicCylinder::backward([0.5, 0.5], 0.3, 0.2, 100.0, 2.0).unwrap();
        let c = cylinder_clip(&g, &long, &times);
        assert!(c.clipped_at_zero);
        assert_eq!(c.steps, vec![0, 1, 2, 3]);
    }
}
