//! Experiment configuration (JSON) and its validation.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::energy::{CutoffKind, Sign, Variant};
use crate::enthalpy::MollifierKernel;
use crate::error::{Error, Result};
use crate::geometry::ShapeSpec;
use crate::modulus::{Anchor, AnchorKind};
use crate::recurrence::{BoundarySpec, DeGiorgiParams, InteriorSpec, NeumannSpec, TypeKind};
use crate::solver::{BoundaryCondition, BoundaryData};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemBlock,
    pub solver: SolverBlock,
    #[serde(default)]
    pub analysis: AnalysisBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemBlock {
    pub domain: ShapeSpec,
    pub p: f64,
    pub nu: f64,
    pub eps: f64,
    /// ε values for `sweep`, each half of the previous.
    #[serde(default)]
    pub eps_list: Vec<f64>,
    #[serde(default)]
    pub kernel: MollifierKernel,
    pub boundary: BoundaryData,
    pub t_final: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverBlock {
    pub h: f64,
    pub dt: f64,
    #[serde(default = "default_tol")]
    pub newton_tol: f64,
    #[serde(default = "default_iters")]
    pub max_iters: usize,
    /// Gradient floor; defaults to 0 for `p = 2` and `1e−8 ·` data scale otherwise.
    #[serde(default)]
    pub grad_floor: Option<f64>,
}

fn default_tol() -> f64 {
    1e-11
}

fn default_iters() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisBlock {
    #[serde(default)]
    pub anchors: Vec<Anchor>,
    /// Decreasing radii for oscillation measurements.
    #[serde(default)]
    pub schedule: Vec<f64>,
    #[serde(default = "default_xi")]
    pub xi: f64,
    /// Radii at which condition (G) is certified; the largest becomes `ρ̄`.
    #[serde(default)]
    pub certify_radii: Vec<f64>,
    #[serde(default)]
    pub energy: Vec<EnergyJob>,
    #[serde(default)]
    pub recurrences: Vec<RecurrenceJob>,
    /// Compare the computed front with the one-phase similarity solution.
    #[serde(default)]
    pub stefan_oracle: Option<StefanOracleSpec>,
    /// Random point pairs per declared-modulus check.
    #[serde(default = "default_pairs")]
    pub modulus_pairs: usize,
}

fn default_xi() -> f64 {
    0.5
}

fn default_pairs() -> usize {
    2000
}

impl Default for AnalysisBlock {
    fn default() -> Self {
        Self {
            anchors: Vec::new(),
            schedule: Vec::new(),
            xi: default_xi(),
            certify_radii: Vec::new(),
            energy: Vec::new(),
            recurrences: Vec::new(),
            stefan_oracle: None,
            modulus_pairs: default_pairs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StefanOracleSpec {
    pub wall_temperature: f64,
}

/// A truncation level, either absolute or as a fraction of the oscillation in
/// the cylinder: `k = μ⁺ − f ω` on the `+` side and `k = μ⁻ + f ω` on the `−` side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelSpec {
    pub sign: Sign,
    #[serde(default)]
    pub k: Option<f64>,
    #[serde(default)]
    pub fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyJob {
    pub variant: Variant,
    pub anchor: String,
    pub radius: f64,
    #[serde(default = "default_theta")]
    pub theta: f64,
    pub cutoff: CutoffKind,
    #[serde(default = "default_sigmas")]
    pub sigmas: Vec<f64>,
    pub levels: Vec<LevelSpec>,
}

fn default_theta() -> f64 {
    1.0
}

fn default_sigmas() -> Vec<f64> {
    vec![0.5, 0.75]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case", deny_unknown_fields)]
pub enum RecurrenceJob {
    Type {
        id: String,
        kind: TypeKind,
        #[serde(default = "half")]
        eta: f64,
        #[serde(default = "one")]
        q: f64,
        omega0: f64,
        n_max: usize,
    },
    Boundary {
        id: String,
        spec: BoundarySpec,
        omega0: f64,
        rho0: f64,
        r_stop: f64,
        n_max: usize,
    },
    Interior {
        id: String,
        spec: InteriorSpec,
        omega0: f64,
        rho0: f64,
        r_stop: f64,
        n_max: usize,
    },
    Neumann {
        id: String,
        spec: NeumannSpec,
        omega0: f64,
        rho0: f64,
        r_stop: f64,
        n_max: usize,
    },
    DeGiorgi {
        id: String,
        params: DeGiorgiParams,
        n_max: usize,
    },
}

fn half() -> f64 {
    0.5
}

fn one() -> f64 {
    1.0
}

impl RecurrenceJob {
    pub fn id(&self) -> &str {
        match self {
            RecurrenceJob::Type { id, .. }
            | RecurrenceJob::Boundary { id, .. }
            | RecurrenceJob::Interior { id, .. }
            | RecurrenceJob::Neumann { id, .. }
            | RecurrenceJob::DeGiorgi { id, .. } => id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default = "default_dir")]
    pub dir: String,
    #[serde(default = "default_stride")]
    pub stride: usize,
    #[serde(default)]
    pub checkpoint: bool,
}

fn default_dir() -> String {
    "out".to_string()
}

fn default_stride() -> usize {
    1
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self { dir: default_dir(), stride: default_stride(), checkpoint: false }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::ConfigInvalid(vec![e.to_string()]))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// SHA-256 of the canonical JSON serialization.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("configuration serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Every violation found, or `Ok`.
    pub fn validate(&self) -> Result<()> {
        let mut e = Vec::new();
        let pb = &self.problem;
        if !(pb.p >= 2.0 && pb.p.is_finite()) {
            e.push(format!("problem.p must be >= 2, got {}", pb.p));
        }
        if !(pb.nu > 0.0 && pb.nu.is_finite()) {
            e.push(format!("problem.nu must be positive, got {}", pb.nu));
        }
        if !(pb.eps > 0.0 && pb.eps < 1.0) {
            e.push(format!("problem.eps must lie in (0, 1), got {}", pb.eps));
        }
        if !pb.eps_list.is_empty() {
            if pb.eps_list.len() < 3 {
                e.push("problem.eps_list needs at least 3 values".into());
            }
            if pb.eps_list.iter().any(|v| !(*v > 0.0 && *v < 1.0)) {
                e.push("problem.eps_list values must lie in (0, 1)".into());
            }
            if pb.eps_list.windows(2).any(|w| (w[1] - 0.5 * w[0]).abs() > 1e-12 * w[0]) {
                e.push("problem.eps_list: each value must halve the previous one".into());
            }
        }
        if !(pb.t_final >= 0.0 && pb.t_final.is_finite()) {
            e.push(format!("problem.t_final must be >= 0, got {}", pb.t_final));
        }
        match &pb.boundary.condition {
            BoundaryCondition::Dirichlet { g } => g.validate("problem.boundary.g", &mut e),
            BoundaryCondition::Neumann { psi, c2 } => {
                psi.validate("problem.boundary.psi", &mut e);
                if !(*c2 >= 0.0) {
                    e.push(format!("problem.boundary.c2 must be >= 0, got {c2}"));
                }
                if pb.p != 2.0 {
                    e.push(format!("the Neumann problem needs p = 2, got {}", pb.p));
                }
            }
        }
        pb.boundary.initial.validate("problem.boundary.initial", &mut e);
        for (name, m) in [("g_modulus", &pb.boundary.g_modulus), ("initial_modulus", &pb.boundary.initial_modulus)] {
            if let Some(m) = m {
                if !(m.c > 0.0 && m.lambda > 0.0) {
                    e.push(format!("problem.boundary.{name} needs c > 0 and lambda > 0"));
                }
            }
        }
        let s = &self.solver;
        if !(s.h > 0.0) {
            e.push(format!("solver.h must be positive, got {}", s.h));
        }
        if !(s.dt > 0.0) {
            e.push(format!("solver.dt must be positive, got {}", s.dt));
        }
        if !(s.newton_tol > 0.0) {
            e.push(format!("solver.newton_tol must be positive, got {}", s.newton_tol));
        }
        if s.max_iters == 0 {
            e.push("solver.max_iters must be >= 1".into());
        }
        if let Some(f) = s.grad_floor {
            if !(f >= 0.0) {
                e.push(format!("solver.grad_floor must be >= 0, got {f}"));
            }
        }
        let a = &self.analysis;
        if !(a.xi > 0.0 && a.xi <= 1.0) {
            e.push(format!("analysis.xi must lie in (0, 1], got {}", a.xi));
        }
        if a.schedule.windows(2).any(|w| w[1] >= w[0]) {
            e.push("analysis.schedule must be strictly decreasing".into());
        }
        if let Some(r) = a.schedule.iter().find(|&&r| r < 2.0 * s.h * (1.0 - 1e-12)) {
            e.push(format!("analysis.schedule radius {r} is below 2h = {}", 2.0 * s.h));
        }
        if let Some(r) = a.certify_radii.iter().find(|&&r| r < 2.0 * s.h * (1.0 - 1e-12)) {
            e.push(format!("analysis.certify_radii radius {r} is below 2h = {}", 2.0 * s.h));
        }
        let mut ids: Vec<&str> = a.anchors.iter().map(|x| x.id.as_str()).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            e.push("analysis.anchors: ids must be unique".into());
        }
        for anc in &a.anchors {
            if anc.kind != AnchorKind::Initial && !(anc.t > 0.0 && anc.t <= pb.t_final) {
                e.push(format!("anchor {}: t must lie in (0, t_final]", anc.id));
            }
        }
        if !a.anchors.is_empty() && a.schedule.len() < 4 {
            e.push("analysis.schedule needs at least 4 radii when anchors are given".into());
        }
        for (i, job) in a.energy.iter().enumerate() {
            if !a.anchors.iter().any(|x| x.id == job.anchor) {
                e.push(format!("analysis.energy[{i}]: unknown anchor {}", job.anchor));
            }
            if !(job.radius > 0.0) || !(job.theta > 0.0) {
                e.push(format!("analysis.energy[{i}]: radius and theta must be positive"));
            }
            if job.sigmas.is_empty() || job.sigmas.iter().any(|v| !(*v > 0.0 && *v < 1.0)) {
                e.push(format!("analysis.energy[{i}]: sigmas must lie in (0, 1)"));
            }
            if job.levels.is_empty() {
                e.push(format!("analysis.energy[{i}]: at least one level is needed"));
            }
            for l in &job.levels {
                if l.k.is_some() == l.fraction.is_some() {
                    e.push(format!("analysis.energy[{i}]: each level needs exactly one of k or fraction"));
                }
            }
        }
        let mut rids: Vec<&str> = a.recurrences.iter().map(|r| r.id()).collect();
        rids.sort_unstable();
        if rids.windows(2).any(|w| w[0] == w[1]) {
            e.push("analysis.recurrences: ids must be unique".into());
        }
        if let Some(o) = &a.stefan_oracle {
            if !(o.wall_temperature > 0.0) {
                e.push("analysis.stefan_oracle.wall_temperature must be positive".into());
            }
        }
        if self.output.stride == 0 {
            e.push("output.stride must be >= 1".into());
        }
        if e.is_empty() {
            Ok(())
        } else {
            Err(Error::ConfigInvalid(e))
        }
    }
}
