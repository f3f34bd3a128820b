//! Experiment orchestration: solve, analyse, and write CSV tables plus a manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{EnergyJob, ExperimentConfig, RecurrenceJob};
use crate::energy::{caccioppoli_sides, neumann_energy_sides, Cutoff, EnergyReport, TruncationLevel};
use crate::enthalpy::RegularizedEnthalpy;
use crate::error::{Error, Result};
use crate::geometry::{cylinder_clip, DomainGrid, IntrinsicCylinder};
use crate::modulus::{
    anchor_cylinder, compare_models, initial_layer_decay, measure_oscillation, sweep_report, AnchorKind,
};
use crate::oracle::OnePhaseStefan;
use crate::recurrence::{
    degiorgi_converges, dominating_sequence_check, iterate_boundary_scheme, iterate_interior_scheme,
    iterate_neumann_scheme, iterate_type, IterationTrace, TypeSpec,
};
use crate::solver::field::{read_checkpoint, save_checkpoint};
use crate::solver::{
    check_declared_modulus, max_principle_check, BoundaryCondition, FluxModel, Problem, SolverConfig, SpaceTimeField,
    StepStats,
};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Solve,
    Measure,
    EnergyCheck,
    Recur,
    Sweep,
    Run,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Measure => "measure",
            Command::EnergyCheck => "energy-check",
            Command::Recur => "recur",
            Command::Sweep => "sweep",
            Command::Run => "run",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Config,
    Solve,
    Analysis,
    Io,
}

#[derive(Debug)]
pub struct RunError {
    pub stage: Stage,
    pub error: Error,
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match (&self.error, self.stage) {
            (Error::Io(_) | Error::Json(_) | Error::Checkpoint(_), _) => 1,
            (_, Stage::Config) => 2,
            (_, Stage::Solve) => 3,
            (_, Stage::Analysis) => 4,
            (_, Stage::Io) => 1,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?} stage: {}", self.stage, self.error)
    }
}

fn at(stage: Stage) -> impl FnOnce(Error) -> RunError {
    move |error| RunError { stage, error }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub stride: Option<usize>,
    /// Reuse a stored field instead of solving.
    pub checkpoint: Option<PathBuf>,
}

/// CSV table with a unit-annotated header; floats use `Display`, which is the
/// shortest round-trip form and therefore reproducible.
#[derive(Debug, Clone)]
pub struct Table {
    text: String,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Self { text }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

fn f(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map(f).unwrap_or_default()
}

/// Writes `failure.json`; errors while writing it are ignored.
fn write_failure(out: &Path, cmd: Option<Command>, hash: Option<&str>, e: &RunError) {
    let body = json!({
        "command": cmd.map(|c| c.name()),
        "config_hash": hash,
        "stage": e.stage,
        "kind": e.error.kind(),
        "message": e.error.to_string(),
        "exit_code": e.exit_code(),
    });
    let _ = fs::create_dir_all(out).and_then(|_| fs::write(out.join("failure.json"), serde_json::to_string_pretty(&body).unwrap()));
}

pub struct Runner {
    pub config: ExperimentConfig,
    pub hash: String,
    pub out: PathBuf,
    opts: RunOptions,
    outputs: Vec<String>,
    timings: BTreeMap<String, f64>,
    checks: BTreeMap<String, Value>,
    problem: Option<Problem>,
    field: Option<SpaceTimeField>,
}

impl Runner {
    /// Validate the configuration and apply command-line overrides.
    pub fn new(mut config: ExperimentConfig, opts: RunOptions) -> std::result::Result<Self, RunError> {
        if let Some(s) = opts.stride {
            config.output.stride = s;
        }
        let hash = config.hash();
        let out = opts.out.clone().unwrap_or_else(|| PathBuf::from(&config.output.dir));
        if let Err(e) = config.validate() {
            let e = RunError { stage: Stage::Config, error: e };
            write_failure(&out, None, Some(&hash), &e);
            return Err(e);
        }
        Ok(Self {
            config,
            hash,
            out,
            opts,
            outputs: Vec::new(),
            timings: BTreeMap::new(),
            checks: BTreeMap::new(),
            problem: None,
            field: None,
        })
    }

    pub fn load(path: &Path, opts: RunOptions) -> std::result::Result<Self, RunError> {
        let config = ExperimentConfig::load(path).map_err(|e| {
            let e = match e {
                Error::Io(_) => RunError { stage: Stage::Io, error: e },
                e => RunError { stage: Stage::Config, error: e },
            };
            if let Some(out) = &opts.out {
                write_failure(out, None, None, &e);
            }
            e
        })?;
        Self::new(config, opts)
    }

    pub fn field(&self) -> Option<&SpaceTimeField> {
        self.field.as_ref()
    }

    pub fn problem(&self) -> Option<&Problem> {
        self.problem.as_ref()
    }

    /// Run a command; on failure `failure.json` is written to the output directory.
    pub fn execute(&mut self, cmd: Command) -> std::result::Result<(), RunError> {
        let result = self.dispatch(cmd);
        match result {
            Ok(()) => self.write_manifest(cmd).map_err(at(Stage::Io)),
            Err(e) => {
                write_failure(&self.out, Some(cmd), Some(&self.hash), &e);
                Err(e)
            }
        }
    }

    fn dispatch(&mut self, cmd: Command) -> std::result::Result<(), RunError> {
        fs::create_dir_all(&self.out).map_err(|e| RunError { stage: Stage::Io, error: e.into() })?;
        match cmd {
            Command::Solve => self.solve_stage(),
            Command::Measure => {
                self.obtain_field()?;
                self.measure_stage()
            }
            Command::EnergyCheck => {
                self.obtain_field()?;
                self.energy_stage()
            }
            Command::Recur => self.recur_stage(),
            Command::Sweep => self.sweep_stage(),
            Command::Run => {
                self.solve_stage()?;
                self.measure_stage()?;
                self.energy_stage()?;
                self.recur_stage()?;
                if !self.config.problem.eps_list.is_empty() {
                    self.sweep_stage()?;
                }
                Ok(())
            }
        }
    }

    fn write(&mut self, name: &str, text: &str) -> std::result::Result<(), RunError> {
        fs::write(self.out.join(name), text).map_err(|e| RunError { stage: Stage::Io, error: e.into() })?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    fn time(&mut self, stage: &str, start: Instant) {
        *self.timings.entry(stage.to_string()).or_insert(0.0) += start.elapsed().as_secs_f64();
    }

    /// Build the grid and problem for the configured `ε`.
    pub fn build_problem(&self, eps: f64) -> Result<Problem> {
        let pb = &self.config.problem;
        let mut grid = DomainGrid::build(&pb.domain, self.config.solver.h)?;
        if !self.config.analysis.certify_radii.is_empty() {
            grid.certify(&self.config.analysis.certify_radii)?;
        }
        let grid = Arc::new(grid);
        let enthalpy = RegularizedEnthalpy::with_kernel(pb.nu, eps, pb.kernel)?;
        let flux = match self.config.solver.grad_floor {
            Some(floor) => FluxModel::p_laplacian(pb.p, floor)?,
            None => {
                let probe = Problem::new(grid.clone(), FluxModel::p_laplacian(pb.p, 0.0)?, pb.boundary.clone(), enthalpy)?;
                FluxModel::with_default_floor(pb.p, probe.data_bound(&[0.0, pb.t_final]))?
            }
        };
        if !pb.boundary.is_dirichlet() {
            pb.boundary.check_neumann_bound(&grid, pb.t_final, 16)?;
        }
        Problem::new(grid, flux, pb.boundary.clone(), enthalpy)
    }

    pub fn solver_config(&self) -> SolverConfig {
        let s = &self.config.solver;
        SolverConfig {
            dt: s.dt,
            newton_tol: s.newton_tol,
            max_iters: s.max_iters,
            stride: self.config.output.stride,
            allow_unconverged: false,
        }
    }

    fn ensure_problem(&mut self) -> std::result::Result<(), RunError> {
        if self.problem.is_none() {
            let pb = self.build_problem(self.config.problem.eps).map_err(at(Stage::Config))?;
            self.problem = Some(pb);
        }
        Ok(())
    }

    fn obtain_field(&mut self) -> std::result::Result<(), RunError> {
        if self.field.is_some() {
            return Ok(());
        }
        let Some(path) = self.opts.checkpoint.clone() else {
            return self.solve_stage();
        };
        self.ensure_problem()?;
        let start = Instant::now();
        let io = |e: Error| RunError { stage: Stage::Io, error: e };
        let file = fs::File::open(&path).map_err(|e| io(e.into()))?;
        let (header, mut field) = read_checkpoint(std::io::BufReader::new(file)).map_err(io)?;
        if header.config_hash != self.hash {
            return Err(io(Error::Checkpoint(format!(
                "checkpoint was written for configuration {} but this one hashes to {}",
                header.config_hash, self.hash
            ))));
        }
        field.grid = self.problem.as_ref().unwrap().grid.clone();
        self.field = Some(field);
        self.time("load_checkpoint", start);
        Ok(())
    }

    fn solve_stage(&mut self) -> std::result::Result<(), RunError> {
        self.ensure_problem()?;
        let problem = self.problem.clone().unwrap();
        let pb = self.config.problem.clone();
        let start = Instant::now();
        let (field, stats) = problem.solve_with_stats(&self.solver_config(), pb.t_final).map_err(at(Stage::Solve))?;
        self.time("solve", start);
        let start = Instant::now();
        self.write("steps.csv", steps_table(&field).as_str())?;
        self.write("solver_stats.csv", solver_stats_table(&stats).as_str())?;
        if problem.bc.is_dirichlet() {
            let mp = max_principle_check(&problem, &field, 1e-10).map_err(at(Stage::Analysis))?;
            self.checks.insert(
                "max_principle".into(),
                json!({"data_bound": mp.data_bound, "max_abs_u": mp.max_abs_u, "margin": mp.margin, "pass": mp.pass}),
            );
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.opts.seed);
        let pairs = self.config.analysis.modulus_pairs;
        if let (BoundaryCondition::Dirichlet { g }, Some(m)) = (&pb.boundary.condition, &pb.boundary.g_modulus) {
            let worst = check_declared_modulus(g, m, &problem.grid, 0.0, pairs, &mut rng).map_err(at(Stage::Analysis))?;
            self.checks.insert("g_modulus".into(), json!({"worst_excess": worst, "pass": worst <= 1e-12}));
        }
        if let Some(m) = &pb.boundary.initial_modulus {
            let worst = check_declared_modulus(&pb.boundary.initial, m, &problem.grid, 0.0, pairs, &mut rng)
                .map_err(at(Stage::Analysis))?;
            self.checks.insert("initial_modulus".into(), json!({"worst_excess": worst, "pass": worst <= 1e-12}));
        }
        if let Some(o) = self.config.analysis.stefan_oracle {
            let exact = OnePhaseStefan::new(o.wall_temperature, pb.nu).map_err(at(Stage::Analysis))?;
            let mut t = Table::new(&["t [time]", "computed_front [length]", "similarity_front [length]", "relative_error [1]"]);
            let mut worst: f64 = 0.0;
            for (s, &time) in field.times.iter().enumerate().skip(1) {
                let exact_s = exact.interface(time);
                let comp = field.interface_position(s);
                let rel = comp.map(|c| (c - exact_s).abs() / exact_s);
                if let Some(r) = rel {
                    worst = worst.max(r);
                }
                t.row(&[f(time), opt(comp), f(exact_s), opt(rel)]);
            }
            self.write("stefan_front.csv", t.as_str())?;
            let last = field.n_steps() - 1;
            let final_rel = field.interface_position(last).map(|c| (c - exact.interface(pb.t_final)).abs() / exact.interface(pb.t_final));
            self.checks.insert(
                "stefan_front".into(),
                json!({"lambda": exact.lambda, "final_relative_error": final_rel, "max_relative_error": worst}),
            );
        }
        if self.config.output.checkpoint {
            save_checkpoint(&self.out.join("field.ckpt"), &field, &self.hash, pb.eps, pb.p, pb.nu)
                .map_err(at(Stage::Io))?;
            self.outputs.push("field.ckpt".into());
        }
        self.time("solve_outputs", start);
        self.field = Some(field);
        Ok(())
    }

    fn measure_stage(&mut self) -> std::result::Result<(), RunError> {
        let field = self.field.take().expect("field is available");
        let res = self.measure_with(&field);
        self.field = Some(field);
        res
    }

    fn measure_with(&mut self, field: &SpaceTimeField) -> std::result::Result<(), RunError> {
        let a = self.config.analysis.clone();
        if a.anchors.is_empty() {
            return Ok(());
        }
        let start = Instant::now();
        let p = self.config.problem.p;
        let bd = self.config.problem.boundary.clone();
        let ana = at(Stage::Analysis);
        let mut fits = Table::new(&[
            "anchor",
            "model",
            "c [temperature]",
            "exponent [1]",
            "residual [1]",
            "rho_bar [length]",
            "admissible",
            "residual_ratio [1]",
        ]);
        let mut ranking = Table::new(&["anchor", "winner", "type_ii_drift", "type_ii_subrange_exponents [1]"]);
        let mut ranking_rows = Vec::new();
        for anchor in &a.anchors {
            let series = match measure_oscillation(field, anchor, &a.schedule, p, a.xi) {
                Ok(s) => s,
                Err(e) => return Err(ana(e)),
            };
            let mut t = Table::new(&["r [length]", "theta [1]", "osc [temperature]", "clipped"]);
            for e in &series.entries {
                t.row(&[f(e.r), f(e.theta), f(e.osc), e.clipped.to_string()]);
            }
            self.write(&format!("oscillation_{}.csv", anchor.id), t.as_str())?;
            match compare_models(&series) {
                Ok(rk) => {
                    for (fit, ratio) in rk.fits.iter().zip(&rk.ratios) {
                        fits.row(&[
                            anchor.id.clone(),
                            fit.model.name().into(),
                            f(fit.c),
                            f(fit.exponent),
                            f(fit.residual),
                            f(fit.rho_bar),
                            fit.admissible.to_string(),
                            f(*ratio),
                        ]);
                    }
                    let subs: Vec<String> = rk.type_ii_subrange_exponents.iter().map(|v| f(*v)).collect();
                    ranking.row(&[anchor.id.clone(), rk.winner().name().into(), rk.type_ii_drift.to_string(), subs.join(";")]);
                    ranking_rows.push(json!({"anchor": anchor.id, "winner": rk.winner().name(), "type_ii_drift": rk.type_ii_drift}));
                }
                Err(e) => {
                    ranking.row(&[anchor.id.clone(), format!("none ({})", e.kind()), String::new(), String::new()]);
                }
            }
            if anchor.kind == AnchorKind::Initial {
                let rep = initial_layer_decay(field, anchor, &a.schedule, p, a.xi, bd.initial_modulus.as_ref(), bd.g_modulus.as_ref())
                    .map_err(at(Stage::Analysis))?;
                let env = rep.envelope;
                let mut t = Table::new(&["r [length]", "osc [temperature]", "envelope [temperature]"]);
                let rho = rep.series.rho0;
                for e in &rep.series.entries {
                    let s = (e.r * rho).sqrt();
                    let val = env.c1 * (e.r / rho).powf(env.a)
                        + env.c2 * bd.initial_modulus.map(|m| m.eval(s)).unwrap_or(0.0)
                        + env.c3 * bd.g_modulus.map(|m| m.eval(s)).unwrap_or(0.0);
                    t.row(&[f(e.r), f(e.osc), f(val)]);
                }
                self.write(&format!("initial_layer_{}.csv", anchor.id), t.as_str())?;
                self.checks.insert(
                    format!("initial_layer_{}", anchor.id),
                    json!({"envelope": env, "scale": rep.scale, "first_within_omega0": rep.first_within_omega0}),
                );
            }
        }
        self.write("modulus_fits.csv", fits.as_str())?;
        self.write("model_ranking.csv", ranking.as_str())?;
        self.checks.insert("model_ranking".into(), Value::Array(ranking_rows));
        self.time("measure", start);
        Ok(())
    }

    fn energy_stage(&mut self) -> std::result::Result<(), RunError> {
        let field = self.field.take().expect("field is available");
        let res = self.energy_with(&field);
        self.field = Some(field);
        res
    }

    fn energy_with(&mut self, field: &SpaceTimeField) -> std::result::Result<(), RunError> {
        let jobs = self.config.analysis.energy.clone();
        if jobs.is_empty() {
            return Ok(());
        }
        let start = Instant::now();
        let problem = self.problem.clone().expect("problem is built");
        let mut t = Table::new(&[
            "anchor",
            "variant",
            "radius [length]",
            "theta [1]",
            "sign",
            "k [temperature]",
            "sigma [1]",
            "cutoff_constant [1]",
            "mu_plus [temperature]",
            "mu_minus [temperature]",
            "omega [temperature]",
            "admissible",
            "lhs_total [energy]",
            "rhs_total [energy]",
            "gamma_observed [1]",
            "degenerate",
        ]);
        let mut gammas = Vec::new();
        for job in &jobs {
            for rep in self.energy_job(&problem, field, job).map_err(at(Stage::Analysis))? {
                t.row(&[
                    job.anchor.clone(),
                    rep.variant.clone(),
                    f(job.radius),
                    f(job.theta),
                    format!("{:?}", rep.sign).to_lowercase(),
                    f(rep.k),
                    f(rep.sigma),
                    f(rep.cutoff_constant),
                    f(rep.mu_plus),
                    f(rep.mu_minus),
                    f(rep.omega),
                    rep.admissible.to_string(),
                    f(rep.lhs_total),
                    f(rep.rhs_total),
                    f(rep.gamma_observed),
                    rep.degenerate.to_string(),
                ]);
                if !rep.degenerate && rep.admissible {
                    gammas.push(rep.gamma_observed);
                }
            }
        }
        self.write("energy.csv", t.as_str())?;
        let max_gamma = gammas.iter().cloned().fold(f64::NAN, f64::max);
        self.checks.insert("energy".into(), json!({"reports": gammas.len(), "max_gamma_observed": max_gamma}));
        self.time("energy", start);
        Ok(())
    }

    fn energy_job(&self, problem: &Problem, field: &SpaceTimeField, job: &EnergyJob) -> Result<Vec<EnergyReport>> {
        let anchor = self
            .config
            .analysis
            .anchors
            .iter()
            .find(|a| a.id == job.anchor)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown anchor {}", job.anchor)))?;
        let cyl = anchor_cylinder(anchor, job.radius, job.theta, problem.flux.p())?;
        let (mu_minus, mu_plus) = cylinder_range(field, &cyl)?;
        let omega = mu_plus - mu_minus;
        let mut out = Vec::new();
        for level in &job.levels {
            let k = match (level.k, level.fraction) {
                (Some(k), _) => k,
                (None, Some(fr)) if level.sign.is_plus() => mu_plus - fr * omega,
                (None, Some(fr)) => mu_minus + fr * omega,
                (None, None) => unreachable!("validated"),
            };
            let lvl = TruncationLevel { k, sign: level.sign };
            for &sigma in &job.sigmas {
                let cutoff = Cutoff::new(job.cutoff, sigma)?;
                let rep = if problem.bc.is_dirichlet() {
                    caccioppoli_sides(problem, field, &lvl, &cutoff, job.variant, &cyl)?
                } else {
                    neumann_energy_sides(problem, field, &lvl, &cutoff, &cyl)?
                };
                out.push(rep);
            }
        }
        Ok(out)
    }

    fn recur_stage(&mut self) -> std::result::Result<(), RunError> {
        let jobs = self.config.analysis.recurrences.clone();
        if jobs.is_empty() {
            return Ok(());
        }
        let start = Instant::now();
        let mut summary = Table::new(&[
            "id",
            "scheme",
            "steps",
            "termination",
            "final_omega [1]",
            "final_rho [length]",
            "domination_n_o",
            "verdict",
        ]);
        for job in &jobs {
            let ana = at(Stage::Analysis);
            let (scheme, trace) = match job {
                RecurrenceJob::Type { kind, eta, q, omega0, n_max, .. } => {
                    ("type", iterate_type(&TypeSpec { kind: *kind, eta: *eta, q: *q }, *omega0, *n_max))
                }
                RecurrenceJob::Boundary { spec, omega0, rho0, r_stop, n_max, .. } => {
                    ("boundary", iterate_boundary_scheme(spec, *omega0, *rho0, *r_stop, *n_max))
                }
                RecurrenceJob::Interior { spec, omega0, rho0, r_stop, n_max, .. } => {
                    ("interior", iterate_interior_scheme(spec, *omega0, *rho0, *r_stop, *n_max))
                }
                RecurrenceJob::Neumann { spec, omega0, rho0, r_stop, n_max, .. } => {
                    ("neumann", iterate_neumann_scheme(spec, *omega0, *rho0, *r_stop, *n_max))
                }
                RecurrenceJob::DeGiorgi { id, params, n_max } => {
                    let outcome = degiorgi_converges(params, *n_max).map_err(ana)?;
                    let mut t = Table::new(&["n", "ln_y [1]"]);
                    for (n, v) in outcome.ln_y.iter().enumerate() {
                        t.row(&[n.to_string(), f(*v)]);
                    }
                    self.write(&format!("degiorgi_{id}.csv"), t.as_str())?;
                    let verdict = format!("{:?}", outcome.verdict).to_uppercase();
                    summary.row(&[
                        id.clone(),
                        "de_giorgi".into(),
                        outcome.ln_y.len().saturating_sub(1).to_string(),
                        String::new(),
                        f(outcome.ln_y.last().copied().unwrap_or(f64::NAN).exp()),
                        String::new(),
                        String::new(),
                        verdict,
                    ]);
                    continue;
                }
            };
            let trace = trace.map_err(ana)?;
            self.write(&format!("trace_{}.csv", job.id()), trace_table(&trace).as_str())?;
            let dom = dominating_sequence_check(&trace, 0.5 / trace.q);
            summary.row(&[
                job.id().to_string(),
                scheme.into(),
                (trace.len() - 1).to_string(),
                trace.termination.name().into(),
                f(*trace.omega.last().unwrap()),
                trace.ln_rho.last().map(|l| f(l.exp())).unwrap_or_default(),
                dom.n_o.map(|n| n.to_string()).unwrap_or_default(),
                String::new(),
            ]);
        }
        self.write("recurrences.csv", summary.as_str())?;
        self.time("recur", start);
        Ok(())
    }

    fn sweep_stage(&mut self) -> std::result::Result<(), RunError> {
        use rayon::prelude::*;
        let eps_list = self.config.problem.eps_list.clone();
        if eps_list.is_empty() {
            return Err(RunError {
                stage: Stage::Config,
                error: Error::ConfigInvalid(vec!["sweep needs problem.eps_list".into()]),
            });
        }
        let start = Instant::now();
        let cfg = self.solver_config();
        let t_final = self.config.problem.t_final;
        let runs: Vec<Result<SpaceTimeField>> = eps_list
            .par_iter()
            .map(|&eps| {
                let wrap = |e: Error| Error::SweepFailure { eps, source: Box::new(e) };
                let pb = self.build_problem(eps).map_err(wrap)?;
                pb.solve(&cfg, t_final).map_err(wrap)
            })
            .collect();
        let fields = runs.into_iter().collect::<Result<Vec<_>>>().map_err(at(Stage::Solve))?;
        self.time("sweep_solve", start);
        let start = Instant::now();
        let a = &self.config.analysis;
        let rep = sweep_report(&eps_list, &fields, &a.anchors, &a.schedule, self.config.problem.p, a.xi)
            .map_err(at(Stage::Analysis))?;
        let mut d = Table::new(&["eps_i [temperature]", "eps_j [temperature]", "sup_distance [temperature]"]);
        for i in 0..eps_list.len() {
            for j in i + 1..eps_list.len() {
                d.row(&[f(eps_list[i]), f(eps_list[j]), f(rep.distances[i][j])]);
            }
        }
        self.write("sweep_distances.csv", d.as_str())?;
        let mut fits = Table::new(&["anchor", "eps [temperature]", "c [temperature]", "exponent [1]", "residual [1]"]);
        let mut spread = Table::new(&["anchor", "c_spread [1]", "s_spread [1]"]);
        for ar in &rep.anchors {
            for (eps, fit) in eps_list.iter().zip(&ar.fits) {
                match fit {
                    Some(ft) => fits.row(&[ar.anchor_id.clone(), f(*eps), f(ft.c), f(ft.exponent), f(ft.residual)]),
                    None => fits.row(&[ar.anchor_id.clone(), f(*eps), String::new(), String::new(), String::new()]),
                }
            }
            spread.row(&[ar.anchor_id.clone(), f(ar.c_spread), f(ar.s_spread)]);
        }
        self.write("sweep_fits.csv", fits.as_str())?;
        self.write("sweep_spread.csv", spread.as_str())?;
        self.checks.insert(
            "sweep".into(),
            json!({"consecutive": rep.consecutive, "non_increasing": rep.non_increasing}),
        );
        self.time("sweep_analysis", start);
        Ok(())
    }

    fn write_manifest(&mut self, cmd: Command) -> Result<()> {
        let mut outputs = self.outputs.clone();
        outputs.sort();
        outputs.dedup();
        let body = json!({
            "tool": "stefan-lab",
            "version": TOOL_VERSION,
            "command": cmd.name(),
            "config_hash": self.hash,
            "seed": self.opts.seed,
            "stride": self.config.output.stride,
            "outputs": outputs,
            "checks": self.checks,
            "timings_s": self.timings,
        });
        fs::write(self.out.join("manifest.json"), serde_json::to_string_pretty(&body)?)?;
        Ok(())
    }
}

/// `(min, max)` of `u` over the clipped cylinder.
pub fn cylinder_range(field: &SpaceTimeField, cyl: &IntrinsicCylinder) -> Result<(f64, f64)> {
    let clip = cylinder_clip(&field.grid, cyl, &field.times);
    if clip.is_empty() {
        return Err(Error::EmptyCylinder { radius: cyl.rho });
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (c, s) in clip.samples() {
        lo = lo.min(field.u[s][c]);
        hi = hi.max(field.u[s][c]);
    }
    Ok((lo, hi))
}

pub fn steps_table(field: &SpaceTimeField) -> Table {
    let mut t = Table::new(&[
        "step",
        "t [time]",
        "max_abs_u [temperature]",
        "total_enthalpy [enthalpy*volume]",
        "interface [length]",
    ]);
    for s in 0..field.n_steps() {
        let max_u = field.u[s].iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        t.row(&[
            s.to_string(),
            f(field.times[s]),
            f(max_u),
            f(field.total_enthalpy(s)),
            opt(field.interface_position(s)),
        ]);
    }
    t
}

pub fn solver_stats_table(stats: &[StepStats]) -> Table {
    let mut t = Table::new(&["step", "iterations", "residual [enthalpy]", "converged"]);
    for (n, s) in stats.iter().enumerate() {
        t.row(&[(n + 1).to_string(), s.iterations.to_string(), f(s.residual), s.converged.to_string()]);
    }
    t
}

pub fn trace_table(trace: &IterationTrace) -> Table {
    let mut t = Table::new(&["n", "omega [1]", "rho [length]", "ln_rho [1]", "theta [1]", "theta_tilde [1]"]);
    for n in 0..trace.len() {
        let lr = trace.ln_rho.get(n).copied();
        t.row(&[
            n.to_string(),
            f(trace.omega[n]),
            opt(lr.map(f64::exp)),
            opt(lr),
            opt(trace.theta.get(n).copied()),
            opt(trace.theta_tilde.get(n).copied()),
        ]);
    }
    t
}

/// Similarity table for the one-phase problem.
pub fn stefan_table(wall_temperature: f64, nu: f64, times: &[f64]) -> Result<Table> {
    let s = OnePhaseStefan::new(wall_temperature, nu)?;
    let mut t = Table::new(&["t [time]", "interface [length]", "interface_speed [length/time]"]);
    for row in s.table(times) {
        t.row(&[f(row.t), f(row.interface), f(row.interface_speed)]);
    }
    Ok(t)
}
