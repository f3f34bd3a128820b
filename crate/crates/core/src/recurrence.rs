//! Oscillation recurrences and the De Giorgi iteration, run as plain
//! difference equations.
//!
//! Radii shrink super-geometrically in the boundary scheme and leave the
//! range of `f64` after a few hundred steps, so every radius is carried as
//! `ln ρ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modulus::linear_fit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    MaxSteps,
    RadiusReached,
    /// `ω` reached zero.
    Exhausted,
}

impl Termination {
    pub fn name(&self) -> &'static str {
        match self {
            Termination::MaxSteps => "max_steps",
            Termination::RadiusReached => "radius_reached",
            Termination::Exhausted => "exhausted",
        }
    }
}

/// Generated sequences; `feeds[n]` holds the three candidates whose maximum is `ω_{n+1}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationTrace {
    pub omega: Vec<f64>,
    /// Empty for the pure Type I / Type II recurrences.
    pub ln_rho: Vec<f64>,
    pub theta: Vec<f64>,
    pub theta_tilde: Vec<f64>,
    pub feeds: Vec<[f64; 3]>,
    pub eta: f64,
    pub q: f64,
    pub termination: Termination,
}

impl IterationTrace {
    fn new(eta: f64, q: f64) -> Self {
        Self {
            omega: Vec::new(),
            ln_rho: Vec::new(),
            theta: Vec::new(),
            theta_tilde: Vec::new(),
            feeds: Vec::new(),
            eta,
            q,
            termination: Termination::MaxSteps,
        }
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn rho(&self, n: usize) -> f64 {
        self.ln_rho[n].exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TypeKind {
    /// `ω_{n+1} = (1 − 2^{−1/ω_n^q}) ω_n`
    TypeI,
    /// `ω_{n+1} = ω_n (1 − η ω_n^q)`
    #[serde(rename = "type_ii")]
    TypeII,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TypeSpec {
    pub kind: TypeKind,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default = "default_q")]
    pub q: f64,
}

fn default_eta() -> f64 {
    0.5
}

fn default_q() -> f64 {
    1.0
}

fn check_eta_q(eta: f64, q: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eta) || !(q > 0.0 && q.is_finite()) {
        return Err(Error::InvalidArgument(format!("need eta in [0, 1] and q > 0 (eta = {eta}, q = {q})")));
    }
    Ok(())
}

pub fn iterate_type(spec: &TypeSpec, omega0: f64, n_max: usize) -> Result<IterationTrace> {
    check_eta_q(spec.eta, spec.q)?;
    if !(omega0 > 0.0 && omega0 < 1.0) || n_max == 0 {
        return Err(Error::InvalidArgument(format!("need omega0 in (0, 1) and n_max >= 1 (omega0 = {omega0})")));
    }
    let eta = if spec.kind == TypeKind::TypeI { f64::NAN } else { spec.eta };
    let mut tr = IterationTrace::new(eta, spec.q);
    tr.omega.reserve(n_max + 1);
    tr.feeds.reserve(n_max);
    tr.omega.push(omega0);
    let mut w = omega0;
    for _ in 0..n_max {
        let wq = w.powf(spec.q);
        w = match spec.kind {
            TypeKind::TypeI => (1.0 - (-1.0 / wq).exp2()) * w,
            TypeKind::TypeII => w * (1.0 - spec.eta * wq),
        };
        tr.omega.push(w);
        tr.feeds.push([w, 0.0, 0.0]);
        if w <= 0.0 {
            tr.termination = Termination::Exhausted;
            break;
        }
    }
    Ok(tr)
}

/// Constants of the lateral-boundary scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySpec {
    pub p: f64,
    pub eta: f64,
    pub q: f64,
    /// `A` in the feed `A ρ_n^{α_o}`.
    pub a_feed: f64,
    pub alpha_o: f64,
    pub xi: f64,
    pub xi_bar: f64,
    pub q_bar: f64,
    pub xi_tilde: f64,
    /// Declared data modulus `osc g ≤ C_g (ln 1/ρ)^{−λ}`.
    pub c_g: f64,
    pub lambda: f64,
}

impl BoundarySpec {
    /// `q̄ = 1 + q(p − 1)` and `ξ̃ = ½ 32^{−p} ξ ξ̄^{p−1} 2^{−(1+q)(p−1)}`, which make
    /// every step nest whenever `ω_{n+1} ≥ ω_n / 2`.
    #[allow(clippy::too_many_arguments)]
    pub fn consistent(p: f64, eta: f64, q: f64, a_feed: f64, alpha_o: f64, xi: f64, xi_bar: f64, c_g: f64, lambda: f64) -> Self {
        let q_bar = 1.0 + q * (p - 1.0);
        let xi_tilde = 0.5 * 32f64.powf(-p) * xi * xi_bar.powf(p - 1.0) * 2f64.powf(-(1.0 + q) * (p - 1.0));
        Self { p, eta, q, a_feed, alpha_o, xi, xi_bar, q_bar, xi_tilde, c_g, lambda }
    }

    pub fn validate(&self) -> Result<()> {
        check_eta_q(self.eta, self.q)?;
        if !(self.p >= 2.0) {
            return Err(Error::InvalidArgument(format!("p must be >= 2, got {}", self.p)));
        }
        let positive = [self.xi, self.xi_bar, self.q_bar, self.xi_tilde, self.alpha_o, self.lambda];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) || self.a_feed < 0.0 || self.c_g < 0.0 {
            return Err(Error::InvalidArgument(format!("boundary scheme constants out of range: {self:?}")));
        }
        Ok(())
    }

    pub fn ln_theta(&self, omega: f64) -> f64 {
        (2.0 - self.p) * (self.xi * omega).ln()
    }

    pub fn ln_theta_tilde(&self, omega: f64) -> f64 {
        (1.0 - self.p) * (self.xi * self.xi_bar * omega.powf(1.0 + self.q)).ln()
    }
}

/// `2 C_g (ln 1/ρ)^{−λ}`, infinite for `ρ ≥ 1`.
pub fn declared_g_feed(c_g: f64, lambda: f64, ln_rho: f64) -> f64 {
    if ln_rho >= 0.0 {
        f64::INFINITY
    } else {
        2.0 * c_g * (-ln_rho).powf(-lambda)
    }
}

pub fn iterate_boundary_scheme(spec: &BoundarySpec, omega0: f64, rho0: f64, r_stop: f64, n_max: usize) -> Result<IterationTrace> {
    if !(rho0 > 0.0 && r_stop > 0.0) {
        return Err(Error::InvalidArgument("radii must be positive".into()));
    }
    let (c_g, lambda) = (spec.c_g, spec.lambda);
    iterate_boundary_scheme_ln(spec, omega0, rho0.ln(), r_stop.ln(), n_max, &|lr| declared_g_feed(c_g, lambda, lr))
}

/// As [`iterate_boundary_scheme`] with radii given as logarithms and the data
/// feed `2 osc g` supplied by `g_feed(ln ρ_n)`.
pub fn iterate_boundary_scheme_ln(
    spec: &BoundarySpec,
    omega0: f64,
    ln_rho0: f64,
    ln_r_stop: f64,
    n_max: usize,
    g_feed: &dyn Fn(f64) -> f64,
) -> Result<IterationTrace> {
    spec.validate()?;
    if !(omega0 > 0.0 && omega0.is_finite()) || !ln_rho0.is_finite() || ln_rho0 >= 0.0 {
        return Err(Error::InvalidArgument(format!("need omega0 > 0 and rho0 in (0, 1) (omega0 = {omega0})")));
    }
    let p = spec.p;
    let ln32 = 32f64.ln();
    let mut tr = IterationTrace::new(spec.eta, spec.q);
    let mut w = omega0;
    let mut lr = ln_rho0;
    tr.omega.push(w);
    tr.ln_rho.push(lr);
    tr.theta.push(spec.ln_theta(w).exp());
    tr.theta_tilde.push(spec.ln_theta_tilde(w).exp());
    for n in 0..n_max {
        if lr < ln_r_stop {
            tr.termination = Termination::RadiusReached;
            return Ok(tr);
        }
        let feeds = [w * (1.0 - spec.eta * w.powf(spec.q)), spec.a_feed * (spec.alpha_o * lr).exp(), g_feed(lr)];
        let w_next = feeds[0].max(feeds[1]).max(feeds[2]);
        let lr_next = lr + (spec.xi_tilde.ln() + spec.q_bar * w.ln()) / p;
        if !(w_next <= w) {
            return Err(Error::NestingViolation {
                step: n,
                detail: format!("oscillation increased from {w} to {w_next}"),
            });
        }
        if !(w_next > 0.0) {
            tr.feeds.push(feeds);
            tr.omega.push(w_next);
            tr.termination = Termination::Exhausted;
            return Ok(tr);
        }
        // θ̃_{n+1}(8ρ_{n+1})^p ≤ θ_n(ρ_n/4)^p, i.e. after dividing by ρ_n^p
        let lhs = spec.ln_theta_tilde(w_next) + p * (8f64.ln() + lr_next - lr);
        let rhs = spec.ln_theta(w) - p * 4f64.ln();
        if lhs > rhs + 1e-12 * (1.0 + rhs.abs() + p * ln32) {
            return Err(Error::NestingViolation {
                step: n,
                detail: format!("ln(θ̃_{{n+1}}(8ρ_{{n+1}})^p / ρ_n^p) = {lhs} exceeds ln(θ_n 4^{{−p}}) = {rhs}"),
            });
        }
        tr.feeds.push(feeds);
        w = w_next;
        lr = lr_next;
        tr.omega.push(w);
        tr.ln_rho.push(lr);
        tr.theta.push(spec.ln_theta(w).exp());
        tr.theta_tilde.push(spec.ln_theta_tilde(w).exp());
    }
    tr.termination = if lr < ln_r_stop { Termination::RadiusReached } else { Termination::MaxSteps };
    Ok(tr)
}

/// Interior scheme for `N` space dimensions and the exponent `κ` of the
/// expansion of positivity: `a = (N+p)(p−2)κ/p`, `q = (N+p)κ/p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteriorSpec {
    pub n_dim: usize,
    pub p: f64,
    pub kappa: f64,
    pub eta: f64,
    pub a_feed: f64,
    pub l_o: f64,
}

impl InteriorSpec {
    pub fn a(&self) -> f64 {
        (self.n_dim as f64 + self.p) * (self.p - 2.0) * self.kappa / self.p
    }

    pub fn q(&self) -> f64 {
        (self.n_dim as f64 + self.p) * self.kappa / self.p
    }

    /// `ρ_{n+1} = c ρ_n` with `c = 2^{−(a+2p−2)/p}`.
    pub fn shrink(&self) -> f64 {
        2f64.powf(-(self.a() + 2.0 * self.p - 2.0) / self.p)
    }

    pub fn ln_theta(&self, omega: f64) -> f64 {
        self.l_o.ln() - self.a() * omega.ln() + (2.0 - self.p) * (0.25 * omega).ln()
    }
}

pub fn iterate_interior_scheme(spec: &InteriorSpec, omega0: f64, rho0: f64, r_stop: f64, n_max: usize) -> Result<IterationTrace> {
    check_eta_q(spec.eta, spec.q())?;
    if spec.n_dim == 0 || !(spec.p >= 2.0) || !(spec.l_o > 0.0) || spec.a_feed < 0.0 {
        return Err(Error::InvalidArgument(format!("interior scheme constants out of range: {spec:?}")));
    }
    if !(omega0 > 0.0 && rho0 > 0.0 && r_stop > 0.0) {
        return Err(Error::InvalidArgument("need omega0, rho0, r_stop > 0".into()));
    }
    let q = spec.q();
    let expo = spec.a() + spec.p - 2.0;
    let ln_c = spec.shrink().ln();
    let mut tr = IterationTrace::new(spec.eta, q);
    let (mut w, mut lr) = (omega0, rho0.ln());
    tr.omega.push(w);
    tr.ln_rho.push(lr);
    tr.theta.push(spec.ln_theta(w).exp());
    for n in 0..n_max {
        if lr < r_stop.ln() {
            tr.termination = Termination::RadiusReached;
            return Ok(tr);
        }
        let feed = if expo > 0.0 { spec.a_feed * (lr / expo).exp() } else { 0.0 };
        let feeds = [w * (1.0 - spec.eta * w.powf(q)), feed, 0.0];
        let w_next = feeds[0].max(feeds[1]);
        if !(w_next <= w) {
            return Err(Error::NestingViolation { step: n, detail: format!("oscillation increased from {w} to {w_next}") });
        }
        if !(w_next > 0.0) {
            tr.feeds.push(feeds);
            tr.omega.push(w_next);
            tr.termination = Termination::Exhausted;
            return Ok(tr);
        }
        let lr_next = lr + ln_c;
        // θ_{n+1} ρ_{n+1}^p ≤ θ_n (ρ_n/2)^p
        let lhs = spec.ln_theta(w_next) + spec.p * (lr_next - lr);
        let rhs = spec.ln_theta(w) - spec.p * 2f64.ln();
        if lhs > rhs + 1e-12 * (1.0 + rhs.abs()) {
            return Err(Error::NestingViolation { step: n, detail: format!("interior cylinders do not nest ({lhs} > {rhs})") });
        }
        tr.feeds.push(feeds);
        w = w_next;
        lr = lr_next;
        tr.omega.push(w);
        tr.ln_rho.push(lr);
        tr.theta.push(spec.ln_theta(w).exp());
    }
    tr.termination = if lr < r_stop.ln() { Termination::RadiusReached } else { Termination::MaxSteps };
    Ok(tr)
}

/// Neumann scheme (`p = 2`): `ρ_{n+1}² = (ρ_n/2)² θ_n`, `θ_n = c_o (ω_n/4)^{(N+2)/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeumannSpec {
    pub n_dim: usize,
    pub eta: f64,
    pub q: f64,
    pub c_o: f64,
    pub gamma: f64,
    pub c2: f64,
}

impl NeumannSpec {
    pub fn c(&self) -> f64 {
        (self.n_dim as f64 + 2.0) / 2.0
    }

    pub fn theta(&self, omega: f64) -> f64 {
        self.c_o * (0.25 * omega).powf(self.c())
    }
}

pub fn iterate_neumann_scheme(spec: &NeumannSpec, omega0: f64, rho0: f64, r_stop: f64, n_max: usize) -> Result<IterationTrace> {
    check_eta_q(spec.eta, spec.q)?;
    if spec.n_dim == 0 || !(spec.c_o > 0.0) || spec.gamma < 0.0 || spec.c2 < 0.0 {
        return Err(Error::InvalidArgument(format!("Neumann scheme constants out of range: {spec:?}")));
    }
    if !(omega0 > 0.0 && rho0 > 0.0 && r_stop > 0.0) {
        return Err(Error::InvalidArgument("need omega0, rho0, r_stop > 0".into()));
    }
    let mut tr = IterationTrace::new(spec.eta, spec.q);
    let (mut w, mut lr) = (omega0, rho0.ln());
    tr.omega.push(w);
    tr.ln_rho.push(lr);
    tr.theta.push(spec.theta(w));
    for n in 0..n_max {
        if lr < r_stop.ln() {
            tr.termination = Termination::RadiusReached;
            return Ok(tr);
        }
        let feeds = [w * (1.0 - spec.eta * w.powf(spec.q)), spec.gamma * spec.c2 * lr.exp(), 0.0];
        let w_next = feeds[0].max(feeds[1]);
        if !(w_next <= w) {
            return Err(Error::NestingViolation { step: n, detail: format!("oscillation increased from {w} to {w_next}") });
        }
        let theta = spec.theta(w);
        if theta > 1.0 {
            return Err(Error::NestingViolation { step: n, detail: format!("θ_n = {theta} > 1, so Q_(n+1) leaves Q'_n") });
        }
        tr.feeds.push(feeds);
        if !(w_next > 0.0) {
            tr.omega.push(w_next);
            tr.termination = Termination::Exhausted;
            return Ok(tr);
        }
        lr += 0.5f64.ln() + 0.5 * theta.ln();
        w = w_next;
        tr.omega.push(w);
        tr.ln_rho.push(lr);
        tr.theta.push(spec.theta(w));
    }
    tr.termination = if lr < r_stop.ln() { Termination::RadiusReached } else { Termination::MaxSteps };
    Ok(tr)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DominationReport {
    pub sigma: f64,
    /// Smallest index from which `a_n = (1+n)^{−σ} max{1, ω_0}` dominates the trace.
    pub n_o: Option<usize>,
    /// Number of indices checked.
    pub checked: usize,
}

/// Find the smallest `n_o` such that `a_{n_o} ≥ ω_{n_o}` and, for every later
/// generated step, `a_{n+1}` dominates `a_n(1 − η a_n^q)` and the two data feeds.
pub fn dominating_sequence_check(trace: &IterationTrace, sigma: f64) -> DominationReport {
    let a0 = trace.omega[0].max(1.0);
    let a = |n: usize| a0 * (1.0 + n as f64).powf(-sigma);
    let steps = trace.feeds.len();
    let eta = if trace.eta.is_nan() { 0.0 } else { trace.eta };
    let step_ok = |n: usize| {
        let an = a(n);
        let f = trace.feeds[n];
        let decay = an * (1.0 - eta * an.powf(trace.q));
        let next = a(n + 1);
        next >= decay && next >= f[1] && next >= f[2] && trace.omega[n + 1] <= next
    };
    let mut n_o = None;
    for n in (0..steps).rev() {
        if !step_ok(n) {
            break;
        }
        if trace.omega[n] <= a(n) {
            n_o = Some(n);
        }
    }
    DominationReport { sigma, n_o, checked: steps }
}

/// The `n` with `ρ_{n+1} < 4r ≤ ρ_n` and the bound `ω_{n+1}`.
pub fn invert_radius_to_index(trace: &IterationTrace, r: f64) -> Result<(usize, f64)> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {r}")));
    }
    invert_ln_radius_to_index(trace, r.ln())
}

pub fn invert_ln_radius_to_index(trace: &IterationTrace, ln_r: f64) -> Result<(usize, f64)> {
    let lr = &trace.ln_rho;
    if lr.len() < 2 {
        return Err(Error::TraceExhausted { ln_radius: ln_r });
    }
    let target = ln_r + 4f64.ln();
    let slack = 1e-12 * (1.0 + target.abs());
    if target > lr[0] + slack {
        return Err(Error::InvalidArgument(format!("4r exceeds rho_0 (ln 4r = {target}, ln rho_0 = {})", lr[0])));
    }
    // largest n with target ≤ ln ρ_n
    let n = lr.partition_point(|&v| target <= v + slack) - 1;
    if n + 1 >= lr.len() || n + 1 >= trace.omega.len() {
        return Err(Error::TraceExhausted { ln_radius: ln_r });
    }
    Ok((n, trace.omega[n + 1]))
}

/// `γ' = min_n n² (1 − ln min{1, ω_0}) / ln(ρ_0/ρ_n)` over `n ∈ [n_lo, n_hi]`.
pub fn index_bound_constant(trace: &IterationTrace, n_lo: usize, n_hi: usize) -> Result<f64> {
    let n_hi = n_hi.min(trace.ln_rho.len().saturating_sub(1));
    if n_lo == 0 || n_lo > n_hi {
        return Err(Error::InvalidArgument(format!("empty index window [{n_lo}, {n_hi}]")));
    }
    let factor = 1.0 - trace.omega[0].min(1.0).ln();
    let g = (n_lo..=n_hi)
        .map(|n| (n as f64).powi(2) * factor / (trace.ln_rho[0] - trace.ln_rho[n]))
        .fold(f64::INFINITY, f64::min);
    Ok(g)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeGiorgiParams {
    pub c: f64,
    pub b: f64,
    pub alpha: f64,
    pub y0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Converges,
    Diverged,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeGiorgiOutcome {
    /// `ln Y_n`, clamped at `ln 10^300`.
    pub ln_y: Vec<f64>,
    pub verdict: Verdict,
    /// `C^{−1/α} b^{−1/α²}`
    pub threshold: f64,
    /// Index at which the clamp was hit.
    pub clamped_at: Option<usize>,
    /// `Y_n ≤ b^{−n/α} Y_0` for every computed `n` (only meaningful when converging).
    pub bound_holds: bool,
}

pub const DEGIORGI_CLAMP: f64 = 1e300;

/// Iterate `Y_{n+1} = C bⁿ Y_n^{1+α}` for `n_max` steps.
///
/// Written as `ln Y_n = ln Y_0 − n ln b/α + z_n` with `z_{n+1} = (1+α) z_n + α d`,
/// `d = ln Y_0 − ln threshold`, so a start exactly at the threshold stays on the
/// geometric bound instead of amplifying round-off in `d`.
pub fn degiorgi_converges(d: &DeGiorgiParams, n_max: usize) -> Result<DeGiorgiOutcome> {
    if !(d.c > 0.0 && d.b >= 1.0 && d.alpha > 0.0 && d.y0 > 0.0 && d.y0 <= 1.0) || n_max == 0 {
        return Err(Error::InvalidArgument(format!("De Giorgi parameters out of range: {d:?}")));
    }
    let (lc, lb, a) = (d.c.ln(), d.b.ln(), d.alpha);
    let ln_thr = -lc / a - lb / (a * a);
    let ln_y0 = d.y0.ln();
    let mut dev = ln_y0 - ln_thr;
    if dev.abs() <= 1e-14 * (1.0 + ln_thr.abs()) {
        dev = 0.0;
    }
    let verdict = if dev <= 0.0 { Verdict::Converges } else { Verdict::Diverged };
    let clamp = DEGIORGI_CLAMP.ln();
    let mut ln_y = Vec::with_capacity(n_max + 1);
    ln_y.push(ln_y0);
    let mut z = 0.0;
    let mut clamped_at = None;
    let mut bound_holds = true;
    for n in 1..=n_max {
        z = (1.0 + a) * z + a * dev;
        let v = ln_y0 - n as f64 * lb / a + z;
        if v >= clamp {
            ln_y.push(clamp);
            clamped_at = Some(n);
            bound_holds = false;
            break;
        }
        if v > ln_y0 - n as f64 * lb / a {
            bound_holds = false;
        }
        ln_y.push(v);
    }
    Ok(DeGiorgiOutcome { ln_y, verdict, threshold: ln_thr.exp(), clamped_at, bound_holds })
}

/// Smallest integer `j_*` with `γ 4^{N+2} / j_*^{(p−1)/p} ≤ 1/2`.
pub fn jstar_select(gamma: f64, n_dim: usize, p: f64) -> Result<u64> {
    if !(gamma > 0.0 && p >= 2.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("need gamma > 0 and p >= 2 (gamma = {gamma}, p = {p})")));
    }
    let lhs = |j: f64| gamma * 4f64.powi(n_dim as i32 + 2) / j.powf((p - 1.0) / p);
    let guess = (2.0 * gamma * 4f64.powi(n_dim as i32 + 2)).powf(p / (p - 1.0)).ceil();
    if !(guess < 9.0e15) {
        return Err(Error::InvalidArgument(format!("j_* = {guess:e} exceeds the exact integer range")));
    }
    let mut j = guess.max(1.0);
    while j > 1.0 && lhs(j - 1.0) <= 0.5 {
        j -= 1.0;
    }
    while lhs(j) > 0.5 {
        j += 1.0;
    }
    Ok(j as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MSelection {
    pub m: u32,
    /// `c_1 (ξω)^b`
    pub level: f64,
    /// `ln δ` with `δ = ½ [c_1 (ξω)^b]^{j_*}`.
    pub ln_delta: f64,
}

impl MSelection {
    /// `δ`, which underflows to zero for large `j_*`.
    pub fn delta(&self) -> f64 {
        self.ln_delta.exp()
    }
}

/// Smallest `m ≥ 0` with `2^{−m} ≤ c_1 (ξω)^b`, and the induced `δ`.
pub fn m_select(c1: f64, xi_omega: f64, b: f64, j_star: u64) -> Result<MSelection> {
    let level = c1 * xi_omega.powf(b);
    if !(level > 0.0 && level.is_finite()) {
        return Err(Error::InvalidArgument(format!("c1 (xi omega)^b must be positive, got {level}")));
    }
    let mut m = (-level.log2()).ceil().max(0.0) as u32;
    while m > 0 && 2f64.powi(-(m as i32 - 1)) <= level {
        m -= 1;
    }
    while 2f64.powi(-(m as i32)) > level {
        m += 1;
    }
    Ok(MSelection { m, level, ln_delta: -(2f64.ln()) + j_star as f64 * level.ln() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthModel {
    /// `ω_n ≈ c n^{−s}`
    PowerInN,
    /// `ω_n ≈ c (ln n)^{−s}`
    LogInN,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentFit {
    pub c: f64,
    pub s: f64,
    pub residual: f64,
}

/// Least-squares fit of `ln ω_n` on the tail half of the trace, or on
/// `n ∈ [lo, hi]` when a window is given.
pub fn asymptotic_exponent(omega: &[f64], model: GrowthModel, window: Option<(usize, usize)>) -> Result<ExponentFit> {
    if omega.len() < 100 {
        return Err(Error::Fit(format!("trace too short ({} < 100)", omega.len())));
    }
    let last = omega.len() - 1;
    let (lo, hi) = window.unwrap_or((last / 2, last));
    let lo = lo.max(3);
    let hi = hi.min(last);
    if lo >= hi {
        return Err(Error::Fit(format!("empty fitting window [{lo}, {hi}]")));
    }
    let mut xs = Vec::with_capacity(hi - lo + 1);
    let mut ys = Vec::with_capacity(hi - lo + 1);
    for (n, &w) in omega.iter().enumerate().take(hi + 1).skip(lo) {
        if !(w > 0.0) {
            return Err(Error::Fit(format!("non-positive omega at n = {n}")));
        }
        let ln_n = (n as f64).ln();
        xs.push(match model {
            GrowthModel::PowerInN => ln_n,
            GrowthModel::LogInN => ln_n.ln(),
        });
        ys.push(w.ln());
    }
    let (intercept, slope, residual) = linear_fit(&xs, &ys)?;
    Ok(ExponentFit { c: intercept.exp(), s: -slope, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn type2(eta: f64, q: f64) -> TypeSpec {
        TypeSpec { kind: TypeKind::TypeII, eta, q }
    }

    #[test]
    fn type_guards() {
        assert!(iterate_type(&type2(1.0, 1.0), 1.0, 10).is_err());
        assert!(iterate_type(&type2(0.5, 1.0), 0.0, 10).is_err());
        assert!(iterate_type(&type2(0.5, 1.0), 0.5, 0).is_err());
    }

    #[test]
    fn type2_telescoping_law() {
        let tr = iterate_type(&type2(0.5, 2.0), 0.7, 5000).unwrap();
        for w in tr.omega.windows(2) {
            let inc = w[1].powf(-2.0) - w[0].powf(-2.0);
            assert!(inc >= 1.0 - 1e-9, "{inc}");
        }
        let n = tr.len();
        let inc = tr.omega[n - 1].powf(-2.0) - tr.omega[n - 2].powf(-2.0);
        assert_abs_diff_eq!(inc, 1.0, epsilon = 1e-2);
    }

    #[test]
    fn m_selection_example() {
        let sel = m_select(0.1, 0.5, 2.5, 1).unwrap();
        assert_eq!(sel.m, 6);
        assert_abs_diff_eq!(sel.level, 0.1 * 0.5f64.powf(2.5), epsilon = 1e-16);
        assert_abs_diff_eq!(sel.delta(), 0.5 * sel.level, epsilon = 1e-16);
        assert_eq!(m_select(1.0, 1.0, 1.0, 1).unwrap().m, 0);
        assert_eq!(m_select(0.25, 1.0, 1.0, 1).unwrap().m, 2);
    }

    #[test]
    fn jstar_examples() {
        assert_eq!(jstar_select(1.0, 1, 2.0).unwrap(), 16384);
        assert!(jstar_select(2.0, 1, 2.0).unwrap() >= 16384);
        let j = jstar_select(0.3, 2, 3.0).unwrap() as f64;
        let f = |j: f64| 0.3 * 256.0 / j.powf(2.0 / 3.0);
        assert!(f(j) <= 0.5 && f(j - 1.0) > 0.5);
    }

    #[test]
    fn degiorgi_squaring() {
        let out = degiorgi_converges(&DeGiorgiParams { c: 1.0, b: 1.0, alpha: 1.0, y0: 0.5 }, 8).unwrap();
        assert_eq!(out.verdict, Verdict::Converges);
        for (n, ly) in out.ln_y.iter().enumerate() {
            assert_abs_diff_eq!(*ly, 2f64.powi(n as i32) * 0.5f64.ln(), epsilon = 1e-9);
        }
    }

    #[test]
    fn degiorgi_threshold_example() {
        let out = degiorgi_converges(&DeGiorgiParams { c: 2.0, b: 4.0, alpha: 1.0, y0: 0.125 }, 60).unwrap();
        assert_abs_diff_eq!(out.threshold, 0.125, epsilon = 1e-15);
        assert_eq!(out.verdict, Verdict::Converges);
        assert!(out.bound_holds);
        let out = degiorgi_converges(&DeGiorgiParams { c: 2.0, b: 4.0, alpha: 1.0, y0: 1.0 }, 200).unwrap();
        assert_eq!(out.verdict, Verdict::Diverged);
        assert!(out.clamped_at.is_some());
    }

    #[test]
    fn interior_p2_ignores_lo() {
        let mk = |l_o| InteriorSpec { n_dim: 2, p: 2.0, kappa: 0.5, eta: 0.5, a_feed: 3.0, l_o };
        let a = iterate_interior_scheme(&mk(1.0), 0.8, 0.5, 1e-30, 500).unwrap();
        let b = iterate_interior_scheme(&mk(7.0), 0.8, 0.5, 1e-30, 500).unwrap();
        assert_eq!(mk(1.0).a(), 0.0);
        assert_eq!(a.omega, b.omega);
        assert_eq!(a.ln_rho, b.ln_rho);
        assert_abs_diff_eq!(a.ln_rho[1] - a.ln_rho[0], 0.5f64.ln(), epsilon = 1e-15);
    }

    #[test]
    fn interior_p3_nests() {
        let spec = InteriorSpec { n_dim: 1, p: 3.0, kappa: 1.0, eta: 0.5, a_feed: 0.5, l_o: 2.0 };
        let tr = iterate_interior_scheme(&spec, 0.9, 0.5, 1e-12, 10_000).unwrap();
        assert_eq!(tr.termination, Termination::RadiusReached);
        assert!(tr.omega.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn neumann_scheme_runs() {
        let spec = NeumannSpec { n_dim: 2, eta: 0.5, q: 1.0, c_o: 0.5, gamma: 1.0, c2: 0.3 };
        let tr = iterate_neumann_scheme(&spec, 0.8, 0.5, 1e-40, 10_000).unwrap();
        assert_eq!(tr.termination, Termination::RadiusReached);
        assert!(tr.ln_rho.windows(2).all(|w| w[1] < w[0] - 0.5f64.ln().abs() + 1e-12));
        let bad = NeumannSpec { c_o: 1e6, ..spec };
        assert!(matches!(iterate_neumann_scheme(&bad, 0.8, 0.5, 1e-40, 100), Err(Error::NestingViolation { .. })));
    }

    #[test]
    fn inconsistent_boundary_constants_rejected() {
        let mut spec = BoundarySpec::consistent(3.0, 0.5, 1.0, 1e-3, 1.0, 0.1, 0.5, 0.1, 2.0);
        spec.xi_tilde *= 1e6;
        let err = iterate_boundary_scheme(&spec, 0.5, 0.5, 1e-100, 100).unwrap_err();
        assert!(matches!(err, Error::NestingViolation { step: 0, .. }));
    }

    #[test]
    fn radius_inversion() {
        let spec = BoundarySpec::consistent(2.0, 0.5, 1.0, 1e-3, 1.0, 0.1, 0.5, 0.1, 2.0);
        let tr = iterate_boundary_scheme(&spec, 0.5, 0.5, 1e-200, 10_000).unwrap();
        let (n, w) = invert_radius_to_index(&tr, 0.125).unwrap();
        assert_eq!((n, w), (0, tr.omega[1]));
        let mut prev = 0;
        for k in 1..150 {
            let (n, _) = invert_ln_radius_to_index(&tr, 0.125f64.ln() - k as f64).unwrap();
            assert!(n >= prev);
            let target = 0.125f64.ln() - k as f64 + 4f64.ln();
            assert!(tr.ln_rho[n + 1] < target && target <= tr.ln_rho[n]);
            prev = n;
        }
        assert!(matches!(invert_ln_radius_to_index(&tr, -1e9), Err(Error::TraceExhausted { .. })));
    }

    #[test]
    fn domination_cases() {
        let tr = iterate_type(&type2(0.5, 1.0), 0.5, 20_000).unwrap();
        assert!(dominating_sequence_check(&tr, 0.5).n_o.is_some());
        assert!(dominating_sequence_check(&tr, 1.0).n_o.is_none());
        let flat = iterate_type(&type2(0.0, 1.0), 0.5, 1000).unwrap();
        assert!(dominating_sequence_check(&flat, 0.5).n_o.is_none());
    }
}
