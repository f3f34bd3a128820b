//! Oscillation over shrinking intrinsic cylinders and fitted moduli of continuity.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::enthalpy::RegularizedEnthalpy;
use crate::error::{Error, Result};
use crate::geometry::{cylinder_clip, intrinsic_theta, IntrinsicCylinder, Point};
use crate::solver::{DeclaredModulus, Problem, SolverConfig, SpaceTimeField};

/// Ordinary least squares `y ≈ intercept + slope·x`; returns the RMS residual as well.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return Err(Error::Fit(format!("need at least two paired samples, got {n}")));
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
    }
    let spread = x.iter().fold(0.0_f64, |m, v| m.max((v - mx).abs()));
    if !(sxx > 0.0) || spread <= 1e-14 * (1.0 + mx.abs()) {
        return Err(Error::Fit("degenerate design: all abscissae are equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    Ok((intercept, slope, (rss / n as f64).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnchorKind {
    Lateral,
    Interior,
    Initial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Anchor {
    pub id: String,
    pub kind: AnchorKind,
    pub x: Point,
    /// Vertex time; ignored for initial anchors, which sit at `t = 0`.
    #[serde(default)]
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OscillationEntry {
    pub r: f64,
    pub theta: f64,
    pub osc: f64,
    /// The cylinder reached outside the stored time range.
    pub clipped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OscillationSeries {
    pub anchor: Anchor,
    pub entries: Vec<OscillationEntry>,
    pub omega0: f64,
    pub rho0: f64,
    /// Length scale of the logarithmic models.
    pub rho_bar: f64,
    /// Some `θ` was reduced so that the time extent did not grow.
    pub theta_capped: bool,
}

impl OscillationSeries {
    pub fn radii(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.r).collect()
    }

    pub fn oscillations(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.osc).collect()
    }
}

/// Backward cylinder at a lateral or interior anchor, forward from `t = 0` at an initial one.
pub fn anchor_cylinder(anchor: &Anchor, r: f64, theta: f64, p: f64) -> Result<IntrinsicCylinder> {
    match anchor.kind {
        AnchorKind::Initial => IntrinsicCylinder::forward(anchor.x, 0.0, r, theta, p),
        _ => IntrinsicCylinder::backward(anchor.x, anchor.t, r, theta, p),
    }
}

fn oscillation_in(field: &SpaceTimeField, cyl: &IntrinsicCylinder) -> Result<(f64, bool)> {
    let clip = cylinder_clip(&field.grid, cyl, &field.times);
    if clip.is_empty() {
        return Err(Error::EmptyCylinder { radius: cyl.rho });
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (c, s) in clip.samples() {
        let v = field.u[s][c];
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok((hi - lo, clip.clipped_at_zero || clip.clipped_at_end))
}

/// Oscillation over `K_r × (t_o − θr^p, t_o)` for each radius of a decreasing schedule,
/// with `θ = (ξ·osc)^{2−p}` taken from the oscillation just measured.
///
/// The reference `ω_0` is the oscillation over `K_{r_0} × (t_o − r_0^{p−1}, t_o)`.
/// If the intrinsic `θ` would lengthen the cylinder beyond the previous one it is
/// reduced to keep the cylinders nested, and the series is flagged.
pub fn measure_oscillation(field: &SpaceTimeField, anchor: &Anchor, schedule: &[f64], p: f64, xi: f64) -> Result<OscillationSeries> {
    if schedule.is_empty() || schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("radius schedule must be non-empty and strictly decreasing".into()));
    }
    if !(p >= 2.0 && xi > 0.0) {
        return Err(Error::InvalidArgument(format!("need p >= 2 and xi > 0 (p = {p}, xi = {xi})")));
    }
    let h = field.grid.h();
    if let Some(r) = schedule.iter().find(|&&r| r < 2.0 * h * (1.0 - 1e-12)) {
        return Err(Error::EmptyCylinder { radius: *r });
    }
    let r0 = schedule[0];
    let theta0 = r0.powf(p - 1.0) / r0.powf(p);
    let (omega0, _) = oscillation_in(field, &anchor_cylinder(anchor, r0, theta0, p)?)?;
    let mut current = omega0;
    let mut extent = r0.powf(p - 1.0);
    let mut entries = Vec::with_capacity(schedule.len());
    let mut capped = false;
    for &r in schedule {
        let mut theta = if p == 2.0 { 1.0 } else if current > 0.0 { intrinsic_theta(xi * current, p) } else { f64::INFINITY };
        let rp = r.powf(p);
        if theta * rp > extent {
            theta = extent / rp;
            capped = true;
        }
        let (osc, clipped) = oscillation_in(field, &anchor_cylinder(anchor, r, theta, p)?)?;
        extent = theta * rp;
        current = osc;
        entries.push(OscillationEntry { r, theta, osc, clipped });
    }
    let rho_bar = field.grid.certification().map(|c| c.rho_bar).unwrap_or(1.0);
    Ok(OscillationSeries { anchor: anchor.clone(), entries, omega0, rho0: r0, rho_bar, theta_capped: capped })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModulusModel {
    /// `C (ln ln(ρ̄/r))^{−s}`
    TypeI,
    /// `C (ln(ρ̄/r))^{−s}`
    #[serde(rename = "type_ii")]
    TypeII,
    /// `C r^a`
    Hoelder,
}

impl ModulusModel {
    pub const ALL: [ModulusModel; 3] = [ModulusModel::TypeI, ModulusModel::TypeII, ModulusModel::Hoelder];

    pub fn name(&self) -> &'static str {
        match self {
            ModulusModel::TypeI => "type_i",
            ModulusModel::TypeII => "type_ii",
            ModulusModel::Hoelder => "hoelder",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModulusFit {
    pub model: ModulusModel,
    pub c: f64,
    /// `s` for the logarithmic models, `a` for Hölder.
    pub exponent: f64,
    /// RMS residual of `ln osc`.
    pub residual: f64,
    pub rho_bar: f64,
    /// `C > 0` and a positive exponent.
    pub admissible: bool,
}

impl ModulusFit {
    pub fn eval(&self, r: f64) -> f64 {
        self.eval_ln(r.ln())
    }

    pub fn eval_ln(&self, ln_r: f64) -> f64 {
        let l = self.rho_bar.ln() - ln_r;
        match self.model {
            ModulusModel::TypeI => self.c * l.ln().powf(-self.exponent),
            ModulusModel::TypeII => self.c * l.powf(-self.exponent),
            ModulusModel::Hoelder => self.c * (self.exponent * ln_r).exp(),
        }
    }
}

/// Fit with radii given as logarithms, so that radii below `f64` range can be used.
pub fn fit_modulus_ln(ln_r: &[f64], osc: &[f64], rho_bar: f64, model: ModulusModel) -> Result<ModulusFit> {
    if ln_r.len() != osc.len() || ln_r.len() < 4 {
        return Err(Error::Fit(format!("need at least 4 entries, got {}", ln_r.len())));
    }
    if let Some(i) = osc.iter().position(|&o| !(o > 0.0 && o.is_finite())) {
        return Err(Error::Fit(format!("oscillation {} at entry {i} is not positive", osc[i])));
    }
    let ln_bar = rho_bar.ln();
    let mut x = Vec::with_capacity(ln_r.len());
    for &lr in ln_r {
        let l = ln_bar - lr;
        let v = match model {
            ModulusModel::Hoelder => lr,
            ModulusModel::TypeII if l > 0.0 => l.ln(),
            ModulusModel::TypeI if l > 1.0 => l.ln().ln(),
            _ => {
                return Err(Error::Fit(format!(
                    "radius e^{lr} is too large for the {} model with rho_bar = {rho_bar}",
                    model.name()
                )))
            }
        };
        x.push(v);
    }
    let y: Vec<f64> = osc.iter().map(|o| o.ln()).collect();
    let (intercept, slope, residual) = linear_fit(&x, &y)?;
    let exponent = if model == ModulusModel::Hoelder { slope } else { -slope };
    let c = intercept.exp();
    Ok(ModulusFit { model, c, exponent, residual, rho_bar, admissible: c > 0.0 && exponent > 0.0 })
}

pub fn fit_modulus(series: &OscillationSeries, model: ModulusModel) -> Result<ModulusFit> {
    let ln_r: Vec<f64> = series.entries.iter().map(|e| e.r.ln()).collect();
    fit_modulus_ln(&ln_r, &series.oscillations(), series.rho_bar, model)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelRanking {
    /// Successful fits, best residual first.
    pub fits: Vec<ModulusFit>,
    /// Residual of each fit divided by the best residual.
    pub ratios: Vec<f64>,
    /// Type II exponents refitted on nested tails (largest radii dropped).
    pub type_ii_subrange_exponents: Vec<f64>,
    /// The refitted Type II exponent grows strictly as the range shrinks.
    pub type_ii_drift: bool,
}

impl ModelRanking {
    pub fn winner(&self) -> ModulusModel {
        self.fits[0].model
    }
}

pub fn compare_models_ln(ln_r: &[f64], osc: &[f64], rho_bar: f64) -> Result<ModelRanking> {
    let mut fits = Vec::new();
    let mut first_err = None;
    for m in ModulusModel::ALL {
        match fit_modulus_ln(ln_r, osc, rho_bar, m) {
            Ok(f) => fits.push(f),
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    if fits.is_empty() {
        return Err(first_err.unwrap_or_else(|| Error::Fit("no model could be fitted".into())));
    }
    fits.sort_by(|a, b| a.residual.total_cmp(&b.residual));
    let best = fits[0].residual;
    let ratios = fits.iter().map(|f| if best > 0.0 { f.residual / best } else if f.residual > 0.0 { f64::INFINITY } else { 1.0 }).collect();
    let n = ln_r.len();
    let mut subs = Vec::new();
    for start in [0, n / 4, n / 2] {
        if n - start >= 4 {
            if let Ok(f) = fit_modulus_ln(&ln_r[start..], &osc[start..], rho_bar, ModulusModel::TypeII) {
                subs.push(f.exponent);
            }
        }
    }
    let drift = subs.len() >= 2 && subs.windows(2).all(|w| w[1] > w[0] * (1.0 + 1e-9));
    Ok(ModelRanking { fits, ratios, type_ii_subrange_exponents: subs, type_ii_drift: drift })
}

pub fn compare_models(series: &OscillationSeries) -> Result<ModelRanking> {
    let ln_r: Vec<f64> = series.entries.iter().map(|e| e.r.ln()).collect();
    compare_models_ln(&ln_r, &series.oscillations(), series.rho_bar)
}

/// `c1 (r/ρ)^a + c2 ω_o(√(rρ)) + c3 ω_g(√(rρ))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InitialEnvelope {
    pub c1: f64,
    pub a: f64,
    pub c2: f64,
    pub c3: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InitialLayerReport {
    pub series: OscillationSeries,
    pub envelope: InitialEnvelope,
    /// Factor applied to the least-squares envelope to make it dominate.
    pub scale: f64,
    /// RMS misfit of the unscaled envelope.
    pub residual: f64,
    /// Which of the three envelope terms is largest at the smallest radius.
    pub dominant_term_at_smallest_r: usize,
    /// The first entry (at `r = ρ`) does not exceed `ω_0`.
    pub first_within_omega0: bool,
}

fn envelope_terms(r: f64, rho: f64, a: f64, mo: Option<&DeclaredModulus>, mg: Option<&DeclaredModulus>) -> [f64; 3] {
    let s = (r * rho).sqrt();
    [
        (r / rho).powf(a),
        mo.map(|m| m.eval(s)).unwrap_or(0.0),
        mg.map(|m| m.eval(s)).unwrap_or(0.0),
    ]
}

/// Non-negative least squares for three columns by enumerating active sets.
fn nnls3(cols: &[[f64; 3]], y: &[f64]) -> ([f64; 3], f64) {
    let mut best = ([0.0; 3], y.iter().map(|v| v * v).sum::<f64>());
    for mask in 1u8..8 {
        let idx: Vec<usize> = (0..3).filter(|i| mask & (1 << i) != 0).collect();
        let k = idx.len();
        let mut a = [[0.0; 3]; 3];
        let mut b = [0.0; 3];
        for (row, &yv) in cols.iter().zip(y) {
            for i in 0..k {
                b[i] += row[idx[i]] * yv;
                for j in 0..k {
                    a[i][j] += row[idx[i]] * row[idx[j]];
                }
            }
        }
        let Some(sol) = solve_small(&mut a, &mut b, k) else { continue };
        if sol[..k].iter().any(|v| !(*v >= 0.0)) {
            continue;
        }
        let mut coef = [0.0; 3];
        for i in 0..k {
            coef[idx[i]] = sol[i];
        }
        let rss: f64 = cols
            .iter()
            .zip(y)
            .map(|(row, yv)| (yv - row.iter().zip(&coef).map(|(r, c)| r * c).sum::<f64>()).powi(2))
            .sum();
        if rss < best.1 {
            best = (coef, rss);
        }
    }
    best
}

fn solve_small(a: &mut [[f64; 3]; 3], b: &mut [f64; 3], k: usize) -> Option<[f64; 3]> {
    for c in 0..k {
        let piv = (c..k).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[piv][c].abs() < 1e-300 {
            return None;
        }
        a.swap(c, piv);
        b.swap(c, piv);
        for r in c + 1..k {
            let f = a[r][c] / a[c][c];
            for j in c..k {
                a[r][j] -= f * a[c][j];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = [0.0; 3];
    for c in (0..k).rev() {
        let s: f64 = (c + 1..k).map(|j| a[c][j] * x[j]).sum();
        x[c] = (b[c] - s) / a[c][c];
    }
    Some(x)
}

/// Forward-in-time oscillation at an initial anchor and a fitted dominating envelope.
#[allow(clippy::too_many_arguments)]
pub fn initial_layer_decay(
    field: &SpaceTimeField,
    anchor: &Anchor,
    schedule: &[f64],
    p: f64,
    xi: f64,
    initial_modulus: Option<&DeclaredModulus>,
    g_modulus: Option<&DeclaredModulus>,
) -> Result<InitialLayerReport> {
    let mut anchor = anchor.clone();
    anchor.kind = AnchorKind::Initial;
    anchor.t = 0.0;
    let series = measure_oscillation(field, &anchor, schedule, p, xi)?;
    let rho = series.rho0;
    let osc = series.oscillations();
    let mut best: Option<(InitialEnvelope, f64)> = None;
    for k in 1..=40 {
        let a = 0.05 * k as f64;
        let cols: Vec<[f64; 3]> = series.entries.iter().map(|e| envelope_terms(e.r, rho, a, initial_modulus, g_modulus)).collect();
        let (coef, rss) = nnls3(&cols, &osc);
        if best.as_ref().map(|b| rss < b.1).unwrap_or(true) {
            best = Some((InitialEnvelope { c1: coef[0], a, c2: coef[1], c3: coef[2] }, rss));
        }
    }
    let (mut env, rss) = best.expect("non-empty grid of exponents");
    let value = |e: &InitialEnvelope, r: f64| {
        let t = envelope_terms(r, rho, e.a, initial_modulus, g_modulus);
        e.c1 * t[0] + e.c2 * t[1] + e.c3 * t[2]
    };
    let mut scale = 1.0_f64;
    for en in &series.entries {
        let v = value(&env, en.r);
        if en.osc > 0.0 {
            scale = scale.max(if v > 0.0 { en.osc / v } else { f64::INFINITY });
        }
    }
    if !scale.is_finite() {
        // nothing fitted; fall back to the trivial bound by ω_0
        env = InitialEnvelope { c1: series.omega0.max(osc[0]), a: env.a, c2: 0.0, c3: 0.0 };
        scale = 1.0;
        for en in &series.entries {
            scale = scale.max(en.osc / value(&env, en.r).max(f64::MIN_POSITIVE));
        }
    }
    env.c1 *= scale;
    env.c2 *= scale;
    env.c3 *= scale;
    let r_min = series.entries.last().map(|e| e.r).unwrap_or(rho);
    let t = envelope_terms(r_min, rho, env.a, initial_modulus, g_modulus);
    let parts = [env.c1 * t[0], env.c2 * t[1], env.c3 * t[2]];
    let dominant = (0..3).max_by(|&i, &j| parts[i].total_cmp(&parts[j])).unwrap_or(0);
    let first_within_omega0 = osc[0] <= series.omega0;
    Ok(InitialLayerReport {
        residual: (rss / osc.len() as f64).sqrt(),
        series,
        envelope: env,
        scale,
        dominant_term_at_smallest_r: dominant,
        first_within_omega0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepAnchorResult {
    pub anchor_id: String,
    /// Type II fit per ε, in the order of the ε list.
    pub fits: Vec<Option<ModulusFit>>,
    /// `(max − min)/|mean|` of the fitted `C`.
    pub c_spread: f64,
    /// `(max − min)/|mean|` of the fitted `s`.
    pub s_spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub eps: Vec<f64>,
    pub anchors: Vec<SweepAnchorResult>,
    /// `distances[i][j] = sup |u_{ε_i} − u_{ε_j}|`
    pub distances: Vec<Vec<f64>>,
    /// `sup |u_{ε_i} − u_{ε_{i+1}}|` for consecutive ε.
    pub consecutive: Vec<f64>,
    /// The consecutive distances shrink as ε decreases.
    pub non_increasing: bool,
}

fn relative_spread(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    (hi - lo) / mean.abs()
}

/// Solve the same problem for each `ε` (in parallel), measure and fit Type II
/// moduli at shared anchors, and tabulate sup distances between the runs.
#[allow(clippy::too_many_arguments)]
pub fn equicontinuity_sweep(
    base: &Problem,
    eps_list: &[f64],
    cfg: &SolverConfig,
    t_final: f64,
    anchors: &[Anchor],
    schedule: &[f64],
    xi: f64,
) -> Result<SweepReport> {
    if eps_list.len() < 3 {
        return Err(Error::InvalidArgument(format!("need at least 3 eps values, got {}", eps_list.len())));
    }
    if eps_list.windows(2).any(|w| (w[1] - 0.5 * w[0]).abs() > 1e-12 * w[0]) {
        return Err(Error::InvalidArgument("each eps must halve the previous one".into()));
    }
    let runs: Vec<Result<SpaceTimeField>> = eps_list
        .par_iter()
        .map(|&eps| {
            let wrap = |e: Error| Error::SweepFailure { eps, source: Box::new(e) };
            let r = RegularizedEnthalpy::with_kernel(base.enthalpy.nu(), eps, base.enthalpy.kernel()).map_err(wrap)?;
            let pb = Problem { enthalpy: r, ..base.clone() };
            pb.solve(cfg, t_final).map_err(wrap)
        })
        .collect();
    let fields = runs.into_iter().collect::<Result<Vec<_>>>()?;
    sweep_report(eps_list, &fields, anchors, schedule, base.flux.p(), xi)
}

/// Analysis half of [`equicontinuity_sweep`] on precomputed fields.
pub fn sweep_report(eps_list: &[f64], fields: &[SpaceTimeField], anchors: &[Anchor], schedule: &[f64], p: f64, xi: f64) -> Result<SweepReport> {
    let k = fields.len();
    let mut distances = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let d = fields[i].sup_distance(&fields[j])?;
            distances[i][j] = d;
            distances[j][i] = d;
        }
    }
    let consecutive: Vec<f64> = (0..k - 1).map(|i| distances[i][i + 1]).collect();
    let scale = fields.iter().map(|f| f.max_abs_u()).fold(0.0_f64, f64::max);
    let non_increasing = consecutive.windows(2).all(|w| w[1] <= w[0] + 1e-12 * scale.max(1.0));
    let mut results = Vec::new();
    for a in anchors {
        let mut fits = Vec::with_capacity(k);
        for f in fields {
            let series = measure_oscillation(f, a, schedule, p, xi)?;
            fits.push(fit_modulus(&series, ModulusModel::TypeII).ok());
        }
        let cs: Vec<f64> = fits.iter().flatten().map(|f| f.c).collect();
        let ss: Vec<f64> = fits.iter().flatten().map(|f| f.exponent).collect();
        let (c_spread, s_spread) = if cs.len() == k { (relative_spread(&cs), relative_spread(&ss)) } else { (f64::NAN, f64::NAN) };
        results.push(SweepAnchorResult { anchor_id: a.id.clone(), fits, c_spread, s_spread });
    }
    Ok(SweepReport { eps: eps_list.to_vec(), anchors: results, distances, consecutive, non_increasing })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn linear_fit_exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        let (a, b, r) = linear_fit(&x, &y).unwrap();
        assert_relative_eq!(a, 1.0, epsilon = 1e-14);
        assert_relative_eq!(b, 2.0, epsilon = 1e-14);
        assert!(r < 1e-14);
        assert!(linear_fit(&[1.0; 4], &y).is_err());
    }

    fn synthetic(f: impl Fn(f64) -> f64) -> (Vec<f64>, Vec<f64>) {
        let ln_r: Vec<f64> = (4..=20).map(|k| -(k as f64) * 2f64.ln()).collect();
        let osc = ln_r.iter().map(|&l| f(l)).collect();
        (ln_r, osc)
    }

    #[test]
    fn type_ii_synthetic_recovered() {
        let (lr, osc) = synthetic(|l| 2.0 * (-l).powf(-0.5));
        let fit = fit_modulus_ln(&lr, &osc, 1.0, ModulusModel::TypeII).unwrap();
        assert_relative_eq!(fit.c, 2.0, max_relative = 1e-9);
        assert_relative_eq!(fit.exponent, 0.5, max_relative = 1e-9);
        let rank = compare_models_ln(&lr, &osc, 1.0).unwrap();
        assert_eq!(rank.winner(), ModulusModel::TypeII);
    }

    #[test]
    fn hoelder_beats_type_ii_and_drifts() {
        let (lr, osc) = synthetic(|l| (0.3 * l).exp());
        let h = fit_modulus_ln(&lr, &osc, 1.0, ModulusModel::Hoelder).unwrap();
        let t2 = fit_modulus_ln(&lr, &osc, 1.0, ModulusModel::TypeII).unwrap();
        assert!(t2.residual > h.residual);
        let rank = compare_models_ln(&lr, &osc, 1.0).unwrap();
        assert_eq!(rank.winner(), ModulusModel::Hoelder);
        assert!(rank.type_ii_drift);
    }

    #[test]
    fn type_i_synthetic_wins() {
        let ln_r: Vec<f64> = (1..=12).map(|k| -(10f64.powi(k))).collect();
        let osc: Vec<f64> = ln_r.iter().map(|&l| (-l).ln().powf(-0.5)).collect();
        assert_eq!(compare_models_ln(&ln_r, &osc, 1.0).unwrap().winner(), ModulusModel::TypeI);
    }

    #[test]
    fn zero_entry_rejected() {
        let (lr, mut osc) = synthetic(|l| (-l).powf(-0.5));
        osc[3] = 0.0;
        assert!(matches!(fit_modulus_ln(&lr, &osc, 1.0, ModulusModel::TypeII), Err(Error::Fit(_))));
    }

    #[test]
    fn nnls_recovers_nonnegative_combination() {
        let cols: Vec<[f64; 3]> = (1..10).map(|i| [i as f64, 1.0, (i * i) as f64]).collect();
        let y: Vec<f64> = cols.iter().map(|c| 2.0 * c[0] + 0.5 * c[1]).collect();
        let (coef, rss) = nnls3(&cols, &y);
        assert_relative_eq!(coef[0], 2.0, epsilon = 1e-10);
        assert_relative_eq!(coef[1], 0.5, epsilon = 1e-10);
        assert!(coef[2].abs() < 1e-10 && rss < 1e-18);
    }
}
