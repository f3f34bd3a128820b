//! C interface to `stefan-core`.
//!
//! Every entry point returns a [`StefanStatus`]; results go through out-pointers.
//! After a non-OK status, [`stefan_last_error`] copies a message for the
//! calling thread. Handles are opaque and must be released with their `_free`
//! function. Panics are caught at the boundary and reported as `STEFAN_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use stefan_core::enthalpy::{MollifierKernel, RegularizedEnthalpy};
use stefan_core::geometry::{DomainGrid, ShapeSpec};
use stefan_core::modulus::{fit_modulus_ln, ModulusModel};
use stefan_core::oracle::stefan_lambda;
use stefan_core::recurrence::{degiorgi_converges, iterate_type, DeGiorgiParams, TypeKind, TypeSpec, Verdict};
use stefan_core::runner::{Command, RunOptions, Runner, Stage};
use stefan_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StefanStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ResolutionTooCoarse = 3,
    DisconnectedDomain = 4,
    ConditionGViolated = 5,
    NonConvergence = 6,
    FitRejected = 7,
    NestingViolation = 8,
    ConfigInvalid = 9,
    Io = 10,
    Analysis = 11,
    Panic = 12,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StefanKernel {
    Biweight = 0,
    Triweight = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StefanModel {
    TypeI = 0,
    TypeII = 1,
    Hoelder = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StefanCommand {
    Solve = 0,
    Measure = 1,
    EnergyCheck = 2,
    Recur = 3,
    Sweep = 4,
    Run = 5,
}

/// Opaque regularized enthalpy.
pub struct StefanEnthalpy(RegularizedEnthalpy);

/// Opaque domain grid.
pub struct StefanDomain(DomainGrid);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct StefanFit {
    pub c: f64,
    pub exponent: f64,
    pub residual: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> StefanStatus {
    match e {
        Error::InvalidArgument(_) | Error::WrongP(_) | Error::InadmissibleLevel(_) => StefanStatus::InvalidArgument,
        Error::ResolutionTooCoarse(_) | Error::EmptyCylinder { .. } => StefanStatus::ResolutionTooCoarse,
        Error::DisconnectedDomain { .. } => StefanStatus::DisconnectedDomain,
        Error::ConditionGViolated { .. } => StefanStatus::ConditionGViolated,
        Error::NonConvergence { .. } | Error::RankDeficient(_) | Error::SweepFailure { .. } => StefanStatus::NonConvergence,
        Error::Fit(_) => StefanStatus::FitRejected,
        Error::NestingViolation { .. } | Error::TraceExhausted { .. } => StefanStatus::NestingViolation,
        Error::ConfigInvalid(_) | Error::Json(_) => StefanStatus::ConfigInvalid,
        Error::Io(_) | Error::Checkpoint(_) => StefanStatus::Io,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (StefanStatus, String)>) -> StefanStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => StefanStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            StefanStatus::Panic
        }
    }
}

fn core(e: Error) -> (StefanStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (StefanStatus, String) {
    (StefanStatus::NullPointer, format!("{what} is null"))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (StefanStatus, String)> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn cstr<'a>(p: *const c_char, what: &str) -> Result<&'a str, (StefanStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (StefanStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

/// Copy the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length plus one.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn stefan_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        bytes.len() + 1
    })
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn stefan_enthalpy_new(nu: f64, eps: f64, kernel: StefanKernel, out: *mut *mut StefanEnthalpy) -> StefanStatus {
    guard(|| {
        let slot = self::out(out, "out")?;
        let k = match kernel {
            StefanKernel::Biweight => MollifierKernel::Biweight,
            StefanKernel::Triweight => MollifierKernel::Triweight,
        };
        let r = RegularizedEnthalpy::with_kernel(nu, eps, k).map_err(core)?;
        *slot = Box::into_raw(Box::new(StefanEnthalpy(r)));
        Ok(())
    })
}

/// `β_ε(s)`.
///
/// # Safety
/// `h` must come from [`stefan_enthalpy_new`]; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn stefan_enthalpy_beta(h: *const StefanEnthalpy, s: f64, out: *mut f64) -> StefanStatus {
    guard(|| {
        let h = h.as_ref().ok_or_else(|| null("handle"))?;
        *self::out(out, "out")? = h.0.beta(s);
        Ok(())
    })
}

/// `β_ε'(s)`.
///
/// # Safety
/// As [`stefan_enthalpy_beta`].
#[no_mangle]
pub unsafe extern "C" fn stefan_enthalpy_beta_deriv(h: *const StefanEnthalpy, s: f64, out: *mut f64) -> StefanStatus {
    guard(|| {
        let h = h.as_ref().ok_or_else(|| null("handle"))?;
        *self::out(out, "out")? = h.0.beta_deriv(s);
        Ok(())
    })
}

/// `β_ε^{-1}(w)` to absolute tolerance `tol`.
///
/// # Safety
/// As [`stefan_enthalpy_beta`].
#[no_mangle]
pub unsafe extern "C" fn stefan_enthalpy_invert(h: *const StefanEnthalpy, w: f64, tol: f64, out: *mut f64) -> StefanStatus {
    guard(|| {
        let h = h.as_ref().ok_or_else(|| null("handle"))?;
        *self::out(out, "out")? = h.0.beta_inverse(w, tol).map_err(core)?;
        Ok(())
    })
}

/// # Safety
/// `h` must be null or come from [`stefan_enthalpy_new`], and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn stefan_enthalpy_free(h: *mut StefanEnthalpy) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Build a grid from a JSON shape descriptor such as
/// `{"shape": "l_shape", "size": 1.0}`.
///
/// # Safety
/// `shape_json` must be a NUL-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn stefan_domain_build(shape_json: *const c_char, h: f64, out: *mut *mut StefanDomain) -> StefanStatus {
    guard(|| {
        let slot = self::out(out, "out")?;
        let text = cstr(shape_json, "shape_json")?;
        let spec: ShapeSpec = serde_json::from_str(text).map_err(|e| (StefanStatus::ConfigInvalid, e.to_string()))?;
        let grid = DomainGrid::build(&spec, h).map_err(core)?;
        *slot = Box::into_raw(Box::new(StefanDomain(grid)));
        Ok(())
    })
}

/// Number of cells.
///
/// # Safety
/// `d` must come from [`stefan_domain_build`]; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn stefan_domain_len(d: *const StefanDomain, out: *mut usize) -> StefanStatus {
    guard(|| {
        let d = d.as_ref().ok_or_else(|| null("handle"))?;
        *self::out(out, "out")? = d.0.len();
        Ok(())
    })
}

/// Certify condition (G) over `n` radii; stores `α_*` and `ρ̄` on the handle.
///
/// # Safety
/// `radii` must point to `n` values; the out-pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn stefan_domain_certify(
    d: *mut StefanDomain,
    radii: *const f64,
    n: usize,
    alpha_star: *mut f64,
    rho_bar: *mut f64,
) -> StefanStatus {
    guard(|| {
        let d = d.as_mut().ok_or_else(|| null("handle"))?;
        if radii.is_null() {
            return Err(null("radii"));
        }
        let radii = std::slice::from_raw_parts(radii, n);
        let a = self::out(alpha_star, "alpha_star")?;
        let r = self::out(rho_bar, "rho_bar")?;
        let cert = d.0.certify(radii).map_err(core)?;
        *a = cert.alpha_star;
        *r = cert.rho_bar;
        Ok(())
    })
}

/// # Safety
/// `d` must be null or come from [`stefan_domain_build`], and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn stefan_domain_free(d: *mut StefanDomain) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// Root `λ` of the one-phase transcendental equation for Stefan number `st`.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn stefan_stefan1d_lambda(st: f64, tol: f64, out: *mut f64) -> StefanStatus {
    guard(|| {
        *self::out(out, "out")? = stefan_lambda(st, tol).map_err(core)?;
        Ok(())
    })
}

/// Iterate `Y_{n+1} = C bⁿ Y_n^{1+α}`; `converges` is set to 1 or 0.
///
/// # Safety
/// `converges` must be valid.
#[no_mangle]
pub unsafe extern "C" fn stefan_degiorgi_verdict(c: f64, b: f64, alpha: f64, y0: f64, n_max: usize, converges: *mut i32) -> StefanStatus {
    guard(|| {
        let slot = self::out(converges, "converges")?;
        let o = degiorgi_converges(&DeGiorgiParams { c, b, alpha, y0 }, n_max).map_err(core)?;
        *slot = i32::from(o.verdict == Verdict::Converges);
        Ok(())
    })
}

/// Type II recurrence `ω_{n+1} = ω_n(1 − η ω_n^q)`; writes `ω_0..ω_{len−1}`.
///
/// # Safety
/// `omega` must point to `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn stefan_type_ii_iterate(eta: f64, q: f64, omega0: f64, omega: *mut f64, len: usize) -> StefanStatus {
    guard(|| {
        if omega.is_null() {
            return Err(null("omega"));
        }
        if len == 0 {
            return Err((StefanStatus::InvalidArgument, "len must be >= 1".into()));
        }
        let tr = iterate_type(&TypeSpec { kind: TypeKind::TypeII, eta, q }, omega0, len - 1).map_err(core)?;
        let dst = std::slice::from_raw_parts_mut(omega, len);
        let n = tr.omega.len().min(len);
        dst[..n].copy_from_slice(&tr.omega[..n]);
        dst[n..].fill(0.0);
        Ok(())
    })
}

/// Least-squares modulus fit on `n` pairs `(r, osc)`.
///
/// # Safety
/// `r` and `osc` must point to `n` values; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn stefan_fit_modulus(
    model: StefanModel,
    r: *const f64,
    osc: *const f64,
    n: usize,
    rho_bar: f64,
    out: *mut StefanFit,
) -> StefanStatus {
    guard(|| {
        if r.is_null() || osc.is_null() {
            return Err(null("r or osc"));
        }
        let slot = self::out(out, "out")?;
        let ln_r: Vec<f64> = std::slice::from_raw_parts(r, n).iter().map(|v| v.ln()).collect();
        let osc = std::slice::from_raw_parts(osc, n);
        let m = match model {
            StefanModel::TypeI => ModulusModel::TypeI,
            StefanModel::TypeII => ModulusModel::TypeII,
            StefanModel::Hoelder => ModulusModel::Hoelder,
        };
        let fit = fit_modulus_ln(&ln_r, osc, rho_bar, m).map_err(core)?;
        *slot = StefanFit { c: fit.c, exponent: fit.exponent, residual: fit.residual };
        Ok(())
    })
}

/// Run a configured experiment, writing outputs to `out_dir` (or the
/// configured directory when null).
///
/// # Safety
/// `config_path` must be a NUL-terminated path; `out_dir` must be null or one.
#[no_mangle]
pub unsafe extern "C" fn stefan_run_experiment(
    config_path: *const c_char,
    command: StefanCommand,
    out_dir: *const c_char,
    seed: u64,
) -> StefanStatus {
    guard(|| {
        let path = PathBuf::from(cstr(config_path, "config_path")?);
        let out = if out_dir.is_null() { None } else { Some(PathBuf::from(cstr(out_dir, "out_dir")?)) };
        let cmd = match command {
            StefanCommand::Solve => Command::Solve,
            StefanCommand::Measure => Command::Measure,
            StefanCommand::EnergyCheck => Command::EnergyCheck,
            StefanCommand::Recur => Command::Recur,
            StefanCommand::Sweep => Command::Sweep,
            StefanCommand::Run => Command::Run,
        };
        let opts = RunOptions { out, seed, stride: None, checkpoint: None };
        Runner::load(&path, opts).and_then(|mut r| r.execute(cmd)).map_err(|e| {
            let status = match (e.stage, status_of(&e.error)) {
                (_, StefanStatus::Io) => StefanStatus::Io,
                (Stage::Analysis, _) => StefanStatus::Analysis,
                (_, s) => s,
            };
            (status, e.to_string())
        })
    })
}
