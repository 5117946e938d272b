//! C ABI for `interdim`.
//!
//! Every fallible call returns an [`InterdimStatus`]; on failure the message
//! is available from [`interdim_last_error`] on the same thread. Handles are
//! opaque and must be released with the matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use interdim::boxcount::{estimate_dimension, EstimateResult};
use interdim::cli::measure_family;
use interdim::covergen::{build_theorem_cover, cover_cost, upper_dim_estimate};
use interdim::formula::formula_dimension;
use interdim::massdist::Verdict;
use interdim::setlib::SetSpec;
use interdim::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterdimStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    Parse = 3,
    Unsupported = 4,
    BudgetTooSmall = 5,
    ResourceLimit = 6,
    DeltaAboveThreshold = 7,
    Empty = 8,
    Invariant = 9,
    Io = 10,
    IndexOutOfRange = 11,
    Panic = 12,
}

impl From<&Error> for InterdimStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidParameter(_) => InterdimStatus::InvalidParameter,
            Error::IndexOutOfRange { .. } => InterdimStatus::IndexOutOfRange,
            Error::Unsupported(_) => InterdimStatus::Unsupported,
            Error::BudgetTooSmall { .. } => InterdimStatus::BudgetTooSmall,
            Error::ResourceLimit(_) => InterdimStatus::ResourceLimit,
            Error::DeltaAboveThreshold { .. } => InterdimStatus::DeltaAboveThreshold,
            Error::Empty(_) => InterdimStatus::Empty,
            Error::Parse { .. } => InterdimStatus::Parse,
            Error::Invariant(_) => InterdimStatus::Invariant,
            Error::Io(_) => InterdimStatus::Io,
        }
    }
}

/// A parsed set description.
pub struct InterdimSpec(SetSpec);

/// An estimate with its per-delta rows.
pub struct InterdimEstimate(EstimateResult);

/// Summary of a mass-distribution certificate.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct InterdimCertificate {
    /// 1 when supported, 0 when violated.
    pub supported: i32,
    pub total_mass_min: f64,
    pub ratio_max: f64,
    pub floor: f64,
    pub cap: f64,
    /// Deltas rejected by the construction's threshold.
    pub skipped: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

/// Runs `f`, recording errors and panics.
fn guard(f: impl FnOnce() -> Result<(), (InterdimStatus, String)>) -> InterdimStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => InterdimStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("panic inside interdim");
            InterdimStatus::Panic
        }
    }
}

fn lib(e: Error) -> (InterdimStatus, String) {
    (InterdimStatus::from(&e), e.to_string())
}

fn null(what: &str) -> (InterdimStatus, String) {
    (InterdimStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deltas_from<'a>(deltas: *const f64, len: usize) -> Result<&'a [f64], (InterdimStatus, String)> {
    if deltas.is_null() {
        return Err(null("deltas"));
    }
    Ok(std::slice::from_raw_parts(deltas, len))
}

/// Message of the last failed call on this thread; empty if none. Valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn interdim_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn interdim_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses `key=value` text such as `family=concentric d=2 p=0.5`.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn interdim_spec_parse(text: *const c_char, out: *mut *mut InterdimSpec) -> InterdimStatus {
    guard(|| {
        if text.is_null() {
            return Err(null("text"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let text = CStr::from_ptr(text)
            .to_str()
            .map_err(|_| (InterdimStatus::Parse, "spec is not UTF-8".to_string()))?;
        let spec = SetSpec::parse(text).map_err(lib)?;
        *out = Box::into_raw(Box::new(InterdimSpec(spec)));
        Ok(())
    })
}

/// # Safety
/// `spec` must come from [`interdim_spec_parse`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn interdim_spec_free(spec: *mut InterdimSpec) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

/// Closed-form dimension at `theta`. `Unsupported` when the family has none.
///
/// # Safety
/// `spec` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn interdim_formula(spec: *const InterdimSpec, theta: f64, out: *mut f64) -> InterdimStatus {
    guard(|| {
        let spec = spec.as_ref().ok_or_else(|| null("spec"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        if !(0.0..=1.0).contains(&theta) {
            return Err(lib(Error::InvalidParameter(format!(
                "theta must lie in [0, 1], got {theta}"
            ))));
        }
        let v = formula_dimension(&spec.0, theta)
            .ok_or_else(|| lib(Error::Unsupported(format!("no closed form for `{}`", spec.0))))?;
        *out = v;
        Ok(())
    })
}

/// Cost of the constructive two-scale cover at exponent `s`.
///
/// # Safety
/// `spec` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn interdim_cover_cost(
    spec: *const InterdimSpec,
    delta: f64,
    theta: f64,
    s: f64,
    out: *mut f64,
) -> InterdimStatus {
    guard(|| {
        let spec = spec.as_ref().ok_or_else(|| null("spec"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let counts = build_theorem_cover(&spec.0, delta, theta, s).map_err(lib)?;
        *out = cover_cost(&counts, delta, theta, s);
        Ok(())
    })
}

/// Two-scale grid estimate; `budget` bounds the sampling resolution.
///
/// # Safety
/// `spec` must be a live handle, `deltas` must point to `len` values and
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn interdim_estimate(
    spec: *const InterdimSpec,
    theta: f64,
    deltas: *const f64,
    len: usize,
    budget: u64,
    out: *mut *mut InterdimEstimate,
) -> InterdimStatus {
    guard(|| {
        let spec = spec.as_ref().ok_or_else(|| null("spec"))?;
        let deltas = deltas_from(deltas, len)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let r = estimate_dimension(&spec.0, theta, deltas, budget).map_err(lib)?;
        *out = Box::into_raw(Box::new(InterdimEstimate(r)));
        Ok(())
    })
}

/// Estimate from the constructive covers' closed-form counts.
///
/// # Safety
/// As [`interdim_estimate`].
#[no_mangle]
pub unsafe extern "C" fn interdim_upper_estimate(
    spec: *const InterdimSpec,
    theta: f64,
    deltas: *const f64,
    len: usize,
    out: *mut *mut InterdimEstimate,
) -> InterdimStatus {
    guard(|| {
        let spec = spec.as_ref().ok_or_else(|| null("spec"))?;
        let deltas = deltas_from(deltas, len)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let r = upper_dim_estimate(&spec.0, theta, deltas).map_err(lib)?;
        *out = Box::into_raw(Box::new(InterdimEstimate(r)));
        Ok(())
    })
}

/// Extrapolated dimension of an estimate.
///
/// # Safety
/// `est` must be a live handle or null (which yields NaN).
#[no_mangle]
pub unsafe extern "C" fn interdim_estimate_value(est: *const InterdimEstimate) -> f64 {
    est.as_ref().map_or(f64::NAN, |e| e.0.extrapolated)
}

/// Number of per-delta rows.
///
/// # Safety
/// `est` must be a live handle or null (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn interdim_estimate_len(est: *const InterdimEstimate) -> usize {
    est.as_ref().map_or(0, |e| e.0.per_delta.len())
}

/// Row `i`: its delta and the unit-cost exponent there.
///
/// # Safety
/// `est` must be a live handle; `delta` and `s_star` must be writable.
#[no_mangle]
pub unsafe extern "C" fn interdim_estimate_row(
    est: *const InterdimEstimate,
    i: usize,
    delta: *mut f64,
    s_star: *mut f64,
) -> InterdimStatus {
    guard(|| {
        let est = est.as_ref().ok_or_else(|| null("estimate"))?;
        if delta.is_null() || s_star.is_null() {
            return Err(null("output"));
        }
        let row = est.0.per_delta.get(i).ok_or_else(|| {
            lib(Error::IndexOutOfRange {
                index: i,
                len: est.0.per_delta.len(),
            })
        })?;
        *delta = row.delta;
        *s_star = row.s_star;
        Ok(())
    })
}

/// # Safety
/// `est` must come from an estimate call and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn interdim_estimate_free(est: *mut InterdimEstimate) {
    if !est.is_null() {
        drop(Box::from_raw(est));
    }
}

/// Certifies the family's measure at exponent `s` over `deltas` with
/// `samples` test sets per delta.
///
/// # Safety
/// `spec` must be a live handle, `deltas` must point to `len` values and
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn interdim_certify(
    spec: *const InterdimSpec,
    theta: f64,
    s: f64,
    deltas: *const f64,
    len: usize,
    samples: usize,
    out: *mut InterdimCertificate,
) -> InterdimStatus {
    guard(|| {
        let spec = spec.as_ref().ok_or_else(|| null("spec"))?;
        let deltas = deltas_from(deltas, len)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let fam = measure_family(&spec.0).map_err(lib)?;
        let c = fam.certify(s, theta, deltas, samples).map_err(lib)?;
        *out = InterdimCertificate {
            supported: i32::from(c.verdict == Verdict::Supported),
            total_mass_min: c.total_mass_min,
            ratio_max: c.ratio_max,
            floor: c.floor,
            cap: c.cap,
            skipped: c.skipped.len(),
        };
        Ok(())
    })
}
