//! C ABI over the vrpsd solver.
//!
//! Handles are opaque pointers owned by this library; every constructor has
//! a matching `_free`, and strings returned to the caller are released with
//! [`vrpsd_string_free`]. Functions report a [`VrpsdStatus`]; on any failure
//! [`vrpsd_last_error`] carries a thread-local message until the next call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::time::Duration;

use vrpsd::engine::{branch_and_cut, SolveStatus, SolverConfig, SolverReport};
use vrpsd::instance::{from_native, generate_jabali, parse_cvrplib, StochasticInstance};
use vrpsd::monotonicity::{certify_instance, MonotonicityCertificate};

/// Opaque problem instance handle.
pub struct VrpsdInstance(StochasticInstance);

/// Opaque solver report handle.
pub struct VrpsdReport(SolverReport);

/// Status code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VrpsdStatus {
    VrpsdOk = 0,
    VrpsdNullArgument = 1,
    VrpsdInvalidUtf8 = 2,
    VrpsdParseError = 3,
    VrpsdGenerationError = 4,
    VrpsdSolveError = 5,
    VrpsdIoError = 6,
}

/// Solver outcome as reported by [`vrpsd_report_status`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VrpsdSolveStatus {
    VrpsdOptimal = 0,
    VrpsdTimeLimit = 1,
    VrpsdInfeasible = 2,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl AsRef<str>) {
    let sanitized = message.as_ref().replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

/// Message of the last failure on this thread. The pointer stays valid until
/// the next failing call on the same thread; never free it.
#[no_mangle]
pub extern "C" fn vrpsd_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

unsafe fn read_str<'a>(ptr: *const c_char) -> Result<&'a str, VrpsdStatus> {
    if ptr.is_null() {
        set_error("null pointer argument");
        return Err(VrpsdStatus::VrpsdNullArgument);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error("argument is not valid UTF-8");
        VrpsdStatus::VrpsdInvalidUtf8
    })
}

fn parse_any(text: &str) -> Result<StochasticInstance, String> {
    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    let parsed = if first.trim_start().starts_with("vrpsd") {
        from_native(text)
    } else {
        parse_cvrplib(text)
    };
    parsed.map_err(|e| e.to_string())
}

/// Parses an instance from text (native format or TSPLIB-style CVRP).
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vrpsd_instance_from_text(
    text: *const c_char,
    out: *mut *mut VrpsdInstance,
) -> VrpsdStatus {
    if out.is_null() {
        set_error("null output pointer");
        return VrpsdStatus::VrpsdNullArgument;
    }
    let text = match read_str(text) {
        Ok(t) => t,
        Err(code) => return code,
    };
    match parse_any(text) {
        Ok(instance) => {
            *out = Box::into_raw(Box::new(VrpsdInstance(instance)));
            VrpsdStatus::VrpsdOk
        }
        Err(e) => {
            set_error(e);
            VrpsdStatus::VrpsdParseError
        }
    }
}

/// Loads an instance file (native format or TSPLIB-style CVRP).
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vrpsd_instance_from_file(
    path: *const c_char,
    out: *mut *mut VrpsdInstance,
) -> VrpsdStatus {
    let path = match read_str(path) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            set_error(format!("{path}: {e}"));
            return VrpsdStatus::VrpsdIoError;
        }
    };
    let c_text = match CString::new(text) {
        Ok(t) => t,
        Err(_) => {
            set_error("file contains NUL bytes");
            return VrpsdStatus::VrpsdParseError;
        }
    };
    vrpsd_instance_from_text(c_text.as_ptr(), out)
}

/// Generates a benchmark-style instance: `n` customers, `m` vehicles,
/// filling coefficient `fill`, dispersion `sigma^2/mu`, deterministic in
/// `seed`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vrpsd_instance_generate(
    n: u32,
    m: u32,
    fill: f64,
    dispersion: f64,
    seed: u64,
    out: *mut *mut VrpsdInstance,
) -> VrpsdStatus {
    if out.is_null() {
        set_error("null output pointer");
        return VrpsdStatus::VrpsdNullArgument;
    }
    match generate_jabali(n as usize, m as usize, fill, dispersion, seed) {
        Ok(instance) => {
            *out = Box::into_raw(Box::new(VrpsdInstance(instance)));
            VrpsdStatus::VrpsdOk
        }
        Err(e) => {
            set_error(e.to_string());
            VrpsdStatus::VrpsdGenerationError
        }
    }
}

/// # Safety
/// `instance` must come from a `vrpsd_instance_*` constructor and not yet be
/// freed; a null pointer is ignored.
#[no_mangle]
pub unsafe extern "C" fn vrpsd_instance_free(instance: *mut VrpsdInstance) {
    if !instance.is_null() {
        drop(Box::from_raw(instance));
    }
}

/// Number of customers; 0 on a null handle.
///
/// # Safety
/// `instance` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn vrpsd_instance_customers(instance: *const VrpsdInstance) -> u32 {
    instance.as_ref().map_or(0, |i| i.0.num_customers() as u32)
}

/// Vehicle capacity; 0 on a null handle.
///
/// # Safety
/// `instance` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn vrpsd_instance_capacity(instance: *const VrpsdInstance) -> u32 {
    instance.as_ref().map_or(0, |i| i.0.capacity)
}

/// Monotonicity verdict of the instance: 1 certified, 0 unknown.
///
/// # Safety
/// `instance` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn vrpsd_instance_is_monotone(instance: *const VrpsdInstance) -> i32 {
    match instance.as_ref() {
        None => 0,
        Some(i) => match certify_instance(&i.0) {
            MonotonicityCertificate::CertifiedByFamily { .. }
            | MonotonicityCertificate::VerifiedEnumeratively { .. }
            | MonotonicityCertificate::VerifiedOnGrid { .. } => 1,
            _ => 0,
        },
    }
}

/// Solves the instance to proven optimality or the time limit.
///
/// # Safety
/// `instance` must be a live handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vrpsd_solve(
    instance: *const VrpsdInstance,
    time_limit_seconds: f64,
    out: *mut *mut VrpsdReport,
) -> VrpsdStatus {
    if out.is_null() || instance.is_null() {
        set_error("null pointer argument");
        return VrpsdStatus::VrpsdNullArgument;
    }
    let instance = &(*instance).0;
    let config = SolverConfig {
        time_limit: Duration::from_secs_f64(time_limit_seconds.max(0.0)),
        ..Default::default()
    };
    match branch_and_cut(instance, &config) {
        Ok(report) => {
            *out = Box::into_raw(Box::new(VrpsdReport(report)));
            VrpsdStatus::VrpsdOk
        }
        Err(e) => {
            set_error(e.to_string());
            VrpsdStatus::VrpsdSolveError
        }
    }
}

/// # Safety
/// `report` must come from [`vrpsd_solve`] and not yet be freed; null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn vrpsd_report_free(report: *mut VrpsdReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// # Safety
/// `report` must be a live handle or null (null reports infeasible).
#[no_mangle]
pub unsafe extern "C" fn vrpsd_report_status(report: *const VrpsdReport) -> VrpsdSolveStatus {
    match report.as_ref().map(|r| r.0.status) {
        Some(SolveStatus::Optimal) => VrpsdSolveStatus::VrpsdOptimal,
        Some(SolveStatus::TimeLimit) => VrpsdSolveStatus::VrpsdTimeLimit,
        _ => VrpsdSolveStatus::VrpsdInfeasible,
    }
}

/// Incumbent objective; NaN when no solution was found.
///
/// # Safety
/// `report` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn vrpsd_report_objective(report: *const VrpsdReport) -> f64 {
    report.as_ref().and_then(|r| r.0.objective).unwrap_or(f64::NAN)
}

/// Best proven lower bound.
///
/// # Safety
/// `report` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn vrpsd_report_bound(report: *const VrpsdReport) -> f64 {
    report.as_ref().map_or(f64::NAN, |r| r.0.best_bound)
}

/// Relative gap in percent; NaN when undefined.
///
/// # Safety
/// `report` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn vrpsd_report_gap_percent(report: *const VrpsdReport) -> f64 {
    report.as_ref().and_then(|r| r.0.gap_percent).unwrap_or(f64::NAN)
}

/// Number of explored branch-and-bound nodes.
///
/// # Safety
/// `report` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn vrpsd_report_nodes(report: *const VrpsdReport) -> u64 {
    report.as_ref().map_or(0, |r| r.0.nodes as u64)
}

/// Serializes the full report as JSON. Free with [`vrpsd_string_free`].
///
/// # Safety
/// `report` must be a live handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vrpsd_report_to_json(
    report: *const VrpsdReport,
    out: *mut *mut c_char,
) -> VrpsdStatus {
    if report.is_null() || out.is_null() {
        set_error("null pointer argument");
        return VrpsdStatus::VrpsdNullArgument;
    }
    let json = match serde_json::to_string(&(*report).0) {
        Ok(j) => j,
        Err(e) => {
            set_error(e.to_string());
            return VrpsdStatus::VrpsdSolveError;
        }
    };
    match CString::new(json) {
        Ok(s) => {
            *out = s.into_raw();
            VrpsdStatus::VrpsdOk
        }
        Err(_) => {
            set_error("report contained NUL bytes");
            VrpsdStatus::VrpsdSolveError
        }
    }
}

/// Frees a string returned by this library.
///
/// # Safety
/// `s` must have been returned by [`vrpsd_report_to_json`] and not yet
/// freed; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn vrpsd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ptr;

    #[test]
    fn round_trip_generate_solve_report() {
        unsafe {
            let mut instance: *mut VrpsdInstance = ptr::null_mut();
            let code = vrpsd_instance_generate(8, 2, 0.9, 1.0, 5, &mut instance);
            assert_eq!(code, VrpsdStatus::VrpsdOk);
            assert_eq!(vrpsd_instance_customers(instance), 8);
            assert!(vrpsd_instance_capacity(instance) > 0);
            assert_eq!(vrpsd_instance_is_monotone(instance), 1);

            let mut report: *mut VrpsdReport = ptr::null_mut();
            let code = vrpsd_solve(instance, 60.0, &mut report);
            assert_eq!(code, VrpsdStatus::VrpsdOk);
            assert_eq!(vrpsd_report_status(report), VrpsdSolveStatus::VrpsdOptimal);
            let obj = vrpsd_report_objective(report);
            let bound = vrpsd_report_bound(report);
            assert!(obj.is_finite() && (obj - bound).abs() < 1e-6);

            let mut json: *mut c_char = ptr::null_mut();
            assert_eq!(vrpsd_report_to_json(report, &mut json), VrpsdStatus::VrpsdOk);
            let text = CStr::from_ptr(json).to_str().unwrap().to_string();
            assert!(text.contains("\"Optimal\""));
            vrpsd_string_free(json);

            vrpsd_report_free(report);
            vrpsd_instance_free(instance);
        }
    }

    #[test]
    fn null_arguments_are_reported() {
        unsafe {
            let mut out: *mut VrpsdInstance = ptr::null_mut();
            assert_eq!(
                vrpsd_instance_from_text(ptr::null(), &mut out),
                VrpsdStatus::VrpsdNullArgument
            );
            let msg = CStr::from_ptr(vrpsd_last_error()).to_str().unwrap();
            assert!(msg.contains("null"));

            assert_eq!(
                vrpsd_instance_from_file(c"/definitely/not/here.vrp".as_ptr(), &mut out),
                VrpsdStatus::VrpsdIoError
            );
        }
    }

    #[test]
    fn parse_error_carries_message() {
        unsafe {
            let mut out: *mut VrpsdInstance = ptr::null_mut();
            let text = c"vrpsd 1\nname broken\n";
            assert_eq!(
                vrpsd_instance_from_text(text.as_ptr(), &mut out),
                VrpsdStatus::VrpsdParseError
            );
            let msg = CStr::from_ptr(vrpsd_last_error()).to_str().unwrap();
            assert!(!msg.is_empty());
        }
    }
}
