//! C ABI for the stochsup solvers: opaque handles over instances and
//! scenario lists, JSON in and out, integer status codes. The header in
//! `include/stochsup.h` is generated by the build script.
//!
//! Ownership rules: every pointer returned by this library is owned by the
//! caller and must be released with the matching `*_free` function; input
//! pointers are borrowed for the duration of the call only.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use stochsup::cli::{dispatch_solve, strategy_report, CliError};
use stochsup::lp::LpConfig;
use stochsup::model::{
    ExplicitDistribution, Instance, InstanceFile, ScenarioListFile, StrategyFile,
};

/// Status codes returned by every fallible function. `Infeasible` mirrors
/// the CLI's exit code 2 and is not an error: the solver proved there is
/// no strategy within budget.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StochsupStatus {
    Ok = 0,
    Infeasible = 2,
    InvalidArgument = 3,
    ParseError = 4,
    SolveError = 5,
    Panic = 6,
}

/// Opaque instance handle.
pub struct StochsupInstance {
    inner: Instance,
}

/// Opaque scenario-list handle, bound to the instance it was parsed with.
pub struct StochsupDistribution {
    inner: ExplicitDistribution,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let cstring = CString::new(message.replace('\0', " "))
        .unwrap_or_else(|_| CString::new("invalid error text").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(cstring));
}

fn clear_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

/// Message of the most recent failure on this thread, or NULL when the
/// last call succeeded. Free with `stochsup_string_free`.
#[no_mangle]
pub extern "C" fn stochsup_last_error() -> *mut c_char {
    LAST_ERROR.with(|slot| match &*slot.borrow() {
        Some(msg) => msg.clone().into_raw(),
        None => ptr::null_mut(),
    })
}

/// Library version as a heap string; free with `stochsup_string_free`.
#[no_mangle]
pub extern "C" fn stochsup_version() -> *mut c_char {
    CString::new(env!("CARGO_PKG_VERSION")).expect("static version").into_raw()
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be a pointer previously returned by a stochsup function and
/// not yet freed; NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn stochsup_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

unsafe fn borrow_str<'a>(ptr: *const c_char) -> Result<&'a str, StochsupStatus> {
    if ptr.is_null() {
        set_error("null pointer argument".into());
        return Err(StochsupStatus::InvalidArgument);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error("argument is not valid UTF-8".into());
        StochsupStatus::InvalidArgument
    })
}

fn guarded(f: impl FnOnce() -> StochsupStatus) -> StochsupStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic".into());
            StochsupStatus::Panic
        }
    }
}

/// Parses an instance from its JSON document.
///
/// # Safety
/// `json` must point to a NUL-terminated string and `out` to writable
/// pointer storage; on `Ok` the caller owns the handle and must release it
/// with `stochsup_instance_free`.
#[no_mangle]
pub unsafe extern "C" fn stochsup_instance_from_json(
    json: *const c_char,
    out: *mut *mut StochsupInstance,
) -> StochsupStatus {
    guarded(|| {
        if out.is_null() {
            set_error("null output pointer".into());
            return StochsupStatus::InvalidArgument;
        }
        let text = match borrow_str(json) {
            Ok(t) => t,
            Err(status) => return status,
        };
        match InstanceFile::parse(text).and_then(|f| f.build()) {
            Ok(instance) => {
                clear_error();
                *out = Box::into_raw(Box::new(StochsupInstance { inner: instance }));
                StochsupStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                StochsupStatus::ParseError
            }
        }
    })
}

/// Releases an instance handle.
///
/// # Safety
/// `handle` must come from `stochsup_instance_from_json` and not yet be
/// freed; NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn stochsup_instance_free(handle: *mut StochsupInstance) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Number of clients in the instance; 0 on NULL.
///
/// # Safety
/// `handle` must be a live instance handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn stochsup_instance_num_clients(handle: *const StochsupInstance) -> usize {
    handle.as_ref().map_or(0, |h| h.inner.num_clients())
}

/// Number of facilities in the instance; 0 on NULL.
///
/// # Safety
/// `handle` must be a live instance handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn stochsup_instance_num_facilities(
    handle: *const StochsupInstance,
) -> usize {
    handle.as_ref().map_or(0, |h| h.inner.num_facilities())
}

/// Parses a scenario list against an instance.
///
/// # Safety
/// `instance` must be a live handle, `json` a NUL-terminated string, and
/// `out` writable; on `Ok` the caller owns the distribution handle.
#[no_mangle]
pub unsafe extern "C" fn stochsup_distribution_from_json(
    instance: *const StochsupInstance,
    json: *const c_char,
    out: *mut *mut StochsupDistribution,
) -> StochsupStatus {
    guarded(|| {
        if out.is_null() || instance.is_null() {
            set_error("null pointer argument".into());
            return StochsupStatus::InvalidArgument;
        }
        let text = match borrow_str(json) {
            Ok(t) => t,
            Err(status) => return status,
        };
        let inst = &(*instance).inner;
        match ScenarioListFile::parse(text).and_then(|f| f.build(inst)) {
            Ok(dist) => {
                clear_error();
                *out = Box::into_raw(Box::new(StochsupDistribution { inner: dist }));
                StochsupStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                StochsupStatus::ParseError
            }
        }
    })
}

/// Releases a distribution handle.
///
/// # Safety
/// `handle` must come from `stochsup_distribution_from_json` and not yet
/// be freed; NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn stochsup_distribution_free(handle: *mut StochsupDistribution) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Runs a named algorithm (sup3, matsup5, musup5, matsup11, exact) and, on
/// success, writes a JSON document `{report, strategy}`. Pass NaN as
/// `radius` to use the instance radii.
///
/// # Safety
/// `instance` and `dist` must be live handles, `algo` a NUL-terminated
/// string, `out_json` writable; the returned string is freed with
/// `stochsup_string_free`.
#[no_mangle]
pub unsafe extern "C" fn stochsup_solve_json(
    instance: *const StochsupInstance,
    dist: *const StochsupDistribution,
    algo: *const c_char,
    radius: f64,
    out_json: *mut *mut c_char,
) -> StochsupStatus {
    guarded(|| {
        if instance.is_null() || dist.is_null() || out_json.is_null() {
            set_error("null pointer argument".into());
            return StochsupStatus::InvalidArgument;
        }
        let algo = match borrow_str(algo) {
            Ok(a) => a,
            Err(status) => return status,
        };
        let inst = &(*instance).inner;
        let d = &(*dist).inner;
        let radius_opt = if radius.is_nan() { None } else { Some(radius) };
        match dispatch_solve(inst, d, algo, radius_opt, &LpConfig::default()) {
            Ok((Some(strategy), eta, radius_used)) => {
                let report = match strategy_report(inst, d, &strategy, algo, radius_used, eta) {
                    Ok(r) => r,
                    Err(e) => {
                        set_error(e.to_string());
                        return StochsupStatus::SolveError;
                    }
                };
                let doc = serde_json::json!({
                    "report": report,
                    "strategy": StrategyFile::from_strategy(inst, &strategy),
                });
                let text = serde_json::to_string_pretty(&doc).expect("serializable");
                clear_error();
                *out_json = CString::new(text).expect("no interior NUL").into_raw();
                StochsupStatus::Ok
            }
            Ok((None, _, _)) => {
                clear_error();
                StochsupStatus::Infeasible
            }
            Err(e @ CliError::Usage(_)) => {
                set_error(e.to_string());
                StochsupStatus::InvalidArgument
            }
            Err(e) => {
                set_error(e.to_string());
                StochsupStatus::SolveError
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const INSTANCE: &str = r#"{
        "metric": "euclidean",
        "clients": [
            {"id": "c1", "point": [1.0]},
            {"id": "c2", "point": [9.0]}
        ],
        "facilities": [
            {"id": "f1", "point": [0.0], "c1": 5.0},
            {"id": "f2", "point": [10.0], "c1": 5.0}
        ],
        "radii": {"c1": 2.0, "c2": 2.0},
        "constraint": {"type": "none"},
        "budget": 9.0
    }"#;

    const SCENARIOS: &str = r#"{
        "scenarios": [
            {"id": "A1", "clients": ["c1"], "c2": {"f1": 2.0, "f2": 2.0}, "p": 0.5},
            {"id": "A2", "clients": ["c1", "c2"], "c2": {"f1": 2.0, "f2": 8.0}, "p": 0.5}
        ]
    }"#;

    fn cstr(text: &str) -> CString {
        CString::new(text).unwrap()
    }

    #[test]
    fn version_round_trips() {
        let v = stochsup_version();
        assert!(!v.is_null());
        let text = unsafe { CStr::from_ptr(v) }.to_str().unwrap().to_string();
        assert!(!text.is_empty());
        unsafe { stochsup_string_free(v) };
    }

    #[test]
    fn full_solve_through_the_abi() {
        unsafe {
            let mut inst: *mut StochsupInstance = ptr::null_mut();
            let status = stochsup_instance_from_json(cstr(INSTANCE).as_ptr(), &mut inst);
            assert_eq!(status, StochsupStatus::Ok);
            assert_eq!(stochsup_instance_num_clients(inst), 2);
            assert_eq!(stochsup_instance_num_facilities(inst), 2);

            let mut dist: *mut StochsupDistribution = ptr::null_mut();
            let status =
                stochsup_distribution_from_json(inst, cstr(SCENARIOS).as_ptr(), &mut dist);
            assert_eq!(status, StochsupStatus::Ok);

            let mut out: *mut c_char = ptr::null_mut();
            let status =
                stochsup_solve_json(inst, dist, cstr("sup3").as_ptr(), f64::NAN, &mut out);
            assert_eq!(status, StochsupStatus::Ok);
            let text = CStr::from_ptr(out).to_str().unwrap();
            let doc: serde_json::Value = serde_json::from_str(text).unwrap();
            assert_eq!(doc["report"]["status"], "feasible");
            assert!(doc["report"]["expected_cost"].as_f64().unwrap() <= 9.0 + 1e-7);
            stochsup_string_free(out);

            stochsup_distribution_free(dist);
            stochsup_instance_free(inst);
        }
    }

    #[test]
    fn infeasible_budget_reports_status_two() {
        unsafe {
            let squeezed = INSTANCE.replace("\"budget\": 9.0", "\"budget\": 5.9");
            let mut inst: *mut StochsupInstance = ptr::null_mut();
            assert_eq!(
                stochsup_instance_from_json(cstr(&squeezed).as_ptr(), &mut inst),
                StochsupStatus::Ok
            );
            let mut dist: *mut StochsupDistribution = ptr::null_mut();
            assert_eq!(
                stochsup_distribution_from_json(inst, cstr(SCENARIOS).as_ptr(), &mut dist),
                StochsupStatus::Ok
            );
            let mut out: *mut c_char = ptr::null_mut();
            let status =
                stochsup_solve_json(inst, dist, cstr("sup3").as_ptr(), f64::NAN, &mut out);
            assert_eq!(status, StochsupStatus::Infeasible);
            assert!(out.is_null());
            stochsup_distribution_free(dist);
            stochsup_instance_free(inst);
        }
    }

    #[test]
    fn parse_errors_set_the_message() {
        unsafe {
            let mut inst: *mut StochsupInstance = ptr::null_mut();
            let status = stochsup_instance_from_json(cstr("{not json").as_ptr(), &mut inst);
            assert_eq!(status, StochsupStatus::ParseError);
            let err = stochsup_last_error();
            assert!(!err.is_null());
            stochsup_string_free(err);
        }
    }

    #[test]
    fn null_arguments_are_invalid() {
        unsafe {
            let status = stochsup_instance_from_json(ptr::null(), ptr::null_mut());
            assert_eq!(status, StochsupStatus::InvalidArgument);
            // frees ignore NULL
            stochsup_instance_free(ptr::null_mut());
            stochsup_distribution_free(ptr::null_mut());
            stochsup_string_free(ptr::null_mut());
        }
    }

    #[test]
    fn unknown_algorithm_is_invalid_argument() {
        unsafe {
            let mut inst: *mut StochsupInstance = ptr::null_mut();
            assert_eq!(
                stochsup_instance_from_json(cstr(INSTANCE).as_ptr(), &mut inst),
                StochsupStatus::Ok
            );
            let mut dist: *mut StochsupDistribution = ptr::null_mut();
            assert_eq!(
                stochsup_distribution_from_json(inst, cstr(SCENARIOS).as_ptr(), &mut dist),
                StochsupStatus::Ok
            );
            let mut out: *mut c_char = ptr::null_mut();
            let status =
                stochsup_solve_json(inst, dist, cstr("nope").as_ptr(), f64::NAN, &mut out);
            assert_eq!(status, StochsupStatus::InvalidArgument);
            stochsup_distribution_free(dist);
            stochsup_instance_free(inst);
        }
    }
}
