//! C ABI over the run pipeline: parse a config, execute it, query the
//! resulting report, and write it to disk. Handles are opaque; every
//! entry point catches panics and reports status codes.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use sigmaqc::config::RunConfig;
use sigmaqc::pipeline::{execute, RunReport};
use sigmaqc::report::render_report;

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SqStatus {
    /// operation succeeded
    SqOk = 0,
    /// a run finished but at least one check failed
    SqCheckFailed = 1,
    /// malformed configuration or unknown case/check/field
    SqConfigError = 2,
    /// numerical failure (solver divergence, ellipticity violation)
    SqNumericalError = 3,
    /// IO failure
    SqIoError = 4,
    /// null pointer, invalid UTF-8, or a panic inside the library
    SqInvalidArgument = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<Vec<u8>>) {
    let c = CString::new(msg).unwrap_or_else(|_| CString::new("invalid error text").unwrap());
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &sigmaqc::Error) -> SqStatus {
    use sigmaqc::Error as E;
    match err {
        E::Config(_) | E::UnknownCase(_) | E::UnknownField(_) | E::InvalidParameter(_) => {
            SqStatus::SqConfigError
        }
        E::Io(_) => SqStatus::SqIoError,
        _ => SqStatus::SqNumericalError,
    }
}

/// Parsed run configuration (opaque).
pub struct SqConfig {
    inner: RunConfig,
}

/// Finished run report (opaque).
pub struct SqReport {
    inner: RunReport,
}

fn guard<T>(f: impl FnOnce() -> T, fallback: T) -> T {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(v) => v,
        Err(_) => {
            set_error("internal panic");
            fallback
        }
    }
}

unsafe fn cstr<'a>(p: *const c_char) -> Option<&'a str> {
    if p.is_null() {
        return None;
    }
    CStr::from_ptr(p).to_str().ok()
}

/// Last error message for this thread, or null. Owned by the library;
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sq_last_error() -> *const c_char {
    LAST_ERROR.with(|e| {
        e.borrow()
            .as_ref()
            .map(|c| c.as_ptr())
            .unwrap_or(ptr::null())
    })
}

unsafe fn parse_config(text: &str, out: *mut *mut SqConfig) -> SqStatus {
    match RunConfig::parse_str(text) {
        Ok(cfg) => {
            *out = Box::into_raw(Box::new(SqConfig { inner: cfg }));
            SqStatus::SqOk
        }
        Err(e) => {
            set_error(e.to_string());
            status_of(&e)
        }
    }
}

/// Parse a config from a NUL-terminated string into `*out`.
///
/// # Safety
/// `text` must be a valid NUL-terminated string; `out` must be a valid
/// pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn sq_config_parse_str(
    text: *const c_char,
    out: *mut *mut SqConfig,
) -> SqStatus {
    guard(
        || {
            if out.is_null() {
                set_error("null output pointer");
                return SqStatus::SqInvalidArgument;
            }
            let Some(text) = cstr(text) else {
                set_error("config text is null or not UTF-8");
                return SqStatus::SqInvalidArgument;
            };
            parse_config(text, out)
        },
        SqStatus::SqInvalidArgument,
    )
}

/// Parse a config file into `*out`.
///
/// # Safety
/// `path` must be a valid NUL-terminated string; `out` must be a valid
/// pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn sq_config_parse_file(
    path: *const c_char,
    out: *mut *mut SqConfig,
) -> SqStatus {
    guard(
        || {
            if out.is_null() {
                set_error("null output pointer");
                return SqStatus::SqInvalidArgument;
            }
            let Some(path) = cstr(path) else {
                set_error("path is null or not UTF-8");
                return SqStatus::SqInvalidArgument;
            };
            match std::fs::read_to_string(path) {
                Ok(text) => parse_config(&text, out),
                Err(e) => {
                    set_error(e.to_string());
                    SqStatus::SqIoError
                }
            }
        },
        SqStatus::SqInvalidArgument,
    )
}

/// Free a config handle. Null is a no-op.
///
/// # Safety
/// `cfg` must have come from a `sq_config_parse_*` call and not have
/// been freed already.
#[no_mangle]
pub unsafe extern "C" fn sq_config_free(cfg: *mut SqConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Execute the pipeline. On success `*out` receives a report handle and
/// the status is `SqOk` (all checks passed) or `SqCheckFailed`.
///
/// # Safety
/// `cfg` must be a live config handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sq_run(cfg: *const SqConfig, out: *mut *mut SqReport) -> SqStatus {
    guard(
        || {
            if cfg.is_null() || out.is_null() {
                set_error("null handle");
                return SqStatus::SqInvalidArgument;
            }
            match execute(&(*cfg).inner) {
                Ok(pipeline) => {
                    let passed = pipeline.report.passed;
                    *out = Box::into_raw(Box::new(SqReport { inner: pipeline.report }));
                    if passed {
                        SqStatus::SqOk
                    } else {
                        SqStatus::SqCheckFailed
                    }
                }
                Err(e) => {
                    set_error(e.to_string());
                    status_of(&e)
                }
            }
        },
        SqStatus::SqInvalidArgument,
    )
}

/// 1 when every enforced check passed, 0 otherwise (or on null).
///
/// # Safety
/// `report` must be a live report handle or null.
#[no_mangle]
pub unsafe extern "C" fn sq_report_passed(report: *const SqReport) -> i32 {
    guard(
        || {
            if report.is_null() {
                return 0;
            }
            (*report).inner.passed as i32
        },
        0,
    )
}

/// Fetch a named scalar of the finest grid into `*value`.
/// Known keys: sup_d_sigma, inf_d_sigma, identity_residual, harnack_H,
/// k_ess, bmo_log_det, energy_sigma, area_integral, max_drift.
///
/// # Safety
/// `report` must be a live handle; `key` a NUL-terminated string;
/// `value` writable.
#[no_mangle]
pub unsafe extern "C" fn sq_report_scalar(
    report: *const SqReport,
    key: *const c_char,
    value: *mut f64,
) -> SqStatus {
    guard(
        || {
            if report.is_null() || value.is_null() {
                set_error("null handle");
                return SqStatus::SqInvalidArgument;
            }
            let Some(key) = cstr(key) else {
                set_error("key is null or not UTF-8");
                return SqStatus::SqInvalidArgument;
            };
            let Some(g) = (*report).inner.grids.last() else {
                set_error("report has no grids");
                return SqStatus::SqInvalidArgument;
            };
            let v = match key {
                "sup_d_sigma" => Some(g.sup_d_sigma),
                "inf_d_sigma" => Some(g.inf_d_sigma),
                "identity_residual" => Some(g.identity_residual),
                "harnack_H" => g.harnack,
                "k_ess" => Some(g.k_ess),
                "bmo_log_det" => Some(g.bmo_log_det),
                "energy_sigma" => g.energy,
                "area_integral" => g.area,
                "max_drift" => Some(g.max_drift),
                _ => {
                    set_error(format!("unknown scalar `{key}`"));
                    return SqStatus::SqConfigError;
                }
            };
            match v {
                Some(v) => {
                    *value = v;
                    SqStatus::SqOk
                }
                None => {
                    set_error(format!("scalar `{key}` is not defined for this run"));
                    SqStatus::SqConfigError
                }
            }
        },
        SqStatus::SqInvalidArgument,
    )
}

/// Write the rendered report to a directory (as report.txt).
///
/// # Safety
/// `report` must be a live handle; `dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn sq_report_write(report: *const SqReport, dir: *const c_char) -> SqStatus {
    guard(
        || {
            if report.is_null() {
                set_error("null handle");
                return SqStatus::SqInvalidArgument;
            }
            let Some(dir) = cstr(dir) else {
                set_error("dir is null or not UTF-8");
                return SqStatus::SqInvalidArgument;
            };
            match sigmaqc::report::write_report(&(*report).inner, Path::new(dir)) {
                Ok(()) => SqStatus::SqOk,
                Err(e) => {
                    set_error(e.to_string());
                    status_of(&e)
                }
            }
        },
        SqStatus::SqInvalidArgument,
    )
}

/// Render the report into a NUL-terminated string owned by the caller;
/// free it with `sq_string_free`.
///
/// # Safety
/// `report` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sq_report_render(report: *const SqReport) -> *mut c_char {
    guard(
        || {
            if report.is_null() {
                return ptr::null_mut();
            }
            let text = render_report(&(*report).inner);
            CString::new(text)
                .map(CString::into_raw)
                .unwrap_or(ptr::null_mut())
        },
        ptr::null_mut(),
    )
}

/// Free a string returned by `sq_report_render`. Null is a no-op.
///
/// # Safety
/// `s` must have come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn sq_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Free a report handle. Null is a no-op.
///
/// # Safety
/// `report` must have come from `sq_run` and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn sq_report_free(report: *mut SqReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;

    fn c(s: &str) -> CString {
        CString::new(s).unwrap()
    }

    #[test]
    fn parse_run_query_free() {
        unsafe {
            let text = c("case = laminate\ngrids = 16\n[checks]\nd_sigma_const = 0.02\n");
            let mut cfg: *mut SqConfig = ptr::null_mut();
            assert_eq!(sq_config_parse_str(text.as_ptr(), &mut cfg), SqStatus::SqOk);
            let mut rep: *mut SqReport = ptr::null_mut();
            assert_eq!(sq_run(cfg, &mut rep), SqStatus::SqOk);
            assert_eq!(sq_report_passed(rep), 1);
            let mut v = 0.0;
            let key = c("sup_d_sigma");
            assert_eq!(sq_report_scalar(rep, key.as_ptr(), &mut v), SqStatus::SqOk);
            assert!((v - 1.025).abs() < 0.01, "{v}");
            let rendered = sq_report_render(rep);
            assert!(!rendered.is_null());
            let s = CStr::from_ptr(rendered).to_str().unwrap().to_string();
            assert!(s.contains("result = PASS"));
            sq_string_free(rendered);
            sq_report_free(rep);
            sq_config_free(cfg);
        }
    }

    #[test]
    fn failed_check_status() {
        unsafe {
            let text = c("case = laminate\ngrids = 16\n[checks]\nd_sigma_const = 0\n");
            let mut cfg: *mut SqConfig = ptr::null_mut();
            assert_eq!(sq_config_parse_str(text.as_ptr(), &mut cfg), SqStatus::SqOk);
            let mut rep: *mut SqReport = ptr::null_mut();
            assert_eq!(sq_run(cfg, &mut rep), SqStatus::SqCheckFailed);
            assert_eq!(sq_report_passed(rep), 0);
            sq_report_free(rep);
            sq_config_free(cfg);
        }
    }

    #[test]
    fn config_error_and_message() {
        unsafe {
            let text = c("case = unknown_thing\ngrids = 8\n");
            let mut cfg: *mut SqConfig = ptr::null_mut();
            assert_eq!(sq_config_parse_str(text.as_ptr(), &mut cfg), SqStatus::SqOk);
            let mut rep: *mut SqReport = ptr::null_mut();
            assert_eq!(sq_run(cfg, &mut rep), SqStatus::SqConfigError);
            let msg = sq_last_error();
            assert!(!msg.is_null());
            let s = CStr::from_ptr(msg).to_str().unwrap();
            assert!(s.contains("unknown_thing"), "{s}");
            sq_config_free(cfg);
        }
    }

    #[test]
    fn null_arguments_are_rejected() {
        unsafe {
            let mut cfg: *mut SqConfig = ptr::null_mut();
            assert_eq!(
                sq_config_parse_str(ptr::null(), &mut cfg),
                SqStatus::SqInvalidArgument
            );
            assert_eq!(sq_run(ptr::null(), ptr::null_mut()), SqStatus::SqInvalidArgument);
            assert_eq!(sq_report_passed(ptr::null()), 0);
            sq_config_free(ptr::null_mut());
            sq_report_free(ptr::null_mut());
        }
    }
}
