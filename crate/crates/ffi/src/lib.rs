//! C ABI for the mission simulator: load scenarios, run them, and read the
//! results from C or anything that can call C.
//!
//! Conventions:
//! - Handles (`UavnetScenario`, `UavnetTrace`) are opaque; create them with
//!   the `*_load`/`*_parse`/`uavnet_run` constructors and release them with
//!   the matching `*_free`. Passing null to a `*_free` is a no-op.
//! - Every fallible call returns a `UavnetStatus`; on anything other than
//!   `UAVNET_OK`, `uavnet_last_error` returns a message for the calling
//!   thread, valid until that thread's next FFI call.
//! - Strings returned through out-parameters are NUL-terminated, owned by
//!   the caller, and must be released with `uavnet_string_free`.
//! - Panics never cross the boundary; they are reported as `UAVNET_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use uavnet_core::harness::{self, Trace};
use uavnet_core::planner::{plan_mission, PlannerConfig};
use uavnet_core::scenario::{self, Scenario, ScenarioFile};

/// Result code of every fallible FFI call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UavnetStatus {
    /// Success.
    UavnetOk = 0,
    /// A required pointer argument was null.
    UavnetNullArgument = 1,
    /// A string argument was not valid UTF-8.
    UavnetInvalidUtf8 = 2,
    /// The scenario file or JSON failed to load or validate.
    UavnetInvalidScenario = 3,
    /// Mission planning failed (goal unreachable within the horizon).
    UavnetPlanningFailed = 4,
    /// The run stopped before all pictures were delivered.
    UavnetIncomplete = 5,
    /// An internal panic was caught at the boundary.
    UavnetPanic = 6,
}

use UavnetStatus::*;

/// Opaque handle: a validated scenario.
pub struct UavnetScenario {
    inner: Scenario,
}

/// Opaque handle: the trace of one executed run.
pub struct UavnetTrace {
    inner: Trace,
}

/// Headline metrics of a run.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct UavnetMetrics {
    /// Step at which the last picture reached the home base.
    pub mission_length: u32,
    /// Sum over pictures of (delivery step - capture step).
    pub total_staleness: u64,
    /// Pictures delivered to the home base.
    pub delivered: u32,
    /// Whether every goal picture was delivered.
    pub completed: bool,
}

/// Network-aware vs network-unaware comparison on one scenario.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct UavnetCompare {
    pub aware: UavnetMetrics,
    pub unaware: UavnetMetrics,
    /// Percent reduction of the aware run relative to the unaware run.
    pub staleness_reduction_pct: f64,
    pub length_reduction_pct: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl std::fmt::Display) {
    let text = msg.to_string().replace('\0', "?");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).expect("NUL-free"));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::default());
}

/// Message for this thread's most recent failed call, or an empty string.
/// The pointer stays valid until the thread's next FFI call.
#[no_mangle]
pub extern "C" fn uavnet_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Run `f` with panics converted to `UAVNET_PANIC` and the error slot
/// maintained on both paths.
fn guarded(f: impl FnOnce() -> UavnetStatus) -> UavnetStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            UavnetPanic
        }
    }
}

/// # Safety
/// `s` must be null or point to a NUL-terminated string.
unsafe fn utf8_arg<'a>(s: *const c_char) -> Result<&'a str, UavnetStatus> {
    if s.is_null() {
        set_error("null string argument");
        return Err(UavnetNullArgument);
    }
    CStr::from_ptr(s).to_str().map_err(|e| {
        set_error(format!("invalid UTF-8: {e}"));
        UavnetInvalidUtf8
    })
}

fn hand_out<T>(out: *mut *mut T, value: T) -> UavnetStatus {
    if out.is_null() {
        set_error("null output argument");
        return UavnetNullArgument;
    }
    unsafe { *out = Box::into_raw(Box::new(value)) };
    UavnetOk
}

/// Load and validate a scenario from a JSON file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn uavnet_scenario_load(
    path: *const c_char,
    out: *mut *mut UavnetScenario,
) -> UavnetStatus {
    guarded(|| {
        let path = match utf8_arg(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match scenario::load(Path::new(path)) {
            Ok(inner) => hand_out(out, UavnetScenario { inner }),
            Err(e) => {
                set_error(e);
                UavnetInvalidScenario
            }
        }
    })
}

/// Parse and validate a scenario from a JSON string.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn uavnet_scenario_parse(
    json: *const c_char,
    out: *mut *mut UavnetScenario,
) -> UavnetStatus {
    guarded(|| {
        let json = match utf8_arg(json) {
            Ok(j) => j,
            Err(s) => return s,
        };
        match ScenarioFile::parse(json).and_then(|f| f.build()) {
            Ok(inner) => hand_out(out, UavnetScenario { inner }),
            Err(e) => {
                set_error(e);
                UavnetInvalidScenario
            }
        }
    })
}

/// Release a scenario handle. Null is ignored.
///
/// # Safety
/// `sc` must be null or a pointer obtained from a scenario constructor,
/// released at most once.
#[no_mangle]
pub unsafe extern "C" fn uavnet_scenario_free(sc: *mut UavnetScenario) {
    if !sc.is_null() {
        drop(Box::from_raw(sc));
    }
}

/// Number of UAVs in the scenario.
///
/// # Safety
/// `sc` must be a valid scenario handle.
#[no_mangle]
pub unsafe extern "C" fn uavnet_scenario_uav_count(sc: *const UavnetScenario) -> u32 {
    if sc.is_null() {
        return 0;
    }
    (*sc).inner.map.uav_count() as u32
}

/// Number of goal targets in the scenario.
///
/// # Safety
/// `sc` must be a valid scenario handle.
#[no_mangle]
pub unsafe extern "C" fn uavnet_scenario_target_count(sc: *const UavnetScenario) -> u32 {
    if sc.is_null() {
        return 0;
    }
    (*sc).inner.map.target_count() as u32
}

/// Execute the scenario in its configured mode and hand back the trace.
/// Returns `UAVNET_INCOMPLETE` (with a trace still handed out) when the
/// step budget ran out before every picture was delivered.
///
/// # Safety
/// `sc` must be a valid scenario handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn uavnet_run(
    sc: *const UavnetScenario,
    out: *mut *mut UavnetTrace,
) -> UavnetStatus {
    guarded(|| {
        if sc.is_null() {
            set_error("null scenario");
            return UavnetNullArgument;
        }
        match harness::run(&(*sc).inner) {
            Ok(trace) => {
                let completed = trace.completed;
                let status = hand_out(out, UavnetTrace { inner: trace });
                if status == UavnetOk && !completed {
                    set_error("step budget exhausted before full delivery");
                    return UavnetIncomplete;
                }
                status
            }
            Err(e) => {
                set_error(e);
                UavnetPlanningFailed
            }
        }
    })
}

/// Release a trace handle. Null is ignored.
///
/// # Safety
/// `trace` must be null or a pointer obtained from `uavnet_run`, released
/// at most once.
#[no_mangle]
pub unsafe extern "C" fn uavnet_trace_free(trace: *mut UavnetTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

fn metrics_out(m: &uavnet_core::Metrics, completed: bool) -> UavnetMetrics {
    UavnetMetrics {
        mission_length: m.mission_length,
        total_staleness: m.total_staleness,
        delivered: m.delivered_count as u32,
        completed,
    }
}

/// Copy the trace's headline metrics into `out`.
///
/// # Safety
/// `trace` must be a valid trace handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn uavnet_trace_metrics(
    trace: *const UavnetTrace,
    out: *mut UavnetMetrics,
) -> UavnetStatus {
    guarded(|| {
        if trace.is_null() || out.is_null() {
            set_error("null argument");
            return UavnetNullArgument;
        }
        let t = &(*trace).inner;
        *out = metrics_out(&t.metrics, t.completed);
        UavnetOk
    })
}

fn string_out(out: *mut *mut c_char, text: String) -> UavnetStatus {
    if out.is_null() {
        set_error("null output argument");
        return UavnetNullArgument;
    }
    match CString::new(text) {
        Ok(c) => {
            unsafe { *out = c.into_raw() };
            UavnetOk
        }
        Err(e) => {
            set_error(e);
            UavnetPanic
        }
    }
}

/// Serialize the full trace as JSON; release the string with
/// `uavnet_string_free`.
///
/// # Safety
/// `trace` must be a valid trace handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn uavnet_trace_json(
    trace: *const UavnetTrace,
    out: *mut *mut c_char,
) -> UavnetStatus {
    guarded(|| {
        if trace.is_null() {
            set_error("null trace");
            return UavnetNullArgument;
        }
        let text = serde_json::to_string(&(*trace).inner).expect("trace serializes");
        string_out(out, text)
    })
}

/// Compute the optimal mission plan and serialize it as JSON; release the
/// string with `uavnet_string_free`.
///
/// # Safety
/// `sc` must be a valid scenario handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn uavnet_plan_json(
    sc: *const UavnetScenario,
    out: *mut *mut c_char,
) -> UavnetStatus {
    guarded(|| {
        if sc.is_null() {
            set_error("null scenario");
            return UavnetNullArgument;
        }
        let sc = &(*sc).inner;
        let cfg = PlannerConfig {
            seed: sc.seed,
            ..PlannerConfig::default()
        };
        match plan_mission(&sc.map, &sc.init, &sc.goal, &cfg) {
            Ok(plan) => {
                let text = serde_json::to_string(&plan).expect("plan serializes");
                string_out(out, text)
            }
            Err(e) => {
                set_error(e);
                UavnetPlanningFailed
            }
        }
    })
}

/// Run the scenario in both network-aware and network-unaware modes and
/// copy the comparison into `out`.
///
/// # Safety
/// `sc` must be a valid scenario handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn uavnet_compare(
    sc: *const UavnetScenario,
    out: *mut UavnetCompare,
) -> UavnetStatus {
    guarded(|| {
        if sc.is_null() || out.is_null() {
            set_error("null argument");
            return UavnetNullArgument;
        }
        let scenario = &(*sc).inner;
        match harness::compare(scenario) {
            Ok(rep) => {
                let targets = scenario.map.target_count();
                *out = UavnetCompare {
                    aware: metrics_out(&rep.aware, rep.aware.delivered_count == targets),
                    unaware: metrics_out(&rep.unaware, rep.unaware.delivered_count == targets),
                    staleness_reduction_pct: rep.staleness_reduction_pct,
                    length_reduction_pct: rep.length_reduction_pct,
                };
                UavnetOk
            }
            Err(e) => {
                set_error(e);
                UavnetPlanningFailed
            }
        }
    })
}

/// Release a string handed out by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a pointer obtained from a `*_json` call, released
/// at most once.
#[no_mangle]
pub unsafe extern "C" fn uavnet_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
