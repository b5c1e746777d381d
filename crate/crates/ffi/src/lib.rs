//! C ABI over the penroute solver.
//!
//! Instances and solutions are opaque handles owned by the caller and
//! released with the matching `*_free`. Every fallible call returns a
//! [`PrStatus`]; on failure a message is kept per thread and can be read
//! with [`pr_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::time::Duration;

use penroute::instance::RoutingInstance;
use penroute::penalty::ConstraintSet;
use penroute::search::{solve, MoveType, SearchConfig, Solution};
use penroute::Error;

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidArgument = 4,
    TooLarge = 5,
    Io = 6,
    Panic = 7,
    Other = 8,
}

/// A parsed instance together with its constraints.
pub struct PrInstance {
    instance: RoutingInstance,
    constraints: ConstraintSet,
}

/// A solved tour.
pub struct PrSolution {
    solution: Solution,
}

/// Search settings. Zero in `time_limit_ms` or `runs` means unset; with
/// both unset a single run is made.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct PrConfig {
    pub max_candidates: u32,
    pub max_trials_factor: u32,
    pub penalty_multiplier: u64,
    pub time_limit_ms: u64,
    pub runs: u32,
    pub seed: u64,
    /// 3 for 3-opt moves only, 34 for 3-opt and 4-opt.
    pub move_type: u32,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(err: &Error) -> PrStatus {
    match err {
        Error::Syntax { .. }
        | Error::DimensionMismatch { .. }
        | Error::ZoneId(_)
        | Error::MalformedRoute { .. }
        | Error::Json(_) => PrStatus::Parse,
        Error::UnknownZone(_) | Error::MissingZone(_) | Error::InvalidInstance(_) | Error::InvalidArgument(_) => {
            PrStatus::InvalidArgument
        }
        Error::TooLarge { .. } => PrStatus::TooLarge,
        Error::Io(_) => PrStatus::Io,
        Error::NoReference(_) => PrStatus::Other,
    }
}

/// Runs `f`, mapping errors and panics to a status.
fn guard(f: impl FnOnce() -> Result<(), (PrStatus, String)>) -> PrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PrStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside penroute".into());
            PrStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (PrStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (PrStatus, String) {
    (PrStatus::NullPointer, format!("{what} is null"))
}

/// Message of the last failure on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn pr_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |m| m.as_ptr()))
}

/// Defaults matching the command-line solver.
#[no_mangle]
pub extern "C" fn pr_config_default() -> PrConfig {
    let d = SearchConfig::default();
    PrConfig {
        max_candidates: d.max_candidates as u32,
        max_trials_factor: d.max_trials_factor as u32,
        penalty_multiplier: d.penalty_multiplier,
        time_limit_ms: 0,
        runs: 0,
        seed: d.seed,
        move_type: 34,
    }
}

fn search_config(c: &PrConfig) -> Result<SearchConfig, (PrStatus, String)> {
    let move_type = match c.move_type {
        3 => MoveType::ThreeOpt,
        34 => MoveType::ThreeFourOpt,
        m => return Err((PrStatus::InvalidArgument, format!("move type {m}; expected 3 or 34"))),
    };
    Ok(SearchConfig {
        max_candidates: c.max_candidates as usize,
        max_trials_factor: c.max_trials_factor as usize,
        penalty_multiplier: c.penalty_multiplier,
        time_limit: (c.time_limit_ms > 0).then(|| Duration::from_millis(c.time_limit_ms)),
        runs: (c.runs > 0).then_some(c.runs as usize),
        seed: c.seed,
        move_type,
        ..Default::default()
    })
}

/// Parses an instance in the extended TSPLIB format.
///
/// # Safety
/// `text` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pr_instance_parse(text: *const c_char, out: *mut *mut PrInstance) -> PrStatus {
    guard(|| {
        if text.is_null() {
            return Err(null("text"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let text = unsafe { CStr::from_ptr(text) }
            .to_str()
            .map_err(|e| (PrStatus::InvalidUtf8, e.to_string()))?;
        let (instance, constraints) = penroute::tsplib::parse_instance(text).map_err(lib_err)?;
        let handle = Box::new(PrInstance { instance, constraints });
        unsafe { *out = Box::into_raw(handle) };
        Ok(())
    })
}

/// Builds an unconstrained instance from a row-major `n × n` matrix. Stop 0
/// is the depot.
///
/// # Safety
/// `weights` must point to `n * n` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pr_instance_from_matrix(n: usize, weights: *const i64, out: *mut *mut PrInstance) -> PrStatus {
    guard(|| {
        if weights.is_null() {
            return Err(null("weights"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let len = n
            .checked_mul(n)
            .ok_or((PrStatus::InvalidArgument, format!("n = {n} overflows")))?;
        let flat = unsafe { std::slice::from_raw_parts(weights, len) };
        let rows = flat.chunks(n.max(1)).map(<[i64]>::to_vec).collect();
        let instance = RoutingInstance::new("matrix", rows, vec![]).map_err(lib_err)?;
        let handle = Box::new(PrInstance {
            instance,
            constraints: ConstraintSet::default(),
        });
        unsafe { *out = Box::into_raw(handle) };
        Ok(())
    })
}

/// Number of stops, 0 for a null handle.
///
/// # Safety
/// `inst` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pr_instance_dimension(inst: *const PrInstance) -> usize {
    unsafe { inst.as_ref() }.map_or(0, |i| i.instance.n())
}

/// # Safety
/// `inst` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pr_instance_free(inst: *mut PrInstance) {
    if !inst.is_null() {
        drop(unsafe { Box::from_raw(inst) });
    }
}

/// Solves `inst`. A null `config` means [`pr_config_default`].
///
/// # Safety
/// `inst` must be a live handle, `config` null or valid, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pr_solve(inst: *const PrInstance, config: *const PrConfig, out: *mut *mut PrSolution) -> PrStatus {
    guard(|| {
        let inst = unsafe { inst.as_ref() }.ok_or_else(|| null("inst"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let c = unsafe { config.as_ref() }.copied().unwrap_or_else(|| pr_config_default());
        let cfg = search_config(&c)?;
        let solution = solve(&inst.instance, &inst.constraints, &cfg).map_err(lib_err)?;
        unsafe { *out = Box::into_raw(Box::new(PrSolution { solution })) };
        Ok(())
    })
}

/// Tour length under the original travel times.
///
/// # Safety
/// `sol` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pr_solution_length(sol: *const PrSolution) -> i64 {
    unsafe { sol.as_ref() }.map_or(0, |s| s.solution.length)
}

/// Total penalty.
///
/// # Safety
/// `sol` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pr_solution_penalty(sol: *const PrSolution) -> u64 {
    unsafe { sol.as_ref() }.map_or(0, |s| s.solution.penalty.total())
}

/// Copies up to `cap` stop indices (0-based, depot first) into `buf` and
/// returns the tour's full stop count. Pass a null `buf` to query the size.
///
/// # Safety
/// `sol` must be null or a live handle; `buf` null or valid for `cap` writes.
#[no_mangle]
pub unsafe extern "C" fn pr_solution_stops(sol: *const PrSolution, buf: *mut usize, cap: usize) -> usize {
    let Some(s) = (unsafe { sol.as_ref() }) else {
        return 0;
    };
    let stops = &s.solution.stops;
    if !buf.is_null() {
        let k = cap.min(stops.len());
        unsafe { ptr::copy_nonoverlapping(stops.as_ptr(), buf, k) };
    }
    stops.len()
}

/// # Safety
/// `sol` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pr_solution_free(sol: *mut PrSolution) {
    if !sol.is_null() {
        drop(unsafe { Box::from_raw(sol) });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_error_has_a_status() {
        assert_eq!(status_of(&Error::TooLarge { n: 20, limit: 10 }), PrStatus::TooLarge);
        assert_eq!(status_of(&Error::Syntax { line: 1, msg: "x".into() }), PrStatus::Parse);
        assert_eq!(status_of(&Error::InvalidArgument("x".into())), PrStatus::InvalidArgument);
    }

    #[test]
    fn bad_move_type_is_rejected() {
        let c = PrConfig {
            move_type: 5,
            ..pr_config_default()
        };
        assert_eq!(search_config(&c).unwrap_err().0, PrStatus::InvalidArgument);
    }

    #[test]
    fn zero_means_unset() {
        let cfg = search_config(&pr_config_default()).unwrap();
        assert_eq!(cfg.time_limit, None);
        assert_eq!(cfg.runs, None);
    }
}
