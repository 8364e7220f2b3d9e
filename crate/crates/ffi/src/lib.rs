//! C ABI for the metamodel runtime.
//!
//! Every fallible function returns an [`MmStatus`]; on failure a message is
//! available from [`mm_last_error`] on the same thread. Strings returned
//! through out-parameters are owned by the caller and released with
//! [`mm_string_free`]; systems are released with [`mm_system_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use metamodel::autoprog::{self, AmpDocument, AutoprogError, Backend};
use metamodel::ca::{ca_system, parse_state, RuleNumber};
use metamodel::search::{exhaustive_rule_search, random_rule_search, SearchOptions, SearchProblem};
use metamodel::trajectory::format_line;
use metamodel::{match_score, Error, MetastableSystem};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    ParseError = 4,
    ModelError = 5,
    ToolchainError = 6,
    Panic = 7,
}

/// Opaque handle to a metastable system.
pub struct MmSystem {
    inner: MetastableSystem,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

struct Failure(MmStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::OutOfRange(_)
            | Error::BadCharacter { .. }
            | Error::EmptyInput
            | Error::TooFewEntities(_)
            | Error::NonFiniteInput(_)
            | Error::InvalidConfig(_) => MmStatus::InvalidArgument,
            _ => MmStatus::ModelError,
        };
        Failure(status, e.to_string())
    }
}

impl From<AutoprogError> for Failure {
    fn from(e: AutoprogError) -> Self {
        let status = match &e {
            AutoprogError::Parse { .. } | AutoprogError::Semantic { .. } | AutoprogError::UnsupportedKind(_) => {
                MmStatus::ParseError
            }
            AutoprogError::Model(_) => MmStatus::ModelError,
            _ if e.is_toolchain() => MmStatus::ToolchainError,
            _ => MmStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> MmStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => MmStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(&message);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            MmStatus::Panic
        }
    }
}

fn null(name: &str) -> Failure {
    Failure(MmStatus::NullPointer, format!("{name} is null"))
}

unsafe fn text<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure(MmStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

unsafe fn handle<'a>(p: *const MmSystem) -> Result<&'a MmSystem, Failure> {
    p.as_ref().ok_or_else(|| null("system"))
}

unsafe fn put<T>(out: *mut T, value: T, name: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(name));
    }
    out.write(value);
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, value: String) -> Result<(), Failure> {
    let s = CString::new(value).map_err(|_| Failure(MmStatus::ModelError, "string contains NUL".into()))?;
    put(out, s.into_raw(), "out")
}

unsafe fn put_system(out: *mut *mut MmSystem, inner: MetastableSystem) -> Result<(), Failure> {
    put(out, Box::into_raw(Box::new(MmSystem { inner })), "out")
}

fn rule(value: u32) -> Result<RuleNumber, Failure> {
    RuleNumber::try_from(i64::from(value)).map_err(Failure::from)
}

fn ring_problem(init: &str, target: &str, steps: u64) -> Result<SearchProblem, Failure> {
    Ok(SearchProblem::ring(parse_state(init)?, parse_state(target)?, steps)?)
}

/// Message of the last failed call on this thread; empty when none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Release a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn mm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Build an elementary cellular automaton on a ring from a rule number
/// (0..=255) and a `0`/`1` initial state.
///
/// # Safety
/// `init` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mm_ca_system_new(rule_number: u32, init: *const c_char, out: *mut *mut MmSystem) -> MmStatus {
    guard(|| {
        let init = parse_state(text(init, "init")?)?;
        put_system(out, ca_system(rule(rule_number)?, init)?)
    })
}

/// Build a system from an AMP document.
///
/// # Safety
/// `amp` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mm_system_from_amp(amp: *const c_char, out: *mut *mut MmSystem) -> MmStatus {
    guard(|| {
        let doc = AmpDocument::parse(text(amp, "amp")?)?;
        put_system(out, doc.to_system()?)
    })
}

/// Release a system. Null is ignored.
///
/// # Safety
/// `system` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn mm_system_free(system: *mut MmSystem) {
    if !system.is_null() {
        drop(Box::from_raw(system));
    }
}

/// Advance the system by `steps` time steps.
///
/// # Safety
/// `system` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mm_system_step(system: *mut MmSystem, steps: u64) -> MmStatus {
    guard(|| {
        let s = system.as_mut().ok_or_else(|| null("system"))?;
        for _ in 0..steps {
            s.inner.advance()?;
        }
        Ok(())
    })
}

/// Current time step.
///
/// # Safety
/// `system` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mm_system_time(system: *const MmSystem, out: *mut u64) -> MmStatus {
    guard(|| put(out, handle(system)?.inner.time(), "out"))
}

/// Number of entities.
///
/// # Safety
/// `system` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mm_system_size(system: *const MmSystem, out: *mut usize) -> MmStatus {
    guard(|| put(out, handle(system)?.inner.p(), "out"))
}

/// Current state as a trajectory line.
///
/// # Safety
/// `system` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mm_system_state(system: *const MmSystem, out: *mut *mut c_char) -> MmStatus {
    guard(|| put_string(out, format_line(handle(system)?.inner.current())))
}

/// AMP document of the system run for `steps` steps from its initial state.
///
/// # Safety
/// `system` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mm_system_emit_amp(system: *const MmSystem, steps: u64, out: *mut *mut c_char) -> MmStatus {
    guard(|| {
        let doc = autoprog::emit(&handle(system)?.inner, steps, None)?;
        put_string(out, doc.to_text())
    })
}

/// C program printing the trajectory of the system over `steps` steps.
///
/// # Safety
/// `system` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mm_system_generate_c(system: *const MmSystem, steps: u64, out: *mut *mut c_char) -> MmStatus {
    guard(|| {
        let doc = autoprog::emit(&handle(system)?.inner, steps, None)?;
        put_string(out, autoprog::generate_source(&doc, Backend::C)?.text())
    })
}

/// Fraction of positions at which two `0`/`1` states agree.
///
/// # Safety
/// `a` and `b` must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mm_match_score(a: *const c_char, b: *const c_char, out: *mut f64) -> MmStatus {
    guard(|| {
        let a = parse_state(text(a, "a")?)?;
        let b = parse_state(text(b, "b")?)?;
        put(out, match_score(&a, &b)?, "out")
    })
}

/// Seeded random rule search on a ring. `out_rule` receives the solution or
/// -1 when the budget ran out; `out_attempts` the attempts made.
///
/// # Safety
/// `init` and `target` must be NUL-terminated strings; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn mm_ca_search(
    init: *const c_char,
    target: *const c_char,
    steps: u64,
    budget: u64,
    seed: u64,
    out_rule: *mut i32,
    out_attempts: *mut u64,
) -> MmStatus {
    guard(|| {
        if out_rule.is_null() || out_attempts.is_null() {
            return Err(null("out"));
        }
        let problem = ring_problem(text(init, "init")?, text(target, "target")?, steps)?;
        let budget =
            usize::try_from(budget).map_err(|_| Failure(MmStatus::InvalidArgument, "budget too large".into()))?;
        let report = random_rule_search(&problem, &SearchOptions::new(budget, seed))?;
        put(out_rule, report.solution.map_or(-1, |r| i32::from(r.value())), "out_rule")?;
        put(out_attempts, report.attempts() as u64, "out_attempts")
    })
}

/// Every rule mapping `init` to `target` in `steps` steps, ascending.
/// `out_rules` needs room for 256 entries.
///
/// # Safety
/// `init` and `target` must be NUL-terminated strings; `out_rules` must hold
/// 256 bytes; `out_count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mm_ca_enumerate(
    init: *const c_char,
    target: *const c_char,
    steps: u64,
    out_rules: *mut u8,
    out_count: *mut usize,
) -> MmStatus {
    guard(|| {
        if out_rules.is_null() || out_count.is_null() {
            return Err(null("out"));
        }
        let problem = ring_problem(text(init, "init")?, text(target, "target")?, steps)?;
        let rules = exhaustive_rule_search(&problem)?;
        for (k, r) in rules.iter().enumerate() {
            out_rules.add(k).write(r.value());
        }
        put(out_count, rules.len(), "out_count")
    })
}
