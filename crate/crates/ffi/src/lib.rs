//! C ABI over the reviewlab simulator.
//!
//! Configurations and traces are opaque handles created and destroyed through
//! this API. Every fallible call returns an [`RlStatus`]; on failure the
//! message is available from [`rl_last_error`] on the same thread. Panics
//! never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use reviewlab::harness::{bounds_report, kernel_for, ExperimentConfig};
use reviewlab::metrics::MetricsReport;
use reviewlab::model::{Alphabet, Grid, Kernel};
use reviewlab::rng::instance_seed;
use reviewlab::sim::{simulate_run, Trace};

/// Result codes. Zero is success.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// The configuration is malformed or violates a model assumption.
    Validation = 3,
    /// The run failed for another reason (I/O, unsupported operation, ...).
    Runtime = 4,
    /// A caller-supplied buffer is too small; the required length is reported.
    BufferTooSmall = 5,
    Panic = 6,
}

/// Opaque parsed configuration.
pub struct RlConfig {
    cfg: ExperimentConfig,
    kernel: Kernel,
}

/// Opaque simulated run.
pub struct RlTrace {
    trace: Trace,
    report: MetricsReport,
    grid: Arc<Grid>,
    alphabet: Alphabet,
}

/// Separation constants of the configured quality pair.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RlSeparation {
    pub delta: f64,
    pub gamma: f64,
    pub c: f64,
}

/// Loss and regret of one run.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RlMetrics {
    pub loss: f64,
    pub regret: f64,
    pub regret_bound: f64,
    pub n_blocks: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn fail(status: RlStatus, msg: impl Into<String>) -> RlStatus {
    set_error(msg);
    status
}

fn from_error(e: reviewlab::Error) -> RlStatus {
    let status = if e.is_validation() { RlStatus::Validation } else { RlStatus::Runtime };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> RlStatus) -> RlStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| p.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "panic".into());
        fail(RlStatus::Panic, format!("internal panic: {msg}"))
    })
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn rl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a flat `key = value` configuration.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rl_config_parse(text: *const c_char, out: *mut *mut RlConfig) -> RlStatus {
    guard(|| {
        if text.is_null() || out.is_null() {
            return fail(RlStatus::NullPointer, "null argument");
        }
        *out = ptr::null_mut();
        let Ok(text) = CStr::from_ptr(text).to_str() else {
            return fail(RlStatus::InvalidUtf8, "configuration is not UTF-8");
        };
        match ExperimentConfig::parse(text) {
            Ok(cfg) => {
                let kernel = kernel_for(&cfg);
                *out = Box::into_raw(Box::new(RlConfig { cfg, kernel }));
                RlStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `cfg` must be NULL or a handle from [`rl_config_parse`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rl_config_free(cfg: *mut RlConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Number of points of the quality grid.
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rl_config_grid_len(cfg: *const RlConfig) -> usize {
    cfg.as_ref().map_or(0, |c| c.kernel.grid().len())
}

/// Separation constants of `bounds.q`/`bounds.q2` (default: the extreme grid points).
///
/// # Safety
/// `cfg` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rl_bounds(cfg: *const RlConfig, out: *mut RlSeparation) -> RlStatus {
    guard(|| {
        let (Some(cfg), false) = (cfg.as_ref(), out.is_null()) else {
            return fail(RlStatus::NullPointer, "null argument");
        };
        match bounds_report(&cfg.cfg) {
            Ok(r) => {
                *out = RlSeparation { delta: r.stats.delta, gamma: r.stats.gamma, c: r.stats.c };
                RlStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Simulates instance `index` of the configured experiment.
///
/// # Safety
/// `cfg` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rl_simulate(cfg: *const RlConfig, index: u64, out: *mut *mut RlTrace) -> RlStatus {
    guard(|| {
        let (Some(c), false) = (cfg.as_ref(), out.is_null()) else {
            return fail(RlStatus::NullPointer, "null argument");
        };
        *out = ptr::null_mut();
        let run = simulate_run(&c.kernel, &c.cfg.dynamics, &c.cfg.learners, instance_seed(c.cfg.seed, index))
            .and_then(|trace| {
                let report = MetricsReport::new(&trace, &c.cfg.model, c.kernel.grid(), c.cfg.lipschitz)?;
                Ok((trace, report))
            });
        match run {
            Ok((trace, report)) => {
                let handle = RlTrace {
                    trace,
                    report,
                    grid: Arc::clone(c.kernel.grid()),
                    alphabet: c.cfg.model.alphabet(),
                };
                *out = Box::into_raw(Box::new(handle));
                RlStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `trace` must be NULL or a handle from [`rl_simulate`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rl_trace_free(trace: *mut RlTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Number of rounds.
///
/// # Safety
/// `trace` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rl_trace_len(trace: *const RlTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.trace.len())
}

unsafe fn copy_out<T: Copy>(src: &[T], buf: *mut T, cap: usize, written: *mut usize) -> RlStatus {
    if !written.is_null() {
        *written = src.len();
    }
    if cap < src.len() {
        return fail(RlStatus::BufferTooSmall, format!("buffer holds {cap}, need {}", src.len()));
    }
    if buf.is_null() && !src.is_empty() {
        return fail(RlStatus::NullPointer, "null buffer");
    }
    if !src.is_empty() {
        ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    }
    RlStatus::Ok
}

/// Copies the grid index of the true quality per round into `buf`.
/// `written` (optional) receives the number of rounds.
///
/// # Safety
/// `trace` must be a live handle; `buf` must hold `cap` elements.
#[no_mangle]
pub unsafe extern "C" fn rl_trace_quality(trace: *const RlTrace, buf: *mut u32, cap: usize, written: *mut usize) -> RlStatus {
    guard(|| match trace.as_ref() {
        Some(t) => copy_out(&t.trace.quality, buf, cap, written),
        None => fail(RlStatus::NullPointer, "null trace"),
    })
}

/// Copies the posterior mass on the true quality, before each round's update.
///
/// # Safety
/// `trace` must be a live handle; `buf` must hold `cap` elements.
#[no_mangle]
pub unsafe extern "C" fn rl_trace_post_true(trace: *const RlTrace, buf: *mut f64, cap: usize, written: *mut usize) -> RlStatus {
    guard(|| match trace.as_ref() {
        Some(t) => copy_out(&t.trace.post_true, buf, cap, written),
        None => fail(RlStatus::NullPointer, "null trace"),
    })
}

/// Copies the purchase decisions (1 = bought).
///
/// # Safety
/// `trace` must be a live handle; `buf` must hold `cap` elements.
#[no_mangle]
pub unsafe extern "C" fn rl_trace_purchased(trace: *const RlTrace, buf: *mut u8, cap: usize, written: *mut usize) -> RlStatus {
    guard(|| match trace.as_ref() {
        Some(t) => {
            let bytes: Vec<u8> = t.trace.purchased.iter().map(|&b| u8::from(b)).collect();
            copy_out(&bytes, buf, cap, written)
        }
        None => fail(RlStatus::NullPointer, "null trace"),
    })
}

/// # Safety
/// `trace` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rl_trace_metrics(trace: *const RlTrace, out: *mut RlMetrics) -> RlStatus {
    guard(|| {
        let (Some(t), false) = (trace.as_ref(), out.is_null()) else {
            return fail(RlStatus::NullPointer, "null argument");
        };
        let r = &t.report;
        *out = RlMetrics { loss: r.loss_lt, regret: r.regret, regret_bound: r.regret_bound, n_blocks: r.blocks.len() };
        RlStatus::Ok
    })
}

/// Renders the trace as CSV. Free the string with [`rl_string_free`].
///
/// # Safety
/// `trace` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rl_trace_csv(trace: *const RlTrace, out: *mut *mut c_char) -> RlStatus {
    guard(|| {
        let (Some(t), false) = (trace.as_ref(), out.is_null()) else {
            return fail(RlStatus::NullPointer, "null argument");
        };
        *out = ptr::null_mut();
        match t.trace.to_csv(&t.grid, &t.alphabet) {
            Ok(csv) => match CString::new(csv) {
                Ok(s) => {
                    *out = s.into_raw();
                    RlStatus::Ok
                }
                Err(_) => fail(RlStatus::Runtime, "CSV contains a NUL byte"),
            },
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `s` must be NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
