use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use reviewlab_ffi::*;

const BINARY: &str = "
model.quality = binary
model.reward = additive
model.price = 0.5
model.feedback = sign
model.thresholds = 0.5
model.theta = normal(0, 1)
model.epsilon = normal(0, 0.5)
dynamics.eta = 0.01
dynamics.horizon = 300
experiment.seed = 9
";

fn parse(text: &str) -> (RlStatus, *mut RlConfig) {
    let text = CString::new(text).unwrap();
    let mut cfg = ptr::null_mut();
    let status = unsafe { rl_config_parse(text.as_ptr(), &mut cfg) };
    (status, cfg)
}

fn last_error() -> String {
    let p = rl_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn simulate_and_read_back() {
    let (status, cfg) = parse(BINARY);
    assert_eq!(status, RlStatus::Ok);
    assert_eq!(unsafe { rl_config_grid_len(cfg) }, 2);

    let mut trace = ptr::null_mut();
    assert_eq!(unsafe { rl_simulate(cfg, 0, &mut trace) }, RlStatus::Ok);
    let n = unsafe { rl_trace_len(trace) };
    assert_eq!(n, 300);

    let mut quality = vec![0u32; n];
    let mut post = vec![0.0f64; n];
    let mut bought = vec![0u8; n];
    let mut written = 0usize;
    unsafe {
        assert_eq!(rl_trace_quality(trace, quality.as_mut_ptr(), n, &mut written), RlStatus::Ok);
        assert_eq!(written, n);
        assert_eq!(rl_trace_post_true(trace, post.as_mut_ptr(), n, ptr::null_mut()), RlStatus::Ok);
        assert_eq!(rl_trace_purchased(trace, bought.as_mut_ptr(), n, ptr::null_mut()), RlStatus::Ok);
    }
    assert!(quality.iter().all(|&q| q < 2));
    assert!(post.iter().all(|p| (0.0..=1.0).contains(p)));
    assert!(bought.iter().all(|&b| b <= 1));

    let mut m = RlMetrics::default();
    assert_eq!(unsafe { rl_trace_metrics(trace, &mut m) }, RlStatus::Ok);
    assert!(m.loss >= 0.0 && m.n_blocks >= 1);

    let mut csv = ptr::null_mut();
    assert_eq!(unsafe { rl_trace_csv(trace, &mut csv) }, RlStatus::Ok);
    let text = unsafe { CStr::from_ptr(csv) }.to_string_lossy().into_owned();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), n + 1);

    // Same instance, same run.
    let mut again = ptr::null_mut();
    assert_eq!(unsafe { rl_simulate(cfg, 0, &mut again) }, RlStatus::Ok);
    let mut q2 = vec![0u32; n];
    unsafe { rl_trace_quality(again, q2.as_mut_ptr(), n, ptr::null_mut()) };
    assert_eq!(quality, q2);

    unsafe {
        rl_string_free(csv);
        rl_trace_free(trace);
        rl_trace_free(again);
        rl_config_free(cfg);
    }
}

#[test]
fn small_buffer_reports_required_length() {
    let (_, cfg) = parse(BINARY);
    let mut trace = ptr::null_mut();
    unsafe { rl_simulate(cfg, 1, &mut trace) };
    let mut buf = [0u32; 10];
    let mut need = 0;
    let status = unsafe { rl_trace_quality(trace, buf.as_mut_ptr(), buf.len(), &mut need) };
    assert_eq!(status, RlStatus::BufferTooSmall);
    assert_eq!(need, 300);
    unsafe {
        rl_trace_free(trace);
        rl_config_free(cfg);
    }
}

#[test]
fn validation_errors_are_named() {
    let (status, cfg) = parse(&BINARY.replace("dynamics.eta = 0.01\n", ""));
    assert_eq!(status, RlStatus::Validation);
    assert!(cfg.is_null());
    assert!(last_error().contains("dynamics.eta"));

    let (status, _) = parse(&format!("{BINARY}\nmodel.bogus = 1\n"));
    assert_eq!(status, RlStatus::Validation);
    assert!(last_error().contains("model.bogus"));
}

#[test]
fn null_arguments_are_rejected() {
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { rl_config_parse(ptr::null(), &mut cfg) }, RlStatus::NullPointer);
    let mut trace = ptr::null_mut();
    assert_eq!(unsafe { rl_simulate(ptr::null(), 0, &mut trace) }, RlStatus::NullPointer);
    assert_eq!(unsafe { rl_trace_len(ptr::null()) }, 0);
    let mut sep = RlSeparation::default();
    assert_eq!(unsafe { rl_bounds(ptr::null(), &mut sep) }, RlStatus::NullPointer);
    unsafe {
        rl_trace_free(ptr::null_mut());
        rl_config_free(ptr::null_mut());
        rl_string_free(ptr::null_mut());
    }
}

#[test]
fn bounds_match_library() {
    let (_, cfg) = parse(BINARY);
    let mut sep = RlSeparation::default();
    assert_eq!(unsafe { rl_bounds(cfg, &mut sep) }, RlStatus::Ok);
    let lib = reviewlab::harness::bounds_report(&reviewlab::harness::ExperimentConfig::parse(BINARY).unwrap()).unwrap();
    assert_eq!(sep.delta, lib.stats.delta);
    assert_eq!(sep.gamma, lib.stats.gamma);
    assert!(sep.delta > 0.0 && sep.gamma > 0.0 && sep.c > 1.0);
    unsafe { rl_config_free(cfg) };
}

#[test]
fn version_is_crate_version() {
    let v = unsafe { CStr::from_ptr(rl_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/reviewlab.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for sym in ["rl_config_parse", "rl_simulate", "rl_trace_free", "rl_last_error", "RL_STATUS_VALIDATION"] {
        assert!(text.contains(sym), "{sym} missing from header");
    }
    let Ok(out) = Command::new("cc").args(["-fsyntax-only", "-std=c99", "-Wall", "-Werror", "-x", "c"]).arg(&header).output() else {
        eprintln!("no C compiler; skipped");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
