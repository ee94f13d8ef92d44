use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BINARY: &str = "
model.quality = binary
model.reward = additive
model.price = 0.5
model.feedback = sign
model.thresholds = 0.5
model.theta = normal(0, 1)
model.epsilon = normal(0, 0.5)
dynamics.eta = 0.02
dynamics.horizon = 300
learners.estimator = true
experiment.instances = 3
experiment.write_traces = true
experiment.eta_list = 0.05, 0.02
experiment.horizon_factor = 20
";

const SUBCOMMANDS: &[&str] = &["simulate", "bounds", "sweep-eta", "reproduce-eta1", "blocks"];

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_reviewlab"))
        .args(args)
        .env_remove("REVIEWLAB_WORKERS")
        .output()
        .unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("c.conf");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = walk(dir).into_iter().map(|p| (p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap())).collect();
    files.sort();
    files
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p);
        }
    }
    out
}

#[test]
fn simulate_twice_gives_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), BINARY);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = run(&["simulate", "--config", &cfg, "--seed", "42", "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (fa, fb) = (read_dir_sorted(&a), read_dir_sorted(&b));
    assert!(fa.iter().any(|(n, _)| n == "results.csv"));
    assert!(fa.iter().any(|(n, _)| n == "trace_0.csv"));
    assert_eq!(fa, fb);
}

#[test]
fn overrides_beat_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), BINARY);
    let out = dir.path().join("o");
    let o = run(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap(), "--horizon", "50", "--instances", "2", "--eta", "0.1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let metrics = fs::read_to_string(out.join("metrics.csv")).unwrap();
    let rows: Vec<&str> = metrics.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.split(',').nth(1) == Some("0.1") && r.split(',').nth(3) == Some("50")), "{metrics}");
}

#[test]
fn bounds_prints_constants_and_writes_curve() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), BINARY);
    let out = dir.path().join("b");
    let o = run(&["bounds", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let stdout = String::from_utf8_lossy(&o.stdout);
    for key in ["delta = ", "gamma = ", "c = "] {
        assert!(stdout.contains(key), "{stdout}");
    }
    let curve = fs::read_to_string(out.join("bound_curve.csv")).unwrap();
    assert_eq!(curve.lines().next(), Some("t,bound,vacuous"));
    assert_eq!(curve.lines().nth(1), Some("0,2,true"));
    assert_eq!(curve.lines().count(), 302);
}

#[test]
fn other_subcommands_write_their_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), BINARY);
    let cases = [
        ("sweep-eta", vec!["results.csv", "metrics.csv"]),
        ("reproduce-eta1", vec!["results.csv"]),
        ("blocks", vec!["blocks.csv"]),
    ];
    for (cmd, files) in cases {
        let out = dir.path().join(cmd);
        let o = run(&[cmd, "--config", &cfg, "--out", out.to_str().unwrap(), "--workers", "2"]);
        assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        for f in files {
            assert!(out.join(f).exists(), "{cmd} did not write {f}");
        }
    }
    let eta1 = fs::read_to_string(dir.path().join("reproduce-eta1/results.csv")).unwrap();
    assert_eq!(eta1.lines().next(), Some("eta,eta1,learner,metric,mean,se,n"));
    assert_eq!(eta1.lines().filter(|l| l.contains("tracking_error")).count(), 4);
}

#[test]
fn missing_key_exits_2_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &BINARY.replace("dynamics.eta = 0.02\n", ""));
    let o = run(&["simulate", "--config", &cfg, "--out", dir.path().join("x").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("dynamics.eta"));
}

#[test]
fn assumption_violations_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &BINARY.replace("model.price = 0.5", "model.price = 50"));
    let o = run(&["simulate", "--config", &cfg, "--out", dir.path().join("x").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("purchase guarantee"));
}

#[test]
fn missing_config_prints_usage() {
    for cmd in SUBCOMMANDS {
        let o = run(&[cmd]);
        assert_eq!(o.status.code(), Some(2), "{cmd}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("Usage:"), "{cmd}");
    }
}

#[test]
fn runtime_errors_exit_1() {
    let o = run(&["simulate", "--config", "/nonexistent/c.conf"]);
    assert_eq!(o.status.code(), Some(1));
    // Stable across runs.
    assert_eq!(run(&["simulate", "--config", "/nonexistent/c.conf"]).status.code(), Some(1));
}

#[test]
fn help_documents_every_flag() {
    for cmd in SUBCOMMANDS {
        let o = run(&[cmd, "--help"]);
        assert!(o.status.success());
        let help = String::from_utf8_lossy(&o.stdout);
        for flag in ["--config", "--seed", "--out", "--workers", "--eta ", "--eta1", "--horizon", "--instances", "REVIEWLAB_WORKERS"] {
            assert!(help.contains(flag), "{cmd} --help lacks {flag}");
        }
    }
}
