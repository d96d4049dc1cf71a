//! End-to-end runs of the `aloha-deadline` binary.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_aloha-deadline");

const POINT: &str = "\
N = 2
q = 0.5
lambda = 0.5
D = 3
n = 2
c = 1
[channel]
table = explicit
table_values = 0.75, 0.375, 0.1875, 0.09375, 0.046875
";

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli-tests").join(name);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_cfg(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("run.cfg");
    std::fs::write(&path, text).unwrap();
    path
}

fn shipped(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("ALOHA_DEADLINE_JOBS").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Rows keyed by header name. Only for outputs without quoted fields.
fn records(csv: &str) -> Vec<HashMap<String, String>> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    lines
        .map(|l| header.iter().zip(l.split(',')).map(|(h, v)| (h.to_string(), v.to_string())).collect())
        .collect()
}

fn num(r: &HashMap<String, String>, key: &str) -> f64 {
    r[key].parse().unwrap()
}

#[test]
fn analyze_single_point() {
    let dir = scratch("analyze");
    let cfg = write_cfg(&dir, POINT);
    let o = run(&["analyze", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let rows = records(&stdout(&o));
    assert_eq!(rows.len(), 1);
    let r = &rows[0];
    assert_eq!(r["status"], "ok");
    assert!((num(r, "mu") - 0.1875).abs() < 1e-12);
    assert!((num(r, "throughput") + num(r, "drop_rate") - 0.5).abs() < 1e-10);
}

#[test]
fn reruns_are_byte_identical_across_job_counts() {
    let dir = scratch("determinism");
    let cfg = write_cfg(&dir, &format!("{POINT}[sweep]\nq = 0.2:0.8:0.3\n[run]\nslots = 20000\nseed = 9\n"));
    let cfg = cfg.to_str().unwrap();
    let a = run(&["simulate", "--config", cfg, "--jobs", "1"]);
    let b = run(&["simulate", "--config", cfg, "--jobs", "3"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let c = run(&["simulate", "--config", cfg, "--seed", "10"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn collision_drop_rate_sweep() {
    let dir = scratch("collision-sweep");
    let out = dir.join("sweep.csv");
    let o = run(&["sweep", "--config", shipped("collision-d3-n2-drop.cfg").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = records(&std::fs::read_to_string(&out).unwrap());
    assert_eq!(rows.len(), 27);
    for r in &rows {
        assert!(num(r, "z_throughput").abs() <= 4.0 && num(r, "z_drop").abs() <= 4.0);
    }
    for lambda in ["0.250000000000", "0.500000000000", "0.750000000000"] {
        let curve: Vec<_> = rows.iter().filter(|r| r["lambda"] == lambda).collect();
        assert_eq!(curve.len(), 9);
        let best = curve.iter().min_by(|a, b| num(a, "drop_rate").total_cmp(&num(b, "drop_rate"))).unwrap();
        assert_eq!(best["q"], "0.500000000000");
    }
}

#[test]
fn mpr_sweep_reports_invalid_points_and_keeps_going() {
    let dir = scratch("mpr-nodes");
    let out = dir.join("nodes.csv");
    let o = Command::new(BIN)
        .args(["analyze", "--config", shipped("mpr-nodes-drop.cfg").to_str().unwrap(), "--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("27 of 135"));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 136);
    let errors = text.lines().filter(|l| l.contains("error:")).count();
    assert_eq!(errors, 27);
}

#[test]
fn validation_failure_exits_two() {
    // too short to see an arrival, so the zero-variance estimate disagrees
    let dir = scratch("short");
    let cfg = write_cfg(
        &dir,
        "N = 2\nq = 0.5\nlambda = 0.001\nD = 3\nn = 2\nc = 1\n[run]\nslots = 100\nwarmup = 0\nseed = 3\n",
    );
    let o = run(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let rows = records(&stdout(&o));
    assert_eq!(rows[0]["pass"], "0");
}

#[test]
fn usage_and_config_errors_exit_one() {
    let dir = scratch("errors");
    let good = write_cfg(&dir, POINT);
    let good = good.to_str().unwrap();
    assert_eq!(run(&["analyze"]).status.code(), Some(1));
    assert_eq!(run(&["bogus", "--config", good]).status.code(), Some(1));
    assert_eq!(run(&["analyze", "--config", dir.join("missing.cfg").to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));

    let unknown = dir.join("unknown.cfg");
    std::fs::write(&unknown, format!("{POINT}[scenario]\nspeed = 3\n")).unwrap();
    let o = run(&["analyze", "--config", unknown.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line"));

    let missing = dir.join("missing-keys.cfg");
    std::fs::write(&missing, "N = 2\nq = 0.5\n").unwrap();
    let o = run(&["analyze", "--config", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr).to_string();
    for key in ["lambda", "D", "n", "c"] {
        assert!(err.contains(key), "{err}");
    }

    let bad_q = dir.join("bad-q.cfg");
    std::fs::write(&bad_q, POINT.replace("q = 0.5", "q = 1.5")).unwrap();
    assert_eq!(run(&["analyze", "--config", bad_q.to_str().unwrap()]).status.code(), Some(1));

    assert_eq!(run(&["simulate", "--config", good, "--slots", "0"]).status.code(), Some(1));
}

#[test]
fn jobs_environment_variable_is_read() {
    let dir = scratch("jobs-env");
    let cfg = write_cfg(&dir, POINT);
    let cfg = cfg.to_str().unwrap();
    let ok = Command::new(BIN).args(["analyze", "--config", cfg]).env("ALOHA_DEADLINE_JOBS", "2").output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    let bad = Command::new(BIN).args(["analyze", "--config", cfg]).env("ALOHA_DEADLINE_JOBS", "many").output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
    let flag_wins = Command::new(BIN)
        .args(["analyze", "--config", cfg, "--jobs", "1"])
        .env("ALOHA_DEADLINE_JOBS", "many")
        .output()
        .unwrap();
    assert_eq!(flag_wins.status.code(), Some(0));
}

#[test]
fn matrix_and_steady_state_exports() {
    let dir = scratch("exports");
    let cfg = write_cfg(&dir, POINT);
    let (m, p) = (dir.join("m.csv"), dir.join("pi.csv"));
    let o = run(&[
        "analyze",
        "--config",
        cfg.to_str().unwrap(),
        "--matrix-out",
        m.to_str().unwrap(),
        "--pi-out",
        p.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));

    let matrix = std::fs::read_to_string(&m).unwrap();
    let lines: Vec<&str> = matrix.lines().collect();
    assert_eq!(lines[0], "to\\from,\"0\",\"1\",\"2\",\"3\"");
    assert_eq!(lines.len(), 5);
    let cells: Vec<Vec<f64>> =
        lines[1..].iter().map(|l| l.split(',').skip(1).map(|x| x.parse().unwrap()).collect()).collect();
    for from in 0..4 {
        let sum: f64 = cells.iter().map(|row| row[from]).sum();
        assert!((sum - 1.0).abs() < 1e-10);
    }

    let pi = std::fs::read_to_string(&p).unwrap();
    assert!(pi.starts_with("state,pi,reached\n"));
    let total: f64 = pi.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-10);

    let swept = write_cfg(&dir, &format!("{POINT}[sweep]\nq = 0.2, 0.4\n"));
    let o = run(&["analyze", "--config", swept.to_str().unwrap(), "--pi-out", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn slot_trace_export() {
    let dir = scratch("trace");
    let cfg = write_cfg(&dir, &format!("{POINT}[run]\nslots = 500\nwarmup = 0\n"));
    let trace = dir.join("trace.csv");
    let o = run(&["simulate", "--config", cfg.to_str().unwrap(), "--trace", trace.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&trace).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("slot,queue_len,head_age,head_fails,event"));
    let events: Vec<&str> = lines.map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(events.len(), 500);
    let known = ["empty", "silent", "success", "fail", "retx_drop", "expired"];
    assert!(events.iter().all(|e| known.contains(e)));
    assert!(events.contains(&"success"));
}

#[test]
fn sdp_table_and_optimize_modes() {
    let dir = scratch("modes");
    let cfg = write_cfg(&dir, POINT);
    let o = run(&["sdp-table", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let rows = records(&stdout(&o));
    let hand = rows.iter().find(|r| r["D_eval"] == "2" && r["n_eval"] == "1").unwrap();
    assert!((num(hand, "p_s") - 0.33984375).abs() < 1e-12);

    let o = run(&["optimize", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let rows = records(&stdout(&o));
    assert_eq!(rows[0]["objective"], "max-throughput");
    assert!((num(&rows[0], "q_opt") - 0.5).abs() < 1e-3);
}
