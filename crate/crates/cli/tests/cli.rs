use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_s3w"));
    c.env_remove("S3W_SEED");
    c
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(dir: &Path, args: &[&str]) -> (i32, String) {
    let out = run(dir, args);
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn files(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (PathBuf::from(p.file_name().unwrap()), fs::read(&p).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn dist_of_a_cloud_with_itself_is_zero() {
    let t = TempDir::new().unwrap();
    ok(t.path(), &["sample", "uniform:d=2:n=300", "--file", "cloud.csv"]);
    let out = ok(t.path(), &["dist", "--method", "s3w", "--a", "cloud.csv", "--b", "cloud.csv"]);
    assert_eq!(out.trim().parse::<f64>().unwrap(), 0.0);
    let rec: serde_json::Value = serde_json::from_slice(&fs::read(t.path().join("s3w-out/dist.json")).unwrap()).unwrap();
    assert_eq!(rec["method"], "s3w");
    assert_eq!(rec["value"], 0.0);
    assert!(rec["wall_seconds"].is_null());
}

#[test]
fn file_and_generator_inputs() {
    let t = TempDir::new().unwrap();
    ok(t.path(), &["sample", "vmf:mu=0,0,1:kappa=10:n=200", "--file", "v.csv", "--seed", "4"]);
    let from_file = ok(t.path(), &["dist", "--a", "v.csv", "--b", "uniform:n=200", "--seed", "9"]);
    let again = ok(t.path(), &["dist", "--a", "v.csv", "--b", "uniform:n=200", "--seed", "9"]);
    assert_eq!(from_file, again);
    let gen = ok(t.path(), &["dist", "--a", "vmf:mu=0,0,1:kappa=10:n=200", "--b", "uniform:n=200", "--seed", "9"]);
    assert!(gen.trim().parse::<f64>().unwrap() > 0.0);
}

#[test]
fn every_command_is_byte_reproducible_single_threaded() {
    let t = TempDir::new().unwrap();
    let cmds: Vec<Vec<&str>> = vec![
        vec!["dist", "--method", "ari_s3w", "--rotations", "30", "--pool", "1000", "--a", "vmf:kappa=5:n=300", "--b", "uniform:n=300"],
        vec!["dist", "--method", "max_s3w", "--a", "vmf:kappa=5:n=100", "--b", "uniform:n=100"],
        vec!["flow", "--target", "icosa12:n=240", "--particles", "240", "--steps", "20", "--L", "50", "--loss", "ari_s3w", "--rotations", "3", "--pool", "20", "--eval-every", "5"],
        vec!["flow", "--target", "icosa12:n=240", "--particles", "240", "--steps", "10", "--L", "30", "--batch", "60", "--rot-schedule", "1:4", "--loss", "ri_s3w"],
        vec!["study", "distortion", "--pairs", "500", "--reps", "2"],
        vec!["study", "angle", "--reps", "2", "--n", "80", "--L", "20", "--grid", "0:3.14159:3"],
        vec!["study", "eps", "--reps", "2", "--n", "64", "--L", "16", "--grid", "1e-6:1e-2:log:3"],
    ];
    for (i, cmd) in cmds.iter().enumerate() {
        let mut outputs = Vec::new();
        for run_id in 0..2 {
            let out = format!("run{i}_{run_id}");
            let mut args = cmd.clone();
            args.extend(["--seed", "11", "--threads", "1", "--out", &out]);
            let stdout = ok(t.path(), &args);
            outputs.push((stdout, files(&t.path().join(&out))));
        }
        assert_eq!(outputs[0], outputs[1], "{cmd:?}");
    }
    let a = ok(t.path(), &["sample", "uniform:n=50", "--seed", "3"]);
    let b = ok(t.path(), &["sample", "uniform:n=50", "--seed", "3"]);
    assert_eq!(a, b);
}

#[test]
fn thread_count_does_not_change_results() {
    let t = TempDir::new().unwrap();
    let args = ["dist", "--method", "ri_s3w", "--a", "vmf:kappa=5:n=500", "--b", "uniform:n=500", "--seed", "2"];
    let one = ok(t.path(), &[&args[..], &["--threads", "1"]].concat());
    let four = ok(t.path(), &[&args[..], &["--threads", "4"]].concat());
    assert_eq!(one, four);
}

#[test]
fn flow_writes_its_artifacts() {
    let t = TempDir::new().unwrap();
    ok(
        t.path(),
        &["flow", "--target", "icosa12:n=120", "--particles", "120", "--steps", "25", "--L", "20", "--out", "run"],
    );
    let dir = t.path().join("run");
    let trace = fs::read_to_string(dir.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().next().unwrap(), "step,loss,cum_seconds,nll,log_w2");
    assert_eq!(trace.lines().count(), 26);
    assert_eq!(fs::read_to_string(dir.join("final_cloud.csv")).unwrap().lines().count(), 121);
    let meta: serde_json::Value = serde_json::from_slice(&fs::read(dir.join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["summary"]["steps"], 25);
    assert!(meta["summary"]["final_log_w2"].is_f64());
    assert!(meta.get("timings").is_none());
}

#[test]
fn seed_env_fallback_and_config_precedence() {
    let t = TempDir::new().unwrap();
    let args = ["dist", "--a", "vmf:kappa=5:n=100", "--b", "uniform:n=100"];
    let flag = ok(t.path(), &[&args[..], &["--seed", "21"]].concat());
    let env = bin().current_dir(t.path()).args(args).env("S3W_SEED", "21").output().unwrap();
    assert_eq!(String::from_utf8(env.stdout).unwrap(), flag);

    fs::write(t.path().join("c.json"), r#"{"seed": 21, "n_projections": 7, "method": "sw"}"#).unwrap();
    ok(t.path(), &["dist", "--config", "c.json", "--a", "uniform:n=20", "--b", "uniform:n=20", "--L", "9"]);
    let rec: serde_json::Value =
        serde_json::from_slice(&fs::read(t.path().join("s3w-out/dist.json")).unwrap()).unwrap();
    assert_eq!(rec["seed"], 21);
    assert_eq!(rec["method"], "sw");
    assert_eq!(rec["config"]["args"]["n_projections"], 9);
}

#[test]
fn usage_errors_exit_2() {
    let t = TempDir::new().unwrap();
    fs::write(t.path().join("bad.csv"), "x0,x1,x2\n0,0,1\n1,nope,0\n").unwrap();
    fs::write(t.path().join("good.csv"), "0,0,1\n1,0,0\n").unwrap();
    fs::write(t.path().join("s3.csv"), "0,0,0,1\n").unwrap();
    fs::write(t.path().join("unknown.json"), r#"{"stepz": 3}"#).unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["dist", "--bogus"],
        vec!["dist", "--a", "good.csv"],
        vec!["study", "warp"],
        vec!["flow", "--lr", "-1", "--steps", "1"],
        vec!["flow", "--config", "unknown.json"],
        vec!["bench", "--N", "10:20:2", "--L", "5:10:2"],
        vec!["sample", "blob:n=3"],
        vec!["dist", "--a", "s3.csv", "--b", "good.csv"],
    ];
    for c in cases {
        assert_eq!(code(t.path(), &c).0, 2, "{c:?}");
    }
    let (c, msg) = code(t.path(), &["dist", "--a", "bad.csv", "--b", "good.csv"]);
    assert_eq!(c, 2);
    assert!(msg.contains("line 3"), "{msg}");
    let (c, msg) = code(t.path(), &["dist", "--a", "s3.csv", "--b", "good.csv"]);
    assert_eq!(c, 2);
    assert!(msg.contains("dimension"), "{msg}");
}

#[test]
fn capacity_errors_exit_3() {
    let t = TempDir::new().unwrap();
    let (c, msg) = code(
        t.path(),
        &["flow", "--target", "uniform:n=5000", "--particles", "5000", "--steps", "1", "--eval-subsample", "0"],
    );
    assert_eq!(c, 3, "{msg}");
}

#[test]
fn help_lists_flags_with_defaults() {
    let t = TempDir::new().unwrap();
    for (sub, flags) in [
        ("dist", &["--method", "--L", "--eps", "--rotations", "--pool", "[default: 100]"][..]),
        ("flow", &["--target", "--loss", "--steps", "--lr", "--batch", "--rot-schedule", "[default: 500]"][..]),
        ("study", &["--grid", "--reps", "--pairs", "[default: 1000]"][..]),
        ("bench", &["--methods", "--N", "--L", "--reps", "[default: 5]"][..]),
        ("sample", &["--file"][..]),
    ] {
        let help = ok(t.path(), &[sub, "--help"]);
        for f in flags {
            assert!(help.contains(f), "{sub} help lacks {f}");
        }
        assert!(help.contains("--seed") && help.contains("--threads") && help.contains("--out"));
    }
}

#[test]
fn study_and_bench_write_reports() {
    let t = TempDir::new().unwrap();
    let out = ok(t.path(), &["study", "distortion", "--pairs", "1000", "--out", "s"]);
    assert!(out.contains("folded"));
    let csv = fs::read_to_string(t.path().join("s/study_distortion.csv")).unwrap();
    assert!(csv.starts_with("study,variant,rep,value\n"));
    ok(t.path(), &["study", "eps", "--grid", "1e-6:1e-1:log:6", "--reps", "2", "--n", "64", "--L", "8", "--methods", "s3w", "--out", "s"]);
    let side: serde_json::Value =
        serde_json::from_slice(&fs::read(t.path().join("s/study_eps.json")).unwrap()).unwrap();
    assert_eq!(side["cells"].as_array().unwrap().len(), 6);
    ok(t.path(), &["bench", "--methods", "s3w,ri_s3w", "--N", "50:200:3", "--L", "10", "--reps", "3", "--out", "b"]);
    let bench = fs::read_to_string(t.path().join("b/bench.csv")).unwrap();
    assert_eq!(bench.lines().count(), 1 + 2 * 3 * 3);
}
