use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn gateslab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gateslab"))
        .args(args)
        .current_dir(dir)
        .env_remove("GATESLAB_THREADS")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Value {
    let out = gateslab(dir, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    let mut lines = stdout.lines();
    let v = serde_json::from_str(lines.next().expect("one stdout line")).expect("stdout is JSON");
    assert!(lines.next().is_none(), "stdout carries exactly one record");
    v
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    gateslab(dir, args).status.code().unwrap()
}

fn manifest(dir: &Path, out: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join(format!("{out}.manifest.json"))).unwrap())
        .unwrap()
}

fn gen(dir: &Path, space: &str, count: &str, out: &str) {
    ok(
        dir,
        &[
            "gen",
            "--space",
            space,
            "--count",
            count,
            "--seed",
            "7",
            "--out",
            out,
            "--oracle-out",
            &format!("{out}.oracle"),
        ],
    );
}

#[test]
fn gen_is_reproducible() {
    let d = TempDir::new().unwrap();
    let p = d.path();
    gen(p, "oon/nb101", "2000", "a.jsonl");
    gen(p, "oon/nb101", "2000", "b.jsonl");
    let a = fs::read(p.join("a.jsonl")).unwrap();
    assert_eq!(a, fs::read(p.join("b.jsonl")).unwrap());
    assert_eq!(a.iter().filter(|&&c| c == b'\n').count(), 2000);
    let m = manifest(p, "a.jsonl");
    assert_eq!(m["command"], "gen");
    assert_eq!(m["seeds"]["seed"], 7);
    assert!(m["wall_time_s"].as_f64().unwrap() >= 0.0);
    assert_eq!(
        m["outputs"]["a.jsonl"],
        manifest(p, "b.jsonl")["outputs"]["b.jsonl"]
    );
}

#[test]
fn usage_and_config_errors_exit_2() {
    let d = TempDir::new().unwrap();
    let p = d.path();
    let out = gateslab(
        p,
        &["gen", "--space", "oon/nb101", "--count", "0", "--out", "x"],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(
        String::from_utf8_lossy(&out.stderr).contains("Usage")
            || String::from_utf8_lossy(&out.stderr).contains("--help")
    );
    assert_eq!(
        code(
            p,
            &["gen", "--space", "oon/nope", "--count", "3", "--out", "x"]
        ),
        2
    );
    assert_eq!(
        code(p, &["train", "--data", "missing.jsonl", "--out", "m"]),
        2
    );
    assert_eq!(
        code(
            p,
            &[
                "train",
                "--data",
                "missing.jsonl",
                "--encoder",
                "lstm",
                "--out",
                "m"
            ]
        ),
        2
    );
}

#[test]
fn data_errors_exit_3() {
    let d = TempDir::new().unwrap();
    let p = d.path();
    fs::write(p.join("bad.jsonl"), "{\"id\": 1}\n").unwrap();
    assert_eq!(code(p, &["train", "--data", "bad.jsonl", "--out", "m"]), 3);
}

#[test]
fn oracle_stub_ranks_perfectly() {
    let d = TempDir::new().unwrap();
    let p = d.path();
    gen(p, "ooe/nb201", "500", "d.jsonl");
    let m = ok(
        p,
        &[
            "eval",
            "--checkpoint",
            "d.jsonl.oracle",
            "--data",
            "d.jsonl",
            "--out",
            "e.json",
        ],
    );
    assert_eq!(m["tau"], 1.0);
    assert_eq!(m["n"], 500);
    let csv = fs::read_to_string(p.join("e.json.pk.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("k,precision,n_at_k"));
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn train_eval_isocheck_round_trip() {
    let d = TempDir::new().unwrap();
    let p = d.path();
    gen(p, "oon/nb101", "1000", "d.jsonl");
    let common = [
        "--desk",
        "--epochs",
        "3",
        "--batch",
        "32",
        "--train-frac",
        "0.1",
        "--frac-mode",
        "prefix",
    ];
    let mut args = vec!["train", "--data", "d.jsonl", "--out", "g.ckpt"];
    args.extend(common);
    let r = ok(p, &args);
    assert_eq!(r["epochs"], 3);
    // 90% prefix split, then 10% of the 900 training records
    let m = manifest(p, "g.ckpt");
    assert_eq!(m["config"]["train_records"], 90);
    assert_eq!(m["config"]["test_records"], 100);
    assert!(fs::read_to_string(p.join("g.ckpt.curve.csv"))
        .unwrap()
        .starts_with("epoch,train_loss,test_tau\n"));
    let e = ok(
        p,
        &[
            "eval",
            "--checkpoint",
            "g.ckpt",
            "--data",
            "d.jsonl",
            "--out",
            "e.json",
        ],
    );
    assert_eq!(e["n"], 1000);
    let iso = ok(
        p,
        &[
            "isocheck",
            "--checkpoint",
            "g.ckpt",
            "--count",
            "40",
            "--out",
            "iso.csv",
        ],
    );
    assert!(iso["total_variance"].as_f64().unwrap() <= 1e-10);
    assert!(iso["nontrivial_groups"].as_u64().unwrap() > 0);

    let mut args = vec![
        "train",
        "--data",
        "d.jsonl",
        "--encoder",
        "mlp",
        "--loss",
        "mse",
        "--out",
        "m.ckpt",
    ];
    args.extend(common);
    ok(p, &args);
    let iso = ok(
        p,
        &[
            "isocheck",
            "--checkpoint",
            "m.ckpt",
            "--count",
            "40",
            "--out",
            "iso2.csv",
        ],
    );
    assert!(iso["total_variance"].as_f64().unwrap() > 0.0);

    // checkpoint from one space, data from another
    gen(p, "ooe/nb201", "50", "o.jsonl");
    assert_eq!(
        code(
            p,
            &[
                "eval",
                "--checkpoint",
                "g.ckpt",
                "--data",
                "o.jsonl",
                "--out",
                "x.json"
            ]
        ),
        2
    );
}

#[test]
fn random_subset_differs_from_prefix() {
    let d = TempDir::new().unwrap();
    let p = d.path();
    gen(p, "oon/nb101", "400", "d.jsonl");
    let base = [
        "train",
        "--data",
        "d.jsonl",
        "--desk",
        "--epochs",
        "2",
        "--train-frac",
        "0.25",
    ];
    let mut a = base.to_vec();
    a.extend(["--frac-mode", "prefix", "--out", "a.ckpt"]);
    let mut b = base.to_vec();
    b.extend(["--frac-mode", "random", "--out", "b.ckpt"]);
    ok(p, &a);
    ok(p, &b);
    assert_eq!(manifest(p, "a.ckpt")["config"]["train_records"], 90);
    assert_eq!(manifest(p, "b.ckpt")["config"]["train_records"], 90);
    assert_ne!(
        fs::read(p.join("a.ckpt")).unwrap(),
        fs::read(p.join("b.ckpt")).unwrap()
    );
}

#[test]
fn divergence_exits_4() {
    let d = TempDir::new().unwrap();
    let p = d.path();
    gen(p, "oon/nb101", "200", "d.jsonl");
    let out = gateslab(
        p,
        &[
            "train",
            "--data",
            "d.jsonl",
            "--desk",
            "--encoder",
            "mlp",
            "--loss",
            "mse",
            "--lr",
            "1e300",
            "--epochs",
            "5",
            "--out",
            "m",
        ],
    );
    assert_eq!(
        out.status.code(),
        Some(4),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stderr).contains("epoch"));
}

#[test]
fn search_commands_and_replay() {
    let d = TempDir::new().unwrap();
    let p = d.path();
    gen(p, "oon/nb101-5k", "800", "d.jsonl");
    let pb = [
        "search",
        "--data",
        "d.jsonl",
        "--n",
        "200",
        "--k",
        "5",
        "--initial",
        "20",
        "--stages",
        "4",
        "--desk",
        "--batch",
        "8",
        "--out",
        "t.csv",
    ];
    let s = ok(p, &pb);
    assert_eq!(s["evals"], 35);
    let csv = fs::read_to_string(p.join("t.csv")).unwrap();
    assert_eq!(
        csv.lines().next(),
        Some("stage,eval_index,arch_id,true_perf,pred_score,best_so_far")
    );
    assert_eq!(csv.lines().count(), 36);

    // replaying the recorded argv reproduces every output byte for byte
    let m = manifest(p, "t.csv");
    let argv: Vec<String> = m["argv"].as_array().unwrap()[1..]
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect();
    fs::remove_file(p.join("t.csv")).unwrap();
    let argv: Vec<&str> = argv.iter().map(String::as_str).collect();
    ok(p, &argv);
    assert_eq!(manifest(p, "t.csv")["outputs"], m["outputs"]);

    let re = ok(
        p,
        &[
            "search",
            "--data",
            "d.jsonl",
            "--strategy",
            "evolution",
            "--budget",
            "60",
            "--out",
            "re.csv",
        ],
    );
    assert_eq!(re["evals"], 60);
    let rs = ok(
        p,
        &[
            "search",
            "--data",
            "d.jsonl",
            "--strategy",
            "random",
            "--budget",
            "800",
            "--stop-top",
            "5",
            "--out",
            "rs.csv",
        ],
    );
    assert_eq!(rs["evals"], rs["evals_to_target"]);
    let ea = ok(
        p,
        &[
            "search",
            "--space",
            "ooe/nb201",
            "--inner",
            "ea",
            "--n",
            "20",
            "--initial",
            "10",
            "--stages",
            "3",
            "--desk",
            "--batch",
            "8",
            "--out",
            "ea.csv",
        ],
    );
    assert_eq!(ea["evals"], 12);
    assert_eq!(
        code(
            p,
            &[
                "search",
                "--space",
                "ooe/nb201",
                "--stop-top",
                "5",
                "--out",
                "x.csv"
            ]
        ),
        2
    );
}

#[test]
fn sweep_writes_rows_and_medians() {
    let d = TempDir::new().unwrap();
    let p = d.path();
    gen(p, "oon/nb101-5k", "300", "d.jsonl");
    let s = ok(
        p,
        &[
            "sweep-r",
            "--data",
            "d.jsonl",
            "--r",
            "1,4",
            "--seeds",
            "3",
            "--initial",
            "10",
            "--stages",
            "6",
            "--desk",
            "--batch",
            "8",
            "--out",
            "s.csv",
        ],
    );
    assert!(s["median_evals"].get("1").is_some());
    let csv = fs::read_to_string(p.join("s.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 3 + 2);
}

#[test]
fn threads_flag_and_env() {
    let d = TempDir::new().unwrap();
    let p = d.path();
    gen(p, "oon/nb101", "50", "d.jsonl");
    ok(
        p,
        &[
            "--threads",
            "1",
            "eval",
            "--checkpoint",
            "d.jsonl.oracle",
            "--data",
            "d.jsonl",
            "--out",
            "e.json",
        ],
    );
    let out = Command::new(env!("CARGO_BIN_EXE_gateslab"))
        .args([
            "eval",
            "--checkpoint",
            "d.jsonl.oracle",
            "--data",
            "d.jsonl",
            "--out",
            "e.json",
        ])
        .current_dir(p)
        .env("GATESLAB_THREADS", "1")
        .output()
        .unwrap();
    assert!(out.status.success());
}
