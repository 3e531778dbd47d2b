use std::path::Path;
use std::process::{Command, Output};

fn ris(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ris"))
        .args(args)
        .current_dir(dir)
        .env_remove("RIS_CONFIG")
        .output()
        .expect("spawn ris")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn simulate_zero_emits_full_grid() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("zero.json"), format!("{:?}", vec![0.0; 25])).unwrap();
    let out = ris(dir.path(), &["simulate", "--config", "default", "--w", "zero.json"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "angle_deg,power_db");
    assert_eq!(lines.len(), 82);
    assert!(lines[1].starts_with("-60,"));
    assert!(lines[81].starts_with("60,"));
    assert!(lines[41].starts_with("0,"));
}

#[test]
fn gen_dataset_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.bin", "b.bin"] {
        let out = ris(dir.path(), &["gen-dataset", "--count", "10", "--seed", "7", "--out", name, "--quiet"]);
        assert!(out.status.success(), "{}", stderr(&out));
        assert!(out.stderr.is_empty());
    }
    let a = std::fs::read(dir.path().join("a.bin")).unwrap();
    let b = std::fs::read(dir.path().join("b.bin")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn usage_errors_exit_two_with_one_line() {
    let dir = tempfile::tempdir().unwrap();
    for args in [&["frobnicate"][..], &["simulate", "--bogus"], &["optimize", "--out", "w.json"]] {
        let out = ris(dir.path(), args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        let err = stderr(&out);
        assert_eq!(err.lines().count(), 1, "{err}");
        assert!(err.starts_with("error kind=usage msg=\""));
    }
}

#[test]
fn runtime_errors_exit_one_with_kind() {
    let dir = tempfile::tempdir().unwrap();
    let out = ris(dir.path(), &["simulate", "--w", "missing.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("error kind=io msg="));

    std::fs::write(
        dir.path().join("hot.json"),
        r#"{"amplitudes": [20, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0]}"#,
    )
    .unwrap();
    let out = ris(dir.path(), &["simulate", "--w", "hot.json"]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error kind=rejected_configuration"), "{err}");

    std::fs::write(dir.path().join("bad.toml"), "[sa]\nnope = 1\n").unwrap();
    let out = ris(dir.path(), &["simulate", "--config", "bad.toml", "--w", "hot.json"]);
    assert!(stderr(&out).starts_with("error kind=format"), "{}", stderr(&out));
}

#[test]
fn config_file_and_environment() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.toml"),
        "[physics.channel.grid]\nmin_deg = -30.0\nmax_deg = 30.0\ncount = 21\n",
    )
    .unwrap();
    std::fs::write(dir.path().join("zero.json"), "[0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0]").unwrap();
    let out = ris(dir.path(), &["simulate", "--config", "run.toml", "--w", "zero.json"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 22);

    let out = Command::new(env!("CARGO_BIN_EXE_ris"))
        .args(["simulate", "--w", "zero.json"])
        .current_dir(dir.path())
        .env("RIS_CONFIG", "run.toml")
        .output()
        .unwrap();
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 22);
}

#[test]
fn optimize_eval_and_table_reuse() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(ris(d, &["gen-dataset", "--count", "30", "--seed", "2", "--out", "ds.bin", "--quiet"]).status.success());
    let args = [
        "optimize",
        "--backend",
        "sim",
        "--dataset",
        "ds.bin",
        "--beams",
        "-20,50",
        "--nulls",
        "10",
        "--seed",
        "1",
        "--table",
        "t.txt",
        "--out",
        "w.json",
        "--max-iter",
        "250",
        "--json-log",
    ];
    let out = ris(d, &args);
    assert!(out.status.success(), "{}", stderr(&out));
    let events: Vec<serde_json::Value> = stderr(&out).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let adaptive = events.iter().find(|e| e["event"] == "adaptive").unwrap();
    assert_eq!(adaptive["path"], "cold");
    assert_eq!(adaptive["inserted"], 3);
    let table = std::fs::read_to_string(d.join("t.txt")).unwrap();
    assert_eq!(table.lines().count(), 4);

    let out = ris(d, &args);
    let events: Vec<serde_json::Value> = stderr(&out).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let adaptive = events.iter().find(|e| e["event"] == "adaptive").unwrap();
    assert_eq!(adaptive["path"], "cachehit");
    assert_eq!(adaptive["sa_runs"], 0);

    let w: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("w.json")).unwrap()).unwrap();
    assert_eq!(w["amplitudes"].as_array().unwrap().len(), 25);
    assert_eq!(w["beams"], serde_json::json!([-20.0, 50.0]));

    let out = ris(d, &["eval", "--weights", "w.json", "--csv", "p.csv", "--svg", "p.svg"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = std::fs::read_to_string(d.join("p.csv")).unwrap();
    assert_eq!(csv.lines().count(), 82);
    assert!(!csv.contains(';'));
    let svg = std::fs::read_to_string(d.join("p.svg")).unwrap();
    assert_eq!(svg.matches(r#"class="beam""#).count(), 2);
    assert_eq!(svg.matches(r#"class="null""#).count(), 1);
}

#[test]
fn help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = ris(dir.path(), &["--help"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for cmd in ["gen-dataset", "train", "ga-search", "optimize", "eval", "simulate"] {
        assert!(text.contains(cmd), "{cmd}");
    }
}
