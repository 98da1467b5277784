use std::path::Path;
use std::process::{Command, Output};

use renormlab::cli::{RunRecord, EXIT_INVALID, EXIT_NEGATIVE, EXIT_NUMERICAL, EXIT_OK};

fn renormlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_renormlab"))
        .args(args)
        .env_remove("RENORMLAB_LOG_DIR")
        .env_remove("RENORMLAB_THREADS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn record(o: &Output) -> RunRecord {
    serde_json::from_slice(&o.stdout).expect("stdout holds one run record")
}

fn read_record(path: &Path) -> RunRecord {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn help_and_version_succeed() {
    assert_eq!(code(&renormlab(&["--help"])), EXIT_OK);
    let v = renormlab(&["--version"]);
    assert_eq!(code(&v), EXIT_OK);
    assert!(String::from_utf8_lossy(&v.stdout).contains(env!("CARGO_PKG_VERSION")));
}

#[test]
fn malformed_invocations_are_invalid_input() {
    assert_eq!(code(&renormlab(&["renorm", "--bogus"])), EXIT_INVALID);
    assert_eq!(code(&renormlab(&["renorm", "--lambda", "abc"])), EXIT_INVALID);
    let missing = renormlab(&["renorm"]);
    assert_eq!(code(&missing), EXIT_INVALID);
    assert!(!missing.stderr.is_empty());
    assert_eq!(code(&renormlab(&["cascade", "--depth", "0"])), EXIT_INVALID);
}

#[test]
fn renorm_distinguishes_renormalizable_from_not() {
    let yes = renormlab(&["renorm", "--lambda", "0.809"]);
    assert_eq!(code(&yes), EXIT_OK);
    let rec = record(&yes);
    assert_eq!(rec.exit_code, EXIT_OK);
    assert_eq!(rec.config.lambdas, vec![0.809]);
    assert_eq!(code(&renormlab(&["renorm", "--lambda", "1"])), EXIT_NEGATIVE);
}

#[test]
fn numerical_failures_have_their_own_code() {
    assert_eq!(code(&renormlab(&["spectrum", "--m", "5"])), EXIT_NUMERICAL);
}

#[test]
fn detect_reports_certified_and_rejected() {
    let ok = renormlab(&["detect", "--lambda", "0.892486417967745", "--depth", "6"]);
    assert_eq!(code(&ok), EXIT_OK);
    assert_eq!(record(&ok).summary.get("depth").copied(), Some(6.0));
    let tight = renormlab(&["detect", "--lambda", "0.892486417967745", "--depth", "6", "--ratio-bound", "1.5"]);
    assert_eq!(code(&tight), EXIT_NEGATIVE);
    assert_eq!(code(&renormlab(&["detect", "--lambda", "1"])), EXIT_NEGATIVE);
}

#[test]
fn cascade_payload_is_deterministic() {
    let a = record(&renormlab(&["cascade", "--depth", "6", "--seed", "3"]));
    let b = record(&renormlab(&["cascade", "--depth", "6", "--seed", "3"]));
    assert_eq!(a.payload, b.payload);
    assert_eq!(a.summary, b.summary);
    assert_ne!(a.payload, serde_json::Value::Null);
}

#[test]
fn out_writes_json_and_csv_side_by_side() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cascade.json");
    let o = renormlab(&["--out", out.to_str().unwrap(), "cascade", "--depth", "5"]);
    assert_eq!(code(&o), EXIT_OK);
    assert!(o.stdout.is_empty());
    let rec = read_record(&out);
    assert_eq!(rec.config.out.as_deref(), Some(out.as_path()));

    let mut rdr = csv::Reader::from_path(out.with_extension("csv")).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, ["k", "lambda_k", "delta_k", "alpha_k"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    // One row per ratio: K parameters give K - 1 rows.
    assert_eq!(rows.len(), 4);
    let lambda: f64 = rows[0][1].parse().unwrap();
    assert!(lambda > 0.0 && lambda < 1.0);

    let leftovers: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n != "cascade.json" && n != "cascade.csv")
        .collect();
    assert!(leftovers.is_empty(), "temporary files left behind: {leftovers:?}");
}

#[test]
fn config_file_is_merged_with_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"command": "renorm", "lambdas": [1.0], "depth": 2}"#).unwrap();
    assert_eq!(code(&renormlab(&["--config", cfg.to_str().unwrap()])), EXIT_NEGATIVE);
    let o = renormlab(&["--config", cfg.to_str().unwrap(), "renorm", "--lambda", "0.809"]);
    assert_eq!(code(&o), EXIT_OK);
    let rec = record(&o);
    assert_eq!(rec.config.depth, Some(2));
    assert_eq!(rec.config.lambdas, vec![0.809]);

    std::fs::write(&cfg, r#"{"command": "renorm", "lambda": [0.809]}"#).unwrap();
    assert_eq!(code(&renormlab(&["--config", cfg.to_str().unwrap()])), EXIT_INVALID);
    std::fs::write(&cfg, "{").unwrap();
    assert_eq!(code(&renormlab(&["--config", cfg.to_str().unwrap()])), EXIT_INVALID);
}

#[test]
fn log_dir_keeps_every_run() {
    let dir = tempfile::tempdir().unwrap();
    let logs = dir.path().join("runs");
    for _ in 0..3 {
        let o = renormlab(&["--log-dir", logs.to_str().unwrap(), "mcd", "--p", "2"]);
        assert_eq!(code(&o), EXIT_OK);
    }
    let entries: Vec<_> = std::fs::read_dir(&logs).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(entries.len(), 3);
    for p in entries {
        assert_eq!(read_record(&p).command.name(), "mcd");
    }
}
