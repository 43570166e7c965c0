//! End-to-end checks of the `clifer` binary: subcommands, file outputs,
//! determinism and exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn clifer(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_clifer"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

#[test]
fn synth_run_report_snapshot_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("features.csv");

    // synth: emit a small dataset.
    let out = clifer(&[
        "synth",
        "--subjects",
        "3",
        "--sequences-per-class",
        "4",
        "--frames",
        "5",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "synth failed: {out:?}");
    assert!(csv.exists());
    let header = read(&csv).lines().next().unwrap().to_string();
    assert!(header.starts_with("subject_id,sample_id,frame_index,label,f0,"));

    // run: a small grid over the CSV, saving model envelopes.
    let run_dir = dir.path().join("run");
    let out = clifer(&[
        "run",
        "--experiment",
        "exp1",
        "--variants",
        "gdm,baseline",
        "--data",
        csv.to_str().unwrap(),
        "--seeds",
        "1,2",
        "--save-models",
        "--out",
        run_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "run failed: {out:?}");
    for file in ["records.csv", "summary.json", "plot_data.csv", "run_meta.json"] {
        assert!(run_dir.join(file).exists(), "{file} missing");
    }
    let records = read(&run_dir.join("records.csv"));
    // 2 variants x 3 subjects x 2 seeds x 6 episodes + header.
    assert_eq!(records.lines().count(), 72 + 1);

    // Determinism: the same run elsewhere gives byte-identical records.
    let run_dir2 = dir.path().join("run2");
    let out = clifer(&[
        "run",
        "--experiment",
        "exp1",
        "--variants",
        "gdm,baseline",
        "--data",
        csv.to_str().unwrap(),
        "--seeds",
        "1,2",
        "--out",
        run_dir2.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert_eq!(records, read(&run_dir2.join("records.csv")));

    // report: re-aggregating the records reproduces the summary bytes.
    let rep_dir = dir.path().join("rep");
    let out = clifer(&[
        "report",
        "--records",
        run_dir.join("records.csv").to_str().unwrap(),
        "--out",
        rep_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "report failed: {out:?}");
    assert_eq!(
        read(&run_dir.join("summary.json")),
        read(&rep_dir.join("summary.json"))
    );
    assert_eq!(
        read(&run_dir.join("plot_data.csv")),
        read(&rep_dir.join("plot_data.csv"))
    );

    // snapshot: every saved model envelope validates and round-trips.
    let models: Vec<_> = std::fs::read_dir(run_dir.join("models"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    assert!(!models.is_empty(), "no model envelopes saved");
    let sample = &models[0];
    let out = clifer(&["snapshot", "check", sample.to_str().unwrap()]);
    assert!(out.status.success(), "snapshot check failed: {out:?}");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("bit-exact"), "unexpected: {stdout}");

    let copy = dir.path().join("copy.json");
    let out = clifer(&[
        "snapshot",
        "copy",
        sample.to_str().unwrap(),
        copy.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert_eq!(read(sample), read(&copy));
}

#[test]
fn orders_subcommand_reports_kruskal_wallis() {
    let dir = tempfile::tempdir().unwrap();
    let out = clifer(&[
        "run",
        "--experiment",
        "orders",
        "--variants",
        "gdm",
        "--synthetic",
        "--subjects",
        "2",
        "--sequences-per-class",
        "4",
        "--frames",
        "5",
        "--seeds",
        "1",
        "--out",
        dir.path().join("orders").to_str().unwrap(),
    ]);
    assert!(out.status.success(), "orders run failed: {out:?}");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("Kruskal-Wallis"), "missing KW line: {stdout}");
    assert!(stdout.contains("order neutral"), "missing order means: {stdout}");
}

#[test]
fn exit_codes_match_error_classes() {
    // Usage error: unknown flag.
    let out = clifer(&["run", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));

    // Usage error: missing data source.
    let out = clifer(&["run", "--experiment", "exp1", "--out", "/tmp/x"]);
    assert_eq!(out.status.code(), Some(1));

    // Usage error: unknown variant.
    let out = clifer(&[
        "run",
        "--experiment",
        "exp1",
        "--variants",
        "mlp",
        "--synthetic",
        "--out",
        "/tmp/x",
    ]);
    assert_eq!(out.status.code(), Some(1));

    // Data error: malformed CSV.
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "subject_id,sample_id,frame_index,label,f0\na,x,0,disgust,0.5\n")
        .unwrap();
    let out = clifer(&[
        "run",
        "--experiment",
        "exp1",
        "--variants",
        "gdm",
        "--data",
        bad.to_str().unwrap(),
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    // Runtime error: unreadable snapshot path.
    let out = clifer(&["snapshot", "check", "/nonexistent/snap.json"]);
    assert_eq!(out.status.code(), Some(3));

    // Success and help.
    let out = clifer(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn params_file_overrides_apply() {
    let dir = tempfile::tempdir().unwrap();
    let params = dir.path().join("params.json");
    std::fs::write(
        &params,
        r#"{ "trajectory_length": 4, "test_fraction": 0.25 }"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = clifer(&[
        "run",
        "--experiment",
        "exp1",
        "--variants",
        "gdm",
        "--synthetic",
        "--subjects",
        "2",
        "--sequences-per-class",
        "4",
        "--frames",
        "5",
        "--seeds",
        "1",
        "--params",
        params.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "run failed: {out:?}");
    let meta = read(&out_dir.join("run_meta.json"));
    let v: serde_json::Value = serde_json::from_str(&meta).unwrap();
    assert_eq!(v["config"]["trajectory_length"], 4);
    assert_eq!(v["config"]["test_fraction"], 0.25);
}
