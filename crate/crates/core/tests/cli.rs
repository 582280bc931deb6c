//! End-to-end tests of the command-line interface: exit codes, the
//! machine-readable error channel, and file-level agreement between the
//! synthesis oracles and the analysis pipeline.

use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orientcloud"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn CLI")
}

fn assert_ok(out: &Output, what: &str) {
    assert!(
        out.status.success(),
        "{what} failed ({:?}): {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn stderr_error_kind(out: &Output) -> String {
    let text = String::from_utf8_lossy(&out.stderr);
    let v: serde_json::Value =
        serde_json::from_str(text.trim()).unwrap_or_else(|e| panic!("stderr not JSON ({e}): {text}"));
    v["error"]["kind"].as_str().expect("kind field").to_string()
}

#[test]
fn usage_errors_exit_1_with_json_on_stderr() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(&["frobnicate"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_error_kind(&out), "usage");

    let out = cli(&["synth"], dir.path());
    assert_eq!(out.status.code(), Some(1), "synth without a mode");
    assert_eq!(stderr_error_kind(&out), "usage");

    let out = cli(&["--help"], dir.path());
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn data_errors_exit_2_with_json_on_stderr() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(&["rfe", "--dataset", "missing.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_error_kind(&out), "data");
}

#[test]
fn every_run_snapshots_its_configuration() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(
        &["--seed", "77", "--out-dir", "conv", "synth", "--conversation", "locked"],
        dir.path(),
    );
    assert_ok(&out, "synth");
    let snapshot: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("conv/config.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(snapshot["seed"], 77);
    assert!(snapshot["preprocess"]["crop_radius_mm"].is_number());
}

#[test]
fn analysis_of_true_yaws_reproduces_the_script_events_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    for script in ["locked", "engaged", "mixed"] {
        let conv = format!("conv_{script}");
        let out = cli(
            &["--seed", "5", "--out-dir", &conv, "synth", "--conversation", script],
            dir.path(),
        );
        assert_ok(&out, script);

        let an = format!("an_{script}");
        let out = cli(
            &[
                "--out-dir",
                &an,
                "analyze",
                "--yaws",
                &format!("{conv}/true_yaws.csv"),
                "--seating",
                &format!("{conv}/seating.json"),
                "--speakers",
                &format!("{conv}/speakers.csv"),
            ],
            dir.path(),
        );
        assert_ok(&out, "analyze");

        for (expected, produced) in [
            ("expected_contacts.csv", "contacts.csv"),
            ("expected_exclusions.csv", "exclusions.csv"),
        ] {
            let want = std::fs::read(dir.path().join(&conv).join(expected)).unwrap();
            let got = std::fs::read(dir.path().join(&an).join(produced)).unwrap();
            assert_eq!(
                want, got,
                "{script}: {produced} does not match the script oracle"
            );
        }
        let events: serde_json::Value = serde_json::from_str(
            &std::fs::read_to_string(dir.path().join(&an).join("events.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(events["frames_skipped"], 0);
        let roles: serde_json::Value = serde_json::from_str(
            &std::fs::read_to_string(dir.path().join(&an).join("roles.json")).unwrap(),
        )
        .unwrap();
        assert!(roles["listening"].is_object() || roles["listening"].is_null());
    }
}

#[test]
fn group_metrics_comparison_lands_in_the_analysis_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(
        &["--seed", "6", "--out-dir", "conv", "synth", "--conversation", "locked"],
        dir.path(),
    );
    assert_ok(&out, "synth");

    // Two groups built so the pooled standard deviation is exactly 2 and
    // the mean gap is 2: Cohen's d must come out 1.
    let r = 3.0f64.sqrt();
    let mut metrics = String::from("session_id,group,value\n");
    for (i, v) in [10.0 - r, 10.0 - r, 10.0 + r, 10.0 + r].iter().enumerate() {
        metrics.push_str(&format!("a{i},expert,{v}\n"));
    }
    for (i, v) in [8.0 - r, 8.0 - r, 8.0 + r, 8.0 + r].iter().enumerate() {
        metrics.push_str(&format!("b{i},novice,{v}\n"));
    }
    std::fs::write(dir.path().join("metrics.csv"), metrics).unwrap();

    let out = cli(
        &[
            "--out-dir",
            "an",
            "analyze",
            "--yaws",
            "conv/true_yaws.csv",
            "--seating",
            "conv/seating.json",
            "--metrics",
            "metrics.csv",
        ],
        dir.path(),
    );
    assert_ok(&out, "analyze with metrics");
    let cmp: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("an/group_comparison.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(cmp["group_a"], "expert");
    assert_eq!(cmp["group_b"], "novice");
    let d = cmp["comparison"]["cohens_d"].as_f64().unwrap();
    assert!((d - 1.0).abs() < 1e-9, "cohens_d = {d}");
}

#[test]
fn body_fit_tracks_a_static_subject() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("small.cfg"),
        "synth.benchmark_subjects=1\nsynth.benchmark_frames_per_subject=8\n",
    )
    .unwrap();
    let out = cli(
        &["--config", "small.cfg", "--seed", "21", "--out-dir", "bench", "synth", "--benchmark"],
        dir.path(),
    );
    assert_ok(&out, "synth benchmark");

    let out = cli(
        &[
            "--out-dir", "fb", "fit-body", "--session", "bench/B01.jsonl", "--subject", "B01",
        ],
        dir.path(),
    );
    assert_ok(&out, "fit-body");
    let csv = std::fs::read_to_string(dir.path().join("fb/body_yaws.csv")).unwrap();
    let ok_rows = csv.lines().skip(1).filter(|l| l.contains(",ok,")).count();
    assert!(ok_rows >= 6, "only {ok_rows}/8 frames fitted:\n{csv}");

    // The same command twice produces identical bytes.
    let out = cli(
        &[
            "--out-dir", "fb2", "fit-body", "--session", "bench/B01.jsonl", "--subject", "B01",
        ],
        dir.path(),
    );
    assert_ok(&out, "fit-body rerun");
    let a = std::fs::read(dir.path().join("fb/body_yaws.csv")).unwrap();
    let b = std::fs::read(dir.path().join("fb2/body_yaws.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn preprocess_reports_per_frame_status() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("small.cfg"),
        "synth.benchmark_subjects=1\nsynth.benchmark_frames_per_subject=6\n",
    )
    .unwrap();
    let out = cli(
        &["--config", "small.cfg", "--seed", "22", "--out-dir", "bench", "synth", "--benchmark"],
        dir.path(),
    );
    assert_ok(&out, "synth benchmark");
    let out = cli(
        &["--out-dir", "pp", "preprocess", "--session", "bench/B01.jsonl", "--subject", "B01"],
        dir.path(),
    );
    assert_ok(&out, "preprocess");
    let csv = std::fs::read_to_string(dir.path().join("pp/preprocess.csv")).unwrap();
    assert_eq!(csv.lines().count(), 7, "header plus one row per frame");
    assert!(csv.lines().next().unwrap().starts_with("frame,t,status,roi_points"));

    // Unknown subject is a data error.
    let out = cli(
        &["--out-dir", "pp2", "preprocess", "--session", "bench/B01.jsonl", "--subject", "zz"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_error_kind(&out), "data");
}
