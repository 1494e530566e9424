//! End-to-end tests of the `breakseg` binary.

use std::path::Path;
use std::process::{Command, Output};

fn breakseg(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_breakseg"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).to_string()
}

#[test]
fn simulate_writes_deterministic_files() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "simulate",
        "--P",
        "7000",
        "--spacing",
        "1000",
        "--d",
        "700",
        "--seed",
        "1",
        "--out-signal",
        "sig.csv",
        "--out-truth",
        "truth.json",
    ];
    let first = breakseg(&args, dir.path());
    assert!(first.status.success(), "{first:?}");
    let sig1 = std::fs::read(dir.path().join("sig.csv")).unwrap();
    let truth1 = std::fs::read(dir.path().join("truth.json")).unwrap();
    assert!(String::from_utf8_lossy(&sig1).contains("position,value"));
    assert!(String::from_utf8_lossy(&sig1).contains("# seed=1"));
    assert!(String::from_utf8_lossy(&truth1).contains("\"P\": 7000"));

    let second = breakseg(&args, dir.path());
    assert!(second.status.success());
    assert_eq!(sig1, std::fs::read(dir.path().join("sig.csv")).unwrap());
    assert_eq!(
        truth1,
        std::fs::read(dir.path().join("truth.json")).unwrap()
    );
}

#[test]
fn simulate_rejects_zero_density() {
    let dir = tempfile::tempdir().unwrap();
    let out = breakseg(
        &[
            "simulate",
            "--P",
            "100",
            "--spacing",
            "10",
            "--d",
            "0",
            "--seed",
            "1",
            "--out-signal",
            "s.csv",
            "--out-truth",
            "t.json",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2), "{out:?}");
}

#[test]
fn exact_error_matches_reference_values() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("B.csv"), "4\n14\n").unwrap();
    std::fs::write(dir.path().join("G.csv"), "7\n").unwrap();
    let out = breakseg(
        &[
            "error",
            "exact",
            "--breaks",
            "B.csv",
            "--guesses",
            "G.csv",
            "--positions",
            "22",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{out:?}");
    assert_eq!(
        stdout(&out).trim(),
        r#"{"fp":0,"fn":1,"imprecision":0.6,"total":1.6}"#
    );

    // Empty guess file: every true break is a false negative.
    std::fs::write(dir.path().join("empty.csv"), "").unwrap();
    let out = breakseg(
        &[
            "error",
            "exact",
            "--breaks",
            "B.csv",
            "--guesses",
            "empty.csv",
            "--positions",
            "22",
        ],
        dir.path(),
    );
    let parsed: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(parsed["total"], serde_json::json!(2.0));

    // Duplicates are dropped with a warning, not an error.
    std::fs::write(dir.path().join("dup.csv"), "7\n7\n").unwrap();
    let out = breakseg(
        &[
            "error",
            "exact",
            "--breaks",
            "B.csv",
            "--guesses",
            "dup.csv",
            "--positions",
            "22",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("duplicate"));
    let parsed: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(parsed["total"], serde_json::json!(1.6));
}

#[test]
fn exact_error_reports_offending_line() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("B.csv"), "4\n").unwrap();
    std::fs::write(dir.path().join("G.csv"), "3\n99\n").unwrap();
    let out = breakseg(
        &[
            "error",
            "exact",
            "--breaks",
            "B.csv",
            "--guesses",
            "G.csv",
            "--positions",
            "22",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn annotation_error_scores_sample_table() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("A.csv"),
        "lower,upper,min_breaks,max_breaks\n5,10,0,0\n20,30,1,1\n40,70,1,\n80,100,0,0\n",
    )
    .unwrap();
    std::fs::write(dir.path().join("G.csv"), "7\n25\n50\n").unwrap();
    let out = breakseg(
        &[
            "error",
            "annotation",
            "--annotations",
            "A.csv",
            "--guesses",
            "G.csv",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{out:?}");
    assert_eq!(stdout(&out).trim(), r#"{"fp":1,"fn":0,"total":1}"#);

    let out = breakseg(
        &[
            "error",
            "annotation",
            "--annotations",
            "A.csv",
            "--guesses",
            "G.csv",
            "--zero-one",
        ],
        dir.path(),
    );
    assert_eq!(stdout(&out).trim(), r#"{"incorrect_regions":1}"#);

    // Complete sets joined with negatives score stray guesses too.
    std::fs::write(
        dir.path().join("pos.csv"),
        "lower,upper,min_breaks,max_breaks\n20,30,1,1\n",
    )
    .unwrap();
    std::fs::write(dir.path().join("G2.csv"), "25\n90\n").unwrap();
    let out = breakseg(
        &[
            "error",
            "annotation",
            "--annotations",
            "pos.csv",
            "--guesses",
            "G2.csv",
            "--with-negatives",
            "100",
        ],
        dir.path(),
    );
    let parsed: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(parsed["total"], serde_json::json!(1));
}

#[test]
fn segment_emits_models_and_flsa() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("sig.csv"),
        "position,value\n10,0\n20,0\n30,10\n40,10\n",
    )
    .unwrap();
    let out = breakseg(
        &[
            "segment", "--input", "sig.csv", "--kmax", "2", "--flsa", "1.0",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{out:?}");
    let parsed: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(parsed["models"][1]["k"], serde_json::json!(2));
    assert_eq!(parsed["models"][1]["changes"], serde_json::json!([2]));
    assert_eq!(parsed["models"][1]["sse"], serde_json::json!(0.0));
    assert_eq!(parsed["models"][0]["sigma2"], serde_json::json!(25.0));
    assert_eq!(
        parsed["flsa"]["smoothed"],
        serde_json::json!([0.5, 0.5, 9.5, 9.5])
    );
    assert_eq!(parsed["flsa"]["breaks"], serde_json::json!([25]));

    let out = breakseg(&["segment", "--input", "sig.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_writes_results_and_curves() {
    let dir = tempfile::tempdir().unwrap();
    let out = breakseg(
        &[
            "sweep",
            "--experiment",
            "composite",
            "--out",
            "results.csv",
            "--seed",
            "4",
            "--alpha-grid",
            "0.5:0.5:1",
            "--beta-grid",
            "-0.5:-0.5:1",
            "--curves-dir",
            "curves",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{out:?}");
    assert!(stdout(&out).contains("argmin: alpha=0.5 beta=-0.5"));
    let results = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert!(results.contains("alpha,beta,train_error,test_error,sd_test"));
    assert!(results.contains("# experiment=composite seed=4"));
    let curve = std::fs::read_to_string(dir.path().join("curves/curve_000.csv")).unwrap();
    assert!(curve.contains("lambda_lo,lambda_hi,k,error"));

    let bad = breakseg(
        &[
            "sweep",
            "--experiment",
            "bogus",
            "--out",
            "r.csv",
            "--seed",
            "1",
        ],
        dir.path(),
    );
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn help_lists_every_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let out = breakseg(&["--help"], dir.path());
    assert!(out.status.success());
    let text = stdout(&out);
    for name in ["simulate", "segment", "error", "sweep"] {
        assert!(text.contains(name), "help missing {name}");
    }
}
