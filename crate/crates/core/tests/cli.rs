use std::path::Path;
use std::process::{Command, Output};

fn crime_lab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crime-lab"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "status {:?}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn full_workflow() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&crime_lab(
        d,
        &[
            "synth", "--counts", "60,30,15", "--noise", "--seed", "4", "--out", "raw.csv",
        ],
    ));

    let summary = ok(&crime_lab(d, &["ingest", "raw.csv", "--out", "t.cltable"]));
    let summary: serde_json::Value = serde_json::from_str(&summary).unwrap();
    assert_eq!(summary["emitted_rows"], 105);

    let files = ok(&crime_lab(d, &["stats", "raw.csv", "--out", "stats"]));
    assert!(files.contains("fig7_daily_average.csv"));
    assert!(d.join("stats/fig2_all_incidents.geojson").exists());

    std::fs::write(
        d.join("a.json"),
        r#"{"dataset":"t.cltable","model":{"kind":"knn"},"folds":3,"protocol":"both"}"#,
    )
    .unwrap();
    std::fs::write(
        d.join("b.json"),
        r#"{"dataset":"t.cltable","model":{"kind":"lda"},"folds":3,"sampler":{"kind":"random_over"}}"#,
    )
    .unwrap();
    ok(&crime_lab(
        d,
        &["evaluate", "--config", "a.json", "--out", "run_a"],
    ));
    ok(&crime_lab(
        d,
        &[
            "evaluate",
            "--config",
            "b.json",
            "--out",
            "run_b",
            "--threads",
            "2",
        ],
    ));
    for f in [
        "report.json",
        "timings.json",
        "cv_folds.csv",
        "confusion_cv.csv",
        "prf_holdout.csv",
        "roc_cv.csv",
    ] {
        assert!(d.join("run_a").join(f).exists(), "{f}");
    }
    let printed = ok(&crime_lab(d, &["evaluate", "--config", "a.json"]));
    let on_disk = std::fs::read_to_string(d.join("run_a/report.json")).unwrap();
    assert_eq!(printed.trim_end(), on_disk.trim_end());

    let cmp = ok(&crime_lab(
        d,
        &["compare", "run_a/report.json", "run_b/report.json"],
    ));
    let mut lines = cmp.lines();
    assert!(lines.next().unwrap().starts_with("model_a,model_b"));
    assert!(lines.next().unwrap().starts_with("knn,lda"));

    ok(&crime_lab(
        d,
        &["train", "--config", "a.json", "--out", "knn.clpipe"],
    ));
    let eval = ok(&crime_lab(
        d,
        &["evaluate", "--model", "knn.clpipe", "--input", "raw.csv"],
    ));
    let eval: serde_json::Value = serde_json::from_str(&eval).unwrap();
    assert_eq!(eval["rows"], 105);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    // usage error
    assert_eq!(crime_lab(d, &["frobnicate"]).status.code(), Some(2));
    // missing config
    assert_eq!(crime_lab(d, &["evaluate"]).status.code(), Some(2));
    std::fs::write(
        d.join("bad.json"),
        r#"{"dataset":"x.csv","model":{"kind":"knn"},"bogus":1}"#,
    )
    .unwrap();
    assert_eq!(
        crime_lab(d, &["evaluate", "--config", "bad.json"])
            .status
            .code(),
        Some(2)
    );
    // missing input data
    std::fs::write(
        d.join("c.json"),
        r#"{"dataset":"missing.csv","model":{"kind":"knn"}}"#,
    )
    .unwrap();
    let out = crime_lab(d, &["evaluate", "--config", "c.json"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.csv"));
    // malformed header
    std::fs::write(d.join("junk.csv"), "a,b\n1,2\n").unwrap();
    assert_eq!(
        crime_lab(d, &["ingest", "junk.csv", "--out", "j.cltable"])
            .status
            .code(),
        Some(3)
    );
    // not a pipeline file
    assert_eq!(
        crime_lab(
            d,
            &["evaluate", "--model", "junk.csv", "--input", "junk.csv"]
        )
        .status
        .code(),
        Some(3)
    );
}
