use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
        .to_str()
        .unwrap()
        .to_string()
}

fn metaudit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_metaudit"))
        .args(args)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_tmp(dir: &Path, name: &str, body: &str) -> String {
    let p: PathBuf = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn help_and_version_succeed() {
    assert_eq!(metaudit(&["--help"]).status.code(), Some(0));
    assert_eq!(metaudit(&["--version"]).status.code(), Some(0));
    let o = metaudit(&["simulate", "--help"]);
    assert!(String::from_utf8_lossy(&o.stdout).contains("--seed"));
}

#[test]
fn usage_errors_exit_2() {
    let g = data("gori_luik_ets.csv");
    for args in [
        vec![],
        vec!["frobnicate"],
        vec!["compute"],
        vec!["compute", "-i", &g, "--cl", "1.5"],
        vec!["compute", "-i", &g, "--cl", "abc"],
        vec!["compute", "-i", &g, "--scale", "cubic"],
        vec!["volcano", "-i", &g, "--alpha", "0"],
        vec!["volcano", "-i", &g, "--m-tests", "5"],
        vec!["volcano", "-i", &g, "--window", "-1"],
        vec!["pplot", "-i", &g, "--bilinear-alpha", "2"],
        vec!["pplot", "-i", &g, "--gap-factor", "0"],
        vec!["simulate", "--n", "1"],
        vec!["simulate", "--reps", "0"],
        vec!["simulate", "--reps", "3", "--export-series"],
        vec!["compute", "-i", &g, "--scale", "log", "--null", "0"],
    ] {
        let o = metaudit(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
    let o = metaudit(&["volcano", "-i", &g, "--m-tests", "5"]);
    assert!(stderr(&o).contains("--m-tests"), "{}", stderr(&o));
}

#[test]
fn input_errors_exit_3_and_name_file_row_and_rule() {
    let dir = tempfile::tempdir().unwrap();
    let o = metaudit(&["compute", "-i", "/definitely/not/here.csv"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("/definitely/not/here.csv"));

    let bad = write_tmp(
        dir.path(),
        "bad.csv",
        "label,rr,cl_low,cl_high\nA,1.5,1.1,2.0\nB,1.2,1.4,1.1\n",
    );
    let o = metaudit(&["compute", "-i", &bad]);
    assert_eq!(o.status.code(), Some(3));
    let msg = stderr(&o);
    assert!(msg.contains("bad.csv") && msg.contains("row 2"), "{msg}");

    let dup = write_tmp(
        dir.path(),
        "dup.csv",
        "label,rr,cl_low,cl_high\nSmith,1.5,1.1,2.0\n smith ,1.2,1.0,1.4\n",
    );
    let o = metaudit(&["compute", "-i", &dup]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("duplicate label"), "{}", stderr(&o));

    let missing = write_tmp(dir.path(), "missing.csv", "label,rr,cl_low\nA,1.5,1.1\nB,1.2,1.0\n");
    let o = metaudit(&["compute", "-i", &missing]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("cl_high"));

    let text = write_tmp(
        dir.path(),
        "nan.csv",
        "label,rr,cl_low,cl_high\nA,1.5,1.1,2.0\nB,abc,1.0,1.4\n",
    );
    assert_eq!(metaudit(&["compute", "-i", &text]).status.code(), Some(3));

    let one = write_tmp(dir.path(), "one.csv", "label,rr,cl_low,cl_high\nA,1.5,1.1,2.0\n");
    assert_eq!(metaudit(&["compute", "-i", &one]).status.code(), Some(3));
}

#[test]
fn analysis_errors_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let three = write_tmp(
        dir.path(),
        "three.csv",
        "label,rr,cl_low,cl_high\nA,1.5,1.1,2.0\nB,0.8,0.6,1.1\nC,1.1,0.9,1.3\n",
    );
    let o = metaudit(&["pplot", "-i", &three]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert!(stderr(&o).contains("p-value plot"));
    // The same table is fine for commands that need fewer studies.
    assert_eq!(metaudit(&["compute", "-i", &three]).status.code(), Some(0));
    assert_eq!(metaudit(&["pool", "-i", &three]).status.code(), Some(0));
}

#[test]
fn stdout_formats() {
    let g = data("gori_luik_ets.csv");
    let table = String::from_utf8(metaudit(&["compute", "-i", &g, "--cl", "0.90"]).stdout).unwrap();
    assert!(table.lines().next().unwrap().contains("SE90"));
    assert_eq!(table.lines().count(), 12);
    let csv = String::from_utf8(metaudit(&["compute", "-i", &g, "--format", "csv"]).stdout).unwrap();
    assert!(csv.starts_with("label,year,cases,ref,rr,cl_low,cl_high,se,z,p,neg_log10_p,rank\n"));
    let rows: Value = serde_json::from_slice(&metaudit(&["compute", "-i", &g, "--format", "json"]).stdout).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 11);
    let pool: Value = serde_json::from_slice(&metaudit(&["pool", "-i", &g, "--scale", "log"]).stdout).unwrap();
    assert_eq!(pool["scale"], "log");
    assert!(pool["pooled_effect_natural"].as_f64().unwrap() > 1.0);
    let dl: Value = serde_json::from_slice(
        &metaudit(&["pool", "-i", &data("van_dalen_apathy.tsv"), "--model", "random-dl"]).stdout,
    )
    .unwrap();
    assert_eq!(dl["model"], "dersimonian_laird");
    assert!(dl["tau_squared"].as_f64().unwrap() > 0.0);
}

#[test]
fn out_dir_writes_files_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let v = data("van_dalen_apathy.tsv");
    let o = metaudit(&[
        "audit",
        "-i",
        &v,
        "--sim-reps",
        "50",
        "--seed",
        "7",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in [
        "studies.csv",
        "table.txt",
        "pplot.svg",
        "volcano.svg",
        "simulation.svg",
        "report.json",
        "manifest.json",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
    let m: Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["command"], "audit");
    assert_eq!(m["random"]["seed"], 7);
    assert_eq!(m["parameters"]["sim_reps"], 50);
    assert_eq!(m["thresholds"]["bilinear_alpha"], 0.01);
    assert_eq!(m["input"]["sha256"].as_str().unwrap().len(), 64);
    assert_eq!(m["input"]["studies"], 11);
    assert_eq!(m["outputs"].as_array().unwrap().len(), 6);
    assert!(m["command_line"].as_str().unwrap().starts_with("metaudit audit -i "));

    let report: Value = serde_json::from_slice(&fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["format"], "metaudit-report/1");
    assert_eq!(report["pvalue_plot"]["verdict"], "bilinear");
    assert!(report["simulation"]["observed_min_p_percentile"].as_f64().unwrap() < 1e-12);

    let svg = fs::read_to_string(out.join("volcano.svg")).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
    assert!(svg.contains("ref-nominal"));
}

#[test]
fn simulation_seed_changes_output() {
    let a = metaudit(&["simulate", "--reps", "20", "--seed", "1"]).stdout;
    let b = metaudit(&["simulate", "--reps", "20", "--seed", "2"]).stdout;
    let c = metaudit(&["simulate", "--reps", "20", "--seed", "1"]).stdout;
    assert_ne!(a, b);
    assert_eq!(a, c);
}

#[test]
fn exported_series_read_back() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim");
    let o = metaudit(&[
        "simulate",
        "--n",
        "8",
        "--reps",
        "5",
        "--panels",
        "3",
        "--export-series",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let series = out.join("series_0002.csv");
    assert!(series.exists() && !out.join("series_0004.csv").exists());
    let o = metaudit(&["compute", "-i", series.to_str().unwrap(), "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 8);
}
