use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nonharmonic_cli::config::RunConfig;
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nonharmonic"))
}

fn repo_config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().unwrap()
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("run.toml");
    fs::write(&p, body).unwrap();
    p
}

fn payload(out: &Path, task: &str) -> Value {
    serde_json::from_slice(&fs::read(out.join(task).join("payload.json")).unwrap()).unwrap()
}

#[test]
fn fast_tasks_succeed_on_defaults() {
    let dir = tempfile::tempdir().unwrap();
    for task in ["system", "transform", "weights", "symbol", "apply", "adjoint"] {
        let o = run(&[task, "--plots", "off"], dir.path());
        assert_eq!(o.status.code(), Some(0), "{task}: {}", String::from_utf8_lossy(&o.stderr));
        let summary: Value = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(summary["verdict"], "pass");
        assert_eq!(payload(dir.path(), task)["verdict"], "pass");
    }
}

#[test]
fn invalid_rho_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "version = 1\n[symbol]\nrho = 0.0\n");
    let o = bin().args(["symbol", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["status"], "config_error");
    assert_eq!(err["errors"][0]["path"], "symbol.rho");
    assert!(!dir.path().join("out").exists(), "no artifacts on config errors");
}

#[test]
fn every_validation_error_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "version = 1\n[model]\nh = -1.0\nJ = 0\n[symbol]\npad = 99\n");
    let o = bin().args(["system", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    let paths: Vec<&str> = err["errors"].as_array().unwrap().iter().map(|e| e["path"].as_str().unwrap()).collect();
    for p in ["model.h", "model.J", "symbol.pad"] {
        assert!(paths.contains(&p), "{p} missing from {paths:?}");
    }
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "version = 1\n[model]\nhh = 2.0\n");
    let o = bin().args(["system", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("hh"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(bin().arg("nonsense").output().unwrap().status.code(), Some(2));
    assert_eq!(bin().args(["system", "--format", "xml"]).output().unwrap().status.code(), Some(2));
    assert_eq!(bin().args(["system", "--plots", "maybe"]).output().unwrap().status.code(), Some(2));
}

#[test]
fn non_elliptic_parametrix_is_a_verdict_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "version = 1\n[symbol.family]\nkind = \"separable\"\nm = 1.0\ng = { constant = 0.0, cos = [], sin = [1.0] }\n",
    );
    let o = bin().args(["parametrix", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    let p = payload(dir.path(), "parametrix");
    assert_eq!(p["verdict"], "fail");
    assert!(p["error"].as_str().unwrap().contains("elliptic"));
}

#[test]
fn index_symbol_is_reported_outside_its_claimed_class() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["symbol", "--config"])
        .arg(repo_config("index_symbol.toml"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let m = &payload(dir.path(), "symbol")["result"]["membership"];
    assert_eq!(m["m"], false);
    assert_eq!(m["s"], false);
}

#[test]
fn compact_requires_nonpositive_order() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["compact", "--plots", "off"], dir.path()).status.code(), Some(1));
    let o = bin()
        .args(["compact", "--config"])
        .arg(repo_config("compact_half.toml"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn payload_embeds_the_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["system", "--seed", "99", "--plots", "off"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let p = payload(dir.path(), "system");
    let cfg: RunConfig = serde_json::from_value(p["config"].clone()).unwrap();
    assert_eq!(cfg.seed, 99);
    let mut expected = RunConfig {
        seed: 99,
        ..RunConfig::default()
    };
    expected.output_dir = dir.path().to_path_buf();
    assert_eq!(cfg, expected);
    assert!(cfg.validate().is_ok());
    // the payload carries no timings; the report does
    assert!(p.get("timings").is_none());
    let report: Value = serde_json::from_slice(&fs::read(dir.path().join("system/report.json")).unwrap()).unwrap();
    assert!(report["timings"].is_array());
}

#[test]
fn repo_configs_validate() {
    for name in ["default.toml", "index_symbol.toml", "compact_half.toml"] {
        RunConfig::load(&repo_config(name)).unwrap_or_else(|e| panic!("{name}: {e:?}"));
    }
    assert_eq!(RunConfig::load(&repo_config("default.toml")).unwrap(), RunConfig::default());
}

#[test]
fn csv_summary_lists_checks() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["system", "--format", "csv", "--plots", "off"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let mut r = csv::Reader::from_reader(o.stdout.as_slice());
    assert_eq!(r.headers().unwrap(), vec!["check", "pass", "detail"]);
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|row| &row[1] == "true"));
}

#[test]
fn plots_follow_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    run(&["weights", "--plots", "off"], dir.path());
    assert!(!dir.path().join("weights/weight.svg").exists());
    assert!(dir.path().join("weights/weight.csv").exists());
    run(&["weights"], dir.path());
    assert!(dir.path().join("weights/weight.svg").exists());
}

#[test]
fn svg_is_drawn_from_the_csv() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["weights"], dir.path()).status.code(), Some(0));
    let mut r = csv::Reader::from_path(dir.path().join("weights/weight.csv")).unwrap();
    let rows: Vec<(f64, f64)> = r
        .records()
        .map(|rec| {
            let rec = rec.unwrap();
            (rec[0].parse().unwrap(), rec[1].parse().unwrap())
        })
        .collect();
    let svg = fs::read_to_string(dir.path().join("weights/weight.svg")).unwrap();
    let data_path = svg
        .lines()
        .rfind(|l| l.starts_with("<path d=\"M") && l.contains(" L"))
        .unwrap();
    assert_eq!(data_path.matches(['M', 'L']).count(), rows.len());
    let (lo, hi) = rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| (a.min(r.0), b.max(r.0)));
    assert!(svg.contains(&format!(">{lo:.2}<")) && svg.contains(&format!(">{hi:.2}<")));
    let ymax = rows.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    assert!(svg.contains(&format!(">{ymax:.2}<")));
}

#[test]
fn relative_out_is_taken_from_the_working_directory() {
    let dir = tempfile::tempdir().unwrap();
    let conf_dir = dir.path().join("conf");
    fs::create_dir(&conf_dir).unwrap();
    let cfg = write_config(&conf_dir, "version = 1\noutput_dir = \"results\"\n");
    let o = bin().current_dir(dir.path()).args(["system", "--plots", "off", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(conf_dir.join("results/system/payload.json").exists());
    let o = bin()
        .current_dir(dir.path())
        .args(["system", "--plots", "off", "--out", "here", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("here/system/payload.json").exists());
}
