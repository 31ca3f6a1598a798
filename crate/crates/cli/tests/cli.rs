use std::path::Path;
use std::process::{Command, Output};

fn pai(args: &[&str], out_dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pai"))
        .args(args)
        .env("PAI_OUTPUT_DIR", out_dir)
        .output()
        .expect("binary runs")
}

fn csv_rows(path: &Path) -> Vec<csv::StringRecord> {
    let mut reader = csv::Reader::from_path(path).unwrap();
    reader.records().map(|r| r.unwrap()).collect()
}

fn column(path: &Path, name: &str) -> Vec<String> {
    let mut reader = csv::Reader::from_path(path).unwrap();
    let idx = reader.headers().unwrap().iter().position(|h| h == name).unwrap();
    reader.records().map(|r| r.unwrap()[idx].to_string()).collect()
}

#[test]
fn account_prints_every_quantity() {
    let dir = tempfile::tempdir().unwrap();
    let out = pai(&["account", "--n", "100", "--sigma", "3", "--orders", "2,8", "--json"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(!lines.is_empty());
    let rendered = text.to_lowercase();
    for quantity in ["local", "per-index", "multi-epoch"] {
        assert!(rendered.contains(quantity), "missing {quantity}");
    }
}

#[test]
fn run_writes_csv_under_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let out = pai(
        &["run", "baseline", "--n", "64,128", "--d", "2", "--trials", "30", "-R", "3"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let path = dir.path().join("baseline.csv");
    let rows = csv_rows(&path);
    assert_eq!(rows.len(), 2);
    assert_eq!(column(&path, "n"), vec!["64", "128"]);
    assert!(column(&path, "schema_version").iter().all(|v| v == "1"));
}

#[test]
fn config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.conf");
    std::fs::write(&config, "# small run\nd = 3\ntrials = 31\noutput = custom.csv\n").unwrap();
    let out = pai(
        &["run", "per-person", "--n", "64", "--d", "9", "--trials", "30", "--config", config.to_str().unwrap()],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let path = dir.path().join("custom.csv");
    assert_eq!(column(&path, "d"), vec!["3"]);
    assert_eq!(column(&path, "trials"), vec!["31"]);
    assert!(!column(&path, "per_index")[0].is_empty());
}

#[test]
fn too_few_trials_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = pai(&["run", "baseline", "--n", "64", "--trials", "5"], dir.path());
    assert!(!out.status.success());
    assert!(!dir.path().join("baseline.csv").exists());
}

#[test]
fn verify_reports_one_line_per_check() {
    let dir = tempfile::tempdir().unwrap();
    let out = pai(&["verify", "--cases", "3", "--shift-cases", "5"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(rows.len(), 36 + 3 + 5);
    assert!(rows.iter().all(|r| r["pass"] == true));
}

#[test]
fn verify_fails_on_a_wrong_constant() {
    let dir = tempfile::tempdir().unwrap();
    let out = pai(
        &["verify", "--cases", "3", "--shift-cases", "5", "--inject-wrong-constant"],
        dir.path(),
    );
    assert!(!out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l.contains("\"pass\":false")));
}
