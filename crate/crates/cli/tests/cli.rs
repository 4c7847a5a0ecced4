use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn efd(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_efd"))
        .args(args)
        .current_dir(dir)
        .env_remove("EFD_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn analytics_sweep_writes_three_rows_with_exact_header() {
    let dir = TempDir::new().unwrap();
    let out = efd(
        dir.path(),
        &[
            "analytics",
            "--sweep",
            "lambda_r=0.5,1,2",
            "--output",
            "a.csv",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("a.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "lambda,range_r,p_connect,e_gap,e_vehicles,e_length,e_hops,e_cluster_delay,e_carry,segment_delay"
    );
    assert_eq!(lines.len(), 4);
    assert!(lines[2].starts_with("0.00400000000000,250.000000000,0.632120558829,"));
    assert!(dir.path().join("a.csv.meta.json").exists());
}

#[test]
fn segment_runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let args = ["segment", "--trials", "1000", "--seeds", "42"];
    for name in ["one.csv", "two.csv"] {
        let mut a = args.to_vec();
        a.extend(["--output", name]);
        assert_eq!(code(&efd(dir.path(), &a)), 0);
    }
    let one = fs::read(dir.path().join("one.csv")).unwrap();
    let two = fs::read(dir.path().join("two.csv")).unwrap();
    assert!(!one.is_empty());
    assert_eq!(one, two);
}

#[test]
fn sidecar_records_hash_and_seeds() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&efd(dir.path(), &["analytics", "--seeds", "3,4"])), 0);
    let meta: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("analytics.csv.meta.json")).unwrap())
            .unwrap();
    assert_eq!(meta["seeds"], serde_json::json!([3, 4]));
    assert_eq!(meta["config_sha256"].as_str().unwrap().len(), 64);
    assert!(meta["created_unix"].as_u64().unwrap() > 0);
    assert_eq!(meta["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn output_dir_comes_from_the_environment() {
    let dir = TempDir::new().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_efd"))
        .args(["analytics", "--format", "json"])
        .current_dir(dir.path())
        .env("EFD_OUTPUT_DIR", dir.path().join("results"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    let doc: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("results/analytics.json")).unwrap())
            .unwrap();
    assert_eq!(doc["columns"][0], "lambda");
    assert_eq!(doc["rows"].as_array().unwrap().len(), 1);
}

#[test]
fn config_file_with_flag_override() {
    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("run.cfg"),
        "# sparse road\nlambda_r = 0.5\nrange_r = 820 ft\nsweep = segment_length=1 mi..2 mi:1 mi\n",
    )
    .unwrap();
    let out = efd(
        dir.path(),
        &["analytics", "--config", "run.cfg", "--lambda-r", "2"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("analytics.csv")).unwrap();
    let rows: Vec<Vec<&str>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 2);
    let r: f64 = rows[0][1].parse().unwrap();
    let lambda: f64 = rows[0][0].parse().unwrap();
    assert!((r - 249.936).abs() < 1e-9);
    assert!((lambda * r - 2.0).abs() < 1e-9);
}

#[test]
fn config_errors_exit_2_and_name_the_culprit() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("bad.cfg"), "trials = 10\ncolour = blue\n").unwrap();
    let out = efd(dir.path(), &["segment", "--config", "bad.cfg"]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2") && err.contains("colour"), "{err}");

    let out = efd(dir.path(), &["analytics", "--range-r", "-5"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("range_r"));

    let out = efd(dir.path(), &["segment", "--trials", "lots"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("flag --trials"));
}

#[test]
fn unwritable_output_exits_3() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("file"), "").unwrap();
    let out = efd(dir.path(), &["analytics", "--output", "file/inside.csv"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn city_log_and_summary_agree() {
    let dir = TempDir::new().unwrap();
    let out = efd(
        dir.path(),
        &[
            "city",
            "--n-vehicles",
            "30",
            "--packets",
            "80",
            "--seeds",
            "1..2",
            "--set",
            "packet_log=true",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let summary = fs::read_to_string(dir.path().join("city.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 2 * 2);
    let log = fs::read_to_string(dir.path().join("city.packets.csv")).unwrap();
    assert_eq!(log.lines().count(), 1 + 4 * 80);
}

#[test]
fn validate_exit_code_matches_its_report() {
    let dir = TempDir::new().unwrap();
    let out = efd(dir.path(), &["validate", "--plan", "quick"]);
    let report = fs::read_to_string(dir.path().join("validate.csv")).unwrap();
    let failed = report
        .lines()
        .skip(1)
        .filter(|l| l.ends_with(",false"))
        .count();
    assert!(report.lines().count() > 30);
    assert_eq!(code(&out), if failed > 0 { 1 } else { 0 });
}
