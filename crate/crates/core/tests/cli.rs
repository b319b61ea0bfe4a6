use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use gkdv::artifacts::{read_field, read_timeseries};
use gkdv::diagnostics::CSV_COLUMNS;

fn gkdv(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_gkdv"));
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("spawn gkdv")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn data_rows(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split_whitespace().map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn zero_run_writes_artifacts_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("zero");
    let o = gkdv(&["run", "--preset", "zero", "--out", out.to_str().unwrap()], &[]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(!stdout(&o).contains("FAIL"));
    for f in ["config.toml", "timeseries.csv", "report.json", "final_field.csv"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let header = fs::read_to_string(out.join("timeseries.csv")).unwrap();
    assert_eq!(header.lines().next().unwrap(), CSV_COLUMNS.join(","));
    let records = read_timeseries(&out.join("timeseries.csv")).unwrap();
    assert!(records.iter().all(|r| r.mass == 0.0 && r.grad_l2 == 0.0));
    let field = read_field(&out.join("final_field.csv")).unwrap();
    assert_eq!(field.values().len(), 256);
    assert!(field.values().iter().all(|&v| v == 0.0));
}

#[test]
fn plotdata_of_zero_run_is_all_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("zero");
    assert!(gkdv(&["run", "--preset", "zero", "--out", out.to_str().unwrap()], &[])
        .status
        .success());
    let o = gkdv(&["plotdata", out.to_str().unwrap()], &[]);
    assert!(o.status.success());
    assert!(!stdout(&o).contains("truncated"));
    for name in ["right_mass.dat", "left_mass.dat", "gradient_rate.dat"] {
        let rows = data_rows(&out.join("plots").join(name));
        assert!(!rows.is_empty(), "{name}");
        assert!(rows.iter().all(|r| r[1] == 0.0), "{name}");
    }
}

#[test]
fn identical_configs_give_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = gkdv(
            &["run", "--preset", "soliton_p2", "--out", out.to_str().unwrap()],
            &[("GKDV_SOLVER__T_END", "0.5")],
        );
        assert!(o.status.success(), "{}", stdout(&o));
    }
    let csv = |d: &Path| fs::read(d.join("timeseries.csv")).unwrap();
    assert_eq!(csv(&a), csv(&b));
    assert_eq!(
        fs::read(a.join("final_field.csv")).unwrap(),
        fs::read(b.join("final_field.csv")).unwrap()
    );
}

#[test]
fn config_file_and_env_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    fs::write(&cfg, gkdv::config::preset_text("zero").unwrap()).unwrap();
    let out = dir.path().join("run");
    let o = gkdv(
        &["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()],
        &[("GKDV_SOLVER__T_END", "0.3")],
    );
    assert!(o.status.success(), "{}", stdout(&o));
    let echoed = fs::read_to_string(out.join("config.toml")).unwrap();
    assert!(echoed.contains("t_end = 0.3"), "{echoed}");
}

#[test]
fn configuration_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = gkdv(&["run", "--preset", "no_such_preset"], &[]);
    assert_eq!(o.status.code(), Some(2));
    let o = gkdv(&["run", "--preset", "zero"], &[("GKDV_MODEL__P", "1")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("model.p"));
    let o = gkdv(&["plotdata", dir.path().join("missing").to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(2));
    let o = gkdv(&["run"], &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_reports_per_property() {
    let dir = tempfile::tempdir().unwrap();
    let o = gkdv(
        &["verify", "--suite", "grid", "--out", dir.path().to_str().unwrap()],
        &[],
    );
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).lines().all(|l| l.starts_with("PASS grid.")));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("verify.json")).unwrap()).unwrap();
    assert!(json.as_array().unwrap().len() >= 5);
    let o = gkdv(&["verify", "--suite", "nonsense"], &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn amplitude_sweep_lists_blowup_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let o = gkdv(
        &[
            "sweep",
            "--preset",
            "sweep_amplitude_p6",
            "--out",
            out.to_str().unwrap(),
            "--jobs",
            "3",
        ],
        &[],
    );
    assert!(o.status.success(), "{}", stdout(&o));
    for i in 0..3 {
        assert!(out.join(format!("run_{i:03}")).join("timeseries.csv").is_file());
    }
    let mut table = csv::Reader::from_path(out.join("sweep.csv")).unwrap();
    let headers = table.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let rows: Vec<csv::StringRecord> = table.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 3);
    let blowup: Vec<&str> = rows.iter().map(|r| &r[col("blowup")]).collect();
    assert_eq!(blowup, ["false", "false", "true"]);
    assert!(rows[2][col("blowup_verdicts")].contains("gradient_growth=pass"));

    // the blown-up run is partial: plot files carry the truncation marker
    let o = gkdv(&["plotdata", out.join("run_002").to_str().unwrap()], &[]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("truncated"));
    let text = fs::read_to_string(out.join("run_002/plots/gradient_rate.dat")).unwrap();
    assert!(text.lines().nth(1).unwrap().starts_with("# truncated:"));
    let rows = data_rows(&out.join("run_002/plots/gradient_rate.dat"));
    assert!(rows.iter().all(|r| r[2].is_finite() && r[2] > 0.0));
}

#[test]
fn plotdata_without_report_is_marked_truncated() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("zero");
    assert!(gkdv(&["run", "--preset", "zero", "--out", out.to_str().unwrap()], &[])
        .status
        .success());
    fs::remove_file(out.join("report.json")).unwrap();
    let data = gkdv::commands::command_plotdata(&out, None).unwrap();
    assert!(data.truncated.is_some());
    assert_eq!(data.files.len(), 4);
}

#[test]
fn presets_are_listed() {
    let o = gkdv(&["presets"], &[]);
    let names = stdout(&o);
    for p in gkdv::config::preset_names() {
        assert!(names.lines().any(|l| l == p));
    }
}
