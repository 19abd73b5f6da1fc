use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_freightcast"))
}

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn demo() -> PathBuf {
    root().join("config/demo.toml")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn demo_run_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = run(&["run", "--config", demo().to_str().unwrap(), "--out", out.to_str().unwrap(), "--jobs", "2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["report.json", "recovery_pace.csv", "models/intermodal.json", "scenarios/intermodal_trend_projection.csv"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("intermodal"));
}

#[test]
fn each_stage_subcommand_runs() {
    let dir = tempfile::tempdir().unwrap();
    for (stage, expect) in [
        ("fit", "models/coal.json"),
        ("select", "selection/intermodal.csv"),
        ("scenario", "scenarios/intermodal_pce_actual_covariate_overlay.csv"),
        ("recovery-pace", "recovery_pace.csv"),
        ("diagnose", "report.json"),
    ] {
        let out = dir.path().join(stage);
        let o = run(&[stage, "--config", demo().to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{stage}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(out.join(expect).is_file(), "{stage}: {expect} missing");
    }
    let report = std::fs::read_to_string(dir.path().join("diagnose/report.json")).unwrap();
    assert!(report.contains("\"diagnostics\""));
}

#[test]
fn missing_config_is_a_config_error() {
    let o = run(&["fit", "--config", "/nonexistent/freightcast.toml"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn bad_flags_are_config_errors() {
    let o = run(&["fit", "--jobs", "many"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn missing_dataset_exits_nonzero_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(demo()).unwrap().replace("name = \"pce\"", "name = \"pce_renamed\"");
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(&cfg, text.replace("../data/", &format!("{}/data/", root().display()))).unwrap();
    let out = dir.path().join("out");
    let o = run(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("pce"));
    assert!(!out.exists());
}

#[test]
fn data_errors_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("x.csv"), "date,v\n2019-01,1\n2019-02,2\n2019-04,3\n").unwrap();
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(
        &cfg,
        r#"
[[datasets]]
name = "x"
path = "x.csv"
value_column = "v"
frequency = "monthly"

[[series]]
name = "x"
dataset = "x"
order = { p = 1, d = 1, q = 0 }
"#,
    )
    .unwrap();
    let o = run(&["fit", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("2019-03"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn fetch_without_network_flag_fails_offline() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(
        &cfg,
        r#"
[[datasets]]
name = "pce"
url = "https://example.invalid/pce.csv"
value_column = "value"
frequency = "monthly"
"#,
    )
    .unwrap();
    let o = run(&["fetch", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("--allow-network"));
}

#[test]
fn generate_data_reproduces_the_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["generate-data", "--dir", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    for f in ["rail_weekly.csv", "indicators_monthly.csv"] {
        assert_eq!(
            std::fs::read(dir.path().join(f)).unwrap(),
            std::fs::read(root().join("data").join(f)).unwrap()
        );
    }
}
