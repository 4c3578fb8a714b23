use std::path::Path;
use std::process::{Command, Output};

fn photowino(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_photowino"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("cfg.toml");
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn conv_check_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = photowino(&["conv-check", "--trials", "20", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(dir.path().join("conv_check.csv").exists());
}

#[test]
fn misprinted_plan_fails_with_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let o = photowino(&["conv-check", "--trials", "5", "--inject-misprinted", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    let failures = std::fs::read_to_string(dir.path().join("conv_check_failures.csv")).unwrap();
    assert!(failures.lines().count() > 1);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(photowino(&["conv-check", "--trials", "0"]).status.code(), Some(2));
    assert_eq!(photowino(&["no-such-command"]).status.code(), Some(2));
    let o = photowino(&["--config", "/nonexistent/photowino.toml", "perf"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/nonexistent/photowino.toml"));
}

#[test]
fn unknown_config_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[timing]\nclock_ghz = 5.0\n");
    let o = photowino(&["--config", &cfg, "perf"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("clock_ghz"), "{}", stderr(&o));
}

#[test]
fn baseline_without_note_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[[baselines]]\nname = \"gpu\"\nspeed_gops = 1000.0\npower_w = 250.0\n",
    );
    assert_eq!(photowino(&["--config", &cfg, "power"]).status.code(), Some(2));
}

#[test]
fn missing_power_component_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "out_dir = \"out\"\n[power.laser]\npower_w = 1.0\nnote = \"a\"\n[power.photodiodes]\npower_w = 0.1\nnote = \"b\"\n",
    );
    let o = photowino(&["--config", &cfg, "power"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("dac_array"), "{}", stderr(&o));
}

#[test]
fn baseline_ratios_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(
        dir.path(),
        "[[baselines]]\nname = \"gpu\"\nspeed_gops = 1000.0\npower_w = 250.0\nsource_note = \"test figure\"\n",
    );
    let o = photowino(&["--config", &cfg, "--out", &out_arg(&out), "power"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("power_baselines.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    for col in ["speed_ratio", "efficiency_ratio_full", "efficiency_ratio_core", "source_note"] {
        assert!(header.contains(col), "{header}");
    }
    assert!(csv.contains("test figure"));
    assert!(stdout(&o).contains("vs gpu"));
}

#[test]
fn perf_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let oa = photowino(&["perf", "--out", &out_arg(a.path())]);
    let ob = photowino(&["perf", "--out", &out_arg(b.path())]);
    assert_eq!(oa.status.code(), Some(0));
    assert_eq!(ob.status.code(), Some(0));
    for f in ["perf_layers.csv", "perf_throughput.csv"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap()
        );
    }
    let throughput = std::fs::read_to_string(a.path().join("perf_throughput.csv")).unwrap();
    assert!(throughput.lines().any(|l| l.starts_with("paper,4,3,9,") && l.contains(",45,")));
}

#[test]
fn clock_override_warns() {
    let dir = tempfile::tempdir().unwrap();
    let o = photowino(&["perf", "--clock", "10e9", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("warning"));
}

#[test]
fn resources_cites_area_bound() {
    let dir = tempfile::tempdir().unwrap();
    let o = photowino(&["resources", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary = std::fs::read_to_string(dir.path().join("resources_summary.txt")).unwrap();
    assert!(summary.contains("less than 0.25 cm²"));
}
