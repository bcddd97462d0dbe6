//! End-to-end tests driving the compiled binary.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bsn() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bsn"))
}

fn temp_out(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("bsn-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

#[test]
fn run_bounds_the_clock_at_the_requested_duration() {
    let out = temp_out("bound");
    let output = bsn()
        .args(["run", "--duration", "20", "--seed", "1", "--run-id", "bound", "--quiet"])
        .args(["--out-dir", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", stderr(&output));
    assert!(stdout(&output).contains("run_id: bound"));

    let status_log = std::fs::read_to_string(out.join("bound/status_bound.csv")).unwrap();
    let max_ts = status_log
        .lines()
        .skip(1)
        .filter_map(|l| l.split(',').next()?.parse::<f64>().ok())
        .fold(0.0f64, f64::max);
    assert!(max_ts < 20.0, "log reaches {max_ts}");
    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn omitted_duration_defaults_to_300_seconds() {
    let out = temp_out("default-dur");
    let output = bsn()
        .args(["run", "--seed", "1", "--run-id", "d300", "--quiet"])
        .args(["--out-dir", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", stderr(&output));
    assert!(
        stdout(&output).contains("duration: 300 virtual s"),
        "{}",
        stdout(&output)
    );
    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn same_seed_gives_identical_logs() {
    let out = temp_out("seeded");
    for id in ["a", "b"] {
        let output = bsn()
            .args(["run", "--duration", "30", "--seed", "9", "--quiet"])
            .args(["--run-id", id, "--out-dir", out.to_str().unwrap()])
            .output()
            .unwrap();
        assert!(output.status.success(), "{}", stderr(&output));
    }
    for category in ["adaptation", "status", "event", "uncertainty", "energystatus"] {
        let a = std::fs::read(out.join(format!("a/{category}_a.csv"))).unwrap();
        let b = std::fs::read(out.join(format!("b/{category}_b.csv"))).unwrap();
        assert_eq!(a, b, "{category} differs");
    }
    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn analyze_reads_setpoint_from_stored_config_and_emits_files() {
    let out = temp_out("analyze");
    let run = bsn()
        .args(["run", "--scenario", "S1", "--duration", "120", "--seed", "3", "--quiet"])
        .args(["--run-id", "r1", "--out-dir", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(run.status.success(), "{}", stderr(&run));

    let analyze = bsn()
        .args(["analyze", "--run-id", "r1", "--attribute", "reliability"])
        .args(["--out-dir", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(analyze.status.success(), "{}", stderr(&analyze));
    let text = stdout(&analyze);
    assert!(text.contains("setpoint: 0.9"), "{text}");
    assert!(text.contains("sse_percent:"), "{text}");
    assert!(text.contains("overshoot_percent:"), "{text}");
    assert!(text.contains("settling_time_seconds:"), "{text}");
    for file in ["report_r1.txt", "series_r1.csv", "plot_r1.svg"] {
        assert!(out.join("r1").join(file).exists(), "{file} missing");
    }
    // Row count of the series CSV equals the sample count plus header.
    let series = std::fs::read_to_string(out.join("r1/series_r1.csv")).unwrap();
    let samples: usize = text
        .lines()
        .find_map(|l| l.strip_prefix("samples: "))
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(series.lines().count(), samples + 1);
    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn per_component_flag_adds_component_curves() {
    let out = temp_out("percomp");
    let run = bsn()
        .args(["run", "--duration", "60", "--seed", "6", "--quiet"])
        .args(["--run-id", "pc", "--out-dir", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(run.status.success(), "{}", stderr(&run));
    let analyze = bsn()
        .args(["analyze", "--run-id", "pc", "--attribute", "reliability", "--per-component"])
        .args(["--out-dir", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(analyze.status.success(), "{}", stderr(&analyze));
    let plot = std::fs::read_to_string(out.join("pc/plot_pc.svg")).unwrap();
    for component in ["central_hub", "oximeter", "ecg", "thermometer"] {
        assert!(plot.contains(component), "plot missing {component} curve");
    }
    let series = std::fs::read_to_string(out.join("pc/series_pc.csv")).unwrap();
    assert!(series.lines().next().unwrap().contains("central_hub"));
    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn analyze_warns_on_attribute_mismatch_but_proceeds() {
    let out = temp_out("mismatch");
    let run = bsn()
        .args(["run", "--duration", "60", "--seed", "2", "--quiet"])
        .args(["--run-id", "r2", "--out-dir", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(run.status.success(), "{}", stderr(&run));

    let analyze = bsn()
        .args(["analyze", "--run-id", "r2", "--attribute", "cost", "--setpoint", "5"])
        .args(["--out-dir", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(analyze.status.success(), "{}", stderr(&analyze));
    assert!(
        stderr(&analyze).contains("warning"),
        "expected mismatch warning, got: {}",
        stderr(&analyze)
    );
    assert!(stdout(&analyze).contains("attribute: cost"));
    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn analyze_unknown_run_id_fails() {
    let out = temp_out("norun");
    let output = bsn()
        .args(["analyze", "--run-id", "nope", "--attribute", "reliability"])
        .args(["--out-dir", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!output.status.success());
}

#[test]
fn invalid_config_fails_with_key_path() {
    let out = temp_out("badcfg");
    std::fs::create_dir_all(&out).unwrap();
    let mut config = String::from(bsn_core::default_config_toml());
    // Break one transition matrix row.
    config = config.replace("[0.60, 0.30, 0.10, 0.00, 0.00]", "[0.60, 0.20, 0.10, 0.00, 0.00]");
    let path = out.join("bad.toml");
    std::fs::write(&path, config).unwrap();

    let output = bsn()
        .args(["run", "--config", path.to_str().unwrap(), "--quiet"])
        .args(["--out-dir", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!output.status.success());
    let err = stderr(&output);
    assert!(
        err.contains("transition_matrix"),
        "diagnostic should name the key path: {err}"
    );
    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn unknown_scenario_is_a_usage_error() {
    let output = bsn().args(["run", "--scenario", "S9", "--quiet"]).output().unwrap();
    assert!(!output.status.success());
    assert!(stderr(&output).contains("S9"));
}

#[test]
fn default_config_subcommand_prints_valid_toml() {
    let output = bsn().arg("default-config").output().unwrap();
    assert!(output.status.success());
    let text = stdout(&output);
    bsn_core::RunConfig::from_toml_str(&text, "printed").unwrap();
}

#[test]
fn scenario_s3_runs_with_four_active_sensors() {
    let out = temp_out("s3");
    let output = bsn()
        .args(["run", "--scenario", "S3", "--duration", "60", "--seed", "4", "--quiet"])
        .args(["--run-id", "s3", "--out-dir", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", stderr(&output));
    let events = std::fs::read_to_string(out.join("s3/event_s3.csv")).unwrap();
    // Four sensors + hub activate; the two disabled sensors never appear.
    assert_eq!(events.lines().count(), 6);
    assert!(!events.contains("abpd_sensor"));
    assert!(!events.contains("glucose_sensor"));
    let _ = std::fs::remove_dir_all(&out);
}
