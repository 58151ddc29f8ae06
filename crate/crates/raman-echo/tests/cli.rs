//! End-to-end checks of the command-line interface: exit codes, artifact
//! layout, and byte-level determinism of everything written to disk.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

const CSV_HEADER: &str = "t_us,re_S12,im_S12,abs_S12,re_P13,im_P13,pop1,pop2,pop3,pop4";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_raman-echo"))
}

fn work_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("raman_echo_cli_{}_{name}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("process exits normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn conflicting_scenario_and_sequence_exit_1() {
    let out = bin()
        .args([
            "run",
            "--scenario",
            "fig1a",
            "--seq",
            "examples/data/fig1a.qps",
        ])
        .output()
        .unwrap();
    assert_eq!(code(&out), 1, "{}", stderr(&out));
    assert!(stderr(&out).contains("mutually exclusive"));
}

#[test]
fn missing_source_exits_1() {
    let out = bin().args(["run"]).output().unwrap();
    assert_eq!(code(&out), 1, "{}", stderr(&out));
}

#[test]
fn unreadable_sequence_file_exits_2() {
    let out = bin()
        .args(["run", "--seq", "/no/such/file.qps"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 2, "{}", stderr(&out));
}

#[test]
fn malformed_sequence_exits_2() {
    let dir = work_dir("malformed");
    let path = dir.join("bad.qps");
    fs::write(&path, "pulse probe() dur 3 us;\n").unwrap();
    let out = bin()
        .args(["run", "--seq", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    assert!(stderr(&out).contains("parse error"), "{}", stderr(&out));
}

#[test]
fn unknown_flag_exits_2() {
    let out = bin().args(["run", "--frobnicate"]).output().unwrap();
    assert_eq!(code(&out), 2, "{}", stderr(&out));
}

#[test]
fn validate_accepts_every_shipped_sequence() {
    for name in [
        "fig1a", "fig1b", "fig1c", "fig1d", "fig2", "weak_probe", "fig1a_gentle",
    ] {
        let path = format!("examples/data/{name}.qps");
        let mut args = vec!["validate", "--seq", &path];
        // The population-locking sequence drives the auxiliary transition,
        // which only the 4-level scheme carries.
        if name == "fig2" {
            args.extend(["--config", "examples/data/four_level.json"]);
        }
        let out = bin().args(&args).output().unwrap();
        assert_eq!(code(&out), 0, "{name}: {}", stderr(&out));
        assert!(stdout(&out).starts_with("ok:"), "{name}: {}", stdout(&out));
    }
}

#[test]
fn run_artifacts_are_deterministic_across_thread_counts() {
    let dir = work_dir("determinism");
    let mut artifacts = Vec::new();
    for threads in ["1", "4"] {
        let csv = dir.join(format!("trace_{threads}.csv"));
        let json = dir.join(format!("summary_{threads}.json"));
        let out = bin()
            .args([
                "run",
                "--scenario",
                "weak_probe",
                "--threads",
                threads,
                "--out",
                csv.to_str().unwrap(),
                "--summary",
                json.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        artifacts.push((fs::read(&csv).unwrap(), fs::read(&json).unwrap()));
    }
    assert_eq!(
        artifacts[0].0, artifacts[1].0,
        "trace CSV must be byte-identical for any thread count"
    );
    assert_eq!(
        artifacts[0].1, artifacts[1].1,
        "summary JSON must be byte-identical for any thread count"
    );
    let text = String::from_utf8(artifacts[0].0.clone()).unwrap();
    assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
}

#[test]
fn custom_sequence_with_config_runs_clean() {
    let dir = work_dir("custom");
    let csv = dir.join("trace.csv");
    let json = dir.join("summary.json");
    let out = bin()
        .args([
            "run",
            "--seq",
            "examples/data/fig1b.qps",
            "--config",
            "examples/data/photon_echo.json",
            "--out",
            csv.to_str().unwrap(),
            "--summary",
            json.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(summary["scenario"], "custom");
    assert!(csv.exists());
}

#[test]
fn retained_member_traces_follow_the_naming_scheme() {
    let dir = work_dir("retained");
    let csv = dir.join("trace.csv");
    let out = bin()
        .args([
            "run",
            "--scenario",
            "fig1c",
            "--out",
            csv.to_str().unwrap(),
            "--summary",
            dir.join("summary.json").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    for member in ["trace_delta+10.csv", "trace_delta-10.csv"] {
        let path = dir.join(member);
        assert!(path.exists(), "missing {member}");
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
    }
}

#[test]
fn scan_writes_the_fit_and_table() {
    let dir = work_dir("scan");
    let csv = dir.join("scan.csv");
    let json = dir.join("summary.json");
    let out = bin()
        .args([
            "scan",
            "--delays",
            "60,100",
            "--out",
            csv.to_str().unwrap(),
            "--summary",
            json.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let table = fs::read_to_string(&csv).unwrap();
    let mut lines = table.lines();
    assert_eq!(
        lines.next().unwrap(),
        "delay_us,storage_interval_us,efficiency"
    );
    assert_eq!(lines.count(), 2);
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    assert!(summary["fit"]["tau_us"].as_f64().unwrap() > 0.0);
    assert_eq!(summary["scan"].as_array().unwrap().len(), 2);
    assert!(summary["storage_capacity_bits"].as_u64().is_some());
}

#[test]
fn emit_plot_picks_panels_by_scenario() {
    let dir = work_dir("plot");
    let csv = dir.join("tiny.csv");
    fs::write(
        &csv,
        format!("{CSV_HEADER}\n0.0,0.1,0.0,0.1,0.0,0.0,0.5,0.5,0.0,0.0\n0.1,0.1,0.0,0.1,0.0,0.0,0.5,0.5,0.0,0.0\n"),
    )
    .unwrap();

    let spin = bin()
        .args(["emit-plot", csv.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(code(&spin), 0, "{}", stderr(&spin));
    assert!(stdout(&spin).contains("multiplot layout 2,1"));

    let optical = bin()
        .args(["emit-plot", csv.to_str().unwrap(), "--scenario", "fig1b"])
        .output()
        .unwrap();
    assert_eq!(code(&optical), 0, "{}", stderr(&optical));
    assert!(stdout(&optical).contains("using 1:6"));
    assert!(!stdout(&optical).contains("multiplot"));

    let headless = dir.join("headless.csv");
    fs::write(&headless, "t_us,re_S12\n0.0,0.1\n").unwrap();
    let bad = bin()
        .args(["emit-plot", headless.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(code(&bad), 1, "{}", stderr(&bad));

    let missing = bin()
        .args(["emit-plot", "/no/such/trace.csv"])
        .output()
        .unwrap();
    assert_eq!(code(&missing), 2, "{}", stderr(&missing));
}

#[test]
fn shipped_sequences_match_their_builders() {
    use raman_echo::scenarios::{self, ScenarioParams, Variant};
    use raman_echo::seqdsl;

    for variant in Variant::ALL {
        if variant == Variant::Custom {
            continue;
        }
        let text = fs::read_to_string(format!("examples/data/{variant}.qps")).unwrap();
        let scenario = scenarios::build(&ScenarioParams::new(variant)).unwrap();
        assert_eq!(
            seqdsl::parse(&text).unwrap(),
            scenario.sequence,
            "{variant}.qps drifted from its builder"
        );
    }
    let mut gentle = ScenarioParams::new(Variant::Fig1a);
    gentle.raman_generator_khz = 50.0;
    let text = fs::read_to_string("examples/data/fig1a_gentle.qps").unwrap();
    assert_eq!(
        seqdsl::parse(&text).unwrap(),
        scenarios::build(&gentle).unwrap().sequence,
        "fig1a_gentle.qps drifted from its builder"
    );
}
