use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const GRID: &str = r#"
fault_types = ["ag", "bc", "abg"]
locations = [0.5]
r_f = [0.1, 250.0]
modes = ["grid"]
snr_db = [inf]
healthy_per_block = 2
external_locations = [0.01]
external_r_f = [0.1]
"#;

fn statdiff(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_statdiff"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// Simulates the small grid and tunes a model once per test directory.
fn pipeline(dir: &Path) -> PathBuf {
    fs::write(dir.join("grid.toml"), GRID).unwrap();
    ok(&statdiff(
        &[
            "simulate",
            "--grid",
            "grid.toml",
            "--out",
            "data",
            "--seed",
            "5",
            "--training",
            "8",
        ],
        dir,
    ));
    let out = statdiff(
        &[
            "tune",
            "--healthy",
            "data/train-*.csv",
            "--out",
            "model/m.json",
            "--seed",
            "5",
            "--budget",
            "20",
            "--alpha-det",
            "1e-8",
        ],
        dir,
    );
    ok(&out);
    dir.join("model/m.json")
}

fn listing(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("grid.toml"), GRID).unwrap();
    for out in ["a", "b"] {
        ok(&statdiff(
            &[
                "simulate",
                "--grid",
                "grid.toml",
                "--out",
                out,
                "--seed",
                "11",
                "--training",
                "2",
            ],
            d,
        ));
    }
    let names = listing(&d.join("a"));
    assert_eq!(names, listing(&d.join("b")));
    // 6 internal + 2 healthy + 3 external + 2 training, two files each, plus the manifest
    assert_eq!(names.len(), 2 * 13 + 1);
    for name in &names {
        assert_eq!(
            fs::read(d.join("a").join(name)).unwrap(),
            fs::read(d.join("b").join(name)).unwrap(),
            "{name}"
        );
    }
    let manifest = fs::read_to_string(d.join("a/manifest.json")).unwrap();
    assert!(manifest.contains("\"config_hash\""));
}

#[test]
fn malformed_grid_fails_without_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("bad.toml"), "locations = [1.5]\n").unwrap();
    let out = statdiff(&["simulate", "--grid", "bad.toml", "--out", "data"], d);
    assert_eq!(out.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
    assert!(!d.join("data").exists() || listing(&d.join("data")).is_empty());

    fs::write(d.join("typo.toml"), "fault_type = [\"ag\"]\n").unwrap();
    let out = statdiff(&["simulate", "--grid", "typo.toml", "--out", "data"], d);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn tune_run_eval_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let model = pipeline(d);
    let text = fs::read_to_string(&model).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    let tau = doc["thresholds"]["tau_det"].as_f64().unwrap();
    assert!((tau - 40.13).abs() < 0.01, "{tau}");

    // same seed, same model bytes
    ok(&statdiff(
        &[
            "tune",
            "--healthy",
            "data/train-*.csv",
            "--out",
            "model/m2.json",
            "--seed",
            "5",
            "--budget",
            "20",
        ],
        d,
    ));
    assert_eq!(text, fs::read_to_string(d.join("model/m2.json")).unwrap());

    let run = statdiff(
        &[
            "run",
            "--waveform",
            "data/grid-clean-*.csv",
            "--model",
            "model/m.json",
            "--out",
            "runs",
        ],
        d,
    );
    ok(&run);
    let lines = stdout(&run);
    let line = |id: &str| {
        lines
            .lines()
            .find(|l| l.starts_with(id))
            .unwrap()
            .to_string()
    };
    let ag = line("grid-clean-int-ag-l50-r0.1:");
    assert!(
        ag.contains("tripped=true") && ag.contains("label=ag"),
        "{ag}"
    );
    for healthy in [
        "grid-clean-healthy-0:",
        "grid-clean-healthy-1:",
        "grid-clean-ext-ag-d1-r0.1:",
    ] {
        assert!(line(healthy).contains("tripped=false"), "{}", line(healthy));
    }
    let events = fs::read_to_string(d.join("runs/grid-clean-int-ag-l50-r0.1.events.csv")).unwrap();
    assert!(events.starts_with("t_end_s,d_sq,z_a,z_b,z_c,g0,flags,tripped,label"));
    assert!(events.lines().any(|l| l.ends_with(",1,ag")));

    let eval = |out: &str| {
        statdiff(
            &["eval", "--outcomes", "runs/*.outcome.json", "--out", out],
            d,
        )
    };
    ok(&eval("report"));
    ok(&eval("report2"));
    for f in [
        "report.json",
        "summary.csv",
        "roc_points.csv",
        "confusion.csv",
    ] {
        assert_eq!(
            fs::read(d.join("report").join(f)).unwrap(),
            fs::read(d.join("report2").join(f)).unwrap(),
            "{f}"
        );
    }
    let summary = fs::read_to_string(d.join("report/summary.csv")).unwrap();
    assert!(summary.starts_with(
        "scenario,avg_time_ms,far_pct,far_quiet_pct,p_d_pct,accuracy_pct,macro_f1_pct"
    ));
    assert!(summary.contains("Clean (no noise)"));

    // delayed receiving channels: no windows before the skew has passed
    let delayed = statdiff(
        &[
            "run",
            "--waveform",
            "data/grid-clean-healthy-0.csv",
            "--model",
            "model/m.json",
            "--out",
            "delayed",
            "--delay-ms",
            "10",
        ],
        d,
    );
    ok(&delayed);
    assert!(stdout(&delayed).contains("tripped=false"));
    let events = fs::read_to_string(d.join("delayed/grid-clean-healthy-0.events.csv")).unwrap();
    let first: f64 = events
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!((first - 0.030).abs() < 1e-9, "{first}");
    assert!(fs::read_to_string(d.join("delayed/manifest.json"))
        .unwrap()
        .contains("\"delay_ms\": 10.0"));
}

#[test]
fn error_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = statdiff(
        &["eval", "--outcomes", "none/*.outcome.json", "--out", "r"],
        d,
    );
    assert_eq!(out.status.code(), Some(2));
    let out = statdiff(&["tune", "--healthy", "none/*.csv", "--out", "m.json"], d);
    assert_eq!(out.status.code(), Some(2));
    let out = statdiff(
        &[
            "tune",
            "--healthy",
            "x.csv",
            "--out",
            "m.json",
            "--alpha-det",
            "2",
        ],
        d,
    );
    assert_eq!(out.status.code(), Some(2));

    // too little healthy data is a numeric failure
    let mut short = String::from("t_s,ia_s,ib_s,ic_s,ia_r,ib_r,ic_r\n");
    for k in 0..300 {
        let t = k as f64 * 1e-4;
        let v = (2.0 * std::f64::consts::PI * 50.0 * t).sin() * 80.0;
        short.push_str(&format!("{t},{v},{v},{v},{v},{v},{v}\n"));
    }
    fs::write(d.join("short.csv"), short).unwrap();
    let out = statdiff(&["tune", "--healthy", "short.csv", "--out", "m.json"], d);
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(!d.join("m.json").exists());
    let out = statdiff(&["bogus"], d);
    assert_eq!(out.status.code(), Some(2));
}
