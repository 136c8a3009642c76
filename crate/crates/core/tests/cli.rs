use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;
use thz_vapor::io::read_signal_csv;
use thz_vapor::RemovalReport;

const SCENE: &str = r#"{
  "pulse": {"kind": "gaussian_derivative_1", "center": 20.0, "width_sigma": 0.1, "amplitude": 1.0},
  "lines": [
    {"freq_ghz": 556.936, "strength": 0.5},
    {"freq_ghz": 1162.912, "strength": 1.0}
  ],
  "noise_rms": 0.0005,
  "seed": 9
}"#;

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_thz-vapor"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(path: &Path) -> &str {
    path.to_str().unwrap()
}

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        let ws = Self { dir: tempfile::tempdir().unwrap() };
        std::fs::write(ws.path("scene.json"), SCENE).unwrap();
        std::fs::write(ws.path("catalog.csv"), thz_vapor::catalog::BUNDLED_TEST_CATALOG_CSV).unwrap();
        std::fs::write(ws.path("lines.cat"), include_str!("../data/jpl_fixture.cat")).unwrap();
        ws
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn synth(&self) {
        let out = cli(&[
            "synth",
            s(&self.path("scene.json")),
            "--out-wet",
            s(&self.path("wet.csv")),
            "--out-dry",
            s(&self.path("dry.csv")),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn synth_remove_compare_spectrum() {
    let ws = Workspace::new();
    ws.synth();
    let out = cli(&[
        "remove",
        s(&ws.path("wet.csv")),
        s(&ws.path("catalog.csv")),
        "--out-signal",
        s(&ws.path("clean.csv")),
        "--out-report",
        s(&ws.path("report.json")),
        "--reference",
        s(&ws.path("dry.csv")),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: Vec<f64> = String::from_utf8(out.stdout)
        .unwrap()
        .split_whitespace()
        .map(|v| v.parse().unwrap())
        .collect();
    assert_eq!(summary.len(), 4);
    assert!(summary[1] < summary[0]);

    let report = RemovalReport::from_json(&std::fs::read_to_string(ws.path("report.json")).unwrap()).unwrap();
    assert_eq!(report.metrics.fluctuation_ratio_after, summary[1]);
    assert!(report.metrics.mse_percent.is_some());

    let out = cli(&["compare", s(&ws.path("dry.csv")), s(&ws.path("clean.csv"))]);
    assert!(out.status.success());
    let fields: Vec<f64> = String::from_utf8(out.stdout)
        .unwrap()
        .split_whitespace()
        .map(|v| v.parse().unwrap())
        .collect();
    assert_eq!(fields.len(), 4);
    assert!(fields[0] >= 0.0);

    let out = cli(&["spectrum", s(&ws.path("clean.csv")), "--out", s(&ws.path("spectrum.csv"))]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(ws.path("spectrum.csv")).unwrap();
    assert!(text.starts_with("freq_ghz,magnitude,phase_rad\n"));
    assert_eq!(text.lines().count(), 1 + 2048 / 2 + 1);
}

#[test]
fn flags_override_config_file() {
    let ws = Workspace::new();
    ws.synth();
    std::fs::write(ws.path("config.json"), r#"{"band_max_ghz": 3000.0, "max_iterations": 4}"#).unwrap();
    let out = cli(&[
        "remove",
        s(&ws.path("wet.csv")),
        s(&ws.path("catalog.csv")),
        "--config",
        s(&ws.path("config.json")),
        "--band-max",
        "1000",
        "--grid-points",
        "20",
        "--out-signal",
        s(&ws.path("clean.csv")),
        "--out-report",
        s(&ws.path("report.json")),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = RemovalReport::from_json(&std::fs::read_to_string(ws.path("report.json")).unwrap()).unwrap();
    assert_eq!(report.config.band_max_ghz, 1000.0);
    assert_eq!(report.config.max_iterations, 4);
    assert!(report.line_frequencies_ghz.iter().all(|&f| f <= 1000.0));
}

#[test]
fn jpl_catalog_is_detected() {
    let ws = Workspace::new();
    ws.synth();
    let out = cli(&[
        "remove",
        s(&ws.path("wet.csv")),
        s(&ws.path("lines.cat")),
        "--out-signal",
        s(&ws.path("clean.csv")),
        "--out-report",
        s(&ws.path("report.json")),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = RemovalReport::from_json(&std::fs::read_to_string(ws.path("report.json")).unwrap()).unwrap();
    assert_eq!(report.line_frequencies_ghz.len(), 5);
    assert!(read_signal_csv(&std::fs::read_to_string(ws.path("clean.csv")).unwrap()).is_ok());
}

#[test]
fn exit_codes() {
    let ws = Workspace::new();
    assert_eq!(cli(&[]).status.code(), Some(2));
    assert_eq!(cli(&["remove", "only-one-arg"]).status.code(), Some(2));
    assert_eq!(cli(&["--help"]).status.code(), Some(0));

    std::fs::write(ws.path("bad.csv"), "time_ps,amplitude\n0,1\n1,oops\n").unwrap();
    let out = cli(&["spectrum", s(&ws.path("bad.csv")), "--out", s(&ws.path("x.csv"))]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 3"));

    let missing = cli(&["spectrum", s(&ws.path("missing.csv")), "--out", s(&ws.path("x.csv"))]);
    assert_eq!(missing.status.code(), Some(3));

    let zeros: String = std::iter::once("time_ps,amplitude\n".to_owned())
        .chain((0..16).map(|i| format!("{}.0,0\n", i)))
        .collect();
    std::fs::write(ws.path("zeros.csv"), zeros).unwrap();
    let out = cli(&[
        "remove",
        s(&ws.path("zeros.csv")),
        s(&ws.path("catalog.csv")),
        "--out-signal",
        s(&ws.path("o.csv")),
        "--out-report",
        s(&ws.path("o.json")),
    ]);
    assert_eq!(out.status.code(), Some(4));
}
