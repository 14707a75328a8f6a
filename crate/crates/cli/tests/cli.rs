use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use lp_bootstrap::dgp::{simulate_ar1, Ar1Spec};
use lp_bootstrap::metrics::read_cells_csv;
use lp_bootstrap::RngStream;
use lp_bootstrap_cli::exit;
use lp_bootstrap_cli::plot::{read_coverage_bars, read_irf_band};
use tempfile::TempDir;

fn lpboot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lpboot")).args(args).output().unwrap()
}

fn fixture(name: &str) -> String {
    format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn write_series(path: &Path, values: &[f64]) {
    let mut s = String::from("t,y\n");
    for (i, v) in values.iter().enumerate() {
        s.push_str(&format!("{i},{v}\n"));
    }
    fs::write(path, s).unwrap();
}

fn ar1_csv(dir: &Path, phi: f64, t: usize) -> String {
    let y = simulate_ar1(&Ar1Spec::new(phi), t, 500, &RngStream::new(99)).unwrap();
    let path = dir.join("y.csv");
    write_series(&path, y.values());
    path.to_str().unwrap().to_string()
}

#[test]
fn smoke_run_writes_all_artifacts() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("smoke");
    let o = lpboot(&["run", &fixture("smoke.toml"), "--out", out.to_str().unwrap(), "--workers", "2"]);
    assert_eq!(o.status.code(), Some(exit::OK), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["metrics.csv", "metrics.json", "replications.csv", "manifest.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let cells = read_cells_csv(fs::File::open(out.join("metrics.csv")).unwrap()).unwrap();
    assert_eq!(cells.len(), 2);
    assert!(cells.iter().all(|c| c.n_reps == 10 && (0.0..=1.0).contains(&c.coverage)));
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "complete");
    assert_eq!(manifest["spec_sha256"].as_str().unwrap().len(), 64);

    let bars = dir.path().join("bars.csv");
    let o = lpboot(&["plot-data", out.join("metrics.csv").to_str().unwrap(), "--kind", "coverage-bars", "--out", bars.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(exit::OK));
    let rows = read_coverage_bars(fs::File::open(bars).unwrap()).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0].order, 1);
    assert_eq!(rows[0].nominal, 0.9);
}

#[test]
fn run_is_independent_of_worker_count() {
    let dir = TempDir::new().unwrap();
    let mut outputs = Vec::new();
    for w in ["1", "8"] {
        let out = dir.path().join(w);
        let o = lpboot(&["run", &fixture("smoke.toml"), "--out", out.to_str().unwrap(), "--workers", w]);
        assert!(o.status.success());
        outputs.push((fs::read(out.join("metrics.csv")).unwrap(), fs::read(out.join("replications.csv")).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn unknown_spec_field_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let text = fs::read_to_string(fixture("smoke.toml")).unwrap().replace("mc_reps", "mc_rep");
    let spec = dir.path().join("bad.toml");
    fs::write(&spec, text).unwrap();
    let o = lpboot(&["run", spec.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(exit::INPUT));
    assert!(String::from_utf8_lossy(&o.stderr).contains("mc_rep"));
}

#[test]
fn failing_cells_give_partial_exit() {
    let dir = TempDir::new().unwrap();
    let text = fs::read_to_string(fixture("smoke.toml"))
        .unwrap()
        .replace("T = [200]", "T = [60]")
        .replace("horizons = [5, 10]", "horizons = [2, 52]")
        .replace("lag_rules = [\"sbic\"]", "lag_rules = [4]");
    let spec = dir.path().join("short.toml");
    fs::write(&spec, text).unwrap();
    let out = dir.path().join("o");
    let o = lpboot(&["run", spec.to_str().unwrap(), "--out", out.to_str().unwrap(), "--workers", "1"]);
    assert_eq!(o.status.code(), Some(exit::PARTIAL), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("failures.json").exists());
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "partial");
}

#[test]
fn infer_reports_every_horizon() {
    let dir = TempDir::new().unwrap();
    let csv = ar1_csv(dir.path(), 0.5, 1000);
    let out = dir.path().join("inf");
    let o = lpboot(&["infer", &csv, "--column", "y", "--p", "sbic", "--H", "10", "--B", "199", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(exit::OK), "{}", String::from_utf8_lossy(&o.stderr));
    let band = read_irf_band(fs::File::open(out.join("irf_band.csv")).unwrap()).unwrap();
    assert_eq!(band.len(), 11);
    assert_eq!((band[0].point, band[0].lo, band[0].hi), (1.0, 1.0, 1.0));
    assert!(band.iter().all(|r| r.lo <= r.hi));
    assert!((band[1].point - 0.5).abs() < 0.1);
    assert!(band[10].lo < 0.0 && 0.0 < band[10].hi);

    let replot = dir.path().join("band.csv");
    let o = lpboot(&["plot-data", out.join("inference.json").to_str().unwrap(), "--kind", "irf-band", "--out", replot.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(fs::read(replot).unwrap(), fs::read(out.join("irf_band.csv")).unwrap());
}

#[test]
fn infer_wild_bands_bracket_decaying_point() {
    let dir = TempDir::new().unwrap();
    let csv = ar1_csv(dir.path(), 0.5, 1000);
    let out = dir.path().join("inf");
    let o = lpboot(&[
        "infer", &csv, "--column", "y", "--H", "10", "--scheme", "wild", "--B", "199", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let band = read_irf_band(fs::File::open(out.join("irf_band.csv")).unwrap()).unwrap();
    for r in &band {
        assert!(r.lo <= r.point && r.point <= r.hi, "{r:?}");
    }
    assert!(band[1].lo < 0.5 && 0.5 < band[1].hi);
    assert!(band[10].point.abs() < 0.1);
}

#[test]
fn infer_zero_horizon_has_single_row() {
    let dir = TempDir::new().unwrap();
    let csv = ar1_csv(dir.path(), 0.5, 300);
    let out = dir.path().join("inf");
    let o = lpboot(&["infer", &csv, "--column", "y", "--p", "2", "--H", "0", "--B", "49", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read_irf_band(fs::File::open(out.join("irf_band.csv")).unwrap()).unwrap().len(), 1);
}

#[test]
fn infer_rejects_bad_input() {
    let dir = TempDir::new().unwrap();
    let flat = dir.path().join("flat.csv");
    write_series(&flat, &[1.5; 200]);
    let o = lpboot(&["infer", flat.to_str().unwrap(), "--column", "y", "--p", "2", "--H", "5", "--B", "49"]);
    assert_eq!(o.status.code(), Some(exit::INPUT));

    let csv = ar1_csv(dir.path(), 0.5, 300);
    for args in [
        vec!["--column", "nope", "--H", "5"],
        vec!["--column", "y", "--H", "5", "--scheme", "bogus"],
        vec!["--column", "y", "--H", "5", "--p", "0"],
        vec!["--column", "y", "--H", "5", "--method", "3"],
        vec!["--column", "y", "--H", "400"],
    ] {
        let mut full = vec!["infer", csv.as_str()];
        full.extend(args.iter().copied());
        assert_eq!(lpboot(&full).status.code(), Some(exit::INPUT), "{args:?}");
    }
}

#[test]
fn infer_intercept_flag_is_recorded() {
    let dir = TempDir::new().unwrap();
    let y = simulate_ar1(&Ar1Spec::new(0.5), 400, 500, &RngStream::new(4)).unwrap();
    let shifted: Vec<f64> = y.values().iter().map(|v| v + 10.0).collect();
    let path = dir.path().join("level.csv");
    write_series(&path, &shifted);
    let out = dir.path().join("inf");
    let o = lpboot(&[
        "infer", path.to_str().unwrap(), "--column", "y", "--p", "1", "--H", "4", "--B", "99", "--intercept", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("inference.json")).unwrap()).unwrap();
    assert_eq!(report["intercept"], true);
    let b1 = report["intervals"][1]["point"].as_f64().unwrap();
    assert!((b1 - 0.5).abs() < 0.15, "{b1}");
}
