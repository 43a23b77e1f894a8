use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn spherear(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spherear"))
        .args(args)
        .env("RUST_LOG", "off")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).display().to_string()
}

fn json(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join(name)).unwrap()).unwrap()
}

/// Simulated three-part compositions in `dir/sim/series.csv`.
fn simulate_compositions(dir: &Path, alphas: &str, length: usize, seed: u64) -> String {
    let out = spherear(&[
        "simulate",
        "--alphas",
        alphas,
        "--length",
        &length.to_string(),
        "--seed",
        &seed.to_string(),
        "--out",
        &path(dir, "sim"),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    path(dir, "sim/series.csv")
}

#[test]
fn fit_writes_model_and_diagnostics() {
    let dir = TempDir::new().unwrap();
    let input = simulate_compositions(dir.path(), "0.4,-0.2", 120, 1);
    let out = spherear(&["fit", "--input", &input, "--variant", "sar", "--order", "2", "--out", &path(dir.path(), "fit")]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let model = json(&dir.path().join("fit"), "model.json");
    assert_eq!(model["format"], "sar-model/1");
    assert_eq!(model["alphas"].as_array().unwrap().len(), 2);
    let diagnostics = json(&dir.path().join("fit"), "diagnostics.json");
    assert_eq!(diagnostics["p"], 2);
    assert_eq!(diagnostics["lags"].as_array().unwrap().len(), 3);
    assert!(diagnostics["stationarity"]["stationary"].as_bool().unwrap());
    assert_eq!(diagnostics["n_fit"], 120);
}

#[test]
fn unreadable_csv_names_the_row() {
    let dir = TempDir::new().unwrap();
    let input = path(dir.path(), "bad.csv");
    fs::write(&input, "time,a,b,c\n1,0.2,0.3,0.5\n2,0.2,abc,0.5\n").unwrap();
    let out = spherear(&["fit", "--input", &input, "--out", &path(dir.path(), "fit")]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn empty_input_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let input = path(dir.path(), "empty.csv");
    fs::write(&input, "time,a,b,c\n").unwrap();
    let out = spherear(&["fit", "--input", &input, "--out", &path(dir.path(), "fit")]);
    assert_eq!(code(&out), 2);
}

#[test]
fn model_version_mismatch_exits_with_four() {
    let dir = TempDir::new().unwrap();
    let input = simulate_compositions(dir.path(), "0.5", 60, 2);
    let fit_dir = path(dir.path(), "fit");
    assert_eq!(code(&spherear(&["fit", "--input", &input, "--out", &fit_dir])), 0);
    let model_path = dir.path().join("fit/model.json");
    let text = fs::read_to_string(&model_path).unwrap().replace("sar-model/1", "sar-model/99");
    fs::write(&model_path, text).unwrap();
    let out = spherear(&["predict", "--model", &model_path.display().to_string(), "--out", &fit_dir]);
    assert_eq!(code(&out), 4);
}

#[test]
fn nonstationary_simulation_is_refused() {
    let dir = TempDir::new().unwrap();
    let out = spherear(&["simulate", "--alphas", "1.0", "--out", &path(dir.path(), "sim")]);
    assert_eq!(code(&out), 5);
    let forced = spherear(&["simulate", "--alphas", "1.0", "--length", "20", "--force", "--out", &path(dir.path(), "sim")]);
    assert_eq!(code(&forced), 0);
}

#[test]
fn simulation_is_deterministic_per_seed() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let c = TempDir::new().unwrap();
    let first = fs::read(simulate_compositions(a.path(), "0.3", 50, 7)).unwrap();
    let second = fs::read(simulate_compositions(b.path(), "0.3", 50, 7)).unwrap();
    let other = fs::read(simulate_compositions(c.path(), "0.3", 50, 8)).unwrap();
    assert_eq!(first, second);
    assert_ne!(first, other);
}

#[test]
fn simulate_then_fit_recovers_alpha() {
    let dir = TempDir::new().unwrap();
    let input = simulate_compositions(dir.path(), "0.5", 1500, 3);
    let out = spherear(&["fit", "--input", &input, "--order", "1", "--out", &path(dir.path(), "fit")]);
    assert_eq!(code(&out), 0);
    let alpha = json(&dir.path().join("fit"), "model.json")["alphas"][0].as_f64().unwrap();
    assert!((alpha - 0.5).abs() < 0.1, "{alpha}");
}

#[test]
fn fit_and_predict_are_reproducible() {
    let dir = TempDir::new().unwrap();
    let input = simulate_compositions(dir.path(), "0.4", 80, 5);
    for run in ["a", "b"] {
        let fit_dir = path(dir.path(), run);
        assert_eq!(code(&spherear(&["fit", "--input", &input, "--variant", "dsar", "--out", &fit_dir])), 0);
        let model = path(dir.path(), &format!("{run}/model.json"));
        assert_eq!(code(&spherear(&["predict", "--model", &model, "--out", &fit_dir])), 0);
    }
    for name in ["model.json", "diagnostics.json", "prediction.json"] {
        let a = fs::read(dir.path().join("a").join(name)).unwrap();
        let b = fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
    let prediction = json(&dir.path().join("a"), "prediction.json");
    let parts: Vec<f64> = prediction["composition"]["parts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert_eq!(parts.len(), 3);
    assert!((parts.iter().sum::<f64>() - 1.0).abs() < 1e-9);
}

#[test]
fn density_series_holdout() {
    let dir = TempDir::new().unwrap();
    let sim = path(dir.path(), "sim");
    let out = spherear(&[
        "simulate", "--format", "density", "--grid", "x:-3:3:12,y:-3:3:12", "--alphas", "0.5", "--sigma", "0.05",
        "--length", "25", "--seed", "6", "--out", &sim,
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let fit_dir = path(dir.path(), "fit");
    let out = spherear(&[
        "fit", "--input", &path(dir.path(), "sim/series.json"), "--format", "density", "--variant", "dsar",
        "--holdout", "1", "--out", &fit_dir,
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let holdout = &json(&dir.path().join("fit"), "diagnostics.json")["holdout"];
    let distance = holdout["distance"].as_f64().unwrap();
    assert!((0.0..=std::f64::consts::FRAC_PI_2).contains(&distance));
    assert!(holdout["carry_forward_distance"].as_f64().unwrap() >= 0.0);
    let out = spherear(&["predict", "--model", &path(dir.path(), "fit/model.json"), "--out", &fit_dir]);
    assert_eq!(code(&out), 0);
    let density = &json(&dir.path().join("fit"), "prediction.json")["density"];
    assert_eq!(density["values"].as_array().unwrap().len(), 144);
}

#[test]
fn samples_are_smoothed_onto_a_grid() {
    let dir = TempDir::new().unwrap();
    let input = path(dir.path(), "samples.csv");
    let mut csv = String::from("time,x,y\n");
    for t in 0..8 {
        for i in 0..30 {
            let s = (i as f64 * 0.37 + t as f64 * 0.11).sin();
            let c = (i as f64 * 0.53 - t as f64 * 0.07).cos();
            csv.push_str(&format!("{t},{s},{c}\n"));
        }
    }
    fs::write(&input, csv).unwrap();
    let out_dir = path(dir.path(), "val");
    let out = spherear(&[
        "validate", "--input", &input, "--format", "samples", "--grid", "x:-1.5:1.5:10,y:-1.5:1.5:10",
        "--bandwidth-scale", "0.8", "--out", &out_dir,
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let contour = fs::read_to_string(dir.path().join("val/contour.csv")).unwrap();
    assert_eq!(contour.lines().count(), 1 + 8 * 100);
    let out = spherear(&["fit", "--input", &input, "--format", "samples", "--out", &path(dir.path(), "fit")]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn compositions_emit_ternary_and_lon_lat() {
    let dir = TempDir::new().unwrap();
    let input = simulate_compositions(dir.path(), "0.3", 20, 9);
    let out = spherear(&["validate", "--input", &input, "--out", &path(dir.path(), "val")]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let ternary = fs::read_to_string(dir.path().join("val/ternary.csv")).unwrap();
    let lonlat = fs::read_to_string(dir.path().join("val/lonlat.csv")).unwrap();
    assert_eq!(ternary.lines().count(), 21);
    assert_eq!(lonlat.lines().count(), 21);
    let summary = json(&dir.path().join("val"), "validation.json");
    assert_eq!(summary["observations"], 20);
}
