use super::*;
use crate::numerics::linear_fit;
use crate::SimulationGrid;

fn metrics(cfg: &Config) -> Metrics {
    evaluate(cfg).unwrap().metrics
}

#[test]
fn zero_hold_recall_matches_slow_light() {
    let slow = metrics(&preset(ScenarioName::SlowLight));
    let mut cfg = preset(ScenarioName::StoredLight);
    cfg.scenario.parameters = serde_json::json!({ "hold": 0.0 });
    let stored = metrics(&cfg);
    let total = stored["recalled_fraction"] + stored["leaked_fraction"];
    assert!((total / slow["transmitted_fraction"] - 1.0).abs() < 0.01);
    assert!(stored["leaked_fraction"] < 0.01);
}

#[test]
fn slow_light_delay_follows_group_velocity() {
    let m = metrics(&preset(ScenarioName::SlowLight));
    assert!((m["delay"] / m["predicted_delay"] - 1.0).abs() < 0.05);
    assert!(m["closure_residual"] < 1e-9);
}

#[test]
fn antisymmetric_raman_holds() {
    let m = metrics(&preset(ScenarioName::RamanSlAntisymmetric));
    assert!(m["leaked_fraction"] < 0.05);
    let m = metrics(&preset(ScenarioName::RamanSlSymmetric));
    assert!((m["fitted_uniform_rate"] / m["predicted_uniform_rate"] - 1.0).abs() < 0.02);
}

#[test]
fn raman_engine_rejects_unequal_detunings() {
    let mut cfg = preset(ScenarioName::RamanSlSymmetric);
    cfg.controls.delta_minus = -40.0;
    let err = cfg.validate().unwrap_err();
    assert!(err.is_validation());
    assert!(err.to_string().contains("engine"));
    cfg.scenario.parameters = serde_json::json!({ "engine": "mbe" });
    cfg.validate().unwrap();
}

#[test]
fn bandgap_preset_closes_the_gap() {
    let out = evaluate(&preset(ScenarioName::BandgapScan)).unwrap();
    let spectrum = out.artifacts.iter().find(|a| a.name == "spectrum.csv").unwrap();
    let mut rdr = csv::Reader::from_reader(spectrum.contents.as_slice());
    let centre = rdr
        .records()
        .map(|r| r.unwrap())
        .find(|r| r[0].parse::<f64>().unwrap() == 0.0)
        .unwrap();
    let threshold = BandgapParams::default().gap_threshold;
    assert!(centre[1].parse::<f64>().unwrap() < threshold);
    assert_eq!(out.metrics["gap_open"], 1.0);
}

#[test]
fn unknown_parameter_is_a_validation_error() {
    let mut cfg = preset(ScenarioName::SlowLight);
    cfg.scenario.parameters = serde_json::json!({ "pulse": { "amplitude": 1.0, "center": 4.0, "widht": 1.0 } });
    match cfg.validate().unwrap_err() {
        Error::Validation { key, .. } => assert!(key.starts_with("scenario.parameters.pulse"), "{key}"),
        e => panic!("unexpected {e:?}"),
    }
}

#[test]
fn runs_are_byte_identical() {
    let cfg = preset(ScenarioName::HocDegenerate);
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ma = run_scenario(&cfg, a.path()).unwrap();
    let mb = run_scenario(&cfg, b.path()).unwrap();
    assert_eq!(ma, mb);
    for f in &ma.files {
        assert_eq!(std::fs::read(a.path().join(&f.name)).unwrap(), std::fs::read(b.path().join(&f.name)).unwrap());
    }
    assert_eq!(std::fs::read(a.path().join("manifest.json")).unwrap(), std::fs::read(b.path().join("manifest.json")).unwrap());
}

#[test]
fn empty_sweep_is_header_only() {
    let t = sweep(&preset(ScenarioName::SlowLight), "ensemble.d", &[], 2).unwrap();
    assert_eq!(String::from_utf8(t.to_csv()).unwrap(), "value,status,error\n");
}

#[test]
fn sweep_keeps_order_and_records_failures() {
    let mut cfg = preset(ScenarioName::SlowLight);
    cfg.grid = SimulationGrid::new(32, 0.5, 60.0);
    cfg.scenario.parameters = serde_json::json!({ "pulse": { "amplitude": 1.0, "center": 15.0, "width": 4.0 } });
    let values = [20.0, -1.0, 10.0, 5.0];
    let t = sweep(&cfg, "ensemble.d", &values, 3).unwrap();
    assert_eq!(t.column("value").unwrap(), values);
    let status: Vec<_> = t.rows.iter().map(|r| r[1].clone()).collect();
    assert_eq!(status, vec!["ok".into(), "error".into(), "ok".into(), "ok".into()]);
    let delay = t.column("delay").unwrap();
    assert!(delay[0] > delay[2] && delay[2] > delay[3]);
    assert!(delay[1].is_nan());
}

#[test]
fn sweep_rejects_unknown_paths() {
    let cfg = preset(ScenarioName::SlowLight);
    assert!(sweep(&cfg, "ensemble.depth", &[1.0], 1).unwrap_err().is_validation());
    assert!(sweep(&cfg, "scenario.parameters.nope", &[1.0], 1).unwrap_err().is_validation());
}

#[test]
fn sweep_writes_integers_for_integral_values() {
    let cfg = preset(ScenarioName::SlowLight);
    let c = with_parameter(&cfg, "grid.n_xi", 64.0).unwrap();
    assert_eq!(c.grid.n_xi, 64);
    let c = with_parameter(&cfg, "scenario.parameters.max_snapshots", 10.0).unwrap();
    assert_eq!(c.scenario.parameters["max_snapshots"], 10);
}

#[test]
fn raman_rate_scales_as_inverse_square_detuning() {
    let cfg = preset(ScenarioName::RamanSlSymmetric);
    let deltas = [30.0, 60.0, 120.0, 240.0];
    let t = sweep(&cfg, "scenario.parameters.delta", &deltas, 4).unwrap();
    let rates = t.column("fitted_uniform_rate").unwrap();
    let x: Vec<f64> = deltas.iter().map(|d| d.ln()).collect();
    let y: Vec<f64> = rates.iter().map(|r| r.ln()).collect();
    let (slope, _) = linear_fit(&x, &y);
    assert!((slope + 2.0).abs() < 0.1, "slope {slope}");
}

#[test]
fn motional_decay_sweep_reduces_leakage() {
    let cfg = preset(ScenarioName::HocDegenerate);
    let t = sweep(&cfg, "ensemble.gamma_motion", &[0.0, 0.05, 0.5, 5.0, 50.0], 4).unwrap();
    let leak = t.column("leaked_fraction").unwrap();
    assert!(leak.windows(2).all(|w| w[1] <= w[0]), "{leak:?}");
}

#[test]
fn worker_count_is_bounded() {
    assert_eq!(worker_count(0), worker_count(1));
    assert!(worker_count(4) >= 1);
}
