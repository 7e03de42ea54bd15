use std::path::Path;
use std::process::{Command, Output};

fn stalight(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stalight")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

const SMALL_SLOW_LIGHT: &str = r#"{
  "grid": { "n_xi": 32, "dt": 0.5, "t_final": 60 },
  "ensemble": { "d": 10 },
  "controls": { "omega_plus": { "points": [[0, 1, 0]] } },
  "scenario": { "name": "slow-light", "parameters": { "pulse": { "amplitude": 1, "center": 15, "width": 4 } } }
}"#;

#[test]
fn presets_list_names_every_scenario() {
    let out = stalight(&["presets", "list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 10);
    assert!(text.contains("bandgap-scan"));
}

#[test]
fn shown_preset_runs() {
    let dir = tempfile::tempdir().unwrap();
    let out = stalight(&["presets", "show", "hoc-degenerate"]);
    assert!(out.status.success());
    let cfg = write(dir.path(), "hoc.json", &String::from_utf8(out.stdout).unwrap());
    let run_dir = dir.path().join("run");
    let out = stalight(&["run", "--config", &cfg, "--out", run_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["hoc_orders.csv", "spinwave.csv", "fields_boundary.csv", "bookkeeping.csv", "manifest.json"] {
        assert!(run_dir.join(f).exists(), "{f}");
    }
}

#[test]
fn run_scan_and_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "slow.json", SMALL_SLOW_LIGHT);
    let out_dir = dir.path().join("out");
    let o = out_dir.to_str().unwrap();
    assert!(stalight(&["run", "--config", &cfg, "--out", o]).status.success());
    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert!(manifest["version"].as_str().unwrap().starts_with('v'));
    assert!(manifest["metrics"]["delay"].as_f64().unwrap() > 0.0);

    let scan_dir = dir.path().join("scan");
    assert!(stalight(&["scan", "--config", &cfg, "--out", scan_dir.to_str().unwrap()]).status.success());
    assert!(scan_dir.join("spectrum.csv").exists());

    let sweep_dir = dir.path().join("sweep");
    let out = stalight(&["sweep", "--config", &cfg, "--param", "ensemble.d", "--values", "5,10,-1", "--jobs", "2", "--out", sweep_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(sweep_dir.join("sweep.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[1].starts_with("5,ok"));
    assert!(rows[3].starts_with("-1,error"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().join("o");
    let o = o.to_str().unwrap();

    let bad = write(dir.path(), "bad.json", r#"{ "ensemble": { "d": 10, "depth": 3 } }"#);
    let out = stalight(&["run", "--config", &bad, "--out", o]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("depth"));

    let raman = write(
        dir.path(),
        "raman.json",
        r#"{ "ensemble": { "d": 100 },
             "controls": { "omega_plus": { "points": [[0, 1, 0]] }, "omega_minus": { "points": [[0, 1, 0]] },
                           "delta_plus": 50, "delta_minus": -30 },
             "scenario": { "name": "raman-sl-symmetric" } }"#,
    );
    assert_eq!(stalight(&["run", "--config", &raman, "--out", o]).status.code(), Some(2));

    let cfg = write(dir.path(), "slow.json", SMALL_SLOW_LIGHT);
    let out = stalight(&["sweep", "--config", &cfg, "--param", "ensemble.d", "--values", "1,x", "--out", o]);
    assert_eq!(out.status.code(), Some(2));

    let missing = dir.path().join("missing.json");
    assert_eq!(stalight(&["run", "--config", missing.to_str().unwrap(), "--out", o]).status.code(), Some(1));
}

#[test]
fn identical_invocations_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "slow.json", SMALL_SLOW_LIGHT);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        assert!(stalight(&["run", "--config", &cfg, "--out", d.to_str().unwrap()]).status.success());
    }
    for f in std::fs::read_dir(&a).unwrap() {
        let name = f.unwrap().file_name();
        assert_eq!(std::fs::read(a.join(&name)).unwrap(), std::fs::read(b.join(&name)).unwrap());
    }
}
