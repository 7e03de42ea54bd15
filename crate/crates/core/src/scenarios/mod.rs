//! Named scenario pipelines, presets, parameter sweeps and output files.

pub mod output;
mod params;
mod presets;
mod protocols;

use std::path::Path;

use serde_json::Value;

pub use output::{Artifact, Manifest, Table};
pub use params::*;
pub use presets::{describe, preset};
pub use protocols::{storage_control, Metrics, Outcome};

use crate::config::ScenarioName;
use crate::{parse_config, Config, Error, Result};

/// Scenario-specific checks run as part of config validation.
pub fn check_parameters(cfg: &Config) -> Result<()> {
    match ScenarioParams::resolve(cfg.scenario.name, &cfg.scenario.parameters)? {
        ScenarioParams::Raman(p) => protocols::check_raman(cfg, &p),
        _ => Ok(()),
    }
}

/// Runs the scenario named in `cfg` without writing anything.
pub fn evaluate(cfg: &Config) -> Result<Outcome> {
    use ScenarioName::*;
    let name = cfg.scenario.name;
    let params = ScenarioParams::resolve(name, &cfg.scenario.parameters)?;
    let result = match (name, params) {
        (_, ScenarioParams::SlowLight(p)) => protocols::slow_light(cfg, &p),
        (_, ScenarioParams::StoredLight(p)) => protocols::stored_light(cfg, &p),
        (_, ScenarioParams::EitSl(p)) => protocols::eit_sl(cfg, &p),
        (RamanSlAntisymmetric, ScenarioParams::Raman(p)) => protocols::raman_sl(cfg, &p, true),
        (_, ScenarioParams::Raman(p)) => protocols::raman_sl(cfg, &p, false),
        (_, ScenarioParams::Hoc(p)) => protocols::hoc_degenerate(cfg, &p),
        (_, ScenarioParams::Bandgap(p)) => protocols::bandgap_scan(cfg, &p),
        (_, ScenarioParams::WidthScan(p)) => protocols::eit_width_scan(cfg, &p),
        (_, ScenarioParams::Mismatch(p)) => protocols::mismatch_sweep(cfg, &p),
    };
    result.map_err(|e| e.with_context(format!("scenario {name}")))
}

/// Runs the scenario and writes its files and manifest into `out_dir`.
pub fn run_scenario(cfg: &Config, out_dir: &Path) -> Result<Manifest> {
    let outcome = evaluate(cfg)?;
    output::write_outputs(out_dir, cfg.scenario.name.as_str(), cfg.to_value(), &outcome.artifacts, &outcome.metrics)
}

/// Writes the steady-state spectrum of the configured controls.
pub fn scan(cfg: &Config, out_dir: &Path) -> Result<Manifest> {
    let outcome = protocols::scan(cfg).map_err(|e| e.with_context("scan"))?;
    output::write_outputs(out_dir, cfg.scenario.name.as_str(), cfg.to_value(), &outcome.artifacts, &outcome.metrics)
}

/// Returns `cfg` with the value at the dotted `path` replaced.
pub fn with_parameter(cfg: &Config, path: &str, value: f64) -> Result<Config> {
    let mut doc = cfg.to_value();
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(Error::validation(path, "malformed parameter path"));
    }
    let under_params = keys.len() > 2 && keys[0] == "scenario" && keys[1] == "parameters";
    let known = doc.pointer(&pointer(&keys)).is_some()
        || (under_params && ScenarioParams::defaults(cfg.scenario.name).pointer(&pointer(&keys[2..])).is_some());
    if !known {
        return Err(Error::validation(path, "no such parameter"));
    }
    let json_value = if value.fract() == 0.0 && value.abs() < 9e15 {
        Value::from(value as i64)
    } else {
        serde_json::Number::from_f64(value)
            .map(Value::Number)
            .ok_or_else(|| Error::validation(path, "sweep values must be finite"))?
    };
    let mut node = &mut doc;
    for k in &keys[..keys.len() - 1] {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| Error::validation(path, format!("`{k}` is not an object")))?;
        node = obj.entry(k.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    node.as_object_mut()
        .ok_or_else(|| Error::validation(path, "parent is not an object"))?
        .insert(keys[keys.len() - 1].to_string(), json_value);
    parse_config(&doc.to_string())
}

fn pointer(keys: &[&str]) -> String {
    keys.iter().map(|k| format!("/{k}")).collect()
}

/// Worker count for sweeps: the request, capped by `STALIGHT_THREADS`.
pub fn worker_count(jobs: usize) -> usize {
    let cap = std::env::var("STALIGHT_THREADS").ok().and_then(|v| v.parse::<usize>().ok()).filter(|v| *v > 0);
    let jobs = jobs.max(1);
    cap.map_or(jobs, |c| jobs.min(c))
}

fn sweep_point(cfg: &Config, path: &str, value: f64) -> Result<Metrics> {
    let point = with_parameter(cfg, path, value)?;
    Ok(evaluate(&point)?.metrics)
}

#[cfg(feature = "parallel")]
fn map_points(cfg: &Config, path: &str, values: &[f64], jobs: usize) -> Vec<Result<Metrics>> {
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(worker_count(jobs)).build();
    match pool {
        Ok(pool) => pool.install(|| values.par_iter().map(|v| sweep_point(cfg, path, *v)).collect()),
        Err(_) => values.iter().map(|v| sweep_point(cfg, path, *v)).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
fn map_points(cfg: &Config, path: &str, values: &[f64], _jobs: usize) -> Vec<Result<Metrics>> {
    values.iter().map(|v| sweep_point(cfg, path, *v)).collect()
}

/// Runs the scenario once per value of the parameter at `path`. Rows keep
/// the order of `values`; a failing point becomes a row tagged `error`.
pub fn sweep(cfg: &Config, path: &str, values: &[f64], jobs: usize) -> Result<Table> {
    // reject bad paths up front rather than once per row
    if let Some(v) = values.first() {
        with_parameter(cfg, path, *v).map(|_| ()).or_else(|e| match e.root() {
            Error::Validation { key, .. } if key == path => Err(e),
            _ => Ok(()),
        })?;
    }
    let results = map_points(cfg, path, values, jobs);
    let mut keys: Vec<String> = results.iter().flatten().flat_map(|m| m.keys().cloned()).collect();
    keys.sort();
    keys.dedup();
    let mut table = Table::new(["value".to_string(), "status".to_string(), "error".to_string()].into_iter().chain(keys.iter().cloned()));
    for (v, r) in values.iter().zip(results) {
        let mut row: Vec<output::Cell> = vec![(*v).into()];
        match r {
            Ok(m) => {
                row.push("ok".into());
                row.push("".into());
                row.extend(keys.iter().map(|k| m.get(k).copied().unwrap_or(f64::NAN).into()));
            }
            Err(e) => {
                row.push("error".into());
                row.push(e.to_string().into());
                row.extend(keys.iter().map(|_| f64::NAN.into()));
            }
        }
        table.push(row);
    }
    Ok(table)
}

/// Runs [`sweep`] and writes `sweep.csv` plus a manifest into `out_dir`.
pub fn run_sweep(cfg: &Config, path: &str, values: &[f64], jobs: usize, out_dir: &Path) -> Result<Manifest> {
    let table = sweep(cfg, path, values, jobs)?;
    let mut config = cfg.to_value();
    if let Value::Object(m) = &mut config {
        m.insert("sweep".into(), serde_json::json!({ "param": path, "values": values }));
    }
    output::write_outputs(
        out_dir,
        cfg.scenario.name.as_str(),
        config,
        &[Artifact::csv("sweep.csv", &table)],
        &Default::default(),
    )
}

#[cfg(test)]
mod tests;
