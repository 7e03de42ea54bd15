//! Typed scenario parameters. Every field has a default so a scenario runs
//! from its name alone; the `parameters` object in a config overrides them.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::ScenarioName;
use crate::{Error, Result};

/// Gaussian input probe in time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pulse {
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
}

impl Pulse {
    fn check(&self, key: &str) -> Result<()> {
        if !(self.width > 0.0 && self.width.is_finite()) {
            return Err(Error::range(format!("{key}.width"), "must be > 0"));
        }
        if !(self.amplitude.is_finite() && self.center.is_finite()) {
            return Err(Error::range(key, "must be finite"));
        }
        Ok(())
    }
}

/// A stored spinwave placed directly in the medium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoredSpinwave {
    pub center: f64,
    pub width: f64,
}

impl StoredSpinwave {
    fn check(&self, key: &str) -> Result<()> {
        if !(0.0..=1.0).contains(&self.center) {
            return Err(Error::range(format!("{key}.center"), "must lie in [0, 1]"));
        }
        if !(self.width > 0.0 && self.width.is_finite()) {
            return Err(Error::range(format!("{key}.width"), "must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SlowLightParams {
    pub pulse: Pulse,
    /// Upper bound on the number of spinwave snapshots written.
    pub max_snapshots: usize,
}

impl Default for SlowLightParams {
    fn default() -> Self {
        Self {
            pulse: Pulse {
                amplitude: 1.0,
                center: 40.0,
                width: 12.0,
            },
            max_snapshots: 120,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StoredLightParams {
    pub omega: f64,
    pub pulse: Pulse,
    /// Time at which the control starts to switch off.
    pub store_at: f64,
    /// Dark time between switch-off and switch-on ramps.
    pub hold: f64,
    pub ramp: f64,
    pub max_snapshots: usize,
}

impl Default for StoredLightParams {
    fn default() -> Self {
        Self {
            omega: 1.0,
            pulse: Pulse {
                amplitude: 1.0,
                center: 40.0,
                width: 12.0,
            },
            store_at: 100.0,
            hold: 20.0,
            ramp: 2.0,
            max_snapshots: 120,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EitSlParams {
    pub omega: f64,
    pub pulse: Pulse,
    pub store_at: f64,
    /// Both controls on for this long after the switch-off ramp.
    pub sl_duration: f64,
    pub ramp: f64,
    pub max_snapshots: usize,
}

impl Default for EitSlParams {
    fn default() -> Self {
        Self {
            omega: 1.0,
            pulse: Pulse {
                amplitude: 1.0,
                center: 40.0,
                width: 12.0,
            },
            store_at: 100.0,
            sl_duration: 20.0,
            ramp: 2.0,
            max_snapshots: 120,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RamanEngine {
    /// The reduced integral model; requires Δ₊ = −Δ₋ and equal drives.
    Raman,
    /// The full secular equations with whatever controls are configured.
    Mbe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RamanParams {
    pub engine: RamanEngine,
    /// Sets Δ₊ = delta and Δ₋ = −delta, overriding the controls.
    pub delta: Option<f64>,
    /// Sets both control amplitudes, overriding the controls.
    pub omega: Option<f64>,
    /// Lobe centres of the initial double-Gaussian spinwave.
    pub lobes: [f64; 2],
    pub width: f64,
    pub samples: usize,
}

impl Default for RamanParams {
    fn default() -> Self {
        Self {
            engine: RamanEngine::Raman,
            delta: None,
            omega: None,
            lobes: [0.3, 0.7],
            width: 0.07,
            samples: 201,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HocParams {
    pub omega: f64,
    pub spinwave: StoredSpinwave,
    pub n_max: usize,
    pub exponent: u32,
    /// Also run at n_max + 1 and report the truncation difference.
    pub truncation_check: bool,
}

impl Default for HocParams {
    fn default() -> Self {
        Self {
            omega: 1.0,
            spinwave: StoredSpinwave {
                center: 0.5,
                width: 0.1,
            },
            n_max: crate::hoc::DEFAULT_N_MAX,
            exponent: 2,
            truncation_check: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BandgapParams {
    /// Detuning grid covers [−span, span].
    pub span: f64,
    pub points: usize,
    /// T(0) below this counts as an open gap.
    pub gap_threshold: f64,
    /// Detunings at which the time-domain tone check runs.
    pub tone_detunings: Vec<f64>,
    pub tone_ramp: f64,
    /// |output/input|² is averaged over t ≥ this time.
    pub tone_average_from: f64,
}

impl Default for BandgapParams {
    fn default() -> Self {
        Self {
            span: 200.0,
            points: 2001,
            gap_threshold: 0.01,
            tone_detunings: vec![],
            tone_ramp: 4.0,
            tone_average_from: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WidthScanParams {
    /// Forward control amplitudes; the first two give the power ratio.
    pub omegas: Vec<f64>,
    /// Optical depths; the first two give the depth ratio.
    pub depths: Vec<f64>,
    pub points: usize,
}

impl Default for WidthScanParams {
    fn default() -> Self {
        Self {
            omegas: vec![1.0, std::f64::consts::SQRT_2],
            depths: vec![100.0, 400.0],
            points: 4001,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MismatchModel {
    Eit,
    Raman,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MismatchParams {
    pub model: MismatchModel,
    pub values: Vec<f64>,
    pub omega: f64,
    /// Raman detuning Δ (Δ₊ = Δ, Δ₋ = −Δ); unused by the EIT model.
    pub delta: f64,
    /// EIT: stored Gaussian. Raman: centre of the lobe pair and lobe width.
    pub spinwave: StoredSpinwave,
    /// Raman only: distance between the two antiphase lobes.
    pub lobe_separation: f64,
    /// EIT only: excitation is counted from this time, after the
    /// switch-on transient.
    pub settle: f64,
}

impl Default for MismatchParams {
    fn default() -> Self {
        Self {
            model: MismatchModel::Eit,
            values: vec![-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0],
            omega: 1.0,
            delta: 50.0,
            spinwave: StoredSpinwave {
                center: 0.5,
                width: 0.1,
            },
            lobe_separation: 0.4,
            settle: 5.0,
        }
    }
}

/// Parameters of one scenario after defaults and overrides are merged.
#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioParams {
    SlowLight(SlowLightParams),
    StoredLight(StoredLightParams),
    EitSl(EitSlParams),
    Raman(RamanParams),
    Hoc(HocParams),
    Bandgap(BandgapParams),
    WidthScan(WidthScanParams),
    Mismatch(MismatchParams),
}

fn parse<T: DeserializeOwned>(v: &Value) -> Result<T> {
    serde_path_to_error::deserialize(v.clone()).map_err(|e| {
        let path = e.path().to_string();
        let key = if path == "." {
            "scenario.parameters".to_string()
        } else {
            format!("scenario.parameters.{path}")
        };
        Error::validation(key, e.into_inner().to_string())
    })
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::range(format!("scenario.parameters.{key}"), format!("must be > 0, got {v}")))
    }
}

fn non_negative(key: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::range(format!("scenario.parameters.{key}"), format!("must be >= 0, got {v}")))
    }
}

impl ScenarioParams {
    /// Merges `overrides` into the defaults of `name` and checks ranges.
    pub fn resolve(name: ScenarioName, overrides: &Value) -> Result<Self> {
        use ScenarioName::*;
        let p = match name {
            SlowLight => {
                let p: SlowLightParams = parse(overrides)?;
                p.pulse.check("scenario.parameters.pulse")?;
                ScenarioParams::SlowLight(p)
            }
            StoredLight => {
                let p: StoredLightParams = parse(overrides)?;
                p.pulse.check("scenario.parameters.pulse")?;
                positive("omega", p.omega)?;
                non_negative("hold", p.hold)?;
                positive("ramp", p.ramp)?;
                positive("store_at", p.store_at)?;
                ScenarioParams::StoredLight(p)
            }
            EitSlSingleColour | EitSlTwoColour => {
                let p: EitSlParams = parse(overrides)?;
                p.pulse.check("scenario.parameters.pulse")?;
                positive("omega", p.omega)?;
                non_negative("sl_duration", p.sl_duration)?;
                positive("ramp", p.ramp)?;
                positive("store_at", p.store_at)?;
                ScenarioParams::EitSl(p)
            }
            RamanSlAntisymmetric | RamanSlSymmetric => {
                let p: RamanParams = parse(overrides)?;
                if let Some(d) = p.delta {
                    if !d.is_finite() {
                        return Err(Error::range("scenario.parameters.delta", "must be finite"));
                    }
                }
                if let Some(o) = p.omega {
                    non_negative("omega", o)?;
                }
                positive("width", p.width)?;
                if p.samples < 2 {
                    return Err(Error::range("scenario.parameters.samples", "must be >= 2"));
                }
                ScenarioParams::Raman(p)
            }
            HocDegenerate => {
                let p: HocParams = parse(overrides)?;
                positive("omega", p.omega)?;
                p.spinwave.check("scenario.parameters.spinwave")?;
                if p.n_max == 0 {
                    return Err(Error::range("scenario.parameters.n_max", "must be >= 1"));
                }
                if !matches!(p.exponent, 1 | 2) {
                    return Err(Error::range("scenario.parameters.exponent", "must be 1 or 2"));
                }
                ScenarioParams::Hoc(p)
            }
            BandgapScan => {
                let p: BandgapParams = parse(overrides)?;
                positive("span", p.span)?;
                if p.points < 3 {
                    return Err(Error::range("scenario.parameters.points", "must be >= 3"));
                }
                non_negative("gap_threshold", p.gap_threshold)?;
                non_negative("tone_ramp", p.tone_ramp)?;
                non_negative("tone_average_from", p.tone_average_from)?;
                ScenarioParams::Bandgap(p)
            }
            EitWidthScan => {
                let p: WidthScanParams = parse(overrides)?;
                if p.omegas.is_empty() || p.depths.is_empty() {
                    return Err(Error::range("scenario.parameters", "omegas and depths must be non-empty"));
                }
                for o in &p.omegas {
                    positive("omegas", *o)?;
                }
                for d in &p.depths {
                    positive("depths", *d)?;
                }
                if p.points < 3 {
                    return Err(Error::range("scenario.parameters.points", "must be >= 3"));
                }
                ScenarioParams::WidthScan(p)
            }
            MismatchSweep => {
                let p: MismatchParams = parse(overrides)?;
                positive("omega", p.omega)?;
                p.spinwave.check("scenario.parameters.spinwave")?;
                non_negative("settle", p.settle)?;
                non_negative("lobe_separation", p.lobe_separation)?;
                if p.values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::range("scenario.parameters.values", "must be finite"));
                }
                if p.model == MismatchModel::Raman {
                    positive("delta", p.delta.abs())?;
                }
                ScenarioParams::Mismatch(p)
            }
        };
        Ok(p)
    }

    /// Parameter keys accepted by a scenario, with their default values.
    pub fn defaults(name: ScenarioName) -> Value {
        use ScenarioName::*;
        let v = match name {
            SlowLight => serde_json::to_value(SlowLightParams::default()),
            StoredLight => serde_json::to_value(StoredLightParams::default()),
            EitSlSingleColour | EitSlTwoColour => serde_json::to_value(EitSlParams::default()),
            RamanSlAntisymmetric | RamanSlSymmetric => serde_json::to_value(RamanParams::default()),
            HocDegenerate => serde_json::to_value(HocParams::default()),
            BandgapScan => serde_json::to_value(BandgapParams::default()),
            EitWidthScan => serde_json::to_value(WidthScanParams::default()),
            MismatchSweep => serde_json::to_value(MismatchParams::default()),
        };
        v.expect("parameter defaults serialise")
    }
}
