//! Configuration model and the JSON document schema.
//!
//! All quantities are dimensionless: rates and detunings are in units of the
//! excited-state decay Γ (so Γ = 1), times in 1/Γ, and position is the
//! density-normalised coordinate ξ ∈ [0, 1].

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::{Error, Result};

/// Excited-state decay rate. Everything else is measured against it.
pub const GAMMA_E: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    /// Optical depth d = g²NL/(Γc).
    pub d: f64,
    /// Spinwave dephasing rate.
    #[serde(default)]
    pub gamma: f64,
    /// Motional decay scale of the higher-order coherences.
    #[serde(default)]
    pub gamma_motion: f64,
    /// L/(cT) for the shortest timescale of interest; must be small.
    #[serde(default, rename = "l_over_c_check")]
    pub l_over_c_check: f64,
}

impl EnsembleConfig {
    pub fn new(d: f64, gamma: f64) -> Self {
        Self {
            d,
            gamma,
            gamma_motion: 0.0,
            l_over_c_check: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d > 0.0 && self.d.is_finite()) {
            return Err(Error::range("ensemble.d", format!("must be > 0, got {}", self.d)));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::range("ensemble.gamma", "must be finite and >= 0"));
        }
        if !(self.gamma_motion >= 0.0 && self.gamma_motion.is_finite()) {
            return Err(Error::range("ensemble.gamma_motion", "must be finite and >= 0"));
        }
        if !(0.0..0.1).contains(&self.l_over_c_check) {
            return Err(Error::range(
                "ensemble.l_over_c_check",
                "short-medium limit requires 0 <= L/(cT) < 0.1",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationGrid {
    #[serde(default = "default_n_xi")]
    pub n_xi: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_t_final")]
    pub t_final: f64,
}

fn default_n_xi() -> usize {
    256
}
fn default_dt() -> f64 {
    0.05
}
fn default_t_final() -> f64 {
    100.0
}

impl Default for SimulationGrid {
    fn default() -> Self {
        Self {
            n_xi: default_n_xi(),
            dt: default_dt(),
            t_final: default_t_final(),
        }
    }
}

impl SimulationGrid {
    pub fn new(n_xi: usize, dt: f64, t_final: f64) -> Self {
        Self { n_xi, dt, t_final }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_xi < 16 {
            return Err(Error::range("grid.n_xi", format!("must be >= 16, got {}", self.n_xi)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::range("grid.dt", format!("must be > 0, got {}", self.dt)));
        }
        if !(self.t_final >= self.dt && self.t_final.is_finite()) {
            return Err(Error::range("grid.t_final", "must be finite and >= grid.dt"));
        }
        Ok(())
    }

    pub fn h(&self) -> f64 {
        1.0 / (self.n_xi - 1) as f64
    }

    pub fn xi(&self) -> Vec<f64> {
        crate::numerics::xi_nodes(self.n_xi)
    }

    /// Number of whole steps of size `dt` that fit in `t_final`.
    pub fn steps(&self) -> usize {
        ((self.t_final / self.dt) * (1.0 + 1e-12)).floor() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Interp {
    #[serde(rename = "piecewise-constant")]
    Constant,
    #[serde(rename = "piecewise-linear")]
    Linear,
}

/// A complex function of time given by breakpoints `[t, re, im]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "WaveformRepr", into = "WaveformObject")]
pub struct Waveform {
    pub interp: Interp,
    pub points: Vec<[f64; 3]>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum WaveformRepr {
    Constant(f64),
    Points(Vec<[f64; 3]>),
    Object(WaveformObject),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WaveformObject {
    #[serde(default = "default_interp")]
    interp: Interp,
    points: Vec<[f64; 3]>,
}

fn default_interp() -> Interp {
    Interp::Linear
}

impl From<WaveformRepr> for Waveform {
    fn from(r: WaveformRepr) -> Self {
        match r {
            WaveformRepr::Constant(v) => Waveform::constant(C64::new(v, 0.0)),
            WaveformRepr::Points(points) => Waveform {
                interp: Interp::Linear,
                points,
            },
            WaveformRepr::Object(o) => Waveform {
                interp: o.interp,
                points: o.points,
            },
        }
    }
}

impl From<Waveform> for WaveformObject {
    fn from(w: Waveform) -> Self {
        WaveformObject {
            interp: w.interp,
            points: w.points,
        }
    }
}

impl Default for Waveform {
    fn default() -> Self {
        Waveform::constant(C64::new(0.0, 0.0))
    }
}

impl Waveform {
    pub fn constant(value: C64) -> Self {
        Waveform {
            interp: Interp::Constant,
            points: vec![[0.0, value.re, value.im]],
        }
    }

    pub fn linear(points: Vec<[f64; 3]>) -> Self {
        Waveform {
            interp: Interp::Linear,
            points,
        }
    }

    pub fn at(&self, t: f64) -> C64 {
        let pts = &self.points;
        if pts.is_empty() {
            return C64::new(0.0, 0.0);
        }
        let val = |p: &[f64; 3]| C64::new(p[1], p[2]);
        if t <= pts[0][0] {
            return val(&pts[0]);
        }
        // index of the last breakpoint at or before t
        let k = pts.partition_point(|p| p[0] <= t) - 1;
        if k + 1 == pts.len() {
            return val(&pts[k]);
        }
        match self.interp {
            Interp::Constant => val(&pts[k]),
            Interp::Linear => {
                let (a, b) = (&pts[k], &pts[k + 1]);
                let span = b[0] - a[0];
                if span <= 0.0 {
                    return val(b);
                }
                let s = (t - a[0]) / span;
                val(a) * (1.0 - s) + val(b) * s
            }
        }
    }

    /// True when every breakpoint carries the same value.
    pub fn is_constant(&self) -> bool {
        self.points.windows(2).all(|w| w[0][1] == w[1][1] && w[0][2] == w[1][2])
    }

    pub fn max_abs(&self) -> f64 {
        self.points
            .iter()
            .map(|p| C64::new(p[1], p[2]).norm())
            .fold(0.0, f64::max)
    }

    fn validate(&self, key: &str) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::validation(key, "needs at least one breakpoint"));
        }
        for (i, p) in self.points.iter().enumerate() {
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::range(format!("{key}.points[{i}]"), "non-finite value"));
            }
            if i > 0 && p[0] < self.points[i - 1][0] {
                return Err(Error::range(
                    format!("{key}.points[{i}]"),
                    "breakpoint times must be non-decreasing",
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ControlSchedule {
    #[serde(default)]
    pub omega_plus: Waveform,
    #[serde(default)]
    pub omega_minus: Waveform,
    #[serde(default)]
    pub delta_plus: f64,
    #[serde(default)]
    pub delta_minus: f64,
    #[serde(default)]
    pub two_photon_delta: f64,
    /// Residual phase mismatch: total spatial phase accumulated by the
    /// backward coupling across the medium (radians per unit ξ).
    #[serde(default)]
    pub mismatch: f64,
}

/// Controls frozen at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlValues {
    pub omega_plus: C64,
    pub omega_minus: C64,
    pub delta_plus: f64,
    pub delta_minus: f64,
    pub two_photon_delta: f64,
    pub mismatch: f64,
}

impl ControlValues {
    /// Backward coupling at position ξ, carrying the mismatch phase.
    pub fn omega_minus_at(&self, xi: f64) -> C64 {
        if self.mismatch == 0.0 {
            self.omega_minus
        } else {
            self.omega_minus * C64::from_polar(1.0, self.mismatch * xi)
        }
    }

    pub fn max_rate(&self) -> f64 {
        [
            GAMMA_E,
            self.delta_plus.abs(),
            self.delta_minus.abs(),
            self.omega_plus.norm(),
            self.omega_minus.norm(),
            self.two_photon_delta.abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

impl ControlSchedule {
    /// Time-independent controls.
    pub fn constant(omega_plus: C64, omega_minus: C64, delta_plus: f64, delta_minus: f64) -> Self {
        Self {
            omega_plus: Waveform::constant(omega_plus),
            omega_minus: Waveform::constant(omega_minus),
            delta_plus,
            delta_minus,
            two_photon_delta: 0.0,
            mismatch: 0.0,
        }
    }

    pub fn at(&self, t: f64) -> ControlValues {
        ControlValues {
            omega_plus: self.omega_plus.at(t),
            omega_minus: self.omega_minus.at(t),
            delta_plus: self.delta_plus,
            delta_minus: self.delta_minus,
            two_photon_delta: self.two_photon_delta,
            mismatch: self.mismatch,
        }
    }

    /// Largest rate appearing anywhere in the schedule.
    pub fn max_rate(&self) -> f64 {
        [
            GAMMA_E,
            self.delta_plus.abs(),
            self.delta_minus.abs(),
            self.two_photon_delta.abs(),
            self.omega_plus.max_abs(),
            self.omega_minus.max_abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        self.omega_plus.validate("controls.omega_plus")?;
        self.omega_minus.validate("controls.omega_minus")?;
        for (key, v) in [
            ("controls.delta_plus", self.delta_plus),
            ("controls.delta_minus", self.delta_minus),
            ("controls.two_photon_delta", self.two_photon_delta),
            ("controls.mismatch", self.mismatch),
        ] {
            if !v.is_finite() {
                return Err(Error::range(key, "must be finite"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioName {
    SlowLight,
    StoredLight,
    EitSlSingleColour,
    EitSlTwoColour,
    RamanSlAntisymmetric,
    RamanSlSymmetric,
    HocDegenerate,
    BandgapScan,
    EitWidthScan,
    MismatchSweep,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 10] = [
        ScenarioName::SlowLight,
        ScenarioName::StoredLight,
        ScenarioName::EitSlSingleColour,
        ScenarioName::EitSlTwoColour,
        ScenarioName::RamanSlAntisymmetric,
        ScenarioName::RamanSlSymmetric,
        ScenarioName::HocDegenerate,
        ScenarioName::BandgapScan,
        ScenarioName::EitWidthScan,
        ScenarioName::MismatchSweep,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioName::SlowLight => "slow-light",
            ScenarioName::StoredLight => "stored-light",
            ScenarioName::EitSlSingleColour => "eit-sl-single-colour",
            ScenarioName::EitSlTwoColour => "eit-sl-two-colour",
            ScenarioName::RamanSlAntisymmetric => "raman-sl-antisymmetric",
            ScenarioName::RamanSlSymmetric => "raman-sl-symmetric",
            ScenarioName::HocDegenerate => "hoc-degenerate",
            ScenarioName::BandgapScan => "bandgap-scan",
            ScenarioName::EitWidthScan => "eit-width-scan",
            ScenarioName::MismatchSweep => "mismatch-sweep",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|n| n.as_str() == s).ok_or_else(|| {
            let names: Vec<&str> = Self::ALL.iter().map(|n| n.as_str()).collect();
            Error::validation(
                "scenario.name",
                format!("unknown scenario `{s}`; supported: {}", names.join(", ")),
            )
        })
    }
}

impl std::fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioDescriptor {
    pub name: ScenarioName,
    /// Overrides of the scenario's parameter defaults.
    pub parameters: Value,
}

impl Default for ScenarioDescriptor {
    fn default() -> Self {
        Self {
            name: ScenarioName::SlowLight,
            parameters: Value::Object(Default::default()),
        }
    }
}

/// A complete, validated simulation configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Config {
    pub grid: SimulationGrid,
    pub ensemble: EnsembleConfig,
    pub controls: ControlSchedule,
    pub scenario: ScenarioDescriptor,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    grid: SimulationGrid,
    ensemble: EnsembleConfig,
    #[serde(default)]
    controls: ControlSchedule,
    #[serde(default)]
    scenario: Option<RawScenario>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: String,
    #[serde(default)]
    parameters: Option<Value>,
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<Config> {
    let mut de = serde_json::Deserializer::from_str(text);
    let raw: RawConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let key = if path == "." { String::from("<document>") } else { path };
        Error::validation(key, inner.to_string())
    })?;
    let scenario = match raw.scenario {
        None => ScenarioDescriptor::default(),
        Some(s) => {
            let name = ScenarioName::parse(&s.name)?;
            let parameters = s.parameters.unwrap_or(Value::Object(Default::default()));
            if !parameters.is_object() {
                return Err(Error::validation("scenario.parameters", "must be an object"));
            }
            ScenarioDescriptor { name, parameters }
        }
    };
    let cfg = Config {
        grid: raw.grid,
        ensemble: raw.ensemble,
        controls: raw.controls,
        scenario,
    };
    cfg.validate()?;
    Ok(cfg)
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.ensemble.validate()?;
        self.controls.validate()?;
        crate::scenarios::check_parameters(self)?;
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("config serialises")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_document_takes_defaults() {
        let cfg = parse_config(r#"{"ensemble": {"d": 100}}"#).unwrap();
        assert_eq!(cfg.ensemble.d, 100.0);
        assert_eq!(cfg.ensemble.gamma, 0.0);
        assert_eq!(cfg.grid, SimulationGrid::default());
        assert_eq!(cfg.controls, ControlSchedule::default());
        assert_eq!(cfg.scenario.name, ScenarioName::SlowLight);
    }

    #[test]
    fn zero_dt_is_a_range_error_on_grid_dt() {
        let err = parse_config(r#"{"grid": {"dt": 0}, "ensemble": {"d": 100}}"#).unwrap_err();
        match err {
            Error::Range { key, .. } => assert_eq!(key, "grid.dt"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_scenario_lists_supported_names() {
        let err = parse_config(r#"{"ensemble": {"d": 1}, "scenario": {"name": "warp-drive"}}"#)
            .unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Validation { .. }));
        for name in ScenarioName::ALL {
            assert!(msg.contains(name.as_str()), "{msg}");
        }
    }

    #[test]
    fn unknown_key_names_its_path() {
        let err = parse_config(r#"{"ensemble": {"d": 1, "opacity": 3}}"#).unwrap_err();
        match err {
            Error::Validation { key, .. } => assert!(key.starts_with("ensemble"), "{key}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_optical_depth_is_a_validation_error() {
        assert!(parse_config(r#"{"grid": {}}"#).unwrap_err().is_validation());
    }

    #[test]
    fn negative_gamma_is_a_range_error() {
        let err = parse_config(r#"{"ensemble": {"d": 1, "gamma": -0.1}}"#).unwrap_err();
        assert!(matches!(err, Error::Range { ref key, .. } if key == "ensemble.gamma"));
    }

    #[test]
    fn waveform_forms() {
        let cfg = parse_config(
            r#"{"ensemble": {"d": 10}, "controls": {
                "omega_plus": 2.0,
                "omega_minus": [[0, 0, 0], [10, 1, 1]],
                "delta_plus": 1.5
            }}"#,
        )
        .unwrap();
        assert_eq!(cfg.controls.omega_plus.at(123.0), C64::new(2.0, 0.0));
        assert_eq!(cfg.controls.omega_minus.at(5.0), C64::new(0.5, 0.5));
        assert_eq!(cfg.controls.omega_minus.at(-1.0), C64::new(0.0, 0.0));
        assert_eq!(cfg.controls.omega_minus.at(11.0), C64::new(1.0, 1.0));
    }

    #[test]
    fn piecewise_constant_holds_until_next_breakpoint() {
        let w = Waveform {
            interp: Interp::Constant,
            points: vec![[0.0, 1.0, 0.0], [5.0, 0.0, 0.0], [8.0, 2.0, 0.0]],
        };
        assert_eq!(w.at(4.999).re, 1.0);
        assert_eq!(w.at(5.0).re, 0.0);
        assert_eq!(w.at(7.0).re, 0.0);
        assert_eq!(w.at(9.0).re, 2.0);
    }

    #[test]
    fn decreasing_breakpoints_are_rejected() {
        let err = parse_config(
            r#"{"ensemble": {"d": 10}, "controls": {"omega_plus": [[1, 0, 0], [0, 1, 0]]}}"#,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Range { .. }));
    }

    #[test]
    fn round_trip() {
        let cfg = parse_config(
            r#"{"grid": {"n_xi": 64, "dt": 0.1, "t_final": 3},
                "ensemble": {"d": 50, "gamma": 0.001},
                "controls": {"omega_plus": {"interp": "piecewise-constant", "points": [[0, 1, 0.5]]},
                             "mismatch": 0.25},
                "scenario": {"name": "bandgap-scan", "parameters": {}}}"#,
        )
        .unwrap();
        let again = parse_config(&cfg.to_json()).unwrap();
        assert_eq!(cfg, again);
    }
}
