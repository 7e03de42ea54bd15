//! Ready-to-run configurations, one per scenario. Durations are round
//! numbers in units of 1/Γ; for a Γ/2π ≈ 6 MHz alkali line 1 µs is about
//! 36/Γ, which is context only.

use serde_json::{json, Value};

use crate::config::{ControlSchedule, EnsembleConfig, ScenarioDescriptor, ScenarioName, SimulationGrid};
use crate::{Config, C64};

pub fn describe(name: ScenarioName) -> &'static str {
    use ScenarioName::*;
    match name {
        SlowLight => "EIT slow light: Gaussian probe through the medium with a forward control",
        StoredLight => "EIT storage: write, dark hold, forward recall",
        EitSlSingleColour => "write, stationary-light hold with equal controls, forward recall",
        EitSlTwoColour => "as eit-sl-single-colour with opposite one-photon detunings on the two pairs",
        RamanSlAntisymmetric => "far-detuned Raman SL from a zero-mean (opposite-phase) spinwave",
        RamanSlSymmetric => "far-detuned Raman SL from an in-phase spinwave; the mean leaks out",
        HocDegenerate => "standing-wave controls on a stored spinwave with the coherence ladder",
        BandgapScan => "steady-state transmission and reflection spectra of the SL medium",
        EitWidthScan => "EIT window width against control power and optical depth",
        MismatchSweep => "SL hold leakage against the residual phase mismatch",
    }
}

fn constant(op: f64, om: f64, dp: f64, dm: f64) -> ControlSchedule {
    ControlSchedule::constant(C64::new(op, 0.0), C64::new(om, 0.0), dp, dm)
}

fn config(name: ScenarioName, grid: SimulationGrid, ensemble: EnsembleConfig, controls: ControlSchedule, parameters: Value) -> Config {
    Config {
        grid,
        ensemble,
        controls,
        scenario: ScenarioDescriptor { name, parameters },
    }
}

/// The preset configuration of a scenario.
pub fn preset(name: ScenarioName) -> Config {
    use ScenarioName::*;
    let empty = json!({});
    match name {
        SlowLight => config(name, SimulationGrid::new(128, 0.1, 220.0), EnsembleConfig::new(100.0, 0.0), constant(1.0, 0.0, 0.0, 0.0), empty),
        // protocol scenarios build Ω± from their parameters
        StoredLight => config(name, SimulationGrid::new(128, 0.1, 240.0), EnsembleConfig::new(100.0, 0.0), ControlSchedule::default(), empty),
        EitSlSingleColour => config(name, SimulationGrid::new(128, 0.1, 240.0), EnsembleConfig::new(100.0, 0.0), ControlSchedule::default(), empty),
        EitSlTwoColour => config(name, SimulationGrid::new(128, 0.1, 240.0), EnsembleConfig::new(100.0, 0.0), constant(0.0, 0.0, 1.0, -1.0), empty),
        RamanSlAntisymmetric => config(name, SimulationGrid::new(128, 0.5, 100.0), EnsembleConfig::new(100.0, 0.0), constant(1.0, 1.0, 50.0, -50.0), empty),
        RamanSlSymmetric => config(name, SimulationGrid::new(128, 0.5, 100.0), EnsembleConfig::new(100.0, 0.0), constant(1.0, 1.0, 50.0, -50.0), empty),
        HocDegenerate => config(name, SimulationGrid::new(64, 0.05, 6.0), EnsembleConfig::new(20.0, 0.0), ControlSchedule::default(), empty),
        BandgapScan => config(
            name,
            SimulationGrid::new(256, 0.05, 12.0),
            EnsembleConfig::new(200.0, 1e-4),
            constant(60.0, 60.0, 0.0, 0.0),
            json!({ "tone_detunings": [0.0, 40.0, 91.3, 109.8, 130.0] }),
        ),
        EitWidthScan => config(name, SimulationGrid::default(), EnsembleConfig::new(100.0, 0.0), ControlSchedule::default(), empty),
        MismatchSweep => config(name, SimulationGrid::new(128, 0.05, 20.0), EnsembleConfig::new(100.0, 0.0), ControlSchedule::default(), empty),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_validates_and_round_trips() {
        for name in ScenarioName::ALL {
            let cfg = preset(name);
            cfg.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
            let again = crate::parse_config(&cfg.to_json()).unwrap();
            assert_eq!(again, cfg, "{name}");
            assert!(!describe(name).is_empty());
        }
    }
}
