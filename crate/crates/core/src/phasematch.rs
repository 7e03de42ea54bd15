//! Longitudinal phase matching of the two Λ pairs.
//!
//! The forward pair imprints (k_p₊ − k_c₊ cosθ₊) z on its spinwave, the
//! backward pair (−k_p₋ + k_c₋ cosθ₋) z. Any difference survives as a
//! spatial phase on the backward coupling, Ω₋ → Ω₋ e^{iΔk ξ}.

use serde::{Deserialize, Serialize};

use crate::config::ControlSchedule;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamGeometry {
    pub k_p_plus: f64,
    pub k_c_plus: f64,
    pub k_p_minus: f64,
    pub k_c_minus: f64,
    /// Control angles to the axis, in radians.
    #[serde(default)]
    pub angle_c_plus: f64,
    #[serde(default)]
    pub angle_c_minus: f64,
    /// Phase accumulated across the medium per unit of wavevector mismatch
    /// (the medium length in the units of the k's).
    #[serde(default = "unit")]
    pub phase_scale: f64,
}

fn unit() -> f64 {
    1.0
}

impl BeamGeometry {
    /// Everything collinear with matched magnitudes.
    pub fn collinear(k: f64) -> Self {
        Self {
            k_p_plus: k,
            k_c_plus: k,
            k_p_minus: k,
            k_c_minus: k,
            angle_c_plus: 0.0,
            angle_c_minus: 0.0,
            phase_scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (key, k) in [
            ("k_p_plus", self.k_p_plus),
            ("k_c_plus", self.k_c_plus),
            ("k_p_minus", self.k_p_minus),
            ("k_c_minus", self.k_c_minus),
        ] {
            if !(k > 0.0 && k.is_finite()) {
                return Err(Error::range(key, "wavevector magnitudes must be > 0"));
            }
        }
        for (key, a) in [("angle_c_plus", self.angle_c_plus), ("angle_c_minus", self.angle_c_minus)] {
            if !(a.abs() < std::f64::consts::FRAC_PI_2) {
                return Err(Error::range(key, "angles must satisfy |θ| < π/2"));
            }
        }
        if !self.phase_scale.is_finite() {
            return Err(Error::range("phase_scale", "must be finite"));
        }
        Ok(())
    }
}

/// Δk_z across the medium; zero when the pairs are phase matched.
pub fn residual_mismatch(geom: &BeamGeometry) -> Result<f64> {
    geom.validate()?;
    let forward = geom.k_p_plus - geom.k_c_plus * geom.angle_c_plus.cos();
    let backward = -geom.k_p_minus + geom.k_c_minus * geom.angle_c_minus.cos();
    Ok((forward - backward) * geom.phase_scale)
}

/// Adds a spatial phase rate `delta_k` to the backward coupling.
pub fn apply_mismatch(ctrl: &ControlSchedule, delta_k: f64) -> Result<ControlSchedule> {
    if !delta_k.is_finite() {
        return Err(Error::range("delta_k", "must be finite"));
    }
    let mut out = ctrl.clone();
    out.mismatch += delta_k;
    Ok(out)
}
