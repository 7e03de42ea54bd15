//! Field envelopes on the ξ grid and boundary drives.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::numerics::{self, ZERO};
use crate::{Error, Result};

/// Probe envelopes, excited-state coherences and spinwave at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub e_plus: Vec<C64>,
    pub e_minus: Vec<C64>,
    pub p_plus: Vec<C64>,
    pub p_minus: Vec<C64>,
    pub s: Vec<C64>,
}

impl FieldState {
    pub fn zeros(n: usize) -> Self {
        Self {
            e_plus: vec![ZERO; n],
            e_minus: vec![ZERO; n],
            p_plus: vec![ZERO; n],
            p_minus: vec![ZERO; n],
            s: vec![ZERO; n],
        }
    }

    /// A pure spinwave with all optical quantities zero.
    pub fn from_spinwave(s: Vec<C64>) -> Self {
        let n = s.len();
        Self {
            s,
            ..Self::zeros(n)
        }
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn check_shape(&self) -> Result<()> {
        let n = self.s.len();
        let lens = [
            self.e_plus.len(),
            self.e_minus.len(),
            self.p_plus.len(),
            self.p_minus.len(),
        ];
        if lens.iter().any(|&l| l != n) {
            return Err(Error::Shape(format!(
                "field arrays have lengths {lens:?} but the spinwave has {n}"
            )));
        }
        Ok(())
    }

    pub fn scaled(&self, c: C64) -> Self {
        let f = |v: &Vec<C64>| v.iter().map(|z| z * c).collect();
        Self {
            e_plus: f(&self.e_plus),
            e_minus: f(&self.e_minus),
            p_plus: f(&self.p_plus),
            p_minus: f(&self.p_minus),
            s: f(&self.s),
        }
    }

    /// ∫(|S|² + |P₊|² + |P₋|²) dξ, the excitation held by the atoms.
    pub fn stored_excitation(&self) -> f64 {
        numerics::norm_sq(&self.s) + numerics::norm_sq(&self.p_plus) + numerics::norm_sq(&self.p_minus)
    }

    pub fn is_finite(&self) -> bool {
        [&self.e_plus, &self.e_minus, &self.p_plus, &self.p_minus, &self.s]
            .iter()
            .all(|v| numerics::all_finite(v))
    }
}

/// A complex input envelope as a function of time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Signal {
    #[default]
    Zero,
    /// amplitude · exp(−(t − center)² / (2 width²))
    Gaussian {
        amplitude: f64,
        center: f64,
        width: f64,
    },
    /// amplitude · exp(−i detuning t), switched on smoothly over `ramp`.
    Tone {
        amplitude: f64,
        detuning: f64,
        ramp: f64,
    },
    Samples(crate::config::Waveform),
}

impl Signal {
    pub fn at(&self, t: f64) -> C64 {
        match self {
            Signal::Zero => ZERO,
            Signal::Gaussian {
                amplitude,
                center,
                width,
            } => C64::new(amplitude * (-(t - center).powi(2) / (2.0 * width * width)).exp(), 0.0),
            Signal::Tone {
                amplitude,
                detuning,
                ramp,
            } => {
                let envelope = if *ramp > 0.0 && t < *ramp {
                    let s = (t / ramp).max(0.0);
                    // smoothstep keeps the switch-on transient small
                    s * s * (3.0 - 2.0 * s)
                } else {
                    1.0
                };
                C64::from_polar(amplitude * envelope, -detuning * t)
            }
            Signal::Samples(w) => w.at(t),
        }
    }

    /// Fastest rate the signal imposes (its carrier detuning).
    pub fn max_rate(&self) -> f64 {
        match self {
            Signal::Tone { detuning, .. } => detuning.abs(),
            _ => 0.0,
        }
    }
}

/// Input probe envelopes at ξ = 0 (forward) and ξ = 1 (backward).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BoundaryDrive {
    #[serde(default)]
    pub e_plus_in: Signal,
    #[serde(default)]
    pub e_minus_in: Signal,
}

impl BoundaryDrive {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn forward(signal: Signal) -> Self {
        Self {
            e_plus_in: signal,
            e_minus_in: Signal::Zero,
        }
    }

    pub fn at(&self, t: f64) -> (C64, C64) {
        (self.e_plus_in.at(t), self.e_minus_in.at(t))
    }

    pub fn max_rate(&self) -> f64 {
        self.e_plus_in.max_rate().max(self.e_minus_in.max_rate())
    }
}
