//! Reduced EIT stationary-light model.
//!
//! To first order in κ/d the spinwave obeys
//!
//! ```text
//! ∂t S + Γ tan²θ (cos2φ ∂ξ S − (1/d) ∂²ξ S) = 0
//! ```
//!
//! with tan²θ = (|Ω₊|² + |Ω₋|²)/(dΓ²) and tan²φ = |Ω₋|²/|Ω₊|².

use num_complex::Complex64 as C64;

use crate::numerics::{self, ZERO};
use crate::state::FieldState;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixingAngles {
    pub theta: f64,
    pub phi: f64,
    /// Both controls off: θ = 0 and φ is meaningless (reported as 0).
    pub degenerate: bool,
}

impl MixingAngles {
    pub fn tan2_theta(&self) -> f64 {
        self.theta.tan().powi(2)
    }

    pub fn cos_2phi(&self) -> f64 {
        (2.0 * self.phi).cos()
    }

    /// Polariton group velocity in ξ per unit time.
    pub fn drift_velocity(&self, gamma_e: f64) -> f64 {
        gamma_e * self.tan2_theta() * self.cos_2phi()
    }

    pub fn diffusion(&self, d: f64, gamma_e: f64) -> f64 {
        gamma_e * self.tan2_theta() / d
    }
}

pub fn mixing_angles(omega_plus: C64, omega_minus: C64, d: f64, gamma_e: f64) -> Result<MixingAngles> {
    if !(d > 0.0) {
        return Err(Error::range("d", "optical depth must be > 0"));
    }
    let (a, b) = (omega_plus.norm_sqr(), omega_minus.norm_sqr());
    if a + b == 0.0 {
        return Ok(MixingAngles {
            theta: 0.0,
            phi: 0.0,
            degenerate: true,
        });
    }
    let theta = ((a + b) / (d * gamma_e * gamma_e)).sqrt().atan();
    let phi = omega_minus.norm().atan2(omega_plus.norm());
    Ok(MixingAngles {
        theta,
        phi,
        degenerate: false,
    })
}

/// Largest stable step for grid spacing `h`.
fn stable_dt(v: f64, diff: f64, h: f64) -> f64 {
    let mut limit = f64::INFINITY;
    if v != 0.0 {
        limit = limit.min(h / v.abs());
    }
    if diff > 0.0 {
        limit = limit.min(h * h / (2.0 * diff));
    }
    0.5 * limit
}

/// One explicit step: first-order upwind drift, centred diffusion.
///
/// Nothing enters through the upwind edge; diffusion sees a zero-gradient
/// ghost at both ends. Every update is a convex combination of old values,
/// so the discrete L2 norm cannot grow.
fn advance(s: &[C64], out: &mut [C64], c: f64, r: f64) {
    let n = s.len();
    let forward = c >= 0.0;
    let c = c.abs();
    let at = |i: isize| -> C64 {
        if i < 0 {
            s[0]
        } else if i as usize >= n {
            s[n - 1]
        } else {
            s[i as usize]
        }
    };
    for i in 0..n {
        let ii = i as isize;
        let upwind = if forward {
            if i == 0 {
                ZERO
            } else {
                s[i - 1]
            }
        } else if i == n - 1 {
            ZERO
        } else {
            s[i + 1]
        };
        let lap = at(ii - 1) - 2.0 * s[i] + at(ii + 1);
        out[i] = s[i] - c * (s[i] - upwind) + r * lap;
    }
}

/// Drift–diffusion evolution of `s0` over a time `t`.
pub fn evolve_diffusion(s0: &[C64], angles: &MixingAngles, d: f64, gamma_e: f64, t: f64) -> Result<Vec<C64>> {
    Ok(diffusion_trajectory(s0, angles, d, gamma_e, &[t])?.pop().unwrap())
}

/// Profiles at each of the (non-decreasing) `times`.
pub fn diffusion_trajectory(
    s0: &[C64],
    angles: &MixingAngles,
    d: f64,
    gamma_e: f64,
    times: &[f64],
) -> Result<Vec<Vec<C64>>> {
    if times.iter().any(|t| !(*t >= 0.0)) {
        return Err(Error::range("t", "must be >= 0"));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::range("t", "sample times must be non-decreasing"));
    }
    let n = s0.len();
    let h = numerics::spacing(n);
    let v = angles.drift_velocity(gamma_e);
    let diff = angles.diffusion(d, gamma_e);
    let dt_max = stable_dt(v, diff, h);

    let mut s = s0.to_vec();
    let mut scratch = vec![ZERO; n];
    let mut now = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        let span = target - now;
        if span > 0.0 && dt_max.is_finite() {
            let steps = (span / dt_max).ceil().max(1.0) as usize;
            let dt = span / steps as f64;
            let (c, r) = (v * dt / h, diff * dt / (h * h));
            for _ in 0..steps {
                advance(&s, &mut scratch, c, r);
                std::mem::swap(&mut s, &mut scratch);
            }
            if !numerics::all_finite(&s) {
                return Err(Error::Diverged { time: target });
            }
        }
        now = target;
        out.push(s.clone());
    }
    Ok(out)
}

/// Ψ_D = sinθ (E₊ cosφ + E₋ sinφ) − S cosθ.
pub fn dark_polariton(state: &FieldState, angles: &MixingAngles) -> Vec<C64> {
    let (st, ct) = angles.theta.sin_cos();
    let (sp, cp) = angles.phi.sin_cos();
    (0..state.len())
        .map(|i| st * (state.e_plus[i] * cp + state.e_minus[i] * sp) - state.s[i] * ct)
        .collect()
}

/// m* = 2 (dΓ/Ω)² / (Δ − iΓ), with ħ = 1.
pub fn effective_mass(d: f64, gamma_e: f64, omega: f64, delta: f64) -> Result<C64> {
    if omega == 0.0 {
        return Err(Error::Domain("effective mass diverges at zero control Rabi frequency".into()));
    }
    let ratio = d * gamma_e / omega;
    Ok(2.0 * ratio * ratio / C64::new(delta, -gamma_e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolaritonDiagnostics {
    pub psi_d: Vec<C64>,
    /// First moment of |S|².
    pub centroid: f64,
    /// Second central moment of |S|².
    pub width_sq: f64,
    pub effective_mass: Option<C64>,
}

pub fn diagnostics(state: &FieldState, angles: &MixingAngles, d: f64, gamma_e: f64, delta: f64) -> PolaritonDiagnostics {
    let (centroid, width_sq) = numerics::intensity_moments(&state.s).unwrap_or((0.5, 0.0));
    let omega = (angles.tan2_theta() * d).sqrt() * gamma_e;
    PolaritonDiagnostics {
        psi_d: dark_polariton(state, angles),
        centroid,
        width_sq,
        effective_mass: effective_mass(d, gamma_e, omega, delta).ok(),
    }
}
