//! Browser bindings: steady-state spectra and spinwave maps.
//!
//! Each exported function returns a flat `Float64Array`; the page slices it
//! into rows. The plain functions behind them are usable from Rust.

use num_complex::Complex64 as C64;
use stalight::config::GAMMA_E;
use stalight::numerics::gaussian;
use stalight::{eit, raman, spectra, ControlSchedule, EnsembleConfig};
use wasm_bindgen::prelude::*;

/// Largest ξ grid the demo accepts.
pub const MAX_NODES: usize = 1024;
/// Largest number of frames in a map.
pub const MAX_FRAMES: usize = 400;

fn check_sizes(n: usize, frames: usize) -> Result<(), String> {
    if !(8..=MAX_NODES).contains(&n) {
        return Err(format!("n must lie in [8, {MAX_NODES}]"));
    }
    if !(2..=MAX_FRAMES).contains(&frames) {
        return Err(format!("frames must lie in [2, {MAX_FRAMES}]"));
    }
    Ok(())
}

fn frame_times(t_final: f64, frames: usize) -> Vec<f64> {
    (0..frames).map(|k| t_final * k as f64 / (frames - 1) as f64).collect()
}

fn intensities(profiles: &[Vec<C64>]) -> Vec<f64> {
    profiles.iter().flat_map(|p| p.iter().map(|z| z.norm_sqr())).collect()
}

/// `[δ…, T…, R…]` over a symmetric detuning grid.
#[allow(clippy::too_many_arguments)]
pub fn spectrum_rows(
    d: f64,
    gamma: f64,
    omega_plus: f64,
    omega_minus: f64,
    delta_plus: f64,
    delta_minus: f64,
    span: f64,
    points: usize,
) -> Result<Vec<f64>, String> {
    if !(3..=20_001).contains(&points) {
        return Err("points must lie in [3, 20001]".into());
    }
    let ens = EnsembleConfig::new(d, gamma);
    let ctrl = ControlSchedule::constant(C64::new(omega_plus, 0.0), C64::new(omega_minus, 0.0), delta_plus, delta_minus);
    let grid = spectra::symmetric_grid(span, points);
    let s = spectra::steady_state_response(&ens, &ctrl, &grid).map_err(|e| e.to_string())?;
    Ok([s.delta_grid, s.transmission, s.reflection].concat())
}

/// |S(ξ, t)|² under the far-detuned Raman model, one row per frame,
/// starting from two Gaussian lobes in phase or in antiphase.
pub fn raman_rows(d: f64, omega: f64, delta: f64, antisymmetric: bool, t_final: f64, frames: usize, n: usize) -> Result<Vec<f64>, String> {
    check_sizes(n, frames)?;
    let sign = if antisymmetric { -1.0 } else { 1.0 };
    let s0: Vec<C64> = gaussian(n, 0.3, 0.07).iter().zip(gaussian(n, 0.7, 0.07)).map(|(a, b)| a + sign * b).collect();
    let params = raman::RamanParams::new(C64::new(omega, 0.0), delta, 0.0);
    let traj = raman::raman_trajectory(&s0, d, GAMMA_E, &params, &frame_times(t_final, frames)).map_err(|e| e.to_string())?;
    Ok(intensities(&traj))
}

/// |S(ξ, t)|² under EIT drift and diffusion from a Gaussian spinwave.
#[allow(clippy::too_many_arguments)]
pub fn eit_rows(
    d: f64,
    omega_plus: f64,
    omega_minus: f64,
    center: f64,
    width: f64,
    t_final: f64,
    frames: usize,
    n: usize,
) -> Result<Vec<f64>, String> {
    check_sizes(n, frames)?;
    let angles = eit::mixing_angles(C64::new(omega_plus, 0.0), C64::new(omega_minus, 0.0), d, GAMMA_E).map_err(|e| e.to_string())?;
    let s0 = gaussian(n, center, width);
    let traj = eit::diffusion_trajectory(&s0, &angles, d, GAMMA_E, &frame_times(t_final, frames)).map_err(|e| e.to_string())?;
    Ok(intensities(&traj))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn spectrum(
    d: f64,
    gamma: f64,
    omega_plus: f64,
    omega_minus: f64,
    delta_plus: f64,
    delta_minus: f64,
    span: f64,
    points: usize,
) -> Result<Vec<f64>, JsError> {
    spectrum_rows(d, gamma, omega_plus, omega_minus, delta_plus, delta_minus, span, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn raman_map(d: f64, omega: f64, delta: f64, antisymmetric: bool, t_final: f64, frames: usize, n: usize) -> Result<Vec<f64>, JsError> {
    raman_rows(d, omega, delta, antisymmetric, t_final, frames, n).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn eit_map(
    d: f64,
    omega_plus: f64,
    omega_minus: f64,
    center: f64,
    width: f64,
    t_final: f64,
    frames: usize,
    n: usize,
) -> Result<Vec<f64>, JsError> {
    eit_rows(d, omega_plus, omega_minus, center, width, t_final, frames, n).map_err(|e| JsError::new(&e))
}
