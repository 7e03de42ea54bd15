//! Far-detuned (Raman) stationary light.
//!
//! With Δ₊ = −Δ₋ = Δ ≫ Γ and equal control drivings, the excited
//! coherences are eliminated adiabatically and the probes become integrals
//! of the spinwave (in the rotating spatial frame that removes the common
//! dispersion phase e^{i(dΓ/Δ)ξ}):
//!
//! ```text
//! E₊(ξ) =  i√d (Ω/Δ) ∫₀^ξ S dξ′
//! E₋(ξ) = −i√d (Ω/Δ) ∫₁^ξ S dξ′
//! ∂t S  =  i√d (ΓΩ*/Δ)(E₊ + E₋) − γS
//! ```
//!
//! Only the spatial mean of S radiates; it decays at dΓ|Ω|²/Δ² while any
//! zero-mean part is stationary. Incoherent scattering of the controls is
//! not modelled separately and belongs in γ.
//!
//! The light-shift term −i(|Ω₊|²/Δ₊ + |Ω₋|²/Δ₋)S vanishes for the equal and
//! opposite detunings assumed here and is omitted.

use num_complex::Complex64 as C64;

use crate::numerics::{self, I};
use crate::{Error, Result};

/// Minimum detuning for adiabatic elimination, in units of Γ.
pub const MIN_DETUNING: f64 = 10.0;
/// Below this detuning a warning is logged.
pub const WARN_DETUNING: f64 = 25.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RamanParams {
    /// Common control Rabi frequency Ω.
    pub omega: C64,
    /// Δ = Δ₊ = −Δ₋.
    pub delta: f64,
    pub gamma: f64,
    /// Spatial phase rate carried by the backward coupling, Ω₋ = Ω e^{iΔk ξ}.
    pub mismatch: f64,
}

impl RamanParams {
    pub fn new(omega: C64, delta: f64, gamma: f64) -> Self {
        Self {
            omega,
            delta,
            gamma,
            mismatch: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.delta == 0.0 {
            return Err(Error::Domain("adiabatic elimination needs a nonzero detuning".into()));
        }
        if !self.delta.is_finite() || self.delta.abs() < MIN_DETUNING {
            return Err(Error::range(
                "delta",
                format!("|Δ| must be at least {MIN_DETUNING} Γ, got {}", self.delta),
            ));
        }
        if self.delta.abs() < WARN_DETUNING {
            log::warn!("Raman detuning {} Γ is marginal for adiabatic elimination", self.delta);
        }
        if !(self.omega.re.is_finite() && self.omega.im.is_finite()) {
            return Err(Error::range("omega", "must be finite"));
        }
        if !(self.gamma >= 0.0) {
            return Err(Error::range("gamma", "must be >= 0"));
        }
        if !self.mismatch.is_finite() {
            return Err(Error::range("mismatch", "must be finite"));
        }
        Ok(())
    }

    /// Decay rate of the uniform component, dΓ|Ω|²/Δ².
    pub fn uniform_rate(&self, d: f64, gamma_e: f64) -> f64 {
        d * gamma_e * self.omega.norm_sqr() / (self.delta * self.delta)
    }

    /// Wavenumber of the dispersion phase removed by the rotating frame.
    pub fn frame_wavenumber(&self, d: f64, gamma_e: f64) -> f64 {
        d * gamma_e / self.delta
    }

    fn omega_minus(&self, xi: f64) -> C64 {
        self.omega * C64::from_polar(1.0, self.mismatch * xi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpinwaveDecomposition {
    pub stationary: Vec<C64>,
    pub uniform: C64,
}

/// Splits S into its spatial mean and the zero-mean remainder.
pub fn decompose(s: &[C64]) -> SpinwaveDecomposition {
    let uniform = numerics::integrate(s);
    SpinwaveDecomposition {
        stationary: s.iter().map(|z| z - uniform).collect(),
        uniform,
    }
}

/// Probe envelopes radiated by the spinwave, in the rotating spatial frame.
pub fn probe_fields_from_spinwave(s: &[C64], d: f64, params: &RamanParams) -> Result<(Vec<C64>, Vec<C64>)> {
    if params.delta == 0.0 {
        return Err(Error::Domain("adiabatic elimination needs a nonzero detuning".into()));
    }
    let c = I * d.sqrt() / params.delta;
    let forward = numerics::integrate_xi(s, true);
    let backward = if params.mismatch == 0.0 {
        numerics::integrate_xi(s, false)
    } else {
        let xi = numerics::xi_nodes(s.len());
        let src: Vec<C64> = s
            .iter()
            .zip(&xi)
            .map(|(z, &x)| C64::from_polar(1.0, params.mismatch * x) * z)
            .collect();
        numerics::integrate_xi(&src, false)
    };
    let plus = forward.into_iter().map(|g| c * params.omega * g).collect();
    let minus = backward.into_iter().map(|g| -c * params.omega * g).collect();
    Ok((plus, minus))
}

/// Closed-form evolution S(t) = [S_ξ + S_t e^{−t dΓ|Ω|²/Δ²}] e^{−γt}.
pub fn evolve_raman_analytic(s0: &[C64], d: f64, gamma_e: f64, params: &RamanParams, t: f64) -> Result<Vec<C64>> {
    params.validate()?;
    if params.mismatch != 0.0 {
        return Err(Error::Domain("the closed form assumes phase-matched controls".into()));
    }
    if !(t >= 0.0) {
        return Err(Error::range("t", "must be >= 0"));
    }
    let parts = decompose(s0);
    let uniform = parts.uniform * (-t * params.uniform_rate(d, gamma_e)).exp();
    let global = (-params.gamma * t).exp();
    Ok(parts.stationary.iter().map(|z| (z + uniform) * global).collect())
}

fn rhs(s: &[C64], d: f64, gamma_e: f64, params: &RamanParams, xi: &[f64]) -> Result<Vec<C64>> {
    let (ep, em) = probe_fields_from_spinwave(s, d, params)?;
    let c = I * d.sqrt() * gamma_e / params.delta;
    Ok((0..s.len())
        .map(|i| c * (params.omega.conj() * ep[i] + params.omega_minus(xi[i]).conj() * em[i]) - params.gamma * s[i])
        .collect())
}

/// Largest step the explicit integrator takes: 1% of the fastest timescale,
/// well inside the 0.05·Δ²/(dΓ|Ω|²) stability bound.
pub fn numeric_step(d: f64, gamma_e: f64, params: &RamanParams) -> f64 {
    let rate = params.uniform_rate(d, gamma_e) * (1.0 + params.mismatch.abs()) + params.gamma;
    if rate > 0.0 {
        0.01 / rate
    } else {
        f64::INFINITY
    }
}

/// Explicit-midpoint integration of the reduced equations, sampled at
/// each of the non-decreasing `times`.
pub fn raman_trajectory(
    s0: &[C64],
    d: f64,
    gamma_e: f64,
    params: &RamanParams,
    times: &[f64],
) -> Result<Vec<Vec<C64>>> {
    params.validate()?;
    if times.iter().any(|t| !(*t >= 0.0)) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::range("t", "sample times must be non-negative and non-decreasing"));
    }
    let xi = numerics::xi_nodes(s0.len());
    let dt_max = numeric_step(d, gamma_e, params);
    let mut s = s0.to_vec();
    let mut now = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        let span = target - now;
        if span > 0.0 && dt_max.is_finite() {
            let steps = (span / dt_max).ceil().max(1.0) as usize;
            let dt = span / steps as f64;
            for k in 0..steps {
                let k1 = rhs(&s, d, gamma_e, params, &xi)?;
                let half: Vec<C64> = s.iter().zip(&k1).map(|(a, b)| a + 0.5 * dt * b).collect();
                let k2 = rhs(&half, d, gamma_e, params, &xi)?;
                for (a, b) in s.iter_mut().zip(&k2) {
                    *a += dt * b;
                }
                if !numerics::all_finite(&s) {
                    return Err(Error::Diverged {
                        time: now + (k + 1) as f64 * dt,
                    });
                }
            }
        }
        now = target;
        out.push(s.clone());
    }
    Ok(out)
}

pub fn evolve_raman_numeric(s0: &[C64], d: f64, gamma_e: f64, params: &RamanParams, t: f64) -> Result<Vec<C64>> {
    Ok(raman_trajectory(s0, d, gamma_e, params, &[t])?.pop().unwrap())
}

/// Exponential rate from a log-linear least-squares fit of |values|.
/// Samples that are zero are skipped; fewer than two usable samples yield
/// `None`.
pub fn fit_decay_rate(times: &[f64], values: &[f64]) -> Option<f64> {
    let (t, y): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(values)
        .filter(|(_, v)| v.abs() > 0.0 && v.is_finite())
        .map(|(t, v)| (*t, v.abs().ln()))
        .unzip();
    if t.len() < 2 {
        return None;
    }
    Some(-numerics::linear_fit(&t, &y).0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn params(omega: f64, delta: f64, gamma: f64) -> RamanParams {
        RamanParams::new(C64::new(omega, 0.0), delta, gamma)
    }

    fn sample(n: usize, f: impl Fn(f64) -> C64) -> Vec<C64> {
        numerics::xi_nodes(n).into_iter().map(f).collect()
    }

    #[test]
    fn detuning_limits() {
        assert!(matches!(params(1.0, 0.0, 0.0).validate(), Err(Error::Domain(_))));
        assert!(params(1.0, 5.0, 0.0).validate().unwrap_err().is_validation());
        assert!(params(1.0, -12.0, 0.0).validate().is_ok());
        let s = vec![C64::new(1.0, 0.0); 16];
        assert!(matches!(probe_fields_from_spinwave(&s, 1.0, &params(1.0, 0.0, 0.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn constant_spinwave_fields() {
        let n = 33;
        let p = params(1.3, 40.0, 0.0);
        let s0 = C64::new(0.4, -0.2);
        let (ep, em) = probe_fields_from_spinwave(&vec![s0; n], 100.0, &p).unwrap();
        let k = I * 10.0 * 1.3 / 40.0 * s0;
        for (i, x) in numerics::xi_nodes(n).into_iter().enumerate() {
            assert!((ep[i] - k * x).norm() < 1e-14);
            assert!((em[i] - k * (1.0 - x)).norm() < 1e-14);
        }
    }

    #[test]
    fn zero_mean_spinwave_does_not_leak() {
        let s = sample(101, |x| C64::new((2.0 * PI * x).sin(), 0.0));
        let (ep, em) = probe_fields_from_spinwave(&s, 100.0, &params(1.0, 50.0, 0.0)).unwrap();
        assert!(ep[100].norm() < 1e-14);
        assert!(em[0].norm() < 1e-14);
    }

    #[test]
    fn opposite_lobes_confine_the_field_between_them() {
        let n = 401;
        let s: Vec<C64> = numerics::gaussian(n, 0.3, 0.04)
            .iter()
            .zip(&numerics::gaussian(n, 0.7, 0.04))
            .map(|(a, b)| a - b)
            .collect();
        let (ep, em) = probe_fields_from_spinwave(&s, 100.0, &params(1.0, 50.0, 0.0)).unwrap();
        let mid = n / 2;
        // 0.2 · ∫ lobe = 0.2 · 0.04 √(2π)
        assert_relative_eq!(ep[mid].norm(), 0.008 * (2.0 * PI).sqrt(), max_relative = 1e-3);
        assert_relative_eq!(em[mid].norm(), 0.008 * (2.0 * PI).sqrt(), max_relative = 1e-3);
        for i in (0..n / 10).chain(n - n / 10..n) {
            assert!(ep[i].norm() < 1e-3 * ep[mid].norm());
            assert!(em[i].norm() < 1e-3 * em[mid].norm());
        }
    }

    #[test]
    fn decompositions() {
        let sine = sample(257, |x| C64::new((2.0 * PI * x).sin(), 0.0));
        let parts = decompose(&sine);
        assert!(parts.uniform.norm() < 1e-14);
        assert!(numerics::rel_l2(&parts.stationary, &sine) < 1e-14);

        let c = C64::new(0.3, 0.9);
        let parts = decompose(&[c; 20]);
        assert!((parts.uniform - c).norm() < 1e-14);
        assert!(parts.stationary.iter().all(|z| z.norm() < 1e-14));

        let ramp = sample(11, |x| C64::new(x, 0.0));
        let parts = decompose(&ramp);
        assert_relative_eq!(parts.uniform.re, 0.5, epsilon = 1e-14);
        for (z, x) in parts.stationary.iter().zip(numerics::xi_nodes(11)) {
            assert!((z.re - (x - 0.5)).abs() < 1e-14);
        }
    }

    #[test]
    fn analytic_uniform_decay() {
        let s = evolve_raman_analytic(&[C64::new(1.0, 0.0); 32], 100.0, 1.0, &params(1.0, 50.0, 0.0), 10.0).unwrap();
        for z in s {
            assert_relative_eq!(z.re, (-0.4f64).exp(), max_relative = 1e-12);
        }
    }

    #[test]
    fn analytic_limits() {
        let s0 = sample(64, |x| C64::new((2.0 * PI * x).cos(), (4.0 * PI * x).sin()));
        let s = evolve_raman_analytic(&s0, 100.0, 1.0, &params(1.0, 50.0, 0.0), 500.0).unwrap();
        assert!(numerics::rel_l2(&s, &s0) < 1e-12);

        let lump = numerics::gaussian(64, 0.3, 0.1);
        let s = evolve_raman_analytic(&lump, 100.0, 1.0, &params(0.0, 50.0, 0.2), 3.0).unwrap();
        for (a, b) in s.iter().zip(&lump) {
            assert!((a - b * (-0.6f64).exp()).norm() < 1e-14);
        }
        let mut p = params(1.0, 50.0, 0.0);
        p.mismatch = 1.0;
        assert!(matches!(evolve_raman_analytic(&lump, 100.0, 1.0, &p, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn numeric_matches_closed_form_for_uniform_spinwave() {
        let p = params(1.0, 50.0, 0.0);
        let s0 = vec![C64::new(1.0, 0.0); 64];
        let t = 2.0 * (10f64).ln() / p.uniform_rate(100.0, 1.0);
        let num = evolve_raman_numeric(&s0, 100.0, 1.0, &p, t).unwrap();
        let exact = evolve_raman_analytic(&s0, 100.0, 1.0, &p, t).unwrap();
        assert!(numerics::rel_l2(&num, &exact) < 1e-3);
    }

    #[test]
    fn symmetric_pair_relaxes_to_zero_mean() {
        let n = 201;
        let s0: Vec<C64> = numerics::gaussian(n, 0.3, 0.05)
            .iter()
            .zip(&numerics::gaussian(n, 0.7, 0.05))
            .map(|(a, b)| a + b)
            .collect();
        let p = params(1.0, 50.0, 0.0);
        let traj = raman_trajectory(&s0, 100.0, 1.0, &p, &[0.0, 50.0, 150.0]).unwrap();
        let u: Vec<f64> = traj.iter().map(|s| decompose(s).uniform.norm()).collect();
        assert!(u[1] < u[0] && u[2] < 0.01 * u[0]);
        let stationary0 = decompose(&s0).stationary;
        assert!(numerics::rel_l2(&decompose(&traj[2]).stationary, &stationary0) < 1e-9);
        let leak: Vec<f64> = traj
            .iter()
            .map(|s| probe_fields_from_spinwave(s, 100.0, &p).unwrap().0[n - 1].norm())
            .collect();
        assert!(leak[2] < 0.01 * leak[0]);
    }

    #[test]
    fn antisymmetric_pair_is_static_apart_from_global_decay() {
        let n = 201;
        let s0: Vec<C64> = numerics::gaussian(n, 0.3, 0.05)
            .iter()
            .zip(&numerics::gaussian(n, 0.7, 0.05))
            .map(|(a, b)| a - b)
            .collect();
        let s = evolve_raman_numeric(&s0, 100.0, 1.0, &params(1.0, 50.0, 0.01), 100.0).unwrap();
        let expected: Vec<C64> = s0.iter().map(|z| z * (-1.0f64).exp()).collect();
        assert!(numerics::rel_l2(&s, &expected) < 1e-6);
    }

    #[test]
    fn fitted_rate_of_uniform_component() {
        let p = params(1.0, 50.0, 0.0);
        let rate = p.uniform_rate(100.0, 1.0);
        let times: Vec<f64> = (0..=40).map(|k| k as f64 * (100f64).ln() / rate / 40.0).collect();
        let traj = raman_trajectory(&vec![C64::new(1.0, 0.0); 64], 100.0, 1.0, &p, &times).unwrap();
        let u: Vec<f64> = traj.iter().map(|s| decompose(s).uniform.norm()).collect();
        let fitted = fit_decay_rate(&times, &u).unwrap();
        assert!((fitted / 0.04 - 1.0).abs() < 0.02);
        assert!(fit_decay_rate(&[1.0], &[1.0]).is_none());
    }

    #[test]
    fn mismatch_makes_a_zero_mean_spinwave_decay() {
        let s0 = sample(128, |x| C64::new((2.0 * PI * x).sin(), 0.0));
        let mut p = params(1.0, 50.0, 0.0);
        let matched = evolve_raman_numeric(&s0, 100.0, 1.0, &p, 50.0).unwrap();
        p.mismatch = 2.0 * PI;
        let skewed = evolve_raman_numeric(&s0, 100.0, 1.0, &p, 50.0).unwrap();
        assert!(numerics::norm_sq(&skewed) < numerics::norm_sq(&matched) * 0.999);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn global_phase_passes_through(alpha in 0.0f64..(2.0 * PI), center in 0.2f64..0.8, t in 0.0f64..80.0, dk in -3.0f64..3.0) {
            let mut p = params(0.8, 40.0, 0.01);
            p.mismatch = dk;
            let s0 = numerics::gaussian(48, center, 0.1);
            let phase = C64::from_polar(1.0, alpha);
            let rotated: Vec<C64> = s0.iter().map(|z| z * phase).collect();
            let a = evolve_raman_numeric(&s0, 100.0, 1.0, &p, t).unwrap();
            let b = evolve_raman_numeric(&rotated, 100.0, 1.0, &p, t).unwrap();
            let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x * phase - y).norm() < 1e-12 * scale);
            }
            let (ea, _) = probe_fields_from_spinwave(&a, 100.0, &p).unwrap();
            let (eb, _) = probe_fields_from_spinwave(&b, 100.0, &p).unwrap();
            for (x, y) in ea.iter().zip(&eb) {
                prop_assert!((x * phase - y).norm() < 1e-12 * scale);
            }
        }

        #[test]
        fn zero_mean_data_is_stationary(a1 in -1.0f64..1.0, a2 in -1.0f64..1.0, b in -1.0f64..1.0, t in 0.0f64..100.0) {
            let s0 = sample(64, |x| C64::new(a1 * (2.0 * PI * x).sin() + a2 * (4.0 * PI * x).cos(), b * (2.0 * PI * x).cos()));
            let parts = decompose(&s0);
            let s0 = parts.stationary;
            let s = evolve_raman_numeric(&s0, 100.0, 1.0, &params(1.0, 50.0, 0.0), t).unwrap();
            prop_assert!(numerics::rel_l2(&s, &s0) < 1e-3);
        }
    }
}
