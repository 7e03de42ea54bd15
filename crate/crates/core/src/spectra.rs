//! Steady-state transmission and reflection.
//!
//! For a probe at detuning δ the coherences follow the fields
//! algebraically, leaving ∂ξ(E₊, E₋)ᵀ = M(δ)(E₊, E₋)ᵀ. With T = exp(M) the
//! boundary conditions E₊(0) = 1, E₋(1) = 0 give r = −T₂₁/T₂₂ and
//! t = det T / T₂₂ = e^{tr M}/T₂₂.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64 as C64;
#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::config::{ControlSchedule, EnsembleConfig, SimulationGrid, GAMMA_E};
use crate::numerics::{expm2, Mat2, I, ZERO};
use crate::{Error, Result};

/// Shift added to the spinwave decay when the local system is singular.
pub const REGULARIZATION: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    pub delta_grid: Vec<f64>,
    pub t_amp: Vec<C64>,
    pub r_amp: Vec<C64>,
    pub transmission: Vec<f64>,
    pub reflection: Vec<f64>,
    /// Indices of δ points that needed the regularisation.
    pub regularized: Vec<usize>,
}

impl SpectrumResult {
    pub fn len(&self) -> usize {
        self.delta_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delta_grid.is_empty()
    }

    pub fn absorbed(&self) -> Vec<f64> {
        self.transmission
            .iter()
            .zip(&self.reflection)
            .map(|(t, r)| 1.0 - t - r)
            .collect()
    }

    /// Index of the grid point nearest δ = 0.
    pub fn center_index(&self) -> usize {
        let mut best = 0;
        for (i, d) in self.delta_grid.iter().enumerate() {
            if d.abs() < self.delta_grid[best].abs() {
                best = i;
            }
        }
        best
    }
}

/// Which boundary carries the unit input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriveSide {
    /// E₊(0) = 1, E₋(1) = 0.
    Forward,
    /// E₋(1) = 1, E₊(0) = 0.
    Backward,
}

struct Point {
    t: C64,
    r: C64,
    regularized: bool,
}

fn propagator(cfg: &EnsembleConfig, ctrl: &ControlSchedule, delta: f64) -> Result<(Mat2, bool)> {
    let c = ctrl.at(0.0);
    let (op, om) = (c.omega_plus, c.omega_minus);
    let build = |eps: f64| {
        Matrix3::new(
            C64::new(GAMMA_E, c.delta_plus - delta),
            ZERO,
            -I * op,
            ZERO,
            C64::new(GAMMA_E, c.delta_minus - delta),
            -I * om,
            -I * op.conj(),
            -I * om.conj(),
            C64::new(cfg.gamma + eps, c.two_photon_delta - delta),
        )
    };
    let mut regularized = false;
    let mut a = build(0.0);
    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if a.determinant().norm() <= 1e-14 * scale.powi(3) {
        a = build(REGULARIZATION * GAMMA_E);
        regularized = true;
    }
    let lu = a.lu();
    let col = |j: usize| -> Result<Vector3<C64>> {
        let mut e = Vector3::zeros();
        e[j] = C64::new(1.0, 0.0);
        lu.solve(&e)
            .ok_or_else(|| Error::Domain(format!("singular steady-state system at δ = {delta}")))
    };
    let (c0, c1) = (col(0)?, col(1)?);
    let k = cfg.d * GAMMA_E;
    let mut m: Mat2 = [[-k * c0[0], -k * c1[0]], [k * c0[1], k * c1[1]]];
    // the mismatch phase on Ω₋ is gauged onto E₋
    m[1][1] -= I * c.mismatch;
    Ok((m, regularized))
}

fn solve_point(cfg: &EnsembleConfig, ctrl: &ControlSchedule, delta: f64, side: DriveSide) -> Result<Point> {
    let (mut m, regularized) = propagator(cfg, ctrl, delta)?;
    // T = e^μ e^{M − μ}; shifting by the growing eigenvalue keeps the
    // exponential bounded at large optical depth
    let trace = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let root = (trace * trace * 0.25 - det).sqrt();
    let mu = (trace * 0.5 + root).re.max((trace * 0.5 - root).re);
    m[0][0] -= mu;
    m[1][1] -= mu;
    let tm = expm2(&m);
    let (t, r) = match side {
        DriveSide::Forward => ((trace - mu).exp() / tm[1][1], -tm[1][0] / tm[1][1]),
        DriveSide::Backward => {
            // E(0) = (0, t'), E(1) = (r', 1): t' = 1/T₂₂ carries the gauge
            // phase e^{−iΔk}, which does not affect |t'|.
            ((-mu).exp() / tm[1][1], tm[0][1] / tm[1][1])
        }
    };
    if !(t.re.is_finite() && t.im.is_finite() && r.re.is_finite() && r.im.is_finite()) {
        return Err(Error::Diverged { time: delta });
    }
    Ok(Point { t, r, regularized })
}

/// Steady-state response to a unit probe entering at ξ = 0.
pub fn steady_state_response(cfg: &EnsembleConfig, ctrl: &ControlSchedule, delta_grid: &[f64]) -> Result<SpectrumResult> {
    response(cfg, ctrl, delta_grid, DriveSide::Forward)
}

pub fn response(
    cfg: &EnsembleConfig,
    ctrl: &ControlSchedule,
    delta_grid: &[f64],
    side: DriveSide,
) -> Result<SpectrumResult> {
    cfg.validate()?;
    if !ctrl.omega_plus.is_constant() || !ctrl.omega_minus.is_constant() {
        return Err(Error::Unsupported("spectra need time-independent controls".into()));
    }
    if delta_grid.iter().any(|d| !d.is_finite()) {
        return Err(Error::range("delta_grid", "must be finite"));
    }
    let solve = |&d: &f64| solve_point(cfg, ctrl, d, side);
    #[cfg(feature = "parallel")]
    let points: Vec<Result<Point>> = delta_grid.par_iter().map(solve).collect();
    #[cfg(not(feature = "parallel"))]
    let points: Vec<Result<Point>> = delta_grid.iter().map(solve).collect();

    let mut out = SpectrumResult {
        delta_grid: delta_grid.to_vec(),
        t_amp: Vec::with_capacity(delta_grid.len()),
        r_amp: Vec::with_capacity(delta_grid.len()),
        transmission: Vec::with_capacity(delta_grid.len()),
        reflection: Vec::with_capacity(delta_grid.len()),
        regularized: vec![],
    };
    for (i, p) in points.into_iter().enumerate() {
        let p = p?;
        if p.regularized {
            log::warn!("steady-state system singular at δ = {}; regularised", delta_grid[i]);
            out.regularized.push(i);
        }
        out.t_amp.push(p.t);
        out.r_amp.push(p.r);
        out.transmission.push(p.t.norm_sqr());
        out.reflection.push(p.r.norm_sqr());
    }
    Ok(out)
}

/// Uniform grid of `points` detunings on [−span, span].
pub fn symmetric_grid(span: f64, points: usize) -> Vec<f64> {
    if points < 2 {
        return vec![0.0; points];
    }
    (0..points)
        .map(|i| -span + 2.0 * span * i as f64 / (points - 1) as f64)
        .collect()
}

/// Default scan: 2001 points over ±10 Γtan²θ.
pub fn default_grid(cfg: &EnsembleConfig, ctrl: &ControlSchedule) -> Vec<f64> {
    let c = ctrl.at(0.0);
    let rate = (c.omega_plus.norm_sqr() + c.omega_minus.norm_sqr()) / (cfg.d * GAMMA_E);
    let span = if rate > 0.0 { 10.0 * rate } else { 10.0 * GAMMA_E };
    symmetric_grid(span, 2001)
}

/// Full width at half maximum of T(δ) around δ = 0.
pub fn eit_window_width(spectrum: &SpectrumResult) -> Result<f64> {
    let n = spectrum.len();
    if n < 3 {
        return Err(Error::Resolution("need at least three detunings".into()));
    }
    let t = &spectrum.transmission;
    let x = &spectrum.delta_grid;
    let c = spectrum.center_index();
    let peak = t[c];
    let floor = t.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(peak > 2.0 * floor) || peak <= 0.0 {
        return Err(Error::Resolution("no transparency window at δ = 0".into()));
    }
    let half = 0.5 * peak;
    let crossing = |dir: isize| -> Result<f64> {
        let mut i = c as isize;
        loop {
            let j = i + dir;
            if j < 0 || j >= n as isize {
                return Err(Error::Resolution("transparency window wider than the δ grid".into()));
            }
            let (a, b) = (i as usize, j as usize);
            if t[b] <= half {
                if (b as isize - c as isize).abs() < 2 {
                    return Err(Error::Resolution("transparency window narrower than the δ spacing".into()));
                }
                let f = (t[a] - half) / (t[a] - t[b]);
                return Ok(x[a] + f * (x[b] - x[a]));
            }
            i = j;
        }
    };
    Ok(crossing(1)? - crossing(-1)?)
}

/// Local maxima of T away from δ = 0, as (δ, T) pairs.
pub fn transmission_peaks(spectrum: &SpectrumResult) -> Vec<(f64, f64)> {
    let t = &spectrum.transmission;
    (1..t.len().saturating_sub(1))
        .filter(|&i| t[i] > t[i - 1] && t[i] >= t[i + 1] && spectrum.delta_grid[i] != 0.0)
        .map(|i| (spectrum.delta_grid[i], t[i]))
        .collect()
}

/// Steady state reached by the time-domain equations under a tone drive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToneMeasurement {
    pub transmission: f64,
    pub reflection: f64,
    /// Largest |closure residual| of the excitation bookkeeping.
    pub closure_residual: f64,
}

/// Drives the full equations with a unit tone at detuning `delta`,
/// switched on over `ramp`, and averages |E₊(1)|² and |E₋(0)|² over the
/// outputs at t ≥ `average_from`.
pub fn tone_response(
    cfg: &EnsembleConfig,
    ctrl: &ControlSchedule,
    grid: &SimulationGrid,
    delta: f64,
    ramp: f64,
    average_from: f64,
) -> Result<ToneMeasurement> {
    use crate::state::{BoundaryDrive, FieldState, Signal};
    if !(average_from < grid.t_final) {
        return Err(Error::range("average_from", "must be earlier than grid.t_final"));
    }
    let drive = BoundaryDrive::forward(Signal::Tone {
        amplitude: 1.0,
        detuning: delta,
        ramp,
    });
    let traj = crate::mbe::run(cfg, grid, ctrl, &drive, &FieldState::zeros(grid.n_xi), grid.steps().max(1))?;
    let window: Vec<_> = traj.boundary_out.iter().filter(|b| b.t >= average_from - 1e-9).collect();
    let mean = |f: &dyn Fn(&crate::mbe::BoundarySample) -> f64| window.iter().map(|b| f(b)).sum::<f64>() / window.len() as f64;
    Ok(ToneMeasurement {
        transmission: mean(&|b| b.e_plus_out.norm_sqr() / b.e_plus_in.norm_sqr()),
        reflection: mean(&|b| b.e_minus_out.norm_sqr() / b.e_plus_in.norm_sqr()),
        closure_residual: traj.max_closure_residual(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn ctrl(op: f64, om: f64) -> ControlSchedule {
        ControlSchedule::constant(C64::new(op, 0.0), C64::new(om, 0.0), 0.0, 0.0)
    }

    #[test]
    fn bare_two_level_medium_absorbs() {
        let cfg = EnsembleConfig::new(3.0, 0.0);
        let s = steady_state_response(&cfg, &ctrl(0.0, 0.0), &[0.0]).unwrap();
        assert_relative_eq!(s.t_amp[0].re, (-3.0f64).exp(), max_relative = 1e-10);
        assert!(s.t_amp[0].im.abs() < 1e-12);
        assert!(s.r_amp[0].norm() < 1e-12);
        assert_relative_eq!(s.transmission[0], (-6.0f64).exp(), max_relative = 1e-10);
        // γ = 0 with no controls makes the spinwave equation singular
        assert_eq!(s.regularized, vec![0]);
    }

    #[test]
    fn eit_is_transparent_on_resonance() {
        let cfg = EnsembleConfig::new(100.0, 0.0);
        let s = steady_state_response(&cfg, &ctrl(1.0, 0.0), &[-0.05, 0.0, 0.05]).unwrap();
        assert_relative_eq!(s.transmission[1], 1.0, max_relative = 1e-10);
        assert!(s.reflection.iter().all(|r| *r < 1e-20));
        assert!(s.transmission[0] < 1.0);
    }

    #[test]
    fn lossless_bandgap_center() {
        // balanced controls, γ = 0: T = (2/(2+d))², R = (d/(2+d))²
        let d = 200.0;
        let cfg = EnsembleConfig::new(d, 0.0);
        let s = steady_state_response(&cfg, &ctrl(1.0, 1.0), &[0.0]).unwrap();
        assert_relative_eq!(s.transmission[0], (2.0 / (2.0 + d)).powi(2), max_relative = 1e-6);
        assert_relative_eq!(s.reflection[0], (d / (2.0 + d)).powi(2), max_relative = 1e-6);
    }

    #[test]
    fn eit_width_near_estimate() {
        let cfg = EnsembleConfig::new(100.0, 0.0);
        let c = ctrl(1.0, 0.0);
        let s = steady_state_response(&cfg, &c, &default_grid(&cfg, &c)).unwrap();
        let w = eit_window_width(&s).unwrap();
        let ratio = w / (1.0 / 10.0);
        assert!((0.5..2.0).contains(&ratio));
        // small-δ expansion: T = exp(−2dΓ²δ²/Ω⁴) gives FWHM √(2 ln 2) Ω²/(Γ√d)
        assert_relative_eq!(w, (2.0 * 2f64.ln()).sqrt() / 10.0, max_relative = 0.02);
    }

    #[test]
    fn width_doubles_with_control_power() {
        let cfg = EnsembleConfig::new(100.0, 0.0);
        let grid = symmetric_grid(0.6, 4001);
        let w1 = eit_window_width(&steady_state_response(&cfg, &ctrl(1.0, 0.0), &grid).unwrap()).unwrap();
        let w2 = eit_window_width(&steady_state_response(&cfg, &ctrl(2f64.sqrt(), 0.0), &grid).unwrap()).unwrap();
        assert!((w2 / w1 - 2.0).abs() < 0.2);
    }

    #[test]
    fn large_depth_stays_finite() {
        // a two-level backward field grows like e^d across the transfer matrix
        for d in [400.0, 1000.0, 2000.0] {
            let s = steady_state_response(&EnsembleConfig::new(d, 0.0), &ctrl(1.0, 0.0), &[0.0, 0.5, 5.0]).unwrap();
            assert!((s.transmission[0] - 1.0).abs() < 1e-9, "d = {d}");
            assert!(s.transmission[2] < 1e-10);
            assert!(s.reflection.iter().all(|r| r.abs() < 1e-12));
        }
    }

    #[test]
    fn vanishing_control_is_unresolved() {
        let cfg = EnsembleConfig::new(100.0, 0.0);
        let s = steady_state_response(&cfg, &ctrl(1e-3, 0.0), &symmetric_grid(0.1, 201)).unwrap();
        assert!(matches!(eit_window_width(&s), Err(Error::Resolution(_))));
        let s = steady_state_response(&cfg, &ctrl(3.0, 0.0), &symmetric_grid(0.1, 201)).unwrap();
        assert!(matches!(eit_window_width(&s), Err(Error::Resolution(_))));
    }

    #[test]
    fn time_dependent_controls_are_rejected() {
        let mut c = ctrl(1.0, 0.0);
        c.omega_plus = crate::config::Waveform::linear(vec![[0.0, 0.0, 0.0], [1.0, 1.0, 0.0]]);
        let err = steady_state_response(&EnsembleConfig::new(10.0, 0.0), &c, &[0.0]).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
    }

    #[test]
    fn peaks_finder() {
        let s = SpectrumResult {
            delta_grid: vec![-2.0, -1.0, 0.0, 1.0, 2.0],
            t_amp: vec![ZERO; 5],
            r_amp: vec![ZERO; 5],
            transmission: vec![0.1, 0.6, 0.0, 0.7, 0.2],
            reflection: vec![0.0; 5],
            regularized: vec![],
        };
        assert_eq!(transmission_peaks(&s), vec![(-1.0, 0.6), (1.0, 0.7)]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn passive(
            d in 0.5f64..150.0, gamma in 0.0f64..0.1, op in 0.0f64..3.0, om in 0.0f64..3.0,
            dp in -20.0f64..20.0, dm in -20.0f64..20.0, dk in -5.0f64..5.0, delta in -5.0f64..5.0,
        ) {
            let mut c = ControlSchedule::constant(C64::new(op, 0.0), C64::new(0.0, om), dp, dm);
            c.mismatch = dk;
            let s = steady_state_response(&EnsembleConfig::new(d, gamma), &c, &[delta]).unwrap();
            prop_assert!(s.transmission[0] >= 0.0 && s.reflection[0] >= 0.0);
            prop_assert!(s.transmission[0] + s.reflection[0] <= 1.0 + 1e-9);
        }

        #[test]
        fn balanced_medium_is_reciprocal(
            d in 1.0f64..200.0, gamma in 0.0f64..0.01, omega in 0.1f64..3.0, det in -10.0f64..10.0, delta in -2.0f64..2.0,
        ) {
            let c = ControlSchedule::constant(C64::new(omega, 0.0), C64::new(omega, 0.0), det, det);
            let cfg = EnsembleConfig::new(d, gamma);
            let f = response(&cfg, &c, &[delta], DriveSide::Forward).unwrap();
            let b = response(&cfg, &c, &[delta], DriveSide::Backward).unwrap();
            prop_assert!((f.transmission[0] - b.transmission[0]).abs() <= 1e-8 * (1.0 + f.transmission[0]));
            prop_assert!((f.reflection[0] - b.reflection[0]).abs() <= 1e-8 * (1.0 + f.reflection[0]));
        }
    }
}
