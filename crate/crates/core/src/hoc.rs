//! Higher-order-coherence ladder for standing-wave (single-colour) controls.
//!
//! With degenerate counterpropagating controls the spinwave carries
//! gratings σ₁₂^{(2n)} of every even momentum order and the optical
//! coherence every odd order σ₁₃^{(k)}:
//!
//! ```text
//! ∂t σ₁₃^{(k)}  = −(Γ_k + iΔ) σ₁₃^{(k)} + iΩ₊ σ₁₂^{(k−1)} + iΩ₋ σ₁₂^{(k+1)}   (+ i√d Γ E± for k = ±1)
//! ∂t σ₁₂^{(2n)} = −(γ_n + iδ) σ₁₂^{(2n)} + iΩ₊* σ₁₃^{(2n+1)} + iΩ₋* σ₁₃^{(2n−1)}
//! ```
//!
//! Only σ₁₃^{(±1)} radiate into the probes. The ladder is cut at |2n| ≤
//! 2·n_max. Motional decay washes out the fine gratings:
//! γ_n = γ + γ_m n^p for n ≥ 1 and Γ_k = Γ + γ_m n^p for |k| = 2n − 1 ≥ 3,
//! while σ₁₃^{(±1)} keep the bare Γ. The same power law is used for both
//! families.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::config::{ControlSchedule, EnsembleConfig, SimulationGrid, GAMMA_E};
use crate::mbe::{Recorder, Trajectory};
use crate::medium::{self, Ledger, LocalDynamics, Medium};
use crate::numerics::{norm_sq, trapezoid_weights, I, ZERO};
use crate::state::{BoundaryDrive, FieldState};
use crate::{Error, Result};

pub const DEFAULT_N_MAX: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HOCDecayModel {
    pub gamma_motion: f64,
    #[serde(default = "default_exponent")]
    pub exponent: u32,
}

fn default_exponent() -> u32 {
    2
}

impl HOCDecayModel {
    pub fn new(gamma_motion: f64) -> Self {
        Self {
            gamma_motion,
            exponent: 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_motion >= 0.0 && self.gamma_motion.is_finite()) {
            return Err(Error::range("gamma_motion", "must be finite and >= 0"));
        }
        if !matches!(self.exponent, 1 | 2) {
            return Err(Error::range("exponent", format!("must be 1 or 2, got {}", self.exponent)));
        }
        Ok(())
    }

    /// Extra decay of the order-n gratings.
    pub fn rate(&self, n: usize) -> f64 {
        self.gamma_motion * (n as f64).powi(self.exponent as i32)
    }
}

/// Truncated ladder of coherence envelopes on the ξ grid.
#[derive(Debug, Clone, PartialEq)]
pub struct HOCState {
    /// Spinwave gratings keyed by even order 2n, |n| ≤ n_max.
    pub s: BTreeMap<i32, Vec<C64>>,
    /// Optical coherences keyed by odd order, |k| ≤ 2n_max − 1.
    pub p: BTreeMap<i32, Vec<C64>>,
    pub e_plus: Vec<C64>,
    pub e_minus: Vec<C64>,
}

impl HOCState {
    pub fn zeros(n: usize, n_max: usize) -> Self {
        let n_max = n_max as i32;
        Self {
            s: (-n_max..=n_max).map(|j| (2 * j, vec![ZERO; n])).collect(),
            p: (-n_max..n_max).map(|j| (2 * j + 1, vec![ZERO; n])).collect(),
            e_plus: vec![ZERO; n],
            e_minus: vec![ZERO; n],
        }
    }

    /// Puts a secular state on the ladder: S → σ₁₂^{(0)}, P± → σ₁₃^{(±1)}.
    pub fn from_secular(state: &FieldState, n_max: usize) -> Result<Self> {
        state.check_shape()?;
        if n_max == 0 {
            return Err(Error::range("n_max", "must be >= 1"));
        }
        let mut out = Self::zeros(state.len(), n_max);
        out.s.insert(0, state.s.clone());
        out.p.insert(1, state.p_plus.clone());
        out.p.insert(-1, state.p_minus.clone());
        out.e_plus = state.e_plus.clone();
        out.e_minus = state.e_minus.clone();
        Ok(out)
    }

    /// The orders that the secular model keeps.
    pub fn to_secular(&self) -> FieldState {
        FieldState {
            e_plus: self.e_plus.clone(),
            e_minus: self.e_minus.clone(),
            p_plus: self.p[&1].clone(),
            p_minus: self.p[&-1].clone(),
            s: self.s[&0].clone(),
        }
    }

    pub fn n_max(&self) -> usize {
        (self.s.len() - 1) / 2
    }

    pub fn len(&self) -> usize {
        self.e_plus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.e_plus.is_empty()
    }

    pub fn check_shape(&self) -> Result<()> {
        let n = self.len();
        let n_max = self.s.len().saturating_sub(1) / 2;
        if n_max == 0 {
            return Err(Error::Shape("ladder needs n_max >= 1".into()));
        }
        let n_max = n_max as i32;
        let s_ok = self.s.len() == (2 * n_max + 1) as usize && (-n_max..=n_max).all(|j| self.s.contains_key(&(2 * j)));
        let p_ok = self.p.len() == (2 * n_max) as usize && (-n_max..n_max).all(|j| self.p.contains_key(&(2 * j + 1)));
        if !(s_ok && p_ok) {
            return Err(Error::Shape("ladder orders are not a contiguous truncation".into()));
        }
        if self.e_minus.len() != n || self.s.values().chain(self.p.values()).any(|v| v.len() != n) {
            return Err(Error::Shape("ladder arrays differ in length".into()));
        }
        Ok(())
    }

    /// ‖σ₁₂^{(2n)}‖ (trapezoid L2 norm over ξ) for every even order.
    pub fn order_norms(&self) -> Vec<(i32, f64)> {
        let w = trapezoid_weights(self.len());
        self.s
            .iter()
            .map(|(&k, v)| (k, v.iter().zip(&w).map(|(z, w)| w * z.norm_sqr()).sum::<f64>().sqrt()))
            .collect()
    }

    /// Total excitation held in all coherences.
    pub fn stored_excitation(&self) -> f64 {
        let w = trapezoid_weights(self.len());
        self.s
            .values()
            .chain(self.p.values())
            .map(|v| v.iter().zip(&w).map(|(z, w)| w * z.norm_sqr()).sum::<f64>())
            .sum()
    }
}

/// Requires equal one-photon detunings and no phase mismatch.
fn check_degenerate(ctrl: &ControlSchedule) -> Result<()> {
    if ctrl.delta_plus != ctrl.delta_minus || ctrl.mismatch != 0.0 {
        return Err(Error::Unsupported(
            "the coherence ladder needs single-colour controls (delta_plus == delta_minus, mismatch == 0); \
             use the secular mbe path for two-colour controls"
                .into(),
        ));
    }
    Ok(())
}

struct Ladder<'a> {
    n_max: usize,
    gamma: f64,
    decay: HOCDecayModel,
    ctrl: &'a ControlSchedule,
    /// Couplings to σ₁₂^{(±2)} and beyond; off reproduces the secular model.
    cross_coupling: bool,
}

impl Ladder<'_> {
    fn dim(&self) -> usize {
        4 * self.n_max + 1
    }

    fn s_index(&self, order: i32) -> Option<usize> {
        let j = order / 2 + self.n_max as i32;
        (order % 2 == 0 && (0..=2 * self.n_max as i32).contains(&j)).then_some(j as usize)
    }

    fn p_index(&self, order: i32) -> Option<usize> {
        let n = self.n_max as i32;
        (order % 2 != 0 && order.abs() < 2 * n).then(|| (2 * n + 1 + (order + 2 * n - 1) / 2) as usize)
    }

    fn spin_mask(&self) -> Vec<bool> {
        (0..self.dim()).map(|i| i <= 2 * self.n_max).collect()
    }

    fn pack(&self, st: &HOCState) -> Vec<C64> {
        let k = self.dim();
        let mut y = vec![ZERO; k * st.len()];
        for (&o, v) in &st.s {
            let c = self.s_index(o).expect("checked shape");
            for (i, z) in v.iter().enumerate() {
                y[k * i + c] = *z;
            }
        }
        for (&o, v) in &st.p {
            let c = self.p_index(o).expect("checked shape");
            for (i, z) in v.iter().enumerate() {
                y[k * i + c] = *z;
            }
        }
        y
    }

    fn unpack(&self, y: &[C64], e_plus: &[C64], e_minus: &[C64]) -> HOCState {
        let k = self.dim();
        let n = e_plus.len();
        let mut st = HOCState::zeros(n, self.n_max);
        for (&o, v) in st.s.iter_mut() {
            let c = self.s_index(o).expect("own layout");
            for (i, z) in v.iter_mut().enumerate() {
                *z = y[k * i + c];
            }
        }
        for (&o, v) in st.p.iter_mut() {
            let c = self.p_index(o).expect("own layout");
            for (i, z) in v.iter_mut().enumerate() {
                *z = y[k * i + c];
            }
        }
        st.e_plus = e_plus.to_vec();
        st.e_minus = e_minus.to_vec();
        st
    }
}

impl LocalDynamics for Ladder<'_> {
    fn dim(&self) -> usize {
        Ladder::dim(self)
    }
    fn forward(&self) -> usize {
        self.p_index(1).expect("n_max >= 1")
    }
    fn backward(&self) -> usize {
        self.p_index(-1).expect("n_max >= 1")
    }
    fn uniform_at(&self, _t: f64) -> bool {
        true
    }
    fn generator(&self, t: f64, _xi: f64, a: &mut DMatrix<C64>) {
        let c = self.ctrl.at(t);
        let n = self.n_max as i32;
        a.fill(ZERO);
        for j in -n..=n {
            let s = self.s_index(2 * j).expect("in range");
            let extra = self.decay.rate(j.unsigned_abs() as usize);
            a[(s, s)] = -C64::new(self.gamma + extra, c.two_photon_delta);
        }
        for k in (-2 * n + 1..2 * n).step_by(2) {
            let p = self.p_index(k).expect("in range");
            let order = (k.unsigned_abs() as usize + 1) / 2;
            let extra = if order >= 2 { self.decay.rate(order) } else { 0.0 };
            a[(p, p)] = -C64::new(GAMMA_E + extra, c.delta_plus);
            for (s_order, om) in [(k - 1, c.omega_plus), (k + 1, c.omega_minus)] {
                if !self.cross_coupling && s_order != 0 {
                    continue;
                }
                if let Some(s) = self.s_index(s_order) {
                    a[(p, s)] = I * om;
                    a[(s, p)] = I * om.conj();
                }
            }
        }
    }
}

fn ladder<'a>(state_n_max: usize, cfg: &EnsembleConfig, ctrl: &'a ControlSchedule, decay: &HOCDecayModel) -> Result<Ladder<'a>> {
    decay.validate()?;
    check_degenerate(ctrl)?;
    Ok(Ladder {
        n_max: state_n_max,
        gamma: cfg.gamma,
        decay: *decay,
        ctrl,
        cross_coupling: true,
    })
}

/// Advances the ladder by one implicit step of size `dt` from time `t`.
pub fn step_hoc(
    state: &HOCState,
    cfg: &EnsembleConfig,
    ctrl: &ControlSchedule,
    decay: &HOCDecayModel,
    drive: &BoundaryDrive,
    t: f64,
    dt: f64,
) -> Result<HOCState> {
    state.check_shape()?;
    let lad = ladder(state.n_max(), cfg, ctrl, decay)?;
    step_with(&lad, state, cfg, drive, t, dt)
}

fn step_with(lad: &Ladder<'_>, state: &HOCState, cfg: &EnsembleConfig, drive: &BoundaryDrive, t: f64, dt: f64) -> Result<HOCState> {
    let mut medium = Medium::new(lad, state.len(), cfg.d, lad.spin_mask());
    let mut y = lad.pack(state);
    medium.step(&mut y, t, dt, drive, &mut Ledger::default())?;
    let (ep, em) = medium.fields(&y, drive.at(t + dt));
    Ok(lad.unpack(&y, &ep, &em))
}

/// Integrates the ladder from `initial`, keeping every `stride`-th output.
pub fn run_hoc(
    cfg: &EnsembleConfig,
    grid: &SimulationGrid,
    ctrl: &ControlSchedule,
    drive: &BoundaryDrive,
    decay: &HOCDecayModel,
    initial: &HOCState,
    stride: usize,
) -> Result<Trajectory<HOCState>> {
    if stride == 0 {
        return Err(Error::range("stride", "must be >= 1"));
    }
    initial.check_shape()?;
    if initial.len() != grid.n_xi {
        return Err(Error::Shape(format!("initial state has {} nodes, grid has {}", initial.len(), grid.n_xi)));
    }
    let lad = ladder(initial.n_max(), cfg, ctrl, decay)?;
    run_with(&lad, cfg, grid, ctrl, drive, initial, stride)
}

fn run_with(
    lad: &Ladder<'_>,
    cfg: &EnsembleConfig,
    grid: &SimulationGrid,
    ctrl: &ControlSchedule,
    drive: &BoundaryDrive,
    initial: &HOCState,
    stride: usize,
) -> Result<Trajectory<HOCState>> {
    let mut rec = Recorder::new(stride);
    medium::integrate(lad, lad.spin_mask(), cfg, grid, ctrl, drive, lad.pack(initial), |obs| {
        rec.observe(&obs, || lad.unpack(obs.y, obs.e_plus, obs.e_minus))
    })?;
    Ok(rec.traj)
}

/// Relative L2 difference of the final order-0 spinwaves of two runs that
/// differ only in truncation order.
pub fn truncation_check(a: &Trajectory<HOCState>, b: &Trajectory<HOCState>) -> Result<f64> {
    if a.times.len() != b.times.len() || a.times.iter().zip(&b.times).any(|(x, y)| (x - y).abs() > 1e-9) {
        return Err(Error::Shape("trajectories have different time grids".into()));
    }
    let (sa, sb) = (&a.final_state().s[&0], &b.final_state().s[&0]);
    if sa.len() != sb.len() {
        return Err(Error::Shape(format!("spinwaves have {} and {} nodes", sa.len(), sb.len())));
    }
    let diff: Vec<C64> = sa.iter().zip(sb).map(|(x, y)| x - y).collect();
    let scale = norm_sq(sa).max(norm_sq(sb));
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok((norm_sq(&diff) / scale).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mbe;
    use crate::numerics::gaussian;
    use proptest::prelude::*;

    fn standing(omega: f64) -> ControlSchedule {
        ControlSchedule::constant(C64::new(omega, 0.0), C64::new(omega, 0.0), 0.0, 0.0)
    }

    fn stored(n: usize, n_max: usize) -> HOCState {
        HOCState::from_secular(&FieldState::from_spinwave(gaussian(n, 0.5, 0.08)), n_max).unwrap()
    }

    #[test]
    fn layout_round_trips() {
        let st = stored(16, 3);
        assert_eq!(st.s.keys().copied().collect::<Vec<_>>(), vec![-6, -4, -2, 0, 2, 4, 6]);
        assert_eq!(st.p.keys().copied().collect::<Vec<_>>(), vec![-5, -3, -1, 1, 3, 5]);
        let c = standing(1.0);
        let lad = ladder(3, &EnsembleConfig::new(10.0, 0.0), &c, &HOCDecayModel::new(0.0)).unwrap();
        let mut st2 = st.clone();
        for (i, v) in st2.s.values_mut().chain(st2.p.values_mut()).enumerate() {
            v[3] = C64::new(i as f64, 1.0);
        }
        let y = lad.pack(&st2);
        assert_eq!(lad.unpack(&y, &st2.e_plus, &st2.e_minus), st2);
        assert_eq!(st.to_secular().s, gaussian(16, 0.5, 0.08));
    }

    #[test]
    fn malformed_ladders_are_rejected() {
        let mut st = stored(16, 2);
        st.s.remove(&4);
        assert!(matches!(st.check_shape(), Err(Error::Shape(_))));
        let mut st = stored(16, 2);
        st.p.get_mut(&3).unwrap().pop();
        assert!(matches!(st.check_shape(), Err(Error::Shape(_))));
        assert!(HOCState::from_secular(&FieldState::zeros(4), 0).is_err());
    }

    #[test]
    fn decay_model_bounds() {
        assert!(HOCDecayModel::new(-1.0).validate().is_err());
        assert!(HOCDecayModel { gamma_motion: 1.0, exponent: 3 }.validate().is_err());
        let m = HOCDecayModel { gamma_motion: 2.0, exponent: 1 };
        assert_eq!(m.rate(3), 6.0);
        assert_eq!(HOCDecayModel::new(2.0).rate(3), 18.0);
    }

    #[test]
    fn two_colour_controls_are_unsupported() {
        let cfg = EnsembleConfig::new(10.0, 0.0);
        let st = stored(16, 1);
        let mut c = ControlSchedule::constant(C64::new(1.0, 0.0), C64::new(1.0, 0.0), 1.0, -1.0);
        let e = step_hoc(&st, &cfg, &c, &HOCDecayModel::new(0.0), &BoundaryDrive::none(), 0.0, 0.1).unwrap_err();
        assert!(matches!(e, Error::Unsupported(_)));
        c = standing(1.0);
        c.mismatch = 0.5;
        assert!(step_hoc(&st, &cfg, &c, &HOCDecayModel::new(0.0), &BoundaryDrive::none(), 0.0, 0.1).is_err());
    }

    #[test]
    fn without_cross_coupling_the_ladder_is_secular() {
        let cfg = EnsembleConfig::new(40.0, 0.01);
        let c = ControlSchedule::constant(C64::new(1.0, 0.2), C64::new(0.7, 0.0), 0.5, 0.5);
        let fs = FieldState::from_spinwave(gaussian(32, 0.4, 0.1));
        let drive = BoundaryDrive::forward(crate::state::Signal::Gaussian { amplitude: 1.0, center: 0.5, width: 0.3 });
        let mut lad = ladder(1, &cfg, &c, &HOCDecayModel::new(0.0)).unwrap();
        lad.cross_coupling = false;
        let mut h = HOCState::from_secular(&fs, 1).unwrap();
        let mut s = fs;
        for j in 0..20 {
            let t = j as f64 * 0.05;
            h = step_with(&lad, &h, &cfg, &drive, t, 0.05).unwrap();
            s = mbe::step_secular(&s, &cfg, &c, &drive, t, 0.05).unwrap();
        }
        let r = h.to_secular();
        for (a, b) in [(&r.s, &s.s), (&r.p_plus, &s.p_plus), (&r.p_minus, &s.p_minus), (&r.e_plus, &s.e_plus), (&r.e_minus, &s.e_minus)] {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).norm() < 1e-13);
            }
        }
        assert!(h.s[&2].iter().chain(&h.s[&-2]).all(|z| *z == ZERO));
    }

    fn hold(gm: f64, n_max: usize, t_final: f64) -> Trajectory<HOCState> {
        let cfg = EnsembleConfig::new(20.0, 0.0);
        let st = HOCState::from_secular(&FieldState::from_spinwave(gaussian(64, 0.5, 0.1)), n_max).unwrap();
        run_hoc(&cfg, &SimulationGrid::new(64, 0.05, t_final), &standing(1.0), &BoundaryDrive::none(), &HOCDecayModel::new(gm), &st, 10)
            .unwrap()
    }

    fn secular_hold(t_final: f64) -> mbe::Trajectory {
        let cfg = EnsembleConfig::new(20.0, 0.0);
        let fs = FieldState::from_spinwave(gaussian(64, 0.5, 0.1));
        mbe::run(&cfg, &SimulationGrid::new(64, 0.05, t_final), &standing(1.0), &BoundaryDrive::none(), &fs, 10).unwrap()
    }

    #[test]
    fn cold_atoms_leak_more_than_the_secular_model() {
        let sec = secular_hold(6.0).final_bookkeeping().ledger.output;
        let cold = hold(0.0, 3, 6.0).final_bookkeeping().ledger.output;
        assert!(cold > 2.0 * sec, "{cold} vs {sec}");
    }

    #[test]
    fn hot_atoms_recover_the_secular_hold() {
        let sec = secular_hold(6.0);
        let hot = hold(1e3, 3, 6.0);
        let rel = |a: f64, b: f64| (a - b).abs() / b;
        assert!(rel(hot.final_bookkeeping().stored, sec.final_bookkeeping().stored) < 0.01);
        assert!(rel(hot.final_bookkeeping().ledger.output, sec.final_bookkeeping().ledger.output) < 0.01);
    }

    #[test]
    fn truncation_converges_in_order() {
        let runs: Vec<_> = (1..=4).map(|m| hold(0.0, m, 6.0)).collect();
        let diffs: Vec<f64> = runs.windows(2).map(|w| truncation_check(&w[0], &w[1]).unwrap()).collect();
        assert!(diffs.windows(2).all(|w| w[1] < w[0]), "{diffs:?}");
        assert!(diffs[2] < 0.05);
    }

    #[test]
    fn excitation_balance_closes() {
        let tr = hold(0.0, 2, 10.0);
        assert!(tr.max_closure_residual() < 1e-10, "{}", tr.max_closure_residual());
        assert!(tr.final_bookkeeping().ledger.output > 0.0);
    }

    #[test]
    fn fast_motion_suppresses_the_gratings() {
        let tr = hold(1e3, 3, 5.0);
        let norms = tr.final_state().order_norms();
        let zero = norms.iter().find(|(k, _)| *k == 0).unwrap().1;
        for (k, v) in norms {
            if k != 0 {
                assert!(v < 1e-2 * zero, "order {k}: {v} vs {zero}");
            }
        }
    }

    #[test]
    fn truncation_check_basics() {
        let a = hold(1e3, 2, 4.0);
        let b = hold(1e3, 3, 4.0);
        assert_eq!(truncation_check(&a, &a).unwrap(), 0.0);
        assert!(truncation_check(&a, &b).unwrap() < 1e-6);
        let c = hold(1e3, 2, 3.0);
        assert!(matches!(truncation_check(&a, &c), Err(Error::Shape(_))));
    }

    #[test]
    fn gratings_are_mirror_images() {
        let tr = hold(0.0, 2, 6.0);
        for snap in &tr.snapshots {
            let n = snap.len();
            for k in [2, 4] {
                for i in 0..n {
                    let d = snap.s[&k][i] - snap.s[&-k][n - 1 - i];
                    assert!(d.norm() < 1e-12, "order {k} node {i}");
                }
            }
            for i in 0..n {
                assert!((snap.e_plus[i] - snap.e_minus[n - 1 - i]).norm() < 1e-12);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(6))]

        #[test]
        fn leakage_falls_with_motional_decay(base in 0.01f64..0.1) {
            let mut last = f64::INFINITY;
            for gm in [0.0, base, 10.0 * base, 100.0 * base, 1e3 * base] {
                let leaked = hold(gm, 3, 6.0).final_bookkeeping().ledger.output;
                prop_assert!(leaked <= last * (1.0 + 1e-9), "gm {gm}: {leaked} > {last}");
                last = leaked;
            }
        }
    }
}
