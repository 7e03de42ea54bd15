//! Secular counterpropagating Maxwell–Bloch equations:
//!
//! ```text
//! ∂t P± = −(Γ + iΔ±) P± + i√d Γ E± + iΩ± S
//! ∂t S  = −(γ + iδ) S + iΩ₊* P₊ + iΩ₋* P₋
//! ±∂ξ E± = i√d P±
//! ```
//!
//! The two-photon detuning δ sits on the spinwave (one common rotating
//! frame), so δ = 0 is the stationary-light resonance. The probes carry no
//! time derivative: the medium is short compared with every timescale.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::config::{ControlSchedule, ControlValues, EnsembleConfig, SimulationGrid, GAMMA_E};
use crate::medium::{self, Ledger, LocalDynamics, Medium, Observation};
use crate::numerics::{I, ZERO};
use crate::state::{BoundaryDrive, FieldState};
use crate::{Error, Result};

const P_PLUS: usize = 0;
const P_MINUS: usize = 1;
const SPIN: usize = 2;

pub(crate) struct Secular<'a> {
    pub gamma: f64,
    pub ctrl: &'a ControlSchedule,
}

impl Secular<'_> {
    fn fill(&self, c: &ControlValues, xi: f64, a: &mut DMatrix<C64>) {
        let om_p = c.omega_plus;
        let om_m = c.omega_minus_at(xi);
        a.fill(ZERO);
        a[(P_PLUS, P_PLUS)] = -C64::new(GAMMA_E, c.delta_plus);
        a[(P_MINUS, P_MINUS)] = -C64::new(GAMMA_E, c.delta_minus);
        a[(SPIN, SPIN)] = -C64::new(self.gamma, c.two_photon_delta);
        a[(P_PLUS, SPIN)] = I * om_p;
        a[(P_MINUS, SPIN)] = I * om_m;
        a[(SPIN, P_PLUS)] = I * om_p.conj();
        a[(SPIN, P_MINUS)] = I * om_m.conj();
    }
}

impl LocalDynamics for Secular<'_> {
    fn dim(&self) -> usize {
        3
    }
    fn forward(&self) -> usize {
        P_PLUS
    }
    fn backward(&self) -> usize {
        P_MINUS
    }
    fn uniform_at(&self, t: f64) -> bool {
        self.ctrl.mismatch == 0.0 || self.ctrl.omega_minus.at(t) == ZERO
    }
    fn generator(&self, t: f64, xi: f64, a: &mut DMatrix<C64>) {
        self.fill(&self.ctrl.at(t), xi, a);
    }
}

fn spin_mask() -> Vec<bool> {
    vec![false, false, true]
}

fn pack(state: &FieldState) -> Vec<C64> {
    let n = state.len();
    let mut y = vec![ZERO; 3 * n];
    for i in 0..n {
        y[3 * i + P_PLUS] = state.p_plus[i];
        y[3 * i + P_MINUS] = state.p_minus[i];
        y[3 * i + SPIN] = state.s[i];
    }
    y
}

fn unpack(y: &[C64], e_plus: &[C64], e_minus: &[C64]) -> FieldState {
    let n = e_plus.len();
    FieldState {
        e_plus: e_plus.to_vec(),
        e_minus: e_minus.to_vec(),
        p_plus: (0..n).map(|i| y[3 * i + P_PLUS]).collect(),
        p_minus: (0..n).map(|i| y[3 * i + P_MINUS]).collect(),
        s: (0..n).map(|i| y[3 * i + SPIN]).collect(),
    }
}

/// Advances the coherences by one step of size `dt` starting at time `t`
/// and re-solves the probe envelopes at `t + dt`.
pub fn step_secular(
    state: &FieldState,
    cfg: &EnsembleConfig,
    ctrl: &ControlSchedule,
    drive: &BoundaryDrive,
    t: f64,
    dt: f64,
) -> Result<FieldState> {
    state.check_shape()?;
    let dynamics = Secular {
        gamma: cfg.gamma,
        ctrl,
    };
    let mut medium = Medium::new(&dynamics, state.len(), cfg.d, spin_mask());
    let mut y = pack(state);
    let mut ledger = Ledger::default();
    medium.step(&mut y, t, dt, drive, &mut ledger)?;
    let (ep, em) = medium.fields(&y, drive.at(t + dt));
    Ok(unpack(&y, &ep, &em))
}

/// Probe values leaving the medium, E₊(ξ=1) and E₋(ξ=0), with the inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySample {
    pub t: f64,
    pub e_plus_out: C64,
    pub e_minus_out: C64,
    pub e_plus_in: C64,
    pub e_minus_in: C64,
}

/// Cumulative flux and loss integrals at one output time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bookkeeping {
    pub t: f64,
    pub stored: f64,
    pub ledger: Ledger,
    /// (initial stored + input − stored − output − losses) / (initial stored + input)
    pub closure_residual: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory<T = FieldState> {
    pub times: Vec<f64>,
    pub snapshots: Vec<T>,
    /// One sample per output step, including t = 0.
    pub boundary_out: Vec<BoundarySample>,
    /// One entry per output step, including t = 0.
    pub bookkeeping: Vec<Bookkeeping>,
}

impl<T> Trajectory<T> {
    pub fn final_state(&self) -> &T {
        self.snapshots.last().expect("trajectory always holds the initial snapshot")
    }

    pub fn final_bookkeeping(&self) -> &Bookkeeping {
        self.bookkeeping.last().expect("trajectory always holds t = 0")
    }

    /// Bookkeeping entry closest to time `t`.
    pub fn bookkeeping_at(&self, t: f64) -> &Bookkeeping {
        let idx = self
            .bookkeeping
            .partition_point(|b| b.t < t - 1e-9)
            .min(self.bookkeeping.len() - 1);
        &self.bookkeeping[idx]
    }

    pub fn max_closure_residual(&self) -> f64 {
        self.bookkeeping
            .iter()
            .map(|b| b.closure_residual.abs())
            .fold(0.0, f64::max)
    }

    /// Output energy collected in the window [t0, t1].
    pub fn output_between(&self, t0: f64, t1: f64) -> f64 {
        self.bookkeeping_at(t1).ledger.output - self.bookkeeping_at(t0).ledger.output
    }
}

/// Records a trajectory from engine observations.
pub(crate) struct Recorder<T> {
    stride: usize,
    initial_stored: f64,
    pub traj: Trajectory<T>,
}

impl<T> Recorder<T> {
    pub fn new(stride: usize) -> Self {
        Self {
            stride,
            initial_stored: 0.0,
            traj: Trajectory {
                times: vec![],
                snapshots: vec![],
                boundary_out: vec![],
                bookkeeping: vec![],
            },
        }
    }

    pub fn observe(&mut self, obs: &Observation<'_>, snapshot: impl FnOnce() -> T) {
        let n = obs.e_plus.len();
        if obs.step == 0 {
            self.initial_stored = obs.stored;
        }
        self.traj.boundary_out.push(BoundarySample {
            t: obs.t,
            e_plus_out: obs.e_plus[n - 1],
            e_minus_out: obs.e_minus[0],
            e_plus_in: obs.inputs.0,
            e_minus_in: obs.inputs.1,
        });
        let l = obs.ledger;
        let budget = self.initial_stored + l.input;
        let imbalance = budget - obs.stored - l.output - l.loss();
        self.traj.bookkeeping.push(Bookkeeping {
            t: obs.t,
            stored: obs.stored,
            ledger: *l,
            closure_residual: if budget > 0.0 { imbalance / budget } else { imbalance },
        });
        if obs.step % self.stride == 0 {
            self.traj.times.push(obs.t);
            self.traj.snapshots.push(snapshot());
        }
    }
}

/// Integrates the secular equations from `initial` over `grid`, keeping a
/// snapshot every `stride` output steps.
pub fn run(
    cfg: &EnsembleConfig,
    grid: &SimulationGrid,
    ctrl: &ControlSchedule,
    drive: &BoundaryDrive,
    initial: &FieldState,
    stride: usize,
) -> Result<Trajectory> {
    if stride == 0 {
        return Err(Error::range("stride", "must be >= 1"));
    }
    initial.check_shape()?;
    if initial.len() != grid.n_xi {
        return Err(Error::Shape(format!(
            "initial state has {} nodes, grid has {}",
            initial.len(),
            grid.n_xi
        )));
    }
    let dynamics = Secular {
        gamma: cfg.gamma,
        ctrl,
    };
    let mut rec = Recorder::new(stride);
    medium::integrate(
        &dynamics,
        spin_mask(),
        cfg,
        grid,
        ctrl,
        drive,
        pack(initial),
        |obs| {
            let snap = || unpack(obs.y, obs.e_plus, obs.e_minus);
            rec.observe(&obs, snap)
        },
    )?;
    Ok(rec.traj)
}
