//! Time integration of a linear medium: local coherence dynamics at every
//! grid node, coupled to a forward and a backward probe that are slaved to
//! the coherences through ±∂ξE± = i√d P±.
//!
//! Each step is an implicit midpoint step. Solving for the midpoint state
//! turns the instantaneous field equations into a two-point boundary value
//! problem in ξ (E₊ fixed at ξ = 0, E₋ fixed at ξ = 1). Fields live on the
//! faces of the dual grid, atoms on the nodes, and each atom is driven by
//! the average of its two face fields. That box scheme is second order and
//! makes the atom–field exchange cancel exactly, so together with midpoint
//! accumulation of fluxes and losses the discrete excitation balance closes
//! to round-off.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::config::{ControlSchedule, EnsembleConfig, SimulationGrid, GAMMA_E};
use crate::numerics::{self, BandedSystem, I, ONE, ZERO};
use crate::state::BoundaryDrive;
use crate::{Error, Result};

/// Pointwise linear dynamics of the atomic coherences.
///
/// The generator must have anti-Hermitian off-diagonal part; its diagonal
/// real parts are the decay rates used for the loss bookkeeping.
pub trait LocalDynamics {
    /// Number of coherences per grid node.
    fn dim(&self) -> usize;
    /// Component that radiates (and is driven by) the forward probe.
    fn forward(&self) -> usize;
    /// Component that radiates (and is driven by) the backward probe.
    fn backward(&self) -> usize;
    /// Whether the generator is the same at every ξ at time `t`.
    fn uniform_at(&self, t: f64) -> bool;
    /// Writes the local generator at time `t` and position `xi` into `a`.
    fn generator(&self, t: f64, xi: f64, a: &mut DMatrix<C64>);
}

/// Cumulative excitation balance up to some time.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Ledger {
    pub input: f64,
    pub output: f64,
    pub output_forward: f64,
    pub output_backward: f64,
    /// Loss through decay of the optical coherences.
    pub loss_excited: f64,
    /// Loss through decay of the spinwave coherences.
    pub loss_spin: f64,
}

impl Ledger {
    pub fn loss(&self) -> f64 {
        self.loss_excited + self.loss_spin
    }
}

/// Result of one solve of the midpoint system.
struct Solved {
    y: Vec<C64>,
    faces: Faces,
}

/// Probe envelopes on the n + 1 cell faces of the dual grid: face 0 is
/// ξ = 0, face n is ξ = 1, and face j in between sits halfway between
/// nodes j − 1 and j. Node i owns the cell between faces i and i + 1.
pub struct Faces {
    pub plus: Vec<C64>,
    pub minus: Vec<C64>,
}

impl Faces {
    /// Field driving node i: the average over its cell.
    fn driving(&self, i: usize) -> (C64, C64) {
        (
            0.5 * (self.plus[i] + self.plus[i + 1]),
            0.5 * (self.minus[i] + self.minus[i + 1]),
        )
    }

    /// Node values: cell averages inside, true boundary values at the ends.
    pub fn at_nodes(&self) -> (Vec<C64>, Vec<C64>) {
        let n = self.plus.len() - 1;
        let mut plus: Vec<C64> = (0..n).map(|i| 0.5 * (self.plus[i] + self.plus[i + 1])).collect();
        let mut minus: Vec<C64> = (0..n).map(|i| 0.5 * (self.minus[i] + self.minus[i + 1])).collect();
        plus[0] = self.plus[0];
        plus[n - 1] = self.plus[n];
        minus[0] = self.minus[0];
        minus[n - 1] = self.minus[n];
        (plus, minus)
    }
}

pub struct Medium<'a, D: LocalDynamics> {
    dynamics: &'a D,
    n: usize,
    k: usize,
    sqrt_d: f64,
    xi: Vec<f64>,
    weights: Vec<f64>,
    /// Which components count as spinwave (for the loss split).
    spin_mask: Vec<bool>,
    band: BandedSystem,
    gen: DMatrix<C64>,
}

impl<'a, D: LocalDynamics> Medium<'a, D> {
    pub fn new(dynamics: &'a D, n: usize, d: f64, spin_mask: Vec<bool>) -> Self {
        let k = dynamics.dim();
        assert_eq!(spin_mask.len(), k);
        Self {
            dynamics,
            n,
            k,
            sqrt_d: d.sqrt(),
            xi: numerics::xi_nodes(n),
            weights: numerics::trapezoid_weights(n),
            spin_mask,
            band: BandedSystem::new(2 * n + 2, 2, 2),
            gen: DMatrix::zeros(k, k),
        }
    }

    pub fn dim(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.n
    }

    /// Face fields implied by the coherences `y` and the boundary inputs:
    /// E₊ jumps by wᵢ i√d P₊ across cell i, E₋ by −wᵢ i√d P₋.
    pub fn faces(&self, y: &[C64], inputs: (C64, C64)) -> Faces {
        let (f, b) = (self.dynamics.forward(), self.dynamics.backward());
        let n = self.n;
        let c = I * self.sqrt_d;
        let mut plus = vec![inputs.0; n + 1];
        let mut minus = vec![inputs.1; n + 1];
        for i in 0..n {
            plus[i + 1] = plus[i] + c * self.weights[i] * y[i * self.k + f];
        }
        for i in (0..n).rev() {
            minus[i] = minus[i + 1] + c * self.weights[i] * y[i * self.k + b];
        }
        Faces { plus, minus }
    }

    /// Node values of the probe envelopes (see [`Faces::at_nodes`]).
    pub fn fields(&self, y: &[C64], inputs: (C64, C64)) -> (Vec<C64>, Vec<C64>) {
        self.faces(y, inputs).at_nodes()
    }

    fn local_resolvent(&mut self, shift: f64, t: f64, xi: f64) -> Result<DMatrix<C64>> {
        self.dynamics.generator(t, xi, &mut self.gen);
        let m = DMatrix::<C64>::identity(self.k, self.k) - &self.gen * C64::new(shift, 0.0);
        m.try_inverse()
            .ok_or_else(|| Error::Domain(format!("singular local system at t = {t}, xi = {xi}")))
    }

    /// Solves y − a·f(y, t) = r, where f is the full right-hand side including
    /// the field coupling with boundary inputs `inputs` at time `t`.
    fn solve_shifted(&mut self, a: f64, t: f64, inputs: (C64, C64), r: &[C64]) -> Result<Solved> {
        let (n, k) = (self.n, self.k);
        let (f, b) = (self.dynamics.forward(), self.dynamics.backward());
        let coupling = C64::new(0.0, a * self.sqrt_d * GAMMA_E);
        let uniform = self.dynamics.uniform_at(t);

        // Per node: z = R r, and the responses of y to unit E₊ and E₋.
        let mut z = vec![ZERO; n * k];
        let mut resp_plus = vec![ZERO; n * k];
        let mut resp_minus = vec![ZERO; n * k];
        let mut shared = None;
        for i in 0..n {
            let owned;
            let res: &DMatrix<C64> = if uniform {
                if shared.is_none() {
                    shared = Some(self.local_resolvent(a, t, self.xi[0])?);
                }
                shared.as_ref().unwrap()
            } else {
                owned = self.local_resolvent(a, t, self.xi[i])?;
                &owned
            };
            let ri = DVector::from_column_slice(&r[i * k..(i + 1) * k]);
            let zi = res * ri;
            for c in 0..k {
                z[i * k + c] = zi[c];
                resp_plus[i * k + c] = coupling * res[(c, f)];
                resp_minus[i * k + c] = coupling * res[(c, b)];
            }
        }

        // Cell i: X_{i+1} − X_i = wᵢ (G Xᵢ̄ + q), Xᵢ̄ the face average,
        // with X = (E₊, E₋) and G, q from ∂ξE₊ = i√d P₊, ∂ξE₋ = −i√d P₋.
        let sd = I * self.sqrt_d;
        let band = &mut self.band;
        band.clear();
        band.add(0, 0, ONE);
        band.rhs[0] = inputs.0;
        for i in 0..n {
            let g = [
                [sd * resp_plus[i * k + f], sd * resp_minus[i * k + f]],
                [-sd * resp_plus[i * k + b], -sd * resp_minus[i * k + b]],
            ];
            let q = [sd * z[i * k + f], -sd * z[i * k + b]];
            let w = self.weights[i];
            for comp in 0..2 {
                let row = 2 * i + 1 + comp;
                for col in 0..2 {
                    let delta = if col == comp { ONE } else { ZERO };
                    let avg = 0.5 * w * g[comp][col];
                    band.add(row, 2 * (i + 1) + col, delta - avg);
                    band.add(row, 2 * i + col, -delta - avg);
                }
                band.rhs[row] = w * q[comp];
            }
        }
        band.add(2 * n + 1, 2 * n + 1, ONE);
        band.rhs[2 * n + 1] = inputs.1;
        let e = band.solve()?;
        let faces = Faces {
            plus: (0..=n).map(|j| e[2 * j]).collect(),
            minus: (0..=n).map(|j| e[2 * j + 1]).collect(),
        };

        let mut y = z;
        for i in 0..n {
            let (ep, em) = faces.driving(i);
            for c in 0..k {
                y[i * k + c] += resp_plus[i * k + c] * ep + resp_minus[i * k + c] * em;
            }
        }
        Ok(Solved { y, faces })
    }

    /// Advances `y` by one implicit midpoint step and books the midpoint
    /// fluxes and losses into `ledger`.
    pub fn step(
        &mut self,
        y: &mut [C64],
        t: f64,
        dt: f64,
        drive: &BoundaryDrive,
        ledger: &mut Ledger,
    ) -> Result<()> {
        let t_mid = t + 0.5 * dt;
        let inputs = drive.at(t_mid);
        let mid = self.solve_shifted(0.5 * dt, t_mid, inputs, y)?;

        let n = self.n;
        let k = self.k;
        ledger.input += dt * GAMMA_E * (inputs.0.norm_sqr() + inputs.1.norm_sqr());
        let out_f = dt * GAMMA_E * mid.faces.plus[n].norm_sqr();
        let out_b = dt * GAMMA_E * mid.faces.minus[0].norm_sqr();
        ledger.output_forward += out_f;
        ledger.output_backward += out_b;
        ledger.output += out_f + out_b;

        let uniform = self.dynamics.uniform_at(t_mid);
        let mut rates = vec![0.0; k];
        let refresh = |i: usize, gen: &mut DMatrix<C64>, rates: &mut Vec<f64>| {
            self.dynamics.generator(t_mid, self.xi[i], gen);
            for c in 0..k {
                rates[c] = -2.0 * gen[(c, c)].re;
            }
        };
        if uniform {
            refresh(0, &mut self.gen, &mut rates);
        }
        let (mut loss_e, mut loss_s) = (0.0, 0.0);
        for i in 0..n {
            if !uniform {
                refresh(i, &mut self.gen, &mut rates);
            }
            for c in 0..k {
                let l = self.weights[i] * rates[c] * mid.y[i * k + c].norm_sqr();
                if self.spin_mask[c] {
                    loss_s += l;
                } else {
                    loss_e += l;
                }
            }
        }
        ledger.loss_excited += dt * loss_e;
        ledger.loss_spin += dt * loss_s;

        for (yi, mi) in y.iter_mut().zip(&mid.y) {
            *yi = 2.0 * mi - *yi;
        }
        if !numerics::all_finite(y) {
            return Err(Error::Diverged { time: t + dt });
        }
        Ok(())
    }

    /// ∫ Σₖ |yₖ|² dξ.
    pub fn stored(&self, y: &[C64]) -> f64 {
        (0..self.n)
            .map(|i| {
                self.weights[i] * y[i * self.k..(i + 1) * self.k].iter().map(|z| z.norm_sqr()).sum::<f64>()
            })
            .sum()
    }
}

/// Internal step count per output step under the accuracy policy
/// dt ≤ 0.1 · min(1/Γ, 1/|Δ±|, 1/|Ω±|), extended to the drive carrier.
pub fn substeps(grid_dt: f64, ctrl: &ControlSchedule, drive: &BoundaryDrive) -> usize {
    let limit = 0.1 / ctrl.max_rate().max(drive.max_rate());
    ((grid_dt / limit) * (1.0 - 1e-12)).ceil().max(1.0) as usize
}

/// Per-step observation handed to the trajectory recorder.
pub struct Observation<'b> {
    pub step: usize,
    pub t: f64,
    pub y: &'b [C64],
    pub e_plus: &'b [C64],
    pub e_minus: &'b [C64],
    pub inputs: (C64, C64),
    pub ledger: &'b Ledger,
    pub stored: f64,
}

/// Runs `y0` over the grid, calling `observe` at t = 0 and after every
/// output step.
pub fn integrate<D: LocalDynamics>(
    dynamics: &D,
    spin_mask: Vec<bool>,
    ensemble: &EnsembleConfig,
    grid: &SimulationGrid,
    ctrl: &ControlSchedule,
    drive: &BoundaryDrive,
    y0: Vec<C64>,
    mut observe: impl FnMut(Observation<'_>),
) -> Result<Vec<C64>> {
    let mut medium = Medium::new(dynamics, grid.n_xi, ensemble.d, spin_mask);
    let mut y = y0;
    let mut ledger = Ledger::default();
    let sub = substeps(grid.dt, ctrl, drive);
    let h = grid.dt / sub as f64;
    let steps = if grid.t_final <= 0.0 { 0 } else { grid.steps() };

    let emit = |medium: &Medium<D>, y: &[C64], step: usize, t: f64, ledger: &Ledger, observe: &mut dyn FnMut(Observation<'_>)| {
        let inputs = drive.at(t);
        let (ep, em) = medium.fields(y, inputs);
        observe(Observation {
            step,
            t,
            y,
            e_plus: &ep,
            e_minus: &em,
            inputs,
            ledger,
            stored: medium.stored(y),
        });
    };
    emit(&medium, &y, 0, 0.0, &ledger, &mut observe);
    for step in 1..=steps {
        let t0 = (step - 1) as f64 * grid.dt;
        for j in 0..sub {
            medium.step(&mut y, t0 + j as f64 * h, h, drive, &mut ledger)?;
        }
        emit(&medium, &y, step, step as f64 * grid.dt, &ledger, &mut observe);
    }
    Ok(y)
}
