//! The pipelines behind each scenario. Each returns its artifacts and
//! summary metrics without touching the filesystem.

use std::collections::BTreeMap;

use super::output::{line_plot, Artifact, Series, Table};
use super::params::*;
use crate::config::{ControlSchedule, EnsembleConfig, SimulationGrid, Waveform};
use crate::hoc::{self, HOCDecayModel, HOCState};
use crate::mbe::{self, Trajectory};
use crate::numerics::{self, gaussian, norm_sq, rel_l2};
use crate::state::{BoundaryDrive, FieldState, Signal};
use crate::{eit, raman, spectra, Config, Error, Result, C64};

pub type Metrics = BTreeMap<String, f64>;

#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    pub metrics: Metrics,
}

impl Outcome {
    fn metric(&mut self, key: &str, v: f64) {
        self.metrics.insert(key.to_string(), v);
    }
}

fn stride_for(grid: &SimulationGrid, max_snapshots: usize) -> usize {
    let steps = grid.steps().max(1);
    steps.div_ceil(max_snapshots.max(1)).max(1)
}

fn spinwave_table(times: &[f64], spinwaves: &[&[C64]]) -> Table {
    let mut t = Table::new(["t", "xi", "re_s", "im_s", "abs2_s"]);
    for (time, s) in times.iter().zip(spinwaves) {
        let xi = numerics::xi_nodes(s.len());
        for (x, z) in xi.iter().zip(s.iter()) {
            t.push_nums(&[*time, *x, z.re, z.im, z.norm_sqr()]);
        }
    }
    t
}

fn boundary_table<T>(traj: &Trajectory<T>) -> Table {
    let mut t = Table::new([
        "t",
        "re_e_plus_out",
        "im_e_plus_out",
        "abs2_e_plus_out",
        "re_e_minus_out",
        "im_e_minus_out",
        "abs2_e_minus_out",
    ]);
    for b in &traj.boundary_out {
        let (p, m) = (b.e_plus_out, b.e_minus_out);
        t.push_nums(&[b.t, p.re, p.im, p.norm_sqr(), m.re, m.im, m.norm_sqr()]);
    }
    t
}

fn bookkeeping_table<T>(traj: &Trajectory<T>) -> Table {
    let mut t = Table::new(["t", "stored", "out", "loss", "closure_residual"]);
    for b in &traj.bookkeeping {
        t.push_nums(&[b.t, b.stored, b.ledger.output, b.ledger.loss(), b.closure_residual]);
    }
    t
}

/// Spinwave, boundary and bookkeeping files of a secular run.
fn mbe_artifacts(traj: &Trajectory) -> Vec<Artifact> {
    let s: Vec<&[C64]> = traj.snapshots.iter().map(|f| f.s.as_slice()).collect();
    vec![
        Artifact::csv("spinwave.csv", &spinwave_table(&traj.times, &s)),
        Artifact::csv("fields_boundary.csv", &boundary_table(traj)),
        Artifact::csv("bookkeeping.csv", &bookkeeping_table(traj)),
    ]
}

/// Intensity-weighted mean time of a boundary series.
fn centroid(times: &[f64], intensity: &[f64]) -> f64 {
    let norm: f64 = intensity.iter().sum();
    times.iter().zip(intensity).map(|(t, i)| t * i).sum::<f64>() / norm
}

fn pulse_drive(p: &Pulse) -> BoundaryDrive {
    BoundaryDrive::forward(Signal::Gaussian {
        amplitude: p.amplitude,
        center: p.center,
        width: p.width,
    })
}

fn real_waveform(points: &[(f64, f64)]) -> Waveform {
    Waveform::linear(points.iter().map(|&(t, v)| [t, v, 0.0]).collect())
}

pub fn slow_light(cfg: &Config, p: &SlowLightParams) -> Result<Outcome> {
    let drive = pulse_drive(&p.pulse);
    let traj = mbe::run(&cfg.ensemble, &cfg.grid, &cfg.controls, &drive, &FieldState::zeros(cfg.grid.n_xi), stride_for(&cfg.grid, p.max_snapshots))?;
    let fin = traj.final_bookkeeping();
    let input = fin.ledger.input;
    let times: Vec<f64> = traj.boundary_out.iter().map(|b| b.t).collect();
    let i_in: Vec<f64> = traj.boundary_out.iter().map(|b| b.e_plus_in.norm_sqr()).collect();
    let i_out: Vec<f64> = traj.boundary_out.iter().map(|b| b.e_plus_out.norm_sqr()).collect();

    let mut out = Outcome {
        artifacts: mbe_artifacts(&traj),
        ..Default::default()
    };
    out.artifacts.push(Artifact::svg(
        "fields_boundary.svg",
        line_plot("probe intensity", "t Γ", &[Series { label: "|E₊(0)|²", x: &times, y: &i_in }, Series { label: "|E₊(1)|²", x: &times, y: &i_out }]),
    ));
    out.metric("input_energy", input);
    out.metric("transmitted_fraction", fin.ledger.output_forward / input);
    out.metric("reflected_fraction", fin.ledger.output_backward / input);
    out.metric("delay", centroid(&times, &i_out) - centroid(&times, &i_in));
    let om2 = cfg.controls.omega_plus.at(p.pulse.center).norm_sqr();
    out.metric("predicted_delay", if om2 > 0.0 { cfg.ensemble.d / om2 } else { f64::NAN });
    out.metric("stored_fraction", fin.stored / input);
    out.metric("closure_residual", traj.max_closure_residual());
    Ok(out)
}

/// Forward control for write / dark hold / recall.
pub fn storage_control(omega: f64, store_at: f64, hold: f64, ramp: f64) -> Waveform {
    if hold == 0.0 {
        return Waveform::constant(C64::new(omega, 0.0));
    }
    real_waveform(&[
        (0.0, omega),
        (store_at, omega),
        (store_at + ramp, 0.0),
        (store_at + ramp + hold, 0.0),
        (store_at + 2.0 * ramp + hold, omega),
    ])
}

pub fn stored_light(cfg: &Config, p: &StoredLightParams) -> Result<Outcome> {
    let mut ctrl = cfg.controls.clone();
    ctrl.omega_plus = storage_control(p.omega, p.store_at, p.hold, p.ramp);
    ctrl.omega_minus = Waveform::default();
    let traj = mbe::run(&cfg.ensemble, &cfg.grid, &ctrl, &pulse_drive(&p.pulse), &FieldState::zeros(cfg.grid.n_xi), stride_for(&cfg.grid, p.max_snapshots))?;
    let fin = traj.final_bookkeeping();
    let at_store = traj.bookkeeping_at(p.store_at);
    let input = fin.ledger.input;
    let mut out = Outcome {
        artifacts: mbe_artifacts(&traj),
        ..Default::default()
    };
    out.metric("input_energy", input);
    out.metric("leaked_fraction", at_store.ledger.output / input);
    out.metric("recalled_fraction", (fin.ledger.output_forward - at_store.ledger.output_forward) / input);
    out.metric("stored_at_hold", traj.bookkeeping_at(p.store_at + p.ramp).stored / input);
    out.metric("closure_residual", traj.max_closure_residual());
    Ok(out)
}

pub fn eit_sl(cfg: &Config, p: &EitSlParams) -> Result<Outcome> {
    let (s, r, h) = (p.store_at, p.ramp, p.sl_duration);
    let sl_start = s + 2.0 * r;
    let sl_end = sl_start + h;
    let mut ctrl = cfg.controls.clone();
    ctrl.omega_plus = real_waveform(&[(0.0, p.omega), (s, p.omega), (s + r, 0.0), (s + r, 0.0), (sl_start, p.omega)]);
    ctrl.omega_minus = real_waveform(&[(0.0, 0.0), (s + r, 0.0), (sl_start, p.omega), (sl_end, p.omega), (sl_end + r, 0.0)]);
    let traj = mbe::run(&cfg.ensemble, &cfg.grid, &ctrl, &pulse_drive(&p.pulse), &FieldState::zeros(cfg.grid.n_xi), 1)?;
    let fin = traj.final_bookkeeping();
    let input = fin.ledger.input;

    let mut out = Outcome::default();
    let stride = stride_for(&cfg.grid, p.max_snapshots);
    let kept: Vec<usize> = (0..traj.times.len()).step_by(stride).collect();
    let times: Vec<f64> = kept.iter().map(|&k| traj.times[k]).collect();
    let s_kept: Vec<&[C64]> = kept.iter().map(|&k| traj.snapshots[k].s.as_slice()).collect();
    out.artifacts.push(Artifact::csv("spinwave.csv", &spinwave_table(&times, &s_kept)));
    out.artifacts.push(Artifact::csv("fields_boundary.csv", &boundary_table(&traj)));
    out.artifacts.push(Artifact::csv("bookkeeping.csv", &bookkeeping_table(&traj)));

    // reduced model over the hold, started from the full model's spinwave
    let idx = |t: f64| traj.times.partition_point(|x| *x < t - 1e-9).min(traj.times.len() - 1);
    let (k0, k1) = (idx(sl_start), idx(sl_end));
    let at0 = traj.snapshots[k0].s.clone();
    let c = ctrl.at(sl_start);
    let angles = eit::mixing_angles(c.omega_plus, c.omega_minus_at(0.0), cfg.ensemble.d, crate::config::GAMMA_E)?;
    let sample_times: Vec<f64> = (0..=50).map(|j| h * j as f64 / 50.0).collect();
    let reduced = eit::diffusion_trajectory(&at0, &angles, cfg.ensemble.d, crate::config::GAMMA_E, &sample_times)?;
    let mut moments = Table::new(["t", "centroid", "width_sq", "norm"]);
    for (t, sw) in sample_times.iter().zip(&reduced) {
        let (c, w) = numerics::intensity_moments(sw).unwrap_or((f64::NAN, f64::NAN));
        moments.push_nums(&[sl_start + t, c, w, norm_sq(sw)]);
    }
    out.artifacts.push(Artifact::csv("eit_moments.csv", &moments));

    let leaked = traj.output_between(sl_start - r, sl_end);
    out.metric("input_energy", input);
    out.metric("write_leaked_fraction", traj.bookkeeping_at(s).ledger.output / input);
    out.metric("stored_at_hold", traj.bookkeeping_at(sl_start).stored / input);
    out.metric("leaked_fraction", leaked / input);
    out.metric(
        "recalled_fraction",
        (fin.ledger.output_forward - traj.bookkeeping_at(sl_end).ledger.output_forward) / input,
    );
    out.metric("reduced_model_rel_l2", rel_l2(&reduced[reduced.len() - 1], &traj.snapshots[k1].s));
    out.metric("closure_residual", traj.max_closure_residual());
    Ok(out)
}

/// Ω and Δ of a Raman run after parameter overrides.
fn raman_controls(cfg: &Config, p: &RamanParams) -> ControlSchedule {
    let mut ctrl = cfg.controls.clone();
    if let Some(d) = p.delta {
        ctrl.delta_plus = d;
        ctrl.delta_minus = -d;
    }
    if let Some(o) = p.omega {
        ctrl.omega_plus = Waveform::constant(C64::new(o, 0.0));
        ctrl.omega_minus = Waveform::constant(C64::new(o, 0.0));
    }
    ctrl
}

/// Rejects Raman-model inputs that are not equal-and-opposite.
pub fn check_raman(cfg: &Config, p: &RamanParams) -> Result<()> {
    if p.engine == RamanEngine::Mbe {
        return Ok(());
    }
    let ctrl = raman_controls(cfg, p);
    let hint = "; set scenario.parameters.engine = \"mbe\" to run the general equations instead";
    if ctrl.delta_minus != -ctrl.delta_plus {
        return Err(Error::validation("controls.delta_minus", format!("the Raman model needs Δ₋ = −Δ₊{hint}")));
    }
    if !ctrl.omega_plus.is_constant() || !ctrl.omega_minus.is_constant() || ctrl.omega_plus.at(0.0) != ctrl.omega_minus.at(0.0) {
        return Err(Error::validation("controls.omega_minus", format!("the Raman model needs equal constant drives{hint}")));
    }
    if ctrl.delta_plus.abs() < raman::MIN_DETUNING {
        return Err(Error::range(
            "controls.delta_plus",
            format!("the Raman model needs |Δ| >= {}, got {}{hint}", raman::MIN_DETUNING, ctrl.delta_plus),
        ));
    }
    Ok(())
}

fn lobes(n: usize, centers: [f64; 2], width: f64, sign: f64) -> Vec<C64> {
    gaussian(n, centers[0], width).iter().zip(gaussian(n, centers[1], width)).map(|(a, b)| a + sign * b).collect()
}

pub fn raman_sl(cfg: &Config, p: &RamanParams, antisymmetric: bool) -> Result<Outcome> {
    check_raman(cfg, p)?;
    let n = cfg.grid.n_xi;
    let s0 = lobes(n, p.lobes, p.width, if antisymmetric { -1.0 } else { 1.0 });
    let ctrl = raman_controls(cfg, p);
    let ens = &cfg.ensemble;
    let t_end = cfg.grid.t_final;
    let times: Vec<f64> = (0..p.samples).map(|k| t_end * k as f64 / (p.samples - 1) as f64).collect();
    let om = ctrl.omega_plus.at(0.0);
    let mut params = raman::RamanParams::new(om, ctrl.delta_plus, ens.gamma);
    params.mismatch = ctrl.mismatch;

    let mut out = Outcome::default();
    let (spinwaves, closure) = match p.engine {
        RamanEngine::Raman => {
            let traj = raman::raman_trajectory(&s0, ens.d, crate::config::GAMMA_E, &params, &times)?;
            let flux: Vec<f64> = traj
                .iter()
                .map(|s| {
                    let (ep, em) = raman::probe_fields_from_spinwave(s, ens.d, &params).expect("validated");
                    ep[n - 1].norm_sqr() + em[0].norm_sqr()
                })
                .collect();
            let held: Vec<f64> = traj.iter().map(|s| norm_sq(s)).collect();
            let emitted = integrate_samples(&times, &flux);
            let dephased = 2.0 * ens.gamma * integrate_samples(&times, &held);
            let closure = (held[0] - held[held.len() - 1] - emitted - dephased) / held[0];
            (traj, closure.abs())
        }
        RamanEngine::Mbe => {
            // the reduced model's frame differs from the full one by e^{iκξ}
            let kappa = if ctrl.delta_plus != 0.0 && ctrl.delta_minus == -ctrl.delta_plus {
                params.frame_wavenumber(ens.d, crate::config::GAMMA_E)
            } else {
                0.0
            };
            let xi = numerics::xi_nodes(n);
            let phase = |sign: f64| -> Vec<C64> { xi.iter().map(|x| C64::from_polar(1.0, sign * kappa * x)).collect() };
            let (fwd, back) = (phase(1.0), phase(-1.0));
            let init: Vec<C64> = s0.iter().zip(&fwd).map(|(a, b)| a * b).collect();
            let stride = (cfg.grid.steps() / (p.samples - 1)).max(1);
            let traj = mbe::run(ens, &cfg.grid, &ctrl, &BoundaryDrive::none(), &FieldState::from_spinwave(init), stride)?;
            out.artifacts.extend(mbe_artifacts(&traj));
            let sws = traj.snapshots.iter().map(|f| f.s.iter().zip(&back).map(|(a, b)| a * b).collect()).collect();
            let scattered = traj.final_bookkeeping().ledger.loss() / traj.bookkeeping[0].stored;
            let mut out = finish_raman(out, &traj.times, sws, &s0, &params, ens, traj.max_closure_residual())?;
            // spontaneous scattering, absent from the reduced model
            out.metric("scattered_fraction", scattered);
            return Ok(out);
        }
    };
    finish_raman(out, &times, spinwaves, &s0, &params, ens, closure)
}

/// Composite Simpson over uniform samples, trapezoid on a leftover interval.
fn integrate_samples(t: &[f64], v: &[f64]) -> f64 {
    let n = t.len();
    if n < 2 {
        return 0.0;
    }
    let h = (t[n - 1] - t[0]) / (n - 1) as f64;
    let pairs = (n - 1) / 2;
    let mut sum = 0.0;
    for k in 0..pairs {
        let i = 2 * k;
        sum += h / 3.0 * (v[i] + 4.0 * v[i + 1] + v[i + 2]);
    }
    if (n - 1) % 2 == 1 {
        sum += 0.5 * h * (v[n - 2] + v[n - 1]);
    }
    sum
}

fn finish_raman(
    mut out: Outcome,
    times: &[f64],
    spinwaves: Vec<Vec<C64>>,
    s0: &[C64],
    params: &raman::RamanParams,
    ens: &EnsembleConfig,
    closure: f64,
) -> Result<Outcome> {
    let parts: Vec<_> = spinwaves.iter().map(|s| raman::decompose(s)).collect();
    let uniform: Vec<f64> = parts.iter().map(|d| d.uniform.norm()).collect();
    let floor = 1e-6 * norm_sq(s0).sqrt();
    let mut table = Table::new(["t", "abs_uniform", "norm_stationary", "fitted_rate"]);
    for k in 0..times.len() {
        let rate = if k > 0 && uniform[k] > floor && uniform[k - 1] > floor {
            -(uniform[k] / uniform[k - 1]).ln() / (times[k] - times[k - 1])
        } else {
            f64::NAN
        };
        table.push_nums(&[times[k], uniform[k], norm_sq(&parts[k].stationary).sqrt(), rate]);
    }
    out.artifacts.push(Artifact::csv("raman_components.csv", &table));

    let (ft, fu): (Vec<f64>, Vec<f64>) = times.iter().zip(&uniform).filter(|(_, u)| **u > floor).map(|(t, u)| (*t, *u)).unzip();
    let fitted = raman::fit_decay_rate(&ft, &fu).unwrap_or(f64::NAN);
    let last = &spinwaves[spinwaves.len() - 1];
    out.metric("leaked_fraction", 1.0 - norm_sq(last) / norm_sq(s0));
    out.metric("initial_uniform", uniform[0]);
    out.metric("final_uniform", uniform[uniform.len() - 1]);
    out.metric("fitted_uniform_rate", fitted);
    out.metric("predicted_uniform_rate", params.uniform_rate(ens.d, crate::config::GAMMA_E) + params.gamma);
    out.metric("stationary_rel_change", rel_l2(&parts[parts.len() - 1].stationary, &parts[0].stationary));
    out.metric("closure_residual", closure);
    Ok(out)
}

pub fn hoc_degenerate(cfg: &Config, p: &HocParams) -> Result<Outcome> {
    let mut ctrl = cfg.controls.clone();
    ctrl.omega_plus = Waveform::constant(C64::new(p.omega, 0.0));
    ctrl.omega_minus = Waveform::constant(C64::new(p.omega, 0.0));
    let decay = HOCDecayModel {
        gamma_motion: cfg.ensemble.gamma_motion,
        exponent: p.exponent,
    };
    let n = cfg.grid.n_xi;
    let fs = FieldState::from_spinwave(gaussian(n, p.spinwave.center, p.spinwave.width));
    let stride = stride_for(&cfg.grid, 200);
    let none = BoundaryDrive::none();
    let run = |n_max: usize| hoc::run_hoc(&cfg.ensemble, &cfg.grid, &ctrl, &none, &decay, &HOCState::from_secular(&fs, n_max)?, stride);
    let ladder = run(p.n_max)?;
    let secular = mbe::run(&cfg.ensemble, &cfg.grid, &ctrl, &none, &fs, stride)?;
    let truncation = if p.truncation_check {
        hoc::truncation_check(&ladder, &run(p.n_max + 1)?)?
    } else {
        f64::NAN
    };

    let orders: Vec<i32> = ladder.snapshots[0].s.keys().copied().collect();
    let mut table = Table::new(std::iter::once("t".to_string()).chain(orders.iter().map(|k| format!("order_{k}"))));
    for (t, snap) in ladder.times.iter().zip(&ladder.snapshots) {
        let mut row = vec![*t];
        row.extend(snap.order_norms().into_iter().map(|(_, v)| v));
        table.push_nums(&row);
    }
    let s0: Vec<&[C64]> = ladder.snapshots.iter().map(|s| s.s[&0].as_slice()).collect();
    let mut out = Outcome {
        artifacts: vec![
            Artifact::csv("hoc_orders.csv", &table),
            Artifact::csv("spinwave.csv", &spinwave_table(&ladder.times, &s0)),
            Artifact::csv("fields_boundary.csv", &boundary_table(&ladder)),
            Artifact::csv("bookkeeping.csv", &bookkeeping_table(&ladder)),
        ],
        ..Default::default()
    };
    let initial = ladder.bookkeeping[0].stored;
    let (lf, sf) = (ladder.final_bookkeeping(), secular.final_bookkeeping());
    out.metric("leaked_fraction", lf.ledger.output / initial);
    out.metric("secular_leaked_fraction", sf.ledger.output / initial);
    out.metric("leak_ratio", lf.ledger.output / sf.ledger.output);
    out.metric("trapped_fraction", lf.stored / initial);
    out.metric("secular_trapped_fraction", sf.stored / initial);
    out.metric("truncation_difference", truncation);
    out.metric("closure_residual", ladder.max_closure_residual().max(secular.max_closure_residual()));
    Ok(out)
}

fn spectrum_outputs(out: &mut Outcome, spec: &spectra::SpectrumResult) {
    let mut table = Table::new(["delta", "T", "R", "absorbed"]);
    let absorbed = spec.absorbed();
    for k in 0..spec.len() {
        table.push_nums(&[spec.delta_grid[k], spec.transmission[k], spec.reflection[k], absorbed[k]]);
    }
    out.artifacts.push(Artifact::csv("spectrum.csv", &table));
    out.artifacts.push(Artifact::svg(
        "spectrum.svg",
        line_plot(
            "steady-state response",
            "δ / Γ",
            &[
                Series { label: "T", x: &spec.delta_grid, y: &spec.transmission },
                Series { label: "R", x: &spec.delta_grid, y: &spec.reflection },
            ],
        ),
    ));
    let excess = spec.transmission.iter().zip(&spec.reflection).map(|(t, r)| t + r - 1.0).fold(f64::NEG_INFINITY, f64::max);
    out.metric("max_passivity_excess", excess);
    out.metric("regularized_points", spec.regularized.len() as f64);
}

pub fn bandgap_scan(cfg: &Config, p: &BandgapParams) -> Result<Outcome> {
    let spec = spectra::steady_state_response(&cfg.ensemble, &cfg.controls, &spectra::symmetric_grid(p.span, p.points))?;
    let centre = spectra::steady_state_response(&cfg.ensemble, &cfg.controls, &[0.0])?;
    let mut out = Outcome::default();
    spectrum_outputs(&mut out, &spec);
    let (t0, r0) = (centre.transmission[0], centre.reflection[0]);
    out.metric("t_center", t0);
    out.metric("r_center", r0);
    out.metric("bandgap_depth", 1.0 - t0);
    out.metric("gap_open", if t0 < p.gap_threshold { 1.0 } else { 0.0 });
    let peaks = spectra::transmission_peaks(&spec);
    out.metric("peak_count", peaks.len() as f64);
    let best = peaks.iter().copied().fold((f64::NAN, 0.0), |a, b| if b.1 > a.1 { b } else { a });
    out.metric("max_peak_transmission", best.1);
    out.metric("max_peak_detuning", best.0);

    if !p.tone_detunings.is_empty() {
        let freq = spectra::steady_state_response(&cfg.ensemble, &cfg.controls, &p.tone_detunings)?;
        let mut table = Table::new(["delta", "T_spectrum", "T_time", "abs_error", "rel_error"]);
        let (mut rel_max, mut abs_max, mut closure) = (0.0f64, 0.0f64, 0.0f64);
        for (k, &d) in p.tone_detunings.iter().enumerate() {
            let tone = spectra::tone_response(&cfg.ensemble, &cfg.controls, &cfg.grid, d, p.tone_ramp, p.tone_average_from)?;
            let tf = freq.transmission[k];
            let abs = (tone.transmission - tf).abs();
            let rel = abs / tf;
            if tf > 0.01 {
                rel_max = rel_max.max(rel);
            } else {
                abs_max = abs_max.max(abs);
            }
            closure = closure.max(tone.closure_residual);
            table.push_nums(&[d, tf, tone.transmission, abs, rel]);
        }
        out.artifacts.push(Artifact::csv("tone_check.csv", &table));
        out.metric("tone_max_rel_error", rel_max);
        out.metric("tone_max_abs_error_dark", abs_max);
        out.metric("closure_residual", closure);
    }
    Ok(out)
}

/// Spectrum of the configured controls, independent of the scenario.
pub fn scan(cfg: &Config) -> Result<Outcome> {
    let grid = match super::params::ScenarioParams::resolve(cfg.scenario.name, &cfg.scenario.parameters)? {
        ScenarioParams::Bandgap(p) => spectra::symmetric_grid(p.span, p.points),
        _ => spectra::default_grid(&cfg.ensemble, &cfg.controls),
    };
    let spec = spectra::steady_state_response(&cfg.ensemble, &cfg.controls, &grid)?;
    let centre = spectra::steady_state_response(&cfg.ensemble, &cfg.controls, &[0.0])?;
    let mut out = Outcome::default();
    spectrum_outputs(&mut out, &spec);
    out.metric("t_center", centre.transmission[0]);
    out.metric("r_center", centre.reflection[0]);
    out.metric("bandgap_depth", 1.0 - centre.transmission[0]);
    Ok(out)
}

pub fn eit_width_scan(cfg: &Config, p: &WidthScanParams) -> Result<Outcome> {
    let mut table = Table::new(["omega", "d", "fwhm", "predicted", "ratio"]);
    let mut widths = BTreeMap::new();
    let mut passivity = f64::NEG_INFINITY;
    for (i, &om) in p.omegas.iter().enumerate() {
        for (j, &d) in p.depths.iter().enumerate() {
            let mut ens = cfg.ensemble.clone();
            ens.d = d;
            let mut ctrl = cfg.controls.clone();
            ctrl.omega_plus = Waveform::constant(C64::new(om, 0.0));
            ctrl.omega_minus = Waveform::default();
            let predicted = (2.0 * std::f64::consts::LN_2).sqrt() * om * om / (crate::config::GAMMA_E * d.sqrt());
            let spec = spectra::steady_state_response(&ens, &ctrl, &spectra::symmetric_grid(3.0 * predicted, p.points))?;
            let w = spectra::eit_window_width(&spec)?;
            let excess = spec.transmission.iter().zip(&spec.reflection).map(|(t, r)| t + r - 1.0).fold(f64::NEG_INFINITY, f64::max);
            passivity = passivity.max(excess);
            table.push_nums(&[om, d, w, predicted, w / predicted]);
            widths.insert((i, j), w);
        }
    }
    let mut out = Outcome {
        artifacts: vec![Artifact::csv("widths.csv", &table)],
        ..Default::default()
    };
    out.metric("fwhm_base", widths[&(0, 0)]);
    out.metric("max_passivity_excess", passivity);
    out.metric("fwhm_over_formula", table.rows[0].last().map(|c| match c {
        super::output::Cell::Num(v) => *v,
        _ => f64::NAN,
    }).unwrap_or(f64::NAN));
    if p.omegas.len() >= 2 {
        out.metric("power_ratio", widths[&(1, 0)] / widths[&(0, 0)]);
        out.metric("expected_power_ratio", (p.omegas[1] / p.omegas[0]).powi(2));
    }
    if p.depths.len() >= 2 {
        out.metric("depth_ratio", widths[&(0, 0)] / widths[&(0, 1)]);
        out.metric("expected_depth_ratio", (p.depths[1] / p.depths[0]).sqrt());
    }
    Ok(out)
}

/// Leakage of an SL hold at one mismatch value: (leaked, emitted, closure).
fn mismatch_point(cfg: &Config, p: &MismatchParams, dk: f64) -> Result<(f64, f64, f64)> {
    let n = cfg.grid.n_xi;
    match p.model {
        MismatchModel::Eit => {
            let mut ctrl = cfg.controls.clone();
            ctrl.omega_plus = Waveform::constant(C64::new(p.omega, 0.0));
            ctrl.omega_minus = Waveform::constant(C64::new(p.omega, 0.0));
            ctrl.mismatch += dk;
            let fs = FieldState::from_spinwave(gaussian(n, p.spinwave.center, p.spinwave.width));
            let traj = mbe::run(&cfg.ensemble, &cfg.grid, &ctrl, &BoundaryDrive::none(), &fs, cfg.grid.steps().max(1))?;
            let start = traj.bookkeeping_at(p.settle).stored;
            let end = traj.final_bookkeeping().stored;
            Ok((1.0 - end / start, traj.output_between(p.settle, cfg.grid.t_final) / start, traj.max_closure_residual()))
        }
        MismatchModel::Raman => {
            let half = 0.5 * p.lobe_separation;
            let s0 = lobes(n, [p.spinwave.center - half, p.spinwave.center + half], p.spinwave.width, -1.0);
            let mut params = raman::RamanParams::new(C64::new(p.omega, 0.0), p.delta, cfg.ensemble.gamma);
            params.mismatch = cfg.controls.mismatch + dk;
            let s = raman::evolve_raman_numeric(&s0, cfg.ensemble.d, crate::config::GAMMA_E, &params, cfg.grid.t_final)?;
            let leaked = 1.0 - norm_sq(&s) / norm_sq(&s0);
            Ok((leaked, leaked, f64::NAN))
        }
    }
}

pub fn mismatch_sweep(cfg: &Config, p: &MismatchParams) -> Result<Outcome> {
    let mut table = Table::new(["delta_k", "leaked_fraction", "emitted_fraction", "closure_residual"]);
    let mut points = Vec::with_capacity(p.values.len());
    for &dk in &p.values {
        let (leak, emitted, closure) = mismatch_point(cfg, p, dk).map_err(|e| e.with_context(format!("delta_k = {dk}")))?;
        table.push_nums(&[dk, leak, emitted, closure]);
        points.push((dk, leak, closure));
    }
    let mut out = Outcome {
        artifacts: vec![Artifact::csv("mismatch.csv", &table)],
        ..Default::default()
    };
    if points.is_empty() {
        return Ok(out);
    }
    let scale = points.iter().map(|p| p.1.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut asym = 0.0f64;
    for a in &points {
        if let Some(b) = points.iter().find(|b| b.0 == -a.0) {
            asym = asym.max((a.1 - b.1).abs() / scale);
        }
    }
    let mut by_size = points.clone();
    by_size.sort_by(|a, b| a.0.abs().total_cmp(&b.0.abs()));
    let monotone = by_size.windows(2).all(|w| w[1].1 >= w[0].1 - 1e-12 * scale);
    out.metric("leak_min", points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min));
    out.metric("leak_max", points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max));
    out.metric("max_asymmetry", asym);
    out.metric("monotone", if monotone { 1.0 } else { 0.0 });
    let closure = points.iter().map(|p| p.2).filter(|c| c.is_finite()).fold(f64::NAN, f64::max);
    out.metric("closure_residual", closure);
    Ok(out)
}
