//! Semiclassical simulation of stationary light in atomic ensembles.
//!
//! The crate integrates the secular counterpropagating Maxwell–Bloch
//! equations ([`mbe`]), the reduced EIT drift–diffusion model ([`eit`]), the
//! far-detuned Raman model ([`raman`]), the higher-order-coherence ladder for
//! standing-wave controls ([`hoc`]), and steady-state spectra ([`spectra`]).
//! Units: Γ = 1, time in 1/Γ, ξ ∈ [0, 1].

pub mod config;
pub mod eit;
mod error;
pub mod hoc;
pub mod mbe;
pub mod medium;
pub mod numerics;
pub mod phasematch;
pub mod raman;
pub mod scenarios;
pub mod spectra;
pub mod state;

pub use config::{parse_config, Config, ControlSchedule, EnsembleConfig, ScenarioDescriptor, ScenarioName, SimulationGrid};
pub use error::{Error, Result};
pub use numerics::integrate_xi;
pub use state::{BoundaryDrive, FieldState, Signal};

pub use num_complex::Complex64 as C64;
