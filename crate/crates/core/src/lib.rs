//! Numerical core for the stochastic conservation law
//!
//! ```text
//! du + [ν(−Δ)^{α/2}u + ∂ₓA(u) − εΔu] dt = Φ(u) dW
//! ```
//!
//! on a periodic 1-D grid, together with the diagnostics that certify a
//! computed path against the entropy and kinetic solution concepts.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the command
//! line front end and thread-level parallelism live in the `fscl` crate.

#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;

#[cfg(test)]
extern crate std;

mod error;
mod fft;

pub mod experiment;
pub mod flux;
pub mod forcing;
pub mod fractional;
pub mod grid;
pub mod initial;
pub mod kinetic;
pub mod residual;
pub mod solver;
pub mod stats;

pub use error::{Error, Result};
pub use experiment::{
    contraction_experiment, convergence_table, ensemble, viscosity_sweep, ContractionReport,
    ConvergenceTable, EnsembleStats, SweepReport,
};
pub use flux::{FluxKind, FluxModel, NumericalFlux};
pub use forcing::{NoiseIncrement, NoiseModel, NoiseParams, NoiseStream};
pub use fractional::{FractionalOrder, KernelTable, QuadratureSpec};
pub use grid::{Field, Grid};
pub use initial::InitialData;
pub use kinetic::{KineticMeasure, MeasureSlab, XiGrid};
pub use residual::{Entropy, ResidualReport, Tolerance};
pub use solver::{OutputTimes, RunSeed, Solver, SolverConfig, Trajectory};
