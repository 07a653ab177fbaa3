//! Bright-soliton evolution in the 1D cubic nonlinear Schrödinger equation
//!
//! ```text
//! i psi_t = -psi_xx + g(x, t) |psi|^2 psi,    g = G (1 + sigma(x, t))
//! ```
//!
//! with `sigma` produced by a chaotic (logistic map), random (uniform), or
//! quasiperiodic (two incommensurate cosines) generator and refreshed on a
//! fixed time grid.
//!
//! * [`field`]: grid, wavefunction, soliton initial state, power and
//!   comparative error.
//! * [`disorder`]: perturbation generators and the piecewise-constant
//!   schedule.
//! * [`propagator`]: split-step Crank-Nicolson stepping and an RK4 reference.
//! * [`diagnostics`]: sampled observables and run summaries.
//! * [`experiment`]: configuration, single runs, sweeps and CSV output.

pub mod diagnostics;
pub mod disorder;
pub mod error;
pub mod experiment;
pub mod field;
pub mod propagator;

pub use error::{Error, Result};
