//! Pseudo-spectral Galerkin model H solver on the periodic square.
//!
//! The crate is organised bottom-up:
//!
//! * [`grid`] and [`field`]: Fourier fields, calculus, Leray projection, norms
//!   and dealiased products.
//! * [`state`] and [`checkpoint`]: the pair `z = (u, psi)` and its on-disk form.
//! * [`potential`]: polynomial double-well potentials and their certification.
//! * [`forcing`]: non-autonomous, divergence-free forcing symbols.
//! * [`solver`]: the stabilized IMEX stepper and energy bookkeeping.
//! * [`verifier`]: trajectory-level checks of the a priori estimates.
//! * [`attractor`]: discrete processes, pullback attraction, covers and
//!   Hölder continuity experiments.

pub mod attractor;
pub mod checkpoint;
pub mod error;
pub mod field;
pub mod fit;
pub mod forcing;
pub mod grid;
pub mod potential;
pub mod rng;
pub mod solver;
pub mod state;
pub mod verifier;

pub use error::{Error, Result};
pub use field::{NormKind, SpectralScalar, SpectralVector};
pub use forcing::{ForcingSymbol, Signal};
pub use grid::Grid;
pub use potential::PolynomialPotential;
pub use solver::{EnergyReport, Integrator, SolverParams};
pub use state::State;
