//! Simulation and verification laboratory for the trigonometric real form
//! of the spin Ruijsenaars-Schneider system.
//!
//! The crate builds the phase space of the model in three layers:
//!
//! * [`spins`] carries the U(n)-covariant Poisson structure on `C^n` with
//!   its group-valued moment map, and [`double`] the Heisenberg double of
//!   U(n) with its factorization maps and coordinate brackets;
//! * [`reduction`] imposes the moment map constraint, solves it in the
//!   dressed-spin and primary-spin parametrizations, and constructs the
//!   normal forms used for action-angle coordinates;
//! * [`dynamics`], [`redpoisson`] and [`limits`] integrate the reduced
//!   equations of motion by two independent methods, evaluate the reduced
//!   Poisson structure in closed form, and certify conservation laws,
//!   the quadratic Lax bracket and degenerate integrability numerically.
//!
//! All randomized sweeps are seed-deterministic; see [`verify`] for the
//! property suites behind the command-line `verify` subcommand.

pub mod cmat;
pub mod double;
pub mod dynamics;
pub mod error;
pub mod jet;
pub mod limits;
pub mod linalg;
pub mod redpoisson;
pub mod reduction;
pub mod sample;
pub mod spins;
pub mod verify;

pub use cmat::{CMat, CVec, C64, PoissonTensor, RMat};
pub use error::{Error, Result};
