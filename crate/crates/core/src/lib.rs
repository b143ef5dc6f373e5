//! Numerics for the two-state-vector nonlinear extension of quantum
//! mechanics.
//!
//! The crate is organised bottom-up:
//!
//! * [`params`]: couplings, regime flags, derived constants and the full
//!   equations of motion.
//! * [`elliptic`]: Jacobi elliptic functions used by the `p = -1` orbit.
//! * [`taudelta`]: the reduced (κ, τ) Hamiltonian system, closed forms and a
//!   symplectic integrator.
//! * [`statevec_simple`]: exact state vectors at the potential minimum.
//! * [`statevec_general`]: state vectors over an arbitrary background.
//! * [`density`]: the density matrix, expectation values and orbits.
//! * [`approx`]: small-oscillation and piecewise-potential approximations.
//! * [`cli`]: drivers behind the `nlqm` binary.

// `!(x > y)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approx;
pub mod cli;
pub mod density;
pub mod elliptic;
pub mod error;
pub mod linalg;
pub mod ode;
pub mod output;
pub mod params;
pub mod statevec_general;
pub mod statevec_simple;
pub mod taudelta;
pub mod verify;

pub use error::{Error, Result};
pub use params::{DerivedParams, ModelParams, Regime, ValidatedParams};
