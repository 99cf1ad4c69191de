//! Stochastic-limit dynamics of rapidly decaying open quantum systems.
//!
//! The crate covers the spin-boson model (rapid-decay Bloch equation and the
//! associated Lindblad master equation), the damped harmonic oscillator of
//! quantum Brownian motion, and the exact finite-coupling machinery whose
//! small-coupling limit reproduces the stochastic-limit coefficients.
//!
//! Units: hbar = k_B = 1 throughout.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod acceptance;
pub mod bloch;
pub mod error;
pub mod harness;
pub mod lindblad_spin;
pub mod model;
pub mod numerics;
pub mod qbm;
pub mod spectral;

pub use error::{Error, Result};
