//! Perfect transport of a particle in a moving harmonic well.
//!
//! The library synthesizes trap trajectories that move a trapped particle by
//! a fixed displacement in a fixed time and leave it motionless at the end,
//! without requiring the move to be slow. Distortion models mimic what real
//! control hardware does to such waveforms, and three independent engines
//! (closed-form wavepacket propagation, spectral integration of the
//! Schrodinger equation, classical integration) verify what survives.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classical;
pub mod control;
pub mod distortion;
pub mod error;
pub mod metrics;
pub mod numeric;
pub mod quantum;

pub use error::{Result, SimError};
