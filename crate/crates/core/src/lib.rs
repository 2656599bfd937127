//! Truncated Calogero-Sutherland model: exact ground state, Monte Carlo
//! correlation functions, symbolic collective excitations and checks of the
//! model's operator algebra.
//!
//! Units throughout: `ħ = m = ω = 1`.

pub mod algebra;
pub mod cli;
pub mod estimators;
pub mod io;
pub mod model;
pub mod sampler;
pub mod stats;
pub mod verify;
pub mod sympoly;
pub mod wavefunction;

pub use model::{ExactParams, ModelError, ModelParams};
