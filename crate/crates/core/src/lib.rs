//! Simulation of a driven quantum-dot/cavity system in the strong-coupling
//! regime: master-equation and quantum-trajectory propagation of the
//! Jaynes–Cummings model under cw and pulsed drives.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod drive;
pub mod dynamics;
pub mod error;
pub mod hilbert;
mod integrate;
pub mod scenarios;
pub mod series;
pub mod sparse;
pub mod trajectories;

pub use error::{Error, Invariant, Result};
