//! Finite-difference time-domain simulation of grounding electrodes and
//! thin wires buried in dispersive soil.

// Parameter checks are written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod breakdown;
pub mod constants;
pub mod cpml;
pub mod debye;
pub mod dsl;
pub mod engine;
pub mod error;
pub mod excitation;
pub mod grid;
pub mod model;
pub mod probes;
pub mod soil;
pub mod wires;

pub use error::{Error, Result};
