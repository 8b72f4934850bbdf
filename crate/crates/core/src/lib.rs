//! Steady-state model of an all-optical Zeno switch built from a microdisk
//! add-drop resonator surrounded by a three-level cascade atomic vapor.
//!
//! The pipeline runs bottom-up:
//!
//! * [`atomic`] solves the cascade density matrix and averages it over the
//!   Doppler profile,
//! * [`modefield`] supplies the normalized cavity mode and converts stored
//!   energy into local Rabi frequencies,
//! * [`absorption`] turns coherences into an intensity-weighted absorption
//!   coefficient and cavity loss rate,
//! * [`cavity`] evaluates the four-port coupled-mode response,
//! * [`metrics`] extracts loss, contrast and bandwidth and optimizes the
//!   waveguide coupling,
//! * [`driver`] wires everything together behind the `simulate` binary.

pub mod absorption;
pub mod atomic;
pub mod cavity;
pub mod driver;
pub mod metrics;
pub mod modefield;
pub mod roots;
pub mod units;

pub use num_complex::Complex64;
