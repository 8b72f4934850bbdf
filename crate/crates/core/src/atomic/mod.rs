//! Three-level cascade atom: density-matrix generator, steady state,
//! RK4 propagation and Doppler averaging.
//!
//! Level 1 is the ground state, level 2 the intermediate state reached by the
//! signal and level 3 the upper state reached by the control. Level 3 also
//! decays straight to level 1, standing in for the cascade through a fourth
//! level.

mod density;
mod doppler;
mod generator;
mod solve;

pub use density::DensityMatrix;
pub use doppler::{doppler_average, gauss_hermite, Averageable, QuadratureSpec};
pub use generator::{build_generator, GeneratorMode, LinearGenerator, STATE_DIM};
pub use solve::{max_time_step, steady_state, time_evolve};

use crate::units::RateConvention;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AtomicError {
    #[error("invalid atomic parameter: {0}")]
    InvalidParameter(String),
    #[error("steady-state system is singular beyond the trace degeneracy")]
    SingularSystem,
    #[error("time step {dt:e} s exceeds the stability bound {bound:e} s")]
    StepTooLarge { dt: f64, bound: f64 },
    #[error("quadrature did not converge: relative change {change:e} > {tolerance:e}")]
    NotConverged { change: f64, tolerance: f64 },
}

/// Atomic vapor parameters. All rates are angular frequencies (rad/s).
#[derive(Clone, Debug, PartialEq)]
pub struct AtomicMedium {
    /// Dipole moment of the 1↔2 (signal) transition, C·m.
    pub signal_dipole: f64,
    /// Dipole moment of the 2↔3 (control) transition, C·m.
    pub control_dipole: f64,
    /// Population decay 2 → 1.
    pub decay_12: f64,
    /// Population decay 3 → 2.
    pub decay_23: f64,
    /// Population decay 3 → 1 through the bypass level.
    pub decay_13: f64,
    /// Number density, m⁻³.
    pub density: f64,
    /// Doppler standard deviation of the signal detuning.
    pub doppler_width: f64,
    /// Signal transition wavelength, m.
    pub signal_wavelength: f64,
    /// Control transition wavelength, m.
    pub control_wavelength: f64,
}

impl AtomicMedium {
    /// Rubidium 5S–5P–5D cascade with the reference parameter set. Rates are
    /// tabulated numbers interpreted through `convention`.
    pub fn rubidium_cascade(convention: RateConvention) -> Self {
        Self {
            signal_dipole: 2.1e-29,
            control_dipole: 4.6e-30,
            decay_12: convention.to_angular(6.0e6),
            decay_23: convention.to_angular(280.0e3),
            decay_13: convention.to_angular(150.0e3),
            density: 5.0e12 * 1.0e6,
            doppler_width: convention.to_angular(240.0e6),
            signal_wavelength: 780.0e-9,
            control_wavelength: 776.0e-9,
        }
    }

    pub fn validate(&self) -> Result<(), AtomicError> {
        let strictly_positive = [
            ("decay_12", self.decay_12),
            ("decay_23", self.decay_23),
            ("decay_13", self.decay_13),
            ("density", self.density),
            ("doppler_width", self.doppler_width),
            ("signal_wavelength", self.signal_wavelength),
            ("control_wavelength", self.control_wavelength),
        ];
        for (name, value) in strictly_positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(AtomicError::InvalidParameter(format!(
                    "{name} must be finite and > 0, got {value}"
                )));
            }
        }
        for (name, value) in [
            ("signal_dipole", self.signal_dipole),
            ("control_dipole", self.control_dipole),
        ] {
            if !value.is_finite() {
                return Err(AtomicError::InvalidParameter(format!("{name} is not finite")));
            }
        }
        Ok(())
    }

    /// Transverse decay of ρ12.
    pub fn gamma_12(&self) -> f64 {
        self.decay_12 / 2.0
    }

    /// Transverse decay of ρ13.
    pub fn gamma_13(&self) -> f64 {
        (self.decay_13 + self.decay_23) / 2.0
    }

    /// Transverse decay of ρ23.
    pub fn gamma_23(&self) -> f64 {
        (self.decay_12 + self.decay_13 + self.decay_23) / 2.0
    }

    /// Fraction of level-3 decay that goes through level 2.
    pub fn branching_ratio(&self) -> f64 {
        self.decay_23 / (self.decay_23 + self.decay_13)
    }

    /// Ratio of control to signal Doppler shift for co-propagating beams.
    pub fn doppler_ratio(&self) -> f64 {
        self.signal_wavelength / self.control_wavelength
    }
}

/// Field amplitudes and detunings seen by a single atom (rad/s).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldDrive {
    pub signal_rabi: Complex64,
    pub control_rabi: Complex64,
    pub signal_detuning: f64,
    pub control_detuning: f64,
}

impl FieldDrive {
    pub fn new(signal_rabi: f64, control_rabi: f64, signal_detuning: f64, control_detuning: f64) -> Self {
        Self {
            signal_rabi: Complex64::new(signal_rabi, 0.0),
            control_rabi: Complex64::new(control_rabi, 0.0),
            signal_detuning,
            control_detuning,
        }
    }

    pub fn undriven() -> Self {
        Self::new(0.0, 0.0, 0.0, 0.0)
    }

    pub fn validate(&self) -> Result<(), AtomicError> {
        let finite = self.signal_rabi.is_finite()
            && self.control_rabi.is_finite()
            && self.signal_detuning.is_finite()
            && self.control_detuning.is_finite();
        if finite {
            Ok(())
        } else {
            Err(AtomicError::InvalidParameter("drive contains non-finite values".into()))
        }
    }

    /// Drive seen by the velocity class whose signal Doppler shift is `shift`.
    pub fn doppler_shifted(&self, shift: f64, control_ratio: f64) -> Self {
        Self {
            signal_detuning: self.signal_detuning + shift,
            control_detuning: self.control_detuning + shift * control_ratio,
            ..*self
        }
    }

    /// Largest rate appearing in the generator, used for step-size bounds.
    pub fn fastest_rate(&self) -> f64 {
        self.signal_rabi
            .norm()
            .max(self.control_rabi.norm())
            .max(self.signal_detuning.abs())
            .max(self.control_detuning.abs())
            .max((self.signal_detuning + self.control_detuning).abs())
    }
}
