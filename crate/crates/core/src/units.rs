//! Physical constants and frequency-unit conventions.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Reduced Planck constant (J·s).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Vacuum permittivity (F/m).
pub const EPSILON_0: f64 = 8.854_187_8128e-12;

/// How a tabulated rate such as "6.0 MHz" is turned into rad/s.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateConvention {
    /// The number is already an angular frequency.
    Angular,
    /// The number is an ordinary frequency and gets multiplied by 2π.
    #[default]
    Ordinary,
}

impl RateConvention {
    /// Converts a tabulated value into rad/s.
    pub fn to_angular(self, value: f64) -> f64 {
        match self {
            RateConvention::Angular => value,
            RateConvention::Ordinary => 2.0 * PI * value,
        }
    }

    /// Inverse of [`RateConvention::to_angular`].
    pub fn from_angular(self, value: f64) -> f64 {
        match self {
            RateConvention::Angular => value,
            RateConvention::Ordinary => value / (2.0 * PI),
        }
    }
}

impl std::str::FromStr for RateConvention {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "angular" => Ok(RateConvention::Angular),
            "ordinary" => Ok(RateConvention::Ordinary),
            other => Err(format!("unknown rate convention `{other}`")),
        }
    }
}

/// Angular frequency of light with vacuum wavelength `wavelength` (m).
pub fn angular_frequency(wavelength: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT / wavelength
}

/// Converts rad/s into Hz.
pub fn to_hz(angular: f64) -> f64 {
    angular / (2.0 * PI)
}
