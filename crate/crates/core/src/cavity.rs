//! Four-port coupled-mode resonator: one input waveguide, a through port
//! on the same waveguide and a drop port on the second waveguide.
//!
//! All rates are energy decay rates in rad/s; amplitudes are normalized so
//! that |s|² is power (W) and |a|² is stored energy (J).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::units::angular_frequency;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CavityParams {
    /// Resonance angular frequency ω0.
    pub resonance: f64,
    /// Intrinsic loss κ0.
    pub intrinsic: f64,
    /// Input/through waveguide coupling κ1.
    pub coupling_in: f64,
    /// Drop waveguide coupling κ2.
    pub coupling_drop: f64,
    /// Loss added by the atoms, κ_e.
    pub atomic: f64,
}

impl CavityParams {
    /// Resonance at vacuum wavelength `wavelength` with intrinsic quality
    /// factor `q0` (κ0 = ω0/Q0).
    pub fn from_quality(wavelength: f64, q0: f64, coupling_in: f64, coupling_drop: f64, atomic: f64) -> Self {
        let resonance = angular_frequency(wavelength);
        Self { resonance, intrinsic: resonance / q0, coupling_in, coupling_drop, atomic }
    }

    pub fn with_atomic(self, atomic: f64) -> Self {
        Self { atomic, ..self }
    }

    pub fn with_couplings(self, coupling_in: f64, coupling_drop: f64) -> Self {
        Self { coupling_in, coupling_drop, ..self }
    }

    pub fn validate(&self) -> Result<(), String> {
        let rates = [self.intrinsic, self.coupling_in, self.coupling_drop, self.atomic];
        if !(self.resonance.is_finite() && self.resonance > 0.0) {
            return Err(format!("resonance must be > 0, got {}", self.resonance));
        }
        if rates.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(format!("rates must be finite and >= 0, got {rates:?}"));
        }
        if self.total_rate() <= 0.0 {
            return Err("total decay rate must be > 0".into());
        }
        Ok(())
    }

    /// κ0 + κ_e + κ1 + κ2.
    pub fn total_rate(&self) -> f64 {
        self.intrinsic + self.atomic + self.coupling_in + self.coupling_drop
    }

    /// Loss that does not leave through a waveguide, κ0 + κ_e.
    pub fn dissipative_rate(&self) -> f64 {
        self.intrinsic + self.atomic
    }

    fn denominator(&self, detuning: f64) -> Complex64 {
        Complex64::new(self.total_rate(), 2.0 * detuning)
    }
}

/// Right-hand side of the amplitude equation, `da/dt`.
pub fn amplitude_rate(cavity: &CavityParams, detuning: f64, a: Complex64, s_in: Complex64) -> Complex64 {
    let i = Complex64::i();
    -i * detuning * a - 0.5 * cavity.total_rate() * a + i * cavity.coupling_in.sqrt() * s_in
}

/// Steady-state intracavity amplitude.
pub fn steady_amplitude(cavity: &CavityParams, detuning: f64, s_in: Complex64) -> Complex64 {
    Complex64::i() * 2.0 * cavity.coupling_in.sqrt() * s_in / cavity.denominator(detuning)
}

/// Stored energy |a|² for input power `power`.
pub fn stored_energy(cavity: &CavityParams, detuning: f64, power: f64) -> f64 {
    steady_amplitude(cavity, detuning, Complex64::new(power.sqrt(), 0.0)).norm_sqr()
}

/// Through- and drop-port amplitudes.
pub fn port_amplitudes(cavity: &CavityParams, detuning: f64, s_in: Complex64) -> (Complex64, Complex64) {
    let den = cavity.denominator(detuning);
    let through_num = Complex64::new(
        cavity.intrinsic + cavity.atomic - cavity.coupling_in + cavity.coupling_drop,
        2.0 * detuning,
    );
    let through = s_in * through_num / den;
    let drop = -2.0 * (cavity.coupling_in * cavity.coupling_drop).sqrt() * s_in / den;
    (through, drop)
}

/// Power transmission (T, D) to the through and drop ports.
pub fn transmission(cavity: &CavityParams, detuning: f64) -> (f64, f64) {
    let four_d2 = 4.0 * detuning * detuning;
    let total = cavity.total_rate();
    let through_rate = cavity.intrinsic + cavity.atomic - cavity.coupling_in + cavity.coupling_drop;
    let den = four_d2 + total * total;
    let t = (four_d2 + through_rate * through_rate) / den;
    let d = 4.0 * cavity.coupling_in * cavity.coupling_drop / den;
    (t, d)
}

/// Intrinsic and external quality factors (Q0, Q_ext).
pub fn quality_factors(cavity: &CavityParams) -> (f64, f64) {
    (
        cavity.resonance / cavity.intrinsic,
        cavity.resonance / (cavity.atomic + cavity.coupling_in + cavity.coupling_drop),
    )
}

/// Through and drop transmission on a detuning grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PortSpectra {
    pub cavity: CavityParams,
    pub detunings: Vec<f64>,
    pub through: Vec<f64>,
    pub drop: Vec<f64>,
}

impl PortSpectra {
    pub fn compute(cavity: &CavityParams, detunings: &[f64]) -> Self {
        let (through, drop) = detunings.iter().map(|&d| transmission(cavity, d)).unzip();
        Self { cavity: *cavity, detunings: detunings.to_vec(), through, drop }
    }
}

/// Spectra for the control-on and control-off cavities on a shared grid.
pub fn spectrum(on: &CavityParams, off: &CavityParams, detunings: &[f64]) -> (PortSpectra, PortSpectra) {
    (PortSpectra::compute(on, detunings), PortSpectra::compute(off, detunings))
}

/// `n` points symmetric about zero with exact zero at the centre (n odd).
pub fn symmetric_grid(half_span: f64, n: usize) -> Vec<f64> {
    assert!(n % 2 == 1 && n >= 3, "grid needs an odd number of points");
    let half = (n / 2) as i64;
    let step = half_span / half as f64;
    (-half..=half).map(|k| k as f64 * step).collect()
}
