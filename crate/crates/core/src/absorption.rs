//! Absorption of the signal by the vapor surrounding the cavity, the
//! resulting cavity loss rate κ_e, and the fixed point between intracavity
//! field strength and atomic absorption.

use std::collections::HashMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::atomic::{doppler_average, steady_state, AtomicError, AtomicMedium, FieldDrive, GeneratorMode, QuadratureSpec};
use crate::cavity::{stored_energy, CavityParams};
use crate::modefield::{energy_from_circulating_power, rabi_field, ModeProfile, Region};
use crate::units::{angular_frequency, EPSILON_0, HBAR, SPEED_OF_LIGHT};

#[derive(Debug, Error)]
pub enum AbsorptionError {
    #[error(transparent)]
    Atomic(#[from] AtomicError),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("field/absorption iteration did not converge after {} iterations", .last.absorption.iterations)]
    NotConverged { last: Box<SelfConsistentFields> },
}

/// How the configured control power reaches the cavity.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlPowerMode {
    /// Power in the input waveguide, built up on resonance.
    #[default]
    WaveguideInput,
    /// Power circulating inside the resonator.
    Intracavity,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AbsorptionSettings {
    pub generator: GeneratorMode,
    pub quadrature: QuadratureSpec,
    /// Smallest signal Rabi frequency used when forming Im ρ12/Ωs (rad/s).
    /// `None` means 10⁻⁶·Γ12.
    pub probe_floor: Option<f64>,
    /// Speed in κ_e = v·ᾱ; `None` means c/n_eff of the profile.
    pub light_speed: Option<f64>,
    pub control_power: ControlPowerMode,
}

impl Default for AbsorptionSettings {
    fn default() -> Self {
        Self {
            generator: GeneratorMode::Derived,
            quadrature: QuadratureSpec::default(),
            probe_floor: None,
            light_speed: None,
            control_power: ControlPowerMode::WaveguideInput,
        }
    }
}

impl AbsorptionSettings {
    pub fn probe_floor(&self, medium: &AtomicMedium) -> f64 {
        self.probe_floor.unwrap_or(1e-6 * medium.decay_12)
    }

    pub fn light_speed(&self, profile: &ModeProfile) -> f64 {
        self.light_speed.unwrap_or(SPEED_OF_LIGHT / profile.n_eff())
    }
}

/// Laser detunings from the atomic lines (rad/s). The cavity resonances sit
/// on the atomic lines, so these are also the cavity detunings.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Detunings {
    pub signal: f64,
    pub control: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AbsorptionResult {
    /// Intensity-weighted absorption coefficient ᾱ (m⁻¹).
    pub alpha_bar: f64,
    /// Cavity loss rate v·ᾱ (rad/s).
    pub kappa_e: f64,
    /// Absorption coefficient per node; zero inside the dielectric.
    pub local_alpha: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

/// Im ρ12 / Ωs with the sign chosen so that an absorbing medium is positive.
///
/// With the Hamiltonian convention used here a weak resonant probe gives
/// ρ12 = −iΩs/(2γ12), so the absorptive part is −Im(ρ12/Ωs).
pub fn chi12(rho12: Complex64, omega_s: Complex64) -> f64 {
    if omega_s.norm() == 0.0 {
        return 0.0;
    }
    -(rho12 / omega_s).im
}

/// 4N d² ω/(ħ ε0 c) for the signal transition.
fn alpha_prefactor(medium: &AtomicMedium) -> f64 {
    let omega = angular_frequency(medium.signal_wavelength);
    4.0 * medium.density * medium.signal_dipole.powi(2) * omega / (HBAR * EPSILON_0 * SPEED_OF_LIGHT)
}

/// Doppler-averaged susceptibility factor χ12 for one drive.
pub fn doppler_chi12(
    medium: &AtomicMedium,
    drive: &FieldDrive,
    settings: &AbsorptionSettings,
) -> Result<f64, AtomicError> {
    let floor = settings.probe_floor(medium);
    let mut drive = *drive;
    let magnitude = drive.signal_rabi.norm();
    if magnitude < floor {
        drive.signal_rabi = if magnitude == 0.0 {
            Complex64::new(floor, 0.0)
        } else {
            drive.signal_rabi * (floor / magnitude)
        };
    }
    let mode = settings.generator;
    let rho12: Complex64 = doppler_average(medium, &drive, &settings.quadrature, |d| {
        Ok(steady_state(medium, d, mode)?.rho(1, 2))
    })?;
    Ok(chi12(rho12, drive.signal_rabi))
}

/// Local absorption coefficient (m⁻¹) from the Doppler-averaged coherence.
pub fn alpha_local(
    medium: &AtomicMedium,
    drive: &FieldDrive,
    settings: &AbsorptionSettings,
) -> Result<f64, AtomicError> {
    if medium.density == 0.0 {
        return Ok(0.0);
    }
    Ok(alpha_prefactor(medium) * doppler_chi12(medium, drive, settings)?)
}

/// Absorption averaged over the exterior, weighted by signal intensity
/// normalized over the whole mode volume.
pub fn alpha_avg(
    profile: &ModeProfile,
    medium: &AtomicMedium,
    settings: &AbsorptionSettings,
    signal_energy: f64,
    control_energy: f64,
    detunings: Detunings,
) -> Result<AbsorptionResult, AbsorptionError> {
    if !(signal_energy >= 0.0 && control_energy >= 0.0) {
        return Err(AbsorptionError::InvalidInput("stored energies must be >= 0".into()));
    }
    medium.validate()?;
    let signal_rabi = rabi_field(profile, signal_energy, medium.signal_dipole);
    let control_rabi = rabi_field(profile, control_energy, medium.control_dipole);
    let nodes = profile.nodes();

    // Intensity weight; u² stands in for |Ωs|² so that a vanishing signal
    // still has a well-defined weighting.
    let norm: f64 = nodes.iter().map(|n| n.u * n.u * n.cell_volume()).sum();

    // Nodes with identical Rabi frequencies share one Doppler average.
    let mut cache: HashMap<(u64, u64), f64> = HashMap::new();
    let mut local_alpha = vec![0.0; nodes.len()];
    let mut alpha_bar = 0.0;
    for (i, node) in nodes.iter().enumerate() {
        if node.region != Region::Exterior {
            continue;
        }
        let key = (signal_rabi[i].to_bits(), control_rabi[i].to_bits());
        let alpha = match cache.get(&key) {
            Some(&a) => a,
            None => {
                let drive = FieldDrive::new(signal_rabi[i], control_rabi[i], detunings.signal, detunings.control);
                let a = alpha_local(medium, &drive, settings)?;
                cache.insert(key, a);
                a
            }
        };
        local_alpha[i] = alpha;
        if norm > 0.0 {
            alpha_bar += alpha * node.u * node.u * node.cell_volume() / norm;
        }
    }
    let kappa_e = settings.light_speed(profile) * alpha_bar;
    Ok(AbsorptionResult { alpha_bar, kappa_e, local_alpha, converged: true, iterations: 0 })
}

/// Converged intracavity energies and the absorption they produce.
#[derive(Clone, Debug, PartialEq)]
pub struct SelfConsistentFields {
    pub signal_energy: f64,
    pub control_energy: f64,
    pub absorption: AbsorptionResult,
}

pub const FIXED_POINT_TOLERANCE: f64 = 1e-8;
pub const FIXED_POINT_MAX_ITERATIONS: usize = 200;
pub const FIXED_POINT_DAMPING: f64 = 0.5;

/// Control energy stored in the cavity. Atomic loss on the control
/// transition is neglected.
pub fn control_energy(
    cavity: &CavityParams,
    profile: &ModeProfile,
    settings: &AbsorptionSettings,
    control_power: f64,
    detunings: Detunings,
) -> f64 {
    match settings.control_power {
        ControlPowerMode::WaveguideInput => stored_energy(&cavity.with_atomic(0.0), detunings.control, control_power),
        ControlPowerMode::Intracavity => energy_from_circulating_power(profile, control_power),
    }
}

/// Signal energy stored in the cavity for loss rate `kappa_e`.
pub fn signal_energy(cavity: &CavityParams, signal_power: f64, kappa_e: f64, detunings: Detunings) -> f64 {
    stored_energy(&cavity.with_atomic(kappa_e), detunings.signal, signal_power)
}

/// Damped fixed-point iteration on κ_e: intracavity energies from the
/// coupled-mode steady state, then absorption from those energies.
///
/// Stops when the undamped residual |κ_e(E(κ)) − κ| is below a quarter of
/// the tolerance, so that recomputing either half of the loop from the
/// returned values moves nothing by more than the tolerance.
#[allow(clippy::too_many_arguments)]
pub fn self_consistent_fields(
    cavity: &CavityParams,
    profile: &ModeProfile,
    medium: &AtomicMedium,
    settings: &AbsorptionSettings,
    signal_power: f64,
    control_power: f64,
    detunings: Detunings,
) -> Result<SelfConsistentFields, AbsorptionError> {
    if !(signal_power >= 0.0 && control_power >= 0.0) {
        return Err(AbsorptionError::InvalidInput("input powers must be >= 0".into()));
    }
    cavity.validate().map_err(AbsorptionError::InvalidInput)?;
    let e_control = control_energy(cavity, profile, settings, control_power, detunings);

    let mut e_signal = 0.0;
    let mut last = alpha_avg(profile, medium, settings, e_signal, e_control, detunings)?;
    let mut kappa = last.kappa_e;
    for iteration in 1..=FIXED_POINT_MAX_ITERATIONS {
        let next_energy = signal_energy(cavity, signal_power, kappa, detunings);
        if next_energy.to_bits() != e_signal.to_bits() {
            last = alpha_avg(profile, medium, settings, next_energy, e_control, detunings)?;
            e_signal = next_energy;
        }
        let residual = last.kappa_e - kappa;
        if residual.abs() <= 0.25 * FIXED_POINT_TOLERANCE * kappa.abs() || (kappa == 0.0 && last.kappa_e == 0.0) {
            last.iterations = iteration;
            last.converged = true;
            return Ok(SelfConsistentFields { signal_energy: e_signal, control_energy: e_control, absorption: last });
        }
        kappa += FIXED_POINT_DAMPING * residual;
    }
    last.iterations = FIXED_POINT_MAX_ITERATIONS;
    last.converged = false;
    Err(AbsorptionError::NotConverged {
        last: Box::new(SelfConsistentFields { signal_energy: e_signal, control_energy: e_control, absorption: last }),
    })
}
