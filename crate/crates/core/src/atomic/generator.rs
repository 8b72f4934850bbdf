use nalgebra::{SMatrix, SVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{AtomicError, AtomicMedium, DensityMatrix, FieldDrive};

/// Real dimension of the vectorized density matrix: three populations and
/// the real and imaginary parts of ρ12, ρ13, ρ23.
pub const STATE_DIM: usize = 9;

/// Which form of the ρ23 equation to use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorMode {
    /// Commutator with the cascade Hamiltonian plus decay; the ρ23 equation
    /// carries the `+iΩs*/2·ρ13` signal coupling.
    #[default]
    Derived,
    /// ρ23 equation with a `−iΩc/2·ρ22` term in place of the signal coupling.
    Verbatim,
}

impl std::str::FromStr for GeneratorMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "derived" => Ok(GeneratorMode::Derived),
            "verbatim" => Ok(GeneratorMode::Verbatim),
            other => Err(format!("unknown generator mode `{other}`")),
        }
    }
}

/// Real-linear map `x ↦ dx/dt` on the 9-component state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearGenerator {
    pub matrix: SMatrix<f64, STATE_DIM, STATE_DIM>,
}

impl LinearGenerator {
    pub fn apply(&self, rho: &DensityMatrix) -> SVector<f64, STATE_DIM> {
        self.matrix * rho.to_state()
    }

    /// Trace of the image, which vanishes for every state.
    pub fn trace_rate(&self, rho: &DensityMatrix) -> f64 {
        let dx = self.apply(rho);
        dx[0] + dx[1] + dx[2]
    }
}

/// Coherent plus dissipative time derivative, written out entry by entry.
/// Returns `[ρ̇11, ρ̇22, ρ̇33, ρ̇12, ρ̇13, ρ̇23]`.
pub(crate) fn bloch_rhs(
    medium: &AtomicMedium,
    drive: &FieldDrive,
    mode: GeneratorMode,
    rho: &DensityMatrix,
) -> [Complex64; 6] {
    let i = Complex64::i();
    let half = 0.5;
    let os = drive.signal_rabi;
    let oc = drive.control_rabi;
    let (ds, dc) = (drive.signal_detuning, drive.control_detuning);
    let (g12, g13, g23) = (medium.gamma_12(), medium.gamma_13(), medium.gamma_23());
    let (d12, d23, d13) = (medium.decay_12, medium.decay_23, medium.decay_13);

    let r11 = rho.rho(1, 1);
    let r22 = rho.rho(2, 2);
    let r33 = rho.rho(3, 3);
    let r12 = rho.rho(1, 2);
    let r21 = rho.rho(2, 1);
    let r13 = rho.rho(1, 3);
    let r23 = rho.rho(2, 3);
    let r32 = rho.rho(3, 2);

    let dr11 = i * half * os * r21 - i * half * os.conj() * r12 + d12 * r22 + d13 * r33;
    let dr22 = i * half * oc * r32 - i * half * oc.conj() * r23 + i * half * os.conj() * r12
        - i * half * os * r21
        - d12 * r22
        + d23 * r33;
    let dr33 = i * half * oc.conj() * r23 - i * half * oc * r32 - (d13 + d23) * r33;
    let dr12 = i * half * os * (r22 - r11) - i * half * oc.conj() * r13
        - i * (Complex64::new(ds, -g12)) * r12;
    let dr13 =
        i * half * os * r23 - i * half * oc * r12 - i * Complex64::new(ds + dc, -g13) * r13;
    let cross = match mode {
        GeneratorMode::Derived => i * half * os.conj() * r13,
        GeneratorMode::Verbatim => -i * half * oc * r22,
    };
    let dr23 = i * half * oc * (r33 - r22) + cross - i * Complex64::new(dc, -g23) * r23;

    [dr11, dr22, dr33, dr12, dr13, dr23]
}

fn pack(d: [Complex64; 6]) -> SVector<f64, STATE_DIM> {
    SVector::from([
        d[0].re, d[1].re, d[2].re, d[3].re, d[3].im, d[4].re, d[4].im, d[5].re, d[5].im,
    ])
}

/// Assembles the generator column by column from unit states.
pub fn build_generator(
    medium: &AtomicMedium,
    drive: &FieldDrive,
    mode: GeneratorMode,
) -> Result<LinearGenerator, AtomicError> {
    medium.validate()?;
    drive.validate()?;
    let mut matrix = SMatrix::<f64, STATE_DIM, STATE_DIM>::zeros();
    for k in 0..STATE_DIM {
        let mut e = SVector::<f64, STATE_DIM>::zeros();
        e[k] = 1.0;
        let col = pack(bloch_rhs(medium, drive, mode, &DensityMatrix::from_state(&e)));
        matrix.set_column(k, &col);
    }
    Ok(LinearGenerator { matrix })
}
