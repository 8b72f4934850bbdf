use nalgebra::{SMatrix, SVector};

use super::generator::{build_generator, GeneratorMode, STATE_DIM};
use super::{AtomicError, AtomicMedium, DensityMatrix, FieldDrive};

type Square = SMatrix<f64, STATE_DIM, STATE_DIM>;

/// Ratio of smallest to largest LU pivot below which the constrained system
/// counts as rank deficient.
const PIVOT_FLOOR: f64 = 1e-13;

/// Solves `G·ρ = 0` together with `tr ρ = 1`.
///
/// The ρ11 row is redundant (trace conservation) and is replaced by the trace
/// constraint. Rows are scaled by the fastest rate in the problem before the
/// full-pivot LU so that Ω and Δ spanning decades do not spoil the pivots.
pub fn steady_state(
    medium: &AtomicMedium,
    drive: &FieldDrive,
    mode: GeneratorMode,
) -> Result<DensityMatrix, AtomicError> {
    let generator = build_generator(medium, drive, mode)?;
    let scale = drive.fastest_rate().max(medium.decay_12).max(medium.gamma_23());
    let mut a: Square = generator.matrix / scale;
    let mut b = SVector::<f64, STATE_DIM>::zeros();
    for c in 0..STATE_DIM {
        a[(0, c)] = if c < 3 { 1.0 } else { 0.0 };
    }
    b[0] = 1.0;

    let lu = a.full_piv_lu();
    let pivots = lu.u().diagonal();
    let largest = pivots.iter().fold(0.0f64, |m, p| m.max(p.abs()));
    let smallest = pivots.iter().fold(f64::INFINITY, |m, p| m.min(p.abs()));
    if !(largest > 0.0) || smallest / largest < PIVOT_FLOOR {
        return Err(AtomicError::SingularSystem);
    }
    let x = lu.solve(&b).ok_or(AtomicError::SingularSystem)?;
    if !x.iter().all(|v| v.is_finite()) {
        return Err(AtomicError::SingularSystem);
    }
    Ok(DensityMatrix::from_state(&x))
}

/// Largest step accepted by [`time_evolve`].
pub fn max_time_step(medium: &AtomicMedium, drive: &FieldDrive) -> f64 {
    let fastest = drive
        .fastest_rate()
        .max(medium.decay_12)
        .max(medium.decay_13 + medium.decay_23)
        .max(medium.gamma_23());
    0.1 / fastest
}

/// Propagates the Bloch equations with classical RK4 from `rho0` to
/// `t_final`. The step actually used is `t_final / ceil(t_final / dt)`.
pub fn time_evolve(
    medium: &AtomicMedium,
    drive: &FieldDrive,
    mode: GeneratorMode,
    rho0: &DensityMatrix,
    t_final: f64,
    dt: f64,
) -> Result<DensityMatrix, AtomicError> {
    let bound = max_time_step(medium, drive);
    if !(dt > 0.0) || dt >= bound {
        return Err(AtomicError::StepTooLarge { dt, bound });
    }
    if !(t_final >= 0.0) {
        return Err(AtomicError::InvalidParameter(format!("t_final must be >= 0, got {t_final}")));
    }
    let generator = build_generator(medium, drive, mode)?;
    let steps = (t_final / dt).ceil() as u64;
    if steps == 0 {
        return Ok(*rho0);
    }
    let h = t_final / steps as f64;
    // For a linear system one RK4 step is the degree-4 Taylor polynomial of
    // exp(hG); build it once and iterate.
    let hg = generator.matrix * h;
    let hg2 = hg * hg;
    let hg3 = hg2 * hg;
    let hg4 = hg3 * hg;
    let step: Square = Square::identity() + hg + hg2 / 2.0 + hg3 / 6.0 + hg4 / 24.0;

    let mut x = rho0.to_state();
    for _ in 0..steps {
        x = step * x;
    }
    Ok(DensityMatrix::from_state(&x))
}
