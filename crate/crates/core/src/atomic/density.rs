use nalgebra::{Matrix3, SVector};
use num_complex::Complex64;

use super::generator::STATE_DIM;

/// 3×3 density matrix of the cascade atom, indexed from 1 to 3 in the
/// accessor methods to match the level labels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityMatrix {
    entries: Matrix3<Complex64>,
}

impl DensityMatrix {
    /// All population in level 1.
    pub fn ground() -> Self {
        let mut entries = Matrix3::zeros();
        entries[(0, 0)] = Complex64::new(1.0, 0.0);
        Self { entries }
    }

    pub fn from_matrix(entries: Matrix3<Complex64>) -> Self {
        Self { entries }
    }

    /// Builds ρ = A·A† / tr(A·A†), which is positive with unit trace.
    pub fn from_factor(a: &Matrix3<Complex64>) -> Self {
        let m = a * a.adjoint();
        let tr = m.trace();
        Self { entries: m / tr }
    }

    /// Real state vector `[ρ11, ρ22, ρ33, Re ρ12, Im ρ12, Re ρ13, Im ρ13, Re ρ23, Im ρ23]`.
    pub fn to_state(&self) -> SVector<f64, STATE_DIM> {
        let e = &self.entries;
        SVector::from([
            e[(0, 0)].re,
            e[(1, 1)].re,
            e[(2, 2)].re,
            e[(0, 1)].re,
            e[(0, 1)].im,
            e[(0, 2)].re,
            e[(0, 2)].im,
            e[(1, 2)].re,
            e[(1, 2)].im,
        ])
    }

    /// Inverse of [`DensityMatrix::to_state`]; the lower triangle is filled
    /// by Hermitian conjugation.
    pub fn from_state(x: &SVector<f64, STATE_DIM>) -> Self {
        let r12 = Complex64::new(x[3], x[4]);
        let r13 = Complex64::new(x[5], x[6]);
        let r23 = Complex64::new(x[7], x[8]);
        let entries = Matrix3::new(
            Complex64::new(x[0], 0.0),
            r12,
            r13,
            r12.conj(),
            Complex64::new(x[1], 0.0),
            r23,
            r13.conj(),
            r23.conj(),
            Complex64::new(x[2], 0.0),
        );
        Self { entries }
    }

    /// Entry ρ_mn with `m, n ∈ {1, 2, 3}`.
    pub fn rho(&self, m: usize, n: usize) -> Complex64 {
        assert!((1..=3).contains(&m) && (1..=3).contains(&n), "level index out of range");
        self.entries[(m - 1, n - 1)]
    }

    pub fn matrix(&self) -> &Matrix3<Complex64> {
        &self.entries
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    pub fn populations(&self) -> [f64; 3] {
        [self.entries[(0, 0)].re, self.entries[(1, 1)].re, self.entries[(2, 2)].re]
    }

    /// Largest |ρ_mn − conj(ρ_nm)|.
    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.entries - self.entries.adjoint();
        d.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> [f64; 3] {
        let h = (self.entries + self.entries.adjoint()) * Complex64::new(0.5, 0.0);
        let ev = h.symmetric_eigenvalues();
        let mut out = [ev[0], ev[1], ev[2]];
        out.sort_by(|a, b| a.total_cmp(b));
        out
    }

    /// Largest entrywise modulus difference.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        (self.entries - other.entries)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}
