//! Averaging over the Gaussian distribution of Doppler shifts.

use std::collections::{BinaryHeap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{AtomicError, AtomicMedium, DensityMatrix, FieldDrive};

/// Values that can be accumulated by a quadrature rule.
pub trait Averageable: Clone {
    fn zero() -> Self;
    fn add_scaled(&mut self, other: &Self, weight: f64);
    /// Distance used in convergence tests.
    fn distance(&self, other: &Self) -> f64;
    fn magnitude(&self) -> f64;
}

impl Averageable for f64 {
    fn zero() -> Self {
        0.0
    }
    fn add_scaled(&mut self, other: &Self, weight: f64) {
        *self += weight * other;
    }
    fn distance(&self, other: &Self) -> f64 {
        (self - other).abs()
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl Averageable for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn add_scaled(&mut self, other: &Self, weight: f64) {
        *self += other * weight;
    }
    fn distance(&self, other: &Self) -> f64 {
        (self - other).norm()
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

impl Averageable for DensityMatrix {
    fn zero() -> Self {
        DensityMatrix::from_matrix(nalgebra::Matrix3::zeros())
    }
    fn add_scaled(&mut self, other: &Self, weight: f64) {
        *self = DensityMatrix::from_matrix(self.matrix() + other.matrix() * Complex64::new(weight, 0.0));
    }
    fn distance(&self, other: &Self) -> f64 {
        self.max_abs_diff(other)
    }
    fn magnitude(&self) -> f64 {
        self.matrix().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Integration rule for the Doppler average.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum QuadratureSpec {
    /// Gauss–Hermite with `nodes` points, checked against `2·nodes`.
    GaussHermite { nodes: usize, rel_tol: f64 },
    /// Adaptive Gauss–Kronrod (7/15) on `±span_sigmas·σ_D`, with panel
    /// edges at the one-photon, two-photon and dressed-state resonances.
    Adaptive { rel_tol: f64, max_panels: usize, span_sigmas: f64 },
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec::Adaptive { rel_tol: 1e-7, max_panels: 4000, span_sigmas: 8.0 }
    }
}

impl QuadratureSpec {
    pub fn gauss_hermite(nodes: usize) -> Self {
        QuadratureSpec::GaussHermite { nodes, rel_tol: 1e-4 }
    }

    pub fn validate(&self) -> Result<(), AtomicError> {
        match *self {
            QuadratureSpec::GaussHermite { nodes, rel_tol } => {
                if nodes < 16 {
                    return Err(AtomicError::InvalidParameter(format!(
                        "Gauss-Hermite needs at least 16 nodes, got {nodes}"
                    )));
                }
                if !(rel_tol > 0.0) {
                    return Err(AtomicError::InvalidParameter("rel_tol must be > 0".into()));
                }
            }
            QuadratureSpec::Adaptive { rel_tol, max_panels, span_sigmas } => {
                if !(rel_tol > 0.0) || max_panels == 0 || !(span_sigmas > 0.0) {
                    return Err(AtomicError::InvalidParameter(
                        "adaptive quadrature needs rel_tol > 0, max_panels > 0, span_sigmas > 0".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Nodes and weights of the `n`-point Gauss–Hermite rule for the standard
/// normal density (weights sum to one).
#[derive(Debug)]
pub struct GaussHermiteRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Golub–Welsch construction, cached per node count.
pub fn gauss_hermite(n: usize) -> Arc<GaussHermiteRule> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussHermiteRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("quadrature cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut jacobi = DMatrix::<f64>::zeros(n, n);
            for k in 1..n {
                let b = (k as f64).sqrt();
                jacobi[(k - 1, k)] = b;
                jacobi[(k, k - 1)] = b;
            }
            let eig = jacobi.symmetric_eigen();
            let mut pairs: Vec<(f64, f64)> = (0..n)
                .map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2)))
                .collect();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            // Symmetrize to remove eigen-solver round-off.
            let mut nodes = vec![0.0; n];
            let mut weights = vec![0.0; n];
            for i in 0..n {
                let j = n - 1 - i;
                nodes[i] = 0.5 * (pairs[i].0 - pairs[j].0);
                weights[i] = 0.5 * (pairs[i].1 + pairs[j].1);
            }
            let total: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|w| *w /= total);
            Arc::new(GaussHermiteRule { nodes, weights })
        })
        .clone()
}

const KRONROD_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const KRONROD_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for Kronrod nodes 1, 3, 5, 7.
const GAUSS_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct Panel<V> {
    lo: f64,
    hi: f64,
    value: V,
    scale: f64,
    error: f64,
}

impl<V> PartialEq for Panel<V> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<V> Eq for Panel<V> {}
impl<V> PartialOrd for Panel<V> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl<V> Ord for Panel<V> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod_panel<V, F>(lo: f64, hi: f64, integrand: &mut F) -> Result<Panel<V>, AtomicError>
where
    V: Averageable,
    F: FnMut(f64) -> Result<V, AtomicError>,
{
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut kronrod = V::zero();
    let mut gauss = V::zero();
    let mut scale = 0.0;
    for (k, (&x, &w)) in KRONROD_NODES.iter().zip(KRONROD_WEIGHTS.iter()).enumerate() {
        let points: &[f64] = if x == 0.0 { &[0.0] } else { &[-1.0, 1.0] };
        for &sign in points {
            let v = integrand(center + sign * half * x)?;
            kronrod.add_scaled(&v, w * half);
            scale += w * half * v.magnitude();
            if k % 2 == 1 {
                gauss.add_scaled(&v, GAUSS_WEIGHTS[k / 2] * half);
            }
        }
    }
    let error = kronrod.distance(&gauss);
    Ok(Panel { lo, hi, value: kronrod, scale, error })
}

/// Shifts at which the velocity-class response has narrow features.
fn resonance_shifts(drive: &FieldDrive, control_ratio: f64) -> Vec<f64> {
    let ds = drive.signal_detuning;
    let two_photon = drive.signal_detuning + drive.control_detuning;
    let half_split = 0.5 * drive.control_rabi.norm();
    vec![
        0.0,
        -ds,
        -two_photon / (1.0 + control_ratio),
        -ds + half_split,
        -ds - half_split,
    ]
}

fn adaptive_average<V, F>(
    medium: &AtomicMedium,
    drive: &FieldDrive,
    rel_tol: f64,
    max_panels: usize,
    span_sigmas: f64,
    mut f: F,
) -> Result<V, AtomicError>
where
    V: Averageable,
    F: FnMut(&FieldDrive) -> Result<V, AtomicError>,
{
    let sigma = medium.doppler_width;
    let ratio = medium.doppler_ratio();
    let norm = 1.0 / ((2.0 * std::f64::consts::PI).sqrt() * sigma);
    let mut integrand = |shift: f64| -> Result<V, AtomicError> {
        let density = norm * (-0.5 * (shift / sigma).powi(2)).exp();
        let mut v = V::zero();
        if density > 0.0 {
            v.add_scaled(&f(&drive.doppler_shifted(shift, ratio))?, density);
        }
        Ok(v)
    };

    let limit = span_sigmas * sigma;
    const INITIAL: usize = 16;
    let mut edges: Vec<f64> = (0..=INITIAL)
        .map(|k| -limit + 2.0 * limit * k as f64 / INITIAL as f64)
        .collect();
    edges.extend(
        resonance_shifts(drive, ratio)
            .into_iter()
            .filter(|s| s.abs() < limit),
    );
    edges.sort_by(|a, b| a.total_cmp(b));
    let min_gap = 1e-9 * limit;
    edges.dedup_by(|a, b| (*a - *b).abs() < min_gap);

    let mut heap = BinaryHeap::new();
    for w in edges.windows(2) {
        heap.push(kronrod_panel(w[0], w[1], &mut integrand)?);
    }
    loop {
        let mut total = V::zero();
        let mut scale = 0.0;
        let mut error = 0.0;
        for p in heap.iter() {
            total.add_scaled(&p.value, 1.0);
            scale += p.scale;
            error += p.error;
        }
        let target = rel_tol * scale.max(total.magnitude());
        if error <= target || scale == 0.0 {
            return Ok(total);
        }
        if heap.len() >= max_panels {
            return Err(AtomicError::NotConverged { change: error / scale, tolerance: rel_tol });
        }
        let worst = heap.pop().expect("at least one panel");
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            return Err(AtomicError::NotConverged { change: error / scale, tolerance: rel_tol });
        }
        heap.push(kronrod_panel(worst.lo, mid, &mut integrand)?);
        heap.push(kronrod_panel(mid, worst.hi, &mut integrand)?);
    }
}

fn hermite_sum<V, F>(
    medium: &AtomicMedium,
    drive: &FieldDrive,
    nodes: usize,
    f: &mut F,
) -> Result<V, AtomicError>
where
    V: Averageable,
    F: FnMut(&FieldDrive) -> Result<V, AtomicError>,
{
    let rule = gauss_hermite(nodes);
    let ratio = medium.doppler_ratio();
    let mut acc = V::zero();
    for (&x, &w) in rule.nodes.iter().zip(rule.weights.iter()) {
        let v = f(&drive.doppler_shifted(x * medium.doppler_width, ratio))?;
        acc.add_scaled(&v, w);
    }
    Ok(acc)
}

/// Gaussian average `∫ F(Δ) f(drive shifted by Δ) dΔ` over velocity classes.
///
/// Each class shifts the signal detuning by Δ and the control detuning by
/// `Δ·λs/λc` (co-propagating beams).
pub fn doppler_average<V, F>(
    medium: &AtomicMedium,
    drive: &FieldDrive,
    quadrature: &QuadratureSpec,
    mut f: F,
) -> Result<V, AtomicError>
where
    V: Averageable,
    F: FnMut(&FieldDrive) -> Result<V, AtomicError>,
{
    medium.validate()?;
    quadrature.validate()?;
    match *quadrature {
        QuadratureSpec::GaussHermite { nodes, rel_tol } => {
            let coarse: V = hermite_sum(medium, drive, nodes, &mut f)?;
            let fine: V = hermite_sum(medium, drive, 2 * nodes, &mut f)?;
            let change = coarse.distance(&fine) / fine.magnitude().max(f64::MIN_POSITIVE);
            if change > rel_tol {
                return Err(AtomicError::NotConverged { change, tolerance: rel_tol });
            }
            Ok(coarse)
        }
        QuadratureSpec::Adaptive { rel_tol, max_panels, span_sigmas } => {
            adaptive_average(medium, drive, rel_tol, max_panels, span_sigmas, f)
        }
    }
}
