//! Switching figures of merit from paired control-on/control-off spectra,
//! and coupling-rate optimizers that balance the two output ports.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cavity::{transmission, CavityParams, PortSpectra};
use crate::roots::{bisect, bisect_log, RootError};
use crate::units::to_hz;

/// Contrast (dB) that defines the edge of the switching band.
pub const BANDWIDTH_THRESHOLD_DB: f64 = 20.0;
/// Relative tolerance on κ for the coupling optimizers. The bandwidth
/// mismatch is steep near the point where the drop band closes, so this is
/// well below what the port metrics themselves resolve.
pub const COUPLING_REL_TOL: f64 = 1e-8;
/// Post-hoc bound on |contrast_through − contrast_drop| (dB).
pub const CONTRAST_MATCH_TOL_DB: f64 = 0.01;
/// Post-hoc bound on |BW_through − BW_drop| relative to the larger one.
pub const BANDWIDTH_MATCH_REL_TOL: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Port {
    Through,
    Drop,
}

impl std::fmt::Display for Port {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Port::Through => "through",
            Port::Drop => "drop",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("on and off spectra must share one detuning grid")]
    GridMismatch,
    #[error("detuning grid must be strictly increasing and contain 0")]
    MissingCenter,
    #[error("{port} port contrast at zero detuning is {contrast_db} dB, below the bandwidth threshold")]
    ThresholdNeverReached { port: Port, contrast_db: f64 },
    #[error("no coupling rate in [{lo}, {hi}] balances the ports")]
    NoRoot { lo: f64, hi: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("optimizer residual {residual} exceeds tolerance {tolerance}")]
    ToleranceNotMet { residual: f64, tolerance: f64 },
}

/// Loss, contrast and bandwidth of both ports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwitchReport {
    pub kappa_in_rad_s: f64,
    pub kappa_drop_rad_s: f64,
    pub kappa_e_on_rad_s: f64,
    pub kappa_e_off_rad_s: f64,
    pub through_loss_db: f64,
    pub through_contrast_db: f64,
    pub drop_loss_db: f64,
    pub drop_contrast_db: f64,
    pub through_bandwidth_rad_s: f64,
    pub through_bandwidth_hz: f64,
    pub drop_bandwidth_rad_s: f64,
    pub drop_bandwidth_hz: f64,
    /// False when the port contrast at zero detuning is below the threshold;
    /// the bandwidth is then reported as 0.
    pub through_threshold_reached: bool,
    pub drop_threshold_reached: bool,
    /// True when the band reaches the edge of the grid, so the bandwidth is
    /// a lower bound.
    pub through_clipped: bool,
    pub drop_clipped: bool,
}

impl SwitchReport {
    pub fn bandwidth(&self, port: Port) -> f64 {
        match port {
            Port::Through => self.through_bandwidth_rad_s,
            Port::Drop => self.drop_bandwidth_rad_s,
        }
    }

    pub fn contrast(&self, port: Port) -> f64 {
        match port {
            Port::Through => self.through_contrast_db,
            Port::Drop => self.drop_contrast_db,
        }
    }

    pub fn loss(&self, port: Port) -> f64 {
        match port {
            Port::Through => self.through_loss_db,
            Port::Drop => self.drop_loss_db,
        }
    }
}

fn db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}

/// Contrast of one port: routed state over unrouted state.
fn port_contrast(port: Port, on: (f64, f64), off: (f64, f64)) -> f64 {
    match port {
        Port::Through => db(off.0 / on.0),
        Port::Drop => db(on.1 / off.1),
    }
}

struct Band {
    width: f64,
    reached: bool,
    clipped: bool,
}

/// Width of the contiguous interval around `center` where `contrast` stays
/// at or above the threshold, with linearly interpolated edges.
fn grid_band(grid: &[f64], contrast: &[f64], center: usize) -> Band {
    if !(contrast[center] >= BANDWIDTH_THRESHOLD_DB) {
        return Band { width: 0.0, reached: false, clipped: false };
    }
    let mut clipped = false;
    let mut edge = |step: isize| -> f64 {
        let mut i = center;
        loop {
            let j = i as isize + step;
            if j < 0 || j as usize >= grid.len() {
                clipped = true;
                return grid[i];
            }
            let j = j as usize;
            if contrast[j] < BANDWIDTH_THRESHOLD_DB {
                let (ci, cj) = (contrast[i], contrast[j]);
                if ci.is_infinite() {
                    return grid[i];
                }
                let t = (ci - BANDWIDTH_THRESHOLD_DB) / (ci - cj);
                return grid[i] + t * (grid[j] - grid[i]);
            }
            i = j;
        }
    };
    let right = edge(1);
    let left = edge(-1);
    Band { width: right - left, reached: true, clipped }
}

/// Figures of merit from spectra sampled on a common grid containing 0.
pub fn port_metrics(on: &PortSpectra, off: &PortSpectra) -> Result<SwitchReport, MetricsError> {
    if on.detunings != off.detunings || on.through.len() != on.detunings.len() || off.drop.len() != off.detunings.len()
    {
        return Err(MetricsError::GridMismatch);
    }
    let grid = &on.detunings;
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(MetricsError::MissingCenter);
    }
    let center = grid.iter().position(|&d| d == 0.0).ok_or(MetricsError::MissingCenter)?;

    let pairs = |i: usize| ((on.through[i], on.drop[i]), (off.through[i], off.drop[i]));
    let curve = |port| (0..grid.len()).map(|i| {
        let (a, b) = pairs(i);
        port_contrast(port, a, b)
    }).collect::<Vec<_>>();
    let through_curve = curve(Port::Through);
    let drop_curve = curve(Port::Drop);
    let tb = grid_band(grid, &through_curve, center);
    let dbnd = grid_band(grid, &drop_curve, center);

    Ok(SwitchReport {
        kappa_in_rad_s: on.cavity.coupling_in,
        kappa_drop_rad_s: on.cavity.coupling_drop,
        kappa_e_on_rad_s: on.cavity.atomic,
        kappa_e_off_rad_s: off.cavity.atomic,
        through_loss_db: -db(off.through[center]),
        through_contrast_db: through_curve[center],
        drop_loss_db: -db(on.drop[center]),
        drop_contrast_db: drop_curve[center],
        through_bandwidth_rad_s: tb.width,
        through_bandwidth_hz: to_hz(tb.width),
        drop_bandwidth_rad_s: dbnd.width,
        drop_bandwidth_hz: to_hz(dbnd.width),
        through_threshold_reached: tb.reached,
        drop_threshold_reached: dbnd.reached,
        through_clipped: tb.clipped,
        drop_clipped: dbnd.clipped,
    })
}

/// Contrast of `port` at detuning `detuning` from the closed-form spectra.
pub fn contrast_at(port: Port, on: &CavityParams, off: &CavityParams, detuning: f64) -> f64 {
    port_contrast(port, transmission(on, detuning), transmission(off, detuning))
}

/// Full width of the 20 dB band found by root finding on the closed-form
/// contrast, with no grid involved.
pub fn continuous_bandwidth(port: Port, on: &CavityParams, off: &CavityParams) -> Result<f64, MetricsError> {
    let excess = |d: f64| contrast_at(port, on, off, d) - BANDWIDTH_THRESHOLD_DB;
    let at_center = excess(0.0);
    if !(at_center >= 0.0) {
        return Err(MetricsError::ThresholdNeverReached { port, contrast_db: at_center + BANDWIDTH_THRESHOLD_DB });
    }
    if at_center.is_infinite() && excess(f64::MIN_POSITIVE).is_infinite() {
        return Err(MetricsError::InvalidInput(format!("{port} contrast is unbounded")));
    }
    let scale = on.total_rate().min(off.total_rate());
    let mut hi = 1e-3 * scale;
    let mut lo = 0.0;
    // Both transmissions tend to the same value far off resonance, so the
    // contrast eventually falls below any positive threshold.
    while excess(hi) >= 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 * scale {
            return Err(MetricsError::InvalidInput(format!("{port} contrast never falls below threshold")));
        }
    }
    let guard = |d: f64| {
        let v = excess(d);
        if v.is_infinite() { v.signum() } else { v }
    };
    let edge = bisect(guard, lo, hi, 1e-13, 0.0).map_err(root_error)?;
    Ok(2.0 * edge)
}

fn root_error(e: RootError) -> MetricsError {
    match e {
        RootError::NoSignChange { lo, hi, .. } => MetricsError::NoRoot { lo, hi },
        RootError::NonFinite { x } => MetricsError::NoRoot { lo: x, hi: x },
    }
}

/// Fixed part of the design problem: κ0, ω0 and the two atomic loss rates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwitchDesign {
    pub resonance: f64,
    pub intrinsic: f64,
    pub kappa_e_on: f64,
    pub kappa_e_off: f64,
}

impl SwitchDesign {
    pub fn new(template: &CavityParams, kappa_e_on: f64, kappa_e_off: f64) -> Self {
        Self { resonance: template.resonance, intrinsic: template.intrinsic, kappa_e_on, kappa_e_off }
    }

    /// On and off cavities with symmetric coupling κ1 = κ2 = `kappa`.
    pub fn cavities(&self, kappa: f64) -> (CavityParams, CavityParams) {
        let base = CavityParams {
            resonance: self.resonance,
            intrinsic: self.intrinsic,
            coupling_in: kappa,
            coupling_drop: kappa,
            atomic: 0.0,
        };
        (base.with_atomic(self.kappa_e_on), base.with_atomic(self.kappa_e_off))
    }

    fn validate(&self) -> Result<(), MetricsError> {
        let ok = |x: f64| x.is_finite() && x >= 0.0;
        if !(ok(self.intrinsic) && ok(self.kappa_e_on) && ok(self.kappa_e_off) && self.resonance > 0.0) {
            return Err(MetricsError::InvalidInput(format!("{self:?}")));
        }
        if !(self.kappa_e_off > self.kappa_e_on) {
            return Err(MetricsError::InvalidInput(
                "control-off loss must exceed control-on loss for the switch to route".into(),
            ));
        }
        Ok(())
    }

    /// Bandwidth mismatch BW_through − BW_drop at coupling `kappa`.
    pub fn bandwidth_mismatch(&self, kappa: f64) -> Result<f64, MetricsError> {
        let (on, off) = self.cavities(kappa);
        Ok(continuous_bandwidth(Port::Through, &on, &off)? - continuous_bandwidth(Port::Drop, &on, &off)?)
    }

    /// Contrast mismatch C_through − C_drop (dB) at coupling `kappa`.
    pub fn contrast_mismatch(&self, kappa: f64) -> f64 {
        let (on, off) = self.cavities(kappa);
        contrast_at(Port::Through, &on, &off, 0.0) - contrast_at(Port::Drop, &on, &off, 0.0)
    }

    /// A bracket spanning from well below the on-state loss to well above
    /// the off-state loss.
    pub fn default_bracket(&self) -> (f64, f64) {
        let floor = self.intrinsic.max(self.kappa_e_on).max(1e-6 * self.kappa_e_off);
        (1e-2 * floor, 1e2 * self.kappa_e_off)
    }
}

/// Symmetric coupling at which both ports have the same 20 dB bandwidth.
pub fn equalize_bandwidth(design: &SwitchDesign, bracket: (f64, f64)) -> Result<f64, MetricsError> {
    design.validate()?;
    check_bracket(bracket)?;
    // Threshold failures abort the search; they are not sign information.
    let mut failure = None;
    let result = bisect_log(
        |k| match design.bandwidth_mismatch(k) {
            Ok(g) => g,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        bracket.0,
        bracket.1,
        COUPLING_REL_TOL,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let kappa = result.map_err(|_| MetricsError::NoRoot { lo: bracket.0, hi: bracket.1 })?;
    let (on, off) = design.cavities(kappa);
    let scale = continuous_bandwidth(Port::Through, &on, &off)?.max(continuous_bandwidth(Port::Drop, &on, &off)?);
    let residual = design.bandwidth_mismatch(kappa)?.abs();
    let tolerance = BANDWIDTH_MATCH_REL_TOL * scale;
    if residual > tolerance {
        return Err(MetricsError::ToleranceNotMet { residual, tolerance });
    }
    Ok(kappa)
}

/// Symmetric coupling at which both ports have the same on-resonance
/// contrast.
pub fn equalize_contrast(design: &SwitchDesign, bracket: (f64, f64)) -> Result<f64, MetricsError> {
    design.validate()?;
    check_bracket(bracket)?;
    let kappa = bisect_log(|k| design.contrast_mismatch(k), bracket.0, bracket.1, COUPLING_REL_TOL)
        .map_err(|_| MetricsError::NoRoot { lo: bracket.0, hi: bracket.1 })?;
    let residual = design.contrast_mismatch(kappa).abs();
    if !(residual <= CONTRAST_MATCH_TOL_DB) {
        return Err(MetricsError::ToleranceNotMet { residual, tolerance: CONTRAST_MATCH_TOL_DB });
    }
    Ok(kappa)
}

fn check_bracket((lo, hi): (f64, f64)) -> Result<(), MetricsError> {
    if lo > 0.0 && hi > lo && hi.is_finite() {
        Ok(())
    } else {
        Err(MetricsError::InvalidInput(format!("bracket [{lo}, {hi}] must satisfy 0 < lo < hi")))
    }
}

/// First sign change of `g` on `n` log-spaced points in `bracket`.
pub fn scan_for_bracket<F>(mut g: F, bracket: (f64, f64), n: usize) -> Option<(f64, f64)>
where
    F: FnMut(f64) -> Option<f64>,
{
    let (lo, hi) = bracket;
    let ratio = (hi / lo).ln() / (n.max(2) - 1) as f64;
    let mut prev: Option<(f64, f64)> = None;
    for i in 0..n.max(2) {
        let k = lo * (ratio * i as f64).exp();
        let Some(v) = g(k).filter(|v| v.is_finite()) else {
            prev = None;
            continue;
        };
        if let Some((pk, pv)) = prev {
            if pv.signum() != v.signum() || v == 0.0 {
                return Some((pk, k));
            }
        }
        prev = Some((k, v));
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cavity::{spectrum, symmetric_grid};
    use std::f64::consts::PI;

    const GHZ: f64 = 2.0 * PI * 1e9;

    fn cavity(k: f64, atomic: f64) -> CavityParams {
        CavityParams::from_quality(780e-9, 3.6e6, k, k, atomic)
    }

    fn flat_spectra(grid: &[f64], t: f64, d: f64) -> PortSpectra {
        PortSpectra {
            cavity: cavity(1.0, 0.0),
            detunings: grid.to_vec(),
            through: vec![t; grid.len()],
            drop: vec![d; grid.len()],
        }
    }

    #[test]
    fn fifty_db_definition() {
        let grid = symmetric_grid(1.0, 5);
        let on = flat_spectra(&grid, 1e-5, 0.5);
        let off = flat_spectra(&grid, 1.0, 0.5);
        let r = port_metrics(&on, &off).unwrap();
        assert_eq!(r.through_loss_db, 0.0);
        assert!((r.through_contrast_db - 50.0).abs() < 1e-12);
        assert!(r.through_clipped);
        assert!(!r.drop_threshold_reached);
        assert_eq!(r.drop_bandwidth_rad_s, 0.0);
    }

    #[test]
    fn constructed_crossing_gives_exact_band() {
        // Contrast falls linearly from 40 dB at 0 to 20 dB at ±250 MHz.
        let edge = 2.0 * PI * 250e6;
        let grid = symmetric_grid(2.0 * PI * 2e9, 2001);
        let through_on: Vec<f64> =
            grid.iter().map(|d| 10f64.powf(-(40.0 - 20.0 * d.abs() / edge) / 10.0)).collect();
        let mut on = flat_spectra(&grid, 0.0, 1.0);
        on.through = through_on;
        let off = flat_spectra(&grid, 1.0, 1.0);
        let r = port_metrics(&on, &off).unwrap();
        assert!((r.through_bandwidth_hz / 500e6 - 1.0).abs() < 1e-9);
        assert!(!r.through_clipped);
    }

    #[test]
    fn grid_must_contain_zero() {
        let grid = vec![-1.0, -0.5, 0.5, 1.0];
        let s = flat_spectra(&grid, 1.0, 0.0);
        assert_eq!(port_metrics(&s, &s), Err(MetricsError::MissingCenter));
        let other = flat_spectra(&symmetric_grid(1.0, 5), 1.0, 0.0);
        assert_eq!(port_metrics(&other, &flat_spectra(&symmetric_grid(2.0, 5), 1.0, 0.0)), Err(MetricsError::GridMismatch));
    }

    /// Edge of the 20 dB through-port band from the quadratic obtained by
    /// clearing denominators in T_off = 100·T_on.
    fn quadratic_through_edge(on: &CavityParams, off: &CavityParams) -> f64 {
        let r = 10f64.powf(BANDWIDTH_THRESHOLD_DB / 10.0);
        let num = |c: &CavityParams| c.intrinsic + c.atomic - c.coupling_in + c.coupling_drop;
        let (a_on, a_off) = (num(on).powi(2), num(off).powi(2));
        let (k_on, k_off) = (on.total_rate().powi(2), off.total_rate().powi(2));
        // (y + a_off)(y + k_on) = r (y + a_on)(y + k_off), y = 4Δ².
        let qa = 1.0 - r;
        let qb = a_off + k_on - r * (a_on + k_off);
        let qc = a_off * k_on - r * a_on * k_off;
        let disc = (qb * qb - 4.0 * qa * qc).sqrt();
        let y = [(-qb + disc) / (2.0 * qa), (-qb - disc) / (2.0 * qa)]
            .into_iter()
            .filter(|y| *y > 0.0)
            .fold(f64::INFINITY, f64::min);
        (y / 4.0).sqrt()
    }

    #[test]
    fn continuous_bandwidth_matches_quadratic() {
        let on = cavity(26.7 * GHZ, 0.0444 * GHZ);
        let off = cavity(26.7 * GHZ, 850.0 * GHZ);
        let bw = continuous_bandwidth(Port::Through, &on, &off).unwrap();
        let expected = 2.0 * quadratic_through_edge(&on, &off);
        assert!((bw / expected - 1.0).abs() < 1e-10, "{bw} vs {expected}");
    }

    #[test]
    fn grid_and_continuous_bandwidths_agree() {
        let on = cavity(26.7 * GHZ, 0.0444 * GHZ);
        let off = cavity(26.7 * GHZ, 850.0 * GHZ);
        let grid = symmetric_grid(200.0 * GHZ, 40001);
        let (s_on, s_off) = spectrum(&on, &off, &grid);
        let r = port_metrics(&s_on, &s_off).unwrap();
        for port in [Port::Through, Port::Drop] {
            let exact = continuous_bandwidth(port, &on, &off).unwrap();
            assert!((r.bandwidth(port) / exact - 1.0).abs() < 1e-3, "{port}");
        }
    }

    #[test]
    fn unrouted_state_has_no_bandwidth() {
        let on = cavity(26.7 * GHZ, 100.0 * GHZ);
        let off = cavity(26.7 * GHZ, 110.0 * GHZ);
        assert!(matches!(
            continuous_bandwidth(Port::Through, &on, &off),
            Err(MetricsError::ThresholdNeverReached { port: Port::Through, .. })
        ));
    }

    #[test]
    fn scaling_rates_and_grid_scales_band() {
        let on = cavity(26.7 * GHZ, 0.05 * GHZ);
        let off = cavity(26.7 * GHZ, 850.0 * GHZ);
        let grid = symmetric_grid(100.0 * GHZ, 2001);
        let (a_on, a_off) = spectrum(&on, &off, &grid);
        let scale = |c: &CavityParams| CavityParams {
            intrinsic: 10.0 * c.intrinsic,
            coupling_in: 10.0 * c.coupling_in,
            coupling_drop: 10.0 * c.coupling_drop,
            atomic: 10.0 * c.atomic,
            ..*c
        };
        let grid10: Vec<f64> = grid.iter().map(|d| 10.0 * d).collect();
        let (b_on, b_off) = spectrum(&scale(&on), &scale(&off), &grid10);
        let a = port_metrics(&a_on, &a_off).unwrap();
        let b = port_metrics(&b_on, &b_off).unwrap();
        assert!((a.through_contrast_db - b.through_contrast_db).abs() < 1e-10);
        assert!((a.drop_loss_db - b.drop_loss_db).abs() < 1e-10);
        assert!((b.through_bandwidth_rad_s / a.through_bandwidth_rad_s - 10.0).abs() < 1e-9);
    }

    fn table_pair() -> SwitchDesign {
        SwitchDesign::new(&cavity(0.0, 0.0), 0.0444 * GHZ, 850.0 * GHZ)
    }

    #[test]
    fn contrast_optimizer_matches_scan() {
        let d = table_pair();
        let bracket = d.default_bracket();
        let k = equalize_contrast(&d, bracket).unwrap();
        let (lo, hi) = scan_for_bracket(|k| Some(d.contrast_mismatch(k)), bracket, 200).unwrap();
        assert!(lo <= k * (1.0 + 1e-4) && k <= hi * (1.0 + 1e-4));
        assert!(d.contrast_mismatch(k).abs() < CONTRAST_MATCH_TOL_DB);
    }

    #[test]
    fn bandwidth_optimizer_matches_scan() {
        let d = table_pair();
        let (lo, hi) = scan_for_bracket(|k| d.bandwidth_mismatch(k).ok(), (1.0 * GHZ, 1000.0 * GHZ), 200).unwrap();
        let k = equalize_bandwidth(&d, (lo, hi)).unwrap();
        assert!(lo <= k && k <= hi);
        // The drop-port band closes just above the balance point.
        assert!(matches!(
            equalize_bandwidth(&d, (1.0 * GHZ, 1000.0 * GHZ)),
            Err(MetricsError::ThresholdNeverReached { port: Port::Drop, .. })
        ));
    }

    #[test]
    fn degenerate_designs_are_rejected() {
        let same = SwitchDesign { kappa_e_on: GHZ, kappa_e_off: GHZ, ..table_pair() };
        assert!(matches!(equalize_contrast(&same, (0.1 * GHZ, 100.0 * GHZ)), Err(MetricsError::InvalidInput(_))));
        let lossless = SwitchDesign { intrinsic: 0.0, kappa_e_on: 0.0, ..table_pair() };
        assert!(matches!(
            equalize_contrast(&lossless, (0.1 * GHZ, 100.0 * GHZ)),
            Err(MetricsError::NoRoot { .. })
        ));
    }

    #[test]
    fn off_state_loss_raises_through_contrast() {
        let on = cavity(26.7 * GHZ, 0.05 * GHZ);
        let c1 = contrast_at(Port::Through, &on, &cavity(26.7 * GHZ, 100.0 * GHZ), 0.0);
        let c2 = contrast_at(Port::Through, &on, &cavity(26.7 * GHZ, 200.0 * GHZ), 0.0);
        assert!(c2 > c1);
    }
}
