//! Axisymmetric cavity mode: normalized field magnitude on an (r, z) grid,
//! interior/exterior labels, cell volumes, and the conversion from stored
//! energy to local Rabi frequency.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::roots::{self, RootError};
use crate::units::{EPSILON_0, HBAR, SPEED_OF_LIGHT};

/// Effective mode area of the reference device, m².
pub const DEFAULT_MODE_AREA: f64 = 8.2e-10 * 1e-4;

#[derive(Debug, Error)]
pub enum ModeError {
    #[error("mode profile schema error: {0}")]
    Schema(String),
    #[error("mode profile validation error: {0}")]
    Validation(String),
    #[error("could not calibrate the evanescent amplitude: {0}")]
    CalibrationFailed(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    /// Inside the dielectric, no atoms.
    Interior,
    /// In the vapor.
    Exterior,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeNode {
    pub r: f64,
    pub z: f64,
    /// Normalized field magnitude.
    pub u: f64,
    pub region: Region,
    pub dr: f64,
    pub dz: f64,
}

impl ModeNode {
    /// Volume of the annular cell, 2πr·Δr·Δz.
    pub fn cell_volume(&self) -> f64 {
        2.0 * PI * self.r * self.dr * self.dz
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModeProfile {
    nodes: Vec<ModeNode>,
    radius: f64,
    thickness: f64,
    n_eff: f64,
    mode_area: f64,
}

impl ModeProfile {
    /// Validates the nodes and rescales so that the peak magnitude is one.
    pub fn new(
        mut nodes: Vec<ModeNode>,
        radius: f64,
        thickness: f64,
        n_eff: f64,
        mode_area: f64,
    ) -> Result<Self, ModeError> {
        if nodes.is_empty() {
            return Err(ModeError::Validation("profile has no nodes".into()));
        }
        for (name, v) in [("radius", radius), ("thickness", thickness), ("mode_area", mode_area)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ModeError::Validation(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(n_eff.is_finite() && n_eff >= 1.0) {
            return Err(ModeError::Validation(format!("n_eff must be >= 1, got {n_eff}")));
        }
        for (i, n) in nodes.iter().enumerate() {
            if !(n.u.is_finite() && n.u >= 0.0) {
                return Err(ModeError::Validation(format!("node {i}: magnitude {} is negative or not finite", n.u)));
            }
            if !(n.r.is_finite() && n.r >= 0.0 && n.z.is_finite()) {
                return Err(ModeError::Validation(format!("node {i}: bad coordinates ({}, {})", n.r, n.z)));
            }
            if !(n.dr > 0.0 && n.dz > 0.0) {
                return Err(ModeError::Validation(format!("node {i}: cell sizes must be > 0")));
            }
        }
        let peak = nodes.iter().map(|n| n.u).fold(0.0, f64::max);
        if peak == 0.0 {
            return Err(ModeError::Validation("field magnitude is zero everywhere".into()));
        }
        if peak != 1.0 {
            nodes.iter_mut().for_each(|n| n.u /= peak);
        }
        Ok(Self { nodes, radius, thickness, n_eff, mode_area })
    }

    pub fn nodes(&self) -> &[ModeNode] {
        &self.nodes
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn thickness(&self) -> f64 {
        self.thickness
    }

    pub fn n_eff(&self) -> f64 {
        self.n_eff
    }

    pub fn mode_area(&self) -> f64 {
        self.mode_area
    }

    pub fn with_mode_area(mut self, mode_area: f64) -> Self {
        self.mode_area = mode_area;
        self
    }

    /// Group velocity c/n_eff.
    pub fn group_velocity(&self) -> f64 {
        SPEED_OF_LIGHT / self.n_eff
    }

    /// Sum of cell volumes over one region.
    pub fn region_volume(&self, region: Region) -> f64 {
        self.nodes.iter().filter(|n| n.region == region).map(ModeNode::cell_volume).sum()
    }

    /// Reorders nodes; used to check that results do not depend on storage order.
    pub fn permuted(&self, order: &[usize]) -> Self {
        assert_eq!(order.len(), self.nodes.len());
        Self { nodes: order.iter().map(|&i| self.nodes[i]).collect(), ..self.clone() }
    }

    /// Multiplies all magnitudes by `factor` without renormalizing.
    pub fn scaled_unnormalized(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.nodes.iter_mut().for_each(|n| n.u *= factor);
        out
    }
}

/// Fraction of the u²-weighted energy that sits in the exterior region.
pub fn exterior_energy_fraction(profile: &ModeProfile) -> f64 {
    let (mut outside, mut total) = (0.0, 0.0);
    for n in profile.nodes() {
        let e = n.u * n.u * n.cell_volume();
        total += e;
        if n.region == Region::Exterior {
            outside += e;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        outside / total
    }
}

/// Converts stored cavity energy (J) into the Rabi frequency at every node.
///
/// The energy circulates at the group velocity around the rim, giving a
/// circulating power, a peak intensity over the effective mode area, and a
/// peak field amplitude which is scaled by the local normalized magnitude.
pub fn rabi_field(profile: &ModeProfile, stored_energy: f64, dipole: f64) -> Vec<f64> {
    let peak = peak_rabi_frequency(profile, stored_energy, dipole);
    profile.nodes().iter().map(|n| peak * n.u).collect()
}

/// Rabi frequency where u = 1.
pub fn peak_rabi_frequency(profile: &ModeProfile, stored_energy: f64, dipole: f64) -> f64 {
    assert!(stored_energy >= 0.0, "stored energy must be non-negative");
    let circulating_power = circulating_power(profile, stored_energy);
    let intensity = circulating_power / profile.mode_area();
    let field = (2.0 * intensity / (EPSILON_0 * SPEED_OF_LIGHT)).sqrt();
    2.0 * dipole * field / HBAR
}

/// Power carried around the resonator by `stored_energy`.
pub fn circulating_power(profile: &ModeProfile, stored_energy: f64) -> f64 {
    stored_energy * profile.group_velocity() / (2.0 * PI * profile.radius())
}

/// Stored energy corresponding to a given circulating power.
pub fn energy_from_circulating_power(profile: &ModeProfile, power: f64) -> f64 {
    power * 2.0 * PI * profile.radius() / profile.group_velocity()
}

/// Disk radius whose free spectral range at `wavelength` equals `fsr`
/// (both in metres), for group index `group_index`.
pub fn radius_from_fsr(wavelength: f64, group_index: f64, fsr: f64) -> f64 {
    wavelength * wavelength / (group_index * fsr) / (2.0 * PI)
}

/// Evanescent decay length λ/(2π√(n²−1)).
pub fn decay_length(wavelength: f64, n_eff: f64) -> f64 {
    wavelength / (2.0 * PI * (n_eff * n_eff - 1.0).sqrt())
}

/// Inputs to the analytic mode model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyticSpec {
    pub radius_m: f64,
    pub thickness_m: f64,
    pub wavelength_m: f64,
    pub n_eff: f64,
    pub target_exterior_fraction: f64,
    /// Radial extent of the guided core measured in from the rim; defaults
    /// to λ/n_eff.
    #[serde(default)]
    pub core_width_m: Option<f64>,
    #[serde(default = "default_grid_nodes")]
    pub radial_nodes: usize,
    #[serde(default = "default_grid_nodes")]
    pub axial_nodes: usize,
    /// Exterior padding in units of the decay length.
    #[serde(default = "default_padding")]
    pub exterior_decay_lengths: f64,
    #[serde(default = "default_mode_area")]
    pub mode_area_m2: f64,
}

fn default_grid_nodes() -> usize {
    40
}
fn default_padding() -> f64 {
    3.0
}
fn default_mode_area() -> f64 {
    DEFAULT_MODE_AREA
}

impl AnalyticSpec {
    /// Si₃N₄ disk sized for a 4 nm free spectral range around 778 nm with 30 %
    /// of the mode energy outside.
    pub fn reference() -> Self {
        let n_eff = 2.0;
        let wavelength = 778.0e-9;
        Self {
            radius_m: radius_from_fsr(wavelength, n_eff, 4.0e-9),
            thickness_m: 250.0e-9,
            wavelength_m: wavelength,
            n_eff,
            target_exterior_fraction: 0.30,
            core_width_m: None,
            radial_nodes: default_grid_nodes(),
            axial_nodes: default_grid_nodes(),
            exterior_decay_lengths: default_padding(),
            mode_area_m2: DEFAULT_MODE_AREA,
        }
    }

    pub fn core_width(&self) -> f64 {
        self.core_width_m.unwrap_or(self.wavelength_m / self.n_eff)
    }

    pub fn decay_length(&self) -> f64 {
        decay_length(self.wavelength_m, self.n_eff)
    }
}

/// Calibrated analytic mode: uniform magnitude `core` inside the
/// dielectric, `surface·exp(−d/δ)` at distance d outside it.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalyticMode {
    pub spec: AnalyticSpec,
    pub core: f64,
    pub surface: f64,
    pub decay_length: f64,
}

impl AnalyticMode {
    /// Distance from (r, z) to the dielectric cross-section.
    pub fn distance_outside(&self, r: f64, z: f64) -> f64 {
        let dr = (r - self.spec.radius_m).max(0.0);
        let dz = (z.abs() - 0.5 * self.spec.thickness_m).max(0.0);
        dr.hypot(dz)
    }

    pub fn is_inside(&self, r: f64, z: f64) -> bool {
        r <= self.spec.radius_m && z.abs() <= 0.5 * self.spec.thickness_m
    }

    pub fn magnitude(&self, r: f64, z: f64) -> f64 {
        if self.is_inside(r, z) {
            self.core
        } else {
            self.surface * (-self.distance_outside(r, z) / self.decay_length).exp()
        }
    }

    /// Samples the model on the analytic grid.
    pub fn sample(&self) -> Result<ModeProfile, ModeError> {
        let nodes = grid_nodes(&self.spec)?
            .into_iter()
            .map(|mut n| {
                n.u = self.magnitude(n.r, n.z);
                n
            })
            .collect();
        ModeProfile::new(
            nodes,
            self.spec.radius_m,
            self.spec.thickness_m,
            self.spec.n_eff,
            self.spec.mode_area_m2,
        )
    }
}

/// Cell-centred nodes on `[lo, hi]` split into segments whose edges coincide
/// with the given breakpoints.
fn segmented_axis(segments: &[(f64, f64, usize)]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for &(lo, hi, n) in segments {
        let h = (hi - lo) / n as f64;
        for k in 0..n {
            out.push((lo + (k as f64 + 0.5) * h, h));
        }
    }
    out
}

fn grid_nodes(spec: &AnalyticSpec) -> Result<Vec<ModeNode>, ModeError> {
    let delta = spec.decay_length();
    let pad = spec.exterior_decay_lengths * delta;
    let w = spec.core_width();
    let t = spec.thickness_m;
    if spec.radial_nodes < 2 || spec.axial_nodes < 3 {
        return Err(ModeError::Validation("grid needs at least 2 radial and 3 axial nodes".into()));
    }
    if !(w > 0.0 && w < spec.radius_m && pad > 0.0 && t > 0.0) {
        return Err(ModeError::Validation("core width, thickness and padding must be positive".into()));
    }
    let nr_in = ((spec.radial_nodes as f64 * w / (w + pad)).round() as usize).clamp(1, spec.radial_nodes - 1);
    let nr_out = spec.radial_nodes - nr_in;
    let mut nz_in = ((spec.axial_nodes as f64 * t / (t + 2.0 * pad)).round() as usize).clamp(1, spec.axial_nodes - 2);
    if (spec.axial_nodes - nz_in) % 2 == 1 {
        nz_in += if nz_in + 1 <= spec.axial_nodes - 2 { 1 } else { 0 };
        if (spec.axial_nodes - nz_in) % 2 == 1 {
            nz_in -= 1;
        }
    }
    let nz_side = (spec.axial_nodes - nz_in) / 2;
    let r0 = spec.radius_m;
    let r_axis = segmented_axis(&[(r0 - w, r0, nr_in), (r0, r0 + pad, nr_out)]);
    let z_axis = segmented_axis(&[
        (-0.5 * t - pad, -0.5 * t, nz_side),
        (-0.5 * t, 0.5 * t, nz_in),
        (0.5 * t, 0.5 * t + pad, nz_side),
    ]);
    let mut nodes = Vec::with_capacity(r_axis.len() * z_axis.len());
    for &(z, dz) in &z_axis {
        for &(r, dr) in &r_axis {
            let inside = r <= r0 && z.abs() <= 0.5 * t;
            nodes.push(ModeNode {
                r,
                z,
                u: 0.0,
                region: if inside { Region::Interior } else { Region::Exterior },
                dr,
                dz,
            });
        }
    }
    Ok(nodes)
}

/// Builds the analytic profile with the surface/core amplitude ratio found
/// by bisection so that the sampled exterior fraction hits the target.
pub fn analytic_mode(spec: &AnalyticSpec) -> Result<AnalyticMode, ModeError> {
    let target = spec.target_exterior_fraction;
    if !(target > 0.05 && target < 0.6) {
        return Err(ModeError::CalibrationFailed(format!(
            "target exterior fraction {target} outside (0.05, 0.6)"
        )));
    }
    if !(spec.n_eff > 1.0) {
        return Err(ModeError::Validation(format!("n_eff must exceed 1, got {}", spec.n_eff)));
    }
    let grid = grid_nodes(spec)?;
    let delta = spec.decay_length();
    let probe = AnalyticMode { spec: spec.clone(), core: 1.0, surface: 1.0, decay_length: delta };
    // Energy sums at unit amplitudes; the fraction for ratio a is
    // a²·E_out / (a²·E_out + E_in).
    let (mut e_in, mut e_out) = (0.0, 0.0);
    for n in &grid {
        let u = probe.magnitude(n.r, n.z);
        let e = u * u * n.cell_volume();
        match n.region {
            Region::Interior => e_in += e,
            Region::Exterior => e_out += e,
        }
    }
    let fraction = |ratio: f64| {
        let a2 = ratio * ratio * e_out;
        a2 / (a2 + e_in) - target
    };
    let ratio = roots::bisect_log(fraction, 1e-6, 1e6, 1e-13).map_err(|e| match e {
        RootError::NoSignChange { .. } => {
            ModeError::CalibrationFailed(format!("cannot bracket exterior fraction {target}"))
        }
        other => ModeError::CalibrationFailed(other.to_string()),
    })?;
    let peak = ratio.max(1.0);
    Ok(AnalyticMode { spec: spec.clone(), core: 1.0 / peak, surface: ratio / peak, decay_length: delta })
}

/// Samples the calibrated analytic model.
pub fn analytic_profile(spec: &AnalyticSpec) -> Result<ModeProfile, ModeError> {
    analytic_mode(spec)?.sample()
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileFile {
    radius_m: f64,
    thickness_m: f64,
    n_eff: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mode_area_m2: Option<f64>,
    nodes: Vec<NodeRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeRecord {
    r_m: f64,
    z_m: f64,
    u: f64,
    #[serde(default)]
    region: Option<Region>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dr_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dz_m: Option<f64>,
}

/// Cell widths for sorted unique coordinates: edges halfway between
/// neighbours, end cells mirrored.
fn inferred_widths(coords: &[f64]) -> Vec<(f64, f64)> {
    let mut unique: Vec<f64> = coords.to_vec();
    unique.sort_by(|a, b| a.total_cmp(b));
    unique.dedup();
    let n = unique.len();
    if n == 1 {
        return vec![(unique[0], 1.0)];
    }
    (0..n)
        .map(|i| {
            let left = if i == 0 { unique[1] - unique[0] } else { unique[i] - unique[i - 1] };
            let right = if i == n - 1 { unique[n - 1] - unique[n - 2] } else { unique[i + 1] - unique[i] };
            (unique[i], 0.5 * (left + right))
        })
        .collect()
}

fn lookup(widths: &[(f64, f64)], x: f64) -> f64 {
    let i = widths.partition_point(|&(c, _)| c < x);
    widths[i.min(widths.len() - 1)].1
}

/// Parses a profile from its JSON text.
pub fn parse_mode_profile(text: &str) -> Result<ModeProfile, ModeError> {
    let file: ProfileFile = serde_json::from_str(text).map_err(|e| ModeError::Schema(e.to_string()))?;
    let rs: Vec<f64> = file.nodes.iter().map(|n| n.r_m).collect();
    let zs: Vec<f64> = file.nodes.iter().map(|n| n.z_m).collect();
    let r_widths = inferred_widths(&rs);
    let z_widths = inferred_widths(&zs);
    let mut nodes = Vec::with_capacity(file.nodes.len());
    for (i, rec) in file.nodes.iter().enumerate() {
        let region = rec
            .region
            .ok_or_else(|| ModeError::Validation(format!("node {i} has no region label")))?;
        nodes.push(ModeNode {
            r: rec.r_m,
            z: rec.z_m,
            u: rec.u,
            region,
            dr: rec.dr_m.unwrap_or_else(|| lookup(&r_widths, rec.r_m)),
            dz: rec.dz_m.unwrap_or_else(|| lookup(&z_widths, rec.z_m)),
        });
    }
    ModeProfile::new(
        nodes,
        file.radius_m,
        file.thickness_m,
        file.n_eff,
        file.mode_area_m2.unwrap_or(DEFAULT_MODE_AREA),
    )
}

/// Reads a profile file.
pub fn load_mode_profile(path: &Path) -> Result<ModeProfile, ModeError> {
    let text = fs::read_to_string(path)
        .map_err(|source| ModeError::Io { path: path.display().to_string(), source })?;
    parse_mode_profile(&text)
}

/// Serializes a profile with nodes in row-major (z, r) order.
pub fn mode_profile_to_json(profile: &ModeProfile) -> String {
    let mut nodes: Vec<&ModeNode> = profile.nodes().iter().collect();
    nodes.sort_by(|a, b| a.z.total_cmp(&b.z).then(a.r.total_cmp(&b.r)));
    let file = ProfileFile {
        radius_m: profile.radius(),
        thickness_m: profile.thickness(),
        n_eff: profile.n_eff(),
        mode_area_m2: Some(profile.mode_area()),
        nodes: nodes
            .into_iter()
            .map(|n| NodeRecord {
                r_m: n.r,
                z_m: n.z,
                u: n.u,
                region: Some(n.region),
                dr_m: Some(n.dr),
                dz_m: Some(n.dz),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("profile serializes")
}

pub fn write_mode_profile(profile: &ModeProfile, path: &Path) -> Result<(), ModeError> {
    fs::write(path, mode_profile_to_json(profile))
        .map_err(|source| ModeError::Io { path: path.display().to_string(), source })
}
