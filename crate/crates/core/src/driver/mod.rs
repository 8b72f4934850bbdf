//! End-to-end pipeline: mode profile → atomic response → absorption →
//! cavity spectra → switch metrics, plus parameter sweeps.

mod config;
mod output;

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

pub use config::{
    AbsorptionConfig, CavityConfig, ConfigError, GridConfig, MediumConfig, PowerConfig, ProfileSource, RunConfig,
    ENV_PREFIX,
};
pub use output::{write_absorption_csv, write_spectrum_csv, write_sweep_csv, SWEEP_COLUMNS};

use crate::absorption::{alpha_avg, control_energy, self_consistent_fields, signal_energy, AbsorptionError, Detunings, SelfConsistentFields};
use crate::atomic::AtomicMedium;
use crate::cavity::{spectrum, symmetric_grid, CavityParams, PortSpectra};
use crate::metrics::{
    continuous_bandwidth, equalize_bandwidth, equalize_contrast, port_metrics, scan_for_bracket, MetricsError, Port,
    SwitchDesign, SwitchReport,
};
use crate::modefield::{exterior_energy_fraction, ModeError, ModeProfile};

#[derive(Debug, Error)]
pub enum DriverError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Profile(#[from] ModeError),
    #[error(transparent)]
    Absorption(#[from] AbsorptionError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("unknown sweep parameter `{0}` (expected one of: {names})", names = SweepParameter::NAMES.join(", "))]
    UnknownParameter(String),
    #[error("cannot write {path}: {message}")]
    Output { path: String, message: String },
}

/// Figures the run can emit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Figure {
    Absorption,
    EqualBandwidthThrough,
    EqualBandwidthDrop,
    EqualContrastThrough,
    EqualContrastDrop,
}

impl Figure {
    pub const ALL: [Figure; 5] = [
        Figure::Absorption,
        Figure::EqualBandwidthThrough,
        Figure::EqualBandwidthDrop,
        Figure::EqualContrastThrough,
        Figure::EqualContrastDrop,
    ];

    pub fn file_name(self) -> &'static str {
        match self {
            Figure::Absorption => "fig4.csv",
            Figure::EqualBandwidthThrough => "fig5a.csv",
            Figure::EqualBandwidthDrop => "fig5b.csv",
            Figure::EqualContrastThrough => "fig5c.csv",
            Figure::EqualContrastDrop => "fig5d.csv",
        }
    }
}

impl FromStr for Figure {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "fig4" => Figure::Absorption,
            "fig5a" => Figure::EqualBandwidthThrough,
            "fig5b" => Figure::EqualBandwidthDrop,
            "fig5c" => Figure::EqualContrastThrough,
            "fig5d" => Figure::EqualContrastDrop,
            _ => return Err(format!("unknown figure `{s}`")),
        })
    }
}

/// Result of one self-consistent solve at zero signal detuning.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StateSummary {
    pub kappa_e_rad_s: f64,
    pub alpha_bar_per_m: f64,
    pub signal_energy_j: f64,
    pub control_energy_j: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl StateSummary {
    fn from_fields(f: &SelfConsistentFields) -> Self {
        Self {
            kappa_e_rad_s: f.absorption.kappa_e,
            alpha_bar_per_m: f.absorption.alpha_bar,
            signal_energy_j: f.signal_energy,
            control_energy_j: f.control_energy,
            iterations: f.absorption.iterations,
            converged: f.absorption.converged,
        }
    }
}

/// One coupling design and the metrics read off its spectra.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DesignBlock {
    pub coupling_rad_s: Option<f64>,
    pub grid_half_span_rad_s: Option<f64>,
    pub report: Option<SwitchReport>,
    pub error: Option<String>,
}

impl DesignBlock {
    fn failed(e: impl std::fmt::Display) -> Self {
        Self { coupling_rad_s: None, grid_half_span_rad_s: None, report: None, error: Some(e.to_string()) }
    }

    pub fn converged(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub exterior_energy_fraction: f64,
    pub reference_coupling_rad_s: f64,
    pub control_on: StateSummary,
    pub control_off: StateSummary,
    pub reference_design: DesignBlock,
    pub equal_bandwidth: DesignBlock,
    pub equal_contrast: DesignBlock,
    pub converged: bool,
}

/// Everything derived from one configuration before file output.
pub struct Simulation {
    pub config: RunConfig,
    pub medium: AtomicMedium,
    pub profile: ModeProfile,
    pub cavity: CavityParams,
}

impl Simulation {
    /// Validates the configuration and prepares the mode profile.
    /// `base` resolves relative profile paths.
    pub fn new(config: RunConfig, base: Option<&Path>) -> Result<Self, DriverError> {
        config.validate()?;
        let profile = config.profile.load(base)?;
        let medium = config.medium();
        let cavity = config.reference_cavity();
        Ok(Self { config, medium, profile, cavity })
    }

    fn detunings(&self, signal: f64) -> Detunings {
        Detunings { signal, control: self.config.rate(self.config.grids.control_detuning) }
    }

    /// Self-consistent solve; a non-converged iterate is kept and flagged.
    fn solve_state(&self, control_power: f64) -> Result<SelfConsistentFields, DriverError> {
        let settings = self.config.absorption_settings();
        match self_consistent_fields(
            &self.cavity,
            &self.profile,
            &self.medium,
            &settings,
            self.config.powers.signal_w,
            control_power,
            self.detunings(0.0),
        ) {
            Ok(f) => Ok(f),
            Err(AbsorptionError::NotConverged { last }) => Ok(*last),
            Err(e) => Err(e.into()),
        }
    }

    /// Control-on and control-off states at the reference coupling.
    pub fn states(&self) -> Result<(StateSummary, StateSummary), DriverError> {
        if let Some((on, off)) = self.config.cavity.atomic_loss {
            return Ok((self.fixed_state(self.config.rate(on), true), self.fixed_state(self.config.rate(off), false)));
        }
        let off = StateSummary::from_fields(&self.solve_state(0.0)?);
        let on = if self.config.powers.control_w == 0.0 {
            off.clone()
        } else {
            StateSummary::from_fields(&self.solve_state(self.config.powers.control_w)?)
        };
        Ok((on, off))
    }

    fn fixed_state(&self, kappa_e: f64, control_on: bool) -> StateSummary {
        let settings = self.config.absorption_settings();
        let control_w = if control_on { self.config.powers.control_w } else { 0.0 };
        let det = self.detunings(0.0);
        StateSummary {
            kappa_e_rad_s: kappa_e,
            alpha_bar_per_m: kappa_e / settings.light_speed(&self.profile),
            signal_energy_j: signal_energy(&self.cavity, self.config.powers.signal_w, kappa_e, det),
            control_energy_j: control_energy(&self.cavity, &self.profile, &settings, control_w, det),
            iterations: 0,
            converged: true,
        }
    }

    fn design(&self, on: &StateSummary, off: &StateSummary) -> SwitchDesign {
        SwitchDesign::new(&self.cavity, on.kappa_e_rad_s, off.kappa_e_rad_s)
    }

    /// Spectra for symmetric coupling `kappa`, on a grid wide enough to hold
    /// both switching bands.
    pub fn design_spectra(&self, design: &SwitchDesign, kappa: f64) -> (PortSpectra, PortSpectra, f64) {
        let (on, off) = design.cavities(kappa);
        let widest = [Port::Through, Port::Drop]
            .into_iter()
            .filter_map(|p| continuous_bandwidth(p, &on, &off).ok())
            .fold(0.0, f64::max);
        let half_span = self.config.rate(self.config.grids.spectrum_min_half_span).max(0.75 * widest);
        let grid = symmetric_grid(half_span, self.config.grids.spectrum_points);
        let (s_on, s_off) = spectrum(&on, &off, &grid);
        (s_on, s_off, half_span)
    }

    fn design_block(&self, design: &SwitchDesign, kappa: Result<f64, MetricsError>) -> (DesignBlock, Option<(PortSpectra, PortSpectra)>) {
        let kappa = match kappa {
            Ok(k) => k,
            Err(e) => return (DesignBlock::failed(e), None),
        };
        let (s_on, s_off, half_span) = self.design_spectra(design, kappa);
        match port_metrics(&s_on, &s_off) {
            Ok(report) => (
                DesignBlock {
                    coupling_rad_s: Some(kappa),
                    grid_half_span_rad_s: Some(half_span),
                    report: Some(report),
                    error: None,
                },
                Some((s_on, s_off)),
            ),
            Err(e) => (DesignBlock::failed(e), None),
        }
    }

    fn bracket(&self, design: &SwitchDesign) -> (f64, f64) {
        match self.config.cavity.coupling_bracket {
            Some((lo, hi)) => (self.config.rate(lo), self.config.rate(hi)),
            None => design.default_bracket(),
        }
    }

    /// Ratio-balancing optimizers run on the first sign change of a log scan
    /// so that a bracket partly outside the switching regime still works.
    fn optimize(&self, design: &SwitchDesign, port_balance: Balance) -> Result<f64, MetricsError> {
        let bracket = self.bracket(design);
        let found = match port_balance {
            Balance::Bandwidth => scan_for_bracket(|k| design.bandwidth_mismatch(k).ok(), bracket, SCAN_POINTS),
            Balance::Contrast => scan_for_bracket(|k| Some(design.contrast_mismatch(k)), bracket, SCAN_POINTS),
        };
        let Some(sub) = found else {
            return Err(MetricsError::NoRoot { lo: bracket.0, hi: bracket.1 });
        };
        match port_balance {
            Balance::Bandwidth => equalize_bandwidth(design, sub),
            Balance::Contrast => equalize_contrast(design, sub),
        }
    }

    /// Average absorption with the control on and off, weak probe, over the
    /// configured signal detuning grid.
    pub fn absorption_curves(&self, control_energy_j: f64) -> Result<Vec<[f64; 3]>, DriverError> {
        let settings = self.config.absorption_settings();
        let g = &self.config.grids;
        let grid = symmetric_grid(self.config.rate(g.absorption_half_span), g.absorption_points);
        let mut rows = Vec::with_capacity(grid.len());
        for d in grid {
            let det = self.detunings(d);
            let on = alpha_avg(&self.profile, &self.medium, &settings, 0.0, control_energy_j, det)?.alpha_bar;
            let off = alpha_avg(&self.profile, &self.medium, &settings, 0.0, 0.0, det)?.alpha_bar;
            rows.push([d, on, off]);
        }
        Ok(rows)
    }

    /// Loss pair and the metrics of the reference-coupling design.
    pub fn reference_summary(&self) -> Result<(StateSummary, StateSummary, DesignBlock), DriverError> {
        let (on, off) = self.states()?;
        let design = self.design(&on, &off);
        let (block, _) = self.design_block(&design, Ok(self.cavity.coupling_in));
        Ok((on, off, block))
    }
}

/// Log-spaced points used to locate a sign change before bisection. The
/// bandwidth balance can sit a few percent below the coupling at which the
/// drop band closes, so the scan must be finer than that.
const SCAN_POINTS: usize = 2000;

#[derive(Clone, Copy)]
enum Balance {
    Bandwidth,
    Contrast,
}

/// Outcome of `run`: the report and the files written.
pub struct RunOutcome {
    pub report: RunReport,
    pub files: Vec<PathBuf>,
}

/// Runs the full pipeline and writes the selected figures plus
/// `report.json` into `out_dir`.
pub fn run(sim: &Simulation, figures: &[Figure], out_dir: &Path) -> Result<RunOutcome, DriverError> {
    std::fs::create_dir_all(out_dir).map_err(|e| output_error(out_dir, e))?;
    let (on, off, reference_design) = sim.reference_summary()?;
    let design = sim.design(&on, &off);
    let (equal_bandwidth, bw_spectra) = sim.design_block(&design, sim.optimize(&design, Balance::Bandwidth));
    let (equal_contrast, ct_spectra) = sim.design_block(&design, sim.optimize(&design, Balance::Contrast));

    let mut files = Vec::new();
    if figures.contains(&Figure::Absorption) {
        let control = control_energy(
            &sim.cavity,
            &sim.profile,
            &sim.config.absorption_settings(),
            sim.config.powers.control_w,
            sim.detunings(0.0),
        );
        let rows = sim.absorption_curves(control)?;
        let path = out_dir.join(Figure::Absorption.file_name());
        write_absorption_csv(&path, &rows)?;
        files.push(path);
    }
    let spectra = [
        (Figure::EqualBandwidthThrough, &bw_spectra, Port::Through),
        (Figure::EqualBandwidthDrop, &bw_spectra, Port::Drop),
        (Figure::EqualContrastThrough, &ct_spectra, Port::Through),
        (Figure::EqualContrastDrop, &ct_spectra, Port::Drop),
    ];
    for (figure, pair, port) in spectra {
        if !figures.contains(&figure) {
            continue;
        }
        if let Some((s_on, s_off)) = pair {
            let path = out_dir.join(figure.file_name());
            write_spectrum_csv(&path, s_on, s_off, port)?;
            files.push(path);
        }
    }

    let converged = on.converged
        && off.converged
        && reference_design.converged()
        && equal_bandwidth.converged()
        && equal_contrast.converged();
    let report = RunReport {
        exterior_energy_fraction: exterior_energy_fraction(&sim.profile),
        reference_coupling_rad_s: sim.cavity.coupling_in,
        control_on: on,
        control_off: off,
        reference_design,
        equal_bandwidth,
        equal_contrast,
        converged,
    };
    let path = out_dir.join("report.json");
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    std::fs::write(&path, text + "\n").map_err(|e| output_error(&path, e))?;
    files.push(path);
    Ok(RunOutcome { report, files })
}

fn output_error(path: &Path, e: impl std::fmt::Display) -> DriverError {
    DriverError::Output { path: path.display().to_string(), message: e.to_string() }
}

/// Parameters that `sweep` can vary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParameter {
    Density,
    ControlPower,
    Coupling,
    DopplerWidth,
    EffectiveIndex,
    ExteriorFraction,
}

impl SweepParameter {
    pub const NAMES: [&'static str; 6] =
        ["density", "control_power", "coupling", "doppler_width", "n_eff", "exterior_fraction"];

    /// Sets the parameter on a copy of `config`. Values use config units.
    pub fn apply(self, config: &RunConfig, value: f64) -> Result<RunConfig, DriverError> {
        let mut c = config.clone();
        match self {
            SweepParameter::Density => c.medium.density_m3 = value,
            SweepParameter::ControlPower => c.powers.control_w = value,
            SweepParameter::Coupling => c.cavity.reference_coupling = value,
            SweepParameter::DopplerWidth => c.medium.doppler_width = value,
            SweepParameter::EffectiveIndex | SweepParameter::ExteriorFraction => {
                let ProfileSource::Analytic(spec) = &mut c.profile else {
                    return Err(DriverError::Config(ConfigError::Invalid(
                        "n_eff and exterior_fraction sweeps need an analytic profile".into(),
                    )));
                };
                if self == SweepParameter::EffectiveIndex {
                    spec.n_eff = value;
                } else {
                    spec.target_exterior_fraction = value;
                }
            }
        }
        Ok(c)
    }
}

impl FromStr for SweepParameter {
    type Err = DriverError;
    fn from_str(s: &str) -> Result<Self, DriverError> {
        Ok(match s {
            "density" | "N" => SweepParameter::Density,
            "control_power" | "P_c" => SweepParameter::ControlPower,
            "coupling" | "kappa" => SweepParameter::Coupling,
            "doppler_width" | "sigma_D" => SweepParameter::DopplerWidth,
            "n_eff" => SweepParameter::EffectiveIndex,
            "exterior_fraction" => SweepParameter::ExteriorFraction,
            _ => return Err(DriverError::UnknownParameter(s.to_string())),
        })
    }
}

/// One sweep value and the reference-coupling switch metrics it produces.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub control_on: StateSummary,
    pub control_off: StateSummary,
    pub design: DesignBlock,
}

impl SweepRow {
    pub fn converged(&self) -> bool {
        self.control_on.converged && self.control_off.converged && self.design.converged()
    }
}

/// Evaluates the reference-coupling design for each value and writes
/// `sweep.csv` (one row per value, header only for an empty list).
pub fn sweep(
    config: &RunConfig,
    base: Option<&Path>,
    parameter: SweepParameter,
    values: &[f64],
    out_dir: &Path,
) -> Result<(Vec<SweepRow>, PathBuf), DriverError> {
    config.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|e| output_error(out_dir, e))?;
    let mut rows = Vec::with_capacity(values.len());
    for &value in values {
        let sim = Simulation::new(parameter.apply(config, value)?, base)?;
        let (on, off, design) = sim.reference_summary()?;
        rows.push(SweepRow { value, control_on: on, control_off: off, design });
    }
    let path = out_dir.join("sweep.csv");
    write_sweep_csv(&path, &rows)?;
    Ok((rows, path))
}
