//! CSV writers. Floats are written with 17 significant digits so values
//! round-trip exactly.

use std::path::Path;

use crate::cavity::PortSpectra;
use crate::metrics::{Port, SwitchReport};
use crate::units::to_hz;

use super::{DriverError, SweepRow};

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_rows<I>(path: &Path, header: &[&str], rows: I) -> Result<(), DriverError>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let fail = |e: &dyn std::fmt::Display| DriverError::Output { path: path.display().to_string(), message: e.to_string() };
    let mut w = csv::Writer::from_path(path).map_err(|e| fail(&e))?;
    w.write_record(header).map_err(|e| fail(&e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| fail(&e))?;
    }
    w.flush().map_err(|e| fail(&e))
}

/// Rows of `[signal detuning, ᾱ on, ᾱ off]`.
pub fn write_absorption_csv(path: &Path, rows: &[[f64; 3]]) -> Result<(), DriverError> {
    write_rows(
        path,
        &["signal_detuning_rad_s", "signal_detuning_hz", "alpha_on_per_m", "alpha_off_per_m"],
        rows.iter().map(|[d, on, off]| vec![num(*d), num(to_hz(*d)), num(*on), num(*off)]),
    )
}

/// One port's transmission in both control states.
pub fn write_spectrum_csv(path: &Path, on: &PortSpectra, off: &PortSpectra, port: Port) -> Result<(), DriverError> {
    let pick = |s: &PortSpectra| match port {
        Port::Through => s.through.clone(),
        Port::Drop => s.drop.clone(),
    };
    let (a, b) = (pick(on), pick(off));
    write_rows(
        path,
        &["signal_detuning_rad_s", "signal_detuning_hz", "transmission_on", "transmission_off"],
        on.detunings.iter().zip(a.iter().zip(&b)).map(|(d, (t_on, t_off))| {
            vec![num(*d), num(to_hz(*d)), num(*t_on), num(*t_off)]
        }),
    )
}

pub const SWEEP_COLUMNS: [&str; 24] = [
    "value",
    "kappa_e_on_rad_s",
    "kappa_e_off_rad_s",
    "on_iterations",
    "off_iterations",
    "converged",
    "kappa_in_rad_s",
    "kappa_drop_rad_s",
    "through_loss_db",
    "through_contrast_db",
    "drop_loss_db",
    "drop_contrast_db",
    "through_bandwidth_rad_s",
    "through_bandwidth_hz",
    "drop_bandwidth_rad_s",
    "drop_bandwidth_hz",
    "through_threshold_reached",
    "drop_threshold_reached",
    "through_clipped",
    "drop_clipped",
    "grid_half_span_rad_s",
    "alpha_bar_on_per_m",
    "alpha_bar_off_per_m",
    "error",
];

fn report_fields(r: &SwitchReport) -> Vec<String> {
    vec![
        num(r.kappa_in_rad_s),
        num(r.kappa_drop_rad_s),
        num(r.through_loss_db),
        num(r.through_contrast_db),
        num(r.drop_loss_db),
        num(r.drop_contrast_db),
        num(r.through_bandwidth_rad_s),
        num(r.through_bandwidth_hz),
        num(r.drop_bandwidth_rad_s),
        num(r.drop_bandwidth_hz),
        r.through_threshold_reached.to_string(),
        r.drop_threshold_reached.to_string(),
        r.through_clipped.to_string(),
        r.drop_clipped.to_string(),
    ]
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<(), DriverError> {
    write_rows(
        path,
        &SWEEP_COLUMNS,
        rows.iter().map(|row| {
            let mut out = vec![
                num(row.value),
                num(row.control_on.kappa_e_rad_s),
                num(row.control_off.kappa_e_rad_s),
                row.control_on.iterations.to_string(),
                row.control_off.iterations.to_string(),
                row.converged().to_string(),
            ];
            match &row.design.report {
                Some(r) => out.extend(report_fields(r)),
                None => out.extend(std::iter::repeat(String::new()).take(14)),
            }
            out.push(row.design.grid_half_span_rad_s.map(num).unwrap_or_default());
            out.push(num(row.control_on.alpha_bar_per_m));
            out.push(num(row.control_off.alpha_bar_per_m));
            out.push(row.design.error.clone().unwrap_or_default());
            out
        }),
    )
}
