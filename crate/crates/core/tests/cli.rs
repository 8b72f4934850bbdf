mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use common::{intrinsic_rate, TWO_PI};
use serde_json::{json, Value};

const BIN: &str = env!("CARGO_BIN_EXE_simulate");

/// Small profile and grids so each run takes seconds.
fn coarse_config(atomic_loss: Option<[f64; 2]>) -> Value {
    json!({
        "profile": { "analytic": {
            "radius_m": 1.2041742571804347e-5,
            "thickness_m": 2.5e-7,
            "wavelength_m": 7.78e-7,
            "n_eff": 2.0,
            "target_exterior_fraction": 0.3,
            "core_width_m": null,
            "radial_nodes": 12,
            "axial_nodes": 12,
            "exterior_decay_lengths": 3.0,
            "mode_area_m2": 8.2e-14
        }},
        "cavity": { "atomic_loss": atomic_loss },
        "grids": { "absorption_points": 21, "spectrum_points": 801 }
    })
}

fn write_config(dir: &Path, config: &Value) -> PathBuf {
    let path = dir.join("run.json");
    fs::write(&path, serde_json::to_string_pretty(config).unwrap()).unwrap();
    path
}

fn simulate(config: &Path, out: &Path, args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.arg("--config").arg(config).arg("--out").arg(out).args(args);
    for (k, _) in std::env::vars().filter(|(k, _)| k.starts_with("ZENO_")) {
        cmd.env_remove(k);
    }
    cmd.envs(env.iter().copied());
    cmd.output().expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read_table(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut reader = csv::Reader::from_path(path).unwrap();
    let header = reader.headers().unwrap().iter().map(str::to_string).collect();
    let rows = reader.records().map(|r| r.unwrap().iter().map(str::to_string).collect()).collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let i = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("missing column {name}"));
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[test]
fn fixed_loss_run_writes_consistent_figures() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &coarse_config(Some([44.43e6, 850.10e9])));
    let out = dir.path().join("out");
    let result = simulate(&config, &out, &[], &[]);
    assert_eq!(result.status.code(), Some(0), "{}", stderr(&result));
    for name in ["fig4.csv", "fig5a.csv", "fig5b.csv", "fig5c.csv", "fig5d.csv", "report.json"] {
        assert!(out.join(name).is_file(), "{name} missing");
    }

    let report: Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["converged"], true);
    let design = &report["equal_contrast"]["report"];

    // Centre rows of the through and drop spectra at the equal-contrast point.
    let centre = |file: &str| {
        let (h, rows) = read_table(&out.join(file));
        let detuning = column(&h, &rows, "signal_detuning_rad_s");
        let i = detuning.iter().position(|d| *d == 0.0).expect("grid contains zero");
        (column(&h, &rows, "transmission_on")[i], column(&h, &rows, "transmission_off")[i])
    };
    let (t_on, t_off) = centre("fig5c.csv");
    let (d_on, d_off) = centre("fig5d.csv");
    let checks = [
        ("through_loss_db", -db(t_off)),
        ("through_contrast_db", db(t_off / t_on)),
        ("drop_loss_db", -db(d_on)),
        ("drop_contrast_db", db(d_on / d_off)),
    ];
    for (key, from_csv) in checks {
        let reported = design[key].as_f64().unwrap();
        assert!((reported - from_csv).abs() < 1e-9, "{key}: report {reported} vs csv {from_csv}");
    }
    let kappa_e_on = report["control_on"]["kappa_e_rad_s"].as_f64().unwrap();
    assert!((kappa_e_on / (TWO_PI * 44.43e6) - 1.0).abs() < 1e-12);

    // Closed-form on-resonance transmission from the reported coupling.
    let kappa = report["equal_contrast"]["coupling_rad_s"].as_f64().unwrap();
    let (t_ref, _) = common::on_resonance(intrinsic_rate(), TWO_PI * 850.10e9, kappa);
    assert!((t_off - t_ref).abs() < 1e-9 * t_ref);
}

#[test]
fn invalid_config_values_exit_with_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = coarse_config(None);
    config["medium"] = json!({ "density_m3": -1.0 });
    let path = write_config(dir.path(), &config);
    let result = simulate(&path, &dir.path().join("out"), &[], &[]);
    assert_eq!(result.status.code(), Some(2));
    assert!(stderr(&result).contains("density"), "{}", stderr(&result));
    assert!(!dir.path().join("out").join("report.json").exists());
}

#[test]
fn malformed_config_reports_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    fs::write(&path, "{\n  \"cavity\": {\n    \"q0\": 3.6e6,,\n  }\n}\n").unwrap();
    let result = simulate(&path, &dir.path().join("out"), &[], &[]);
    assert_eq!(result.status.code(), Some(2));
    assert!(stderr(&result).contains("line 3"), "{}", stderr(&result));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), &json!({ "cavity": { "q_zero": 1.0 } }));
    let result = simulate(&path, &dir.path().join("out"), &[], &[]);
    assert_eq!(result.status.code(), Some(2));
    assert!(stderr(&result).contains("q_zero"), "{}", stderr(&result));
}

#[test]
fn unknown_sweep_parameter_exits_with_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), &coarse_config(None));
    let result = simulate(&path, &dir.path().join("out"), &["--sweep", "temperature", "1,2"], &[]);
    assert_eq!(result.status.code(), Some(2));
    assert!(stderr(&result).contains("temperature"), "{}", stderr(&result));
}

#[test]
fn empty_sweep_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), &coarse_config(None));
    let out = dir.path().join("out");
    let result = simulate(&path, &out, &["--sweep", "density", ""], &[]);
    assert_eq!(result.status.code(), Some(0), "{}", stderr(&result));
    let (header, rows) = read_table(&out.join("sweep.csv"));
    assert_eq!(header.first().map(String::as_str), Some("value"));
    assert!(rows.is_empty());
}

#[test]
fn control_power_sweep_opens_the_switch() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), &coarse_config(None));
    let out = dir.path().join("out");
    let result = simulate(&path, &out, &["--sweep", "P_c", "0,2e-6"], &[]);
    assert!(out.join("sweep.csv").is_file(), "{}", stderr(&result));
    let (h, rows) = read_table(&out.join("sweep.csv"));
    assert_eq!(rows.len(), 2);
    let on = column(&h, &rows, "kappa_e_on_rad_s");
    let off = column(&h, &rows, "kappa_e_off_rad_s");
    let contrast = column(&h, &rows, "through_contrast_db");
    // Without control light both states are the same medium.
    assert!((on[0] / off[0] - 1.0).abs() < 1e-9, "{} vs {}", on[0], off[0]);
    assert!(contrast[0].abs() < 1e-6);
    assert!(on[1] < 0.1 * off[1]);
    assert!(contrast[1] > 5.0, "contrast {}", contrast[1]);
}

#[test]
fn off_state_loss_scales_with_density() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), &coarse_config(None));
    let out = dir.path().join("out");
    let densities = [2.5e18, 5e18, 1e19];
    let list = densities.map(|n| n.to_string()).join(",");
    simulate(&path, &out, &["--sweep", "N", &list], &[]);
    let (h, rows) = read_table(&out.join("sweep.csv"));
    let values = column(&h, &rows, "value");
    let off = column(&h, &rows, "kappa_e_off_rad_s");
    assert_eq!(values, densities);
    for (n, k) in densities.iter().zip(&off) {
        let linear = off[1] * n / densities[1];
        assert!((k / linear - 1.0).abs() < 0.01, "N = {n}: {k} vs {linear}");
    }
}

#[test]
fn environment_overrides_config_values() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), &coarse_config(None));
    let out = dir.path().join("out");
    let result = simulate(&path, &out, &["--figure", "fig5c"], &[("ZENO_CAVITY__ATOMIC_LOSS", "[44.43e6, 850.10e9]")]);
    assert_eq!(result.status.code(), Some(0), "{}", stderr(&result));
    assert!(out.join("fig5c.csv").is_file());
    assert!(!out.join("fig4.csv").exists());
    let report: Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let kappa_e_off = report["control_off"]["kappa_e_rad_s"].as_f64().unwrap();
    assert!((kappa_e_off / (TWO_PI * 850.10e9) - 1.0).abs() < 1e-12);

    let bad = simulate(&path, &out, &[], &[("ZENO_CAVITY__Q0", "\"high\"")]);
    assert_eq!(bad.status.code(), Some(2));
}
