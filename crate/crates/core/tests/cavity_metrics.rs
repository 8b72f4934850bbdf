mod common;

use common::{intrinsic_rate, on_resonance, table_metrics, TWO_PI};
use proptest::prelude::*;
use zeno_switch::cavity::{
    amplitude_rate, port_amplitudes, spectrum, stored_energy, steady_amplitude, symmetric_grid, transmission,
    CavityParams,
};
use zeno_switch::metrics::{
    contrast_at, continuous_bandwidth, equalize_bandwidth, equalize_contrast, port_metrics, scan_for_bracket,
    MetricsError, Port, SwitchDesign, BANDWIDTH_MATCH_REL_TOL, CONTRAST_MATCH_TOL_DB,
};
use zeno_switch::Complex64;

const RESONANCE: f64 = TWO_PI * 299_792_458.0 / 780e-9;

fn cavity(intrinsic: f64, atomic: f64, coupling_in: f64, coupling_drop: f64) -> CavityParams {
    CavityParams { resonance: RESONANCE, intrinsic, coupling_in, coupling_drop, atomic }
}

/// Rates spanning kHz to THz, written in rad/s.
fn rate() -> impl Strategy<Value = f64> {
    (3.0f64..12.5).prop_map(|e| TWO_PI * 10f64.powf(e))
}

fn detuning() -> impl Strategy<Value = f64> {
    (-1.0f64..1.0, 3.0f64..12.5).prop_map(|(s, e)| s * TWO_PI * 10f64.powf(e))
}

fn fixed_loss_design() -> SwitchDesign {
    SwitchDesign { resonance: RESONANCE, intrinsic: intrinsic_rate(), kappa_e_on: TWO_PI * 44.43e6, kappa_e_off: TWO_PI * 850.10e9 }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn ports_never_exceed_input_power(k0 in rate(), ke in rate(), k1 in rate(), k2 in rate(), d in detuning()) {
        let c = cavity(k0, ke, k1, k2);
        let (t, dr) = transmission(&c, d);
        prop_assert!(t >= 0.0 && dr >= 0.0);
        prop_assert!(t + dr <= 1.0 + 1e-12, "T + D = {}", t + dr);
        // Missing power is absorbed: 4 κ1 (κ0 + κe) / |κ + 2iΔ|².
        let total = k0 + ke + k1 + k2;
        let absorbed = 4.0 * k1 * (k0 + ke) / (4.0 * d * d + total * total);
        prop_assert!((1.0 - t - dr - absorbed).abs() <= 1e-12);
    }

    #[test]
    fn lossless_ring_conserves_power(k1 in rate(), k2 in rate(), d in detuning()) {
        let (t, dr) = transmission(&cavity(0.0, 0.0, k1, k2), d);
        prop_assert!((t + dr - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn lossy_ring_drops_strictly_below_unity(k0 in rate(), k1 in rate(), k2 in rate()) {
        let (t, dr) = transmission(&cavity(k0, 0.0, k1, k2), 0.0);
        let absorbed = 4.0 * k1 * k0 / (k0 + k1 + k2).powi(2);
        prop_assume!(absorbed > 1e-10);
        prop_assert!(t + dr < 1.0);
    }

    #[test]
    fn transmission_matches_port_amplitudes(k0 in rate(), ke in rate(), k1 in rate(), k2 in rate(), d in detuning(),
                                            phase in 0.0f64..TWO_PI, power in 1e-18f64..1e-3) {
        let c = cavity(k0, ke, k1, k2);
        let s_in = Complex64::from_polar(power.sqrt(), phase);
        let (through, drop) = port_amplitudes(&c, d, s_in);
        let (t, dr) = transmission(&c, d);
        prop_assert!((through.norm_sqr() / power - t).abs() <= 1e-12);
        prop_assert!((drop.norm_sqr() / power - dr).abs() <= 1e-12);
    }

    #[test]
    fn steady_amplitude_is_stationary_and_balances_power(k0 in rate(), ke in rate(), k1 in rate(), k2 in rate(),
                                                          d in detuning(), power in 1e-18f64..1e-3) {
        let c = cavity(k0, ke, k1, k2);
        let s_in = Complex64::new(power.sqrt(), 0.0);
        let a = steady_amplitude(&c, d, s_in);
        let scale = c.total_rate().max(d.abs()) * a.norm() + k1.sqrt() * s_in.norm();
        prop_assert!(amplitude_rate(&c, d, a, s_in).norm() <= 1e-12 * scale);
        // Absorbed power equals dissipation of the stored energy.
        let (t, dr) = transmission(&c, d);
        let energy = stored_energy(&c, d, power);
        let lhs = power * (1.0 - t - dr);
        let rhs = (k0 + ke) * energy;
        prop_assert!((lhs - rhs).abs() <= 1e-10 * power);
    }

    #[test]
    fn spectra_are_even_in_detuning(k0 in rate(), ke in rate(), k1 in rate(), k2 in rate(), d in detuning()) {
        let c = cavity(k0, ke, k1, k2);
        let (tp, dp) = transmission(&c, d);
        let (tm, dm) = transmission(&c, -d);
        prop_assert_eq!(tp, tm);
        prop_assert_eq!(dp, dm);
    }

    #[test]
    fn resonant_through_rises_with_atomic_loss(k0 in rate(), extra in 0.0f64..10.0, ke in rate(), step in 1.01f64..100.0) {
        let k = k0 * (1.0 + extra);
        let (t_lo, d_lo) = transmission(&cavity(k0, ke, k, k), 0.0);
        let (t_hi, d_hi) = transmission(&cavity(k0, ke * step, k, k), 0.0);
        prop_assert!(t_hi > t_lo);
        prop_assert!(d_hi < d_lo);
    }

    #[test]
    fn resonant_drop_peaks_without_atoms(k0 in rate(), k in rate(), ke in rate()) {
        let (_, d0) = transmission(&cavity(k0, 0.0, k, k), 0.0);
        let (_, d) = transmission(&cavity(k0, ke, k, k), 0.0);
        prop_assert!(d0 > d);
    }

    #[test]
    fn resonant_transmission_matches_closed_form(k0 in rate(), ke in rate(), k in rate()) {
        let (t, d) = transmission(&cavity(k0, ke, k, k), 0.0);
        let (t_ref, d_ref) = on_resonance(k0, ke, k);
        prop_assert!((t - t_ref).abs() <= 1e-12);
        prop_assert!((d - d_ref).abs() <= 1e-12);
    }

    #[test]
    fn contrast_grows_with_off_state_loss(k in rate(), on in rate(), r in 1.5f64..1e3, step in 1.01f64..10.0) {
        let k0 = intrinsic_rate();
        let off = on * r;
        let at = |off: f64| {
            let on_c = cavity(k0, on, k, k);
            let off_c = cavity(k0, off, k, k);
            (contrast_at(Port::Through, &on_c, &off_c, 0.0), contrast_at(Port::Drop, &on_c, &off_c, 0.0))
        };
        let (t1, d1) = at(off);
        let (t2, d2) = at(off * step);
        prop_assert!(t2 > t1);
        prop_assert!(d2 > d1);
    }

    #[test]
    fn contrast_optimizer_meets_its_own_check(on in (5.0f64..8.0).prop_map(|e| TWO_PI * 10f64.powf(e)),
                                              ratio in (2.0f64..5.0).prop_map(|e| 10f64.powf(e))) {
        let design = SwitchDesign { resonance: RESONANCE, intrinsic: intrinsic_rate(), kappa_e_on: on, kappa_e_off: on * ratio };
        let kappa = equalize_contrast(&design, design.default_bracket()).expect("contrast balance exists");
        prop_assert!(design.contrast_mismatch(kappa).abs() <= CONTRAST_MATCH_TOL_DB);
    }
}

#[test]
fn library_reproduces_tabulated_metrics_at_reference_coupling() {
    let design = fixed_loss_design();
    let kappa = TWO_PI * 26.7e9;
    let (on, off) = design.cavities(kappa);
    let grid = symmetric_grid(TWO_PI * 100e9, 4001);
    let (s_on, s_off) = spectrum(&on, &off, &grid);
    let report = port_metrics(&s_on, &s_off).expect("grid has a centre");
    let oracle = table_metrics(design.intrinsic, design.kappa_e_on, design.kappa_e_off, kappa);
    let library = [report.through_loss_db, report.through_contrast_db, report.drop_loss_db, report.drop_contrast_db];
    for (l, o) in library.iter().zip(oracle) {
        assert!((l - o).abs() < 1e-9, "library {l} vs oracle {o}");
    }
}

#[test]
fn grid_and_continuous_bandwidths_agree() {
    let design = fixed_loss_design();
    let (on, off) = design.cavities(TWO_PI * 26.7e9);
    let grid = symmetric_grid(TWO_PI * 100e9, 20_001);
    let (s_on, s_off) = spectrum(&on, &off, &grid);
    let report = port_metrics(&s_on, &s_off).unwrap();
    for port in [Port::Through, Port::Drop] {
        let continuous = continuous_bandwidth(port, &on, &off).unwrap();
        let step = grid[1] - grid[0];
        assert!((report.bandwidth(port) - continuous).abs() < 0.05 * step, "{port}: {} vs {continuous}", report.bandwidth(port));
    }
}

#[test]
fn bandwidth_optimizer_matches_brute_force_scan() {
    let design = fixed_loss_design();
    let bracket = design.default_bracket();
    let n = 4000;
    let ratio = (bracket.1 / bracket.0).ln() / (n - 1) as f64;
    // Brute force: smallest |mismatch| relative to the wider band, among
    // couplings where both ports reach the threshold.
    let mut best = (0.0, f64::INFINITY);
    for i in 0..n {
        let k = bracket.0 * (ratio * i as f64).exp();
        let (on, off) = design.cavities(k);
        let (Ok(bt), Ok(bd)) = (continuous_bandwidth(Port::Through, &on, &off), continuous_bandwidth(Port::Drop, &on, &off))
        else {
            continue;
        };
        let rel = (bt - bd).abs() / bt.max(bd);
        if rel < best.1 {
            best = (k, rel);
        }
    }
    let window = scan_for_bracket(|k| design.bandwidth_mismatch(k).ok(), bracket, 2000).expect("sign change");
    let kappa = equalize_bandwidth(&design, window).expect("bandwidth balance");
    assert!((kappa / best.0 - 1.0).abs() < 2.0 * ratio, "optimizer {kappa} vs scan {}", best.0);
    let (on, off) = design.cavities(kappa);
    let bt = continuous_bandwidth(Port::Through, &on, &off).unwrap();
    let bd = continuous_bandwidth(Port::Drop, &on, &off).unwrap();
    assert!((bt - bd).abs() <= BANDWIDTH_MATCH_REL_TOL * bt.max(bd));
}

#[test]
fn bandwidth_optimizer_rejects_brackets_without_threshold() {
    let design = fixed_loss_design();
    let err = equalize_bandwidth(&design, design.default_bracket()).unwrap_err();
    assert!(matches!(err, MetricsError::ThresholdNeverReached { .. }), "{err:?}");
}

#[test]
fn optimizers_reject_non_routing_designs() {
    let mut design = fixed_loss_design();
    std::mem::swap(&mut design.kappa_e_on, &mut design.kappa_e_off);
    assert!(matches!(equalize_contrast(&design, (1e6, 1e12)), Err(MetricsError::InvalidInput(_))));
    assert!(matches!(equalize_bandwidth(&design, (1e6, 1e12)), Err(MetricsError::InvalidInput(_))));
    let design = fixed_loss_design();
    assert!(matches!(equalize_contrast(&design, (1e12, 1e6)), Err(MetricsError::InvalidInput(_))));
}
