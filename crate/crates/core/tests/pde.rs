use std::f64::consts::PI;

use proptest::prelude::*;
use usv_auv_core::ocean::{analytic_eta, step_wave, WaveConfig, WaveField};
use usv_auv_core::Point2;

const BASIN: f64 = 200.0;

/// Table depth and amplitude with ω tuned to the basin's fundamental mode.
fn basin_mode(dx: f64) -> WaveConfig {
    let base = WaveConfig::default();
    WaveConfig {
        dx,
        omega: PI * (base.gravity * base.depth).sqrt() / BASIN,
        offshore_length: 0.0,
        ..base
    }
}

/// Relative L2 error of the numerical standing wave against the closed form after
/// `periods` oscillations, normalised by the initial profile.
fn standing_wave_error(dx: f64, periods: f64) -> f64 {
    let cfg = basin_mode(dx);
    let n = (BASIN / dx).round() as usize;
    let mut field = WaveField::at_rest(n, 4, dx, Point2::new(0.5 * dx, 0.5 * dx))
        .with_elevation(|p| analytic_eta(&cfg, p.x, 0.0).unwrap());
    let t_end = periods * 2.0 * PI / cfg.omega;
    step_wave(&mut field, &cfg, t_end).unwrap();
    let (mut err, mut norm) = (0.0, 0.0);
    for i in 0..field.nx {
        let x = field.cell_center(i, 0).x;
        let exact = analytic_eta(&cfg, x, field.t).unwrap();
        let init = analytic_eta(&cfg, x, 0.0).unwrap();
        for j in 0..field.ny {
            err += (field.eta[[i, j]] - exact).powi(2);
            norm += init * init;
        }
    }
    (err / norm).sqrt()
}

#[test]
fn standing_wave_converges_at_second_order() {
    let errors: Vec<f64> = [8.0, 4.0, 2.0, 1.0].iter().map(|&dx| standing_wave_error(dx, 1.25)).collect();
    for w in errors.windows(2) {
        assert!(w[0] / w[1] >= 3.0, "errors {errors:?}");
    }
    assert!(errors[3] < 1e-3, "errors {errors:?}");
}

#[test]
fn ten_thousand_substeps_stay_finite_and_bounded() {
    let cfg = WaveConfig::default();
    let mut field = WaveField::at_rest(50, 50, cfg.dx, Point2::default())
        .with_elevation(|p| 0.5 * (-((p.x - 60.0).powi(2) + (p.y - 90.0).powi(2)) / 200.0).exp());
    let v0 = field.volume();
    let peak = field.max_abs_eta();
    step_wave(&mut field, &cfg, 10_000.0 * cfg.max_substep()).unwrap();
    assert!(field.is_finite());
    assert!(field.max_abs_eta() <= 2.0 * peak);
    assert!((field.volume() - v0).abs() <= 1e-9 * v0.abs());
}

#[test]
fn flat_rest_state_is_exact_fixed_point() {
    let cfg = WaveConfig::default();
    let mut field = WaveField::at_rest(30, 20, cfg.dx, Point2::default());
    let before = field.clone();
    step_wave(&mut field, &cfg, 500.0).unwrap();
    assert_eq!(field.eta, before.eta);
    assert_eq!(field.u, before.u);
    assert_eq!(field.v, before.v);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn volume_is_conserved_for_any_bump(cx in 0.0..100.0_f64, cy in 0.0..100.0_f64, amp in -3.0..3.0_f64, dt in 0.1..20.0_f64) {
        let cfg = WaveConfig::default();
        let mut field = WaveField::at_rest(26, 26, cfg.dx, Point2::default())
            .with_elevation(|p| 1.0 + amp * (-((p.x - cx).powi(2) + (p.y - cy).powi(2)) / 150.0).exp());
        let v0 = field.volume();
        step_wave(&mut field, &cfg, dt).unwrap();
        prop_assert!((field.volume() - v0).abs() <= 1e-9 * v0.abs());
        prop_assert!(field.is_finite());
    }
}
