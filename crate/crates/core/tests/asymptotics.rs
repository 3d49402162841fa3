mod common;

use approx::assert_relative_eq;
use eternal_profile::asymptotics::{
    critical_amplitude_residual, default_gap_window, extrapolate_xi0, fit_interface_gaps, k1, predict_expansion,
    third_order_exponent, upper_bounds_check, MIN_FIT_POINTS,
};
use eternal_profile::model::{exponents_from_beta, make_params, InterfaceCase};
use eternal_profile::shooting::{shoot, ShootingOptions};
use eternal_profile::Error;

#[test]
fn exponent_by_case() {
    let cases = [
        (2.0, 0.5, InterfaceCase::SuperCritical, 2.0),
        (3.0, 0.75, InterfaceCase::SuperCritical, 4.0),
        (1.5, 0.5, InterfaceCase::Critical, 2.0),
        (1.2, 0.3, InterfaceCase::SubCritical, 2.0 / 0.9),
    ];
    for (m, q, case, theta) in cases {
        let p = make_params(m, q, 1).unwrap();
        let e = exponents_from_beta(&p, 0.4).unwrap();
        let ex = predict_expansion(&p, &e, 1.7);
        assert_eq!(ex.case, case);
        assert_relative_eq!(ex.theta, theta, max_relative = 1e-14);
        assert_eq!(ex.second_order_coeff.is_some(), case == InterfaceCase::SubCritical);
    }
}

#[test]
fn closed_form_critical_amplitude() {
    // (1 - ξ²/6)² = (s (2ξ₀ - s) / 6)²  →  A = (2ξ₀/6)² = 2/3 at ξ₀ = √6.
    let p = make_params(1.5, 0.5, 2).unwrap();
    let e = exponents_from_beta(&p, 0.5).unwrap();
    let ex = predict_expansion(&p, &e, 6f64.sqrt());
    assert_relative_eq!(ex.amplitude, 2.0 / 3.0, max_relative = 1e-13);
    assert!(critical_amplitude_residual(&p, &e, 6f64.sqrt()).unwrap() < 1e-12);
    let sub = make_params(1.2, 0.3, 1).unwrap();
    assert_eq!(critical_amplitude_residual(&sub, &e, 1.0), None);
}

#[test]
fn sub_critical_amplitude_is_k1_times_power_of_xi0() {
    let p = make_params(1.2, 0.3, 1).unwrap();
    let e = exponents_from_beta(&p, 0.2).unwrap();
    let x0 = 1.3;
    let ex = predict_expansion(&p, &e, x0);
    assert_relative_eq!(ex.amplitude, k1(&p) * x0.powf(p.sigma / (p.m - p.q)), max_relative = 1e-14);
    assert!(third_order_exponent(&p) > ex.second_order_exponent.unwrap());
}

#[test]
fn fit_recovers_an_exact_power_law() {
    let p = make_params(1.2, 0.3, 1).unwrap();
    let (a, theta) = (0.37, 2.0 / 0.9);
    let sol = common::synthetic_profile(p, 0.2, 1.5, 3000, 1e-9, |_, s| {
        let f: f64 = a * s.powf(theta);
        let df = -a * theta * s.powf(theta - 1.0);
        (f.powf(p.m), p.m * f.powf(p.m - 1.0) * df)
    });
    let fit = fit_interface_gaps(&sol, (1e-8, 1e-3), false).unwrap();
    assert_relative_eq!(fit.theta_hat, theta, max_relative = 1e-9);
    assert!(fit.points >= MIN_FIT_POINTS);
    assert!(fit.residual < 1e-9);
}

#[test]
fn tiny_window_is_an_error() {
    let sol = common::exact_critical_profile(200);
    match fit_interface_gaps(&sol, (1e-5, 1.01e-5), false) {
        Err(Error::Window { needed, .. }) => assert_eq!(needed, MIN_FIT_POINTS),
        other => panic!("expected a window error, got {other:?}"),
    }
}

#[test]
fn default_window_scales_with_smallest_gap() {
    let sol = common::exact_critical_profile(2000);
    let (lo, hi) = default_gap_window(&sol).unwrap();
    assert_relative_eq!(lo, 3e-6, max_relative = 1e-12);
    assert!(hi <= 2e-3 * sol.xi0.unwrap() && hi <= 3e-4 * 1.000001);
}

#[test]
fn fitted_law_matches_prediction_on_shot_profiles() {
    for &(m, q, n) in &common::CASES {
        let p = make_params(m, q, n).unwrap();
        let sol = shoot(&p, &ShootingOptions::default()).unwrap().final_profile;
        let x0 = sol.xi0.unwrap();
        let ex = predict_expansion(&p, &sol.exps, x0);
        let fit = fit_interface_gaps(&sol, default_gap_window(&sol).unwrap(), ex.case == InterfaceCase::SubCritical)
            .unwrap();
        assert!((fit.theta_hat / ex.theta - 1.0).abs() < 0.02, "({m},{q},{n})");
        assert!((fit.amplitude_hat / ex.amplitude - 1.0).abs() < 0.05, "({m},{q},{n})");
        assert!((extrapolate_xi0(&sol, &ex) / x0 - 1.0).abs() < 1e-6);
        let b = upper_bounds_check(&sol).unwrap();
        assert!(b.points > 0 && b.slope_bound_holds && b.value_bound_holds, "({m},{q},{n}): {b:?}");
    }
}
