mod common;

use approx::assert_relative_eq;
use eternal_profile::model::{exponents_from_beta, interface_case, make_params, rescale_profile, InterfaceCase};
use eternal_profile::Error;

#[test]
fn sigma_is_derived_from_m_and_q() {
    for &(m, q, sigma) in &[(2.0, 0.5, 1.0), (1.5, 0.5, 2.0), (3.0, 0.25, 0.75), (1.2, 0.3, 7.0)] {
        let p = make_params(m, q, 1).unwrap();
        assert_relative_eq!(p.sigma, sigma, max_relative = 1e-14);
    }
}

#[test]
fn rejects_out_of_range_exponents() {
    for &(m, q, n) in &[
        (1.0, 0.5, 1),
        (0.5, 0.5, 1),
        (2.0, 0.0, 1),
        (2.0, 1.0, 1),
        (2.0, -0.1, 1),
        (f64::NAN, 0.5, 1),
        (2.0, f64::INFINITY, 1),
        (2.0, 0.5, 0),
    ] {
        assert!(matches!(make_params(m, q, n), Err(Error::Domain(_))), "({m}, {q}, {n})");
    }
}

#[test]
fn case_follows_sign_of_m_plus_q_minus_two() {
    let case = |m, q| interface_case(&make_params(m, q, 1).unwrap());
    assert_eq!(case(2.0, 0.5), InterfaceCase::SuperCritical);
    assert_eq!(case(1.5, 0.5), InterfaceCase::Critical);
    assert_eq!(case(1.2, 0.8), InterfaceCase::Critical);
    assert_eq!(case(1.2, 0.3), InterfaceCase::SubCritical);
    // A critical pair that is not exact in binary still lands on the exact σ.
    let p = make_params(1.7, 0.3, 1).unwrap();
    assert_eq!(p.case(), InterfaceCase::Critical);
    assert_eq!(p.sigma, 2.0);
}

#[test]
fn alpha_is_two_beta_over_m_minus_one() {
    let p = make_params(3.0, 0.5, 2).unwrap();
    let e = exponents_from_beta(&p, 0.7).unwrap();
    assert_relative_eq!(e.alpha, 0.7, max_relative = 1e-15);
    assert!(exponents_from_beta(&p, 0.0).is_err());
    assert!(exponents_from_beta(&p, -1.0).is_err());
    assert!(exponents_from_beta(&p, f64::NAN).is_err());
}

#[test]
fn rescaling_stretches_support_and_sets_amplitude() {
    let base = common::exact_critical_profile(400);
    let x0 = base.xi0.unwrap();
    for a in [0.5, 2.0, 4.0] {
        let g = rescale_profile(&base, a).unwrap();
        let stretch = a.powf(0.25);
        assert_eq!(g.amplitude, a);
        assert_relative_eq!(g.xi0.unwrap(), stretch * x0, max_relative = 1e-15);
        // g(ξ) = a f(ξ / stretch), checked against the formula.
        for xi in [0.3, 1.0, 2.0] {
            let want = a * common::exact_critical_f(xi / stretch);
            assert_relative_eq!(g.f_at(xi * 1.0).unwrap(), want, max_relative = 1e-8);
        }
        // The last stored point is the stretched last point.
        assert_relative_eq!(
            *g.grid.last().unwrap(),
            stretch * *base.grid.last().unwrap(),
            max_relative = 1e-15
        );
    }
}

#[test]
fn rescaling_by_one_is_the_identity() {
    let base = common::exact_critical_profile(100);
    assert_eq!(rescale_profile(&base, 1.0).unwrap(), base);
    assert!(rescale_profile(&base, 0.0).is_err());
    assert!(rescale_profile(&base, -2.0).is_err());
}
