mod common;

use eternal_profile::integrator::{launch_curvature, measure_launch_curvature, IntegratorOptions};
use eternal_profile::model::{exponents_from_beta, make_params, rescale_profile, InterfaceCase};
use eternal_profile::pde_verify::eval_solution;
use eternal_profile::phasespace::{equilibrium_offset, linearize_at_origin, vector_field, vector_field_xyz};
use proptest::prelude::*;

fn subcritical() -> impl Strategy<Value = (f64, f64, u32)> {
    (1.01f64..1.95, 0.02f64..0.98, 1u32..=5).prop_map(|(m, t, n)| (m, t * (2.0 - m), n))
}

proptest! {
    #[test]
    fn sigma_and_case_are_consistent(m in 1.01f64..6.0, q in 0.01f64..0.99, n in 1u32..6) {
        let p = make_params(m, q, n).unwrap();
        prop_assert!(p.sigma > 0.0);
        prop_assert!((p.sigma * (m - 1.0) - 2.0 * (1.0 - q)).abs() < 1e-12);
        let case = p.case();
        if m + q < 2.0 - 1e-9 {
            prop_assert_eq!(case, InterfaceCase::SubCritical);
            // Sub-critical means σ > 2.
            prop_assert!(p.sigma > 2.0);
        } else if m + q > 2.0 + 1e-9 {
            prop_assert_eq!(case, InterfaceCase::SuperCritical);
            prop_assert!(p.sigma < 2.0);
        }
    }

    #[test]
    fn closed_form_eigenpairs_always_satisfy_the_linear_system((m, q, n) in subcritical()) {
        let p = make_params(m, q, n).unwrap();
        let lin = linearize_at_origin(&p).unwrap();
        prop_assert!(lin.eigen_residual() < 1e-12);
        // Two stable directions and one unstable one.
        let neg = lin.eigenvalues.iter().filter(|&&l| l < 0.0).count();
        prop_assert_eq!(neg, 2);
    }

    #[test]
    fn translation_of_the_field(
        (m, q, n) in subcritical(),
        x in -1.0f64..1.0, w in -1.0f64..1.0, z in -1.0f64..1.0,
    ) {
        let p = make_params(m, q, n).unwrap();
        let a = vector_field([x, w, z], &p);
        let b = vector_field_xyz([x, w - equilibrium_offset(&p), z], &p);
        for k in 0..3 {
            prop_assert!((a[k] - b[k]).abs() <= 1e-12 * (1.0 + b[k].abs()));
        }
    }

    #[test]
    fn rescaling_composes(a in 0.2f64..5.0, b in 0.2f64..5.0) {
        let base = common::exact_critical_profile(300);
        let ab = rescale_profile(&rescale_profile(&base, a).unwrap(), b).unwrap();
        let direct = rescale_profile(&base, a * b).unwrap();
        prop_assert!((ab.xi0.unwrap() / direct.xi0.unwrap() - 1.0).abs() < 1e-13);
        prop_assert!((ab.amplitude / direct.amplitude - 1.0).abs() < 1e-13);
        for xi in [0.1, 0.7, 1.5] {
            let (u, v) = (ab.f_at(xi).unwrap(), direct.f_at(xi).unwrap());
            prop_assert!((u - v).abs() <= 1e-10 * (1.0 + v));
        }
    }

    #[test]
    fn solution_is_nonnegative_and_bounded_by_peak(t in -2.0f64..2.0, r in 0.0f64..10.0) {
        let sol = common::exact_critical_profile(300);
        let u = eval_solution(&sol, t, r);
        prop_assert!(u >= 0.0);
        prop_assert!(u <= (-sol.exps.alpha * t).exp() * (1.0 + 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn launch_curvature_is_measured_to_one_part_in_a_million(
        m in 1.1f64..4.0, q in 0.05f64..0.95, n in 1u32..=4, log_beta in -1.5f64..1.0,
    ) {
        let p = make_params(m, q, n).unwrap();
        let e = exponents_from_beta(&p, 10f64.powf(log_beta)).unwrap();
        let c = measure_launch_curvature(&p, &e, &IntegratorOptions::default(), 1e-3);
        let want = launch_curvature(&p, &e);
        prop_assert!((c / want - 1.0).abs() <= 1e-6, "measured {} vs {}", c, want);
    }
}
