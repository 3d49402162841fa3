mod common;

use approx::assert_relative_eq;
use eternal_profile::integrator::{Classification, IntegratorOptions};
use eternal_profile::model::make_params;
use eternal_profile::shooting::{
    bisect_beta, bracket_beta, monotonicity_check, probe_beta, shoot, CompletionOptions, ShootingOptions,
};
use eternal_profile::model::InterfaceCase;
use eternal_profile::Error;

#[test]
fn finds_the_closed_form_critical_rate() {
    let p = make_params(1.5, 0.5, 2).unwrap();
    let res = shoot(&p, &ShootingOptions::default()).unwrap();
    assert_relative_eq!(res.beta_star, 0.5, max_relative = 1e-8);
    assert_relative_eq!(res.alpha_star, 2.0, max_relative = 1e-8);
    assert_relative_eq!(res.final_profile.xi0.unwrap(), 6f64.sqrt(), max_relative = 1e-7);
    // The completed profile matches the formula everywhere, interface included.
    let sol = &res.final_profile;
    for i in (0..sol.len()).step_by(11) {
        let want = common::exact_critical_f(sol.grid[i]);
        assert!((sol.f(i) - want).abs() <= 1e-6, "xi = {}", sol.grid[i]);
    }
}

#[test]
fn bracket_straddles_the_target() {
    let p = make_params(2.0, 0.5, 1).unwrap();
    let opts = ShootingOptions::default();
    let (lo, hi) = bracket_beta(&p, &opts).unwrap();
    assert_eq!(hi, 2.0 * lo);
    let (_, s_lo) = probe_beta(&p, lo, &opts).unwrap();
    let (_, s_hi) = probe_beta(&p, hi, &opts).unwrap();
    assert_ne!(s_lo, s_hi);
}

#[test]
fn bisection_meets_width_and_is_deterministic() {
    let p = make_params(2.0, 0.5, 1).unwrap();
    let opts = ShootingOptions::default();
    let a = bisect_beta(&p, (0.25, 1.0), &opts).unwrap();
    let b = bisect_beta(&p, (0.25, 1.0), &opts).unwrap();
    assert!(a.bracket_hi - a.bracket_lo <= opts.beta_tol * a.bracket_hi);
    assert_eq!(a.history, b.history);
    assert_eq!(a.beta_star.to_bits(), b.beta_star.to_bits());
    // Contacts only above, turns only below.
    for h in &a.history {
        if h.contact {
            assert!(h.beta >= a.bracket_hi);
        } else {
            assert!(h.beta <= a.bracket_lo);
        }
    }
}

#[test]
fn invalid_bracket_is_rejected() {
    let p = make_params(2.0, 0.5, 1).unwrap();
    let opts = ShootingOptions::default();
    assert!(matches!(bisect_beta(&p, (1.0, 0.5), &opts), Err(Error::Domain(_))));
    assert!(matches!(bisect_beta(&p, (0.0, 0.5), &opts), Err(Error::Domain(_))));
}

#[test]
fn completed_profiles_touch_down_tangentially() {
    for &(m, q, n) in &common::CASES {
        let p = make_params(m, q, n).unwrap();
        let res = shoot(&p, &ShootingOptions::default()).unwrap();
        let sol = &res.final_profile;
        let x0 = sol.xi0.unwrap();
        let last = sol.len() - 1;
        assert!(sol.f(last) <= 1e-6, "({m},{q},{n})");
        assert!(sol.dfm[last].abs() <= 1e-4 * x0.powf(p.sigma), "({m},{q},{n})");
        assert!(res.completion.slope_jump < 1e-5, "({m},{q},{n})");
        assert_eq!(sol.classification, Classification::CandidateB);
        // Gaps are positive, decreasing, and consistent with the grid.
        let gaps = sol.gaps.as_ref().unwrap();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]));
        assert!(gaps[last] > 0.0);
        for i in (0..sol.len()).step_by(101) {
            assert!((sol.grid[i] + gaps[i] - x0).abs() <= 1e-12 * x0);
        }
        assert_eq!(sol.matched_at, Some(res.completion.xi_match));
    }
}

#[test]
fn completion_defaults_depend_on_case() {
    let c = CompletionOptions::default();
    assert!(c.seed_level(InterfaceCase::SubCritical) < c.seed_level(InterfaceCase::Critical));
    assert!(c.seed_level(InterfaceCase::Critical) < c.seed_level(InterfaceCase::SuperCritical));
    let forced = CompletionOptions {
        seed_f: Some(1e-9),
        ..c
    };
    assert_eq!(forced.seed_level(InterfaceCase::SubCritical), 1e-9);
}

#[test]
fn profiles_are_ordered_in_beta() {
    let p = make_params(2.0, 0.5, 1).unwrap();
    let opts = IntegratorOptions::default();
    let betas = [0.25, 0.5, 1.0, 2.0];
    for (i, &b1) in betas.iter().enumerate() {
        for &b2 in &betas[i + 1..] {
            let r = monotonicity_check(&p, b1, b2, 200, &opts).unwrap();
            assert!(r.passed, "{b1} vs {b2}: min gap {}", r.min_gap);
            assert_eq!(r.grid.len(), 200);
            assert!(r.grid.iter().all(|&x| x < r.xi_end));
        }
    }
    assert!(monotonicity_check(&p, 1.0, 0.5, 10, &opts).is_err());
    assert!(monotonicity_check(&p, 0.5, 1.0, 0, &opts).is_err());
}
