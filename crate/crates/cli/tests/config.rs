use std::path::PathBuf;

use eternal_profile_cli::config::{load_config, parse_config, ConfigError, Mode, SweepSpec, KEYS};

const BASE: &str = "m = 2\nq = 0.5\nN = 1\n";

#[test]
fn minimal_shoot_config_gets_defaults() {
    let cfg = parse_config(BASE, Some(Mode::Shoot)).unwrap();
    assert_eq!(cfg.mode, Mode::Shoot);
    assert_eq!(cfg.shooting.beta_tol, 1e-8);
    assert_eq!(cfg.output_dir, PathBuf::from("out"));
    assert!(!cfg.emit_plots);
    assert_eq!(cfg.beta, None);
    assert_eq!(cfg.params.sigma, 1.0);
}

#[test]
fn mode_from_file_and_comments() {
    let text = "# header\nm = 2   # diffusion\nq = 0.5\nN = 1\nmode = shoot\n\n   \nplots = true\n";
    let cfg = parse_config(text, None).unwrap();
    assert_eq!(cfg.mode, Mode::Shoot);
    assert!(cfg.emit_plots);
    assert!(parse_config(text, Some(Mode::Shoot)).is_ok());
    assert!(matches!(
        parse_config(text, Some(Mode::Phase)),
        Err(ConfigError::Invalid { ref key, .. }) if key == "mode"
    ));
    assert_eq!(parse_config(BASE, None), Err(ConfigError::Missing("mode".into())));
}

#[test]
fn unknown_and_duplicate_keys_report_their_line() {
    let err = parse_config("m = 2\nq = 0.5\n\nN = 1\ntolerance = 3\n", Some(Mode::Shoot)).unwrap_err();
    assert_eq!(
        err,
        ConfigError::UnknownKey {
            line: 5,
            key: "tolerance".into()
        }
    );
    assert_eq!(err.to_string(), "line 5: unknown key `tolerance`");
    let err = parse_config("m = 2\nq = 0.5\nm = 3\nN = 1\n", Some(Mode::Shoot)).unwrap_err();
    assert_eq!(err, ConfigError::Duplicate { line: 3, key: "m".into() });
}

#[test]
fn malformed_lines_report_their_line() {
    for (text, line) in [
        ("m = 2\nq 0.5\nN = 1\n", 2),
        ("m = 2\nq = \nN = 1\n", 2),
        ("m = 2\nq = 0.5\nN = one\n", 3),
        ("m = 2\nq = 0.5\nN = 1\nbeta_tol = 1e-8x\n", 4),
        ("m = 2\nq = 0.5\nN = 1\nmode = fly\n", 4),
        ("m = 2\nq = 0.5\nN = 1\nsweep_betas = 0.1, , 2\n", 4),
        ("= 2\n", 1),
    ] {
        match parse_config(text, Some(Mode::Shoot)) {
            Err(ConfigError::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
            other => panic!("{text:?}: {other:?}"),
        }
    }
}

#[test]
fn mode_specific_requirements() {
    assert_eq!(parse_config(BASE, Some(Mode::Classify)), Err(ConfigError::Missing("beta".into())));
    assert_eq!(parse_config(BASE, Some(Mode::Solve)), Err(ConfigError::Missing("beta".into())));
    assert!(matches!(parse_config(BASE, Some(Mode::Sweep)), Err(ConfigError::Missing(_))));
    let cfg = parse_config(&format!("{BASE}beta = 0.3\n"), Some(Mode::Classify)).unwrap();
    assert_eq!(cfg.beta, Some(0.3));
}

#[test]
fn domain_errors_name_the_key() {
    let err = parse_config("m = 2\nq = 1.5\nN = 1\n", Some(Mode::Shoot)).unwrap_err();
    assert!(matches!(err, ConfigError::Invalid { ref key, .. } if key.contains('q')), "{err}");
    for (extra, key) in [
        ("beta_tol = -1\n", "beta_tol"),
        ("f_match = 1.5\n", "f_match"),
        ("max_steps = 0\n", "max_steps"),
        ("abs_tol = -1e-3\n", "abs_tol"),
        ("sweep_betas = 0.1, -2\n", "sweep_betas"),
        ("sweep_exponents = 2:0.5, 0.5:0.5\n", "sweep_exponents"),
    ] {
        let err = parse_config(&format!("{BASE}{extra}"), Some(Mode::Shoot)).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { key: ref k, .. } if k == key), "{extra}: {err}");
    }
}

#[test]
fn overrides_reach_the_solver_options() {
    let text = format!(
        "{BASE}rel_tol = 1e-11\nabs_tol = 0\nhorizon = 40\nmax_steps = 1000\nslope_tol = 1e-3\nf_match = 0.3\noutput_dir = results\n"
    );
    let cfg = parse_config(&text, Some(Mode::Shoot)).unwrap();
    let io = cfg.integrator();
    assert_eq!(io.rel_tol, 1e-11);
    assert_eq!(io.abs_tol, 0.0);
    assert_eq!(io.horizon, Some(40.0));
    assert_eq!(io.max_steps, 1000);
    assert_eq!(cfg.classify().slope_tol, 1e-3);
    assert_eq!(cfg.shooting.completion.f_match, 0.3);
    assert_eq!(cfg.output_dir, PathBuf::from("results"));
}

#[test]
fn sweep_lists() {
    let cfg = parse_config(&format!("{BASE}sweep_betas = 0.01, 0.1,1 , 10\n"), Some(Mode::Sweep)).unwrap();
    assert_eq!(cfg.sweep, Some(SweepSpec::Betas(vec![0.01, 0.1, 1.0, 10.0])));
    let cfg = parse_config(&format!("{BASE}sweep_exponents = 2:0.5, 1.2 : 0.3\n"), Some(Mode::Sweep)).unwrap();
    assert_eq!(cfg.sweep, Some(SweepSpec::Exponents(vec![(2.0, 0.5), (1.2, 0.3)])));
    let both = format!("{BASE}sweep_betas = 1\nsweep_exponents = 2:0.5\n");
    assert!(parse_config(&both, Some(Mode::Sweep)).is_err());
}

#[test]
fn echo_lists_every_key_with_a_value() {
    let cfg = parse_config(BASE, Some(Mode::Shoot)).unwrap();
    let echo = cfg.echo();
    let obj = echo.as_object().unwrap();
    for (key, _) in KEYS {
        let k = match *key {
            "sweep_betas" | "sweep_exponents" => "sweep",
            k => k,
        };
        assert!(obj.contains_key(k), "{k} missing from the echo");
    }
    assert_eq!(obj["beta_tol"], 1e-8);
}

#[test]
fn load_reports_missing_files() {
    let err = load_config(std::path::Path::new("/nonexistent/run.conf"), Some(Mode::Shoot)).unwrap_err();
    assert!(matches!(err, ConfigError::Io { .. }));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.conf");
    std::fs::write(&path, BASE).unwrap();
    assert!(load_config(&path, Some(Mode::Shoot)).is_ok());
}
