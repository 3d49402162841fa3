//! Mode dispatch and report assembly.
//!
//! Every run writes `report.json` into the output directory, even when the
//! computation fails; the report then has `status = "failed"` and the error
//! text. Other files are listed under `files` by name, in write order.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use eternal_profile::asymptotics::{
    critical_amplitude_residual, default_gap_window, extrapolate_xi0, fit_interface_gaps, predict_expansion,
    upper_bounds_check,
};
use eternal_profile::integrator::{classify_beta, integrate_profile, ProfileSolution, Side};
use eternal_profile::model::{exponents_from_beta, make_params, InterfaceCase, Params};
use eternal_profile::pde_verify::{eternal_trace, family_member, ode_residual, pde_residual};
use eternal_profile::phasespace::{
    limit_point_check, linearize_at_origin, stable_manifold_ratio, to_phase_coords, xz_identity_residual,
};
use eternal_profile::shooting::{probe_beta, shoot, ShootingOptions, ShootingResult};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{Mode, RunConfig, SweepSpec};
use crate::export::{phase_csv, profile_csv};
use crate::json::to_canonical_string;
use crate::plot::{thin, LinePlot, Series};

pub const THREADS_ENV: &str = "ETERNAL_PROFILE_THREADS";
pub const REPORT_FILE: &str = "report.json";
const PLOT_POINTS: usize = 2000;

/// Rescaled members checked by `verify`.
pub const FAMILY_AMPLITUDES: [f64; 3] = [0.5, 2.0, 4.0];

/// What a run produced. `report` is exactly what was written to
/// `report.json`.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: Value,
    pub files: Vec<PathBuf>,
    pub ok: bool,
}

/// Collects output files relative to the output directory.
struct Sink<'a> {
    dir: &'a Path,
    written: Vec<String>,
}

impl Sink<'_> {
    fn write(&mut self, name: &str, contents: &str) -> anyhow::Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(name.to_string());
        Ok(())
    }
}

/// Worker count from `ETERNAL_PROFILE_THREADS`; `None` lets rayon decide.
pub fn threads_from_env() -> anyhow::Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(s) => {
            let n: usize = s
                .trim()
                .parse()
                .map_err(|_| anyhow!("{THREADS_ENV} must be a positive integer, got `{s}`"))?;
            if n == 0 {
                return Err(anyhow!("{THREADS_ENV} must be at least 1"));
            }
            Ok(Some(n))
        }
    }
}

fn versions() -> Value {
    json!({
        "eternal-profile": eternal_profile::VERSION,
        "eternal-profile-cli": env!("CARGO_PKG_VERSION"),
    })
}

/// Run `cfg` and write everything into `cfg.output_dir`.
pub fn run(cfg: &RunConfig) -> anyhow::Result<RunOutcome> {
    std::fs::create_dir_all(&cfg.output_dir)
        .with_context(|| format!("creating output directory {}", cfg.output_dir.display()))?;
    let mut sink = Sink {
        dir: &cfg.output_dir,
        written: Vec::new(),
    };
    let result = dispatch(cfg, &mut sink);
    let ok = result.is_ok();
    let (results, error) = match result {
        Ok(v) => (v, Value::Null),
        Err(e) => (Value::Null, Value::String(format!("{e:#}"))),
    };
    let mut files = sink.written.clone();
    files.push(REPORT_FILE.to_string());
    let report = json!({
        "config": cfg.echo(),
        "mode": cfg.mode.as_str(),
        "status": if ok { "ok" } else { "failed" },
        "error": error,
        "results": results,
        "versions": versions(),
        "files": files,
    });
    sink.write(REPORT_FILE, &to_canonical_string(&report))?;
    Ok(RunOutcome {
        report,
        files: sink.written.iter().map(|f| cfg.output_dir.join(f)).collect(),
        ok,
    })
}

fn dispatch(cfg: &RunConfig, sink: &mut Sink<'_>) -> anyhow::Result<Value> {
    match cfg.mode {
        Mode::Solve => run_solve(cfg, sink),
        Mode::Classify => run_classify(cfg, sink),
        Mode::Shoot => run_shoot(cfg, sink),
        Mode::Asymptotics => run_asymptotics(cfg, sink),
        Mode::Phase => run_phase(cfg, sink),
        Mode::Verify => run_verify(cfg, sink),
        Mode::Sweep => run_sweep(cfg, sink),
    }
}

fn case_name(c: InterfaceCase) -> &'static str {
    match c {
        InterfaceCase::SubCritical => "sub-critical",
        InterfaceCase::Critical => "critical",
        InterfaceCase::SuperCritical => "super-critical",
    }
}

fn side_name(s: Side) -> &'static str {
    match s {
        Side::Contact => "contact",
        Side::Turn => "turn",
        Side::Unknown => "unknown",
    }
}

/// Scalar description of a profile; the arrays go to CSV.
pub fn profile_summary(sol: &ProfileSolution) -> Value {
    json!({
        "beta": sol.exps.beta,
        "alpha": sol.exps.alpha,
        "classification": sol.classification.to_string(),
        "stop_reason": format!("{:?}", sol.stop_reason),
        "xi0": sol.xi0,
        "xi1": sol.xi1,
        "xi_max": sol.xi_max,
        "points": sol.len(),
        "amplitude": sol.amplitude,
        "matched_at": sol.matched_at,
        "stats": sol.stats,
    })
}

fn profile_plot(sol: &ProfileSolution, title: &str) -> String {
    let pts = (0..sol.len()).map(|i| (sol.grid[i], sol.f(i))).collect();
    LinePlot {
        title: title.to_string(),
        x_label: "xi".into(),
        y_label: "f".into(),
        series: vec![Series::new("f(xi)", thin(pts, PLOT_POINTS))],
        ..Default::default()
    }
    .to_svg()
}

fn write_profile(cfg: &RunConfig, sink: &mut Sink<'_>, sol: &ProfileSolution, title: &str) -> anyhow::Result<()> {
    sink.write("profile.csv", &profile_csv(sol))?;
    if cfg.emit_plots {
        sink.write("profile.svg", &profile_plot(sol, title))?;
    }
    Ok(())
}

fn run_solve(cfg: &RunConfig, sink: &mut Sink<'_>) -> anyhow::Result<Value> {
    let beta = cfg.beta.ok_or_else(|| anyhow!("solve needs `beta`"))?;
    let e = exponents_from_beta(&cfg.params, beta)?;
    let sol = integrate_profile(&cfg.params, &e, cfg.integrator());
    let class = classify_beta(&sol, cfg.classify());
    write_profile(cfg, sink, &sol, &format!("profile at beta = {beta}"))?;
    Ok(json!({
        "profile": profile_summary(&sol),
        "classification": class.to_string(),
        "side": side_name(sol.side()),
        "ode_residual": ode_residual(&sol),
    }))
}

fn run_classify(cfg: &RunConfig, sink: &mut Sink<'_>) -> anyhow::Result<Value> {
    let beta = cfg.beta.ok_or_else(|| anyhow!("classify needs `beta`"))?;
    let (sol, side) = probe_beta(&cfg.params, beta, &cfg.shooting)?;
    write_profile(cfg, sink, &sol, &format!("trial profile at beta = {beta}"))?;
    Ok(json!({
        "beta": beta,
        "classification": sol.classification.to_string(),
        "side": side_name(side),
        "xi0": sol.xi0,
        "xi1": sol.xi1,
        "profile": profile_summary(&sol),
    }))
}

fn shoot_and_write(cfg: &RunConfig, sink: &mut Sink<'_>) -> anyhow::Result<(ShootingResult, Value)> {
    let res = shoot(&cfg.params, &cfg.shooting)?;
    write_profile(cfg, sink, &res.final_profile, "eternal profile")?;
    let summary = json!({
        "beta_star": res.beta_star,
        "alpha_star": res.alpha_star,
        "bracket": [res.bracket_lo, res.bracket_hi],
        "iterations": res.iterations,
        "xi0": res.final_profile.xi0,
        "case": case_name(cfg.params.case()),
        "completion": res.completion,
        "profile": profile_summary(&res.final_profile),
        "forward_profile": profile_summary(&res.forward_profile),
        "history": res.history.iter().map(|h| json!({
            "beta": h.beta,
            "classification": h.classification.to_string(),
            "contact": h.contact,
            "xi0": h.xi0,
            "xi1": h.xi1,
        })).collect::<Vec<_>>(),
    });
    Ok((res, summary))
}

fn run_shoot(cfg: &RunConfig, sink: &mut Sink<'_>) -> anyhow::Result<Value> {
    Ok(shoot_and_write(cfg, sink)?.1)
}

fn run_asymptotics(cfg: &RunConfig, sink: &mut Sink<'_>) -> anyhow::Result<Value> {
    let (res, shot) = shoot_and_write(cfg, sink)?;
    let sol = &res.final_profile;
    let p = &cfg.params;
    let xi0 = sol.xi0.ok_or_else(|| anyhow!("shot profile has no interface"))?;
    let predicted = predict_expansion(p, &sol.exps, xi0);
    let window = default_gap_window(sol)?;
    let fit = fit_interface_gaps(sol, window, p.case() == InterfaceCase::SubCritical)?;
    let bounds = upper_bounds_check(sol)?;

    if cfg.emit_plots {
        let gaps = sol.gaps.as_ref();
        let data: Vec<(f64, f64)> = (0..sol.len())
            .filter_map(|i| {
                let s = gaps.map_or(xi0 - sol.grid[i], |g| g[i]);
                (s > 0.0 && s <= window.1 * 10.0).then(|| (s, sol.f(i)))
            })
            .collect();
        let law: Vec<(f64, f64)> = data
            .iter()
            .map(|&(s, _)| (s, predicted.amplitude * s.powf(predicted.theta)))
            .collect();
        let plot = LinePlot {
            title: "interface behaviour".into(),
            x_label: "xi0 - xi".into(),
            y_label: "f".into(),
            log_x: true,
            log_y: true,
            series: vec![
                Series::new("profile", thin(data, PLOT_POINTS)),
                Series::new("leading law", thin(law, PLOT_POINTS)).dashed(),
            ],
        };
        sink.write("interface.svg", &plot.to_svg())?;
    }

    Ok(json!({
        "shooting": shot,
        "predicted": predicted,
        "fit": fit,
        "theta_rel_error": (fit.theta_hat - predicted.theta).abs() / predicted.theta,
        "amplitude_rel_error": (fit.amplitude_hat - predicted.amplitude).abs() / predicted.amplitude,
        "second_order_rel_error": match (fit.second_order_hat, predicted.second_order_coeff) {
            (Some(a), Some(b)) => json!((a - b).abs() / b.abs()),
            _ => Value::Null,
        },
        "upper_bounds": bounds,
        "xi0_extrapolated": extrapolate_xi0(sol, &predicted),
        "critical_balance_residual": critical_amplitude_residual(p, &sol.exps, xi0),
    }))
}

fn run_phase(cfg: &RunConfig, sink: &mut Sink<'_>) -> anyhow::Result<Value> {
    let lin = linearize_at_origin(&cfg.params)?;
    let (res, shot) = shoot_and_write(cfg, sink)?;
    let portrait = to_phase_coords(&res.final_profile)?;
    sink.write("phase.csv", &phase_csv(&portrait))?;
    let manifold = stable_manifold_ratio(&portrait)?;
    let limit = limit_point_check(&portrait)?;
    if cfg.emit_plots {
        let y: Vec<(f64, f64)> = (0..portrait.len())
            .map(|i| (portrait.eta_values[i], portrait.y_values[i]))
            .collect();
        let target: Vec<(f64, f64)> = [portrait.eta_values[0], *portrait.eta_values.last().unwrap_or(&0.0)]
            .iter()
            .map(|&eta| (eta, limit.y_target))
            .collect();
        let plot = LinePlot {
            title: "phase trajectory".into(),
            x_label: "eta".into(),
            y_label: "Y".into(),
            series: vec![
                Series::new("Y(eta)", thin(y, PLOT_POINTS)),
                Series::new("limit value", target).dashed(),
            ],
            ..Default::default()
        };
        sink.write("phase.svg", &plot.to_svg())?;
    }
    Ok(json!({
        "shooting": shot,
        "points": portrait.len(),
        "signs_hold": portrait.signs_hold(),
        "linearization": {
            "matrix": lin.matrix,
            "eigenvalues": lin.eigenvalues,
            "eigenvectors": lin.eigenvectors,
            "eigen_residual": lin.eigen_residual(),
            "trace": lin.trace(),
            "determinant": lin.determinant(),
        },
        "stable_manifold": manifold,
        "limit_point": limit,
        "xz_identity_residual": xz_identity_residual(&portrait),
    }))
}

/// Sample grid for the PDE residual: three times spread over a quarter of
/// the decay time and five interior radii, with a spacing of 2% of `ξ₀`.
pub fn verify_grids(beta: f64, xi0: f64) -> (Vec<f64>, Vec<f64>, f64) {
    let tau = 0.25 / beta;
    let t = vec![-tau, 0.0, tau];
    let r = (1..=5).map(|j| 0.1 * xi0 * j as f64).collect();
    (t, r, 0.02 * xi0)
}

fn run_verify(cfg: &RunConfig, sink: &mut Sink<'_>) -> anyhow::Result<Value> {
    let (res, shot) = shoot_and_write(cfg, sink)?;
    let sol = &res.final_profile;
    let xi0 = sol.xi0.ok_or_else(|| anyhow!("shot profile has no interface"))?;
    let ode = ode_residual(sol);
    let (t, r, h) = verify_grids(sol.exps.beta, xi0);
    let pde = pde_residual(sol, &t, &r, h)?;
    let mut family = Vec::new();
    for a in FAMILY_AMPLITUDES {
        let member = family_member(sol, a)?;
        family.push(json!({
            "a": a,
            "f0": member.f(0),
            "xi0": member.xi0,
            "ode_residual": ode_residual(&member),
        }));
    }
    let tau = 0.25 / sol.exps.beta;
    let trace = eternal_trace(sol, (-tau, tau), 5)?;
    let n = cfg.params.n;
    Ok(json!({
        "shooting": shot,
        "ode_residual": ode,
        "pde": {
            "t_grid": t,
            "r_grid": r,
            "h": h,
            "report": pde,
        },
        "family": family,
        "trace": trace.iter().map(|s| json!({
            "t": s.t,
            "support_radius": s.support_radius,
            "peak": s.peak(),
            "mass": s.mass(n),
        })).collect::<Vec<_>>(),
    }))
}

enum Job {
    Beta(f64),
    Exponents(f64, f64),
}

fn sweep_job(cfg: &RunConfig, job: &Job) -> anyhow::Result<(Value, String)> {
    match *job {
        Job::Beta(beta) => {
            let e = exponents_from_beta(&cfg.params, beta)?;
            let sol = integrate_profile(&cfg.params, &e, cfg.integrator());
            let class = classify_beta(&sol, cfg.classify());
            let v = json!({
                "beta": beta,
                "classification": class.to_string(),
                "side": side_name(sol.side()),
                "profile": profile_summary(&sol),
            });
            Ok((v, profile_csv(&sol)))
        }
        Job::Exponents(m, q) => {
            let p: Params = make_params(m, q, cfg.params.n)?;
            let opts: ShootingOptions = cfg.shooting;
            let res = shoot(&p, &opts)?;
            let v = json!({
                "m": m,
                "q": q,
                "sigma": p.sigma,
                "case": case_name(p.case()),
                "beta_star": res.beta_star,
                "xi0": res.final_profile.xi0,
                "slope_jump": res.completion.slope_jump,
                "iterations": res.iterations,
            });
            Ok((v, profile_csv(&res.final_profile)))
        }
    }
}

fn run_sweep(cfg: &RunConfig, sink: &mut Sink<'_>) -> anyhow::Result<Value> {
    let jobs: Vec<Job> = match cfg.sweep.as_ref().ok_or_else(|| anyhow!("sweep needs a sweep list"))? {
        SweepSpec::Betas(b) => b.iter().map(|&x| Job::Beta(x)).collect(),
        SweepSpec::Exponents(e) => e.iter().map(|&(m, q)| Job::Exponents(m, q)).collect(),
    };
    let threads = threads_from_env()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().context("building the worker pool")?;
    // Results come back in job order whatever the scheduling.
    let outcomes: Vec<anyhow::Result<(Value, String)>> =
        pool.install(|| jobs.par_iter().map(|j| sweep_job(cfg, j)).collect());

    let mut rows = Vec::with_capacity(outcomes.len());
    let mut failures = 0usize;
    for (k, out) in outcomes.into_iter().enumerate() {
        let file = format!("job_{k:03}.csv");
        match out {
            Ok((mut v, csv)) => {
                sink.write(&file, &csv)?;
                v["job"] = json!(k);
                v["status"] = json!("ok");
                v["file"] = json!(file);
                rows.push(v);
            }
            Err(e) => {
                failures += 1;
                rows.push(json!({ "job": k, "status": "failed", "error": format!("{e:#}") }));
            }
        }
    }
    if cfg.emit_plots {
        if let Some(SweepSpec::Betas(b)) = &cfg.sweep {
            let pts: Vec<(f64, f64)> = b
                .iter()
                .zip(&rows)
                .filter_map(|(&beta, row)| row["profile"]["xi0"].as_f64().or(row["profile"]["xi1"].as_f64()).map(|x| (beta, x)))
                .collect();
            let plot = LinePlot {
                title: "stopping point against beta".into(),
                x_label: "beta".into(),
                y_label: "xi at stop".into(),
                log_x: true,
                series: vec![Series::new("xi0 or xi1", pts)],
                ..Default::default()
            };
            sink.write("sweep.svg", &plot.to_svg())?;
        }
    }
    if failures > 0 {
        return Err(anyhow!("{failures} of {} sweep jobs failed: {}", rows.len(), Value::Array(rows)));
    }
    Ok(json!({ "jobs": rows }))
}
