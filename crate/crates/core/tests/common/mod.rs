#![allow(dead_code)]

use eternal_profile::integrator::{Classification, IntegrationStats, ProfileSolution, StopReason};
use eternal_profile::model::{exponents_from_beta, make_params, Params};

/// The closed-form critical profile for `(m, q, N) = (3/2, 1/2, 2)`:
/// `β* = 1/2`, `f = (1 - ξ²/6)²`, `ξ₀ = √6`.
pub fn exact_critical_f(xi: f64) -> f64 {
    let u = (1.0 - xi * xi / 6.0).max(0.0);
    u * u
}

/// `(F, F')` of the closed-form critical profile.
pub fn exact_critical_fm(xi: f64) -> (f64, f64) {
    let u = (1.0 - xi * xi / 6.0).max(0.0);
    (u * u * u, -xi * u * u)
}

/// A profile assembled from formulas instead of integration. Points are
/// placed at gaps `s` spaced geometrically from `s_min` up to `ξ₀ - δ`, so the
/// interface region is densely sampled; exact gaps are stored.
pub fn synthetic_profile(
    p: Params,
    beta: f64,
    xi0: f64,
    points: usize,
    s_min: f64,
    fm: impl Fn(f64, f64) -> (f64, f64),
) -> ProfileSolution {
    let e = exponents_from_beta(&p, beta).unwrap();
    let delta = 1e-6;
    let s_max = xi0 - delta;
    let ratio = (s_max / s_min).ln();
    let mut gaps: Vec<f64> = (0..points)
        .map(|k| s_min * (ratio * k as f64 / (points - 1) as f64).exp())
        .collect();
    gaps.reverse();
    gaps[0] = s_max;
    let grid: Vec<f64> = gaps.iter().map(|&s| xi0 - s).collect();
    let (fmv, dfm): (Vec<f64>, Vec<f64>) = grid.iter().zip(&gaps).map(|(&x, &s)| fm(x, s)).unzip();
    ProfileSolution {
        params: p,
        exps: e,
        grid,
        fm: fmv,
        dfm,
        gaps: Some(gaps),
        matched_at: None,
        xi0: Some(xi0),
        xi1: None,
        xi_max: xi0,
        classification: Classification::CandidateB,
        stop_reason: StopReason::ContactZero,
        amplitude: 1.0,
        stats: IntegrationStats::default(),
    }
}

pub fn exact_critical_profile(points: usize) -> ProfileSolution {
    let p = make_params(1.5, 0.5, 2).unwrap();
    synthetic_profile(p, 0.5, 6f64.sqrt(), points, 1e-6, |x, _| exact_critical_fm(x))
}

/// The four shooting cases of the acceptance list.
pub const CASES: [(f64, f64, u32); 4] = [(2.0, 0.5, 1), (2.0, 0.5, 3), (1.5, 0.5, 2), (1.2, 0.3, 1)];
