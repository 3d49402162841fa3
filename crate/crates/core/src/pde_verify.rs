//! Back from the profile to the PDE.
//!
//! The eternal solution is `U(t, x) = e^{-αt} f(|x| e^{βt})`, defined for all
//! `t ∈ ℝ`. This module evaluates it, checks the profile equation on the
//! stored grid, and checks `U` itself against
//! `u_t - Δu^m + |x|^σ u^q = 0` with plain central differences that know
//! nothing about the ODE.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrator::ProfileSolution;
use crate::model::rescale_profile;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OdeResidualReport {
    pub points: usize,
    /// Largest residual relative to the sum of the magnitudes of its terms.
    pub max_rel: f64,
    pub rms_rel: f64,
    pub worst_xi: f64,
}

/// Weights of the first derivative at offset 0 for nodes at `offsets`
/// (Fornberg's recursion, specialised to derivative order one).
fn fornberg_d1(offsets: &[f64]) -> Vec<f64> {
    let n = offsets.len();
    let mut c = vec![[0.0f64; 2]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    for i in 1..n {
        let mut c2 = 1.0;
        for j in 0..i {
            let c3 = offsets[i] - offsets[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (0..=1.min(i)).rev() {
                    let prev = if k > 0 { c[i - 1][k - 1] } else { 0.0 };
                    c[i][k] = c1 * (k as f64 * prev - offsets[i - 1] * c[i - 1][k]) / c2;
                }
            }
            for k in (0..=1.min(i)).rev() {
                let prev = if k > 0 { c[j][k - 1] } else { 0.0 };
                c[j][k] = (offsets[i] * c[j][k] - k as f64 * prev) / c3;
            }
        }
        c1 = c2;
    }
    c.iter().map(|w| w[1]).collect()
}

/// Residual of the profile equation at every stored point whose five-point
/// stencil stays clear of the launch point and of a matching point.
///
/// `F''` is obtained by differentiating the stored `F'` values, so the check
/// exercises the stored data rather than the right-hand side that produced
/// them.
pub fn ode_residual(sol: &ProfileSolution) -> OdeResidualReport {
    let p = &sol.params;
    let e = &sol.exps;
    let n = sol.len();
    let nm1 = p.nf() - 1.0;
    let mut report = OdeResidualReport {
        points: 0,
        max_rel: 0.0,
        rms_rel: 0.0,
        worst_xi: f64::NAN,
    };
    if n < 5 {
        return report;
    }
    let mut sum2 = 0.0;
    for i in 2..n - 2 {
        let lo = sol.grid[i - 2];
        let hi = sol.grid[i + 2];
        if let Some(xm) = sol.matched_at {
            if xm >= lo && xm <= hi {
                continue;
            }
        }
        let offsets: Vec<f64> = (i - 2..=i + 2)
            .map(|j| match &sol.gaps {
                Some(g) => g[i] - g[j],
                None => sol.grid[j] - sol.grid[i],
            })
            .collect();
        let w = fornberg_d1(&offsets);
        let d2: f64 = (0..5).map(|k| w[k] * sol.dfm[i - 2 + k]).sum();
        let xi = sol.grid[i];
        let f = sol.f(i);
        if f <= 0.0 {
            continue;
        }
        let fp = sol.fprime(i);
        let terms = [
            d2,
            nm1 / xi * sol.dfm[i],
            e.alpha * f,
            -e.beta * xi * fp,
            -xi.powf(p.sigma) * f.powf(p.q),
        ];
        let res: f64 = terms.iter().sum();
        let scale: f64 = terms.iter().map(|t| t.abs()).sum();
        let rel = res.abs() / scale;
        report.points += 1;
        sum2 += rel * rel;
        if rel > report.max_rel {
            report.max_rel = rel;
            report.worst_xi = xi;
        }
    }
    if report.points > 0 {
        report.rms_rel = (sum2 / report.points as f64).sqrt();
    }
    report
}

/// `U(t, r) = e^{-αt} f(r e^{βt})`, zero beyond the support.
///
/// ```
/// use eternal_profile::shooting::{shoot, ShootingOptions};
/// use eternal_profile::model::make_params;
/// use eternal_profile::pde_verify::eval_solution;
/// let p = make_params(1.5, 0.5, 2).unwrap();
/// let prof = shoot(&p, &ShootingOptions::default()).unwrap().final_profile;
/// let alpha = prof.exps.alpha;
/// assert!((eval_solution(&prof, 2.0, 0.0) - (-2.0 * alpha).exp()).abs() < 1e-14);
/// assert_eq!(eval_solution(&prof, 0.0, 10.0), 0.0);
/// ```
pub fn eval_solution(profile: &ProfileSolution, t: f64, r: f64) -> f64 {
    let e = &profile.exps;
    let xi = r.abs() * (e.beta * t).exp();
    (-e.alpha * t).exp() * profile.f_at(xi).unwrap_or(0.0)
}

/// Radius of the support of `U(t, ·)`.
pub fn support_radius(profile: &ProfileSolution, t: f64) -> Option<f64> {
    profile.xi0.map(|x0| x0 * (-profile.exps.beta * t).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PdeLevel {
    pub h: f64,
    pub max_abs: f64,
    pub rms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PdeResidualReport {
    pub points: usize,
    /// Residuals at step `h`, `h/2`, `h/4`.
    pub levels: Vec<PdeLevel>,
    /// `log₂` of successive ratios of the maximum residual; `None` when both
    /// levels are exactly zero.
    pub orders: Vec<Option<f64>>,
}

/// Central-difference residual of the PDE at step `h` for one point.
fn pde_point(profile: &ProfileSolution, t: f64, r: f64, h: f64) -> f64 {
    let p = &profile.params;
    let m = p.m;
    let u = |t: f64, r: f64| eval_solution(profile, t, r);
    let w = |t: f64, r: f64| u(t, r).powf(m);
    let ut = (u(t + h, r) - u(t - h, r)) / (2.0 * h);
    let w0 = w(t, r);
    let lap = if r == 0.0 {
        2.0 * p.nf() * (w(t, h) - w0) / (h * h)
    } else {
        let (wp, wm) = (w(t, r + h), w(t, r - h));
        (wp - 2.0 * w0 + wm) / (h * h) + (p.nf() - 1.0) / r * (wp - wm) / (2.0 * h)
    };
    ut - lap + r.powf(p.sigma) * u(t, r).powf(p.q)
}

/// Plug `U` into the PDE on a `(t, r)` grid at steps `h`, `h/2`, `h/4`.
///
/// Every stencil must stay five stencil widths inside the support at the
/// latest time it touches, and must not reach `r < 0` except through the
/// symmetric stencil at `r = 0`.
pub fn pde_residual(profile: &ProfileSolution, t_grid: &[f64], r_grid: &[f64], h: f64) -> Result<PdeResidualReport> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::Domain(format!("step must be positive, got {h}")));
    }
    let x0 = profile.xi0.ok_or(Error::MissingInterface)?;
    let beta = profile.exps.beta;
    for &t in t_grid {
        let edge = x0 * (-beta * (t + h)).exp();
        for &r in r_grid {
            if r < 0.0 || (r > 0.0 && r < h) {
                return Err(Error::Region(format!("r = {r} is within one step of the origin")));
            }
            if r + 6.0 * h > edge {
                return Err(Error::Region(format!(
                    "stencil at (t, r) = ({t}, {r}) comes within 5 steps of the interface at {edge}"
                )));
            }
        }
    }
    let mut levels = Vec::new();
    for k in 0..3 {
        let hk = h / f64::from(1u32 << k);
        let (mut max_abs, mut sum2, mut count) = (0.0f64, 0.0, 0usize);
        for &t in t_grid {
            for &r in r_grid {
                let res = pde_point(profile, t, r, hk);
                max_abs = max_abs.max(res.abs());
                sum2 += res * res;
                count += 1;
            }
        }
        let rms = if count > 0 { (sum2 / count as f64).sqrt() } else { 0.0 };
        levels.push(PdeLevel { h: hk, max_abs, rms });
    }
    let orders = levels
        .windows(2)
        .map(|w| {
            if w[0].max_abs == 0.0 && w[1].max_abs == 0.0 {
                None
            } else {
                Some((w[0].max_abs / w[1].max_abs).log2())
            }
        })
        .collect();
    Ok(PdeResidualReport {
        points: t_grid.len() * r_grid.len(),
        levels,
        orders,
    })
}

/// The profile of the family member `u_A` with `f_A(0) = A`.
pub fn family_member(profile: &ProfileSolution, a: f64) -> Result<ProfileSolution> {
    rescale_profile(profile, a)
}

/// `U(t, ·)` sampled on a radial grid reaching a quarter past the support.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionSample {
    pub t: f64,
    pub x_radii: Vec<f64>,
    pub u_values: Vec<f64>,
    pub support_radius: f64,
}

impl SolutionSample {
    /// `∫ U(t, x) dx` over `ℝᴺ`, by the trapezoidal rule in `r`.
    pub fn mass(&self, n: u32) -> f64 {
        let surface = unit_sphere_area(n);
        let g = |i: usize| self.u_values[i] * self.x_radii[i].powi(n as i32 - 1);
        let mut total = 0.0;
        for i in 1..self.x_radii.len() {
            total += 0.5 * (self.x_radii[i] - self.x_radii[i - 1]) * (g(i) + g(i - 1));
        }
        surface * total
    }

    pub fn peak(&self) -> f64 {
        self.u_values.iter().copied().fold(0.0, f64::max)
    }
}

/// Area of the unit sphere in `ℝᴺ` (2 for `N = 1`).
pub fn unit_sphere_area(n: u32) -> f64 {
    match n {
        0 => 0.0,
        1 => 2.0,
        2 => 2.0 * std::f64::consts::PI,
        _ => 2.0 * std::f64::consts::PI / (n as f64 - 2.0) * unit_sphere_area(n - 2),
    }
}

/// Points per radial sample in [`eternal_trace`].
pub const TRACE_RADII: usize = 201;

/// Sample `U` at `n` equally spaced times in `t_range` (both ends included).
pub fn eternal_trace(profile: &ProfileSolution, t_range: (f64, f64), n: usize) -> Result<Vec<SolutionSample>> {
    if n < 2 {
        return Err(Error::Domain(format!("need at least two sample times, got {n}")));
    }
    let x0 = profile.xi0.ok_or(Error::MissingInterface)?;
    let (t0, t1) = t_range;
    Ok((0..n)
        .map(|k| {
            let t = t0 + (t1 - t0) * k as f64 / (n - 1) as f64;
            let rs = x0 * (-profile.exps.beta * t).exp();
            let x_radii: Vec<f64> = (0..TRACE_RADII)
                .map(|j| 1.25 * rs * j as f64 / (TRACE_RADII - 1) as f64)
                .collect();
            let u_values = x_radii.iter().map(|&r| eval_solution(profile, t, r)).collect();
            SolutionSample {
                t,
                x_radii,
                u_values,
                support_radius: rs,
            }
        })
        .collect())
}
