//! Interface laws `f ≈ A (ξ₀-ξ)^θ` and their numerical verification.
//!
//! Which terms of the equation balance at the interface depends on the sign
//! of `m + q - 2`:
//!
//! | case            | θ           | A                              |
//! |-----------------|-------------|--------------------------------|
//! | `m + q < 2`     | `2/(m-q)`   | `K₁ ξ₀^{σ/(m-q)}`              |
//! | `m + q = 2`     | `2/(m-q)`   | `K₁ K₂(β) ξ₀^{2/(m-q)}`        |
//! | `m + q > 2`     | `1/(1-q)`   | `K₃(β) ξ₀^{(σ-1)/(1-q)}`       |
//!
//! In the sub-critical case the next term is `-K₀(β) ξ₀^{(σ+m+q-2)/(m-q)}
//! (ξ₀-ξ)^{(4-m-q)/(m-q)}`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrator::ProfileSolution;
use crate::model::{Exponents, InterfaceCase, Params};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InterfaceExpansion {
    pub case: InterfaceCase,
    pub theta: f64,
    pub amplitude: f64,
    /// Positive coefficient of the subtracted second term (sub-critical only).
    pub second_order_coeff: Option<f64>,
    pub second_order_exponent: Option<f64>,
    pub k1: Option<f64>,
    pub k2: Option<f64>,
    pub k3: Option<f64>,
    pub k0: Option<f64>,
}

pub fn k1(p: &Params) -> f64 {
    let (m, q) = (p.m, p.q);
    ((m - q) / (2.0 * m * (m + q)).sqrt()).powf(2.0 / (m - q))
}

pub fn k2(p: &Params, beta: f64) -> f64 {
    let (m, q) = (p.m, p.q);
    let t = beta / (2.0 * m.sqrt());
    ((1.0 + t * t).sqrt() - t).powf(2.0 / (m - q))
}

pub fn k3(p: &Params, beta: f64) -> f64 {
    let q = p.q;
    ((1.0 - q) / beta).powf(1.0 / (1.0 - q))
}

pub fn k0(p: &Params, beta: f64) -> f64 {
    let (m, q) = (p.m, p.q);
    (m - q) * beta * k1(p).powf(2.0 - m) / (m * (1.0 - q) * (m + q + 2.0))
}

/// Closed-form interface law at a given `ξ₀`.
///
/// ```
/// use eternal_profile::asymptotics::predict_expansion;
/// use eternal_profile::model::{exponents_from_beta, make_params};
/// let p = make_params(2.0, 0.5, 1).unwrap();
/// let ex = predict_expansion(&p, &exponents_from_beta(&p, 1.0).unwrap(), 1.0);
/// assert_eq!(ex.theta, 2.0);
/// assert!((ex.k3.unwrap() - 0.25).abs() < 1e-15);
/// ```
pub fn predict_expansion(p: &Params, e: &Exponents, xi0: f64) -> InterfaceExpansion {
    let (m, q, s) = (p.m, p.q, p.sigma);
    let case = p.case();
    let mut ex = InterfaceExpansion {
        case,
        theta: 0.0,
        amplitude: 0.0,
        second_order_coeff: None,
        second_order_exponent: None,
        k1: None,
        k2: None,
        k3: None,
        k0: None,
    };
    match case {
        InterfaceCase::SubCritical => {
            let c1 = k1(p);
            let c0 = k0(p, e.beta);
            ex.theta = 2.0 / (m - q);
            ex.amplitude = c1 * xi0.powf(s / (m - q));
            ex.second_order_coeff = Some(c0 * xi0.powf((s + m + q - 2.0) / (m - q)));
            ex.second_order_exponent = Some((4.0 - m - q) / (m - q));
            ex.k1 = Some(c1);
            ex.k0 = Some(c0);
        }
        InterfaceCase::Critical => {
            let (c1, c2) = (k1(p), k2(p, e.beta));
            ex.theta = 2.0 / (m - q);
            ex.amplitude = c1 * c2 * xi0.powf(2.0 / (m - q));
            ex.k1 = Some(c1);
            ex.k2 = Some(c2);
        }
        InterfaceCase::SuperCritical => {
            let c3 = k3(p, e.beta);
            ex.theta = 1.0 / (1.0 - q);
            ex.amplitude = c3 * xi0.powf((s - 1.0) / (1.0 - q));
            ex.k3 = Some(c3);
        }
    }
    ex
}

/// Exponent of the first correction beyond the second-order term in the
/// sub-critical expansion: `θ + min(1, 2(2-m-q)/(m-q))`. Used as a nuisance
/// regressor so that the second-order coefficient is not biased by it.
pub fn third_order_exponent(p: &Params) -> f64 {
    let (m, q) = (p.m, p.q);
    let theta = 2.0 / (m - q);
    let kappa = (2.0 - m - q) / (m - q);
    theta + (1.0f64).min(2.0 * kappa)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InterfaceFit {
    pub theta_hat: f64,
    pub amplitude_hat: f64,
    pub second_order_hat: Option<f64>,
    /// Coefficient of the nuisance term in the second-order fit.
    pub third_order_hat: Option<f64>,
    /// Window in `ξ`.
    pub fit_window: (f64, f64),
    /// The same window as gaps `ξ₀ - ξ`.
    pub gap_window: (f64, f64),
    pub points: usize,
    /// RMS residual of the log-log fit.
    pub residual: f64,
}

pub const MIN_FIT_POINTS: usize = 20;

/// Fit on a window given in `ξ`.
pub fn fit_interface(sol: &ProfileSolution, window: (f64, f64), with_second_order: bool) -> Result<InterfaceFit> {
    let x0 = sol.xi0.ok_or(Error::MissingInterface)?;
    let (lo, hi) = window;
    if !(lo < hi && lo > 0.0 && hi < x0) {
        return Err(Error::Domain(format!("fit window ({lo}, {hi}) not inside (0, {x0})")));
    }
    fit_interface_gaps(sol, (x0 - hi, x0 - lo), with_second_order)
}

/// Fit on a window of gaps `s = ξ₀ - ξ ∈ [s_lo, s_hi]`.
///
/// The leading fit regresses `ln f` on `ln s` for `θ̂`; `Â` is the geometric
/// mean of `f/s^θ` with the predicted `θ`. The second-order fit holds
/// `θ` and `A` at their predicted values and regresses
/// `(f - A s^θ)/s^{e₂}` on `(1, s^{e₃-e₂})`, with `e₂ = (4-m-q)/(m-q)` and
/// `e₃` from [`third_order_exponent`].
pub fn fit_interface_gaps(
    sol: &ProfileSolution,
    gap_window: (f64, f64),
    with_second_order: bool,
) -> Result<InterfaceFit> {
    let x0 = sol.xi0.ok_or(Error::MissingInterface)?;
    let (s_lo, s_hi) = gap_window;
    let mut pts = Vec::new();
    for i in 0..sol.len() {
        let s = sol.gap(i).unwrap();
        let f = sol.f(i);
        if s >= s_lo && s <= s_hi && s > 0.0 && f > 0.0 {
            pts.push((s, f));
        }
    }
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::Window {
            found: pts.len(),
            needed: MIN_FIT_POINTS,
        });
    }
    let (slope, _, residual) = linear_fit(pts.iter().map(|&(s, f)| (s.ln(), f.ln())));
    // The free intercept lives at s = 1, far outside the window, so any small
    // error in the slope is amplified there. The amplitude is instead read off
    // with the exponent held at its predicted value.
    let ex = predict_expansion(&sol.params, &sol.exps, x0);
    let log_amp = pts.iter().map(|&(s, f)| f.ln() - ex.theta * s.ln()).sum::<f64>() / pts.len() as f64;
    let mut fit = InterfaceFit {
        theta_hat: slope,
        amplitude_hat: log_amp.exp(),
        second_order_hat: None,
        third_order_hat: None,
        fit_window: (x0 - s_hi, x0 - s_lo),
        gap_window,
        points: pts.len(),
        residual,
    };
    if with_second_order {
        let e2 = ex
            .second_order_exponent
            .ok_or_else(|| Error::Case(format!("m + q = {}", sol.params.m + sol.params.q)))?;
        let e3 = third_order_exponent(&sol.params);
        let rows: Vec<(f64, f64)> = pts
            .iter()
            .map(|&(s, f)| (s.powf(e3 - e2), (f - ex.amplitude * s.powf(ex.theta)) / s.powf(e2)))
            .collect();
        let (c3, c2, _) = linear_fit(rows.into_iter());
        fit.second_order_hat = Some(-c2);
        fit.third_order_hat = Some(c3);
    }
    Ok(fit)
}

/// Least-squares line through `(x, y)`: returns `(slope, intercept, rms)`.
fn linear_fit(data: impl Iterator<Item = (f64, f64)>) -> (f64, f64, f64) {
    let pts: Vec<(f64, f64)> = data.collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for &(x, y) in &pts {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (pts
        .iter()
        .map(|&(x, y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    (slope, intercept, rms)
}

/// Default fit window in gaps: two decades starting three resolved gaps in
/// from the last stored point, capped at `2·10⁻³ ξ₀`.
///
/// The cap matters only when the next term is `O(s)` relative to the
/// leading one (the super-critical case); there a wider window biases the
/// amplitude by several percent.
pub fn default_gap_window(sol: &ProfileSolution) -> Result<(f64, f64)> {
    let x0 = sol.xi0.ok_or(Error::MissingInterface)?;
    let s_end = sol.gap(sol.len() - 1).unwrap();
    let lo = 3.0 * s_end;
    let hi = (100.0 * lo).min(2e-3 * x0);
    Ok((lo, hi))
}

/// Correct the stopping point of a contact profile with the interface law:
/// `ξ₀ = ξ_stop + (f_stop/A)^{1/θ}`.
pub fn extrapolate_xi0(sol: &ProfileSolution, expansion: &InterfaceExpansion) -> f64 {
    let last = sol.len() - 1;
    let f = sol.f(last);
    sol.grid[last] + (f / expansion.amplitude).powf(1.0 / expansion.theta)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UpperBoundsReport {
    pub points: usize,
    /// Largest ratio `|(f^{m-q})'| / (2^{N-1} ξ₀^σ (ξ₀-ξ))`.
    pub worst_slope_ratio: f64,
    /// Largest ratio `f / (β^{q-1} ξ₀^{(σ-1)/(1-q)} (ξ₀-ξ)^{1/(1-q)})`.
    pub worst_value_ratio: f64,
    pub slope_bound_holds: bool,
    pub value_bound_holds: bool,
}

/// Check the two a-priori interface bounds on `(ξ₀/2, ξ₀)`.
pub fn upper_bounds_check(sol: &ProfileSolution) -> Result<UpperBoundsReport> {
    let x0 = sol.xi0.ok_or(Error::MissingInterface)?;
    let p = &sol.params;
    let (m, q, s) = (p.m, p.q, p.sigma);
    let beta = sol.exps.beta;
    let c_slope = 2f64.powf(p.nf() - 1.0) * x0.powf(s);
    let c_value = beta.powf(q - 1.0) * x0.powf((s - 1.0) / (1.0 - q));
    let (mut w1, mut w2) = (0.0f64, 0.0f64);
    let mut points = 0;
    for i in 0..sol.len() {
        let xi = sol.grid[i];
        let gap = sol.gap(i).unwrap();
        if xi <= 0.5 * x0 || gap <= 0.0 {
            continue;
        }
        let f = sol.f(i);
        if f <= 0.0 {
            continue;
        }
        points += 1;
        let dpow = (m - q) / m * sol.dfm[i] * f.powf(-q);
        w1 = w1.max(dpow.abs() / (c_slope * gap));
        w2 = w2.max(f / (c_value * gap.powf(1.0 / (1.0 - q))));
    }
    Ok(UpperBoundsReport {
        points,
        worst_slope_ratio: w1,
        worst_value_ratio: w2,
        slope_bound_holds: w1 <= 1.0,
        value_bound_holds: w2 <= 1.0,
    })
}

/// Relative residual of the leading-order balance at the interface for the
/// critical case, evaluated with the predicted amplitude. Zero up to rounding
/// when `K₂` is correct.
pub fn critical_amplitude_residual(p: &Params, e: &Exponents, xi0: f64) -> Option<f64> {
    if p.case() != InterfaceCase::Critical {
        return None;
    }
    let ex = predict_expansion(p, e, xi0);
    let (m, q, th) = (p.m, p.q, ex.theta);
    let a = ex.amplitude;
    // Leading balance at s → 0 with f = A s^θ, θ(m-1) = 2:
    //   (f^m)'' ~ A^m mθ(mθ-1) s^{mθ-2}
    //   β ξ₀ f'  ~ -β ξ₀ A θ s^{θ-1}       (ξ-derivative)
    //   ξ₀^σ f^q ~ ξ₀^σ A^q s^{qθ}
    // with mθ-2 = θ-1 = qθ when m+q = 2.
    let diffusion = a.powf(m) * m * th * (m * th - 1.0);
    let drift = e.beta * xi0 * a * th;
    let absorption = xi0.powf(p.sigma) * a.powf(q);
    let res = diffusion + drift - absorption;
    Some(res.abs() / absorption)
}
