//! Forward integration of the profile equation in the variable `F = f^m`,
//!
//! ```text
//! F'' = -((N-1)/ξ) F' - α F^{1/m} + (β/m) ξ F^{(1-m)/m} F' + ξ^σ F^{q/m},
//! F(0) = 1, F'(0) = 0,
//! ```
//!
//! with the events that classify a trial `β`: the profile either reaches zero
//! (contact), or stops decreasing first (slope sign change).

use serde::Serialize;

use crate::dop853::{DenseStep, Dop853, State, StepOutcome};
use crate::model::{Exponents, Params};

/// Solver and event settings for one profile integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegratorOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Launch point of the series start.
    pub delta0: f64,
    /// Contact threshold in `f` units.
    pub contact_eps: f64,
    /// Contact threshold on the linear gap `F/|F'|` relative to `ξ`. A
    /// transversal crossing has `F ∝ ξ₀-ξ`, and for larger `m` the level
    /// `f = contact_eps` lies below the resolution of `F` itself.
    pub contact_gap: f64,
    /// Event localisation tolerance in `ξ`.
    pub event_tol: f64,
    /// Explicit integration horizon; `None` derives it from the limit profile.
    pub horizon: Option<f64>,
    pub max_steps: usize,
    /// Stored points per accepted step (taken from the continuous extension).
    pub refine: usize,
    /// Stop at the first zero of `F'`. Disabled only for diagnostics that
    /// need the profile beyond its minimum.
    pub stop_at_slope_change: bool,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            rel_tol: 1e-10,
            abs_tol: 1e-15,
            delta0: 1e-6,
            contact_eps: 1e-10,
            contact_gap: 1e-10,
            event_tol: 1e-12,
            horizon: None,
            max_steps: 2_000_000,
            refine: 8,
            stop_at_slope_change: true,
        }
    }
}

impl IntegratorOptions {
    /// The same options with both tolerances multiplied by `factor`
    /// (relative tolerance floored at a few ulps).
    pub fn tightened(&self, factor: f64) -> Self {
        let mut o = *self;
        o.rel_tol = (o.rel_tol * factor).max(4.0 * f64::EPSILON);
        o.abs_tol *= factor;
        o
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassifyTolerances {
    /// `|F'|` at contact below `slope_tol · ξ₀^σ` counts as tangential.
    pub slope_tol: f64,
    /// A turning point with `f` below this floor is indistinguishable from a
    /// tangential contact.
    pub b_floor: f64,
}

impl Default for ClassifyTolerances {
    fn default() -> Self {
        ClassifyTolerances {
            slope_tol: 1e-4,
            b_floor: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Classification {
    ClassA,
    ClassC,
    CandidateB,
    Undetermined,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Classification::ClassA => "ClassA",
            Classification::ClassC => "ClassC",
            Classification::CandidateB => "CandidateB",
            Classification::Undetermined => "Undetermined",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum StopReason {
    ContactZero,
    SlopeSignChange,
    HorizonReached,
    StepFailure,
}

/// Which side of the target exponent a trial profile lies on, read off the
/// event that stopped it: reaching zero means `β` is too large, turning
/// upward first means it is too small.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Contact,
    Turn,
    Unknown,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct IntegrationStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evals: usize,
}

/// A numerically integrated profile, stored as `(ξ, F, F')` triples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileSolution {
    pub params: Params,
    pub exps: Exponents,
    /// Strictly increasing `ξ`, starting at the launch point.
    pub grid: Vec<f64>,
    /// `F = f^m` at each grid point.
    pub fm: Vec<f64>,
    /// `F' = (f^m)'` at each grid point.
    pub dfm: Vec<f64>,
    /// Distance to the interface `ξ₀ - ξ`, when it is known more precisely
    /// than the subtraction (interface-completed profiles carry it exactly).
    pub gaps: Option<Vec<f64>>,
    /// `ξ` where a forward piece was joined to an inward one; `F'` may jump
    /// there by the amount reported with the completion.
    pub matched_at: Option<f64>,
    pub xi0: Option<f64>,
    pub xi1: Option<f64>,
    pub xi_max: f64,
    pub classification: Classification,
    pub stop_reason: StopReason,
    /// `f(0)`; 1 for integrated profiles, `a` for rescaled family members.
    pub amplitude: f64,
    pub stats: IntegrationStats,
}

impl ProfileSolution {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// `f = F^{1/m}` at grid point `i`.
    pub fn f(&self, i: usize) -> f64 {
        self.fm[i].max(0.0).powf(1.0 / self.params.m)
    }

    /// `f' = F' / (m F^{(m-1)/m})` at grid point `i`.
    pub fn fprime(&self, i: usize) -> f64 {
        let f = self.f(i);
        if f == 0.0 {
            return 0.0;
        }
        self.dfm[i] * f / (self.params.m * self.fm[i])
    }

    pub fn f_values(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.f(i)).collect()
    }

    pub fn fprime_values(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.fprime(i)).collect()
    }

    /// Distance `ξ₀ - ξ` at grid point `i`, if the interface is known.
    pub fn gap(&self, i: usize) -> Option<f64> {
        match (&self.gaps, self.xi0) {
            (Some(g), _) => Some(g[i]),
            (None, Some(x0)) => Some(x0 - self.grid[i]),
            _ => None,
        }
    }

    pub fn side(&self) -> Side {
        match self.stop_reason {
            StopReason::ContactZero => Side::Contact,
            StopReason::SlopeSignChange => Side::Turn,
            _ => Side::Unknown,
        }
    }

    /// `F''` at grid point `i`, read off the profile equation.
    pub fn d2fm(&self, i: usize) -> f64 {
        let p = &self.params;
        let e = &self.exps;
        let xi = self.grid[i];
        let f = self.f(i);
        -(p.nf() - 1.0) / xi * self.dfm[i] - e.alpha * f + e.beta * xi * self.fprime(i) + xi.powf(p.sigma) * f.powf(p.q)
    }

    /// `(F, F')` at `ξ` from piecewise quintic Hermite interpolation of the
    /// stored `F`, `F'` and the `F''` implied by the equation. Below the
    /// launch point the segment starts from the regular origin
    /// `(f(0)^m, 0, -α f(0)/N)`; past the last stored point the profile is
    /// continued linearly and clipped at zero. `None` beyond `ξ_max` for
    /// profiles without an interface.
    pub fn fm_at(&self, xi: f64) -> Option<(f64, f64)> {
        let n = self.len();
        if n == 0 || xi < 0.0 || !xi.is_finite() {
            return None;
        }
        if xi < self.grid[0] {
            let a = self.amplitude;
            let left = (a.powf(self.params.m), 0.0, -self.exps.alpha * a / self.params.nf());
            let right = (self.fm[0], self.dfm[0], self.d2fm(0));
            return Some(hermite5(0.0, self.grid[0], left, right, xi));
        }
        let last = n - 1;
        if xi >= self.grid[last] {
            if xi == self.grid[last] {
                return Some((self.fm[last], self.dfm[last]));
            }
            let x0 = self.xi0?;
            if xi >= x0 {
                return Some((0.0, 0.0));
            }
            let v = self.fm[last] + self.dfm[last] * (xi - self.grid[last]);
            return Some((v.max(0.0), self.dfm[last]));
        }
        let j = self.grid.partition_point(|&g| g <= xi) - 1;
        let left = (self.fm[j], self.dfm[j], self.d2fm(j));
        let right = (self.fm[j + 1], self.dfm[j + 1], self.d2fm(j + 1));
        Some(hermite5(self.grid[j], self.grid[j + 1], left, right, xi))
    }

    /// `f(ξ)`, zero at and beyond the interface.
    pub fn f_at(&self, xi: f64) -> Option<f64> {
        self.fm_at(xi)
            .map(|(v, _)| v.max(0.0).powf(1.0 / self.params.m))
    }
}

/// Quintic Hermite segment through `(value, slope, curvature)` at both ends.
/// Where the data are monotone but the quintic leaves the range of the end
/// values, the segment falls back to the limited cubic.
fn hermite5(x0: f64, x1: f64, left: (f64, f64, f64), right: (f64, f64, f64), x: f64) -> (f64, f64) {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let (t2, t3) = (t * t, t * t * t);
    let (t4, t5) = (t3 * t, t3 * t2);
    let (y0, d0, c0) = left;
    let (y1, d1, c1) = right;
    let y = (1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5) * y0
        + h * (t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5) * d0
        + h * h * 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5) * c0
        + (10.0 * t3 - 15.0 * t4 + 6.0 * t5) * y1
        + h * (-4.0 * t3 + 7.0 * t4 - 3.0 * t5) * d1
        + h * h * 0.5 * (t3 - 2.0 * t4 + t5) * c1;
    let delta = y1 - y0;
    let monotone = delta != 0.0 && d0 * delta >= 0.0 && d1 * delta >= 0.0;
    if monotone && (y - y0.min(y1) < 0.0 || y - y0.max(y1) > 0.0) {
        return hermite(x0, x1, y0, y1, d0, d1, x);
    }
    let dy = ((-30.0 * t2 + 60.0 * t3 - 30.0 * t4) * (y0 - y1)) / h
        + (1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4) * d0
        + h * 0.5 * (2.0 * t - 9.0 * t2 + 12.0 * t3 - 5.0 * t4) * c0
        + (-12.0 * t2 + 28.0 * t3 - 15.0 * t4) * d1
        + h * 0.5 * (3.0 * t2 - 8.0 * t3 + 5.0 * t4) * c1;
    (y, dy)
}

/// Cubic Hermite segment with the Fritsch–Carlson slope limiter applied only
/// when the data are monotone but the exact slopes would overshoot.
fn hermite(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, x: f64) -> (f64, f64) {
    let h = x1 - x0;
    let delta = (y1 - y0) / h;
    let (mut d0, mut d1) = (d0, d1);
    if delta != 0.0 && d0 * delta > 0.0 && d1 * delta > 0.0 {
        let a = d0 / delta;
        let b = d1 / delta;
        let r = a * a + b * b;
        if r > 9.0 {
            let tau = 3.0 / r.sqrt();
            d0 = tau * a * delta;
            d1 = tau * b * delta;
        }
    }
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    let y = h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1;
    let dh00 = (6.0 * t2 - 6.0 * t) / h;
    let dh10 = 3.0 * t2 - 4.0 * t + 1.0;
    let dh01 = (-6.0 * t2 + 6.0 * t) / h;
    let dh11 = 3.0 * t2 - 2.0 * t;
    let dy = dh00 * y0 + dh10 * d0 + dh01 * y1 + dh11 * d1;
    (y, dy)
}

/// `F''(0) = -2β/((m-1)N)`, forced by regularity at the origin.
pub fn launch_curvature(p: &Params, e: &Exponents) -> f64 {
    -e.alpha / p.nf()
}

/// State at `ξ = δ₀` from the expansion
/// `F = 1 + F''(0) ξ²/2 + ξ^{σ+2}/((σ+2)(σ+N)) + …`.
///
/// The second term is the leading contribution of the weighted absorption;
/// without it the launch slope carries a relative error of order `δ₀^σ`,
/// which is large when `σ` is small.
pub fn series_start(p: &Params, e: &Exponents, delta0: f64) -> (f64, f64, f64) {
    let c2 = launch_curvature(p, e);
    let s = p.sigma;
    let n = p.nf();
    let w = delta0.powf(s + 1.0) / (s + n);
    let fm = 1.0 + 0.5 * c2 * delta0 * delta0 + w * delta0 / (s + 2.0);
    let dfm = c2 * delta0 + w;
    (delta0, fm, dfm)
}

/// Right-hand side of the first-order system in `ξ` for `(F, F')`.
pub(crate) fn forward_rhs(p: Params, e: Exponents) -> impl Fn(f64, &State) -> State {
    let m = p.m;
    let inv_m = 1.0 / m;
    let q_m = p.q / m;
    let nm1 = p.nf() - 1.0;
    move |xi: f64, y: &State| {
        let big = y[0];
        if big <= 0.0 {
            return [f64::NAN, f64::NAN];
        }
        let f = big.powf(inv_m);
        let fq = big.powf(q_m);
        let fprime = y[1] * f / (m * big);
        let d2 = -nm1 / xi * y[1] - e.alpha * f + e.beta * xi * fprime + xi.powf(p.sigma) * fq;
        [y[1], d2]
    }
}

/// Right-hand side in the gap variable `s = ξ₀ - ξ` for `(F, F_s)`.
pub(crate) fn gap_rhs(p: Params, e: Exponents, xi0: f64) -> impl Fn(f64, &State) -> State {
    let m = p.m;
    let inv_m = 1.0 / m;
    let q_m = p.q / m;
    let nm1 = p.nf() - 1.0;
    move |s: f64, y: &State| {
        let big = y[0];
        if big <= 0.0 {
            return [f64::NAN, f64::NAN];
        }
        let xi = xi0 - s;
        let f = big.powf(inv_m);
        let fq = big.powf(q_m);
        // f' in ξ is -F_s/(m F^{(m-1)/m}).
        let fprime = -y[1] * f / (m * big);
        let d2 = nm1 / xi * y[1] - e.alpha * f + e.beta * xi * fprime + xi.powf(p.sigma) * fq;
        [y[1], d2]
    }
}

pub(crate) enum Control {
    Continue,
    Stop,
}

pub(crate) enum MarchEnd {
    Stopped,
    Reached,
    Failed,
    TooManySteps,
}

/// Drive the stepper from `t0` towards `t_end`, handing every accepted step
/// to `on_step`.
pub(crate) fn march<R, C>(
    rhs: R,
    t0: f64,
    y0: State,
    t_end: f64,
    rtol: f64,
    atol: f64,
    max_steps: usize,
    stats: &mut IntegrationStats,
    mut on_step: C,
) -> MarchEnd
where
    R: Fn(f64, &State) -> State,
    C: FnMut(&DenseStep) -> Control,
{
    let span = t_end - t0;
    let mut st = Dop853::new(rhs, t0, y0, rtol, atol, span);
    let mut end = MarchEnd::Reached;
    while st.t < t_end {
        if stats.accepted + stats.rejected >= max_steps {
            end = MarchEnd::TooManySteps;
            break;
        }
        let remaining = t_end - st.t;
        match st.step(remaining) {
            StepOutcome::Accepted(d) => {
                stats.accepted += 1;
                if let Control::Stop = on_step(&d) {
                    end = MarchEnd::Stopped;
                    break;
                }
                if remaining - d.h <= 4.0 * f64::EPSILON * t_end.abs() {
                    break;
                }
            }
            StepOutcome::Rejected => stats.rejected += 1,
            StepOutcome::Failed => {
                end = MarchEnd::Failed;
                break;
            }
        }
    }
    stats.evals += st.evals;
    end
}

/// Smallest point of `[a, b]` (to `tol`) at which `cond` holds, given that it
/// fails at `a` and holds at `b`.
fn localize(d: &DenseStep, a: f64, b: f64, tol: f64, cond: impl Fn(f64, &State) -> bool) -> f64 {
    let (mut lo, mut hi) = (a, b);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if cond(mid, &d.eval(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Integrate the profile for a fixed `β` until contact, a slope sign change,
/// the horizon, or a solver failure.
///
/// ```
/// use eternal_profile::integrator::{integrate_profile, IntegratorOptions, StopReason};
/// use eternal_profile::model::{exponents_from_beta, make_params};
/// let p = make_params(2.0, 0.5, 1).unwrap();
/// let fast = integrate_profile(&p, &exponents_from_beta(&p, 10.0).unwrap(), &IntegratorOptions::default());
/// assert_eq!(fast.stop_reason, StopReason::ContactZero);
/// let slow = integrate_profile(&p, &exponents_from_beta(&p, 0.01).unwrap(), &IntegratorOptions::default());
/// assert_eq!(slow.stop_reason, StopReason::SlopeSignChange);
/// ```
pub fn integrate_profile(p: &Params, e: &Exponents, opts: &IntegratorOptions) -> ProfileSolution {
    let horizon = opts.horizon.unwrap_or_else(|| default_horizon(p));
    let (x0, f0, d0) = series_start(p, e, opts.delta0);
    let mut sol = ProfileSolution {
        params: *p,
        exps: *e,
        grid: vec![x0],
        fm: vec![f0],
        dfm: vec![d0],
        gaps: None,
        matched_at: None,
        xi0: None,
        xi1: None,
        xi_max: x0,
        classification: Classification::Undetermined,
        stop_reason: StopReason::HorizonReached,
        amplitude: 1.0,
        stats: IntegrationStats::default(),
    };
    if d0 >= 0.0 && opts.stop_at_slope_change {
        // The weight term already dominates at the launch point.
        sol.xi1 = Some(x0);
        sol.stop_reason = StopReason::SlopeSignChange;
        sol.classification = classify_beta(&sol, &ClassifyTolerances::default());
        return sol;
    }

    let m = p.m;
    let contact = |xi: f64, y: &State| -> bool {
        if y[0] <= 0.0 {
            return true;
        }
        let f = y[0].powf(1.0 / m);
        f <= opts.contact_eps || (y[1] < 0.0 && y[0] <= opts.contact_gap * xi * (-y[1]))
    };
    let slope = |_xi: f64, y: &State| -> bool { opts.stop_at_slope_change && y[1] >= 0.0 };
    let refine = opts.refine.max(1);

    let mut grid = Vec::new();
    let mut fm = Vec::new();
    let mut dfm = Vec::new();
    let mut stop: Option<StopReason> = None;
    let mut stats = IntegrationStats::default();
    let end = march(
        forward_rhs(*p, *e),
        x0,
        [f0, d0],
        horizon,
        opts.rel_tol,
        opts.abs_tol,
        opts.max_steps,
        &mut stats,
        |d| {
            let t1 = d.t1();
            let y1 = d.eval_unit(1.0);
            let hit_c = contact(t1, &y1);
            let hit_s = slope(t1, &y1);
            let t_stop = if hit_c || hit_s {
                let tol = opts.event_tol * t1.abs().max(1.0);
                Some(localize(d, d.t0, t1, tol, |t, y| contact(t, y) || slope(t, y)))
            } else {
                None
            };
            let t_lim = t_stop.unwrap_or(t1);
            for j in 1..refine {
                let t = d.t0 + d.h * j as f64 / refine as f64;
                if t >= t_lim {
                    break;
                }
                let y = d.eval(t);
                grid.push(t);
                fm.push(y[0]);
                dfm.push(y[1]);
            }
            let y = if t_stop.is_some() { d.eval(t_lim) } else { y1 };
            if y[0] > 0.0 {
                grid.push(t_lim);
                fm.push(y[0]);
                dfm.push(y[1]);
            }
            match t_stop {
                Some(t) => {
                    let yc = d.eval(t);
                    stop = Some(if contact(t, &yc) {
                        StopReason::ContactZero
                    } else {
                        StopReason::SlopeSignChange
                    });
                    Control::Stop
                }
                None => Control::Continue,
            }
        },
    );
    sol.grid.extend(grid);
    sol.fm.extend(fm);
    sol.dfm.extend(dfm);
    sol.stats = stats;
    sol.stop_reason = match end {
        MarchEnd::Stopped => stop.unwrap_or(StopReason::HorizonReached),
        MarchEnd::Reached => StopReason::HorizonReached,
        MarchEnd::Failed | MarchEnd::TooManySteps => StopReason::StepFailure,
    };
    let last = sol.len() - 1;
    sol.xi_max = sol.grid[last];
    match sol.stop_reason {
        StopReason::ContactZero => {
            let (big, slope) = (sol.fm[last], sol.dfm[last]);
            let extra = if slope < 0.0 { big / -slope } else { 0.0 };
            let x0 = sol.grid[last] + extra;
            sol.xi0 = Some(x0);
            sol.xi1 = Some(x0);
        }
        StopReason::SlopeSignChange => sol.xi1 = Some(sol.grid[last]),
        _ => {}
    }
    sol.classification = classify_beta(&sol, &ClassifyTolerances::default());
    sol
}

/// Map the stopping event of a profile to its class.
pub fn classify_beta(sol: &ProfileSolution, tol: &ClassifyTolerances) -> Classification {
    let last = match sol.len() {
        0 => return Classification::Undetermined,
        n => n - 1,
    };
    match sol.stop_reason {
        StopReason::ContactZero => {
            let x0 = sol.xi0.unwrap_or(sol.grid[last]);
            let scale = x0.powf(sol.params.sigma);
            if sol.dfm[last].abs() <= tol.slope_tol * scale {
                Classification::CandidateB
            } else {
                Classification::ClassA
            }
        }
        StopReason::SlopeSignChange => {
            if sol.f(last) <= tol.b_floor {
                Classification::CandidateB
            } else {
                Classification::ClassC
            }
        }
        StopReason::HorizonReached | StopReason::StepFailure => Classification::Undetermined,
    }
}

/// `F'(ξ₀)` from the integral identity
/// `ξ^{N-1} F'(ξ) + β ξ^N f(ξ) = ∫₀^ξ ζ^{N-1} [ζ^σ f^q - (α+Nβ) f] dζ`,
/// evaluated with the trapezoidal rule on the stored grid up to the last
/// resolved point (the boundary term there is `O(f)` and is kept).
pub fn interface_slope_integral(sol: &ProfileSolution) -> Result<f64, crate::Error> {
    sol.xi0.ok_or(crate::Error::MissingInterface)?;
    let p = &sol.params;
    let e = &sol.exps;
    let n = p.nf();
    let integrand = |xi: f64, f: f64| -> f64 {
        xi.powf(n - 1.0) * (xi.powf(p.sigma) * f.powf(p.q) - (e.alpha + n * e.beta) * f)
    };
    // Launch segment [0, δ₀] with f ≈ 1.
    let d0 = sol.grid[0];
    let mut total = integrand(d0, sol.f(0)) * d0 / 2.0;
    let mut prev = (d0, integrand(d0, sol.f(0)));
    for i in 1..sol.len() {
        let xi = sol.grid[i];
        let g = integrand(xi, sol.f(i));
        let h = match &sol.gaps {
            Some(gs) => gs[i - 1] - gs[i],
            None => xi - prev.0,
        };
        total += 0.5 * h * (prev.1 + g);
        prev = (xi, g);
    }
    let last = sol.len() - 1;
    let xl = sol.grid[last];
    let boundary = e.beta * xl.powf(n) * sol.f(last);
    // Between the last point and ξ₀ the integrand is O(f) and is dropped.
    Ok((total - boundary) / xl.powf(n - 1.0))
}

/// Solution of the `β → 0` limit problem
/// `H'' + ((N-1)/ξ) H' = ξ^σ H^{q/m}`, `H(0) = 1`, `H'(0) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitProfile {
    pub grid: Vec<f64>,
    pub h_values: Vec<f64>,
    pub hprime_values: Vec<f64>,
    /// Set when `H` exceeded the overflow guard before the horizon.
    pub blow_up_at: Option<f64>,
}

impl LimitProfile {
    pub fn h_at(&self, xi: f64) -> Option<f64> {
        let n = self.grid.len();
        if xi < 0.0 || xi > self.grid[n - 1] {
            return None;
        }
        if xi < self.grid[0] {
            return Some(hermite(0.0, self.grid[0], 1.0, self.h_values[0], 0.0, self.hprime_values[0], xi).0);
        }
        let j = (self.grid.partition_point(|&g| g <= xi) - 1).min(n - 2);
        Some(
            hermite(
                self.grid[j],
                self.grid[j + 1],
                self.h_values[j],
                self.h_values[j + 1],
                self.hprime_values[j],
                self.hprime_values[j + 1],
                xi,
            )
            .0,
        )
    }
}

const LIMIT_OVERFLOW: f64 = 1e150;

pub fn integrate_limit_profile(p: &Params, horizon: f64) -> Result<LimitProfile, crate::Error> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(crate::Error::Domain(format!("horizon must be positive, got {horizon}")));
    }
    let opts = IntegratorOptions::default();
    let s = p.sigma;
    let n = p.nf();
    let nm1 = n - 1.0;
    let q_m = p.q / p.m;
    let d = opts.delta0.min(horizon / 2.0);
    let w = d.powf(s + 1.0) / (s + n);
    let y0 = [1.0 + w * d / (s + 2.0), w];
    let rhs = move |xi: f64, y: &State| -> State {
        if y[0] <= 0.0 {
            return [f64::NAN, f64::NAN];
        }
        [y[1], -nm1 / xi * y[1] + xi.powf(s) * y[0].powf(q_m)]
    };
    let mut lp = LimitProfile {
        grid: vec![d],
        h_values: vec![y0[0]],
        hprime_values: vec![y0[1]],
        blow_up_at: None,
    };
    let mut stats = IntegrationStats::default();
    let refine = opts.refine;
    let end = march(rhs, d, y0, horizon, opts.rel_tol, 0.0, opts.max_steps, &mut stats, |st| {
        for j in 1..=refine {
            let t = st.t0 + st.h * j as f64 / refine as f64;
            let y = if j == refine { st.eval_unit(1.0) } else { st.eval(t) };
            lp.grid.push(t);
            lp.h_values.push(y[0]);
            lp.hprime_values.push(y[1]);
            if y[0] > LIMIT_OVERFLOW {
                lp.blow_up_at = Some(t);
                return Control::Stop;
            }
        }
        Control::Continue
    });
    if let MarchEnd::Failed | MarchEnd::TooManySteps = end {
        if lp.blow_up_at.is_none() {
            lp.blow_up_at = lp.grid.last().copied();
        }
    }
    Ok(lp)
}

/// `ξ` at which the limit profile doubles; the natural length scale of the
/// problem in the absence of the self-similar drift.
pub fn limit_scale(p: &Params) -> f64 {
    // H ≥ 1 + ξ^{σ+2}/((σ+2)(σ+N)) so H = 2 is reached before this point.
    let bound = ((p.sigma + 2.0) * (p.sigma + p.nf())).powf(1.0 / (p.sigma + 2.0));
    let lp = match integrate_limit_profile(p, bound * 1.0001) {
        Ok(lp) => lp,
        Err(_) => return bound,
    };
    let k = lp.h_values.partition_point(|&h| h < 2.0);
    if k == 0 || k >= lp.grid.len() {
        return bound;
    }
    let (x0, x1) = (lp.grid[k - 1], lp.grid[k]);
    let (h0, h1) = (lp.h_values[k - 1], lp.h_values[k]);
    x0 + (2.0 - h0) * (x1 - x0) / (h1 - h0)
}

/// Horizon cap for forward integrations: fifty limit-profile length scales,
/// widened for small `β` where the turning point moves out.
pub fn default_horizon(p: &Params) -> f64 {
    50.0 * limit_scale(p)
}

/// States `(F, F')` of the forward profile at the given increasing points,
/// read from the continuous extension (no events are applied).
pub fn profile_states_at(
    p: &Params,
    e: &Exponents,
    opts: &IntegratorOptions,
    targets: &[f64],
) -> Vec<(f64, f64)> {
    let (x0, f0, d0) = series_start(p, e, opts.delta0);
    let mut out = Vec::with_capacity(targets.len());
    let Some(&t_end) = targets.last() else {
        return out;
    };
    let mut next = 0;
    while next < targets.len() && targets[next] <= x0 {
        out.push((f0, d0));
        next += 1;
    }
    let mut stats = IntegrationStats::default();
    march(
        forward_rhs(*p, *e),
        x0,
        [f0, d0],
        t_end,
        opts.rel_tol,
        opts.abs_tol,
        opts.max_steps,
        &mut stats,
        |d| {
            while next < targets.len() && targets[next] <= d.t1() {
                let y = if targets[next] == d.t1() {
                    d.eval_unit(1.0)
                } else {
                    d.eval(targets[next])
                };
                out.push((y[0], y[1]));
                next += 1;
            }
            Control::Continue
        },
    );
    out
}

/// Measure `F''(0)` from the integrated solution: `F'(ξ)/ξ` is sampled at
/// `h, 2h, 4h, 8h` and extrapolated to `ξ = 0` eliminating the known
/// correction powers `ξ^σ, ξ², ξ^{σ+2}, …` (generalised Richardson).
pub fn measure_launch_curvature(p: &Params, e: &Exponents, opts: &IntegratorOptions, h: f64) -> f64 {
    let s = p.sigma;
    let mut powers: Vec<f64> = Vec::new();
    for c in [s, 2.0, s + 2.0, 2.0 * s + 2.0, 4.0] {
        if powers.iter().all(|&q| (q - c).abs() > 0.05) {
            powers.push(c);
        }
    }
    powers.sort_by(|a, b| a.partial_cmp(b).unwrap());
    powers.truncate(3);
    let k = powers.len() + 1;
    let xs: Vec<f64> = (0..k).map(|j| h * 2f64.powi(j as i32)).collect();
    let states = profile_states_at(p, e, opts, &xs);
    // Scale the unknowns by h^power to keep the system well conditioned.
    let mut a = vec![vec![0.0; k]; k];
    let mut b = vec![0.0; k];
    for (r, (&x, st)) in xs.iter().zip(&states).enumerate() {
        a[r][0] = 1.0;
        for (c, &pw) in powers.iter().enumerate() {
            a[r][c + 1] = (x / h).powf(pw);
        }
        b[r] = st.1 / x;
    }
    solve_dense(a, b)[0]
}

/// Gaussian elimination with partial pivoting for the small systems used in
/// extrapolation and fitting.
pub(crate) fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let factor = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= factor * a[col][c];
            }
            b[r] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let mut acc = b[r];
        for c in r + 1..n {
            acc -= a[r][c] * x[c];
        }
        x[r] = acc / a[r][r];
    }
    x
}

/// One integration in the gap variable `s = ξ₀ - ξ` from `s_start` to
/// `s_end`, returning the stored `(s, F, F_s)` samples (the start included).
pub(crate) struct GapSegment {
    pub s: Vec<f64>,
    pub fm: Vec<f64>,
    pub dfm_s: Vec<f64>,
    pub reached: bool,
    pub stats: IntegrationStats,
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn integrate_gap_segment(
    p: &Params,
    e: &Exponents,
    xi0: f64,
    s_start: f64,
    y0: State,
    s_end: f64,
    opts: &IntegratorOptions,
    record: bool,
) -> GapSegment {
    let mut seg = GapSegment {
        s: vec![s_start],
        fm: vec![y0[0]],
        dfm_s: vec![y0[1]],
        reached: false,
        stats: IntegrationStats::default(),
    };
    let refine = opts.refine.max(1);
    let mut last = (s_start, y0);
    let mut stats = IntegrationStats::default();
    let end = march(
        gap_rhs(*p, *e, xi0),
        s_start,
        y0,
        s_end,
        opts.rel_tol,
        0.0,
        opts.max_steps,
        &mut stats,
        |d| {
            if record {
                for j in 1..refine {
                    let t = d.t0 + d.h * j as f64 / refine as f64;
                    let y = d.eval(t);
                    seg.s.push(t);
                    seg.fm.push(y[0]);
                    seg.dfm_s.push(y[1]);
                }
            }
            let y = d.eval_unit(1.0);
            last = (d.t1(), y);
            if record {
                seg.s.push(d.t1());
                seg.fm.push(y[0]);
                seg.dfm_s.push(y[1]);
            }
            Control::Continue
        },
    );
    if !record {
        seg.s.push(last.0);
        seg.fm.push(last.1[0]);
        seg.dfm_s.push(last.1[1]);
    }
    seg.reached = matches!(end, MarchEnd::Reached);
    seg.stats = stats;
    seg
}
