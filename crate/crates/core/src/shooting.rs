//! Bracketing and bisection over `β`, and completion of the target profile
//! up to its interface.
//!
//! Near the target exponent the forward problem is unstable close to the
//! interface: the drift term `(β/m) ξ F^{(1-m)/m} F'` amplifies any deviation
//! from the tangential solution at a rate that blows up as `F → 0`. Forward
//! integration therefore decides on which side of `β*` a trial exponent lies
//! very sharply, but cannot itself follow the tangential profile into the
//! interface. [`complete_interface`] supplies the missing piece by
//! integrating from the interface inwards, where the same mode decays, and
//! matching the two pieces.

use serde::Serialize;

use crate::asymptotics::predict_expansion;
use crate::error::{Error, Result};
use crate::integrator::{
    classify_beta, integrate_gap_segment, integrate_profile, Classification, ClassifyTolerances,
    IntegrationStats, IntegratorOptions, ProfileSolution, Side, StopReason,
};
use crate::model::{exponents_from_beta, InterfaceCase, Params};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompletionOptions {
    /// Matching level: the forward piece is kept while `f > f_match`.
    ///
    /// Any residual error in `β` is amplified by the forward march as `f`
    /// falls (sharply so for `m + q > 2`); matching at half height keeps the
    /// slope jump near the size of that error.
    pub f_match: f64,
    /// Level of `f` at which the inward integration is seeded from the
    /// leading interface expansion; `None` picks a per-case default.
    pub seed_f: Option<f64>,
    /// Points closer to the interface than `seed_trim` seed gaps are dropped;
    /// `None` picks a per-case default.
    pub seed_trim: Option<f64>,
    pub rel_tol: f64,
    pub max_steps: usize,
    /// Stored points per accepted inward step.
    pub refine: usize,
}

impl Default for CompletionOptions {
    fn default() -> Self {
        CompletionOptions {
            f_match: 0.5,
            seed_f: None,
            seed_trim: None,
            rel_tol: 1e-12,
            max_steps: 4_000_000,
            refine: 4,
        }
    }
}

impl CompletionOptions {
    /// Default seed level. The inward problem is stiff for `m + q > 2`
    /// (the decay rate grows like `f^{1-m}`), which limits how deep an
    /// explicit method can seed at reasonable cost.
    pub fn seed_level(&self, case: InterfaceCase) -> f64 {
        self.seed_f.unwrap_or(match case {
            InterfaceCase::SubCritical => 1e-24,
            InterfaceCase::Critical => 1e-14,
            InterfaceCase::SuperCritical => 1e-10,
        })
    }

    /// Default trim factor. Below `m + q = 2` the seeding error is carried
    /// by a slowly decaying mode and needs two decades to die out; above it
    /// the same stiffness that makes the march expensive damps the error
    /// within a fraction of the seed gap.
    pub fn trim_factor(&self, case: InterfaceCase) -> f64 {
        self.seed_trim.unwrap_or(match case {
            InterfaceCase::SuperCritical => 10.0,
            _ => 100.0,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShootingOptions {
    /// Relative bracket width at which bisection stops.
    pub beta_tol: f64,
    pub integrator: IntegratorOptions,
    pub classify: ClassifyTolerances,
    /// Number of ×`tier_factor` tolerance tightenings tried on an
    /// unclassifiable midpoint.
    pub tiers: usize,
    pub tier_factor: f64,
    pub completion: CompletionOptions,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        ShootingOptions {
            beta_tol: 1e-8,
            integrator: IntegratorOptions::default(),
            classify: ClassifyTolerances::default(),
            tiers: 3,
            tier_factor: 1e-2,
            completion: CompletionOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistoryEntry {
    pub beta: f64,
    pub classification: Classification,
    /// `true` when the profile reached zero (the `β > β*` side).
    pub contact: bool,
    pub xi0: Option<f64>,
    pub xi1: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompletionReport {
    pub xi0: f64,
    /// Matching point and the values of `f` there.
    pub xi_match: f64,
    pub f_match: f64,
    /// Relative jump of `F'` across the matching point; zero for an exact
    /// tangential solution.
    pub slope_jump: f64,
    pub seed_f: f64,
    pub seed_gap: f64,
    /// Gap of the last retained point.
    pub end_gap: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShootingResult {
    pub beta_star: f64,
    pub alpha_star: f64,
    pub bracket_lo: f64,
    pub bracket_hi: f64,
    pub iterations: usize,
    /// Forward piece joined with the interface completion.
    pub final_profile: ProfileSolution,
    /// Plain forward integration at `beta_star`.
    pub forward_profile: ProfileSolution,
    pub completion: CompletionReport,
    pub history: Vec<HistoryEntry>,
}

/// Integrate at `beta` and read off the side, tightening tolerances on
/// unclassifiable outcomes.
pub fn probe_beta(p: &Params, beta: f64, opts: &ShootingOptions) -> Result<(ProfileSolution, Side)> {
    let e = exponents_from_beta(p, beta)?;
    let mut iopts = opts.integrator;
    let mut last = None;
    for _ in 0..=opts.tiers {
        let mut sol = integrate_profile(p, &e, &iopts);
        sol.classification = classify_beta(&sol, &opts.classify);
        let side = sol.side();
        if side != Side::Unknown {
            return Ok((sol, side));
        }
        last = Some(sol.stop_reason);
        iopts = iopts.tightened(opts.tier_factor);
    }
    Err(Error::Undetermined {
        beta,
        detail: format!("stop reason {:?} at the tightest tier", last.unwrap()),
    })
}

fn entry(beta: f64, sol: &ProfileSolution, side: Side) -> HistoryEntry {
    HistoryEntry {
        beta,
        classification: sol.classification,
        contact: side == Side::Contact,
        xi0: sol.xi0,
        xi1: sol.xi1,
    }
}

/// Geometric scan from `β = 1` (doubling up, halving down) for an adjacent
/// pair turning below and reaching zero above.
///
/// ```
/// use eternal_profile::model::make_params;
/// use eternal_profile::shooting::{bracket_beta, ShootingOptions};
/// let p = make_params(2.0, 0.5, 1).unwrap();
/// let (lo, hi) = bracket_beta(&p, &ShootingOptions::default()).unwrap();
/// assert!(lo < hi && hi <= 2.0 * lo);
/// ```
pub fn bracket_beta(p: &Params, opts: &ShootingOptions) -> Result<(f64, f64)> {
    bracket_with_history(p, opts, &mut Vec::new())
}

fn bracket_with_history(
    p: &Params,
    opts: &ShootingOptions,
    history: &mut Vec<HistoryEntry>,
) -> Result<(f64, f64)> {
    let (lo_lim, hi_lim) = (2f64.powi(-40), 2f64.powi(40));
    let (sol, side) = probe_beta(p, 1.0, opts)?;
    history.push(entry(1.0, &sol, side));
    let up = side == Side::Turn;
    let mut prev = 1.0;
    let mut beta = if up { 2.0 } else { 0.5 };
    while (lo_lim..=hi_lim).contains(&beta) {
        let (sol, s) = probe_beta(p, beta, opts)?;
        history.push(entry(beta, &sol, s));
        if up && s == Side::Contact {
            return Ok((prev, beta));
        }
        if !up && s == Side::Turn {
            return Ok((beta, prev));
        }
        prev = beta;
        beta = if up { beta * 2.0 } else { beta / 2.0 };
    }
    Err(Error::BracketFailure(format!(
        "every probe {}",
        if up { "turned before reaching zero" } else { "reached zero" }
    )))
}

/// Bisect a bracket `(β_lo, β_hi)` (turning below, contact above) down to a
/// relative width `opts.beta_tol`, then complete the profile at the
/// midpoint up to its interface.
pub fn bisect_beta(p: &Params, bracket: (f64, f64), opts: &ShootingOptions) -> Result<ShootingResult> {
    bisect_with_history(p, bracket, opts, Vec::new())
}

fn bisect_with_history(
    p: &Params,
    bracket: (f64, f64),
    opts: &ShootingOptions,
    mut history: Vec<HistoryEntry>,
) -> Result<ShootingResult> {
    let (mut lo, mut hi) = bracket;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::Domain(format!("invalid bracket ({lo}, {hi})")));
    }
    let mut iterations = 0;
    while hi - lo > opts.beta_tol * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (sol, side) = probe_beta(p, mid, opts)?;
        history.push(entry(mid, &sol, side));
        match side {
            Side::Contact => hi = mid,
            Side::Turn => lo = mid,
            Side::Unknown => unreachable!("probe_beta never returns an unknown side"),
        }
        iterations += 1;
    }
    let beta_star = 0.5 * (lo + hi);
    let e = exponents_from_beta(p, beta_star)?;
    let (forward, _) = probe_beta(p, beta_star, opts)?;
    let (final_profile, completion) = complete_interface(&forward, &opts.completion, &opts.classify)?;
    Ok(ShootingResult {
        beta_star,
        alpha_star: e.alpha,
        bracket_lo: lo,
        bracket_hi: hi,
        iterations,
        final_profile,
        forward_profile: forward,
        completion,
        history,
    })
}

/// Bracket, bisect and complete in one call.
pub fn shoot(p: &Params, opts: &ShootingOptions) -> Result<ShootingResult> {
    let mut history = Vec::new();
    let bracket = bracket_with_history(p, opts, &mut history)?;
    bisect_with_history(p, bracket, opts, history)
}

struct Seeded {
    f_at_match: f64,
}

/// Seed the inward problem at level `seed_f` for a trial interface `xi0` and
/// integrate out to the matching gap `s_m`.
fn seed_state(p: &Params, e: &crate::model::Exponents, xi0: f64, seed_f: f64) -> (f64, [f64; 2]) {
    let ex = predict_expansion(p, e, xi0);
    let s0 = (seed_f / ex.amplitude).powf(1.0 / ex.theta);
    let (mut f, mut fs) = (
        ex.amplitude * s0.powf(ex.theta),
        ex.amplitude * ex.theta * s0.powf(ex.theta - 1.0),
    );
    if let (Some(c2), Some(e2)) = (ex.second_order_coeff, ex.second_order_exponent) {
        f -= c2 * s0.powf(e2);
        fs -= c2 * e2 * s0.powf(e2 - 1.0);
    }
    let m = p.m;
    let big = f.powf(m);
    (s0, [big, m * f.powf(m - 1.0) * fs])
}

fn shoot_inward(
    p: &Params,
    e: &crate::model::Exponents,
    xi0: f64,
    xi_m: f64,
    seed_f: f64,
    copts: &CompletionOptions,
    iopts: &IntegratorOptions,
    stats: &mut IntegrationStats,
) -> Option<Seeded> {
    let s_m = xi0 - xi_m;
    let (s0, y0) = seed_state(p, e, xi0, seed_f);
    if !(s0 > 0.0 && s_m > 10.0 * s0) {
        return None;
    }
    let mut o = *iopts;
    o.rel_tol = copts.rel_tol;
    o.max_steps = copts.max_steps;
    let seg = integrate_gap_segment(p, e, xi0, s0, y0, s_m, &o, false);
    stats.accepted += seg.stats.accepted;
    stats.rejected += seg.stats.rejected;
    stats.evals += seg.stats.evals;
    if !seg.reached {
        return None;
    }
    Some(Seeded {
        f_at_match: *seg.fm.last().unwrap(),
    })
}

/// Find `ξ₀` such that the inward solution seeded at level `seed_f` matches
/// `F` at `xi_m`: bracket by expanding steps, then Illinois false position.
#[allow(clippy::too_many_arguments)]
fn match_xi0(
    p: &Params,
    e: &crate::model::Exponents,
    xi_m: f64,
    target: f64,
    guess: f64,
    slope: f64,
    seed_f: f64,
    copts: &CompletionOptions,
    iopts: &IntegratorOptions,
    stats: &mut IntegrationStats,
    iterations: &mut usize,
) -> Result<f64> {
    let mut eval = |x0: f64| -> Option<f64> {
        *iterations += 1;
        shoot_inward(p, e, x0, xi_m, seed_f, copts, iopts, stats).map(|s| s.f_at_match - target)
    };
    let fail = |x: f64| Error::Completion(format!("inward integration failed at xi0 = {x}"));
    let ga = eval(guess).ok_or_else(|| fail(guess))?;
    if ga == 0.0 {
        return Ok(guess);
    }
    // F at the matching point grows with the gap ξ₀ - ξ_m, at a rate close
    // to |F'(ξ_m)|; overshoot that estimate a little so that the first step
    // usually brackets the root.
    let dir = if ga < 0.0 { 1.0 } else { -1.0 };
    let mut step = (1.5 * ga.abs() / slope).max(1e-14 * guess);
    let (mut a, mut g_a) = (guess, ga);
    let mut other = None;
    for _ in 0..80 {
        let b = a + dir * step;
        if b <= xi_m {
            step *= 0.5;
            continue;
        }
        match eval(b) {
            Some(g) if g.signum() != g_a.signum() => {
                other = Some((b, g));
                break;
            }
            Some(g) => {
                a = b;
                g_a = g;
                step *= 2.0;
            }
            None => step *= 0.5,
        }
    }
    let (b, g_b) = other.ok_or_else(|| Error::Completion("could not bracket the interface".into()))?;
    let (mut lo, mut glo, mut hi, mut ghi) = if g_a < 0.0 { (a, g_a, b, g_b) } else { (b, g_b, a, g_a) };
    let mut last_side = 0;
    for _ in 0..200 {
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
        let mut x = hi - ghi * (hi - lo) / (ghi - glo);
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
        let g = eval(x).ok_or_else(|| fail(x))?;
        if g == 0.0 {
            return Ok(x);
        }
        if g < 0.0 {
            lo = x;
            glo = g;
            if last_side == -1 {
                ghi *= 0.5;
            }
            last_side = -1;
        } else {
            hi = x;
            ghi = g;
            if last_side == 1 {
                glo *= 0.5;
            }
            last_side = 1;
        }
        if g.abs() <= 1e-15 * target.abs() {
            return Ok(x);
        }
    }
    Ok(if glo.abs() < ghi.abs() { lo } else { hi })
}

/// Replace the unresolved end of a forward profile at (or very near) `β*`
/// by an inward integration from the interface.
///
/// The inward problem is posed in the gap `s = ξ₀ - ξ` and seeded at
/// `f = seed_f` from the leading-order interface law; `ξ₀` is fixed by
/// requiring `F` to agree with the forward profile at the first point where
/// `f ≤ f_match`. The mismatch in `F'` there is reported as `slope_jump`.
/// Exact gaps are carried along, since `ξ₀ - ξ` cannot be formed to full
/// relative accuracy next to the interface.
pub fn complete_interface(
    forward: &ProfileSolution,
    copts: &CompletionOptions,
    classify: &ClassifyTolerances,
) -> Result<(ProfileSolution, CompletionReport)> {
    let p = forward.params;
    let e = forward.exps;
    let im = (0..forward.len())
        .find(|&i| forward.f(i) <= copts.f_match)
        .ok_or_else(|| {
            Error::Completion(format!(
                "forward profile never falls below f = {} (min f = {:.3e})",
                copts.f_match,
                (0..forward.len()).map(|i| forward.f(i)).fold(f64::INFINITY, f64::min)
            ))
        })?;
    let xi_m = forward.grid[im];
    let (f_m, d_m) = (forward.fm[im], forward.dfm[im]);
    if d_m >= 0.0 {
        return Err(Error::Completion("profile is not decreasing at the matching point".into()));
    }
    let case = p.case();
    let ex0 = predict_expansion(&p, &e, xi_m);
    let fm_small = forward.f(im);
    let fprime = forward.fprime(im);
    let guess = xi_m + ex0.theta * fm_small / -fprime;

    let mut stats = IntegrationStats::default();
    let mut iterations = 0;
    let seed_f = copts.seed_level(case);
    let iopts = IntegratorOptions::default();
    // A cheap shallow seed locates ξ₀ closely; the deep seed then only needs
    // a few corrections.
    let coarse_f = (copts.f_match * 1e-4).max(seed_f);
    let coarse = match_xi0(
        &p, &e, xi_m, f_m, guess, -d_m, coarse_f, copts, &iopts, &mut stats, &mut iterations,
    )?;
    let xi0 = if coarse_f > seed_f {
        match_xi0(&p, &e, xi_m, f_m, coarse, -d_m, seed_f, copts, &iopts, &mut stats, &mut iterations)?
    } else {
        coarse
    };

    // Final recorded inward integration.
    let (s0, y0) = seed_state(&p, &e, xi0, seed_f);
    let s_m = xi0 - xi_m;
    let mut o = iopts;
    o.rel_tol = copts.rel_tol;
    o.max_steps = copts.max_steps;
    o.refine = copts.refine;
    let seg = integrate_gap_segment(&p, &e, xi0, s0, y0, s_m, &o, true);
    if !seg.reached {
        return Err(Error::Completion("final inward integration did not reach the matching point".into()));
    }
    stats.accepted += seg.stats.accepted;
    stats.rejected += seg.stats.rejected;
    stats.evals += seg.stats.evals;
    let fs_m = *seg.dfm_s.last().unwrap();
    let slope_jump = (d_m + fs_m).abs() / d_m.abs();

    let trim = copts.trim_factor(case) * s0;
    let mut grid = forward.grid[..im].to_vec();
    let mut fm = forward.fm[..im].to_vec();
    let mut dfm = forward.dfm[..im].to_vec();
    let mut gaps: Vec<f64> = grid.iter().map(|&x| xi0 - x).collect();
    for k in (0..seg.s.len()).rev() {
        let s = seg.s[k];
        if s < trim {
            break;
        }
        let xi = xi0 - s;
        if let Some(&prev) = grid.last() {
            if xi <= prev {
                continue;
            }
        }
        grid.push(xi);
        fm.push(seg.fm[k]);
        dfm.push(-seg.dfm_s[k]);
        gaps.push(s);
    }
    let end_gap = *gaps.last().unwrap();
    let mut sol = ProfileSolution {
        params: p,
        exps: e,
        xi_max: *grid.last().unwrap(),
        grid,
        fm,
        dfm,
        gaps: Some(gaps),
        matched_at: Some(xi_m),
        xi0: Some(xi0),
        xi1: Some(xi0),
        classification: Classification::Undetermined,
        stop_reason: StopReason::ContactZero,
        amplitude: forward.amplitude,
        stats: IntegrationStats {
            accepted: forward.stats.accepted + stats.accepted,
            rejected: forward.stats.rejected + stats.rejected,
            evals: forward.stats.evals + stats.evals,
        },
    };
    sol.classification = classify_beta(&sol, classify);
    let report = CompletionReport {
        xi0,
        xi_match: xi_m,
        f_match: fm_small,
        slope_jump,
        seed_f,
        seed_gap: s0,
        end_gap,
        iterations,
    };
    Ok((sol, report))
}

/// Outcome of comparing two profiles on a shared grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub beta1: f64,
    pub beta2: f64,
    /// Right end of the shared interval, `min(ξ₁(β₁), ξ₁(β₂))`.
    pub xi_end: f64,
    pub grid: Vec<f64>,
    /// `f(ξ; β₁) - f(ξ; β₂)` on the shared grid.
    pub gaps: Vec<f64>,
    pub min_gap: f64,
    pub interp_tol: f64,
    pub passed: bool,
}

pub const MONOTONICITY_INTERP_TOL: f64 = 1e-9;

/// Check `f(ξ; β₁) ≥ f(ξ; β₂)` for `β₁ < β₂` on `grid_points` equispaced
/// points of `(0, min ξ₁)`.
pub fn monotonicity_check(
    p: &Params,
    beta1: f64,
    beta2: f64,
    grid_points: usize,
    opts: &IntegratorOptions,
) -> Result<MonotonicityReport> {
    if !(beta1 > 0.0 && beta1 < beta2) {
        return Err(Error::Domain(format!("need 0 < beta1 < beta2, got {beta1}, {beta2}")));
    }
    if grid_points == 0 {
        return Err(Error::Domain("grid_points must be positive".into()));
    }
    let s1 = integrate_profile(p, &exponents_from_beta(p, beta1)?, opts);
    let s2 = integrate_profile(p, &exponents_from_beta(p, beta2)?, opts);
    let end_of = |s: &ProfileSolution| s.xi1.unwrap_or(s.xi_max).min(s.xi_max);
    let xi_end = end_of(&s1).min(end_of(&s2));
    let grid: Vec<f64> = (1..=grid_points)
        .map(|j| xi_end * j as f64 / (grid_points + 1) as f64)
        .collect();
    let gaps: Vec<f64> = grid
        .iter()
        .map(|&x| s1.f_at(x).unwrap_or(f64::NAN) - s2.f_at(x).unwrap_or(f64::NAN))
        .collect();
    let min_gap = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(MonotonicityReport {
        beta1,
        beta2,
        xi_end,
        passed: min_gap >= -MONOTONICITY_INTERP_TOL,
        min_gap,
        grid,
        gaps,
        interp_tol: MONOTONICITY_INTERP_TOL,
    })
}
