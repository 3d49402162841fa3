//! The sub-critical profile as a trajectory of a quadratic autonomous system.
//!
//! With
//!
//! ```text
//! X = √m ξ^{-(σ+2)/2} f^{(m-q)/2}
//! Y = √m ξ^{-σ/2} f^{(m-q-2)/2} f'
//! Z = (α/√m) ξ^{(2-σ)/2} f^{(2-m-q)/2}
//! dη/dξ = m^{-1/2} f^{(q-m)/2} ξ^{σ/2}
//! ```
//!
//! the profile equation becomes autonomous in `η`, the interface is pushed to
//! `η = ∞`, and the trajectory ends at the equilibrium
//! `(0, -√(2/(m+q)), 0)`. Translating `W = Y + √(2/(m+q))` puts that point
//! at the origin, where the linearisation has two stable directions; the
//! trajectory arrives along `W ≈ (m-1)/(2+m+q) Z`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrator::ProfileSolution;
use crate::model::{Exponents, InterfaceCase, Params};

/// Points with `ξ` below this fraction of `ξ₀` are dropped: the powers of
/// `ξ` in `X` and `Y` blow up at the origin and only amplify rounding there.
pub const START_CUTOFF: f64 = 0.01;

/// Fraction of the stored `η` range used for tail estimates.
pub const TAIL_FRACTION: f64 = 0.2;

/// Radius of the ball around the equilibrium the trajectory must enter before
/// a tail estimate means anything.
pub const TAIL_RADIUS: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhasePortrait {
    pub params: Params,
    pub exps: Exponents,
    /// Identifies the profile the trajectory came from.
    pub source: String,
    pub xi_values: Vec<f64>,
    pub eta_values: Vec<f64>,
    pub x_values: Vec<f64>,
    pub y_values: Vec<f64>,
    pub z_values: Vec<f64>,
    /// `W = Y + √(2/(m+q))`, formed from `Y` directly.
    pub w_values: Vec<f64>,
}

impl PhasePortrait {
    pub fn len(&self) -> usize {
        self.eta_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eta_values.is_empty()
    }

    /// `(X, W, Z)` at point `i`.
    pub fn v(&self, i: usize) -> [f64; 3] {
        [self.x_values[i], self.w_values[i], self.z_values[i]]
    }

    /// `X > 0`, `Y < 0`, `Z > 0` at every stored point.
    pub fn signs_hold(&self) -> bool {
        (0..self.len()).all(|i| self.x_values[i] > 0.0 && self.y_values[i] < 0.0 && self.z_values[i] > 0.0)
    }
}

/// `√(2/(m+q))`: minus the `Y` coordinate of the interface equilibrium.
pub fn equilibrium_offset(p: &Params) -> f64 {
    (2.0 / (p.m + p.q)).sqrt()
}

fn require_subcritical(p: &Params) -> Result<()> {
    match p.case() {
        InterfaceCase::SubCritical => Ok(()),
        c => Err(Error::Case(format!("{c} (m + q = {})", p.m + p.q))),
    }
}

/// Map a profile to phase coordinates.
///
/// `η` is accumulated with the trapezoidal rule, using the exact gaps where
/// the profile carries them, and anchored at the launch point by the
/// integral of `m^{-1/2} ξ^{σ/2}` over `[0, δ₀]` (where `f ≈ 1`).
pub fn to_phase_coords(sol: &ProfileSolution) -> Result<PhasePortrait> {
    let p = sol.params;
    require_subcritical(&p)?;
    let x0 = sol.xi0.ok_or(Error::MissingInterface)?;
    let (m, q, s) = (p.m, p.q, p.sigma);
    let e = sol.exps;
    let sm = m.sqrt();
    let offset = equilibrium_offset(&p);
    let amp = sol.amplitude;

    let deta = |xi: f64, f: f64| f.powf(0.5 * (q - m)) * xi.powf(0.5 * s) / sm;
    let d0 = sol.grid[0];
    let mut eta = amp.powf(0.5 * (q - m)) * d0.powf(0.5 * s + 1.0) / (sm * (0.5 * s + 1.0));
    let mut prev = deta(d0, sol.f(0));

    let mut out = PhasePortrait {
        params: p,
        exps: e,
        source: format!("m={} q={} N={} beta={:e}", p.m, p.q, p.n, e.beta),
        xi_values: Vec::new(),
        eta_values: Vec::new(),
        x_values: Vec::new(),
        y_values: Vec::new(),
        z_values: Vec::new(),
        w_values: Vec::new(),
    };
    for i in 0..sol.len() {
        let xi = sol.grid[i];
        let f = sol.f(i);
        if f <= 0.0 {
            break;
        }
        if i > 0 {
            let g = deta(xi, f);
            let h = match &sol.gaps {
                Some(gs) => gs[i - 1] - gs[i],
                None => xi - sol.grid[i - 1],
            };
            eta += 0.5 * h * (prev + g);
            prev = g;
        }
        if xi < START_CUTOFF * x0 {
            continue;
        }
        let fp = sol.fprime(i);
        let x = sm * xi.powf(-0.5 * (s + 2.0)) * f.powf(0.5 * (m - q));
        let y = sm * xi.powf(-0.5 * s) * f.powf(0.5 * (m - q - 2.0)) * fp;
        let z = e.alpha / sm * xi.powf(0.5 * (2.0 - s)) * f.powf(0.5 * (2.0 - m - q));
        out.xi_values.push(xi);
        out.eta_values.push(eta);
        out.x_values.push(x);
        out.y_values.push(y);
        out.z_values.push(z);
        out.w_values.push(y + offset);
    }
    Ok(out)
}

/// The untranslated field `(Ẋ, Ẏ, Ż)`.
pub fn vector_field_xyz(v: [f64; 3], p: &Params) -> [f64; 3] {
    let (m, q, s) = (p.m, p.q, p.sigma);
    let k = p.nf() - 1.0 + 0.5 * s;
    let [x, y, z] = v;
    [
        x * (0.5 * (m - q) * y - 0.5 * (s + 2.0) * x),
        -0.5 * (m + q) * y * y - k * x * y - x * z + 0.5 * (m - 1.0) * y * z + 1.0,
        z * (0.5 * (2.0 - m - q) * y + 0.5 * (2.0 - s) * x),
    ]
}

/// The translated field `(Ẋ, Ẇ, Ż)` at `V = (X, W, Z)`, term by term.
pub fn vector_field(v: [f64; 3], p: &Params) -> [f64; 3] {
    let (m, q, s) = (p.m, p.q, p.sigma);
    let k = p.nf() - 1.0 + 0.5 * s;
    let r = (2.0 * (m + q)).sqrt();
    let [x, w, z] = v;
    [
        -(m - q) / r * x + 0.5 * (m - q) * x * w - 0.5 * (s + 2.0) * x * x,
        k * (2.0 / (m + q)).sqrt() * x + r * w - (m - 1.0) / r * z - k * x * w - x * z - 0.5 * (m + q) * w * w
            + 0.5 * (m - 1.0) * w * z,
        -(2.0 - m - q) / r * z + 0.5 * (2.0 - m - q) * w * z + 0.5 * (2.0 - s) * x * z,
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Linearization {
    pub matrix: [[f64; 3]; 3],
    pub eigenvalues: [f64; 3],
    /// Unnormalised; `eigenvectors[i]` belongs to `eigenvalues[i]`.
    pub eigenvectors: [[f64; 3]; 3],
}

impl Linearization {
    /// `max_i ‖M Eᵢ - λᵢ Eᵢ‖_∞`.
    pub fn eigen_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for (lam, ev) in self.eigenvalues.iter().zip(&self.eigenvectors) {
            for r in 0..3 {
                let me: f64 = (0..3).map(|c| self.matrix[r][c] * ev[c]).sum();
                worst = worst.max((me - lam * ev[r]).abs());
            }
        }
        worst
    }

    pub fn trace(&self) -> f64 {
        (0..3).map(|i| self.matrix[i][i]).sum()
    }

    pub fn determinant(&self) -> f64 {
        let a = &self.matrix;
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    }
}

/// Jacobian of [`vector_field`] at the origin with its closed-form
/// eigenpairs.
///
/// ```
/// use eternal_profile::model::make_params;
/// use eternal_profile::phasespace::linearize_at_origin;
/// let lin = linearize_at_origin(&make_params(1.2, 0.3, 1).unwrap()).unwrap();
/// assert!((lin.eigenvalues[1] - 3f64.sqrt()).abs() < 1e-14);
/// assert!(lin.eigen_residual() < 1e-12);
/// ```
pub fn linearize_at_origin(p: &Params) -> Result<Linearization> {
    require_subcritical(p)?;
    let (m, q, s) = (p.m, p.q, p.sigma);
    let n = p.nf();
    let c = (2.0 / (m + q)).sqrt();
    let r = (2.0 * (m + q)).sqrt();
    let matrix = [
        [-0.5 * (m - q) * c, 0.0, 0.0],
        [(n - 1.0 + 0.5 * s) * c, (m + q) * c, -0.5 * (m - 1.0) * c],
        [0.0, 0.0, -0.5 * (2.0 - m - q) * c],
    ];
    Ok(Linearization {
        matrix,
        eigenvalues: [-(m - q) / r, r, -(2.0 - m - q) / r],
        eigenvectors: [
            [1.0, -(2.0 * (n - 1.0) + s) / (3.0 * m + q), 0.0],
            [0.0, 1.0, 0.0],
            [0.0, (m - 1.0) / (2.0 + m + q), 1.0],
        ],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StableManifoldReport {
    pub tail_start_eta: f64,
    pub eta_end: f64,
    pub points: usize,
    /// `dη`-weighted mean of `W/Z` over the tail.
    pub w_over_z: f64,
    /// `(m-1)/(2+m+q)`.
    pub predicted: f64,
    pub rel_deviation: f64,
    pub x_over_z_start: f64,
    pub x_over_z_end: f64,
}

/// Estimate the slope of the arrival direction, `W/Z`, over the last
/// [`TAIL_FRACTION`] of the stored `η` range.
pub fn stable_manifold_ratio(portrait: &PhasePortrait) -> Result<StableManifoldReport> {
    let p = &portrait.params;
    require_subcritical(p)?;
    let n = portrait.len();
    let entered = (0..n).any(|i| {
        let [x, w, z] = portrait.v(i);
        (x * x + w * w + z * z).sqrt() < TAIL_RADIUS
    });
    if n < 2 || !entered {
        return Err(Error::Tail { radius: TAIL_RADIUS });
    }
    let eta0 = portrait.eta_values[0];
    let eta_end = portrait.eta_values[n - 1];
    let start = eta_end - TAIL_FRACTION * (eta_end - eta0);
    let i0 = portrait.eta_values.partition_point(|&e| e < start).min(n - 2);
    let ratio = |i: usize| portrait.w_values[i] / portrait.z_values[i];
    let (mut num, mut den) = (0.0, 0.0);
    for i in i0..n - 1 {
        let h = portrait.eta_values[i + 1] - portrait.eta_values[i];
        num += 0.5 * h * (ratio(i) + ratio(i + 1));
        den += h;
    }
    let w_over_z = if den > 0.0 { num / den } else { ratio(n - 1) };
    let predicted = (p.m - 1.0) / (2.0 + p.m + p.q);
    let xz = |i: usize| portrait.x_values[i] / portrait.z_values[i];
    Ok(StableManifoldReport {
        tail_start_eta: portrait.eta_values[i0],
        eta_end,
        points: n - i0,
        w_over_z,
        predicted,
        rel_deviation: (w_over_z - predicted).abs() / predicted,
        x_over_z_start: xz(i0),
        x_over_z_end: xz(n - 1),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitPointReport {
    pub eta_end: f64,
    pub x_end: f64,
    pub y_end: f64,
    pub z_end: f64,
    pub y_target: f64,
    /// `|Y(η_end) + √(2/(m+q))|`.
    pub y_deviation: f64,
    /// Euclidean distance of the last point from the equilibrium.
    pub distance: f64,
    pub signs_hold: bool,
}

pub fn limit_point_check(portrait: &PhasePortrait) -> Result<LimitPointReport> {
    let n = portrait.len();
    if n == 0 {
        return Err(Error::Tail { radius: TAIL_RADIUS });
    }
    let i = n - 1;
    let target = -equilibrium_offset(&portrait.params);
    let (x, y, z) = (portrait.x_values[i], portrait.y_values[i], portrait.z_values[i]);
    let dy = portrait.w_values[i];
    Ok(LimitPointReport {
        eta_end: portrait.eta_values[i],
        x_end: x,
        y_end: y,
        z_end: z,
        y_target: target,
        y_deviation: dy.abs(),
        distance: (x * x + dy * dy + z * z).sqrt(),
        signs_hold: portrait.signs_hold(),
    })
}

/// Largest relative violation of `Z = α m^{(q-1)/(m-q)} X^{(2-m-q)/(m-q)}`,
/// which holds identically along any profile.
pub fn xz_identity_residual(portrait: &PhasePortrait) -> f64 {
    let p = &portrait.params;
    let (m, q) = (p.m, p.q);
    let c = portrait.exps.alpha * m.powf((q - 1.0) / (m - q));
    let k = (2.0 - m - q) / (m - q);
    (0..portrait.len())
        .map(|i| {
            let z = portrait.z_values[i];
            (c * portrait.x_values[i].powf(k) - z).abs() / z
        })
        .fold(0.0, f64::max)
}
