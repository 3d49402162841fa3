//! Parameters of the weighted absorption problem and the exponents of the
//! self-similar ansatz `u(t,x) = e^{-αt} f(|x| e^{βt})`.

use serde::Serialize;

use crate::error::Error;
use crate::integrator::ProfileSolution;

/// Tolerance on `|m + q - 2|` below which the exponents are treated as the
/// critical pair. User input is an exact decimal, so the identity is either
/// exact or far from holding.
pub const CASE_EPS: f64 = 1e-12;

/// The exponent triple `(m, q, N)` together with the critical weight exponent
/// `σ = 2(1-q)/(m-1)`.
///
/// `sigma` is always derived; the problem is only posed at the critical
/// weight, so there is no way to construct a `Params` with another `σ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Params {
    pub m: f64,
    pub q: f64,
    /// Space dimension `N ≥ 1`.
    pub n: u32,
    pub sigma: f64,
}

impl Params {
    pub fn new(m: f64, q: f64, n: u32) -> Result<Self, Error> {
        make_params(m, q, n)
    }

    /// `N` as a float, for use in formulas.
    #[inline]
    pub fn nf(&self) -> f64 {
        self.n as f64
    }

    pub fn case(&self) -> InterfaceCase {
        interface_case(self)
    }
}

/// The rates `(β, α)` with `α = 2β/(m-1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Exponents {
    pub beta: f64,
    pub alpha: f64,
}

/// Which pair of terms balances at the interface, decided by the sign of
/// `m + q - 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum InterfaceCase {
    SubCritical,
    Critical,
    SuperCritical,
}

impl std::fmt::Display for InterfaceCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            InterfaceCase::SubCritical => "SubCritical",
            InterfaceCase::Critical => "Critical",
            InterfaceCase::SuperCritical => "SuperCritical",
        };
        f.write_str(s)
    }
}

/// Validate `m > 1`, `0 < q < 1`, `N ≥ 1` and derive `σ`.
///
/// ```
/// use eternal_profile::model::{make_params, InterfaceCase};
/// let p = make_params(1.5, 0.5, 2).unwrap();
/// assert_eq!(p.sigma, 2.0);
/// assert_eq!(p.case(), InterfaceCase::Critical);
/// assert!(make_params(2.0, 1.5, 1).is_err());
/// ```
pub fn make_params(m: f64, q: f64, n: u32) -> Result<Params, Error> {
    if !(m.is_finite() && m > 1.0) {
        return Err(Error::Domain(format!("m must satisfy m > 1, got {m}")));
    }
    if !(q.is_finite() && q > 0.0 && q < 1.0) {
        return Err(Error::Domain(format!("q must satisfy 0 < q < 1, got {q}")));
    }
    if n < 1 {
        return Err(Error::Domain("N must be at least 1".into()));
    }
    let mut sigma = 2.0 * (1.0 - q) / (m - 1.0);
    if (m + q - 2.0).abs() <= CASE_EPS {
        // 2(1-q)/(m-1) with q = 2-m is exactly 2; keep it exact in floating point.
        sigma = 2.0;
    }
    Ok(Params { m, q, n, sigma })
}

pub fn exponents_from_beta(p: &Params, beta: f64) -> Result<Exponents, Error> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::Domain(format!("beta must be positive, got {beta}")));
    }
    Ok(Exponents {
        beta,
        alpha: 2.0 * beta / (p.m - 1.0),
    })
}

pub fn interface_case(p: &Params) -> InterfaceCase {
    let d = p.m + p.q - 2.0;
    if d.abs() <= CASE_EPS {
        InterfaceCase::Critical
    } else if d < 0.0 {
        InterfaceCase::SubCritical
    } else {
        InterfaceCase::SuperCritical
    }
}

/// The member `g(ξ; a) = a f(a^{-(m-1)/2} ξ)` of the one-parameter family
/// generated by a profile. `g` solves the same equation with the same
/// `(α, β)`, starts at `g(0) = a`, and is supported on `a^{(m-1)/2}` times
/// the original support.
pub fn rescale_profile(profile: &ProfileSolution, a: f64) -> Result<ProfileSolution, Error> {
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::Domain(format!(
            "rescaling factor must be positive, got {a}"
        )));
    }
    if a == 1.0 {
        return Ok(profile.clone());
    }
    let m = profile.params.m;
    let stretch = a.powf((m - 1.0) / 2.0);
    let f_scale = a.powf(m);
    let d_scale = f_scale / stretch;
    let mut out = profile.clone();
    out.grid.iter_mut().for_each(|x| *x *= stretch);
    out.fm.iter_mut().for_each(|v| *v *= f_scale);
    out.dfm.iter_mut().for_each(|v| *v *= d_scale);
    if let Some(g) = out.gaps.as_mut() {
        g.iter_mut().for_each(|s| *s *= stretch);
    }
    out.xi0 = out.xi0.map(|x| x * stretch);
    out.xi1 = out.xi1.map(|x| x * stretch);
    out.matched_at = out.matched_at.map(|x| x * stretch);
    out.xi_max *= stretch;
    out.amplitude = profile.amplitude * a;
    Ok(out)
}
