//! Run configuration: a flat `key = value` file.
//!
//! ```text
//! # exponents
//! m = 2
//! q = 0.5
//! N = 1
//! mode = shoot          # optional when given on the command line
//! beta_tol = 1e-8
//! sweep_betas = 0.01, 0.1, 1, 10
//! sweep_exponents = 2:0.5, 1.5:0.5
//! ```
//!
//! `#` starts a comment anywhere on a line. Keys are case-sensitive, may
//! appear once, and anything not listed in [`KEYS`] is rejected.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use eternal_profile::integrator::{ClassifyTolerances, IntegratorOptions};
use eternal_profile::model::{make_params, Params};
use eternal_profile::shooting::ShootingOptions;
use serde_json::{json, Value};

/// Every accepted key with a one-line description.
pub const KEYS: &[(&str, &str)] = &[
    ("m", "diffusion exponent, m > 1"),
    ("q", "absorption exponent, 0 < q < 1"),
    ("N", "space dimension, N >= 1"),
    ("mode", "solve | shoot | classify | asymptotics | phase | verify | sweep"),
    ("beta", "trial rate for solve and classify"),
    ("beta_tol", "relative bracket width at which bisection stops"),
    ("slope_tol", "tangential-contact threshold on |F'| / xi0^sigma"),
    ("b_floor", "turning points with f below this count as tangential"),
    ("rel_tol", "integrator relative tolerance"),
    ("abs_tol", "integrator absolute tolerance"),
    ("delta0", "launch point of the series start"),
    ("contact_eps", "contact threshold on f"),
    ("contact_gap", "contact threshold on F/|F'| relative to xi"),
    ("event_tol", "event localisation tolerance"),
    ("horizon", "integration horizon (default: derived from the limit profile)"),
    ("max_steps", "step budget per integration"),
    ("f_match", "level of f at which the interface completion is matched"),
    ("output_dir", "directory for CSV, JSON and SVG output"),
    ("plots", "write SVG plots (true/false)"),
    ("sweep_betas", "comma-separated list of beta values"),
    ("sweep_exponents", "comma-separated list of m:q pairs"),
];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    Duplicate { line: usize, key: String },
    #[error("invalid value for `{key}`: {msg}")]
    Invalid { key: String, msg: String },
    #[error("missing required key `{0}`")]
    Missing(String),
    #[error("cannot read {path}: {msg}")]
    Io { path: String, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, clap::ValueEnum)]
pub enum Mode {
    Solve,
    Shoot,
    Classify,
    Asymptotics,
    Phase,
    Verify,
    Sweep,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Solve => "solve",
            Mode::Shoot => "shoot",
            Mode::Classify => "classify",
            Mode::Asymptotics => "asymptotics",
            Mode::Phase => "phase",
            Mode::Verify => "verify",
            Mode::Sweep => "sweep",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "solve" => Mode::Solve,
            "shoot" => Mode::Shoot,
            "classify" => Mode::Classify,
            "asymptotics" => Mode::Asymptotics,
            "phase" => Mode::Phase,
            "verify" => Mode::Verify,
            "sweep" => Mode::Sweep,
            other => return Err(format!("unknown mode `{other}`")),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepSpec {
    Betas(Vec<f64>),
    /// `(m, q)` pairs, all with the configured `N`.
    Exponents(Vec<(f64, f64)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: Params,
    pub mode: Mode,
    pub beta: Option<f64>,
    pub shooting: ShootingOptions,
    pub output_dir: PathBuf,
    pub emit_plots: bool,
    pub sweep: Option<SweepSpec>,
}

impl RunConfig {
    pub fn integrator(&self) -> &IntegratorOptions {
        &self.shooting.integrator
    }

    pub fn classify(&self) -> &ClassifyTolerances {
        &self.shooting.classify
    }

    /// The effective configuration with every default resolved.
    pub fn echo(&self) -> Value {
        let io = &self.shooting.integrator;
        let ct = &self.shooting.classify;
        let sweep = match &self.sweep {
            None => Value::Null,
            Some(SweepSpec::Betas(b)) => json!({ "betas": b }),
            Some(SweepSpec::Exponents(e)) => {
                json!({ "exponents": e.iter().map(|&(m, q)| json!([m, q])).collect::<Vec<_>>() })
            }
        };
        json!({
            "m": self.params.m,
            "q": self.params.q,
            "N": self.params.n,
            "sigma": self.params.sigma,
            "mode": self.mode.as_str(),
            "beta": self.beta,
            "beta_tol": self.shooting.beta_tol,
            "slope_tol": ct.slope_tol,
            "b_floor": ct.b_floor,
            "rel_tol": io.rel_tol,
            "abs_tol": io.abs_tol,
            "delta0": io.delta0,
            "contact_eps": io.contact_eps,
            "contact_gap": io.contact_gap,
            "event_tol": io.event_tol,
            "horizon": io.horizon,
            "max_steps": io.max_steps,
            "f_match": self.shooting.completion.f_match,
            "output_dir": self.output_dir.to_string_lossy(),
            "plots": self.emit_plots,
            "sweep": sweep,
        })
    }
}

struct Entry {
    line: usize,
    value: String,
}

/// Split the text into `key -> (line, value)` without interpreting values.
fn tokenize(text: &str) -> Result<BTreeMap<String, Entry>, ConfigError> {
    let mut out = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Parse {
                line,
                msg: format!("expected `key = value`, found `{content}`"),
            });
        };
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(ConfigError::Parse {
                line,
                msg: format!("malformed key `{key}`"),
            });
        }
        if value.is_empty() {
            return Err(ConfigError::Parse {
                line,
                msg: format!("key `{key}` has no value"),
            });
        }
        if !KEYS.iter().any(|(k, _)| *k == key) {
            return Err(ConfigError::UnknownKey {
                line,
                key: key.to_string(),
            });
        }
        if out.contains_key(key) {
            return Err(ConfigError::Duplicate {
                line,
                key: key.to_string(),
            });
        }
        out.insert(
            key.to_string(),
            Entry {
                line,
                value: value.to_string(),
            },
        );
    }
    Ok(out)
}

fn parse_value<T: FromStr>(entries: &BTreeMap<String, Entry>, key: &str) -> Result<Option<T>, ConfigError> {
    match entries.get(key) {
        None => Ok(None),
        Some(e) => e.value.parse::<T>().map(Some).map_err(|_| ConfigError::Parse {
            line: e.line,
            msg: format!("cannot parse `{}` as a value for `{key}`", e.value),
        }),
    }
}

fn parse_list<T>(e: &Entry, key: &str, item: impl Fn(&str) -> Option<T>) -> Result<Vec<T>, ConfigError> {
    let mut out = Vec::new();
    for part in e.value.split(',') {
        let part = part.trim();
        let v = item(part).ok_or_else(|| ConfigError::Parse {
            line: e.line,
            msg: format!("cannot parse list item `{part}` of `{key}`"),
        })?;
        out.push(v);
    }
    Ok(out)
}

fn positive(key: &str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(ConfigError::Invalid {
            key: key.into(),
            msg: format!("must be positive and finite, got {v}"),
        })
    }
}

/// Parse configuration text. `mode` (from the command line) overrides the
/// file; a conflicting `mode` key is an error.
pub fn parse_config(text: &str, mode: Option<Mode>) -> Result<RunConfig, ConfigError> {
    let entries = tokenize(text)?;
    let m: f64 = parse_value(&entries, "m")?.ok_or_else(|| ConfigError::Missing("m".into()))?;
    let q: f64 = parse_value(&entries, "q")?.ok_or_else(|| ConfigError::Missing("q".into()))?;
    let n: u32 = parse_value(&entries, "N")?.ok_or_else(|| ConfigError::Missing("N".into()))?;
    let params = make_params(m, q, n).map_err(|e| ConfigError::Invalid {
        key: "m/q/N".into(),
        msg: e.to_string(),
    })?;

    let file_mode = match entries.get("mode") {
        None => None,
        Some(e) => Some(e.value.parse::<Mode>().map_err(|msg| ConfigError::Parse { line: e.line, msg })?),
    };
    let mode = match (mode, file_mode) {
        (Some(a), Some(b)) if a != b => {
            return Err(ConfigError::Invalid {
                key: "mode".into(),
                msg: format!("file says `{b}` but the command line says `{a}`"),
            })
        }
        (Some(a), _) | (None, Some(a)) => a,
        (None, None) => return Err(ConfigError::Missing("mode".into())),
    };

    let mut shooting = ShootingOptions::default();
    let beta = parse_value::<f64>(&entries, "beta")?.map(|b| positive("beta", b)).transpose()?;
    if let Some(v) = parse_value::<f64>(&entries, "beta_tol")? {
        shooting.beta_tol = positive("beta_tol", v)?;
    }
    if let Some(v) = parse_value::<f64>(&entries, "slope_tol")? {
        shooting.classify.slope_tol = positive("slope_tol", v)?;
    }
    if let Some(v) = parse_value::<f64>(&entries, "b_floor")? {
        shooting.classify.b_floor = positive("b_floor", v)?;
    }
    let io = &mut shooting.integrator;
    if let Some(v) = parse_value::<f64>(&entries, "rel_tol")? {
        io.rel_tol = positive("rel_tol", v)?;
    }
    if let Some(v) = parse_value::<f64>(&entries, "abs_tol")? {
        if !(v.is_finite() && v >= 0.0) {
            return Err(ConfigError::Invalid {
                key: "abs_tol".into(),
                msg: format!("must be non-negative, got {v}"),
            });
        }
        io.abs_tol = v;
    }
    if let Some(v) = parse_value::<f64>(&entries, "delta0")? {
        io.delta0 = positive("delta0", v)?;
    }
    if let Some(v) = parse_value::<f64>(&entries, "contact_eps")? {
        io.contact_eps = positive("contact_eps", v)?;
    }
    if let Some(v) = parse_value::<f64>(&entries, "contact_gap")? {
        io.contact_gap = positive("contact_gap", v)?;
    }
    if let Some(v) = parse_value::<f64>(&entries, "event_tol")? {
        io.event_tol = positive("event_tol", v)?;
    }
    if let Some(v) = parse_value::<f64>(&entries, "horizon")? {
        io.horizon = Some(positive("horizon", v)?);
    }
    if let Some(v) = parse_value::<usize>(&entries, "max_steps")? {
        if v == 0 {
            return Err(ConfigError::Invalid {
                key: "max_steps".into(),
                msg: "must be at least 1".into(),
            });
        }
        io.max_steps = v;
    }
    if let Some(v) = parse_value::<f64>(&entries, "f_match")? {
        if !(v > 0.0 && v < 1.0) {
            return Err(ConfigError::Invalid {
                key: "f_match".into(),
                msg: format!("must lie in (0, 1), got {v}"),
            });
        }
        shooting.completion.f_match = v;
    }
    let output_dir = entries
        .get("output_dir")
        .map(|e| PathBuf::from(&e.value))
        .unwrap_or_else(|| PathBuf::from("out"));
    let emit_plots = parse_value::<bool>(&entries, "plots")?.unwrap_or(false);

    let betas = entries
        .get("sweep_betas")
        .map(|e| parse_list(e, "sweep_betas", |s| s.parse::<f64>().ok()))
        .transpose()?;
    let exponents = entries
        .get("sweep_exponents")
        .map(|e| {
            parse_list(e, "sweep_exponents", |s| {
                let (a, b) = s.split_once(':')?;
                Some((a.trim().parse::<f64>().ok()?, b.trim().parse::<f64>().ok()?))
            })
        })
        .transpose()?;
    let sweep = match (betas, exponents) {
        (Some(_), Some(_)) => {
            return Err(ConfigError::Invalid {
                key: "sweep_betas".into(),
                msg: "give either sweep_betas or sweep_exponents, not both".into(),
            })
        }
        (Some(b), None) => {
            for &v in &b {
                positive("sweep_betas", v)?;
            }
            Some(SweepSpec::Betas(b))
        }
        (None, Some(e)) => {
            for &(m, q) in &e {
                make_params(m, q, n).map_err(|err| ConfigError::Invalid {
                    key: "sweep_exponents".into(),
                    msg: err.to_string(),
                })?;
            }
            Some(SweepSpec::Exponents(e))
        }
        (None, None) => None,
    };

    match mode {
        Mode::Solve | Mode::Classify if beta.is_none() => {
            return Err(ConfigError::Missing("beta".into()));
        }
        Mode::Sweep if sweep.is_none() => {
            return Err(ConfigError::Missing("sweep_betas or sweep_exponents".into()));
        }
        _ => {}
    }

    Ok(RunConfig {
        params,
        mode,
        beta,
        shooting,
        output_dir,
        emit_plots,
        sweep,
    })
}

pub fn load_config(path: &Path, mode: Option<Mode>) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    parse_config(&text, mode)
}
