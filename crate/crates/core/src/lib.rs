//! Eternal self-similar profiles for the porous medium equation with a
//! spatially growing absorption at the critical weight exponent,
//!
//! ```text
//! u_t = Δu^m - |x|^σ u^q,   σ = 2(1-q)/(m-1),   m > 1, 0 < q < 1.
//! ```
//!
//! Solutions of the form `u = e^{-αt} f(|x| e^{βt})` exist for a single
//! rate `β*`; the profile `f` is then compactly supported on `[0, ξ₀]` and
//! meets zero tangentially. [`shooting::shoot`] finds `β*` and the profile,
//! [`asymptotics`] checks the behaviour at `ξ₀`, [`phasespace`] re-reads the
//! profile as a trajectory of a planar autonomous system, and
//! [`pde_verify`] plugs the reconstructed `u(t, x)` back into the PDE.

mod dop853;

pub mod asymptotics;
pub mod error;
pub mod integrator;
pub mod model;
pub mod pde_verify;
pub mod phasespace;
pub mod shooting;

pub use error::{Error, Result};

/// Crate version, recorded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
