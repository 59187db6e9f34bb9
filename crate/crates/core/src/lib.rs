//! Numerical toolbox for the long-time behavior of entropy solutions of
//! scalar conservation laws `u_t + div A(u) = 0` on the flat torus `T^d`
//! (`d = 1, 2`).
//!
//! The crate provides:
//!
//! - periodic cell-averaged scalar fields and their norms ([`torus`]),
//! - a registry of x-independent fluxes and a quantified flux-degeneracy
//!   analyzer built on time-averaged sinc kernels ([`flux`], [`degeneracy`]),
//! - the kinetic picture: equilibrium functions, discrete entropy defect
//!   measures and their bounds ([`kinetic`]),
//! - a monotone finite-volume solver with Godunov or Engquist-Osher fluxes
//!   ([`solver`]),
//! - exact free-transport evolution by per-velocity spectral translation and
//!   the associated homogenization experiment ([`transport`]),
//! - long-time diagnostics: decay reports, the band-localization inequality
//!   and the degenerate shear counterexample ([`longtime`]).

pub mod degeneracy;
pub mod error;
pub mod flux;
pub mod kinetic;
pub mod longtime;
pub mod solver;
pub mod spectral;
pub mod sum;
pub mod torus;
pub mod transport;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
