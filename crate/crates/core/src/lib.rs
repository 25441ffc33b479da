//! Pseudospectral simulation of the one-dimensional defocusing nonlinear
//! Schrödinger equation
//!
//! ```text
//!     i u_t + u_xx = |u|^{2p} u,      x in [-L/2, L/2) (periodic)
//! ```
//!
//! together with numerical audits of its a priori estimates: conservation
//! laws, the four-particle interaction Morawetz inequality, almost
//! conservation of the smoothed energy `E(I_N u)`, and scattering.
//!
//! # Fourier convention
//!
//! Everything in this crate uses *angular* wavenumbers: `∂_x ↔ ik`,
//! `|∇|^s ↔ |k|^s`, `Δ ↔ -k²`, and the free propagator is
//! `e^{itΔ} ↔ e^{-itk²}`. Sharp constants that belong to the physical
//! propagator (the `(4π|t|)^{-1/2}` dispersive kernel bound, the `8π` in the
//! Morawetz inequality) are convention independent and kept as is; implicit
//! constants in `≲` statements absorb the convention.
//!
//! Module map:
//!
//! * [`spectral`] grids, DFTs, Fourier multipliers, Littlewood–Paley
//!   projections, Lebesgue/Sobolev norms, Bernstein audits.
//! * [`dynamics`] exact free flow, Strang split-step integrator, trajectories.
//! * [`functionals`] mass, energy, admissible pairs, spacetime slab norms.
//! * [`morawetz`] the interaction Morawetz action and its audits.
//! * [`imethod`] the smoothing multiplier `I_N`, modified energy, rescaling
//!   and the almost-conservation sweep.
//! * [`scattering`] interaction-picture pullback and scattering diagnostics.

pub mod dynamics;
pub mod error;
pub mod functionals;
pub mod imethod;
pub mod morawetz;
pub mod scattering;
pub mod spectral;

pub use error::{Error, Result};
pub use num_complex::Complex64;
