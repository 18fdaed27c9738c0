//! Pseudo-spectral simulation and diagnostics for the nonlinear Schrödinger
//! equation with a linear (Stark) potential,
//!
//! ```text
//! iε ∂ₜu + ½ε² Δu = (E·x) u + λ|u|^{2σ} u  [+ μ (|x|^{-γ} * |u|²) u]
//! ```
//!
//! on a periodic box in one or two space dimensions. The central object is the
//! Avron–Herbst change of variables ([`transform::ah_forward`] /
//! [`transform::ah_inverse`]) which maps solutions of the free equation
//! (`E = 0`) onto solutions of the Stark equation. Everything else is built to
//! check consequences of that map numerically: conservation laws, the
//! pseudo-conformal law, blow-up timing and scattering.
//!
//! Module map:
//!
//! - [`grid`]: periodic grids, complex fields, unitary DFTs, spectral
//!   derivatives and sub-grid translation, containment guards.
//! - [`problem`]: physical parameters and closed-form initial data.
//! - [`transform`]: Avron–Herbst pair, the phase `φ`, the `J_E` operator.
//! - [`propagator`]: exact linear propagators and the Strang split-step
//!   integrator.
//! - [`diagnostics`]: conserved quantities, blow-up monitor, scattering
//!   residuals.
//! - [`harness`]: configuration, experiment drivers, CSV and snapshot I/O.

pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod harness;
pub mod problem;
pub mod propagator;
pub mod transform;

pub use error::{Error, Result};
pub use grid::{Containment, Field, Grid};
pub use problem::{Hartree, InitialData, Problem};
pub use transform::StarkFrame;
