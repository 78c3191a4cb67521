//! Endpoint solitary waves of the generalized derivative nonlinear
//! Schrödinger equation
//!
//! ```text
//! i u_t + u_xx + i |u|^{2σ} u_x = 0,   1 < σ < 2,
//! ```
//!
//! at the frequency `ω = c²/4`, where the profile decays only algebraically.
//! The crate evaluates the profiles in closed form, integrates the conserved
//! functionals over the whole line, applies the second variation of the
//! action, builds a localized negative direction, fits modulation
//! parameters and integrates the flow pseudo-spectrally.

pub mod cutoff;
pub mod error;
pub mod evolution;
pub mod functionals;
pub mod grid;
pub mod jet;
pub mod linearization;
pub mod modulation;
pub mod negative_direction;
pub mod profile;
pub mod quadrature;

pub use error::{Error, QuadratureError, Result};
pub use grid::{ComplexField, Grid};
pub use profile::{ClosedField, ProfileKind, WaveParams};
pub use quadrature::{QuadratureMethod, QuadratureSpec};
