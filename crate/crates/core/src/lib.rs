//! Pseudo-spectral Galerkin simulation of the bipolar magnetohydrodynamic
//! system on the 2-D periodic torus, together with numerical checkers for
//! its operator identities, energy estimates and long-time diagnostics.
//!
//! The state `y = (u; B)` is a pair of divergence-free, zero-mean vector
//! fields stored as Fourier coefficients on the retained wavevector square.
//! It evolves by
//!
//! ```text
//! dy/dt + A y + A_p y + B(y, y) = g
//! ```
//!
//! where `A` is the diagonal bi-Laplacian / curl-curl dissipation, `A_p` the
//! monotone p-structure stress operator and `B` the convection plus Lorentz
//! coupling.

pub mod attractor;
pub mod bilinear;
pub mod config;
pub mod constitutive;
pub mod energy;
pub mod error;
pub mod forcing;
pub mod grid;
pub mod io;
pub mod linear;
pub mod params;
pub mod random;
pub mod solver;
pub mod state;
pub mod sum;
pub mod trajectory;
pub mod transform;

pub use error::{Error, Result};
pub use forcing::{Component, Forcing, ForcingTerm, TimeProfile};
pub use grid::{DealiasRule, Pad, SpectralGrid};
pub use params::{PhysicalParams, Regime};
pub use solver::{GalerkinConfig, Scheme};
pub use state::{DualElement, Mode, ModeField, SpectralState, StateNorms};
pub use trajectory::Trajectory;

pub use num_complex::Complex64;
