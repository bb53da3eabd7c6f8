//! Numerical laboratory for a coupled periodic Camassa-Holm system.
//!
//! The system is solved in its nonlocal form on the unit circle with a
//! Fourier pseudospectral discretization and RK4 time stepping. On top of
//! the solver sit the diagnostics needed to study wave breaking: the
//! conserved H1 energy, the minimum slope of u+v, Lagrangian tracking of a
//! characteristic point, and the evaluation of a slope-based blowup
//! criterion with its closed-form blowup-time bound and blowup-location
//! interval.

pub mod characteristics;
pub mod config;
pub mod criterion;
pub mod dynamics;
pub mod evolution;
pub mod experiments;
pub mod grid;
pub mod kernel;

mod error;

pub use error::Error;
