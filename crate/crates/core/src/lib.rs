//! Energy-stable IMEX time integration for dissipative PDEs on periodic
//! domains: SAV, relaxed SAV, generalized SAV, their relaxed variants, and
//! a two-variable scheme for split energies.

pub mod bdf;
pub mod config;
pub mod error;
pub mod harness;
pub mod models;
pub mod msav;
pub mod real;
pub mod schemes;
pub mod spectral;

pub use error::{Error, Result};
pub use real::Real;

/// Double-precision aliases for the common case.
pub type Field64 = spectral::Field<f64>;
pub type Grid64 = spectral::Grid<f64>;
pub type Model64 = models::ModelSpec<f64>;
pub type Integrator64 = schemes::Integrator<f64>;
pub type SchemeConfig64 = schemes::SchemeConfig<f64>;
pub type StepTrace64 = schemes::StepTrace<f64>;
