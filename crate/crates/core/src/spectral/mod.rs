//! Periodic Fourier pseudo-spectral backend.

mod fft;
mod field;
mod grid;
pub mod io;
mod symbol;

pub use fft::{SpectralOps, SINGULAR_THRESHOLD};
pub use field::{inner, integrate, l2_distance, l2_norm, Field, Spectrum};
pub use grid::Grid;
pub use symbol::DiagonalSymbol;
