use std::sync::Arc;

use super::field::same_grid;
use super::grid::Grid;
use crate::error::{Error, Result};
use crate::real::Real;

/// Real Fourier multiplier acting mode by mode on a half spectrum.
///
/// The optional zero-mode value replaces the multiplier of the mean mode.
/// It lets nonlocal terms such as `c ∫φ` live inside an otherwise local
/// operator without breaking the diagonal structure.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalSymbol<T: Real> {
    grid: Arc<Grid<T>>,
    values: Vec<T>,
    zero_mode: Option<T>,
}

impl<T: Real> DiagonalSymbol<T> {
    pub fn new(grid: Arc<Grid<T>>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.spectral_len() {
            return Err(Error::SizeMismatch {
                expected: grid.spectral_len(),
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("symbol", "multipliers must be finite"));
        }
        Ok(Self {
            grid,
            values,
            zero_mode: None,
        })
    }

    /// Multiplier `f(k)` evaluated on each wavevector.
    pub fn from_fn(grid: Arc<Grid<T>>, f: impl FnMut(&[T]) -> T) -> Result<Self> {
        let values = grid.map_wavevectors(f);
        Self::new(grid, values)
    }

    /// Multiplier `f(|k|²)`.
    pub fn radial(grid: Arc<Grid<T>>, mut f: impl FnMut(T) -> T) -> Result<Self> {
        let values = grid.wavenumber_squared().into_iter().map(&mut f).collect();
        Self::new(grid, values)
    }

    pub fn constant(grid: Arc<Grid<T>>, c: T) -> Self {
        let values = vec![c; grid.spectral_len()];
        Self {
            grid,
            values,
            zero_mode: None,
        }
    }

    pub fn identity(grid: Arc<Grid<T>>) -> Self {
        Self::constant(grid, T::one())
    }

    /// Δ, i.e. `-|k|²`.
    pub fn laplacian(grid: Arc<Grid<T>>) -> Self {
        Self::radial(grid, |k2| -k2).expect("laplacian symbol is finite")
    }

    /// Δ², i.e. `|k|⁴`.
    pub fn bilaplacian(grid: Arc<Grid<T>>) -> Self {
        Self::radial(grid, |k2| k2 * k2).expect("bilaplacian symbol is finite")
    }

    pub fn with_zero_mode(mut self, value: T) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::param("zero_mode", "multiplier must be finite"));
        }
        self.zero_mode = Some(value);
        Ok(self)
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    pub fn zero_mode(&self) -> Option<T> {
        self.zero_mode
    }

    /// Multiplier actually applied to half-spectrum entry `i`.
    #[inline]
    pub fn multiplier(&self, i: usize) -> T {
        match (i, self.zero_mode) {
            (0, Some(z)) => z,
            _ => self.values[i],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scale(&self, c: T) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| c * v).collect(),
            zero_mode: self.zero_mode.map(|z| c * z),
        }
    }

    /// Adds `c·I`.
    pub fn shift(&self, c: T) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| v + c).collect(),
            zero_mode: self.zero_mode.map(|z| z + c),
        }
    }

    /// Operator sum.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b| a + b)
    }

    /// Operator composition (symbols multiply).
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b| a * b)
    }

    fn combine(&self, other: &Self, op: impl Fn(T, T) -> T) -> Result<Self> {
        if !same_grid(&self.grid, &other.grid) {
            return Err(Error::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| op(a, b))
            .collect();
        let zero_mode = if self.zero_mode.is_some() || other.zero_mode.is_some() {
            Some(op(self.multiplier(0), other.multiplier(0)))
        } else {
            None
        };
        Ok(Self {
            grid: self.grid.clone(),
            values,
            zero_mode,
        })
    }

    /// Smallest |multiplier| and the half-spectrum index where it occurs.
    pub fn min_abs(&self) -> (usize, T) {
        (0..self.len())
            .map(|i| (i, self.multiplier(i).abs()))
            .fold((0, T::infinity()), |best, cur| if cur.1 < best.1 { cur } else { best })
    }
}
