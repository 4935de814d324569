use std::sync::Arc;

use num_complex::Complex;

use super::grid::Grid;
use crate::error::{Error, Result};
use crate::real::Real;

pub(crate) fn same_grid<T: Real>(a: &Arc<Grid<T>>, b: &Arc<Grid<T>>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

/// Real-valued samples of a scalar field on a periodic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<T: Real> {
    grid: Arc<Grid<T>>,
    values: Vec<T>,
}

impl<T: Real> Field<T> {
    /// Wraps sample values; rejects a wrong length or non-finite entries.
    pub fn new(grid: Arc<Grid<T>>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::SizeMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::param("values", format!("entry {i} is not finite")));
        }
        Ok(Self { grid, values })
    }

    /// Wraps values without the finiteness check. Used on hot paths whose
    /// callers inspect finiteness themselves.
    pub(crate) fn from_raw(grid: Arc<Grid<T>>, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: Arc<Grid<T>>) -> Self {
        Self::constant(grid, T::zero())
    }

    pub fn constant(grid: Arc<Grid<T>>, c: T) -> Self {
        let values = vec![c; grid.len()];
        Self { grid, values }
    }

    /// Samples `f(x)` at every collocation point.
    pub fn from_fn(grid: Arc<Grid<T>>, mut f: impl FnMut(&[T]) -> T) -> Self {
        let mut x = vec![T::zero(); grid.dim()];
        let values = (0..grid.len())
            .map(|i| {
                grid.write_coordinates(i, &mut x);
                f(&x)
            })
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self::from_raw(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        self.check_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Self::from_raw(self.grid.clone(), values))
    }

    pub fn scaled(&self, c: T) -> Self {
        self.map(|v| c * v)
    }

    pub fn scale(&mut self, c: T) {
        self.values.iter_mut().for_each(|v| *v = *v * c);
    }

    /// `self += c * other`
    pub fn axpy(&mut self, c: T, other: &Self) -> Result<()> {
        self.check_grid(other)?;
        for (a, &b) in self.values.iter_mut().zip(&other.values) {
            *a = *a + c * b;
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a * b)
    }

    /// Weighted sum `Σ w_i f_i` of fields on a common grid.
    pub fn combination(weights: &[T], fields: &[&Self]) -> Result<Self> {
        let first = fields
            .first()
            .ok_or_else(|| Error::param("fields", "empty combination"))?;
        if weights.len() != fields.len() {
            return Err(Error::SizeMismatch {
                expected: fields.len(),
                found: weights.len(),
            });
        }
        let mut out = Self::zeros(first.grid.clone());
        for (&w, f) in weights.iter().zip(fields) {
            out.axpy(w, f)?;
        }
        Ok(out)
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Spatial mean, i.e. `integrate(f) / |Ω|`.
    pub fn mean(&self) -> T {
        integrate(self) / self.grid.volume()
    }

    pub(crate) fn check_grid(&self, other: &Self) -> Result<()> {
        if same_grid(&self.grid, &other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// Fourier coefficients in the half-spectrum layout of [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<T: Real> {
    grid: Arc<Grid<T>>,
    coeffs: Vec<Complex<T>>,
}

impl<T: Real> Spectrum<T> {
    pub fn new(grid: Arc<Grid<T>>, coeffs: Vec<Complex<T>>) -> Result<Self> {
        if coeffs.len() != grid.spectral_len() {
            return Err(Error::SizeMismatch {
                expected: grid.spectral_len(),
                found: coeffs.len(),
            });
        }
        Ok(Self { grid, coeffs })
    }

    pub fn zeros(grid: Arc<Grid<T>>) -> Self {
        let coeffs = vec![Complex::new(T::zero(), T::zero()); grid.spectral_len()];
        Self { grid, coeffs }
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.coeffs
    }

    /// `self += c * other`
    pub fn axpy(&mut self, c: T, other: &Self) -> Result<()> {
        if !same_grid(&self.grid, &other.grid) {
            return Err(Error::GridMismatch);
        }
        for (a, &b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a = *a + b * c;
        }
        Ok(())
    }

    pub fn scale(&mut self, c: T) {
        self.coeffs.iter_mut().for_each(|z| *z = *z * c);
    }
}

/// `∫_Ω f`, exact for trigonometric polynomials resolved by the grid.
pub fn integrate<T: Real>(f: &Field<T>) -> T {
    let sum = f.values.iter().fold(T::zero(), |acc, &v| acc + v);
    sum * f.grid.cell_volume()
}

/// L² inner product `∫_Ω f g`.
pub fn inner<T: Real>(f: &Field<T>, g: &Field<T>) -> Result<T> {
    f.check_grid(g)?;
    let sum = f
        .values
        .iter()
        .zip(&g.values)
        .fold(T::zero(), |acc, (&a, &b)| acc + a * b);
    Ok(sum * f.grid.cell_volume())
}

pub fn l2_norm<T: Real>(f: &Field<T>) -> T {
    inner(f, f).expect("field shares its own grid").sqrt()
}

/// `‖f - g‖₂`
pub fn l2_distance<T: Real>(f: &Field<T>, g: &Field<T>) -> Result<T> {
    Ok(l2_norm(&f.sub(g)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid1(n: usize, l: f64) -> Arc<Grid<f64>> {
        Grid::new(&[l], &[n]).unwrap().into_shared()
    }

    #[test]
    fn constant_integrates_to_volume() {
        let g = Grid::new(&[2.0, 3.0], &[8, 4]).unwrap().into_shared();
        let f = Field::constant(g, 1.5f64);
        assert!((integrate(&f) - 9.0).abs() < 1e-14);
    }

    #[test]
    fn sine_is_orthogonal_to_constants() {
        let l = 3.0;
        let g = grid1(16, l);
        let f = Field::from_fn(g, |x| (std::f64::consts::TAU * x[0] / l).sin());
        assert!(integrate(&f).abs() < 1e-14);
        assert!((l2_norm(&f).powi(2) - l / 2.0).abs() < 1e-13);
    }

    #[test]
    fn rejects_non_finite_and_wrong_length() {
        let g = grid1(4, 1.0);
        assert!(Field::new(g.clone(), vec![0.0; 3]).is_err());
        assert!(Field::new(g, vec![0.0, f64::NAN, 0.0, 0.0]).is_err());
    }

    #[test]
    fn mixing_grids_is_an_error() {
        let a = Field::zeros(grid1(4, 1.0));
        let b = Field::zeros(grid1(4, 2.0));
        assert!(matches!(inner(&a, &b), Err(Error::GridMismatch)));
    }
}
