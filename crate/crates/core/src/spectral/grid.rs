use std::sync::Arc;

use crate::error::{Error, Result};
use crate::real::{count, Real};

/// Periodic tensor-product grid on `origin + [0, L_0) x ... x [0, L_{d-1})`.
///
/// Points are stored row-major with the last axis fastest. The spectral
/// layout keeps the full extent on every axis except the last, which holds
/// the `N/2 + 1` non-negative frequencies of a real-to-complex transform.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T: Real> {
    extents: Vec<T>,
    modes: Vec<usize>,
    origin: Vec<T>,
}

impl<T: Real> Grid<T> {
    pub fn new(extents: &[T], modes: &[usize]) -> Result<Self> {
        let origin = vec![T::zero(); extents.len()];
        Self::with_origin(extents, modes, &origin)
    }

    /// Square/cubic grid with the same length and resolution on every axis.
    pub fn uniform(dim: usize, length: T, n: usize) -> Result<Self> {
        Self::new(&vec![length; dim], &vec![n; dim])
    }

    pub fn with_origin(extents: &[T], modes: &[usize], origin: &[T]) -> Result<Self> {
        let dim = modes.len();
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in 1..=3")));
        }
        if extents.len() != dim || origin.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "{} extents / {} origins for {dim} axes",
                extents.len(),
                origin.len()
            )));
        }
        for (axis, &n) in modes.iter().enumerate() {
            if n < 4 || n % 2 != 0 {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis}: point count {n} must be even and >= 4"
                )));
            }
        }
        for (axis, &l) in extents.iter().enumerate() {
            if !(l.is_finite() && l > T::zero()) {
                return Err(Error::InvalidGrid(format!("axis {axis}: length {l} must be > 0")));
            }
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidGrid("origin must be finite".into()));
        }
        modes
            .iter()
            .try_fold(1usize, |acc, &n| acc.checked_mul(n))
            .ok_or_else(|| Error::InvalidGrid("point count overflows usize".into()))?;
        Ok(Self {
            extents: extents.to_vec(),
            modes: modes.to_vec(),
            origin: origin.to_vec(),
        })
    }

    pub fn into_shared(self) -> Arc<Self> {
        Arc::new(self)
    }

    pub fn dim(&self) -> usize {
        self.modes.len()
    }

    pub fn extents(&self) -> &[T] {
        &self.extents
    }

    pub fn modes(&self) -> &[usize] {
        &self.modes
    }

    pub fn origin(&self) -> &[T] {
        &self.origin
    }

    pub fn len(&self) -> usize {
        self.modes.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Per-axis shape of the half spectrum.
    pub fn spectral_shape(&self) -> Vec<usize> {
        let mut shape = self.modes.clone();
        let last = shape.len() - 1;
        shape[last] = shape[last] / 2 + 1;
        shape
    }

    pub fn spectral_len(&self) -> usize {
        self.spectral_shape().iter().product()
    }

    /// |Ω|
    pub fn volume(&self) -> T {
        self.extents.iter().fold(T::one(), |acc, &l| acc * l)
    }

    pub fn cell_volume(&self) -> T {
        self.volume() / count(self.len())
    }

    pub fn spacing(&self, axis: usize) -> T {
        self.extents[axis] / count(self.modes[axis])
    }

    /// Signed integer frequency for storage index `index` on `axis` (full
    /// axis ordering `0, 1, .., N/2, -N/2+1, .., -1`).
    pub fn frequency(&self, axis: usize, index: usize) -> i64 {
        let n = self.modes[axis];
        if index <= n / 2 {
            index as i64
        } else {
            index as i64 - n as i64
        }
    }

    /// Angular wavenumber `2 pi m / L` for storage index `index` on `axis`.
    pub fn wavenumber(&self, axis: usize, index: usize) -> T {
        let m = T::from_i64(self.frequency(axis, index)).expect("frequency fits scalar");
        T::TAU() * m / self.extents[axis]
    }

    pub fn is_nyquist(&self, axis: usize, index: usize) -> bool {
        index == self.modes[axis] / 2
    }

    /// Multi-index of a flat half-spectrum index.
    pub fn spectral_index(&self, flat: usize) -> Vec<usize> {
        unravel(flat, &self.spectral_shape())
    }

    /// Multi-index of a flat real-space index.
    pub fn point_index(&self, flat: usize) -> Vec<usize> {
        unravel(flat, &self.modes)
    }

    /// Physical coordinates of a flat real-space index.
    pub fn coordinates(&self, flat: usize) -> Vec<T> {
        let mut x = vec![T::zero(); self.dim()];
        self.write_coordinates(flat, &mut x);
        x
    }

    pub(crate) fn write_coordinates(&self, flat: usize, out: &mut [T]) {
        let mut rest = flat;
        for axis in (0..self.dim()).rev() {
            let n = self.modes[axis];
            let i = rest % n;
            rest /= n;
            out[axis] = self.origin[axis] + count::<T>(i) * self.spacing(axis);
        }
    }

    /// |k|^2 for every half-spectrum entry.
    pub fn wavenumber_squared(&self) -> Vec<T> {
        self.map_wavevectors(|k| k.iter().fold(T::zero(), |acc, &ki| acc + ki * ki))
    }

    /// Evaluates `f(k)` on the wavevector of every half-spectrum entry.
    pub fn map_wavevectors(&self, mut f: impl FnMut(&[T]) -> T) -> Vec<T> {
        let shape = self.spectral_shape();
        let total: usize = shape.iter().product();
        let mut k = vec![T::zero(); self.dim()];
        let mut out = Vec::with_capacity(total);
        for flat in 0..total {
            let idx = unravel(flat, &shape);
            for axis in 0..self.dim() {
                k[axis] = self.wavenumber(axis, idx[axis]);
            }
            out.push(f(&k));
        }
        out
    }

    /// Parseval weights of the half spectrum: entries whose conjugate partner
    /// is not stored count twice.
    pub fn hermitian_weights(&self) -> Vec<T> {
        let shape = self.spectral_shape();
        let last = shape.len() - 1;
        let half = shape[last];
        let two = T::one() + T::one();
        (0..self.spectral_len())
            .map(|flat| {
                let j = flat % half;
                if j == 0 || j == half - 1 {
                    T::one()
                } else {
                    two
                }
            })
            .collect()
    }
}

fn unravel(mut flat: usize, shape: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; shape.len()];
    for axis in (0..shape.len()).rev() {
        idx[axis] = flat % shape[axis];
        flat /= shape[axis];
    }
    idx
}
