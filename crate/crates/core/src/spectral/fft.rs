use std::sync::Arc;

use num_complex::Complex;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};

use super::field::{same_grid, Field, Spectrum};
use super::grid::Grid;
use super::symbol::DiagonalSymbol;
use crate::error::{Error, Result};
use crate::real::{count, lit, Real};

/// Multipliers below this magnitude make `solve_diagonal` refuse to divide.
pub const SINGULAR_THRESHOLD: f64 = 1e-14;

/// Transform plans and per-mode tables for one grid.
///
/// Forward transforms are unnormalized; the inverse carries `1/∏N`. Plans
/// are immutable, so one instance can be shared read-only between threads.
pub struct SpectralOps<T: Real> {
    grid: Arc<Grid<T>>,
    r2c: Arc<dyn RealToComplex<T>>,
    c2r: Arc<dyn ComplexToReal<T>>,
    axis_forward: Vec<Arc<dyn Fft<T>>>,
    axis_inverse: Vec<Arc<dyn Fft<T>>>,
    k2: Vec<T>,
    // Per-axis wavenumbers with the Nyquist entries zeroed (odd symbols).
    k_odd: Vec<Vec<T>>,
    weights: Vec<T>,
    aliased: Vec<bool>,
}

impl<T: Real> std::fmt::Debug for SpectralOps<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralOps").field("grid", &self.grid).finish_non_exhaustive()
    }
}

impl<T: Real> SpectralOps<T> {
    pub fn new(grid: Arc<Grid<T>>) -> Self {
        let dim = grid.dim();
        let last = dim - 1;
        let mut real_planner = RealFftPlanner::<T>::new();
        let r2c = real_planner.plan_fft_forward(grid.modes()[last]);
        let c2r = real_planner.plan_fft_inverse(grid.modes()[last]);
        let mut planner = FftPlanner::<T>::new();
        let axis_forward = (0..last).map(|a| planner.plan_fft_forward(grid.modes()[a])).collect();
        let axis_inverse = (0..last).map(|a| planner.plan_fft_inverse(grid.modes()[a])).collect();

        let shape = grid.spectral_shape();
        let total = grid.spectral_len();
        let mut k_odd = vec![Vec::with_capacity(total); dim];
        let mut aliased = Vec::with_capacity(total);
        for flat in 0..total {
            let idx = grid.spectral_index(flat);
            let mut cut = false;
            for a in 0..dim {
                let k = if grid.is_nyquist(a, idx[a]) {
                    T::zero()
                } else {
                    grid.wavenumber(a, idx[a])
                };
                k_odd[a].push(k);
                let m = grid.frequency(a, idx[a]).unsigned_abs() as usize;
                cut |= 3 * m > grid.modes()[a];
            }
            aliased.push(cut);
        }
        debug_assert_eq!(shape.iter().product::<usize>(), total);

        Self {
            k2: grid.wavenumber_squared(),
            weights: grid.hermitian_weights(),
            grid,
            r2c,
            c2r,
            axis_forward,
            axis_inverse,
            k_odd,
            aliased,
        }
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    /// |k|² per half-spectrum entry.
    pub fn wavenumber_squared(&self) -> &[T] {
        &self.k2
    }

    fn check(&self, grid: &Arc<Grid<T>>) -> Result<()> {
        if same_grid(&self.grid, grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn forward(&self, f: &Field<T>) -> Result<Spectrum<T>> {
        self.check(f.grid())?;
        let n_last = *self.grid.modes().last().unwrap();
        let half = n_last / 2 + 1;
        let rows = self.grid.len() / n_last;
        let mut coeffs = vec![Complex::new(T::zero(), T::zero()); rows * half];
        let mut line = self.r2c.make_input_vec();
        let mut scratch = self.r2c.make_scratch_vec();
        for (r, out) in coeffs.chunks_exact_mut(half).enumerate() {
            line.copy_from_slice(&f.values()[r * n_last..(r + 1) * n_last]);
            self.r2c
                .process_with_scratch(&mut line, out, &mut scratch)
                .expect("buffer sizes fixed by plan");
        }
        for a in 0..self.grid.dim() - 1 {
            self.along_axis(&mut coeffs, a, &self.axis_forward[a]);
        }
        Spectrum::new(self.grid.clone(), coeffs)
    }

    pub fn inverse(&self, s: &Spectrum<T>) -> Result<Field<T>> {
        self.check(s.grid())?;
        let mut coeffs = s.coeffs().to_vec();
        for a in 0..self.grid.dim() - 1 {
            self.along_axis(&mut coeffs, a, &self.axis_inverse[a]);
        }
        let n_last = *self.grid.modes().last().unwrap();
        let half = n_last / 2 + 1;
        let mut values = vec![T::zero(); self.grid.len()];
        let mut scratch = self.c2r.make_scratch_vec();
        let norm = T::one() / count::<T>(self.grid.len());
        for (row, out) in coeffs.chunks_exact_mut(half).zip(values.chunks_exact_mut(n_last)) {
            // After the other axes are undone these entries are real up to rounding.
            row[0].im = T::zero();
            row[half - 1].im = T::zero();
            self.c2r
                .process_with_scratch(row, out, &mut scratch)
                .expect("buffer sizes fixed by plan");
            out.iter_mut().for_each(|v| *v = *v * norm);
        }
        Ok(Field::from_raw(self.grid.clone(), values))
    }

    fn along_axis(&self, data: &mut [Complex<T>], axis: usize, plan: &Arc<dyn Fft<T>>) {
        let shape = self.grid.spectral_shape();
        let n = shape[axis];
        let stride: usize = shape[axis + 1..].iter().product();
        let outer: usize = shape[..axis].iter().product();
        // Gather every line contiguously so one call batches all of them.
        let mut lines = vec![Complex::new(T::zero(), T::zero()); data.len()];
        let mut l = 0;
        for o in 0..outer {
            for i in 0..stride {
                let base = o * n * stride + i;
                for j in 0..n {
                    lines[l * n + j] = data[base + j * stride];
                }
                l += 1;
            }
        }
        plan.process(&mut lines);
        let mut l = 0;
        for o in 0..outer {
            for i in 0..stride {
                let base = o * n * stride + i;
                for j in 0..n {
                    data[base + j * stride] = lines[l * n + j];
                }
                l += 1;
            }
        }
    }

    pub fn apply_symbol(&self, s: &Spectrum<T>, d: &DiagonalSymbol<T>) -> Result<Spectrum<T>> {
        self.check(s.grid())?;
        self.check(d.grid())?;
        let mut out = s.clone();
        for (i, z) in out.coeffs_mut().iter_mut().enumerate() {
            *z = *z * d.multiplier(i);
        }
        Ok(out)
    }

    /// Inverts a diagonal operator mode by mode.
    pub fn solve_diagonal(&self, rhs: &Spectrum<T>, d: &DiagonalSymbol<T>) -> Result<Spectrum<T>> {
        self.check(rhs.grid())?;
        self.check(d.grid())?;
        let (i, m) = d.min_abs();
        if m < lit(SINGULAR_THRESHOLD) {
            return Err(Error::SingularMode {
                mode: self.grid.spectral_index(i),
                value: crate::real::to_f64(d.multiplier(i)),
            });
        }
        let mut out = rhs.clone();
        for (i, z) in out.coeffs_mut().iter_mut().enumerate() {
            *z = *z / d.multiplier(i);
        }
        Ok(out)
    }

    /// Applies `d` to a real-space field.
    pub fn apply(&self, f: &Field<T>, d: &DiagonalSymbol<T>) -> Result<Field<T>> {
        self.inverse(&self.apply_symbol(&self.forward(f)?, d)?)
    }

    /// Solves `d u = f` for a real-space right-hand side.
    pub fn solve(&self, f: &Field<T>, d: &DiagonalSymbol<T>) -> Result<Field<T>> {
        self.inverse(&self.solve_diagonal(&self.forward(f)?, d)?)
    }

    pub fn laplacian(&self, f: &Field<T>) -> Result<Field<T>> {
        let mut s = self.forward(f)?;
        for (z, &k2) in s.coeffs_mut().iter_mut().zip(&self.k2) {
            *z = *z * (-k2);
        }
        self.inverse(&s)
    }

    /// `∂f/∂x_axis`, with the unmatched Nyquist mode dropped.
    pub fn derivative(&self, f: &Field<T>, axis: usize) -> Result<Field<T>> {
        if axis >= self.grid.dim() {
            return Err(Error::param("axis", format!("{axis} >= dimension {}", self.grid.dim())));
        }
        let s = self.forward(f)?;
        self.inverse(&self.differentiate(&s, axis))
    }

    pub(crate) fn differentiate(&self, s: &Spectrum<T>, axis: usize) -> Spectrum<T> {
        let mut out = s.clone();
        for (z, &k) in out.coeffs_mut().iter_mut().zip(&self.k_odd[axis]) {
            *z = Complex::new(-z.im * k, z.re * k);
        }
        out
    }

    /// Pointwise `|∇f|²`.
    pub fn gradient_squared(&self, f: &Field<T>) -> Result<Field<T>> {
        let s = self.forward(f)?;
        let mut out = vec![T::zero(); self.grid.len()];
        for a in 0..self.grid.dim() {
            let d = self.inverse(&self.differentiate(&s, a))?;
            for (o, &v) in out.iter_mut().zip(d.values()) {
                *o = *o + v * v;
            }
        }
        Ok(Field::from_raw(self.grid.clone(), out))
    }

    /// `∫ f g` computed from coefficients via Parseval.
    pub fn spectral_inner(&self, a: &Spectrum<T>, b: &Spectrum<T>) -> Result<T> {
        self.check(a.grid())?;
        self.check(b.grid())?;
        let sum = a
            .coeffs()
            .iter()
            .zip(b.coeffs())
            .zip(&self.weights)
            .fold(T::zero(), |acc, ((x, y), &w)| acc + w * (x.re * y.re + x.im * y.im));
        Ok(sum * self.parseval_scale())
    }

    /// `(d u, u)` for a real symbol, from coefficients.
    pub fn quadratic_form(&self, s: &Spectrum<T>, d: &DiagonalSymbol<T>) -> Result<T> {
        self.check(s.grid())?;
        self.check(d.grid())?;
        let sum = s
            .coeffs()
            .iter()
            .zip(&self.weights)
            .enumerate()
            .fold(T::zero(), |acc, (i, (z, &w))| acc + w * d.multiplier(i) * z.norm_sqr());
        Ok(sum * self.parseval_scale())
    }

    fn parseval_scale(&self) -> T {
        let n = count::<T>(self.grid.len());
        self.grid.volume() / (n * n)
    }

    /// `‖(1 + |k|²) f̂‖`, the spectral H² norm.
    pub fn h2_norm(&self, f: &Field<T>) -> Result<T> {
        let s = self.forward(f)?;
        let sum = s
            .coeffs()
            .iter()
            .zip(&self.weights)
            .zip(&self.k2)
            .fold(T::zero(), |acc, ((z, &w), &k2)| {
                let m = T::one() + k2;
                acc + w * m * m * z.norm_sqr()
            });
        Ok((sum * self.parseval_scale()).sqrt())
    }

    /// Zeroes the modes outside the 2/3 band on any axis.
    pub fn dealias(&self, s: &mut Spectrum<T>) {
        for (z, &cut) in s.coeffs_mut().iter_mut().zip(&self.aliased) {
            if cut {
                *z = Complex::new(T::zero(), T::zero());
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{PI, TAU};

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::spectral::field::{inner, integrate, l2_norm};

    fn random_field(grid: &Arc<Grid<f64>>, seed: u64) -> Field<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        Field::new(grid.clone(), v).unwrap()
    }

    fn grids() -> Vec<Arc<Grid<f64>>> {
        vec![
            Grid::new(&[1.0], &[8]).unwrap().into_shared(),
            Grid::new(&[2.0, 3.0], &[16, 16]).unwrap().into_shared(),
            Grid::new(&[1.0, 2.0], &[6, 10]).unwrap().into_shared(),
            Grid::new(&[TAU, TAU, 1.0], &[8, 4, 6]).unwrap().into_shared(),
        ]
    }

    #[test]
    fn zero_field_has_zero_spectrum() {
        let g = Grid::new(&[1.0, 1.0], &[8, 8]).unwrap().into_shared();
        let ops = SpectralOps::new(g.clone());
        let s = ops.forward(&Field::zeros(g)).unwrap();
        assert!(s.coeffs().iter().all(|z| z.norm() == 0.0));
        assert!(ops.inverse(&s).unwrap().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_cosine_has_two_coefficients() {
        let l = 2.5;
        let g = Grid::new(&[l], &[8]).unwrap().into_shared();
        let ops = SpectralOps::new(g.clone());
        let f = Field::from_fn(g, |x| (TAU * x[0] / l).cos());
        let s = ops.forward(&f).unwrap();
        // Half spectrum stores m = 0..4; the m = -1 partner is implied.
        for (m, z) in s.coeffs().iter().enumerate() {
            if m == 1 {
                assert!((z.re - 4.0).abs() < 1e-12 && z.im.abs() < 1e-12);
            } else {
                assert!(z.norm() < 1e-12, "mode {m}: {z}");
            }
        }
    }

    // Oracle: the defining sum, evaluated term by term.
    #[test]
    fn forward_matches_direct_dft() {
        for (i, g) in grids().into_iter().enumerate().filter(|(_, g)| g.len() <= 200) {
            let ops = SpectralOps::new(g.clone());
            let f = random_field(&g, 40 + i as u64);
            let s = ops.forward(&f).unwrap();
            for (flat, z) in s.coeffs().iter().enumerate() {
                let m = g.spectral_index(flat);
                let mut acc = num_complex::Complex::new(0.0, 0.0);
                for (p, &v) in f.values().iter().enumerate() {
                    let j = g.point_index(p);
                    let phase: f64 = (0..g.dim())
                        .map(|a| g.frequency(a, m[a]) as f64 * j[a] as f64 / g.modes()[a] as f64)
                        .sum();
                    acc += num_complex::Complex::from_polar(v, -TAU * phase);
                }
                assert!((acc - z).norm() < 1e-11, "grid {i} mode {m:?}: {acc} vs {z}");
            }
        }
    }

    #[test]
    fn round_trip_on_random_data() {
        for (i, g) in grids().into_iter().enumerate() {
            let ops = SpectralOps::new(g.clone());
            let f = random_field(&g, i as u64);
            let back = ops.inverse(&ops.forward(&f).unwrap()).unwrap();
            let err = back.sub(&f).unwrap().max_abs() / f.max_abs();
            assert!(err <= 1e-12, "grid {i}: {err}");
        }
    }

    #[test]
    fn laplacian_and_bilaplacian_eigenfunctions() {
        let l = 3.0;
        let g = Grid::new(&[l, l], &[16, 16]).unwrap().into_shared();
        let ops = SpectralOps::new(g.clone());
        let f = Field::from_fn(g.clone(), |x| (TAU * x[0] / l).sin());
        let lap = ops.apply(&f, &DiagonalSymbol::laplacian(g.clone())).unwrap();
        let k = TAU / l;
        let expect = f.scaled(-k * k);
        assert!(lap.sub(&expect).unwrap().max_abs() < 1e-11);

        let h = Field::from_fn(g.clone(), |x| (2.0 * TAU * x[1] / l).cos());
        let bi = ops.apply(&h, &DiagonalSymbol::bilaplacian(g.clone())).unwrap();
        let k = 2.0 * TAU / l;
        assert!(bi.sub(&h.scaled(k.powi(4))).unwrap().max_abs() < 1e-8 * k.powi(4));

        let id = ops.apply(&h, &DiagonalSymbol::identity(g)).unwrap();
        assert!(id.sub(&h).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn diagonal_solve_inverts_apply() {
        for (i, g) in grids().into_iter().enumerate() {
            let ops = SpectralOps::new(g.clone());
            let d = DiagonalSymbol::radial(g.clone(), |k2| 1.0 + k2 * k2).unwrap();
            let rhs = ops.forward(&random_field(&g, 10 + i as u64)).unwrap();
            let u = ops.solve_diagonal(&rhs, &d).unwrap();
            let back = ops.apply_symbol(&u, &d).unwrap();
            let scale = rhs.coeffs().iter().fold(0.0f64, |m, z| m.max(z.norm()));
            for (a, b) in back.coeffs().iter().zip(rhs.coeffs()) {
                assert!((a - b).norm() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn helmholtz_solve_is_scalar_division() {
        let l = 2.0;
        let g = Grid::new(&[l], &[16]).unwrap().into_shared();
        let ops = SpectralOps::new(g.clone());
        let dt = 0.1;
        let d = DiagonalSymbol::laplacian(g.clone()).scale(-1.0).shift(1.5 / dt);
        let f = Field::from_fn(g, |x| (3.0 * TAU * x[0] / l).cos());
        let u = ops.solve(&f, &d).unwrap();
        let k = 3.0 * TAU / l;
        let expect = f.scaled(1.0 / (1.5 / dt + k * k));
        assert!(u.sub(&expect).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn singular_symbol_names_the_mode() {
        let g = Grid::new(&[1.0, 1.0], &[4, 4]).unwrap().into_shared();
        let ops = SpectralOps::new(g.clone());
        let rhs = Spectrum::zeros(g.clone());
        let err = ops.solve_diagonal(&rhs, &DiagonalSymbol::laplacian(g)).unwrap_err();
        match err {
            Error::SingularMode { mode, .. } => assert_eq!(mode, vec![0, 0]),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn derivative_of_resolved_modes_is_exact() {
        let l = 2.0;
        let n = 16;
        let g = Grid::new(&[l], &[n]).unwrap().into_shared();
        let ops = SpectralOps::new(g.clone());
        for m in 1..n / 2 {
            let k = TAU * m as f64 / l;
            let f = Field::from_fn(g.clone(), |x| (k * x[0]).sin());
            let df = ops.derivative(&f, 0).unwrap();
            let expect = Field::from_fn(g.clone(), |x| k * (k * x[0]).cos());
            assert!(df.sub(&expect).unwrap().max_abs() < 1e-12 * k, "m = {m}");
        }
        // The Nyquist cosine has no resolvable derivative.
        let nyq = Field::from_fn(g.clone(), |x| (PI * n as f64 * x[0] / l).cos());
        assert!(ops.derivative(&nyq, 0).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn derivatives_integrate_to_zero() {
        for (i, g) in grids().into_iter().enumerate() {
            let ops = SpectralOps::new(g.clone());
            let f = random_field(&g, 20 + i as u64);
            for a in 0..g.dim() {
                let d = ops.derivative(&f, a).unwrap();
                assert!(integrate(&d).abs() < 1e-12 * (1.0 + l2_norm(&d)));
            }
            let lap = ops.laplacian(&f).unwrap();
            assert!(integrate(&lap).abs() < 1e-10);
        }
    }

    #[test]
    fn parseval_matches_real_space_inner() {
        for (i, g) in grids().into_iter().enumerate() {
            let ops = SpectralOps::new(g.clone());
            let f = random_field(&g, 30 + i as u64);
            let h = random_field(&g, 40 + i as u64);
            let direct = inner(&f, &h).unwrap();
            let spec = ops
                .spectral_inner(&ops.forward(&f).unwrap(), &ops.forward(&h).unwrap())
                .unwrap();
            assert!((direct - spec).abs() < 1e-12 * (1.0 + direct.abs()));
            assert!((inner(&f, &f).unwrap() - l2_norm(&f).powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn h2_norm_of_single_mode() {
        let l = 2.0;
        let g = Grid::new(&[l, l], &[16, 16]).unwrap().into_shared();
        let ops = SpectralOps::new(g.clone());
        let k = TAU / l;
        let f = Field::from_fn(g, |x| (k * x[0]).sin());
        // ‖sin‖² = |Ω|/2, weighted by (1+k²)².
        let expect = (1.0 + k * k) * (l * l / 2.0).sqrt();
        assert!((ops.h2_norm(&f).unwrap() - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn dealias_keeps_low_modes() {
        let g = Grid::new(&[1.0], &[12]).unwrap().into_shared();
        let ops = SpectralOps::new(g.clone());
        let f = Field::from_fn(g.clone(), |x| (TAU * x[0]).cos() + (5.0 * TAU * x[0]).cos());
        let mut s = ops.forward(&f).unwrap();
        ops.dealias(&mut s);
        let kept = ops.inverse(&s).unwrap();
        let expect = Field::from_fn(g, |x| (TAU * x[0]).cos());
        assert!(kept.sub(&expect).unwrap().max_abs() < 1e-14);
    }
}
