use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::real::{lit, to_f64, Real};
use crate::spectral::{Field, Grid};

fn require_dim<T: Real>(grid: &Grid<T>, dims: &[usize], what: &str) -> Result<()> {
    if dims.contains(&grid.dim()) {
        Ok(())
    } else {
        Err(Error::param("grid.dim", format!("{what} needs dimension in {dims:?}")))
    }
}

/// Six-armed star `tanh((1.5 + 1.2 cos 6θ - 2πr) / √(2α))` centred in the
/// domain.
pub fn star_initial<T: Real>(grid: &Arc<Grid<T>>, alpha: T) -> Result<Field<T>> {
    require_dim(grid, &[2], "star initial condition")?;
    if !(alpha > T::zero()) {
        return Err(Error::param("alpha", "must be > 0"));
    }
    let half = lit::<T>(0.5);
    let cx = grid.origin()[0] + half * grid.extents()[0];
    let cy = grid.origin()[1] + half * grid.extents()[1];
    let width = (lit::<T>(2.0) * alpha).sqrt();
    Ok(Field::from_fn(grid.clone(), |x| {
        let (dx, dy) = (x[0] - cx, x[1] - cy);
        let r = (dx * dx + dy * dy).sqrt();
        // cos 6θ is insensitive to the quadrant convention of the angle.
        let theta = dy.atan2(dx);
        ((lit::<T>(1.5) + lit::<T>(1.2) * (lit::<T>(6.0) * theta).cos() - T::TAU() * r) / width).tanh()
    }))
}

/// Square crystallite seed: centre, side length and lattice rotation θ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrystalPatch<T> {
    pub center: [T; 2],
    pub side: T,
    pub theta: T,
}

/// Liquid at density `mean` with hexagonal crystallites in each patch:
/// `mean + c1 (cos(c2 y_l/√3) cos(c2 x_l) - ½ cos(2 c2 y_l/√3))` in the
/// patch-local rotated coordinates.
pub fn crystal_initial<T: Real>(
    grid: &Arc<Grid<T>>,
    mean: T,
    c1: T,
    c2: T,
    patches: &[CrystalPatch<T>],
) -> Result<Field<T>> {
    require_dim(grid, &[2], "crystal initial condition")?;
    let half = lit::<T>(0.5);
    for (i, p) in patches.iter().enumerate() {
        if !(p.side > T::zero()) {
            return Err(Error::param("init.patches", format!("patch {i} has side {}", p.side)));
        }
        for (j, q) in patches.iter().enumerate().skip(i + 1) {
            let reach = half * (p.side + q.side);
            if (p.center[0] - q.center[0]).abs() < reach && (p.center[1] - q.center[1]).abs() < reach {
                return Err(Error::OverlappingPatches(i, j));
            }
        }
    }
    let sqrt3 = lit::<T>(3.0).sqrt();
    Ok(Field::from_fn(grid.clone(), |x| {
        for p in patches {
            let dx = x[0] - p.center[0];
            let dy = x[1] - p.center[1];
            if dx.abs() <= half * p.side && dy.abs() <= half * p.side {
                let (s, c) = p.theta.sin_cos();
                let xl = dx * s + dy * c;
                let yl = -dx * c + dy * s;
                return mean
                    + c1 * ((c2 * yl / sqrt3).cos() * (c2 * xl).cos()
                        - half * (lit::<T>(2.0) * c2 * yl / sqrt3).cos());
            }
        }
        mean
    }))
}

/// Sum of diffuse spheres `Σ tanh((r_i - |x - c_i|)/(√2 ε)) + (n - 1)`,
/// which is `-1` far from every sphere and `+1` inside any one of them.
pub fn spheres_initial<T: Real>(
    grid: &Arc<Grid<T>>,
    centers: &[Vec<T>],
    radii: &[T],
    epsilon: T,
) -> Result<Field<T>> {
    if centers.is_empty() || centers.len() != radii.len() {
        return Err(Error::param(
            "init.radii",
            format!("{} centres for {} radii", centers.len(), radii.len()),
        ));
    }
    if let Some(c) = centers.iter().find(|c| c.len() != grid.dim()) {
        return Err(Error::param("init.centers", format!("centre {c:?} has wrong dimension")));
    }
    if !(epsilon > T::zero()) {
        return Err(Error::param("epsilon", "must be > 0"));
    }
    let width = lit::<T>(2.0).sqrt() * epsilon;
    let offset = T::from_usize(centers.len() - 1).expect("small count");
    Ok(Field::from_fn(grid.clone(), |x| {
        let mut v = offset;
        for (c, &r) in centers.iter().zip(radii) {
            let d2 = x.iter().zip(c).fold(T::zero(), |acc, (&xi, &ci)| acc + (xi - ci) * (xi - ci));
            v = v + ((r - d2.sqrt()) / width).tanh();
        }
        v
    }))
}

/// `mean + amplitude · U[-1, 1]`, drawn from a seeded ChaCha8 stream so the
/// same seed yields bit-identical fields on every platform.
pub fn random_initial<T: Real>(grid: &Arc<Grid<T>>, mean: T, amplitude: T, seed: u64) -> Field<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (m, a) = (to_f64(mean), to_f64(amplitude));
    let values = (0..grid.len())
        .map(|_| lit(m + a * rng.random_range(-1.0..=1.0)))
        .collect();
    Field::from_raw(grid.clone(), values)
}
