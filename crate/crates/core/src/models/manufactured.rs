use std::sync::Arc;

use super::{ModelKind, ModelSpec};
use crate::error::{Error, Result};
use crate::real::Real;
use crate::spectral::{Field, Grid};

/// Manufactured solution `φ(x, y, t) = exp(sin(πx) sin(πy)) sin(t)`.
///
/// Space and time separate as `φ = u(x) sin t`, so every spatial
/// derivative is sampled once and rescaled per time level.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ExpSinSin<T: Real> {
    _marker: std::marker::PhantomData<T>,
}

/// Closed-form spatial factors of [`ExpSinSin`] at one point.
struct Profile<T> {
    u: T,
    lap: T,
    bilap: T,
    grad2: T,
}

impl<T: Real> ExpSinSin<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn value(&self, x: &[T], t: T) -> T {
        let pi = T::PI();
        ((pi * x[0]).sin() * (pi * x[1]).sin()).exp() * t.sin()
    }

    pub fn time_derivative(&self, x: &[T], t: T) -> T {
        let pi = T::PI();
        ((pi * x[0]).sin() * (pi * x[1]).sin()).exp() * t.cos()
    }

    fn check(grid: &Grid<T>) -> Result<()> {
        if grid.dim() != 2 {
            return Err(Error::param(
                "grid.dim",
                "the exp(sin sin) manufactured solution is two-dimensional",
            ));
        }
        Ok(())
    }

    pub fn sample(&self, grid: &Arc<Grid<T>>, t: T) -> Result<Field<T>> {
        Self::check(grid)?;
        Ok(Field::from_fn(grid.clone(), |x| self.value(x, t)))
    }

    // With s = sin a sin b (a = πx, b = πy) and u = e^s:
    // Δu = u q, q = |∇s|² + Δs, and Δ²u = u (q² + 2∇s·∇q + Δq).
    fn profile(x: &[T]) -> Profile<T> {
        let pi = T::PI();
        let pi2 = pi * pi;
        let two = T::one() + T::one();
        let four = two * two;
        let (sa, ca) = (pi * x[0]).sin_cos();
        let (sb, cb) = (pi * x[1]).sin_cos();
        let s = sa * sb;
        let u = s.exp();
        let sx = pi * ca * sb;
        let sy = pi * sa * cb;
        let grad_s2 = sx * sx + sy * sy;
        let q = grad_s2 - two * pi2 * s;
        let pi3 = pi2 * pi;
        let qx = pi3 * (two * sa * ca * (cb * cb - sb * sb) - two * ca * sb);
        let qy = pi3 * (two * sb * cb * (ca * ca - sa * sa) - two * sa * cb);
        let (c2a, c2b) = ((two * pi * x[0]).cos(), (two * pi * x[1]).cos());
        let lap_q = pi2 * pi2 * (four * c2a * c2b + four * s);
        Profile {
            u,
            lap: u * q,
            bilap: u * (q * q + two * (sx * qx + sy * qy) + lap_q),
            grad2: u * u * grad_s2,
        }
    }

    /// `Δφ(·, t)` from the closed form.
    pub fn laplacian(&self, grid: &Arc<Grid<T>>, t: T) -> Result<Field<T>> {
        Self::check(grid)?;
        Ok(Field::from_fn(grid.clone(), |x| Self::profile(x).lap * t.sin()))
    }

    /// `Δ²φ(·, t)` from the closed form.
    pub fn bilaplacian(&self, grid: &Arc<Grid<T>>, t: T) -> Result<Field<T>> {
        Self::check(grid)?;
        Ok(Field::from_fn(grid.clone(), |x| Self::profile(x).bilap * t.sin()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForcingMode {
    /// Derivatives from closed-form expressions (Allen-Cahn, Cahn-Hilliard).
    ClosedForm,
    /// Derivatives of the sampled exact solution taken spectrally.
    Spectral,
}

#[derive(Debug, Clone)]
enum Terms<T: Real> {
    /// `u`, `𝓐u` and, for divergence-form mobilities, `Δu` and `|∇u|²`.
    Closed {
        u: Vec<T>,
        a_u: Vec<T>,
        lap_u: Vec<T>,
        grad2_u: Vec<T>,
    },
    Spectral { u: Field<T>, a_u: Field<T> },
}

/// Source term `f(·, t) = φ_t + 𝓐φ + g(φ)` that makes a manufactured
/// solution exact for one model.
#[derive(Debug, Clone)]
pub struct Forcing<T: Real> {
    exact: ExpSinSin<T>,
    mode: ForcingMode,
    terms: Terms<T>,
    model: Box<ModelSpec<T>>,
}

impl<T: Real> Forcing<T> {
    /// Closed form where available, spectral otherwise.
    pub fn manufactured(model: &ModelSpec<T>, exact: ExpSinSin<T>) -> Result<Self> {
        let mode = match model.kind() {
            ModelKind::AllenCahn { .. } | ModelKind::CahnHilliard { .. } => ForcingMode::ClosedForm,
            _ => ForcingMode::Spectral,
        };
        Self::with_mode(model, exact, mode)
    }

    pub fn with_mode(model: &ModelSpec<T>, exact: ExpSinSin<T>, mode: ForcingMode) -> Result<Self> {
        let grid = model.grid().clone();
        ExpSinSin::<T>::check(&grid)?;
        let mut model = model.clone();
        model.forcing = None;
        let terms = match mode {
            ForcingMode::ClosedForm => {
                let n = grid.len();
                let (mut u, mut a_u, mut lap_u, mut grad2_u) =
                    (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
                let (lin_l, lin_b, mob) = match *model.kind() {
                    // 𝓐u = -αΔu + λu
                    ModelKind::AllenCahn { alpha, lambda } => (-alpha, T::zero(), lambda),
                    // 𝓐u = m₀(αΔ²u - λΔu); the constant slot holds m₀.
                    ModelKind::CahnHilliard { alpha, m0, lambda } => (-m0 * lambda, m0 * alpha, m0),
                    _ => {
                        return Err(Error::param(
                            "model.forcing",
                            "closed-form forcing only exists for allen-cahn and cahn-hilliard",
                        ))
                    }
                };
                let is_ac = matches!(model.kind(), ModelKind::AllenCahn { .. });
                let mut x = vec![T::zero(); 2];
                for i in 0..n {
                    grid.write_coordinates(i, &mut x);
                    let p = ExpSinSin::<T>::profile(&x);
                    u.push(p.u);
                    a_u.push(if is_ac {
                        lin_l * p.lap + mob * p.u
                    } else {
                        lin_l * p.lap + lin_b * p.bilap
                    });
                    lap_u.push(p.lap);
                    grad2_u.push(p.grad2);
                }
                Terms::Closed {
                    u,
                    a_u,
                    lap_u,
                    grad2_u,
                }
            }
            ForcingMode::Spectral => {
                let u = exact.sample(&grid, T::FRAC_PI_2())?;
                let a_u = model.ops().apply(&u, model.implicit_symbol())?;
                Terms::Spectral { u, a_u }
            }
        };
        Ok(Self {
            exact,
            mode,
            terms,
            model: Box::new(model),
        })
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        self.model.grid()
    }

    pub fn mode(&self) -> ForcingMode {
        self.mode
    }

    pub fn exact(&self) -> &ExpSinSin<T> {
        &self.exact
    }

    /// `f(·, t)`
    pub fn at(&self, t: T) -> Field<T> {
        let (st, ct) = t.sin_cos();
        let grid = self.grid().clone();
        match &self.terms {
            Terms::Closed {
                u,
                a_u,
                lap_u,
                grad2_u,
            } => {
                let mut out = Vec::with_capacity(u.len());
                match *self.model.kind() {
                    ModelKind::AllenCahn { .. } => {
                        for (&uv, &au) in u.iter().zip(a_u) {
                            let phi = uv * st;
                            out.push(uv * ct + au * st + self.model.potential_prime(phi));
                        }
                    }
                    ModelKind::CahnHilliard { m0, .. } => {
                        // g(φ) = -m₀Δ F'(φ) = -m₀(F''(φ)Δφ + F'''(φ)|∇φ|²)
                        for i in 0..u.len() {
                            let phi = u[i] * st;
                            let (f2, f3) = self.model.potential_derivs(phi);
                            let g = -m0 * (f2 * lap_u[i] * st + f3 * grad2_u[i] * st * st);
                            out.push(u[i] * ct + a_u[i] * st + g);
                        }
                    }
                    _ => unreachable!("closed-form terms only built for AC/CH"),
                }
                Field::from_raw(grid, out)
            }
            Terms::Spectral { u, a_u } => {
                let phi = u.scaled(st);
                let g = self
                    .model
                    .explicit_term(&phi)
                    .expect("forcing model shares its grid");
                let mut out = u.scaled(ct);
                out.axpy(st, a_u).expect("same grid");
                out.axpy(T::one(), &g).expect("same grid");
                out
            }
        }
    }
}
