//! Concrete dissipative systems written as
//! `φ_t + 𝒢𝓛φ + 𝒢N(φ) = f`, with chemical potential `μ = 𝓛φ + N(φ)`,
//! energy `E = ½(𝓛φ,φ) + E_nl(φ) + C₀`, and dissipation `𝒦 = (𝒢μ, μ)`.

mod initial;
mod manufactured;

use std::sync::Arc;

pub use initial::{crystal_initial, random_initial, spheres_initial, star_initial, CrystalPatch};
pub use manufactured::{ExpSinSin, Forcing, ForcingMode};

use crate::error::{Error, Result};
use crate::real::{lit, Real};
use crate::spectral::{integrate, DiagonalSymbol, Field, Grid, SpectralOps};

/// Model family and its physical parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind<T: Real> {
    /// `φ_t = αΔφ - λφ - F'(φ)` with the double well `F = ¼(φ²-1)²`.
    AllenCahn { alpha: T, lambda: T },
    /// `φ_t = m₀Δ(-αΔφ + λφ + F'(φ))`.
    CahnHilliard { alpha: T, m0: T, lambda: T },
    /// Phase-field crystal, `φ_t = MΔμ`, `μ = (Δ+β)²φ + φ³ - εφ`.
    /// With `shift` the `-εφ` term moves into the implicit operator.
    Pfc { epsilon: T, beta: T, mobility: T, shift: bool },
    /// Penalized vesicle membrane with target volume `volume` and area `area`.
    Vesicle {
        epsilon: T,
        sigma1: T,
        sigma2: T,
        mobility: T,
        volume: T,
        area: T,
    },
}

impl<T: Real> ModelKind<T> {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::AllenCahn { .. } => "allen-cahn",
            ModelKind::CahnHilliard { .. } => "cahn-hilliard",
            ModelKind::Pfc { .. } => "pfc",
            ModelKind::Vesicle { .. } => "vesicle",
        }
    }
}

/// Energy, chemical potential and dissipation evaluated at one field.
#[derive(Debug, Clone)]
pub struct Evaluation<T: Real> {
    /// Shifted energy `E = E_tot + C₀`.
    pub energy: T,
    pub mu: Field<T>,
    /// `(𝒢μ, μ)`
    pub dissipation: T,
}

/// The two-component energy split used by the multiple-SAV scheme:
/// `E = E₁ + E₂`, with the quadratic part `½(𝓛φ,φ)` inside `E₁`.
#[derive(Debug, Clone)]
pub struct SplitEvaluation<T: Real> {
    /// Shifted component energies `E₁`, `E₂`.
    pub energies: [T; 2],
    /// Nonlinear parts `N₁`, `N₂` of the component variations.
    pub forces: [Field<T>; 2],
}

#[derive(Debug, Clone)]
pub struct ModelSpec<T: Real> {
    kind: ModelKind<T>,
    ops: Arc<SpectralOps<T>>,
    linear: DiagonalSymbol<T>,
    mobility: DiagonalSymbol<T>,
    implicit: DiagonalSymbol<T>,
    c0: T,
    split_weight: T,
    split_shifts: [T; 2],
    forcing: Option<Forcing<T>>,
}

fn positive<T: Real>(name: &str, v: T) -> Result<()> {
    if v.is_finite() && v > T::zero() {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be > 0, got {v}")))
    }
}

fn double_well<T: Real>(p: T) -> T {
    let s = p * p - T::one();
    lit::<T>(0.25) * s * s
}

fn double_well_prime<T: Real>(p: T) -> T {
    p * p * p - p
}

impl<T: Real> ModelSpec<T> {
    pub fn allen_cahn(alpha: T, grid: Arc<Grid<T>>) -> Result<Self> {
        Self::new(ModelKind::AllenCahn { alpha, lambda: T::zero() }, grid)
    }

    pub fn cahn_hilliard(alpha: T, m0: T, grid: Arc<Grid<T>>) -> Result<Self> {
        Self::new(
            ModelKind::CahnHilliard {
                alpha,
                m0,
                lambda: T::zero(),
            },
            grid,
        )
    }

    pub fn pfc(epsilon: T, beta: T, mobility: T, grid: Arc<Grid<T>>) -> Result<Self> {
        Self::new(
            ModelKind::Pfc {
                epsilon,
                beta,
                mobility,
                shift: false,
            },
            grid,
        )
    }

    #[allow(clippy::too_many_arguments)]
    pub fn vesicle(
        epsilon: T,
        sigma1: T,
        sigma2: T,
        mobility: T,
        volume: T,
        area: T,
        grid: Arc<Grid<T>>,
    ) -> Result<Self> {
        Self::new(
            ModelKind::Vesicle {
                epsilon,
                sigma1,
                sigma2,
                mobility,
                volume,
                area,
            },
            grid,
        )
    }

    pub fn new(kind: ModelKind<T>, grid: Arc<Grid<T>>) -> Result<Self> {
        Self::with_ops(kind, Arc::new(SpectralOps::new(grid)))
    }

    /// Builds a model reusing existing transform plans.
    pub fn with_ops(kind: ModelKind<T>, ops: Arc<SpectralOps<T>>) -> Result<Self> {
        let grid = ops.grid().clone();
        let one = T::one();
        let (linear, mobility, c0) = match kind {
            ModelKind::AllenCahn { alpha, lambda } => {
                positive("alpha", alpha)?;
                nonnegative("lambda", lambda)?;
                let lin = DiagonalSymbol::radial(grid.clone(), |k2| alpha * k2 + lambda)?;
                (lin, DiagonalSymbol::identity(grid.clone()), one)
            }
            ModelKind::CahnHilliard { alpha, m0, lambda } => {
                positive("alpha", alpha)?;
                positive("m0", m0)?;
                nonnegative("lambda", lambda)?;
                let lin = DiagonalSymbol::radial(grid.clone(), |k2| alpha * k2 + lambda)?;
                let mob = DiagonalSymbol::radial(grid.clone(), |k2| m0 * k2)?;
                (lin, mob, one)
            }
            ModelKind::Pfc {
                epsilon,
                beta,
                mobility,
                shift,
            } => {
                positive("epsilon", epsilon)?;
                positive("beta", beta)?;
                positive("mobility", mobility)?;
                let s = if shift { epsilon } else { T::zero() };
                let lin = DiagonalSymbol::radial(grid.clone(), |k2| (beta - k2) * (beta - k2) - s)?;
                let mob = DiagonalSymbol::radial(grid.clone(), |k2| mobility * k2)?;
                // ¼φ⁴ - (ε/2)φ² ≥ -ε²/4 pointwise.
                let c0 = grid.volume() * epsilon * epsilon * lit(0.25) + one;
                (lin, mob, c0)
            }
            ModelKind::Vesicle {
                epsilon,
                sigma1,
                sigma2,
                mobility,
                volume,
                area,
            } => {
                positive("epsilon", epsilon)?;
                positive("sigma1", sigma1)?;
                positive("sigma2", sigma2)?;
                positive("mobility", mobility)?;
                positive("volume", volume)?;
                positive("area", area)?;
                // εΔ² plus the linear part (1/σ₁)∫φ of the volume penalty,
                // which only sees the mean mode.
                let lin = DiagonalSymbol::radial(grid.clone(), |k2| epsilon * k2 * k2)?
                    .with_zero_mode(grid.volume() / sigma1)?;
                (lin, DiagonalSymbol::constant(grid.clone(), mobility), one + one)
            }
        };
        let implicit = mobility.compose(&linear)?;
        let mut spec = Self {
            kind,
            ops,
            linear,
            mobility,
            implicit,
            c0,
            split_weight: T::zero(),
            split_shifts: [one, one],
            forcing: None,
        };
        spec.set_split_weight(lit(0.5))?;
        Ok(spec)
    }

    /// Fraction `θ` of the potential assigned to the second energy component
    /// (`F₁ = (1-θ)F`, `F₂ = θF`). Ignored by the vesicle model, whose split
    /// is fixed by its structure.
    pub fn with_split_weight(mut self, theta: T) -> Result<Self> {
        self.set_split_weight(theta)?;
        Ok(self)
    }

    fn set_split_weight(&mut self, theta: T) -> Result<()> {
        if !(theta >= T::zero() && theta <= T::one()) {
            return Err(Error::param("split_weight", "must lie in [0, 1]"));
        }
        self.split_weight = theta;
        if !matches!(self.kind, ModelKind::Vesicle { .. }) {
            // Each component gets its share of the lower bound plus one.
            let bound = self.c0 - T::one();
            self.split_shifts = [(T::one() - theta) * bound + T::one(), theta * bound + T::one()];
        }
        Ok(())
    }

    /// Replaces the default energy shift `C₀`. It must stay above the lower
    /// bound of the free energy, i.e. above `default - 1`. A larger shift
    /// keeps `ξ` closer to one when the energy changes quickly.
    pub fn with_energy_shift(mut self, c0: T) -> Result<Self> {
        if matches!(self.kind, ModelKind::Vesicle { .. }) {
            return Err(Error::param("c0", "the vesicle model uses fixed per-component shifts"));
        }
        let bound = self.c0 - T::one();
        if !(c0 > bound) {
            return Err(Error::param("c0", format!("must exceed the energy lower bound {bound}")));
        }
        self.c0 = c0;
        let theta = self.split_weight;
        self.set_split_weight(theta)?;
        Ok(self)
    }

    pub fn with_forcing(mut self, forcing: Forcing<T>) -> Result<Self> {
        if **forcing.grid() != **self.grid() {
            return Err(Error::GridMismatch);
        }
        self.forcing = Some(forcing);
        Ok(self)
    }

    /// Attaches the forcing that makes `exact` a solution of this model.
    pub fn with_manufactured_forcing(self, exact: ExpSinSin<T>) -> Result<Self> {
        let forcing = Forcing::manufactured(&self, exact)?;
        self.with_forcing(forcing)
    }

    pub fn kind(&self) -> &ModelKind<T> {
        &self.kind
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        self.ops.grid()
    }

    pub fn ops(&self) -> &Arc<SpectralOps<T>> {
        &self.ops
    }

    /// 𝓛
    pub fn linear_symbol(&self) -> &DiagonalSymbol<T> {
        &self.linear
    }

    /// 𝒢
    pub fn mobility_symbol(&self) -> &DiagonalSymbol<T> {
        &self.mobility
    }

    /// 𝓐 = 𝒢𝓛, the implicitly treated operator.
    pub fn implicit_symbol(&self) -> &DiagonalSymbol<T> {
        &self.implicit
    }

    pub fn c0(&self) -> T {
        self.c0
    }

    pub fn split_weight(&self) -> T {
        self.split_weight
    }

    /// Constants `C₁`, `C₂` added to the split energies.
    pub fn split_shifts(&self) -> [T; 2] {
        self.split_shifts
    }

    pub fn forcing(&self) -> Option<&Forcing<T>> {
        self.forcing.as_ref()
    }

    pub fn forcing_at(&self, t: T) -> Option<Field<T>> {
        self.forcing.as_ref().map(|f| f.at(t))
    }

    /// Whether the model has a pointwise potential `F` (all but the vesicle).
    pub fn is_local(&self) -> bool {
        !matches!(self.kind, ModelKind::Vesicle { .. })
    }

    /// Pointwise potential `F(φ)` of the local models.
    fn potential(&self, p: T) -> T {
        match self.kind {
            ModelKind::AllenCahn { .. } | ModelKind::CahnHilliard { .. } => double_well(p),
            ModelKind::Pfc { epsilon, shift, .. } => {
                let quartic = lit::<T>(0.25) * p * p * p * p;
                if shift {
                    quartic
                } else {
                    quartic - epsilon * p * p * lit(0.5)
                }
            }
            ModelKind::Vesicle { .. } => unreachable!("vesicle energy is not pointwise"),
        }
    }

    fn potential_prime(&self, p: T) -> T {
        match self.kind {
            ModelKind::AllenCahn { .. } | ModelKind::CahnHilliard { .. } => double_well_prime(p),
            ModelKind::Pfc { epsilon, shift, .. } => {
                let cubic = p * p * p;
                if shift {
                    cubic
                } else {
                    cubic - epsilon * p
                }
            }
            ModelKind::Vesicle { .. } => unreachable!("vesicle energy is not pointwise"),
        }
    }

    /// Second and third derivatives of `F`, used by closed-form forcings.
    pub(crate) fn potential_derivs(&self, p: T) -> (T, T) {
        let three = lit::<T>(3.0);
        let six = lit::<T>(6.0);
        match self.kind {
            ModelKind::AllenCahn { .. } | ModelKind::CahnHilliard { .. } => (three * p * p - T::one(), six * p),
            ModelKind::Pfc { epsilon, shift, .. } => {
                let s = if shift { T::zero() } else { epsilon };
                (three * p * p - s, six * p)
            }
            ModelKind::Vesicle { .. } => unreachable!("vesicle energy is not pointwise"),
        }
    }

    /// `½(𝓛φ, φ)`
    pub fn quadratic_energy(&self, phi: &Field<T>) -> Result<T> {
        let s = self.ops.forward(phi)?;
        Ok(lit::<T>(0.5) * self.ops.quadratic_form(&s, &self.linear)?)
    }

    /// Unshifted free energy `E_tot(φ)`.
    pub fn energy_total(&self, phi: &Field<T>) -> Result<T> {
        let [e1, e2] = self.split(phi)?.energies;
        let [c1, c2] = self.split_shifts;
        Ok(e1 - c1 + e2 - c2)
    }

    /// Shifted energy `E(φ) = E_tot(φ) + C₀ > 0`.
    pub fn energy(&self, phi: &Field<T>) -> Result<T> {
        Ok(self.energy_total(phi)? + self.c0)
    }

    /// Nonlinear part `E_tot - ½(𝓛φ,φ)` of the free energy.
    pub fn nonlinear_energy(&self, phi: &Field<T>) -> Result<T> {
        if self.is_local() {
            Ok(integrate(&phi.map(|p| self.potential(p))))
        } else {
            Ok(self.energy_total(phi)? - self.quadratic_energy(phi)?)
        }
    }

    /// `N(φ)`, the nonlinear part of the chemical potential.
    pub fn nonlinear_force(&self, phi: &Field<T>) -> Result<Field<T>> {
        if self.is_local() {
            Ok(phi.map(|p| self.potential_prime(p)))
        } else {
            let [n1, n2] = self.split(phi)?.forces;
            n1.add(&n2)
        }
    }

    /// Explicit term `g(φ) = 𝒢N(φ)`.
    pub fn explicit_term(&self, phi: &Field<T>) -> Result<Field<T>> {
        self.ops.apply(&self.nonlinear_force(phi)?, &self.mobility)
    }

    /// Applies 𝒢 to a field.
    pub fn apply_mobility(&self, f: &Field<T>) -> Result<Field<T>> {
        self.ops.apply(f, &self.mobility)
    }

    /// `(𝒢u, v)`
    pub fn mobility_inner(&self, u: &Field<T>, v: &Field<T>) -> Result<T> {
        let su = self.ops.apply_symbol(&self.ops.forward(u)?, &self.mobility)?;
        self.ops.spectral_inner(&su, &self.ops.forward(v)?)
    }

    pub fn chemical_potential(&self, phi: &Field<T>) -> Result<Field<T>> {
        let lin = self.ops.apply(phi, &self.linear)?;
        lin.add(&self.nonlinear_force(phi)?)
    }

    /// `𝒦(φ) = (𝒢μ, μ)`
    pub fn dissipation(&self, phi: &Field<T>) -> Result<T> {
        Ok(self.evaluate(phi)?.dissipation)
    }

    /// Energy, chemical potential and dissipation in one pass.
    pub fn evaluate(&self, phi: &Field<T>) -> Result<Evaluation<T>> {
        let s = self.ops.forward(phi)?;
        let half = lit::<T>(0.5);
        let (energy, force) = if self.is_local() {
            let quad = half * self.ops.quadratic_form(&s, &self.linear)?;
            let nl = integrate(&phi.map(|p| self.potential(p)));
            (quad + nl + self.c0, phi.map(|p| self.potential_prime(p)))
        } else {
            let split = self.split_with(phi, &s)?;
            let [e1, e2] = split.energies;
            let [c1, c2] = self.split_shifts;
            let [n1, n2] = split.forces;
            (e1 - c1 + e2 - c2 + self.c0, n1.add(&n2)?)
        };
        let lin = self.ops.inverse(&self.ops.apply_symbol(&s, &self.linear)?)?;
        let mu = lin.add(&force)?;
        let dissipation = self.ops.quadratic_form(&self.ops.forward(&mu)?, &self.mobility)?;
        Ok(Evaluation {
            energy,
            mu,
            dissipation,
        })
    }

    /// Evaluates the two-component split `E = E₁ + E₂`.
    pub fn split(&self, phi: &Field<T>) -> Result<SplitEvaluation<T>> {
        let s = self.ops.forward(phi)?;
        self.split_with(phi, &s)
    }

    fn split_with(&self, phi: &Field<T>, s: &crate::spectral::Spectrum<T>) -> Result<SplitEvaluation<T>> {
        let [c1, c2] = self.split_shifts;
        let half = lit::<T>(0.5);
        match self.kind {
            ModelKind::Vesicle {
                epsilon,
                sigma1,
                sigma2,
                volume,
                area,
                ..
            } => {
                let ops = &self.ops;
                let k2 = ops.wavenumber_squared();
                let mut lap_hat = s.clone();
                for (z, &k) in lap_hat.coeffs_mut().iter_mut().zip(k2) {
                    *z = *z * (-k);
                }
                let lap = ops.inverse(&lap_hat)?;
                let g = phi.map(double_well_prime);
                let inv_eps = T::one() / epsilon;
                let inv_eps2 = inv_eps * inv_eps;
                let w = g.zip_map(&lap, |gv, l| -l + gv * inv_eps2)?;
                let bending = half * epsilon * integrate(&w.map(|v| v * v));
                let omega = self.grid().volume();
                let vol = integrate(phi) + omega;
                let grad2 = ops.quadratic_form(s, &DiagonalSymbol::radial(self.grid().clone(), |k| k)?)?;
                let b = half * epsilon * grad2 + inv_eps * integrate(&phi.map(double_well));
                let dv = vol - volume;
                let db = b - area;
                let e1 = bending + half / sigma1 * dv * dv + c1;
                let e2 = half / sigma2 * db * db + c2;

                // N₁ = -(1/ε)ΔG + (1/ε)G'w + (|Ω| - α)/σ₁
                let lap_g = ops.laplacian(&g)?;
                let constant = (omega - volume) / sigma1;
                let mut n1 = Vec::with_capacity(phi.values().len());
                for ((&p, &lg), &wv) in phi.values().iter().zip(lap_g.values()).zip(w.values()) {
                    let gp = lit::<T>(3.0) * p * p - T::one();
                    n1.push(inv_eps * (gp * wv - lg) + constant);
                }
                // N₂ = (1/σ₂)(B - β)(-εΔφ + F'(φ)/ε)
                let scale = db / sigma2;
                let n2 = lap.zip_map(&g, |l, gv| scale * (-epsilon * l + inv_eps * gv))?;
                Ok(SplitEvaluation {
                    energies: [e1, e2],
                    forces: [Field::from_raw(phi.grid().clone(), n1), n2],
                })
            }
            _ => {
                let theta = self.split_weight;
                let quad = half * self.ops.quadratic_form(s, &self.linear)?;
                let nl = integrate(&phi.map(|p| self.potential(p)));
                let force = phi.map(|p| self.potential_prime(p));
                Ok(SplitEvaluation {
                    energies: [quad + (T::one() - theta) * nl + c1, theta * nl + c2],
                    forces: [force.scaled(T::one() - theta), force.scaled(theta)],
                })
            }
        }
    }

    /// Vesicle volume `A(φ) = ∫(φ+1)` and area functional `B(φ)`.
    pub fn vesicle_measures(&self, phi: &Field<T>) -> Result<(T, T)> {
        let ModelKind::Vesicle { epsilon, .. } = self.kind else {
            return Err(Error::param("model", "volume/area only defined for the vesicle model"));
        };
        let s = self.ops.forward(phi)?;
        let grad2 = self
            .ops
            .quadratic_form(&s, &DiagonalSymbol::radial(self.grid().clone(), |k| k)?)?;
        let a = integrate(phi) + self.grid().volume();
        let b = lit::<T>(0.5) * epsilon * grad2 + integrate(&phi.map(double_well)) / epsilon;
        Ok((a, b))
    }

    /// Vesicle bending energy `E_b = (ε/2)∫w²`.
    pub fn bending_energy(&self, phi: &Field<T>) -> Result<T> {
        let ModelKind::Vesicle { epsilon, .. } = self.kind else {
            return Err(Error::param("model", "bending energy only defined for the vesicle model"));
        };
        let lap = self.ops.laplacian(phi)?;
        let inv_eps2 = T::one() / (epsilon * epsilon);
        let w = phi.zip_map(&lap, |p, l| -l + double_well_prime(p) * inv_eps2)?;
        Ok(lit::<T>(0.5) * epsilon * integrate(&w.map(|v| v * v)))
    }

    /// Variations `δE₁/δφ = 𝓛φ + N₁` and `δE₂/δφ = N₂`.
    pub fn split_variations(&self, phi: &Field<T>) -> Result<[Field<T>; 2]> {
        let [n1, n2] = self.split(phi)?.forces;
        let lin = self.ops.apply(phi, &self.linear)?;
        Ok([lin.add(&n1)?, n2])
    }
}

fn nonnegative<T: Real>(name: &str, v: T) -> Result<()> {
    if v.is_finite() && v >= T::zero() {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be >= 0, got {v}")))
    }
}

#[cfg(test)]
mod tests;
