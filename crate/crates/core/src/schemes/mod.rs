//! Time integrators of the scalar-auxiliary-variable family.
//!
//! Every variant advances `φ_t + 𝓐φ + g(φ) = f` with the stiff linear part
//! implicit and the nonlinearity extrapolated, so a step costs a handful of
//! diagonal solves in Fourier space.

mod relax;
mod trace;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

pub use relax::{
    default_eta_exponent, eta, gsav_aux_update, is_admissible, relax, rsav_coefficients, rsav_relax, RelaxCase,
    RelaxInputs, RelaxOutcome, RsavCase, RsavOutcome, DENOMINATOR_FLOOR, MEMBERSHIP_SLACK,
};
pub use trace::{MsavTrace, StepTrace, TraceWriter, MSAV_COLUMNS, TRACE_HEADER};

use crate::bdf::{BdfTable, History, MAX_ORDER};
use crate::error::{Error, Result};
use crate::models::ModelSpec;
use crate::real::{count, lit, to_f64, Real};
use crate::spectral::{inner, DiagonalSymbol, Field, Spectrum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Original SAV with `r = √(E_nl + C₀)`.
    Sav,
    /// SAV followed by the quadratic relaxation of `r`.
    RSav,
    /// Generalized SAV tracking the whole energy.
    Gsav,
    /// GSAV with the energy relaxation step.
    RGsav,
    /// Plain IMEX-BDF predictor, no auxiliary variable.
    SemiImplicit,
    /// Two auxiliary variables for a split energy.
    Msav,
    /// Two auxiliary variables with a shared relaxation.
    RMsav,
}

impl Variant {
    pub const ALL: [Variant; 7] = [
        Variant::Sav,
        Variant::RSav,
        Variant::Gsav,
        Variant::RGsav,
        Variant::SemiImplicit,
        Variant::Msav,
        Variant::RMsav,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Sav => "sav",
            Variant::RSav => "r-sav",
            Variant::Gsav => "gsav",
            Variant::RGsav => "r-gsav",
            Variant::SemiImplicit => "semi-implicit",
            Variant::Msav => "msav",
            Variant::RMsav => "r-msav",
        }
    }

    pub fn is_relaxed(self) -> bool {
        matches!(self, Variant::RSav | Variant::RGsav | Variant::RMsav)
    }

    pub fn is_msav(self) -> bool {
        matches!(self, Variant::Msav | Variant::RMsav)
    }

    /// Highest BDF order the variant supports.
    pub fn max_order(self) -> usize {
        match self {
            Variant::Sav | Variant::RSav => 2,
            _ => MAX_ORDER,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::UnknownName {
                kind: "scheme variant",
                name: s.to_string(),
            })
    }
}

/// Which history feeds the extrapolated nonlinearity of the predictor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Extrapolation {
    /// The unscaled predictors `φ̄`. This is the standard form.
    Intermediate,
    /// The accepted solutions `φ`. The predictor sequence can no longer
    /// run away from the accepted one at large steps.
    Accepted,
}

impl Extrapolation {
    pub fn name(self) -> &'static str {
        match self {
            Extrapolation::Intermediate => "intermediate",
            Extrapolation::Accepted => "accepted",
        }
    }
}

impl fmt::Display for Extrapolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Extrapolation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "intermediate" => Ok(Extrapolation::Intermediate),
            "accepted" => Ok(Extrapolation::Accepted),
            _ => Err(Error::UnknownName {
                kind: "extrapolation",
                name: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeConfig<T> {
    pub variant: Variant,
    pub order: usize,
    pub dt: T,
    /// Relaxed-SAV dissipation fraction.
    pub gamma: T,
    /// Dissipation below which the relaxation reports `γ = 0`.
    pub eps_k: T,
    /// Overrides the `η` exponent at every order when set.
    pub eta_exponent: Option<u32>,
    /// Start with BDF1 and raise the order as history accumulates.
    pub ramp: bool,
    pub extrapolation: Extrapolation,
}

impl<T: Real> SchemeConfig<T> {
    pub fn new(variant: Variant, order: usize, dt: T) -> Result<Self> {
        let cfg = Self {
            variant,
            order,
            dt,
            gamma: lit(0.95),
            eps_k: lit(1e-14),
            eta_exponent: None,
            ramp: true,
            extrapolation: Extrapolation::Intermediate,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_gamma(mut self, gamma: T) -> Result<Self> {
        self.gamma = gamma;
        self.validate()?;
        Ok(self)
    }

    pub fn with_eps_k(mut self, eps_k: T) -> Result<Self> {
        self.eps_k = eps_k;
        self.validate()?;
        Ok(self)
    }

    pub fn with_eta_exponent(mut self, p: u32) -> Result<Self> {
        self.eta_exponent = Some(p);
        self.validate()?;
        Ok(self)
    }

    pub fn with_extrapolation(mut self, e: Extrapolation) -> Self {
        self.extrapolation = e;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=self.variant.max_order()).contains(&self.order) {
            return Err(Error::param(
                "scheme.order",
                format!("{} supports orders 1..={}", self.variant, self.variant.max_order()),
            ));
        }
        if !(self.dt > T::zero() && self.dt.is_finite()) {
            return Err(Error::param("scheme.dt", format!("must be > 0, got {}", self.dt)));
        }
        if !(self.gamma >= T::zero() && self.gamma <= T::one()) {
            return Err(Error::param("scheme.gamma", "must lie in [0, 1]"));
        }
        if !(self.eps_k >= T::zero()) {
            return Err(Error::param("scheme.eps_k", "must be >= 0"));
        }
        if self.eta_exponent.is_some_and(|p| p < 2) {
            return Err(Error::param("scheme.eta_exponent", "must be >= 2"));
        }
        Ok(())
    }

    /// `η` exponent used at BDF order `k`.
    pub fn eta_exponent_for(&self, k: usize) -> u32 {
        self.eta_exponent.unwrap_or_else(|| default_eta_exponent(k))
    }
}

/// `φ̄ⁿ⁺¹` from `(α/δt + 𝓐)φ̄ = A(φⁿ)/δt - g(B(ψⁿ)) + f`, where `accepted`
/// feeds the implicit combination and `extrapolated` the nonlinearity.
pub fn gsav_predict<T: Real>(
    model: &ModelSpec<T>,
    accepted: &History<T>,
    extrapolated: &History<T>,
    table: &BdfTable<T>,
    dt: T,
    forcing: Option<&Field<T>>,
) -> Result<Field<T>> {
    let solver = model.implicit_symbol().shift(table.alpha / dt);
    Ok(predict_with(model, accepted, extrapolated, table, dt, forcing, &solver)?.0)
}

fn predict_with<T: Real>(
    model: &ModelSpec<T>,
    accepted: &History<T>,
    extrapolated: &History<T>,
    table: &BdfTable<T>,
    dt: T,
    forcing: Option<&Field<T>>,
    solver: &DiagonalSymbol<T>,
) -> Result<(Field<T>, Spectrum<T>)> {
    let ops = model.ops();
    let mut rhs_hat = accepted.combine_a_spectrum(table, ops)?;
    rhs_hat.scale(T::one() / dt);
    if let Some(f) = forcing {
        rhs_hat.axpy(T::one(), &ops.forward(f)?)?;
    }
    let b = extrapolated.extrapolate_b(table)?;
    let nl = ops.apply_symbol(&ops.forward(&model.nonlinear_force(&b)?)?, model.mobility_symbol())?;
    rhs_hat.axpy(-T::one(), &nl)?;
    let hat = ops.solve_diagonal(&rhs_hat, solver)?;
    Ok((ops.inverse(&hat)?, hat))
}

/// One step of the plain IMEX-BDF scheme used for reference solutions.
pub fn semi_implicit_reference_step<T: Real>(
    model: &ModelSpec<T>,
    history: &History<T>,
    table: &BdfTable<T>,
    dt: T,
    forcing: Option<&Field<T>>,
) -> Result<Field<T>> {
    gsav_predict(model, history, history, table, dt, forcing)
}

/// [`MEMBERSHIP_SLACK`], widened to a few ulps of the energies in low
/// precision.
fn membership_slack<T: Real>(inp: &RelaxInputs<T>) -> T {
    let ulps = T::epsilon() * lit(64.0) * (inp.r_tilde.abs() + inp.energy.abs());
    ulps.max(lit(MEMBERSHIP_SLACK))
}

/// `(μ, f)`, the rate at which a forcing feeds energy in.
fn forcing_power<T: Real>(mu: &Field<T>, f: Option<&Field<T>>) -> Result<T> {
    f.map_or(Ok(T::zero()), |f| inner(mu, f))
}

/// A running simulation: model, configuration, and the BDF histories.
#[derive(Debug, Clone)]
pub struct Integrator<T: Real> {
    pub(crate) model: Arc<ModelSpec<T>>,
    pub(crate) config: SchemeConfig<T>,
    tables: Vec<BdfTable<T>>,
    /// `(α_k/δt + 𝓐)` for k = 1..=order.
    pub(crate) solvers: Vec<DiagonalSymbol<T>>,
    /// Accepted states with their auxiliary scalar.
    pub(crate) phi: History<T>,
    /// Intermediate predictors (GSAV family only).
    pub(crate) bar: History<T>,
    /// Component variables of the two-variable schemes.
    pub(crate) split_aux: [T; 2],
    start: T,
    index: usize,
}

impl<T: Real> Integrator<T> {
    /// Self-starting integrator from a single initial field; the first
    /// steps ramp the BDF order up to the configured one.
    pub fn new(model: Arc<ModelSpec<T>>, config: SchemeConfig<T>, phi0: Field<T>, t0: T) -> Result<Self> {
        let mut s = Self::empty(model, config, t0)?;
        s.seed(t0, phi0)?;
        Ok(s)
    }

    /// Integrator whose history holds exact samples at `t0 + iδt`,
    /// `i = 0..k`, so the full order applies from the first step.
    pub fn with_exact_history(
        model: Arc<ModelSpec<T>>,
        config: SchemeConfig<T>,
        t0: T,
        mut exact: impl FnMut(T) -> Result<Field<T>>,
    ) -> Result<Self> {
        let k = config.order;
        let mut s = Self::empty(model, config, t0)?;
        for i in 0..k {
            let t = s.time_at(i);
            s.seed(t, exact(t)?)?;
        }
        s.index = k - 1;
        Ok(s)
    }

    fn empty(model: Arc<ModelSpec<T>>, config: SchemeConfig<T>, t0: T) -> Result<Self> {
        config.validate()?;
        if config.variant.is_msav() && model.forcing().is_some() {
            return Err(Error::param("model.forcing", "the two-variable schemes run unforced"));
        }
        let tables = (1..=config.order).map(BdfTable::new).collect::<Result<Vec<_>>>()?;
        let solvers = tables
            .iter()
            .map(|t| model.implicit_symbol().shift(t.alpha / config.dt))
            .collect();
        let k = config.order;
        Ok(Self {
            model,
            config,
            tables,
            solvers,
            phi: History::new(k),
            bar: History::new(k),
            split_aux: [T::zero(); 2],
            start: t0,
            index: 0,
        })
    }

    fn seed(&mut self, t: T, phi: Field<T>) -> Result<()> {
        if **phi.grid() != **self.model.grid() {
            return Err(Error::GridMismatch);
        }
        if !phi.is_finite() {
            return Err(Error::NonFinite { step: 0, t: to_f64(t) });
        }
        let aux = match self.config.variant {
            Variant::Sav | Variant::RSav => self.sav_root(&phi)?,
            Variant::Msav | Variant::RMsav => {
                let e = self.model.split(&phi)?.energies;
                self.split_aux = e;
                e[0] + e[1]
            }
            _ => self.model.energy(&phi)?,
        };
        self.bar.push(t, phi.clone(), T::zero())?;
        self.phi.push(t, phi, aux)
    }

    /// `√(E_nl(φ) + C₀)`
    pub(crate) fn sav_root(&self, phi: &Field<T>) -> Result<T> {
        let shifted = self.model.nonlinear_energy(phi)? + self.model.c0();
        if !(shifted > T::zero()) {
            return Err(Error::param(
                "model.c0",
                format!("E_nl + C₀ = {shifted} is not positive; the SAV variable is undefined"),
            ));
        }
        Ok(shifted.sqrt())
    }

    fn time_at(&self, index: usize) -> T {
        self.start + count::<T>(index) * self.config.dt
    }

    pub fn model(&self) -> &Arc<ModelSpec<T>> {
        &self.model
    }

    pub fn config(&self) -> &SchemeConfig<T> {
        &self.config
    }

    pub fn time(&self) -> T {
        self.time_at(self.index)
    }

    /// Steps taken so far (seeded history counts as taken).
    pub fn steps(&self) -> usize {
        self.index
    }

    pub fn field(&self) -> &Field<T> {
        &self.phi.newest().expect("history is seeded").field
    }

    /// Current auxiliary variable (`R`, the SAV `r`, or `R₁ + R₂`).
    pub fn aux(&self) -> T {
        self.phi.newest().expect("history is seeded").aux
    }

    pub fn split_aux(&self) -> [T; 2] {
        self.split_aux
    }

    /// BDF order the next step will use.
    pub fn current_order(&self) -> usize {
        self.config.order.min(self.phi.len())
    }

    /// Trace row describing the current state without stepping.
    pub fn snapshot_trace(&self) -> Result<StepTrace<T>> {
        let phi = self.field();
        let aux = self.aux();
        let energy = if self.config.variant.is_msav() {
            let e = self.model.split(phi)?.energies;
            e[0] + e[1]
        } else {
            self.model.energy(phi)?
        };
        let xi = match self.config.variant {
            Variant::Sav | Variant::RSav => aux / self.sav_root(phi)?,
            _ => aux / energy,
        };
        Ok(StepTrace {
            step: self.index,
            t: self.time(),
            energy,
            r: aux,
            r_tilde: aux,
            xi,
            eta: T::one(),
            zeta0: T::zero(),
            gamma: T::zero(),
            mass: phi.mean(),
            case: 0,
            msav: self.config.variant.is_msav().then(|| MsavTrace {
                r: self.split_aux,
                xi: [T::one(); 2],
                eta: [T::one(); 2],
            }),
            wall_time: 0.0,
        })
    }

    /// Advances one step and reports it.
    pub fn step(&mut self) -> Result<StepTrace<T>> {
        let k = self.current_order();
        if k < self.config.order && !self.config.ramp {
            return Err(Error::InsufficientHistory {
                needed: self.config.order,
                available: self.phi.len(),
            });
        }
        let t_next = self.time_at(self.index + 1);
        let clock = Instant::now();
        let mut row = match self.config.variant {
            Variant::Sav | Variant::RSav => self.step_sav(k, t_next)?,
            Variant::Gsav | Variant::RGsav | Variant::SemiImplicit => self.step_gsav(k, t_next)?,
            Variant::Msav | Variant::RMsav => self.step_msav(k, t_next)?,
        };
        row.step = self.index + 1;
        row.t = t_next;
        row.wall_time = clock.elapsed().as_secs_f64();
        if !row.is_finite() || !self.field().is_finite() {
            return Err(Error::NonFinite {
                step: self.index + 1,
                t: to_f64(t_next),
            });
        }
        self.index += 1;
        Ok(row)
    }

    /// Steps until `t_end` (within half a step), handing every row to
    /// `sink`.
    pub fn run_until(&mut self, t_end: T, mut sink: impl FnMut(&Self, &StepTrace<T>) -> Result<()>) -> Result<()> {
        let half = lit::<T>(0.5) * self.config.dt;
        while self.time() + half < t_end {
            let row = self.step()?;
            sink(self, &row)?;
        }
        Ok(())
    }

    pub(crate) fn table(&self, k: usize) -> &BdfTable<T> {
        &self.tables[k - 1]
    }

    fn step_gsav(&mut self, k: usize, t_next: T) -> Result<StepTrace<T>> {
        let model = self.model.clone();
        let dt = self.config.dt;
        let variant = self.config.variant;
        let forcing = model.forcing_at(t_next);
        let extrapolated = if variant == Variant::SemiImplicit || self.config.extrapolation == Extrapolation::Accepted {
            &self.phi
        } else {
            &self.bar
        };
        let (phi_bar, bar_hat) = predict_with(
            &model,
            &self.phi,
            extrapolated,
            self.table(k),
            dt,
            forcing.as_ref(),
            &self.solvers[k - 1],
        )?;
        let r_prev = self.aux();

        if variant == Variant::SemiImplicit {
            let energy = model.energy(&phi_bar)?;
            let mass = phi_bar.mean();
            self.phi.push_with_spectrum(t_next, phi_bar, bar_hat, energy)?;
            return Ok(StepTrace {
                step: 0,
                t: t_next,
                energy,
                r: energy,
                r_tilde: energy,
                xi: T::one(),
                eta: T::one(),
                zeta0: T::zero(),
                gamma: T::zero(),
                mass,
                case: 0,
                msav: None,
                wall_time: 0.0,
            });
        }

        // Under a forcing the energy balance is dE/dt = -𝒦 + (μ, f), so
        // the net rate drives the auxiliary variable.
        let ev_bar = model.evaluate(&phi_bar)?;
        let net_bar = ev_bar.dissipation - forcing_power(&ev_bar.mu, forcing.as_ref())?;
        if !(ev_bar.energy.is_finite() && net_bar.is_finite()) {
            return Err(Error::NonFinite {
                step: self.index + 1,
                t: to_f64(t_next),
            });
        }
        let r_tilde = gsav_aux_update(r_prev, ev_bar.energy, net_bar, dt)?;
        let xi = r_tilde / ev_bar.energy;
        let eta_v = eta(xi, self.config.eta_exponent_for(k));
        let phi_next = phi_bar.scaled(eta_v);
        let mut next_hat = bar_hat.clone();
        next_hat.scale(eta_v);
        let ev = model.evaluate(&phi_next)?;

        let (mut r_next, zeta0, gamma, case) = if variant == Variant::RGsav {
            let net = ev.dissipation - forcing_power(&ev.mu, forcing.as_ref())?;
            let inputs = RelaxInputs {
                r_tilde,
                energy: ev.energy,
                energy_bar: ev_bar.energy,
                dissipation: net,
                dissipation_bar: net_bar,
                dt,
            };
            let out = relax(&inputs, self.config.eps_k);
            debug_assert!(
                forcing.is_some() || is_admissible(&inputs, out.zeta0, out.gamma, membership_slack(&inputs)),
                "relaxation left the admissible set: {inputs:?} -> {out:?}"
            );
            (out.r, out.zeta0, out.gamma, out.case.code())
        } else {
            (r_tilde, T::one(), T::zero(), 0)
        };
        // R̃ ≤ Rⁿ and the relaxation cannot increase it in exact arithmetic;
        // clip the last-bit rounding that could.
        if forcing.is_none() && r_next > r_prev {
            r_next = r_prev;
        }

        let mass = phi_next.mean();
        self.bar.push_with_spectrum(t_next, phi_bar, bar_hat, T::zero())?;
        self.phi.push_with_spectrum(t_next, phi_next, next_hat, r_next)?;
        Ok(StepTrace {
            step: 0,
            t: t_next,
            energy: ev.energy,
            r: r_next,
            r_tilde,
            xi,
            eta: eta_v,
            zeta0,
            gamma,
            mass,
            case,
            msav: None,
            wall_time: 0.0,
        })
    }

    fn step_sav(&mut self, k: usize, t_next: T) -> Result<StepTrace<T>> {
        let model = self.model.clone();
        let ops = model.ops().clone();
        let dt = self.config.dt;
        let table = self.table(k).clone();
        let alpha = table.alpha;
        let half = lit::<T>(0.5);

        let b_phi = self.phi.extrapolate_b(&table)?;
        let root = self.sav_root(&b_phi)?;
        let b = model.nonlinear_force(&b_phi)?.scaled(T::one() / root);
        let a_phi = self.phi.combine_a(&table)?;
        let solver = &self.solvers[k - 1];

        let mut rhs1 = self.phi.combine_a_spectrum(&table, &ops)?;
        rhs1.scale(T::one() / dt);
        if let Some(f) = model.forcing_at(t_next) {
            rhs1.axpy(T::one(), &ops.forward(&f)?)?;
        }
        let hat1_coeffs = ops.solve_diagonal(&rhs1, solver)?;
        let hat1 = ops.inverse(&hat1_coeffs)?;
        let mut gb = ops.apply_symbol(&ops.forward(&b)?, model.mobility_symbol())?;
        gb.scale(-T::one());
        let hat2_coeffs = ops.solve_diagonal(&gb, solver)?;
        let hat2 = ops.inverse(&hat2_coeffs)?;

        let a_r = self.phi.combine_aux_a(&table)?;
        let mut lead = hat1.scaled(alpha);
        lead.axpy(-T::one(), &a_phi)?;
        let num = a_r + half * inner(&b, &lead)?;
        let den = alpha - half * alpha * inner(&b, &hat2)?;
        if !(den > half * alpha) {
            return Err(Error::SingularUpdate(to_f64(den)));
        }
        let r_tilde = num / den;
        let mut phi_next = hat1;
        phi_next.axpy(r_tilde, &hat2)?;
        let mut next_hat = hat1_coeffs;
        next_hat.axpy(r_tilde, &hat2_coeffs)?;

        let ev = model.evaluate(&phi_next)?;
        let anchor = self.sav_root(&phi_next)?;
        let (r_next, zeta0, case) = if self.config.variant == Variant::RSav {
            let out = rsav_relax(r_tilde, self.aux(), anchor, ev.dissipation, dt, self.config.gamma, k)?;
            (out.r, out.zeta0, out.case.code())
        } else {
            (r_tilde, T::one(), 0)
        };
        let mass = phi_next.mean();
        self.phi.push_with_spectrum(t_next, phi_next, next_hat, r_next)?;
        Ok(StepTrace {
            step: 0,
            t: t_next,
            energy: ev.energy,
            r: r_next,
            r_tilde,
            xi: r_next / anchor,
            eta: T::one(),
            zeta0,
            gamma: if self.config.variant == Variant::RSav {
                self.config.gamma
            } else {
                T::zero()
            },
            mass,
            case,
            msav: None,
            wall_time: 0.0,
        })
    }
}

#[cfg(test)]
mod tests;
