//! Relaxed scheme with two auxiliary variables, one per component of a
//! split energy `E = E₁ + E₂`.
//!
//! Each component gets its own predictor solve and its own `η`, so a stiff
//! penalty term in `E₂` cannot distort the correction applied to `E₁`.

use crate::bdf::{BdfTable, History};
use crate::error::{Error, Result};
use crate::models::ModelSpec;
use crate::real::{lit, to_f64, Real};
use crate::schemes::{eta, relax, Integrator, MsavTrace, RelaxInputs, RelaxOutcome, StepTrace, DENOMINATOR_FLOOR};
use crate::spectral::{DiagonalSymbol, Field, Spectrum};

/// Component predictors and their sum.
#[derive(Debug, Clone)]
pub struct MsavPrediction<T: Real> {
    pub parts: [Field<T>; 2],
    /// Fourier coefficients of `parts`.
    pub spectra: [Spectrum<T>; 2],
    pub phi_bar: Field<T>,
}

/// Solves `(α/δt + 𝒢𝓛)φᵢ = ½A(φⁿ)/δt - 𝒢Nᵢ(B(φⁿ))` for `i = 1, 2`.
/// Both the combination and the extrapolation use the accepted history.
pub fn msav_predict<T: Real>(
    model: &ModelSpec<T>,
    history: &History<T>,
    table: &BdfTable<T>,
    dt: T,
) -> Result<MsavPrediction<T>> {
    let solver = model.implicit_symbol().shift(table.alpha / dt);
    predict_with(model, history, table, dt, &solver)
}

fn predict_with<T: Real>(
    model: &ModelSpec<T>,
    history: &History<T>,
    table: &BdfTable<T>,
    dt: T,
    solver: &DiagonalSymbol<T>,
) -> Result<MsavPrediction<T>> {
    let ops = model.ops();
    let mut half_a = history.combine_a_spectrum(table, ops)?;
    half_a.scale(lit::<T>(0.5) / dt);
    let b = history.extrapolate_b(table)?;
    let forces = model.split(&b)?.forces;
    let solve = |n: &Field<T>| -> Result<Spectrum<T>> {
        let mut rhs = half_a.clone();
        rhs.axpy(-T::one(), &ops.apply_symbol(&ops.forward(n)?, model.mobility_symbol())?)?;
        ops.solve_diagonal(&rhs, solver)
    };
    let spectra = [solve(&forces[0])?, solve(&forces[1])?];
    let phi1 = ops.inverse(&spectra[0])?;
    let phi2 = ops.inverse(&spectra[1])?;
    let phi_bar = phi1.add(&phi2)?;
    Ok(MsavPrediction {
        parts: [phi1, phi2],
        spectra,
        phi_bar,
    })
}

/// `(R̃₁, R̃₂)` from the coupled component updates.
///
/// With `s̃ = R̃₁ + R̃₂` both updates read
/// `(R̃ᵢ - Rᵢⁿ)/δt = -(s̃/(E₁+E₂)) Dᵢ`; summing gives `s̃` in closed form.
pub fn msav_aux_update<T: Real>(r: [T; 2], energies: [T; 2], d: [T; 2], dt: T) -> Result<[T; 2]> {
    let e = energies[0] + energies[1];
    let denom = T::one() + dt * (d[0] + d[1]) / e;
    if !(denom > lit(DENOMINATOR_FLOOR)) {
        return Err(Error::SingularUpdate(to_f64(denom)));
    }
    let s = (r[0] + r[1]) / denom;
    Ok([r[0] - dt * s * d[0] / e, r[1] - dt * s * d[1] / e])
}

/// Corrected field `η₁φ₁ + η₂φ₂` with `ηᵢ = 1 - (1 - R̃ᵢ/Eᵢ(φ̄))^p`.
pub fn msav_correct<T: Real>(
    r_tilde: [T; 2],
    energies_bar: [T; 2],
    parts: &[Field<T>; 2],
    p: u32,
) -> Result<(Field<T>, [T; 2], [T; 2])> {
    let xi = [r_tilde[0] / energies_bar[0], r_tilde[1] / energies_bar[1]];
    let etas = [eta(xi[0], p), eta(xi[1], p)];
    let mut phi = parts[0].scaled(etas[0]);
    phi.axpy(etas[1], &parts[1])?;
    Ok((phi, xi, etas))
}

/// Relaxation on the totals with a single `ζ₀` shared by both components.
pub fn msav_relax<T: Real>(
    r_tilde: [T; 2],
    energies: [T; 2],
    energy_bar: T,
    dissipation_bar: T,
    dissipation: T,
    dt: T,
    eps_k: T,
) -> ([T; 2], RelaxOutcome<T>) {
    let inputs = RelaxInputs {
        r_tilde: r_tilde[0] + r_tilde[1],
        energy: energies[0] + energies[1],
        energy_bar,
        dissipation,
        dissipation_bar,
        dt,
    };
    let out = relax(&inputs, eps_k);
    let z = out.zeta0;
    let mix = |i: usize| z * r_tilde[i] + (T::one() - z) * energies[i];
    ([mix(0), mix(1)], out)
}

impl<T: Real> Integrator<T> {
    pub(crate) fn step_msav(&mut self, k: usize, t_next: T) -> Result<StepTrace<T>> {
        let model = self.model.clone();
        let dt = self.config.dt;
        let pred = predict_with(&model, &self.phi, self.table(k), dt, &self.solvers[k - 1])?;

        let split_bar = model.split(&pred.phi_bar)?;
        let [n1, n2] = split_bar.forces;
        let lin = model.ops().apply(&pred.phi_bar, model.linear_symbol())?;
        let var1 = lin.add(&n1)?;
        let mu_bar = var1.add(&n2)?;
        let d = [model.mobility_inner(&var1, &mu_bar)?, model.mobility_inner(&n2, &mu_bar)?];
        let e_bar = split_bar.energies;
        let r_prev = self.split_aux;
        let r_tilde = msav_aux_update(r_prev, e_bar, d, dt)?;
        let (phi_next, xi, etas) = msav_correct(r_tilde, e_bar, &pred.parts, self.config.eta_exponent_for(k))?;

        let split = model.split(&phi_next)?;
        let energies = split.energies;
        let energy = energies[0] + energies[1];
        let r_tilde_total = r_tilde[0] + r_tilde[1];
        let prev_total = r_prev[0] + r_prev[1];

        let (mut r_next, zeta0, gamma, case) = if self.config.variant == crate::schemes::Variant::RMsav {
            let [m1, m2] = split.forces;
            let mu = model.ops().apply(&phi_next, model.linear_symbol())?.add(&m1)?.add(&m2)?;
            let dissipation = model.mobility_inner(&mu, &mu)?;
            let (r, out) = msav_relax(r_tilde, energies, e_bar[0] + e_bar[1], d[0] + d[1], dissipation, dt, self.config.eps_k);
            (r, out.zeta0, out.gamma, out.case.code())
        } else {
            (r_tilde, T::one(), T::zero(), 0)
        };
        // Clip rounding so the total never exceeds its previous value.
        let mut guard = 0;
        while r_next[0] + r_next[1] > prev_total && guard < 8 {
            let excess = (r_next[0] + r_next[1] - prev_total).max(prev_total.abs() * T::epsilon());
            r_next[1] = r_next[1] - excess;
            guard += 1;
        }

        let mass = phi_next.mean();
        self.split_aux = r_next;
        let mut next_hat = pred.spectra[0].clone();
        next_hat.scale(etas[0]);
        next_hat.axpy(etas[1], &pred.spectra[1])?;
        self.phi.push_with_spectrum(t_next, phi_next, next_hat, r_next[0] + r_next[1])?;
        Ok(StepTrace {
            step: 0,
            t: t_next,
            energy,
            r: r_next[0] + r_next[1],
            r_tilde: r_tilde_total,
            xi: r_tilde_total / (e_bar[0] + e_bar[1]),
            eta: (etas[0] + etas[1]) * lit(0.5),
            zeta0,
            gamma,
            mass,
            case,
            msav: Some(MsavTrace {
                r: r_next,
                xi,
                eta: etas,
            }),
            wall_time: 0.0,
        })
    }
}
