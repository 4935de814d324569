//! Scalar pieces of the auxiliary-variable schemes: the `R̃` update, the
//! `η` correction, and the two relaxation rules.

use crate::error::{Error, Result};
use crate::real::{lit, Real};

/// Denominators of the auxiliary updates below this are rejected.
pub const DENOMINATOR_FLOOR: f64 = 1e-14;

/// Slack used when re-checking the admissible-set inequality.
pub const MEMBERSHIP_SLACK: f64 = 1e-12;

/// `R̃ = Rⁿ / (1 + δt·𝒦/E)`.
///
/// `dissipation` may be negative when a forcing feeds energy in; the
/// update then fails only if the denominator collapses.
pub fn gsav_aux_update<T: Real>(r_prev: T, energy: T, dissipation: T, dt: T) -> Result<T> {
    let denom = T::one() + dt * dissipation / energy;
    if !(denom > lit(DENOMINATOR_FLOOR)) {
        return Err(Error::SingularUpdate(crate::real::to_f64(denom)));
    }
    Ok(r_prev / denom)
}

/// `η = 1 - (1 - ξ)^p`
pub fn eta<T: Real>(xi: T, p: u32) -> T {
    T::one() - (T::one() - xi).powi(p as i32)
}

/// Default `η` exponent for BDF order `k`.
pub fn default_eta_exponent(k: usize) -> u32 {
    if k == 1 {
        3
    } else {
        k as u32 + 1
    }
}

/// Quantities entering one relaxation of the energy variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxInputs<T> {
    pub r_tilde: T,
    /// `E(φⁿ⁺¹)`
    pub energy: T,
    /// `E(φ̄ⁿ⁺¹)`
    pub energy_bar: T,
    /// `𝒦(φⁿ⁺¹)`
    pub dissipation: T,
    /// `𝒦(φ̄ⁿ⁺¹)`
    pub dissipation_bar: T,
    pub dt: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelaxCase {
    /// `R̃ = E(φⁿ⁺¹)`
    Equal,
    /// `R̃ > E(φⁿ⁺¹)`
    Above,
    /// `R̃ < E(φⁿ⁺¹)` but the gap is covered by the predicted dissipation.
    BelowCovered,
    /// `R̃ < E(φⁿ⁺¹)` with a gap too wide to close in one step.
    Below,
}

impl RelaxCase {
    /// Numeric tag 1–4 written to traces.
    pub fn code(self) -> u8 {
        match self {
            RelaxCase::Equal => 1,
            RelaxCase::Above => 2,
            RelaxCase::BelowCovered => 3,
            RelaxCase::Below => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxOutcome<T> {
    pub zeta0: T,
    pub gamma: T,
    pub r: T,
    pub case: RelaxCase,
}

/// Chooses the smallest admissible `ζ₀` and a matching dissipation rate
/// `γ ≥ 0`, then sets `Rⁿ⁺¹ = ζ₀R̃ + (1-ζ₀)E(φⁿ⁺¹)`.
///
/// When `𝒦(φⁿ⁺¹) < eps_k` the `γ` formulas would divide by (nearly) zero;
/// `γ = 0` is reported instead, which leaves `ζ₀` and `Rⁿ⁺¹` untouched.
/// Both outputs are clamped to their ranges, which only matters when a
/// forcing makes the dissipation arguments negative.
pub fn relax<T: Real>(inp: &RelaxInputs<T>, eps_k: T) -> RelaxOutcome<T> {
    let RelaxInputs {
        r_tilde,
        energy,
        energy_bar,
        dissipation,
        dissipation_bar,
        dt,
    } = *inp;
    let zero = T::zero();
    let predicted = dt * r_tilde * dissipation_bar / energy_bar;
    let gap = r_tilde - energy;
    let rate = |excess: T| {
        if dissipation < eps_k {
            zero
        } else {
            excess / (dt * dissipation)
        }
    };
    let (case, zeta0, gamma) = if gap == zero {
        (RelaxCase::Equal, zero, rate(predicted))
    } else if gap > zero {
        (RelaxCase::Above, zero, rate(gap + predicted))
    } else if gap + predicted >= zero {
        (RelaxCase::BelowCovered, zero, rate(gap + predicted))
    } else {
        (RelaxCase::Below, T::one() - predicted / (energy - r_tilde), zero)
    };
    let zeta0 = zeta0.max(zero).min(T::one());
    let gamma = gamma.max(zero);
    RelaxOutcome {
        zeta0,
        gamma,
        r: zeta0 * r_tilde + (T::one() - zeta0) * energy,
        case,
    }
}

/// Whether `(ζ, γ)` satisfies
/// `(R̃ - E)ζ ≤ R̃ - E - δtγ𝒦 + δt(R̃/Ē)𝒦̄ + slack`.
pub fn is_admissible<T: Real>(inp: &RelaxInputs<T>, zeta: T, gamma: T, slack: T) -> bool {
    if !(zeta >= T::zero() && zeta <= T::one() && gamma >= T::zero()) {
        return false;
    }
    let gap = inp.r_tilde - inp.energy;
    let lhs = gap * zeta;
    let rhs = gap - inp.dt * gamma * inp.dissipation + inp.dt * inp.r_tilde * inp.dissipation_bar / inp.energy_bar;
    lhs <= rhs + slack
}

/// Why the relaxed-SAV rule picked its `ζ₀`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RsavCase {
    /// `r̃` already equals the anchor; nothing to relax.
    Anchored,
    /// Smaller root of the admissibility quadratic.
    Root,
    /// Negative discriminant; `ζ₀ = 1` keeps `r̃`.
    Skipped,
}

impl RsavCase {
    /// Trace tags, kept apart from the 1–4 used by the energy relaxation.
    pub fn code(self) -> u8 {
        match self {
            RsavCase::Anchored => 5,
            RsavCase::Root => 6,
            RsavCase::Skipped => 7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RsavOutcome<T> {
    pub zeta0: T,
    pub r: T,
    /// Quadratic coefficients `a ζ² + b ζ + c ≤ 0` defining admissibility.
    pub coeffs: [T; 3],
    pub case: RsavCase,
}

/// Coefficients of the relaxed-SAV admissibility quadratic in `ζ`, for
/// `r = ζ r̃ + (1-ζ) s` with anchor `s = √(E_nl(φⁿ⁺¹) + C₀)`.
///
/// Order 1 constrains `r² - r̃² ≤ δtγD`; order 2 constrains
/// `½(r² + (2r - rⁿ)² - r̃² - (2r̃ - rⁿ)²) ≤ δtγD`.
pub fn rsav_coefficients<T: Real>(r_tilde: T, r_prev: T, anchor: T, dissipation: T, dt: T, gamma: T, k: usize) -> [T; 3] {
    let d = r_tilde - anchor;
    let s = anchor;
    let budget = dt * gamma * dissipation;
    let two = lit::<T>(2.0);
    if k == 1 {
        [d * d, two * s * d, s * s - r_tilde * r_tilde - budget]
    } else {
        let half = lit::<T>(0.5);
        let a = lit::<T>(2.5) * d * d;
        let b = d * (lit::<T>(5.0) * s - two * r_prev);
        let u = two * s - r_prev;
        let v = two * r_tilde - r_prev;
        let c = half * (s * s + u * u - r_tilde * r_tilde - v * v) - budget;
        [a, b, c]
    }
}

/// Smallest `ζ ∈ [0, 1]` satisfying the relaxed-SAV quadratic.
pub fn rsav_relax<T: Real>(
    r_tilde: T,
    r_prev: T,
    anchor: T,
    dissipation: T,
    dt: T,
    gamma: T,
    k: usize,
) -> Result<RsavOutcome<T>> {
    if !(k == 1 || k == 2) {
        return Err(Error::param("scheme.order", "the relaxed SAV rule exists for orders 1 and 2"));
    }
    let coeffs = rsav_coefficients(r_tilde, r_prev, anchor, dissipation, dt, gamma, k);
    let [a, b, c] = coeffs;
    let (zeta0, case) = if a < lit(DENOMINATOR_FLOOR) {
        (T::zero(), RsavCase::Anchored)
    } else {
        let disc = b * b - lit::<T>(4.0) * a * c;
        if disc < T::zero() {
            (T::one(), RsavCase::Skipped)
        } else {
            let root = (-b - disc.sqrt()) / (lit::<T>(2.0) * a);
            (root.max(T::zero()).min(T::one()), RsavCase::Root)
        }
    };
    Ok(RsavOutcome {
        zeta0,
        r: zeta0 * r_tilde + (T::one() - zeta0) * anchor,
        coeffs,
        case,
    })
}
