use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::spectral::{inner, l2_norm};

fn grid2(l: f64, n: usize) -> Arc<Grid<f64>> {
    Grid::new(&[l, l], &[n, n]).unwrap().into_shared()
}

/// Random trigonometric polynomial with modes |m| ≤ 3 on each axis.
fn smooth_field(grid: &Arc<Grid<f64>>, seed: u64, amp: f64, mean: f64) -> Field<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let terms: Vec<(Vec<f64>, f64, f64)> = (0..6)
        .map(|_| {
            let k = grid
                .extents()
                .iter()
                .map(|&l| TAU * rng.random_range(-3i32..=3) as f64 / l)
                .collect();
            (k, rng.random_range(-1.0..1.0), rng.random_range(0.0..TAU))
        })
        .collect();
    Field::from_fn(grid.clone(), |x| {
        mean + amp
            * terms
                .iter()
                .map(|(k, a, p)| a * (k.iter().zip(x).map(|(ki, xi)| ki * xi).sum::<f64>() + p).cos())
                .sum::<f64>()
    })
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn allen_cahn_wells_and_zero() {
    let g = grid2(2.0, 16);
    let m = ModelSpec::allen_cahn(0.01, g.clone()).unwrap();
    let one = Field::constant(g.clone(), 1.0);
    assert!(m.energy_total(&one).unwrap().abs() < 1e-14);
    assert!(m.dissipation(&one).unwrap().abs() < 1e-20);
    let zero = Field::zeros(g.clone());
    assert!((m.energy_total(&zero).unwrap() - 4.0 / 4.0).abs() < 1e-14);
    assert!((m.energy(&zero).unwrap() - (1.0 + m.c0())).abs() < 1e-14);
}

#[test]
fn allen_cahn_energy_matches_dense_quadrature() {
    let (l, alpha) = (2.0, 0.3);
    let g = grid2(l, 32);
    let m = ModelSpec::allen_cahn(alpha, g.clone()).unwrap();
    let k = TAU / l;
    let phi = Field::from_fn(g, |x| 0.8 * (k * x[0]).cos());
    // Pointwise integrand on a much finer midpoint lattice.
    let fine = 400;
    let h = l / fine as f64;
    let mut oracle = 0.0;
    for i in 0..fine {
        let x = (i as f64 + 0.5) * h;
        let (p, dp) = (0.8 * (k * x).cos(), -0.8 * k * (k * x).sin());
        oracle += (0.5 * alpha * dp * dp + 0.25 * (p * p - 1.0).powi(2)) * h * l;
    }
    assert!(rel(m.energy_total(&phi).unwrap(), oracle) < 1e-10);
}

#[test]
fn cahn_hilliard_dissipation_identities() {
    let g = grid2(2.0, 32);
    let m = ModelSpec::cahn_hilliard(0.04, 0.005, g.clone()).unwrap();
    let c = Field::constant(g.clone(), 0.3);
    assert!(m.dissipation(&c).unwrap().abs() < 1e-20);

    let phi = smooth_field(&g, 1, 0.5, 0.1);
    let gterm = m.explicit_term(&phi).unwrap();
    assert!(gterm.mean().abs() < 1e-12);

    // Independent oracle: m₀‖∇μ‖² from spectral first derivatives.
    let mu = m.chemical_potential(&phi).unwrap();
    let ops = m.ops();
    let grad2: f64 = (0..2)
        .map(|a| l2_norm(&ops.derivative(&mu, a).unwrap()).powi(2))
        .sum();
    assert!(rel(m.dissipation(&phi).unwrap(), 0.005 * grad2) < 1e-10);
    assert!(rel(m.dissipation(&phi).unwrap(), m.mobility_inner(&mu, &mu).unwrap()) < 1e-10);
}

#[test]
fn pfc_symbols_and_zero_state() {
    let (eps, beta, mob) = (0.25, 1.0, 1.0);
    let g = grid2(20.0, 32);
    let m = ModelSpec::pfc(eps, beta, mob, g.clone()).unwrap();
    let zero = Field::zeros(g.clone());
    assert_eq!(m.energy_total(&zero).unwrap(), 0.0);
    assert_eq!(m.dissipation(&zero).unwrap(), 0.0);
    let k2 = m.ops().wavenumber_squared().to_vec();
    for (i, &k) in k2.iter().enumerate() {
        let expect = mob * k * (beta - k).powi(2);
        assert!((m.implicit_symbol().multiplier(i) - expect).abs() <= 1e-12 * (1.0 + expect));
        assert!(m.implicit_symbol().multiplier(i) >= 0.0);
    }
    let kk = 3.0 * TAU / 20.0;
    let phi = Field::from_fn(g.clone(), |x| (kk * x[1]).sin());
    let lphi = m.ops().apply(&phi, m.linear_symbol()).unwrap();
    let expect = phi.scaled((beta - kk * kk).powi(2));
    assert!(lphi.sub(&expect).unwrap().max_abs() < 1e-12);
    assert!(m.energy(&phi).unwrap() > 0.0);
}

fn vesicle(g: &Arc<Grid<f64>>) -> ModelSpec<f64> {
    ModelSpec::vesicle(6.0 * PI / 32.0, 0.01, 0.01, 1.0, 10.0, 12.0, g.clone()).unwrap()
}

fn vesicle_grid() -> Arc<Grid<f64>> {
    Grid::with_origin(&[TAU; 3], &[16, 16, 16], &[-PI; 3]).unwrap().into_shared()
}

#[test]
fn vesicle_liquid_phase() {
    let g = vesicle_grid();
    let m = vesicle(&g);
    let liquid = Field::constant(g.clone(), -1.0);
    assert!(m.bending_energy(&liquid).unwrap().abs() < 1e-14);
    let (a, _) = m.vesicle_measures(&liquid).unwrap();
    assert!(a.abs() < 1e-10);
}

#[test]
fn vesicle_area_penalty_at_target() {
    let g = vesicle_grid();
    let phi = smooth_field(&g, 3, 0.3, -0.2);
    let probe = vesicle(&g);
    let (vol, area) = probe.vesicle_measures(&phi).unwrap();
    let m = ModelSpec::vesicle(6.0 * PI / 32.0, 0.01, 0.01, 1.0, vol, area, g.clone()).unwrap();
    let split = m.split(&phi).unwrap();
    assert!((split.energies[1] - m.split_shifts()[1]).abs() < 1e-12);
    assert!(split.forces[1].max_abs() < 1e-12);
}

#[test]
fn split_variations_sum_to_mu() {
    let g = vesicle_grid();
    let models = vec![
        vesicle(&g),
        ModelSpec::allen_cahn(0.1, grid2(2.0, 16)).unwrap(),
        ModelSpec::pfc(0.25, 1.0, 1.0, grid2(20.0, 16)).unwrap().with_split_weight(0.3).unwrap(),
    ];
    for m in models {
        let phi = smooth_field(m.grid(), 5, 0.4, -0.1);
        let [d1, d2] = m.split_variations(&phi).unwrap();
        let mu = m.chemical_potential(&phi).unwrap();
        let err = d1.add(&d2).unwrap().sub(&mu).unwrap().max_abs();
        assert!(err <= 1e-10 * mu.max_abs(), "{}: {err}", m.name());
        let split = m.split(&phi).unwrap();
        let total = split.energies[0] + split.energies[1];
        let [c1, c2] = m.split_shifts();
        assert!(rel(total - c1 - c2, m.energy_total(&phi).unwrap()) < 1e-12);
    }
}

#[test]
fn variational_derivatives_match_finite_differences() {
    let models = vec![
        ModelSpec::allen_cahn(0.05, grid2(2.0, 32)).unwrap(),
        ModelSpec::cahn_hilliard(0.04, 0.005, grid2(2.0, 32)).unwrap(),
        ModelSpec::pfc(0.25, 1.0, 1.0, grid2(20.0, 32)).unwrap(),
        vesicle(&vesicle_grid()),
    ];
    for m in models {
        let phi = smooth_field(m.grid(), 11, 0.4, -0.1);
        let psi = smooth_field(m.grid(), 12, 1.0, 0.2);
        let s = 1e-5;
        let plus = phi.zip_map(&psi, |a, b| a + s * b).unwrap();
        let minus = phi.zip_map(&psi, |a, b| a - s * b).unwrap();
        let fd = (m.energy_total(&plus).unwrap() - m.energy_total(&minus).unwrap()) / (2.0 * s);
        let exact = inner(&m.chemical_potential(&phi).unwrap(), &psi).unwrap();
        assert!(rel(fd, exact) < 1e-5, "{}: fd {fd} vs {exact}", m.name());
    }
}

#[test]
fn manufactured_solution_starts_at_zero() {
    let g = grid2(2.0, 16);
    let f = ExpSinSin::new().sample(&g, 0.0).unwrap();
    assert!(f.values().iter().all(|&v| v == 0.0));
}

#[test]
fn closed_form_derivatives_match_spectral() {
    let g = grid2(2.0, 64);
    let exact = ExpSinSin::new();
    let t = 0.7;
    let phi = exact.sample(&g, t).unwrap();
    let ops = SpectralOps::new(g.clone());
    let lap = ops.laplacian(&phi).unwrap();
    assert!(lap.sub(&exact.laplacian(&g, t).unwrap()).unwrap().max_abs() < 1e-9);
    let bi = ops.apply(&phi, &DiagonalSymbol::bilaplacian(g.clone())).unwrap();
    let reference = exact.bilaplacian(&g, t).unwrap();
    let e = bi.sub(&reference).unwrap().max_abs();
    // k⁴ amplifies roundoff, so compare relative to the field size.
    assert!(e < 1e-10 * reference.max_abs(), "bilap {e}");
}

#[test]
fn closed_form_forcing_matches_spectral() {
    let g = grid2(2.0, 64);
    let models = vec![
        ModelSpec::allen_cahn(1e-4, g.clone()).unwrap(),
        ModelSpec::cahn_hilliard(0.04, 0.005, g.clone()).unwrap(),
        ModelSpec::new(
            ModelKind::AllenCahn {
                alpha: 0.02,
                lambda: 0.5,
            },
            g.clone(),
        )
        .unwrap(),
    ];
    for m in models {
        let closed = Forcing::with_mode(&m, ExpSinSin::new(), ForcingMode::ClosedForm).unwrap();
        let spectral = Forcing::with_mode(&m, ExpSinSin::new(), ForcingMode::Spectral).unwrap();
        for &t in &[0.0, 0.3, 1.0] {
            let diff = closed.at(t).sub(&spectral.at(t)).unwrap().max_abs();
            assert!(diff <= 1e-8, "{} t={t}: {diff}", m.name());
        }
    }
}

#[test]
fn forcing_makes_exact_solution_stationary_residual() {
    // φ_t + 𝓐φ + g(φ) - f must vanish at the collocation points.
    let g = grid2(2.0, 64);
    let m = ModelSpec::cahn_hilliard(0.04, 0.005, g.clone())
        .unwrap()
        .with_manufactured_forcing(ExpSinSin::new())
        .unwrap();
    let exact = ExpSinSin::new();
    let t = 0.4;
    let phi = exact.sample(&g, t).unwrap();
    let phit = Field::from_fn(g.clone(), |x| exact.time_derivative(x, t));
    let a = m.ops().apply(&phi, m.implicit_symbol()).unwrap();
    let res = phit
        .add(&a)
        .unwrap()
        .add(&m.explicit_term(&phi).unwrap())
        .unwrap()
        .sub(&m.forcing_at(t).unwrap())
        .unwrap();
    assert!(res.max_abs() < 1e-8);
}

#[test]
fn invalid_parameters_are_rejected() {
    let g = grid2(1.0, 8);
    assert!(ModelSpec::allen_cahn(0.0, g.clone()).is_err());
    assert!(ModelSpec::cahn_hilliard(0.1, -1.0, g.clone()).is_err());
    assert!(ModelSpec::pfc(0.25, 1.0, 1.0, g.clone()).unwrap().with_split_weight(1.5).is_err());
    let g1 = Grid::new(&[2.0], &[16]).unwrap().into_shared();
    let m = ModelSpec::allen_cahn(0.1, g1).unwrap();
    assert!(m.with_manufactured_forcing(ExpSinSin::new()).is_err());
}

#[test]
fn energy_shift_override() {
    let g = grid2(1.0, 16);
    let phi = smooth_field(&g, 3, 0.4, 0.1);
    let m = ModelSpec::cahn_hilliard(0.01, 0.1, g.clone()).unwrap();
    let shifted = m.clone().with_energy_shift(100.0).unwrap();
    let e = m.energy(&phi).unwrap();
    assert!((shifted.energy(&phi).unwrap() - (e + 99.0)).abs() < 1e-12 * e.max(100.0));
    assert_eq!(shifted.dissipation(&phi).unwrap(), m.dissipation(&phi).unwrap());
    // Split components still sum to the shifted total.
    let split = shifted.split(&phi).unwrap().energies;
    assert!((split[0] + split[1] - 1.0 - shifted.energy(&phi).unwrap()).abs() < 1e-10);
    assert!(m.clone().with_energy_shift(0.0).is_err());
    let pfc = ModelSpec::pfc(0.25, 1.0, 1.0, grid2(10.0, 8)).unwrap();
    let floor = pfc.c0() - 1.0;
    assert!(pfc.clone().with_energy_shift(floor).is_err());
    assert!(pfc.with_energy_shift(floor + 0.5).is_ok());
}
