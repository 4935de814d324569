use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::models::{ExpSinSin, ModelKind};
use crate::msav::msav_predict;
use crate::spectral::{Grid, SpectralOps};

fn grid2(l: f64, n: usize) -> Arc<crate::spectral::Grid<f64>> {
    Grid::new(&[l, l], &[n, n]).unwrap().into_shared()
}

fn smooth(grid: &Arc<Grid<f64>>, seed: u64, amp: f64) -> Field<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = grid.extents()[0];
    let c: Vec<(f64, f64, f64, f64)> = (0..4)
        .map(|_| {
            (
                rng.random_range(-1.0..1.0),
                rng.random_range(-2i32..=2) as f64,
                rng.random_range(-2i32..=2) as f64,
                rng.random_range(0.0..TAU),
            )
        })
        .collect();
    Field::from_fn(grid.clone(), |x| {
        amp * c
            .iter()
            .map(|(a, m, n, p)| a * (TAU / l * (m * x[0] + n * x.get(1).copied().unwrap_or(0.0)) + p).cos())
            .sum::<f64>()
    })
}

fn history_of(fields: &[Field<f64>], dt: f64) -> History<f64> {
    let mut h = History::new(fields.len());
    for (i, f) in fields.iter().rev().enumerate() {
        h.push(i as f64 * dt, f.clone(), 0.0).unwrap();
    }
    h
}

#[test]
fn variant_names_round_trip() {
    for v in Variant::ALL {
        assert_eq!(v.name().parse::<Variant>().unwrap(), v);
    }
    assert!("bdf".parse::<Variant>().is_err());
}

#[test]
fn config_validation() {
    assert!(SchemeConfig::new(Variant::RGsav, 5, 0.1).is_ok());
    assert!(SchemeConfig::new(Variant::RGsav, 6, 0.1).is_err());
    assert!(SchemeConfig::new(Variant::Sav, 3, 0.1).is_err());
    assert!(SchemeConfig::new(Variant::Gsav, 1, 0.0).is_err());
    assert!(SchemeConfig::new(Variant::Gsav, 1, -1.0).is_err());
    let c = SchemeConfig::new(Variant::RSav, 2, 0.1).unwrap();
    assert_eq!(c.gamma, 0.95);
    assert!(c.clone().with_gamma(1.5).is_err());
    assert!(c.with_eta_exponent(1).is_err());
}

// Nonlinearity extrapolated from a zero history vanishes (F'(0) = 0), so
// each Fourier mode follows the scalar BDF recursion.
#[test]
fn predictor_matches_scalar_recursion_per_mode() {
    let g = grid2(2.0, 16);
    let alpha = 0.05;
    let m = ModelSpec::allen_cahn(alpha, g.clone()).unwrap();
    let kx = TAU / 2.0 * 3.0;
    let mode = Field::from_fn(g.clone(), |x| (kx * x[0]).cos());
    let dt = 0.1;
    for k in 1..=5 {
        let table = BdfTable::new(k).unwrap();
        let amps: Vec<f64> = (0..k).map(|i| 1.0 - 0.1 * i as f64).collect();
        let accepted = history_of(&amps.iter().map(|&a| mode.scaled(a)).collect::<Vec<_>>(), dt);
        let zeros = history_of(&vec![Field::zeros(g.clone()); k], dt);
        let out = gsav_predict(&m, &accepted, &zeros, &table, dt, None).unwrap();
        let combo: f64 = table.a.iter().zip(&amps).map(|(a, v)| a * v).sum();
        let expect = combo / dt / (table.alpha / dt + alpha * kx * kx);
        assert!(out.sub(&mode.scaled(expect)).unwrap().max_abs() < 1e-12, "k={k}");
    }
}

#[test]
fn predictor_keeps_critical_points() {
    let g = grid2(2.0, 16);
    let m = ModelSpec::allen_cahn(0.01, g.clone()).unwrap();
    let one = Field::constant(g.clone(), 1.0);
    for k in 1..=5 {
        let h = history_of(&vec![one.clone(); k], 0.3);
        let out = gsav_predict(&m, &h, &h, &BdfTable::new(k).unwrap(), 0.3, None).unwrap();
        assert!(out.sub(&one).unwrap().max_abs() < 1e-12);
    }
}

#[test]
fn first_order_predictor_by_substitution() {
    let g = grid2(2.0, 32);
    let m = ModelSpec::cahn_hilliard(0.04, 0.005, g.clone()).unwrap();
    let phi = smooth(&g, 9, 0.6);
    let dt = 0.05;
    let h = history_of(std::slice::from_ref(&phi), dt);
    let out = gsav_predict(&m, &h, &h, &BdfTable::new(1).unwrap(), dt, None).unwrap();
    let a_out = m.ops().apply(&out, m.implicit_symbol()).unwrap();
    let residual = out
        .sub(&phi)
        .unwrap()
        .scaled(1.0 / dt)
        .add(&a_out)
        .unwrap()
        .add(&m.explicit_term(&phi).unwrap())
        .unwrap();
    assert!(residual.max_abs() < 1e-10);
    let si = semi_implicit_reference_step(&m, &h, &BdfTable::new(1).unwrap(), dt, None).unwrap();
    assert_eq!(si.values(), out.values());
}

/// Naive O(N²) transforms on a 1D periodic grid of length 2π.
struct NaiveDft {
    n: usize,
}

impl NaiveDft {
    fn forward(&self, v: &[f64]) -> Vec<Complex64> {
        let n = self.n;
        (0..n)
            .map(|m| {
                (0..n)
                    .map(|j| v[j] * Complex64::from_polar(1.0, -TAU * (m * j) as f64 / n as f64))
                    .sum()
            })
            .collect()
    }

    fn inverse(&self, c: &[Complex64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|j| {
                let s: Complex64 = (0..n)
                    .map(|m| c[m] * Complex64::from_polar(1.0, TAU * (m * j) as f64 / n as f64))
                    .sum();
                s.re / n as f64
            })
            .collect()
    }

    fn wavenumber(&self, m: usize) -> f64 {
        if m <= self.n / 2 {
            m as f64
        } else {
            m as f64 - self.n as f64
        }
    }
}

// One relaxed GSAV step, BDF1, Allen-Cahn on 8 points, transcribed line by
// line without the library's spectral machinery.
#[test]
fn one_rgsav_step_matches_transcription() {
    let (n, alpha, dt) = (8usize, 0.1, 0.2);
    let g = Grid::new(&[TAU], &[n]).unwrap().into_shared();
    let model = Arc::new(ModelSpec::allen_cahn(alpha, g.clone()).unwrap());
    let phi0 = Field::from_fn(g.clone(), |x| 0.3 + 0.5 * x[0].sin() - 0.2 * (3.0 * x[0]).cos());
    let cfg = SchemeConfig::new(Variant::RGsav, 1, dt).unwrap();
    let mut integ = Integrator::new(model.clone(), cfg, phi0.clone(), 0.0).unwrap();
    let row = integ.step().unwrap();

    let dft = NaiveDft { n };
    let h = TAU / n as f64;
    let lap = |v: &[f64]| {
        let c = dft.forward(v);
        let d: Vec<Complex64> = (0..n).map(|m| c[m] * -(dft.wavenumber(m).powi(2))).collect();
        dft.inverse(&d)
    };
    let energy = |v: &[f64]| {
        let l = lap(v);
        let grad = -v.iter().zip(&l).map(|(a, b)| a * b).sum::<f64>() * h;
        let pot: f64 = v.iter().map(|p| 0.25 * (p * p - 1.0).powi(2)).sum::<f64>() * h;
        0.5 * alpha * grad + pot + 1.0
    };
    let dissipation = |v: &[f64]| {
        let l = lap(v);
        v.iter()
            .zip(&l)
            .map(|(p, lp)| (-alpha * lp + p * p * p - p).powi(2))
            .sum::<f64>()
            * h
    };
    let p0 = phi0.values().to_vec();
    let rhs: Vec<f64> = p0.iter().map(|p| p / dt - (p * p * p - p)).collect();
    let c = dft.forward(&rhs);
    let sol: Vec<Complex64> = (0..n)
        .map(|m| c[m] / (1.0 / dt + alpha * dft.wavenumber(m).powi(2)))
        .collect();
    let bar = dft.inverse(&sol);
    let r0 = energy(&p0);
    let (e_bar, k_bar) = (energy(&bar), dissipation(&bar));
    let r_tilde = r0 / (1.0 + dt * k_bar / e_bar);
    let xi = r_tilde / e_bar;
    let eta = 1.0 - (1.0 - xi).powi(3);
    let next: Vec<f64> = bar.iter().map(|v| eta * v).collect();
    let (e1, k1) = (energy(&next), dissipation(&next));
    let predicted = dt * r_tilde * k_bar / e_bar;
    let zeta = if r_tilde >= e1 || r_tilde - e1 + predicted >= 0.0 {
        0.0
    } else {
        1.0 - predicted / (e1 - r_tilde)
    };
    let _ = k1;
    let r1 = zeta * r_tilde + (1.0 - zeta) * e1;

    for (a, b) in integ.field().values().iter().zip(&next) {
        assert!((a - b).abs() < 1e-12);
    }
    assert!((row.r - r1).abs() < 1e-12);
    assert!((row.r_tilde - r_tilde).abs() < 1e-12);
    assert!((row.xi - xi).abs() < 1e-12);
}

// SAV at orders 1 and 2: the computed pair satisfies the discrete system.
#[test]
fn sav_step_solves_the_coupled_system() {
    let g = grid2(2.0, 32);
    let model = Arc::new(ModelSpec::allen_cahn(0.02, g.clone()).unwrap());
    let phi0 = smooth(&g, 21, 0.7);
    for k in 1..=2 {
        let dt = 0.05;
        let cfg = SchemeConfig::new(Variant::Sav, k, dt).unwrap();
        let mut s = Integrator::new(model.clone(), cfg, phi0.clone(), 0.0).unwrap();
        for _ in 1..k {
            s.step().unwrap();
        }
        let old = s.phi.clone();
        s.step().unwrap();
        let table = BdfTable::new(k).unwrap();
        let phi_new = s.field().clone();
        let r_new = s.aux();
        let a_phi = old.combine_a(&table).unwrap();
        let a_r = old.combine_aux_a(&table).unwrap();
        let b_phi = old.extrapolate_b(&table).unwrap();
        let root = (model.nonlinear_energy(&b_phi).unwrap() + model.c0()).sqrt();
        let b = model.nonlinear_force(&b_phi).unwrap().scaled(1.0 / root);
        let mut diff = phi_new.scaled(table.alpha);
        diff.axpy(-1.0, &a_phi).unwrap();
        let mu = model.ops().apply(&phi_new, model.linear_symbol()).unwrap().add(&b.scaled(r_new)).unwrap();
        let res1 = diff.scaled(1.0 / dt).add(&model.apply_mobility(&mu).unwrap()).unwrap();
        assert!(res1.max_abs() < 1e-10, "k={k}: {}", res1.max_abs());
        let res2 = (table.alpha * r_new - a_r) / dt - 0.5 * inner(&b, &diff).unwrap() / dt;
        assert!(res2.abs() < 1e-10, "k={k}: {res2}");
    }
}

#[test]
fn ramp_raises_the_order() {
    let g = grid2(2.0, 16);
    let model = Arc::new(ModelSpec::allen_cahn(0.01, g.clone()).unwrap());
    let cfg = SchemeConfig::new(Variant::RGsav, 3, 0.01).unwrap();
    let mut s = Integrator::new(model.clone(), cfg.clone(), smooth(&g, 1, 0.5), 0.0).unwrap();
    let mut orders = vec![];
    for _ in 0..4 {
        orders.push(s.current_order());
        s.step().unwrap();
    }
    assert_eq!(orders, vec![1, 2, 3, 3]);

    let mut strict = cfg;
    strict.ramp = false;
    let mut s = Integrator::new(model, strict, smooth(&g, 1, 0.5), 0.0).unwrap();
    assert!(matches!(s.step(), Err(Error::InsufficientHistory { .. })));
}

#[test]
fn exact_seeding_starts_at_full_order() {
    let g = grid2(2.0, 16);
    let model = Arc::new(
        ModelSpec::allen_cahn(1e-4, g.clone())
            .unwrap()
            .with_manufactured_forcing(ExpSinSin::new())
            .unwrap(),
    );
    let cfg = SchemeConfig::new(Variant::RGsav, 4, 0.01).unwrap();
    let exact = ExpSinSin::new();
    let s = Integrator::with_exact_history(model, cfg, 0.0, |t| exact.sample(&g, t)).unwrap();
    assert_eq!(s.steps(), 3);
    assert_eq!(s.current_order(), 4);
    assert!((s.time() - 0.03).abs() < 1e-15);
}

#[test]
fn steady_state_is_kept() {
    let g = grid2(2.0, 16);
    let model = Arc::new(ModelSpec::allen_cahn(0.01, g.clone()).unwrap());
    let one = Field::constant(g.clone(), 1.0);
    for v in [Variant::RGsav, Variant::Gsav, Variant::Sav, Variant::RSav, Variant::SemiImplicit] {
        let mut s = Integrator::new(model.clone(), SchemeConfig::new(v, 2, 0.1).unwrap(), one.clone(), 0.0).unwrap();
        let r0 = s.aux();
        for _ in 0..5 {
            let row = s.step().unwrap();
            assert!(row.r <= r0 * (1.0 + 1e-14), "{v}");
        }
        assert!(s.field().sub(&one).unwrap().max_abs() < 1e-12, "{v}");
    }
}

// Extrapolating from the unscaled predictors lets that sequence run away
// at large steps; the run then stops with an error, but never with an
// increase of R. From the accepted history every run completes.
#[test]
fn unforced_runs_dissipate_at_large_steps() {
    let g = grid2(TAU, 32);
    let models = vec![
        ModelSpec::allen_cahn(0.05, g.clone()).unwrap(),
        ModelSpec::cahn_hilliard(0.05, 0.1, g.clone()).unwrap(),
        ModelSpec::pfc(0.25, 1.0, 1.0, grid2(32.0, 32)).unwrap(),
    ];
    for m in models {
        let m = Arc::new(m);
        for extrapolation in [Extrapolation::Intermediate, Extrapolation::Accepted] {
            for dt in [1e-2, 1.0] {
                for k in 1..=3 {
                    let cfg = SchemeConfig::new(Variant::RGsav, k, dt).unwrap().with_extrapolation(extrapolation);
                    let mut s = Integrator::new(m.clone(), cfg, smooth(m.grid(), 5, 0.5), 0.0).unwrap();
                    let mut prev = s.aux();
                    for n in 0..30 {
                        let row = match s.step() {
                            Ok(r) => r,
                            Err(e @ (Error::SingularUpdate(_) | Error::NonFinite { .. }))
                                if extrapolation == Extrapolation::Intermediate =>
                            {
                                assert!(dt > 0.1, "{} dt={dt} k={k} step {n}: {e}", m.name());
                                break;
                            }
                            Err(e) => panic!("{} {extrapolation} dt={dt} k={k} step {n}: {e}", m.name()),
                        };
                        assert!(row.r <= prev, "{} dt={dt} k={k}", m.name());
                        assert!(row.r <= row.energy * (1.0 + 1e-12));
                        assert!(row.r >= 0.0 && row.xi >= 0.0);
                        if (1..=3).contains(&row.case) {
                            assert_eq!(row.r, row.energy);
                        }
                        prev = row.r;
                    }
                }
            }
        }
    }
}

#[test]
fn rsav_traces_are_finite_and_tagged() {
    let g = grid2(TAU, 32);
    let model = Arc::new(ModelSpec::allen_cahn(0.05, g.clone()).unwrap());
    let mut s = Integrator::new(model, SchemeConfig::new(Variant::RSav, 2, 0.05).unwrap(), smooth(&g, 2, 0.8), 0.0).unwrap();
    for _ in 0..20 {
        let row = s.step().unwrap();
        assert!((5..=7).contains(&row.case));
        assert!(row.zeta0 >= 0.0 && row.zeta0 <= 1.0);
    }
}

#[test]
fn msav_predictor_superposition() {
    let g = grid2(2.0, 32);
    let dt = 0.05;
    let phi = smooth(&g, 31, 0.6);
    let prev = smooth(&g, 32, 0.6);
    let h = history_of(&[phi.clone(), prev], dt);
    for k in 1..=2 {
        let table = BdfTable::new(k).unwrap();
        // All of F in E₁: the second part is the homogeneous half-history solve.
        let m0 = ModelSpec::allen_cahn(0.02, g.clone()).unwrap().with_split_weight(0.0).unwrap();
        let pred = msav_predict(&m0, &h, &table, dt).unwrap();
        let single = gsav_predict(&m0, &h, &h, &table, dt, None).unwrap();
        assert!(pred.phi_bar.sub(&single).unwrap().max_abs() < 1e-12);
        let half = h.combine_a(&table).unwrap().scaled(0.5 / dt);
        let homog = m0.ops().solve(&half, &m0.implicit_symbol().shift(table.alpha / dt)).unwrap();
        assert!(pred.parts[1].sub(&homog).unwrap().max_abs() < 1e-12);
        // Equal shares: the two parts coincide.
        let mh = ModelSpec::allen_cahn(0.02, g.clone()).unwrap().with_split_weight(0.5).unwrap();
        let pred = msav_predict(&mh, &h, &table, dt).unwrap();
        assert!(pred.parts[0].sub(&pred.parts[1]).unwrap().max_abs() < 1e-12);
    }
}

#[test]
fn msav_constant_critical_point() {
    let g = grid2(2.0, 16);
    let m = ModelSpec::allen_cahn(0.02, g.clone()).unwrap();
    let one = Field::constant(g.clone(), -1.0);
    let h = history_of(&[one.clone(), one.clone()], 0.1);
    let pred = msav_predict(&m, &h, &BdfTable::new(2).unwrap(), 0.1).unwrap();
    assert!(pred.phi_bar.sub(&one).unwrap().max_abs() < 1e-12);
}

#[test]
fn msav_runs_dissipate() {
    let g = grid2(TAU, 32);
    let model = Arc::new(ModelSpec::pfc(0.25, 1.0, 1.0, grid2(32.0, 32)).unwrap());
    let _ = g;
    let phi0 = smooth(model.grid(), 8, 0.4);
    let mut s = Integrator::new(model, SchemeConfig::new(Variant::RMsav, 2, 0.5).unwrap(), phi0, 0.0).unwrap();
    let mut prev = s.aux();
    for _ in 0..40 {
        let row = s.step().unwrap();
        let m = row.msav.unwrap();
        assert!(m.r[0] + m.r[1] <= prev);
        assert!(row.r <= row.energy * (1.0 + 1e-12));
        prev = m.r[0] + m.r[1];
    }
}

#[test]
fn forcing_rejected_for_msav() {
    let g = grid2(2.0, 16);
    let model = Arc::new(
        ModelSpec::allen_cahn(0.01, g.clone())
            .unwrap()
            .with_manufactured_forcing(ExpSinSin::new())
            .unwrap(),
    );
    let r = Integrator::new(model, SchemeConfig::new(Variant::RMsav, 1, 0.1).unwrap(), Field::zeros(g), 0.0);
    assert!(r.is_err());
}

#[test]
fn manufactured_rgsav_is_accurate() {
    let g = grid2(2.0, 32);
    let model = Arc::new(
        ModelSpec::new(ModelKind::AllenCahn { alpha: 1e-2, lambda: 0.0 }, g.clone())
            .unwrap()
            .with_manufactured_forcing(ExpSinSin::new())
            .unwrap(),
    );
    let exact = ExpSinSin::new();
    let err = |dt: f64| {
        let cfg = SchemeConfig::new(Variant::RGsav, 2, dt).unwrap();
        let mut s = Integrator::with_exact_history(model.clone(), cfg, 0.0, |t| exact.sample(&g, t)).unwrap();
        s.run_until(0.5, |_, _| Ok(())).unwrap();
        crate::spectral::l2_distance(s.field(), &exact.sample(&g, s.time()).unwrap()).unwrap()
    };
    let (e1, e2) = (err(0.02), err(0.01));
    assert!(e2 < 1e-3);
    let order = (e1 / e2).log2();
    assert!(order > 1.7 && order < 2.5, "order {order}");
    let _ = SpectralOps::new(g.clone());
}
