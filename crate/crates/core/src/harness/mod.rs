//! Experiment drivers: single runs with the on-disk output layout,
//! convergence ladders, scheme comparisons against a cached reference, and
//! the named showcase scenarios.
//!
//! A run directory holds `manifest.txt` (a config that reproduces the run),
//! `trace.csv`, `errors.csv` and `snapshots/t_<time>.fld`.

mod compare;
mod convergence;
mod showcase;

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;

pub use compare::{run_comparison, ComparisonRow, ComparisonStudy};
pub use convergence::{run_convergence, ConvergenceRow, ConvergenceStudy, OrderSummary};
pub use showcase::{run_showcase, Showcase, ShowcaseReport, SHOWCASES};

use crate::config::{InitConfig, ModelChoice, RunConfig, StartMode};
use crate::error::{Error, Result};
use crate::models::{crystal_initial, random_initial, spheres_initial, star_initial, CrystalPatch, ExpSinSin, ModelSpec};
use crate::schemes::{Integrator, SchemeConfig, StepTrace, TraceWriter};
use crate::spectral::io::write_snapshot;
use crate::spectral::{l2_distance, Field, Grid};

/// Environment variable capping the worker threads of the drivers.
pub const THREADS_ENV: &str = "SAVFLOWS_THREADS";

/// Worker pool sized by [`THREADS_ENV`], or by the logical core count.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::param(THREADS_ENV, format!("expected a positive integer, got `{v}`")))?;
        if n == 0 {
            return Err(Error::param(THREADS_ENV, "must be >= 1"));
        }
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Error::param(THREADS_ENV, format!("cannot start worker pool: {e}")))
}

pub fn build_grid(cfg: &RunConfig) -> Result<Arc<Grid<f64>>> {
    let g = match &cfg.grid.origin {
        Some(origin) => Grid::with_origin(&cfg.grid.lengths, &cfg.grid.modes, origin)?,
        None => Grid::new(&cfg.grid.lengths, &cfg.grid.modes)?,
    };
    Ok(g.into_shared())
}

pub fn build_initial(cfg: &RunConfig, grid: &Arc<Grid<f64>>) -> Result<Field<f64>> {
    match &cfg.init {
        InitConfig::Star { alpha } => star_initial(grid, *alpha),
        InitConfig::Crystal { mean, c1, c2, patches } => {
            let patches: Vec<CrystalPatch<f64>> = patches
                .iter()
                .map(|p| CrystalPatch {
                    center: p.center,
                    side: p.side,
                    theta: p.theta,
                })
                .collect();
            crystal_initial(grid, *mean, *c1, *c2, &patches)
        }
        InitConfig::Spheres {
            centers,
            radii,
            epsilon,
        } => spheres_initial(grid, centers, radii, *epsilon),
        InitConfig::Random { mean, amplitude } => Ok(random_initial(grid, *mean, *amplitude, cfg.seed)),
        InitConfig::Constant { value } => Ok(Field::constant(grid.clone(), *value)),
        InitConfig::Manufactured => ExpSinSin::new().sample(grid, 0.0),
    }
}

/// Model of a config. The vesicle targets default to the measures of
/// `phi0`, which must then be given.
pub fn build_model(cfg: &RunConfig, grid: &Arc<Grid<f64>>, phi0: Option<&Field<f64>>) -> Result<ModelSpec<f64>> {
    let g = grid.clone();
    let mut model = match &cfg.model.choice {
        ModelChoice::AllenCahn { alpha, lambda } => ModelSpec::new(
            crate::models::ModelKind::AllenCahn {
                alpha: *alpha,
                lambda: *lambda,
            },
            g,
        )?,
        ModelChoice::CahnHilliard { alpha, m0, lambda } => ModelSpec::new(
            crate::models::ModelKind::CahnHilliard {
                alpha: *alpha,
                m0: *m0,
                lambda: *lambda,
            },
            g,
        )?,
        ModelChoice::Pfc {
            epsilon,
            beta,
            mobility,
            shift,
        } => ModelSpec::new(
            crate::models::ModelKind::Pfc {
                epsilon: *epsilon,
                beta: *beta,
                mobility: *mobility,
                shift: *shift,
            },
            g,
        )?,
        ModelChoice::Vesicle {
            epsilon,
            sigma1,
            sigma2,
            mobility,
            volume,
            area,
        } => {
            let (volume, area) = match (volume, area) {
                (Some(v), Some(a)) => (*v, *a),
                _ => {
                    let phi0 = phi0.ok_or_else(|| Error::param("model.volume", "needs the initial field"))?;
                    // Measures are independent of the targets, so any
                    // positive placeholders do for this probe.
                    let probe = ModelSpec::vesicle(*epsilon, *sigma1, *sigma2, *mobility, 1.0, 1.0, g.clone())?;
                    let (v0, a0) = probe.vesicle_measures(phi0)?;
                    (volume.unwrap_or(v0), area.unwrap_or(a0))
                }
            };
            ModelSpec::vesicle(*epsilon, *sigma1, *sigma2, *mobility, volume, area, g)?
        }
    };
    if let Some(c0) = cfg.model.c0 {
        model = model.with_energy_shift(c0)?;
    }
    model = model.with_split_weight(cfg.model.split_weight)?;
    if cfg.model.manufactured {
        model = model.with_manufactured_forcing(ExpSinSin::new())?;
    }
    Ok(model)
}

pub fn build_scheme(cfg: &RunConfig) -> Result<SchemeConfig<f64>> {
    let s = &cfg.scheme;
    let mut sc = SchemeConfig::new(s.variant, s.order, s.dt)?
        .with_gamma(s.gamma)?
        .with_eps_k(s.eps_k)?
        .with_extrapolation(s.extrapolation);
    if let Some(p) = s.eta_exponent {
        sc = sc.with_eta_exponent(p)?;
    }
    Ok(sc)
}

/// Fresh integrator for a config, seeded as `scheme.start` asks.
pub fn build_integrator(cfg: &RunConfig) -> Result<Integrator<f64>> {
    let grid = build_grid(cfg)?;
    let phi0 = build_initial(cfg, &grid)?;
    let model = Arc::new(build_model(cfg, &grid, Some(&phi0))?);
    let scheme = build_scheme(cfg)?;
    match cfg.scheme.start {
        StartMode::Ramp => Integrator::new(model, scheme, phi0, 0.0),
        StartMode::Exact => {
            let exact = ExpSinSin::new();
            Integrator::with_exact_history(model, scheme, 0.0, |t| exact.sample(&grid, t))
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Keep every trace row in the summary.
    pub keep_rows: bool,
    /// Print progress to standard error.
    pub verbose: bool,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub steps: usize,
    pub t: f64,
    pub energy: f64,
    pub aux: f64,
    pub field: Field<f64>,
    /// First row describes the seeded state, then one row per step.
    pub rows: Vec<StepTrace<f64>>,
    /// `(t, L², H²)` errors against the manufactured solution.
    pub errors: Vec<(f64, f64, f64)>,
    pub wall_time: f64,
}

/// File name of the snapshot taken at `t`.
pub fn snapshot_name(t: f64) -> String {
    format!("t_{t}.fld")
}

/// Header lines of a manifest. They are comments, so the manifest parses
/// as a config.
fn manifest_text(cfg: &RunConfig) -> String {
    format!(
        "# savflows {} run manifest; rerun with `savflows run manifest.txt`\n{}",
        env!("CARGO_PKG_VERSION"),
        cfg.to_text()
    )
}

pub fn write_manifest(dir: &Path, cfg: &RunConfig) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("manifest.txt"), manifest_text(cfg))?;
    Ok(())
}

fn exact_errors(integ: &Integrator<f64>) -> Result<(f64, f64, f64)> {
    let t = integ.time();
    let exact = ExpSinSin::new().sample(integ.model().grid(), t)?;
    let diff = integ.field().sub(&exact)?;
    Ok((t, l2_distance(integ.field(), &exact)?, integ.model().ops().h2_norm(&diff)?))
}

/// Runs one simulation to `scheme.t_end`. With `out`, the full output
/// layout is written there.
pub fn simulate(cfg: &RunConfig, out: Option<&Path>, opts: &RunOptions) -> Result<RunSummary> {
    cfg.validate()?;
    let clock = std::time::Instant::now();
    let mut integ = build_integrator(cfg)?;
    let snaps: Vec<f64> = cfg.output.snapshots.clone();
    let mut taken = vec![false; snaps.len()];
    let half = 0.5 * cfg.scheme.dt;

    let mut trace = None;
    let mut errors_file = None;
    if let Some(dir) = out {
        fs::create_dir_all(dir.join("snapshots"))?;
        write_manifest(dir, cfg)?;
        let file = File::create(dir.join("trace.csv"))?;
        trace = Some(TraceWriter::new(file, cfg.scheme.variant.is_msav(), cfg.output.flush_every)?);
        errors_file = Some(dir.join("errors.csv"));
    }
    let snapshot_dir: Option<PathBuf> = out.map(|d| d.join("snapshots"));

    let mut summary_rows = Vec::new();
    let mut errors = Vec::new();
    let initial = integ.snapshot_trace()?;
    if let Some(w) = trace.as_mut() {
        w.write(&initial)?;
    }
    if opts.keep_rows {
        summary_rows.push(initial);
    }
    let mut last_row = initial;

    let mut take_snapshots = |integ: &Integrator<f64>, errors: &mut Vec<(f64, f64, f64)>| -> Result<()> {
        let t = integ.time();
        for (i, &ts) in snaps.iter().enumerate() {
            if !taken[i] && (t - ts).abs() <= half {
                taken[i] = true;
                if let Some(dir) = &snapshot_dir {
                    let file = BufWriter::new(File::create(dir.join(snapshot_name(ts)))?);
                    write_snapshot(file, integ.field(), t)?;
                }
                if cfg.model.manufactured {
                    errors.push(exact_errors(integ)?);
                }
            }
        }
        Ok(())
    };
    take_snapshots(&integ, &mut errors)?;

    let report_every = ((cfg.scheme.t_end / cfg.scheme.dt) as usize / 10).max(1);
    while integ.time() + half < cfg.scheme.t_end {
        let row = match integ.step() {
            Ok(row) => row,
            Err(e) => {
                return Err(Error::Diverged {
                    step: integ.steps() + 1,
                    t: integ.time() + cfg.scheme.dt,
                    cause: e.to_string(),
                    last_row: last_row.csv_row(),
                })
            }
        };
        if let Some(w) = trace.as_mut() {
            w.write(&row)?;
        }
        if opts.keep_rows {
            summary_rows.push(row);
        }
        last_row = row;
        take_snapshots(&integ, &mut errors)?;
        if opts.verbose && row.step % report_every == 0 {
            eprintln!("  step {:>8}  t = {:<12.6}  E = {:.6e}  R = {:.6e}", row.step, row.t, row.energy, row.r);
        }
    }
    if let Some(w) = trace.as_mut() {
        w.flush()?;
    }
    if cfg.model.manufactured && errors.last().is_none_or(|e| (e.0 - integ.time()).abs() > half) {
        errors.push(exact_errors(&integ)?);
    }
    if let Some(path) = errors_file {
        let mut text = String::from("t,l2,h2\n");
        for (t, l2, h2) in &errors {
            text.push_str(&format!("{t:e},{l2:e},{h2:e}\n"));
        }
        fs::write(path, text)?;
    }
    Ok(RunSummary {
        steps: integ.steps(),
        t: integ.time(),
        energy: last_row.energy,
        aux: integ.aux(),
        field: integ.field().clone(),
        rows: summary_rows,
        errors,
        wall_time: clock.elapsed().as_secs_f64(),
    })
}
