use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::schemes::Variant;
use crate::spectral::io::{read_snapshot, write_snapshot};
use crate::spectral::{l2_distance, Field};

use super::{build_grid, simulate, thread_pool, RunOptions};

/// Several variants and steps measured against one fine reference run.
#[derive(Debug, Clone)]
pub struct ComparisonStudy {
    pub base: RunConfig,
    pub variants: Vec<Variant>,
    pub dts: Vec<f64>,
    pub t_end: f64,
    pub reference_variant: Variant,
    pub reference_order: usize,
    pub reference_dt: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub variant: Variant,
    pub dt: f64,
    /// L² distance to the reference at the final time; `NaN` if diverged.
    pub error: f64,
    pub diverged: Option<String>,
}

impl ComparisonRow {
    pub const CSV_HEADER: &'static str = "variant,dt,l2_error,diverged";

    pub fn csv_row(&self) -> String {
        format!("{},{:e},{:e},{}", self.variant, self.dt, self.error, self.diverged.is_some())
    }
}

impl ComparisonStudy {
    pub fn from_config(cfg: &RunConfig) -> Result<Self> {
        let c = cfg
            .compare
            .clone()
            .ok_or_else(|| Error::param("compare", "the config has no compare section"))?;
        Ok(Self {
            base: cfg.clone(),
            variants: c.variants,
            dts: c.dts,
            t_end: c.t_end,
            reference_variant: c.reference_variant,
            reference_order: c.reference_order,
            reference_dt: c.reference_dt,
        })
    }

    /// Config of one contender run.
    pub fn run_config(&self, variant: Variant, dt: f64) -> RunConfig {
        let mut cfg = self.base.clone();
        cfg.scheme.variant = variant;
        cfg.scheme.dt = dt;
        cfg.scheme.t_end = self.t_end;
        cfg.scheme.order = cfg.scheme.order.min(variant.max_order());
        cfg.convergence = None;
        cfg.compare = None;
        cfg
    }

    pub fn reference_config(&self) -> RunConfig {
        let mut cfg = self.run_config(self.reference_variant, self.reference_dt);
        cfg.scheme.order = self.reference_order;
        cfg
    }

    /// Content hash of everything that determines the reference field.
    pub fn reference_key(&self) -> String {
        let mut cfg = self.reference_config();
        cfg.output = Default::default();
        let digest = Sha256::digest(cfg.to_text().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn cache_paths(dir: &Path, key: &str) -> (PathBuf, PathBuf) {
    (dir.join(format!("reference-{key}.fld")), dir.join(format!("reference-{key}.cfg")))
}

/// Loads a cached reference if its stored config matches and its grid is
/// the study's grid. Anything else counts as a miss.
fn load_cached(study: &ComparisonStudy, dir: &Path) -> Result<Option<Field<f64>>> {
    let key = study.reference_key();
    let (field_path, cfg_path) = cache_paths(dir, &key);
    let (Ok(stored), Ok(file)) = (fs::read_to_string(&cfg_path), File::open(&field_path)) else {
        return Ok(None);
    };
    let mut expect = study.reference_config();
    expect.output = Default::default();
    if stored != expect.to_text() {
        return Ok(None);
    }
    let Ok((field, t)) = read_snapshot::<f64, _>(BufReader::new(file)) else {
        return Ok(None);
    };
    let grid = build_grid(&study.base)?;
    if field.grid().modes() != grid.modes()
        || field.grid().extents() != grid.extents()
        || (t - study.t_end).abs() > 0.5 * study.reference_dt
    {
        return Ok(None);
    }
    Ok(Some(Field::new(grid, field.into_values())?))
}

fn store_cached(study: &ComparisonStudy, dir: &Path, field: &Field<f64>) -> Result<()> {
    fs::create_dir_all(dir)?;
    let key = study.reference_key();
    let (field_path, cfg_path) = cache_paths(dir, &key);
    write_snapshot(BufWriter::new(File::create(&field_path)?), field, study.t_end)?;
    let mut cfg = study.reference_config();
    cfg.output = Default::default();
    fs::write(cfg_path, cfg.to_text())?;
    Ok(())
}

/// Computes (or loads) the reference, then every contender in parallel.
/// With `out`, each run gets its own output directory below it.
pub fn run_comparison(
    study: &ComparisonStudy,
    cache_dir: Option<&Path>,
    out: Option<&Path>,
) -> Result<(Vec<ComparisonRow>, Field<f64>)> {
    let pool = thread_pool()?;
    let jobs: Vec<(Variant, f64)> = study
        .variants
        .iter()
        .flat_map(|&v| study.dts.iter().map(move |&dt| (v, dt)))
        .collect();
    let dir_for = |name: String| out.map(|o| o.join(name));

    let (reference, results) = pool.install(|| {
        rayon::join(
            || -> Result<Field<f64>> {
                if let Some(dir) = cache_dir {
                    if let Some(f) = load_cached(study, dir)? {
                        return Ok(f);
                    }
                }
                let cfg = study.reference_config();
                let field = simulate(&cfg, dir_for("reference".into()).as_deref(), &RunOptions::default())?.field;
                if let Some(dir) = cache_dir {
                    store_cached(study, dir, &field)?;
                }
                Ok(field)
            },
            || {
                jobs.par_iter()
                    .map(|&(v, dt)| {
                        let cfg = study.run_config(v, dt);
                        let dir = dir_for(format!("{v}-dt{dt}"));
                        match simulate(&cfg, dir.as_deref(), &RunOptions::default()) {
                            Ok(s) => Ok((Some(s.field), None)),
                            Err(e @ Error::Diverged { .. }) => Ok((None, Some(e.to_string()))),
                            Err(e) => Err(e),
                        }
                    })
                    .collect::<Vec<Result<(Option<Field<f64>>, Option<String>)>>>()
            },
        )
    });
    let reference = reference?;
    let mut rows = Vec::with_capacity(jobs.len());
    for (&(variant, dt), res) in jobs.iter().zip(results) {
        let (field, diverged) = res?;
        let error = match &field {
            Some(f) => l2_distance(f, &reference)?,
            None => f64::NAN,
        };
        rows.push(ComparisonRow {
            variant,
            dt,
            error,
            diverged,
        });
    }
    Ok((rows, reference))
}
