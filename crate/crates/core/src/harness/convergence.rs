use rayon::prelude::*;

use crate::config::{ConvergenceConfig, ErrorNorm, RunConfig};
use crate::error::{Error, Result};
use crate::schemes::Variant;

use super::{simulate, thread_pool, RunOptions};

/// A δt ladder for several variants and orders on one manufactured problem.
#[derive(Debug, Clone)]
pub struct ConvergenceStudy {
    pub base: RunConfig,
    pub variants: Vec<Variant>,
    pub orders: Vec<usize>,
    pub dts: Vec<f64>,
    pub norm: ErrorNorm,
}

impl ConvergenceStudy {
    pub fn from_config(cfg: &RunConfig) -> Result<Self> {
        let ConvergenceConfig {
            variants,
            orders,
            dts,
            norm,
        } = cfg
            .convergence
            .clone()
            .ok_or_else(|| Error::param("convergence", "the config has no convergence section"))?;
        Ok(Self {
            base: cfg.clone(),
            variants,
            orders,
            dts,
            norm,
        })
    }

    fn rung(&self, variant: Variant, order: usize, dt: f64) -> RunConfig {
        let mut cfg = self.base.clone();
        cfg.scheme.variant = variant;
        cfg.scheme.order = order;
        cfg.scheme.dt = dt;
        cfg.output.snapshots.clear();
        cfg
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub variant: Variant,
    pub order: usize,
    pub dt: f64,
    /// `NaN` when the rung diverged.
    pub error: f64,
    /// Rate against the next coarser rung.
    pub observed_order: Option<f64>,
    pub diverged: Option<String>,
}

/// Observed order of one (variant, order) ladder, taken from its two
/// finest rungs.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderSummary {
    pub variant: Variant,
    pub order: usize,
    pub observed: Option<f64>,
    pub rungs: (f64, f64),
}

impl ConvergenceRow {
    pub const CSV_HEADER: &'static str = "variant,order,dt,error,observed_order,diverged";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:e},{:e},{},{}",
            self.variant,
            self.order,
            self.dt,
            self.error,
            self.observed_order.map(|p| format!("{p:.4}")).unwrap_or_default(),
            self.diverged.is_some()
        )
    }
}

/// Runs every rung (in parallel) and reports errors at `scheme.t_end`
/// against the exact solution. Rows come back grouped by variant and
/// order, coarsest step first, whatever order the workers finished in.
pub fn run_convergence(study: &ConvergenceStudy) -> Result<(Vec<ConvergenceRow>, Vec<OrderSummary>)> {
    let mut jobs = Vec::new();
    for &v in &study.variants {
        for &k in &study.orders {
            if k > v.max_order() {
                return Err(Error::param(
                    "convergence.orders",
                    format!("{v} supports orders up to {}", v.max_order()),
                ));
            }
            for &dt in &study.dts {
                jobs.push((v, k, dt));
            }
        }
    }
    let pool = thread_pool()?;
    let results: Vec<Result<(f64, Option<String>)>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(v, k, dt)| {
                let cfg = study.rung(v, k, dt);
                match simulate(&cfg, None, &RunOptions::default()) {
                    Ok(s) => {
                        let (_, l2, h2) = *s.errors.last().expect("manufactured runs report a final error");
                        Ok((
                            match study.norm {
                                ErrorNorm::L2 => l2,
                                ErrorNorm::H2 => h2,
                            },
                            None,
                        ))
                    }
                    Err(e @ Error::Diverged { .. }) => Ok((f64::NAN, Some(e.to_string()))),
                    Err(e) => Err(e),
                }
            })
            .collect()
    });

    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(jobs.len());
    for (&(variant, order, dt), res) in jobs.iter().zip(results) {
        let (error, diverged) = res?;
        let observed_order = rows
            .last()
            .filter(|p| p.variant == variant && p.order == order)
            .and_then(|p| rate(p.error, p.dt, error, dt));
        rows.push(ConvergenceRow {
            variant,
            order,
            dt,
            error,
            observed_order,
            diverged,
        });
    }
    let n = study.dts.len();
    let summaries = rows
        .chunks(n)
        .map(|c| OrderSummary {
            variant: c[0].variant,
            order: c[0].order,
            observed: c[n - 1].observed_order,
            rungs: (c[n - 2].dt, c[n - 1].dt),
        })
        .collect();
    Ok((rows, summaries))
}

/// `log(e₁/e₂) / log(δt₁/δt₂)`, which is `log₂(e(2δt)/e(δt))` on a
/// halving ladder.
fn rate(e_coarse: f64, dt_coarse: f64, e_fine: f64, dt_fine: f64) -> Option<f64> {
    let p = (e_coarse / e_fine).ln() / (dt_coarse / dt_fine).ln();
    p.is_finite().then_some(p)
}
