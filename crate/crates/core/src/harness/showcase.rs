use std::fs;
use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::error::{Error, Result};

use super::{
    run_comparison, run_convergence, simulate, write_manifest, ComparisonRow, ComparisonStudy, ConvergenceRow,
    ConvergenceStudy, OrderSummary, RunOptions, RunSummary,
};

/// A named scenario with its shipped configuration.
#[derive(Debug, Clone, Copy)]
pub struct Showcase {
    pub name: &'static str,
    pub summary: &'static str,
    pub config: &'static str,
}

macro_rules! showcase {
    ($name:literal, $summary:literal) => {
        Showcase {
            name: $name,
            summary: $summary,
            config: include_str!(concat!("../../examples/", $name, ".cfg")),
        }
    };
}

pub const SHOWCASES: &[Showcase] = &[
    showcase!("ac-manufactured", "Allen-Cahn convergence ladder against a manufactured solution"),
    showcase!("ac-star", "Allen-Cahn star relaxation; zeta0 trace and four-variant error table"),
    showcase!("ch-manufactured", "Cahn-Hilliard convergence ladder against a manufactured solution"),
    showcase!("ch-star", "Cahn-Hilliard star: GSAV, R-GSAV and a fine reference at T = 0.1"),
    showcase!("pfc-growth", "Crystal growth from three rotated seeds in a supercooled liquid"),
    showcase!("pfc-3d", "Phase-field crystal phase transition from noise in 3D"),
    showcase!("pfvm-two-spheres", "Two vesicles merging under volume and area penalties"),
    showcase!("pfvm-six-spheres", "Six vesicles merging under volume and area penalties"),
];

impl Showcase {
    pub fn find(name: &str) -> Result<&'static Showcase> {
        SHOWCASES.iter().find(|s| s.name == name).ok_or_else(|| Error::UnknownName {
            kind: "showcase",
            name: name.to_string(),
        })
    }

    pub fn run_config(&self) -> Result<RunConfig> {
        RunConfig::parse(self.config)
    }
}

#[derive(Debug, Default)]
pub struct ShowcaseReport {
    pub dir: PathBuf,
    pub run: Option<RunSummary>,
    pub convergence: Option<(Vec<ConvergenceRow>, Vec<OrderSummary>)>,
    pub comparison: Option<Vec<ComparisonRow>>,
}

/// Runs a scenario into `out`. Convergence scenarios write their table;
/// the others write a full run and, when the config has a compare
/// section, one directory per contender plus `comparison.csv`.
pub fn run_showcase(showcase: &Showcase, cfg: &RunConfig, out: &Path, verbose: bool) -> Result<ShowcaseReport> {
    fs::create_dir_all(out)?;
    let mut report = ShowcaseReport {
        dir: out.to_path_buf(),
        ..Default::default()
    };
    if cfg.convergence.is_some() {
        write_manifest(out, cfg)?;
        let study = ConvergenceStudy::from_config(cfg)?;
        let (rows, summaries) = run_convergence(&study)?;
        let mut text = format!("{}\n", ConvergenceRow::CSV_HEADER);
        for r in &rows {
            text.push_str(&r.csv_row());
            text.push('\n');
        }
        fs::write(out.join("errors.csv"), text)?;
        report.convergence = Some((rows, summaries));
        return Ok(report);
    }
    let opts = RunOptions {
        keep_rows: true,
        verbose,
    };
    if verbose {
        eprintln!("{}: {}", showcase.name, showcase.summary);
    }
    report.run = Some(simulate(cfg, Some(out), &opts)?);
    if cfg.compare.is_some() {
        let study = ComparisonStudy::from_config(cfg)?;
        let (rows, _) = run_comparison(&study, Some(&out.join("cache")), Some(&out.join("compare")))?;
        let mut text = format!("{}\n", ComparisonRow::CSV_HEADER);
        for r in &rows {
            text.push_str(&r.csv_row());
            text.push('\n');
        }
        fs::write(out.join("comparison.csv"), text)?;
        report.comparison = Some(rows);
    }
    Ok(report)
}
