use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use savflows::config::RunConfig;
use savflows::harness::{
    build_grid, build_initial, build_model, run_comparison, run_convergence, run_showcase, simulate, write_manifest,
    ComparisonRow, ComparisonStudy, ConvergenceRow, ConvergenceStudy, OrderSummary, RunOptions, RunSummary, Showcase,
    SHOWCASES,
};
use savflows::Error;

#[derive(Parser)]
#[command(name = "savflows", version, about = "Energy-stable SAV-family integrators for phase-field gradient flows")]
struct Cli {
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for random initial conditions (overrides `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Suppress progress and summaries; tables and errors still print.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation.
    Run { config: PathBuf },
    /// Measure temporal orders on a manufactured problem.
    Convergence { config: PathBuf },
    /// Compare variants against a fine reference run.
    Compare { config: PathBuf },
    /// Run a named scenario; `--list` shows the registry.
    Showcase {
        name: Option<String>,
        #[arg(long)]
        list: bool,
    },
    /// Check a config without running it.
    Validate { config: PathBuf },
}

/// Exit codes: 1 invalid input, 2 numerical divergence, 3 anything else.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. } | Error::InvalidParameter { .. } | Error::UnknownName { .. } => 1,
        Error::Diverged { .. } | Error::NonFinite { .. } | Error::SingularUpdate(_) => 2,
        _ => 3,
    }
}

fn load(path: &Path, seed: Option<u64>) -> Result<RunConfig, Error> {
    let text = fs::read_to_string(path)?;
    let mut cfg = RunConfig::parse(&text)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn out_dir(cli_out: &Option<PathBuf>, cfg: &RunConfig, fallback: &str) -> PathBuf {
    cli_out
        .clone()
        .or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| Path::new("out").join(fallback))
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into())
}

fn print_run(s: &RunSummary) {
    let zeta_active = s.rows.iter().skip(1).filter(|r| r.zeta0 != 0.0).count();
    println!("steps      {}", s.steps);
    println!("t          {}", s.t);
    println!("energy     {:.10e}", s.energy);
    println!("aux        {:.10e}", s.aux);
    if !s.rows.is_empty() {
        println!("zeta0 > 0  {zeta_active} of {} steps", s.rows.len() - 1);
    }
    for (t, l2, h2) in &s.errors {
        println!("error      t = {t}: L2 {l2:.4e}, H2 {h2:.4e}");
    }
}

fn print_convergence(rows: &[ConvergenceRow], summaries: &[OrderSummary]) {
    println!("{:<14} {:>2} {:>12} {:>14} {:>8}", "variant", "k", "dt", "error", "order");
    for r in rows {
        let order = r.observed_order.map(|p| format!("{p:.3}")).unwrap_or_else(|| "-".into());
        let error = if r.diverged.is_some() {
            "diverged".to_string()
        } else {
            format!("{:.4e}", r.error)
        };
        println!("{:<14} {:>2} {:>12} {:>14} {:>8}", r.variant.name(), r.order, r.dt, error, order);
    }
    println!();
    for s in summaries {
        let p = s.observed.map(|p| format!("{p:.3}")).unwrap_or_else(|| "-".into());
        println!(
            "{:<14} k = {}: observed order {p} (dt {} -> {})",
            s.variant.name(),
            s.order,
            s.rungs.0,
            s.rungs.1
        );
    }
}

fn print_comparison(rows: &[ComparisonRow]) {
    println!("{:<14} {:>10} {:>14}", "variant", "dt", "L2 error");
    for r in rows {
        let error = if r.diverged.is_some() {
            "diverged".to_string()
        } else {
            format!("{:.4e}", r.error)
        };
        println!("{:<14} {:>10} {:>14}", r.variant.name(), r.dt, error);
    }
}

fn write_table(path: &Path, header: &str, lines: impl Iterator<Item = String>) -> Result<(), Error> {
    let mut text = format!("{header}\n");
    for l in lines {
        text.push_str(&l);
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

fn execute(cli: &Cli) -> Result<(), Error> {
    let verbose = !cli.quiet;
    match &cli.command {
        Command::Run { config } => {
            let cfg = load(config, cli.seed)?;
            let dir = out_dir(&cli.out, &cfg, &stem(config));
            let opts = RunOptions {
                keep_rows: true,
                verbose,
            };
            let summary = simulate(&cfg, Some(&dir), &opts)?;
            if verbose {
                print_run(&summary);
                println!("output     {}", dir.display());
            }
        }
        Command::Convergence { config } => {
            let cfg = load(config, cli.seed)?;
            let dir = out_dir(&cli.out, &cfg, &stem(config));
            let study = ConvergenceStudy::from_config(&cfg)?;
            let (rows, summaries) = run_convergence(&study)?;
            write_manifest(&dir, &cfg)?;
            write_table(
                &dir.join("errors.csv"),
                ConvergenceRow::CSV_HEADER,
                rows.iter().map(ConvergenceRow::csv_row),
            )?;
            print_convergence(&rows, &summaries);
        }
        Command::Compare { config } => {
            let cfg = load(config, cli.seed)?;
            let dir = out_dir(&cli.out, &cfg, &stem(config));
            let study = ComparisonStudy::from_config(&cfg)?;
            let (rows, _) = run_comparison(&study, Some(&dir.join("cache")), None)?;
            write_manifest(&dir, &cfg)?;
            write_table(
                &dir.join("comparison.csv"),
                ComparisonRow::CSV_HEADER,
                rows.iter().map(ComparisonRow::csv_row),
            )?;
            print_comparison(&rows);
        }
        Command::Showcase { name, list } => {
            if *list || name.is_none() {
                for s in SHOWCASES {
                    println!("{:<18} {}", s.name, s.summary);
                }
                return Ok(());
            }
            let showcase = Showcase::find(name.as_deref().unwrap_or_default())?;
            let mut cfg = showcase.run_config()?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            let dir = out_dir(&cli.out, &cfg, showcase.name);
            let report = run_showcase(showcase, &cfg, &dir, verbose)?;
            if let Some((rows, summaries)) = &report.convergence {
                print_convergence(rows, summaries);
            }
            if let Some(run) = &report.run {
                if verbose {
                    print_run(run);
                }
            }
            if let Some(rows) = &report.comparison {
                print_comparison(rows);
            }
            if verbose {
                println!("output     {}", report.dir.display());
            }
        }
        Command::Validate { config } => {
            let cfg = load(config, cli.seed)?;
            let grid = build_grid(&cfg)?;
            let phi0 = build_initial(&cfg, &grid)?;
            let model = build_model(&cfg, &grid, Some(&phi0))?;
            savflows::harness::build_scheme(&cfg)?;
            if verbose {
                println!(
                    "ok: {} on {:?} modes, {} BDF{} with dt = {} to t = {}",
                    model.name(),
                    cfg.grid.modes,
                    cfg.scheme.variant,
                    cfg.scheme.order,
                    cfg.scheme.dt,
                    cfg.scheme.t_end
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
