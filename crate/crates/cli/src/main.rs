//! `picard`: run invariant suites, Picard solves and existence-condition
//! searches from a TOML scenario, and emit JSON reports or CSV series.
//!
//! Exit status: 0 when every check passes, 1 on a failed check or runtime
//! error, 2 on a usage or configuration error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use picard_core::scenario::{
    emit_csv_series, run_constants, run_feasibility, run_solve, run_verify_lemmas, Overrides,
    RunReport, ScenarioConfig, Series, SolveConfig, TimeGridSpec,
};
use picard_core::serde_float::Num;

#[derive(Parser)]
#[command(name = "picard", version, about = "Spectral fixed-point laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the analysis and class-algebra invariant suites.
    VerifyLemmas(RunArgs),
    /// Picard iteration for a torus problem.
    Solve(SolveArgs),
    /// Search for radii satisfying the existence conditions.
    Feasibility(RunArgs),
    /// Evaluate the existence constants at one point.
    Constants(RunArgs),
    /// Extract an iteration series from a saved report.
    Export(ExportArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Report destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Problem document, used when no scenario file is given.
    #[arg(long, conflicts_with = "config")]
    problem: Option<PathBuf>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    /// Uniform mode-box radius for every product.
    #[arg(long)]
    mode_box: Option<u32>,
    /// `T,M`: horizon and number of steps.
    #[arg(long, value_parser = parse_grid)]
    time_grid: Option<TimeGridSpec>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Series written when `--format csv`.
    #[arg(long, default_value = "residuals")]
    series: String,
}

#[derive(Args)]
struct ExportArgs {
    /// Saved report (JSON).
    #[arg(long)]
    report: PathBuf,
    #[arg(long, default_value = "residuals")]
    series: String,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

fn parse_grid(s: &str) -> Result<TimeGridSpec, String> {
    TimeGridSpec::parse(s).map_err(|e| e.to_string())
}

/// Failure carrying the exit code it maps to.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

impl From<picard_core::Error> for Failure {
    fn from(e: picard_core::Error) -> Self {
        Failure { code: if e.is_usage() { 2 } else { 1 }, err: e.into() }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(err: anyhow::Error) -> Self {
        // anyhow errors here wrap I/O on outputs, which are runtime failures
        let code = match err.downcast_ref::<picard_core::Error>() {
            Some(e) if e.is_usage() => 2,
            _ => 1,
        };
        Failure { code, err }
    }
}

fn load(run: &RunArgs) -> Result<ScenarioConfig, Failure> {
    let mut cfg = match &run.config {
        Some(p) => ScenarioConfig::from_path(p)?,
        None => ScenarioConfig::empty(),
    };
    cfg.apply(&Overrides { seed: run.seed, out: run.out.clone(), ..Default::default() })?;
    Ok(cfg)
}

fn write_out(path: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            fs::write(p, text).with_context(|| format!("writing {}", p.display()))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn summarize(report: &RunReport) {
    for c in &report.checks {
        let margin = c.margin.map(|m| format!(" margin {m:e}")).unwrap_or_default();
        eprintln!("{} {}{margin}", if c.passed { "pass" } else { "FAIL" }, c.name);
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(v) = report.verdict {
        eprintln!("verdict: {v:?}");
    }
}

fn finish(report: &RunReport, cfg: &ScenarioConfig, mut text: String) -> Result<u8, Failure> {
    summarize(report);
    if !text.ends_with('\n') {
        text.push('\n');
    }
    write_out(cfg.out.as_deref(), &text)?;
    Ok(if report.passed { 0 } else { 1 })
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::VerifyLemmas(a) => {
            let cfg = load(&a)?;
            let rep = run_verify_lemmas(&cfg)?;
            finish(&rep, &cfg, rep.to_json()?)
        }
        Command::Feasibility(a) => {
            let cfg = load(&a)?;
            if cfg.feasibility.is_none() {
                return Err(picard_core::Error::Config("feasibility needs a [feasibility] section".into()).into());
            }
            let rep = run_feasibility(&cfg)?;
            finish(&rep, &cfg, rep.to_json()?)
        }
        Command::Constants(a) => {
            let cfg = load(&a)?;
            if cfg.constants.is_none() {
                return Err(picard_core::Error::Config("constants needs a [constants] section".into()).into());
            }
            let rep = run_constants(&cfg)?;
            finish(&rep, &cfg, rep.to_json()?)
        }
        Command::Solve(a) => {
            let mut cfg = load(&a.run)?;
            if let Some(p) = a.problem {
                cfg.solve = Some(SolveConfig::for_problem(p));
            }
            if cfg.solve.is_none() {
                return Err(picard_core::Error::Config("solve needs --problem or a [solve] section".into()).into());
            }
            cfg.apply(&Overrides {
                max_iter: a.max_iter,
                tol: a.tol,
                mode_box: a.mode_box,
                time_grid: a.time_grid,
                ..Default::default()
            })?;
            let series = Series::parse(&a.series)?;
            let rep = run_solve(&cfg)?;
            let text = match a.format {
                Format::Json => rep.to_json()?,
                Format::Csv => emit_csv_series(&rep, series)?,
            };
            finish(&rep, &cfg, text)
        }
        Command::Export(a) => {
            let series = Series::parse(&a.series)?;
            let raw = fs::read_to_string(&a.report).map_err(|e| {
                picard_core::Error::Config(format!("cannot read {}: {e}", a.report.display()))
            })?;
            let rep = RunReport::from_json(&raw)?;
            let text = match a.format {
                Format::Csv => emit_csv_series(&rep, series)?,
                Format::Json => series_json(&rep, series)?,
            };
            write_out(a.out.as_deref(), &text)?;
            Ok(0)
        }
    }
}

fn series_json(rep: &RunReport, series: Series) -> Result<String, Failure> {
    let rows: Vec<(usize, Num)> = rep
        .series
        .iter()
        .zip(series.values(rep))
        .map(|(r, v)| (r.iteration, Num(v)))
        .collect();
    let doc = serde_json::json!({ "column": series.column(), "rows": rows });
    Ok(serde_json::to_string_pretty(&doc).map_err(anyhow::Error::from)? + "\n")
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
    }
}
