//! Experiment runner: config loading, commands, and CSV/SVG output.

// Negated float comparisons double as NaN rejection.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::*;
use crate::config::{ExperimentConfig, Overrides};
use crate::error::{CliError, CliResult};
use crate::output::{write_file, Csv};

#[derive(Debug, Parser)]
#[command(name = "nrqae", version, about = "Noise-resilient amplitude estimation experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct Common {
    /// JSON experiment config; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// CSV output path; plots go beside it with an .svg extension.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub trials: Option<u32>,
    #[arg(long, conflicts_with = "exact")]
    pub shots: Option<u64>,
    /// Use exact probabilities instead of sampled shots.
    #[arg(long)]
    pub exact: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the estimator once and print the estimate with diagnostics.
    Estimate(Common),
    /// Error against maximum depth over repeated trials.
    SweepDepth(Common),
    /// Estimator against the iterative baseline at matched oracle budgets.
    CompareNoise(Common),
    /// Perturbation scaling checks over the interpolation grid.
    VerifyPerturbation(Common),
    /// Hoeffding shot count for a target accuracy.
    PlanShots {
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Config file (or defaults) with the flags applied and revalidated.
pub fn resolve_config(common: &Common) -> CliResult<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    cfg.apply(&Overrides {
        seed: common.seed,
        out: common.out.clone(),
        trials: common.trials,
        shots: common.shots,
        exact: common.exact,
    });
    cfg.validate()?;
    Ok(cfg)
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    }
}

/// Writes the CSV to its configured path or, failing that, to `stdout`.
/// The report goes to `stdout` unless the CSV took it, then to `stderr`.
fn emit(
    cfg_csv: Option<&PathBuf>,
    csv: &Csv,
    report: &str,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> CliResult<()> {
    match cfg_csv {
        Some(path) => {
            write_file(path, &csv.render())?;
            stdout.write_all(report.as_bytes()).map_err(io_err)
        }
        None => {
            stdout.write_all(csv.render().as_bytes()).map_err(io_err)?;
            stderr.write_all(report.as_bytes()).map_err(io_err)
        }
    }
}

fn slope_line(label: &str, slope: Option<f64>) -> String {
    match slope {
        Some(s) => format!("{label} log-log slope {s:.4}\n"),
        None => format!("{label} log-log slope -\n"),
    }
}

pub fn execute(command: &Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult<()> {
    match command {
        Command::Estimate(common) => {
            let cfg = resolve_config(common)?;
            let result = cmd_estimate(&cfg)?;
            emit(cfg.output.csv.as_ref(), &estimate_csv(&result), &estimate_report(&result), stdout, stderr)
        }
        Command::SweepDepth(common) => {
            let cfg = resolve_config(common)?;
            let rows = cmd_sweep_depth(&cfg)?;
            let medians = median_by_depth(rows.iter().map(|r| (r.depth, r.abs_error)));
            let mut report = String::new();
            for (d, e) in &medians {
                report.push_str(&format!("depth {d:>6}  median |error| {e:.6e}\n"));
            }
            report.push_str(&slope_line("median error vs depth", depth_slope(&medians)));
            emit(cfg.output.csv.as_ref(), &sweep_csv(&rows), &report, stdout, stderr)
        }
        Command::CompareNoise(common) => {
            let cfg = resolve_config(common)?;
            let rows = cmd_compare_noise(&cfg)?;
            if let Some(svg) = &cfg.output.svg {
                let title = format!("{} noise", cfg.noise.kind());
                write_file(svg, &compare_svg(&rows, &title))?;
            }
            let a = compare_medians(&rows, Method::Nrqae);
            let b = compare_medians(&rows, Method::Iqae);
            let mut report = String::from(" depth   nrqae median   iqae median\n");
            for ((d, ea), (_, eb)) in a.iter().zip(&b) {
                report.push_str(&format!("{d:>6}   {ea:.6e}   {eb:.6e}\n"));
            }
            emit(cfg.output.csv.as_ref(), &compare_csv(&rows), &report, stdout, stderr)
        }
        Command::VerifyPerturbation(common) => {
            let cfg = resolve_config(common)?;
            let out = cmd_verify_perturbation(&cfg)?;
            emit(cfg.output.csv.as_ref(), &verify_csv(&out), &verify_report(&out), stdout, stderr)?;
            match out.flagged() {
                0 => Ok(()),
                n => Err(CliError::Flagged(n)),
            }
        }
        Command::PlanShots { eps, delta, out } => {
            let shots = cmd_plan_shots(*eps, *delta)?;
            let report = format!("{shots}\n");
            match out {
                Some(path) => {
                    write_file(path, &plan_csv(*eps, *delta, shots).render())?;
                    stdout.write_all(report.as_bytes()).map_err(io_err)
                }
                None => stdout.write_all(report.as_bytes()).map_err(io_err),
            }
        }
    }
}

/// Parses `args` and runs; returns the process exit status.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if code == 0 {
                write!(stdout, "{e}")
            } else {
                write!(stderr, "{e}")
            };
            return code;
        }
    };
    match execute(&cli.command, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
