//! Experiment commands. Each returns structured rows; rendering is separate so runs can be
//! compared without touching the filesystem.

use std::collections::BTreeMap;

use nrqae::circuit::Simulator;
use nrqae::estimator::{run, EstimationResult, RunOptions};
use nrqae::iqae::{iqae_run, IqaeOptions, IqaeResult};
use nrqae::model::{noise_superop, EstimationProblem, Mode};
use nrqae::perturb::{analyze, perturbed_phase, PerturbationReport};
use nrqae::rng::StreamKey;
use nrqae::stats::{hoeffding_shots, log_log_slope, median};
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::output::{line_plot, Cell, Csv, Series};

fn mode_label(mode: Mode) -> &'static str {
    match mode {
        Mode::Amplitude => "amplitude",
        Mode::Observable => "observable",
    }
}

fn simulator(cfg: &ExperimentConfig) -> CliResult<(EstimationProblem, Simulator)> {
    let problem = cfg.problem.build()?;
    let noise = cfg.resolved_noise();
    let sim = Simulator::new(problem.clone(), &noise).map_err(|e| CliError::Config(e.to_string()))?;
    Ok((problem, sim))
}

fn run_options(cfg: &ExperimentConfig, k: u32) -> RunOptions {
    RunOptions {
        retry: cfg.retry,
        ..RunOptions::new(k)
    }
}

/// Single estimation at `k = iterations`, trial 0.
pub fn cmd_estimate(cfg: &ExperimentConfig) -> CliResult<EstimationResult> {
    let (_, sim) = simulator(cfg)?;
    Ok(run(
        &sim,
        cfg.sampling(),
        StreamKey::new(cfg.seed, 0),
        &run_options(cfg, cfg.iterations),
    )?)
}

/// Columns: `mode, theta_ch, value, mirror, seed_theta, decay, oracle_calls, failed_iterations, final_fallback, no_signal`.
pub fn estimate_csv(result: &EstimationResult) -> Csv {
    let mut csv = Csv::new(&[
        "mode",
        "theta_ch",
        "value",
        "mirror",
        "seed_theta",
        "decay",
        "oracle_calls",
        "failed_iterations",
        "final_fallback",
        "no_signal",
    ]);
    let failed = result.iterations.iter().filter(|r| !r.status.succeeded()).count();
    csv.push(&[
        Cell::S(mode_label(result.mode)),
        Cell::F(result.theta_ch),
        Cell::F(result.value),
        Cell::F(result.mirror),
        Cell::F(result.seed_theta),
        result.decay.map_or(Cell::Missing, Cell::F),
        Cell::U(result.oracle_calls),
        Cell::U(failed as u64),
        Cell::B(result.final_fallback),
        Cell::B(result.no_signal),
    ]);
    csv
}

/// Human-readable summary of one estimation.
pub fn estimate_report(result: &EstimationResult) -> String {
    let mut s = String::new();
    s.push_str("iter      n            t_n           t_2n           t_3n              y    theta_ch  status\n");
    for (i, r) in result.iterations.iter().enumerate() {
        let y = r.y.map_or("-".to_string(), |y| format!("{y:.6e}"));
        s.push_str(&format!(
            "{i:>4} {:>6} {:>14.6e} {:>14.6e} {:>14.6e} {:>14} {:>11.8} {}\n",
            r.n,
            r.triplet[0],
            r.triplet[1],
            r.triplet[2],
            y,
            r.theta,
            r.status.label()
        ));
    }
    s.push_str(&format!("mode          {}\n", mode_label(result.mode)));
    s.push_str(&format!("theta_ch      {:.12}\n", result.theta_ch));
    s.push_str(&format!("value         {:.12}\n", result.value));
    s.push_str(&format!("mirror        {:.12}\n", result.mirror));
    s.push_str(&format!("seed_theta    {:.12}\n", result.seed_theta));
    match result.decay {
        Some(d) => s.push_str(&format!("decay         {d:.6}\n")),
        None => s.push_str("decay         -\n"),
    }
    s.push_str(&format!("oracle_calls  {}\n", result.oracle_calls));
    if result.no_signal {
        s.push_str("note: every t-value is zero within the guard; reporting theta_ch = 0\n");
    }
    if result.final_fallback {
        s.push_str("warning: the deepest iteration failed; theta_ch comes from an earlier depth\n");
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    /// Deepest doubling depth `2^k`.
    pub depth: usize,
    pub trial: u32,
    pub theta_est: f64,
    pub theta_true: f64,
    pub abs_error: f64,
}

/// Reference phase: ideal without noise, otherwise the perturbed eigenphase.
pub fn reference_theta(sim: &Simulator, noiseless: bool) -> CliResult<f64> {
    if noiseless {
        Ok(sim.problem().ideal_theta_ch())
    } else {
        Ok(perturbed_phase(sim)?)
    }
}

/// Runs `trials` estimations at every depth `2^0 … 2^iterations`.
pub fn cmd_sweep_depth(cfg: &ExperimentConfig) -> CliResult<Vec<SweepRow>> {
    let (_, sim) = simulator(cfg)?;
    let theta_true = reference_theta(&sim, cfg.resolved_noise().is_none())?;
    let sampling = cfg.sampling();
    let jobs: Vec<(u32, u32)> = (0..=cfg.iterations)
        .flat_map(|k| (0..cfg.trials).map(move |t| (k, t)))
        .collect();
    let mut rows = jobs
        .par_iter()
        .map(|&(k, trial)| {
            let r = run(&sim, sampling, StreamKey::new(cfg.seed, trial), &run_options(cfg, k))?;
            Ok(SweepRow {
                depth: 1 << k,
                trial,
                theta_est: r.theta_ch,
                theta_true,
                abs_error: (r.theta_ch - theta_true).abs(),
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    rows.sort_by_key(|r| (r.depth, r.trial));
    Ok(rows)
}

/// Columns: `depth, trial, theta_est, theta_true, abs_error`.
pub fn sweep_csv(rows: &[SweepRow]) -> Csv {
    let mut csv = Csv::new(&["depth", "trial", "theta_est", "theta_true", "abs_error"]);
    for r in rows {
        csv.push(&[
            Cell::U(r.depth as u64),
            Cell::U(r.trial as u64),
            Cell::F(r.theta_est),
            Cell::F(r.theta_true),
            Cell::F(r.abs_error),
        ]);
    }
    csv
}

/// Median absolute error per depth.
pub fn median_by_depth<I: IntoIterator<Item = (usize, f64)>>(pairs: I) -> Vec<(usize, f64)> {
    let mut groups: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for (d, e) in pairs {
        groups.entry(d).or_default().push(e);
    }
    groups
        .into_iter()
        .map(|(d, v)| (d, median(&v).expect("groups are non-empty")))
        .collect()
}

/// Log-log slope of median error against depth.
pub fn depth_slope(medians: &[(usize, f64)]) -> Option<f64> {
    let (x, y): (Vec<f64>, Vec<f64>) = medians.iter().map(|&(d, e)| (d as f64, e)).unzip();
    log_log_slope(&x, &y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Method {
    Nrqae,
    Iqae,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Nrqae => "nrqae",
            Method::Iqae => "iqae",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareRow {
    pub depth: usize,
    pub trial: u32,
    pub method: Method,
    pub estimate: f64,
    pub truth: f64,
    pub abs_error: f64,
    pub oracle_calls: u64,
}

/// Baseline settings matched to one estimator run: same shots per circuit, the same
/// deepest circuit `3·depth`, and at most the estimator's Grover applications.
pub fn matched_iqae_options(cfg: &ExperimentConfig, shots: u64, depth: usize, budget: u64) -> IqaeOptions {
    IqaeOptions {
        confidence: cfg.iqae.confidence,
        max_rounds: cfg.iqae.max_rounds,
        max_k: Some(3 * depth),
        max_oracle_calls: Some(budget),
        ..IqaeOptions::new(shots, cfg.iqae.target_eps)
    }
}

fn compare_one(
    cfg: &ExperimentConfig,
    sim: &Simulator,
    shots: u64,
    k: u32,
    trial: u32,
) -> CliResult<(EstimationResult, IqaeResult)> {
    let key = StreamKey::new(cfg.seed, trial);
    let est = run(sim, nrqae::circuit::Sampling::Shots(shots), key, &run_options(cfg, k))?;
    let opts = matched_iqae_options(cfg, shots, 1 << k, est.oracle_calls);
    let base = iqae_run(sim, &opts, key)?;
    Ok((est, base))
}

/// Estimator against the baseline at matched budgets, for every depth and trial.
pub fn cmd_compare_noise(cfg: &ExperimentConfig) -> CliResult<Vec<CompareRow>> {
    let shots = cfg
        .shots
        .ok_or_else(|| CliError::Config("compare-noise needs a shot count".into()))?;
    let (problem, sim) = simulator(cfg)?;
    let truth = problem.exact_value();
    let jobs: Vec<(u32, u32)> = (0..=cfg.iterations)
        .flat_map(|k| (0..cfg.trials).map(move |t| (k, t)))
        .collect();
    let pairs = jobs
        .par_iter()
        .map(|&(k, trial)| compare_one(cfg, &sim, shots, k, trial).map(|r| (k, trial, r)))
        .collect::<CliResult<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(2 * pairs.len());
    for (k, trial, (est, base)) in pairs {
        let depth = 1usize << k;
        rows.push(CompareRow {
            depth,
            trial,
            method: Method::Nrqae,
            estimate: est.value,
            truth,
            abs_error: (est.value - truth).abs(),
            oracle_calls: est.oracle_calls,
        });
        rows.push(CompareRow {
            depth,
            trial,
            method: Method::Iqae,
            estimate: base.value,
            truth,
            abs_error: (base.value - truth).abs(),
            oracle_calls: base.oracle_calls,
        });
    }
    rows.sort_by_key(|r| (r.depth, r.trial, r.method));
    Ok(rows)
}

/// Columns: `depth, trial, method, estimate, truth, abs_error, oracle_calls`.
pub fn compare_csv(rows: &[CompareRow]) -> Csv {
    let mut csv = Csv::new(&["depth", "trial", "method", "estimate", "truth", "abs_error", "oracle_calls"]);
    for r in rows {
        csv.push(&[
            Cell::U(r.depth as u64),
            Cell::U(r.trial as u64),
            Cell::S(r.method.label()),
            Cell::F(r.estimate),
            Cell::F(r.truth),
            Cell::F(r.abs_error),
            Cell::U(r.oracle_calls),
        ]);
    }
    csv
}

/// Median error per depth for one method.
pub fn compare_medians(rows: &[CompareRow], method: Method) -> Vec<(usize, f64)> {
    median_by_depth(rows.iter().filter(|r| r.method == method).map(|r| (r.depth, r.abs_error)))
}

/// `log10` median error against `log10` depth, one line per method.
pub fn compare_svg(rows: &[CompareRow], title: &str) -> String {
    let series: Vec<Series> = [Method::Nrqae, Method::Iqae]
        .into_iter()
        .map(|m| Series {
            name: m.label().to_string(),
            points: compare_medians(rows, m)
                .into_iter()
                .map(|(d, e)| ((d as f64).log10(), e.log10()))
                .collect(),
        })
        .collect();
    line_plot(title, "log10 depth", "log10 median |error|", &series)
}

/// Reports over the `s` grid with their fitted slopes.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOutput {
    pub reports: Vec<PerturbationReport>,
    pub slopes: VerifySlopes,
}

/// Log-log slopes against `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifySlopes {
    pub lemma1: Option<f64>,
    pub first_order_shift: Option<f64>,
    pub lemma2: Option<f64>,
    pub c1_error: Option<f64>,
    pub theorem1: Option<f64>,
}

impl VerifyOutput {
    pub fn flagged(&self) -> usize {
        self.reports.iter().filter(|r| r.flagged).count()
    }
}

/// Largest t-model error over depths divided by the error at the shallowest depth.
pub fn uniformity_ratio(report: &PerturbationReport) -> f64 {
    let first = report.tn_errors.first().map_or(f64::NAN, |e| e.1);
    let max = report.tn_errors.iter().map(|e| e.1).fold(0.0, f64::max);
    max / first
}

pub fn cmd_verify_perturbation(cfg: &ExperimentConfig) -> CliResult<VerifyOutput> {
    let noise = cfg.resolved_noise();
    if noise.is_none() {
        return Err(CliError::Config("verify-perturbation needs a noise model".into()));
    }
    if cfg.s_grid.is_empty() {
        return Err(CliError::Config("verify-perturbation needs a non-empty s_grid".into()));
    }
    let problem = cfg.problem.build()?;
    let n = noise_superop(&noise, problem.dim()).map_err(|e| CliError::Config(e.to_string()))?;
    let reports = cfg
        .s_grid
        .par_iter()
        .map(|&s| analyze(&problem, &n, s, &cfg.t_depths))
        .collect::<nrqae::Result<Vec<_>>>()?;
    let s: Vec<f64> = reports.iter().map(|r| r.s).collect();
    let col = |f: &dyn Fn(&PerturbationReport) -> f64| -> Option<f64> {
        let y: Vec<f64> = reports.iter().map(f).collect();
        log_log_slope(&s, &y)
    };
    let slopes = VerifySlopes {
        lemma1: col(&|r| r.lemma1().residual),
        first_order_shift: col(&|r| r.lemma1().first_order_shift),
        lemma2: col(&|r| r.lemma2_residual),
        c1_error: col(&|r| r.c1_error),
        theorem1: col(&|r| r.theorem1().max_error()),
    };
    Ok(VerifyOutput { reports, slopes })
}

/// Columns: `s, eps, lemma1_residual, first_order_shift, lemma2_residual, c1_error, c2_error,
/// theorem1_max_error, theorem1_uniformity, theta_ideal, theta_pert, min_overlap, flagged`.
pub fn verify_csv(out: &VerifyOutput) -> Csv {
    let mut csv = Csv::new(&[
        "s",
        "eps",
        "lemma1_residual",
        "first_order_shift",
        "lemma2_residual",
        "c1_error",
        "c2_error",
        "theorem1_max_error",
        "theorem1_uniformity",
        "theta_ideal",
        "theta_pert",
        "min_overlap",
        "flagged",
    ]);
    for r in &out.reports {
        let l1 = r.lemma1();
        csv.push(&[
            Cell::F(r.s),
            Cell::F(r.eps),
            Cell::F(l1.residual),
            Cell::F(l1.first_order_shift),
            Cell::F(r.lemma2_residual),
            Cell::F(r.c1_error),
            Cell::F(r.c2_error),
            Cell::F(r.theorem1().max_error()),
            Cell::F(uniformity_ratio(r)),
            Cell::F(r.theta_ideal),
            Cell::F(r.theta_pert),
            Cell::F(r.overlaps[0].min(r.overlaps[1])),
            Cell::B(r.flagged),
        ]);
    }
    csv
}

pub fn verify_report(out: &VerifyOutput) -> String {
    let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
    let s = &out.slopes;
    format!(
        "slope lemma1_residual     {}\nslope first_order_shift  {}\nslope lemma2_residual     {}\nslope c1_error            {}\nslope theorem1_max_error  {}\nflagged rows              {}\n",
        fmt(s.lemma1),
        fmt(s.first_order_shift),
        fmt(s.lemma2),
        fmt(s.c1_error),
        fmt(s.theorem1),
        out.flagged()
    )
}

/// Shots for an `eps`-accurate probability at confidence `1 − delta`.
pub fn cmd_plan_shots(eps: f64, delta: f64) -> CliResult<u64> {
    hoeffding_shots(eps, delta).map_err(|e| CliError::Usage(e.to_string()))
}

/// Columns: `eps, delta, shots`.
pub fn plan_csv(eps: f64, delta: f64, shots: u64) -> Csv {
    let mut csv = Csv::new(&["eps", "delta", "shots"]);
    csv.push(&[Cell::F(eps), Cell::F(delta), Cell::U(shots)]);
    csv
}
