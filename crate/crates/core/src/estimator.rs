//! Ratio-and-root recovery of the channel phase with depth doubling.

use std::f64::consts::PI;

use crate::circuit::{t_half_width, Sampling, Simulator, TSeries, TSource};
use crate::error::{Error, Result};
use crate::model::{theta_to_value, EstimationProblem, Mode, NoiseSpec};
use crate::rng::StreamKey;
use crate::stats::linear_fit;

/// `|t_2n|` floor for exact data.
pub const EXACT_GUARD: f64 = 1e-9;
/// Confidence parameter of the sampled-mode guard.
pub const GUARD_DELTA: f64 = 0.05;
/// Multiple of the t half-width used as the sampled-mode guard.
pub const GUARD_WIDTHS: f64 = 3.0;
/// Roots this far outside `[−1, 1]` are clamped back in.
pub const ROOT_SLACK: f64 = 1e-9;
/// Candidate angles closer than this are merged.
pub const MERGE_TOL: f64 = 1e-12;
/// Distances within this are ties, resolved toward the smaller angle.
pub const TIE_TOL: f64 = 1e-12;
/// Grid size of the first-iteration seed search.
pub const SEED_GRID: usize = 2048;
/// Smallest per-layer decay factor the seed fit considers.
pub const SEED_MIN_DECAY: f64 = 0.05;
/// Shot multiplier used by the retry policy.
pub const RETRY_FACTOR: u64 = 4;
/// Largest possible `|t_n|`; a guard at or above it can never be cleared.
pub const T_MAX: f64 = 2.0;
/// Minimum `|cos(nθ)|` for a depth to enter the decay fit.
pub const DECAY_MIN_COS: f64 = 0.1;

/// `t_n·t_3n / t_2n²` with the default exact guard.
pub fn ratio_y(t_n: f64, t_2n: f64, t_3n: f64) -> Result<f64> {
    ratio_y_guarded(t_n, t_2n, t_3n, EXACT_GUARD)
}

pub fn ratio_y_guarded(t_n: f64, t_2n: f64, t_3n: f64, guard: f64) -> Result<f64> {
    if !(t_2n.abs() > guard) {
        return Err(Error::DivisionGuard { t2n: t_2n, guard });
    }
    Ok(t_n * t_3n / (t_2n * t_2n))
}

/// Real solutions of `2(y−1)x² − x + 1 = 0` lying in `[−1, 1]`, ascending.
pub fn roots_cos(y: f64) -> Vec<f64> {
    let a = 2.0 * (y - 1.0);
    let disc = 1.0 - 4.0 * a;
    if !(disc >= 0.0) {
        return Vec::new();
    }
    let q = (1.0 + disc.sqrt()) / 2.0;
    let mut raw = vec![1.0 / q];
    if a != 0.0 {
        raw.push(q / a);
    }
    let mut out: Vec<f64> = raw
        .into_iter()
        .filter(|x| x.abs() <= 1.0 + ROOT_SLACK)
        .map(|x| x.clamp(-1.0, 1.0))
        .collect();
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() <= MERGE_TOL);
    out
}

/// All `θ ∈ [0, π]` with `cos(2nθ) = x`, ascending.
pub fn candidate_angles(x: f64, n: usize) -> Vec<f64> {
    assert!(n >= 1, "candidate_angles needs n >= 1");
    let alpha = x.clamp(-1.0, 1.0).acos();
    let two_n = 2.0 * n as f64;
    let mut out = Vec::with_capacity(2 * n);
    for k in 0..n {
        let base = 2.0 * PI * k as f64;
        out.push((alpha + base) / two_n);
        out.push((2.0 * PI - alpha + base) / two_n);
    }
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() <= MERGE_TOL);
    out
}

/// Candidate nearest `theta_prev`; ties go to the smaller angle.
pub fn select_candidate(candidates: &[f64], theta_prev: f64) -> Option<f64> {
    let mut best: Option<(f64, f64)> = None;
    for &c in candidates {
        let d = (c - theta_prev).abs();
        best = match best {
            None => Some((c, d)),
            Some((bc, bd)) if d < bd - TIE_TOL || ((d - bd).abs() <= TIE_TOL && c < bc) => {
                Some((c, d))
            }
            keep => keep,
        };
    }
    best.map(|(c, _)| c)
}

fn residual_at(t: &[f64; 3], theta: f64, p: f64) -> f64 {
    let c: [f64; 3] = std::array::from_fn(|m| p.powi(m as i32 + 1) * ((m + 1) as f64 * theta).cos());
    let cc: f64 = c.iter().map(|v| v * v).sum();
    let tc: f64 = t.iter().zip(&c).map(|(a, b)| a * b).sum();
    let amp = (tc / cc).max(0.0);
    t.iter().zip(&c).map(|(a, b)| (a - amp * b).powi(2)).sum()
}

fn golden_min(mut lo: f64, mut hi: f64, iters: usize, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..iters {
        let a = hi - g * (hi - lo);
        let b = lo + g * (hi - lo);
        if f(a) <= f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    let x = (lo + hi) / 2.0;
    (x, f(x))
}

/// Residual at `theta` minimized over the decay factor, with `p = 1` always considered.
fn seed_residual(t: &[f64; 3], theta: f64) -> f64 {
    let undamped = residual_at(t, theta, 1.0);
    let (_, damped) = golden_min(SEED_MIN_DECAY, 1.0, 28, |p| residual_at(t, theta, p));
    undamped.min(damped)
}

/// Phase in `[0, π]` best explaining `t_m = C·p^m·cos(mθ)` for `m = 1, 2, 3`,
/// with `C ≥ 0` and `p ∈ [SEED_MIN_DECAY, 1]`.
///
/// Grid search over `θ` followed by golden-section refinement inside the winning cell.
pub fn seed_theta(triplet: [f64; 3]) -> f64 {
    if triplet.iter().all(|t| *t == 0.0) {
        return 0.0;
    }
    let step = PI / (SEED_GRID - 1) as f64;
    let mut best = (0usize, f64::INFINITY);
    for j in 0..SEED_GRID {
        let r = seed_residual(&triplet, j as f64 * step);
        if r < best.1 {
            best = (j, r);
        }
    }
    let centre = best.0 as f64 * step;
    let (refined, r) = golden_min(
        (centre - step).max(0.0),
        (centre + step).min(PI),
        60,
        |th| seed_residual(&triplet, th),
    );
    if r <= best.1 {
        refined
    } else {
        centre
    }
}

/// `p̂ = exp(slope)` of `ln|t_n / cos(nθ)|` against `n`, capped at 1.
pub fn fit_decay(theta_ch: f64, series: &[(usize, f64)]) -> Result<f64> {
    let (x, y): (Vec<f64>, Vec<f64>) = series
        .iter()
        .filter_map(|&(n, t)| {
            let c = (n as f64 * theta_ch).cos();
            (c.abs() > DECAY_MIN_COS && t != 0.0).then(|| (n as f64, (t / c).abs().ln()))
        })
        .unzip();
    if x.len() < 2 {
        return Err(Error::InsufficientDepths { usable: x.len() });
    }
    let (slope, _) = linear_fit(&x, &y).ok_or(Error::InsufficientDepths { usable: 1 })?;
    Ok(slope.exp().min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IterationStatus {
    Ok,
    /// Succeeded after the retry draw.
    Retried,
    DivisionGuard,
    NoRoots,
}

impl IterationStatus {
    pub fn succeeded(self) -> bool {
        matches!(self, IterationStatus::Ok | IterationStatus::Retried)
    }

    pub fn label(self) -> &'static str {
        match self {
            IterationStatus::Ok => "ok",
            IterationStatus::Retried => "retried",
            IterationStatus::DivisionGuard => "division-guard",
            IterationStatus::NoRoots => "no-roots",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub n: usize,
    pub triplet: [f64; 3],
    pub y: Option<f64>,
    pub roots: Vec<f64>,
    pub candidates: Vec<f64>,
    /// Estimate after this iteration; unchanged from the previous one on failure.
    pub theta: f64,
    pub status: IterationStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationResult {
    pub mode: Mode,
    pub iterations: Vec<IterationRecord>,
    pub seed_theta: f64,
    pub theta_ch: f64,
    pub value: f64,
    pub mirror: f64,
    pub decay: Option<f64>,
    pub oracle_calls: u64,
    /// The last iteration failed and `theta_ch` comes from an earlier one.
    pub final_fallback: bool,
    /// Every t-value stayed within the division guard; reported as `θ_ch = 0`.
    pub no_signal: bool,
    pub series: TSeries,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    /// Last iteration index; depths run over `n = 1, 2, 4, …, 2^k`.
    pub k: u32,
    /// Resample once with `RETRY_FACTOR` times the shots on failure.
    pub retry: bool,
    /// Overrides the automatic division guard.
    pub guard: Option<f64>,
}

impl RunOptions {
    pub fn new(k: u32) -> Self {
        Self {
            k,
            retry: false,
            guard: None,
        }
    }
}

fn guard_for(sampling: Sampling, shots: Option<u64>, opts: &RunOptions) -> f64 {
    if let Some(g) = opts.guard {
        return g;
    }
    match (sampling, shots) {
        (Sampling::Shots(_), Some(s)) => GUARD_WIDTHS * t_half_width(s, GUARD_DELTA),
        _ => EXACT_GUARD,
    }
}

struct Attempt {
    y: Option<f64>,
    roots: Vec<f64>,
    candidates: Vec<f64>,
    status: IterationStatus,
}

fn attempt(triplet: [f64; 3], n: usize, guard: f64) -> Attempt {
    let y = match ratio_y_guarded(triplet[0], triplet[1], triplet[2], guard) {
        Ok(y) => y,
        Err(_) => {
            return Attempt {
                y: None,
                roots: Vec::new(),
                candidates: Vec::new(),
                status: IterationStatus::DivisionGuard,
            }
        }
    };
    let roots = roots_cos(y);
    let mut candidates: Vec<f64> = roots.iter().flat_map(|&x| candidate_angles(x, n)).collect();
    candidates.sort_by(f64::total_cmp);
    candidates.dedup_by(|a, b| (*a - *b).abs() <= MERGE_TOL);
    let status = if roots.is_empty() {
        IterationStatus::NoRoots
    } else {
        IterationStatus::Ok
    };
    Attempt {
        y: Some(y),
        roots,
        candidates,
        status,
    }
}

/// Runs the doubling loop on `source`.
pub fn run_source(source: &mut TSource<'_>, opts: &RunOptions) -> Result<EstimationResult> {
    if let Sampling::Shots(0) = source.sampling() {
        return Err(Error::OutOfRange {
            what: "shots",
            value: 0.0,
        });
    }
    let mode = source.simulator().problem().mode();
    let sampling = source.sampling();
    let mut iterations = Vec::with_capacity(opts.k as usize + 1);
    let mut theta = 0.0;
    let mut seed = 0.0;
    let mut any_ok = false;
    let mut silent = true;

    for i in 0..=opts.k {
        let n = 1usize << i;
        let mut triplet = source.triplet(n)?;
        if i == 0 {
            seed = seed_theta(triplet);
            theta = seed;
        }
        let shots = source.series().entries.get(&(2 * n)).and_then(|e| e.shots);
        let mut att = attempt(triplet, n, guard_for(sampling, shots, opts));
        if !att.status.succeeded() && opts.retry && matches!(sampling, Sampling::Shots(_)) {
            triplet = [
                source.resample(n, RETRY_FACTOR, 1)?,
                source.resample(2 * n, RETRY_FACTOR, 1)?,
                source.resample(3 * n, RETRY_FACTOR, 1)?,
            ];
            let shots = source.series().entries.get(&(2 * n)).and_then(|e| e.shots);
            att = attempt(triplet, n, guard_for(sampling, shots, opts));
            if att.status.succeeded() {
                att.status = IterationStatus::Retried;
            }
        }
        let guard = guard_for(sampling, shots, opts);
        silent &= guard < T_MAX && triplet.iter().all(|t| t.abs() <= guard);
        if att.status.succeeded() {
            if let Some(next) = select_candidate(&att.candidates, theta) {
                theta = next;
                any_ok = true;
            }
        }
        iterations.push(IterationRecord {
            n,
            triplet,
            y: att.y,
            roots: att.roots,
            candidates: att.candidates,
            theta,
            status: att.status,
        });
    }

    // t_n carries the factor 1 − a (or 1 − ⟨O⟩), so a series indistinguishable from zero
    // at every depth is the fixed point θ_ch = 0.
    let no_signal = !any_ok && silent;
    if no_signal {
        theta = 0.0;
        seed = 0.0;
    }
    if !any_ok && !no_signal {
        let reasons: Vec<String> = iterations
            .iter()
            .map(|r| format!("n={} {}", r.n, r.status.label()))
            .collect();
        return Err(Error::AllIterationsFailed(reasons.join(", ")));
    }
    let final_fallback = !no_signal && !iterations.last().unwrap().status.succeeded();
    let theta_ch = theta.clamp(0.0, PI);
    let (value, mirror) = theta_to_value(theta_ch, mode)?;
    let series = source.series();
    let decay = fit_decay(theta_ch, &series.values()).ok();
    Ok(EstimationResult {
        mode,
        iterations,
        seed_theta: seed,
        theta_ch,
        value,
        mirror,
        decay,
        oracle_calls: source.oracle_calls(),
        final_fallback,
        no_signal,
        series,
    })
}

/// Runs the doubling loop on a fresh source over `sim`.
pub fn run(
    sim: &Simulator,
    sampling: Sampling,
    key: StreamKey,
    opts: &RunOptions,
) -> Result<EstimationResult> {
    let mut source = TSource::new(sim, sampling, key);
    run_source(&mut source, opts)
}

/// Builds the simulator and runs once.
pub fn estimate(
    problem: &EstimationProblem,
    noise: &NoiseSpec,
    sampling: Sampling,
    seed: u64,
    opts: &RunOptions,
) -> Result<EstimationResult> {
    let sim = Simulator::new(problem.clone(), noise)?;
    run(&sim, sampling, StreamKey::new(seed, 0), opts)
}
