//! Iterative amplitude estimation baseline with Hoeffding intervals.
//!
//! The Grover angle `γ ∈ [0, π/2]` satisfies `a = cos²γ`, and `k` layers give
//! good-state probability `cos²((4k+2)γ/2) = (1 + cos((4k+2)γ))/2`.

use std::f64::consts::{FRAC_PI_2, PI};

use rand_distr::{Binomial, Distribution};

use crate::circuit::{Simulator, Slot};
use crate::error::{Error, Result};
use crate::linalg::{normalized, C64};
use crate::model::Mode;
use crate::rng::StreamKey;

/// Stream term offset keeping baseline draws disjoint from estimator draws.
const TERM_BASE: u8 = 128;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IqaeOptions {
    pub shots_per_round: u64,
    /// Stop once the amplitude interval half-width is at most this.
    pub target_eps: f64,
    /// Joint confidence `1 − α` over all rounds.
    pub confidence: f64,
    /// At most 127 rounds.
    pub max_rounds: u32,
    /// Cap on the amplification power `k`.
    pub max_k: Option<usize>,
    /// Cap on Grover applications (`k` per shot).
    pub max_oracle_calls: Option<u64>,
}

impl IqaeOptions {
    pub fn new(shots_per_round: u64, target_eps: f64) -> Self {
        Self {
            shots_per_round,
            target_eps,
            confidence: 0.95,
            max_rounds: 100,
            max_k: None,
            max_oracle_calls: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IqaeRound {
    pub k: usize,
    /// Shots accumulated at this `k`, including earlier rounds with the same `k`.
    pub shots: u64,
    pub p_hat: f64,
    pub gamma_lo: f64,
    pub gamma_hi: f64,
}

/// Interval on `γ` with its amplification schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct IqaeState {
    pub gamma_lo: f64,
    pub gamma_hi: f64,
    pub k: usize,
    pub shots_used: u64,
    pub rounds: Vec<IqaeRound>,
}

impl IqaeState {
    fn new() -> Self {
        Self {
            gamma_lo: 0.0,
            gamma_hi: FRAC_PI_2,
            k: 0,
            shots_used: 0,
            rounds: Vec::new(),
        }
    }

    pub fn width(&self) -> f64 {
        self.gamma_hi - self.gamma_lo
    }

    /// `[cos²γ_hi, cos²γ_lo]`.
    pub fn amplitude_interval(&self) -> (f64, f64) {
        (self.gamma_hi.cos().powi(2), self.gamma_lo.cos().powi(2))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IqaeResult {
    pub mode: Mode,
    /// Amplitude estimate, the midpoint of the amplitude interval.
    pub amplitude: f64,
    pub ci: (f64, f64),
    /// `amplitude` in amplitude mode, `2a − 1` in observable mode.
    pub value: f64,
    pub oracle_calls: u64,
    pub converged: bool,
    pub budget_exhausted: bool,
    pub state: IqaeState,
}

/// Half-period index `j` with `K·[lo, hi] ⊂ [jπ, (j+1)π]`, if any.
fn half_period(kk: f64, lo: f64, hi: f64) -> Option<i64> {
    let (a, b) = (kk * lo / PI, kk * hi / PI);
    let j = a.floor();
    (b <= j + 1.0 + 1e-12).then_some(j as i64)
}

/// Largest `k` (at most `cap`) whose scaled interval stays in one half period.
/// `k = 0` always fits.
pub fn next_k(lo: f64, hi: f64, cap: usize) -> usize {
    let width = (hi - lo).max(1e-300);
    let k_upper = ((PI / width - 2.0) / 4.0).floor().max(0.0);
    let mut k = (k_upper as usize).min(cap);
    loop {
        if k == 0 || half_period((4 * k + 2) as f64, lo, hi).is_some() {
            return k;
        }
        k -= 1;
    }
}

/// Interval update keeping the width non-increasing.
fn merge_interval(old: (f64, f64), new: (f64, f64)) -> (f64, f64) {
    if new.1 - new.0 <= old.1 - old.0 {
        return new;
    }
    let (lo, hi) = (new.0.max(old.0), new.1.min(old.1));
    if lo <= hi {
        return (lo, hi);
    }
    let mid = (new.0 + new.1) / 2.0;
    let half = (old.1 - old.0) / 2.0;
    ((mid - half).max(0.0), (mid + half).min(FRAC_PI_2))
}

/// State measured by the baseline: `φ`, or the bisector of `ψ` and `O|ψ⟩`.
fn good_state(sim: &Simulator) -> Result<Vec<C64>> {
    let problem = sim.problem();
    match problem.mode() {
        Mode::Amplitude => Ok(problem.partner()),
        Mode::Observable => {
            let sum: Vec<C64> = problem
                .psi()
                .iter()
                .zip(problem.partner())
                .map(|(a, b)| a + b)
                .collect();
            normalized(&sum).ok_or_else(|| {
                Error::Degenerate("⟨O⟩ = −1 leaves no good state for the baseline".into())
            })
        }
    }
}

/// Runs the baseline on the same noisy layers as the main estimator.
pub fn iqae_run(sim: &Simulator, opts: &IqaeOptions, key: StreamKey) -> Result<IqaeResult> {
    if opts.shots_per_round == 0 {
        return Err(Error::OutOfRange {
            what: "shots_per_round",
            value: 0.0,
        });
    }
    if !(opts.target_eps > 0.0) {
        return Err(Error::OutOfRange {
            what: "target_eps",
            value: opts.target_eps,
        });
    }
    if !(opts.confidence > 0.0 && opts.confidence < 1.0) {
        return Err(Error::OutOfRange {
            what: "confidence",
            value: opts.confidence,
        });
    }
    let rounds = opts.max_rounds.min(127);
    let good = good_state(sim)?;
    let alpha = 1.0 - opts.confidence;
    let cap = opts.max_k.unwrap_or(usize::MAX / 8);

    let mut state = IqaeState::new();
    let mut oracle_calls = 0u64;
    let mut hits_at_k = 0u64;
    let mut shots_at_k = 0u64;
    let mut converged = false;
    let mut budget_exhausted = false;

    for round in 0..rounds {
        let (a_lo, a_hi) = state.amplitude_interval();
        if (a_hi - a_lo) / 2.0 <= opts.target_eps {
            converged = true;
            break;
        }
        let k = next_k(state.gamma_lo, state.gamma_hi, cap);
        if k != state.k {
            hits_at_k = 0;
            shots_at_k = 0;
        }
        let cost = opts.shots_per_round * k as u64;
        if let Some(budget) = opts.max_oracle_calls {
            if oracle_calls + cost > budget {
                budget_exhausted = true;
                break;
            }
        }
        let p = sim.probability_onto(Slot::Psi, &good, k)?;
        let mut rng = key.substream(k, TERM_BASE + round as u8);
        let dist = Binomial::new(opts.shots_per_round, p)
            .map_err(|_| Error::NonPhysicalProbability { value: p })?;
        hits_at_k += dist.sample(&mut rng);
        shots_at_k += opts.shots_per_round;
        oracle_calls += cost;
        state.shots_used += opts.shots_per_round;
        state.k = k;

        let p_hat = hits_at_k as f64 / shots_at_k as f64;
        let eps = ((2.0 * rounds as f64 / alpha).ln() / (2.0 * shots_at_k as f64)).sqrt();
        let (p_lo, p_hi) = ((p_hat - eps).max(0.0), (p_hat + eps).min(1.0));
        let kk = (4 * k + 2) as f64;
        let j = half_period(kk, state.gamma_lo, state.gamma_hi)
            .expect("schedule keeps the interval inside one half period");
        // cos(Kγ) = 2p − 1 on the monotone branch [jπ, (j+1)π].
        let (u, v) = ((2.0 * p_hi - 1.0).acos(), (2.0 * p_lo - 1.0).acos());
        let jf = j as f64;
        let (lo, hi) = if j % 2 == 0 {
            ((jf * PI + u) / kk, (jf * PI + v) / kk)
        } else {
            (((jf + 1.0) * PI - v) / kk, ((jf + 1.0) * PI - u) / kk)
        };
        let (lo, hi) = merge_interval(
            (state.gamma_lo, state.gamma_hi),
            (lo.max(0.0), hi.min(FRAC_PI_2)),
        );
        state.gamma_lo = lo;
        state.gamma_hi = hi;
        state.rounds.push(IqaeRound {
            k,
            shots: shots_at_k,
            p_hat,
            gamma_lo: lo,
            gamma_hi: hi,
        });
    }
    if !converged {
        let (a_lo, a_hi) = state.amplitude_interval();
        converged = (a_hi - a_lo) / 2.0 <= opts.target_eps;
    }
    let ci = state.amplitude_interval();
    let amplitude = (ci.0 + ci.1) / 2.0;
    let mode = sim.problem().mode();
    let value = match mode {
        Mode::Amplitude => amplitude,
        Mode::Observable => 2.0 * amplitude - 1.0,
    };
    Ok(IqaeResult {
        mode,
        amplitude,
        ci,
        value,
        oracle_calls,
        converged,
        budget_exhausted,
        state,
    })
}
