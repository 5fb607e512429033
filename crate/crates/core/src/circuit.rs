//! Exact and shot-sampled statistics of the prepare, `Gⁿ`, unprepare, measure circuits.

use std::collections::BTreeMap;
use std::hash::{DefaultHasher, Hash, Hasher};

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::linalg::{basis_vector, ComplexMatrix, C64};
use crate::model::{
    conjugation_superop, noise_superop, prep_unitary, rho_tilde, vec_inner, vectorize,
    EstimationProblem, NoiseSpec,
};
use crate::rng::StreamKey;

/// Probabilities this far outside `[0, 1]` are clamped; larger excursions are errors.
pub const PROB_SLACK: f64 = 1e-6;

/// Which of the two circuit states a slot uses. `Phi` means `O|ψ⟩` in observable mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Slot {
    Psi,
    Phi,
}

/// The four circuit probabilities at one depth, named `prep_meas`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourProbs {
    pub phi_phi: f64,
    pub phi_psi: f64,
    pub psi_phi: f64,
    pub psi_psi: f64,
}

impl FourProbs {
    /// Signs `(+, −, −, +)`.
    pub fn combine(&self) -> f64 {
        self.phi_phi - self.phi_psi - self.psi_phi + self.psi_psi
    }

    fn as_array(&self) -> [f64; 4] {
        [self.phi_phi, self.phi_psi, self.psi_phi, self.psi_psi]
    }
}

/// Noisy circuit model: every Grover layer is the superoperator `N·M_G`.
#[derive(Debug, Clone)]
pub struct Simulator {
    problem: EstimationProblem,
    noise: ComplexMatrix,
    ideal: ComplexMatrix,
    layer: ComplexMatrix,
    prep: [ComplexMatrix; 2],
    unprep: [ComplexMatrix; 2],
    ground: Vec<C64>,
}

fn slot_index(s: Slot) -> usize {
    match s {
        Slot::Psi => 0,
        Slot::Phi => 1,
    }
}

impl Simulator {
    pub fn new(problem: EstimationProblem, noise: &NoiseSpec) -> Result<Self> {
        let n = noise_superop(noise, problem.dim())?;
        Self::with_noise_superop(problem, n)
    }

    /// Uses an already compiled noise superoperator.
    pub fn with_noise_superop(problem: EstimationProblem, noise: ComplexMatrix) -> Result<Self> {
        let d = problem.dim();
        if noise.rows() != d * d || noise.cols() != d * d {
            return Err(Error::DimensionMismatch {
                op: "Simulator::with_noise_superop",
                left: (d * d, d * d),
                right: (noise.rows(), noise.cols()),
            });
        }
        let ideal = conjugation_superop(&problem.grover());
        let layer = &noise * &ideal;
        let u_psi = prep_unitary(problem.psi())?;
        let u_phi = prep_unitary(&problem.partner())?;
        let prep = [conjugation_superop(&u_psi), conjugation_superop(&u_phi)];
        let unprep = [
            conjugation_superop(&u_psi.adjoint()),
            conjugation_superop(&u_phi.adjoint()),
        ];
        let e0 = basis_vector(d, 0);
        let ground = vectorize(&ComplexMatrix::outer(&e0, &e0));
        Ok(Self {
            problem,
            noise,
            ideal,
            layer,
            prep,
            unprep,
            ground,
        })
    }

    pub fn problem(&self) -> &EstimationProblem {
        &self.problem
    }

    /// `N`.
    pub fn noise(&self) -> &ComplexMatrix {
        &self.noise
    }

    /// `M_G`.
    pub fn ideal_layer(&self) -> &ComplexMatrix {
        &self.ideal
    }

    /// `N·M_G`.
    pub fn layer(&self) -> &ComplexMatrix {
        &self.layer
    }

    /// Vectorized state after preparation and `n` noisy layers.
    pub fn evolve(&self, prep: Slot, n: usize) -> Vec<C64> {
        let mut v = self.prep[slot_index(prep)].apply(&self.ground);
        for _ in 0..n {
            v = self.layer.apply(&v);
        }
        v
    }

    /// Probability of reading `|0…0⟩` after unpreparing `meas`.
    fn measure(&self, state: &[C64], meas: Slot) -> Result<f64> {
        let out = self.unprep[slot_index(meas)].apply(state);
        clamp_probability(out[0].re)
    }

    pub fn circuit_prob(&self, prep: Slot, meas: Slot, n: usize) -> Result<f64> {
        self.measure(&self.evolve(prep, n), meas)
    }

    /// Probability of finding `target` after preparing `prep` and `n` noisy layers.
    pub fn probability_onto(&self, prep: Slot, target: &[C64], n: usize) -> Result<f64> {
        let unprep = conjugation_superop(&prep_unitary(target)?.adjoint());
        let out = unprep.apply(&self.evolve(prep, n));
        clamp_probability(out[0].re)
    }

    pub fn probabilities(&self, n: usize) -> Result<FourProbs> {
        let from_phi = self.evolve(Slot::Phi, n);
        let from_psi = self.evolve(Slot::Psi, n);
        Ok(FourProbs {
            phi_phi: self.measure(&from_phi, Slot::Phi)?,
            phi_psi: self.measure(&from_phi, Slot::Psi)?,
            psi_phi: self.measure(&from_psi, Slot::Phi)?,
            psi_psi: self.measure(&from_psi, Slot::Psi)?,
        })
    }

    pub fn exact_t(&self, n: usize) -> Result<f64> {
        Ok(self.probabilities(n)?.combine())
    }

    /// `⟨⟨ρ̃|(N·M_G)ⁿ|ρ̃⟩⟩` evaluated directly on superoperators.
    pub fn t_from_rho_tilde(&self, n: usize) -> f64 {
        let rt = vectorize(&rho_tilde(&self.problem));
        let mut v = rt.clone();
        for _ in 0..n {
            v = self.layer.apply(&v);
        }
        vec_inner(&rt, &v).re
    }

    pub fn sampled_t(&self, n: usize, shots: u64, key: StreamKey, attempt: u8) -> Result<f64> {
        sample_four(&self.probabilities(n)?, n, shots, key, attempt)
    }

    /// Fingerprint of the problem states, stable for identical inputs.
    pub fn problem_hash(&self) -> u64 {
        let mut h = DefaultHasher::new();
        format!("{:?}", self.problem.mode()).hash(&mut h);
        for z in self.problem.psi().iter().chain(self.problem.partner().iter()) {
            z.re.to_bits().hash(&mut h);
            z.im.to_bits().hash(&mut h);
        }
        h.finish()
    }

    /// Fingerprint of the compiled noise superoperator.
    pub fn noise_hash(&self) -> u64 {
        let mut h = DefaultHasher::new();
        for z in self.noise.as_slice() {
            z.re.to_bits().hash(&mut h);
            z.im.to_bits().hash(&mut h);
        }
        h.finish()
    }
}

fn clamp_probability(p: f64) -> Result<f64> {
    if !(-PROB_SLACK..=1.0 + PROB_SLACK).contains(&p) || p.is_nan() {
        return Err(Error::NonPhysicalProbability { value: p });
    }
    Ok(p.clamp(0.0, 1.0))
}

/// Binomial estimate of each probability on its own substream, then the signed sum.
fn sample_four(probs: &FourProbs, n: usize, shots: u64, key: StreamKey, attempt: u8) -> Result<f64> {
    if shots == 0 {
        return Err(Error::OutOfRange {
            what: "shots",
            value: 0.0,
        });
    }
    assert!(attempt < 64, "attempt index must fit the stream layout");
    let mut est = [0.0; 4];
    for (k, p) in probs.as_array().into_iter().enumerate() {
        let mut rng = key.substream(n, attempt * 4 + k as u8);
        let dist = Binomial::new(shots, p).map_err(|_| Error::NonPhysicalProbability { value: p })?;
        est[k] = dist.sample(&mut rng) as f64 / shots as f64;
    }
    Ok(est[0] - est[1] - est[2] + est[3])
}

/// How t-values are produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sampling {
    Exact,
    Shots(u64),
    /// Exact value plus `±amplitude` with a random sign per depth.
    Perturbed(f64),
}

/// One measured t-value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TEntry {
    pub t: f64,
    /// `None` for exact (or perturbed-exact) values.
    pub shots: Option<u64>,
}

/// t-values by depth with the fingerprints of what produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct TSeries {
    pub entries: BTreeMap<usize, TEntry>,
    pub problem_hash: u64,
    pub noise_hash: u64,
    pub seed: u64,
}

impl TSeries {
    pub fn depths(&self) -> Vec<usize> {
        self.entries.keys().copied().collect()
    }

    pub fn values(&self) -> Vec<(usize, f64)> {
        self.entries.iter().map(|(n, e)| (*n, e.t)).collect()
    }
}

/// Depth-keyed cache of t-values over one simulator; counts Grover applications.
///
/// Exact evaluations count as one shot each.
pub struct TSource<'a> {
    sim: &'a Simulator,
    sampling: Sampling,
    key: StreamKey,
    entries: BTreeMap<usize, TEntry>,
    probs: BTreeMap<usize, FourProbs>,
    oracle_calls: u64,
    evaluations: usize,
}

impl<'a> TSource<'a> {
    pub fn new(sim: &'a Simulator, sampling: Sampling, key: StreamKey) -> Self {
        Self {
            sim,
            sampling,
            key,
            entries: BTreeMap::new(),
            probs: BTreeMap::new(),
            oracle_calls: 0,
            evaluations: 0,
        }
    }

    pub fn simulator(&self) -> &Simulator {
        self.sim
    }

    pub fn sampling(&self) -> Sampling {
        self.sampling
    }

    fn probs(&mut self, depth: usize) -> Result<FourProbs> {
        if let Some(p) = self.probs.get(&depth) {
            return Ok(*p);
        }
        let p = self.sim.probabilities(depth)?;
        self.probs.insert(depth, p);
        Ok(p)
    }

    fn evaluate(&mut self, depth: usize, shot_factor: u64, attempt: u8) -> Result<TEntry> {
        let probs = self.probs(depth)?;
        let entry = match self.sampling {
            Sampling::Exact => TEntry {
                t: probs.combine(),
                shots: None,
            },
            Sampling::Perturbed(amp) => {
                let mut rng = self.key.substream(depth, 255);
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                TEntry {
                    t: probs.combine() + sign * amp,
                    shots: None,
                }
            }
            Sampling::Shots(s) => {
                let shots = s * shot_factor;
                TEntry {
                    t: sample_four(&probs, depth, shots, self.key, attempt)?,
                    shots: Some(shots),
                }
            }
        };
        let per_circuit = entry.shots.unwrap_or(1);
        self.oracle_calls += 4 * per_circuit * depth as u64;
        self.evaluations += 1;
        self.entries.insert(depth, entry);
        Ok(entry)
    }

    /// t at `depth`, evaluated at most once.
    pub fn t(&mut self, depth: usize) -> Result<f64> {
        match self.entries.get(&depth) {
            Some(e) => Ok(e.t),
            None => Ok(self.evaluate(depth, 1, 0)?.t),
        }
    }

    /// `(t_n, t_2n, t_3n)`.
    pub fn triplet(&mut self, n: usize) -> Result<[f64; 3]> {
        if n == 0 {
            return Err(Error::OutOfRange {
                what: "n",
                value: 0.0,
            });
        }
        Ok([self.t(n)?, self.t(2 * n)?, self.t(3 * n)?])
    }

    /// Fresh draw at `depth` with `shot_factor` times the shots, replacing the cached value.
    pub fn resample(&mut self, depth: usize, shot_factor: u64, attempt: u8) -> Result<f64> {
        Ok(self.evaluate(depth, shot_factor, attempt)?.t)
    }

    /// Grover applications spent so far: `4·shots·depth` per evaluated depth.
    pub fn oracle_calls(&self) -> u64 {
        self.oracle_calls
    }

    /// Number of depth evaluations performed (cache hits excluded).
    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    pub fn series(&self) -> TSeries {
        TSeries {
            entries: self.entries.clone(),
            problem_hash: self.sim.problem_hash(),
            noise_hash: self.sim.noise_hash(),
            seed: self.key.seed,
        }
    }
}

/// Half-width bounding `|t_sampled − t_exact|` jointly over the four terms at confidence `1 − δ`.
///
/// The signed sum of four independent means has range 4, so Hoeffding gives
/// `√(2·ln(2/δ)/s)`.
pub fn t_half_width(shots: u64, delta: f64) -> f64 {
    (2.0 * (2.0 / delta).ln() / shots as f64).sqrt()
}

/// The looser four-term union bound `4·√(ln(2/δ)·4/(2s))`, holding with probability `1 − 4δ`.
pub fn t_union_bound(shots: u64, delta: f64) -> f64 {
    4.0 * (4.0 * (2.0 / delta).ln() / (2.0 * shots as f64)).sqrt()
}
