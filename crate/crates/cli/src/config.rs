//! Versioned JSON experiment configuration.
//!
//! Precedence, lowest to highest: built-in defaults, the config file, command-line flags.

use std::f64::consts::FRAC_PI_6;
use std::path::{Path, PathBuf};

use nrqae::linalg::{norm, C64};
use nrqae::model::{angle_state, pauli_string, random_state, EstimationProblem, Mode, NoiseSpec};
use nrqae::circuit::Sampling;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const CONFIG_VERSION: u32 = 1;
/// Deepest doubling index accepted; the largest circuit has `3·2^k` layers.
pub const MAX_ITERATIONS: u32 = 16;

/// One target state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateSpec {
    /// `cos a·|0…00⟩ + sin a·|0…01⟩`.
    Angle(f64),
    /// Explicit amplitudes as `[re, im]` pairs; normalized on load.
    Vector(Vec<[f64; 2]>),
    /// Random state drawn from this seed.
    Random(u64),
}

impl StateSpec {
    pub fn build(&self, qubits: usize) -> CliResult<Vec<C64>> {
        match self {
            StateSpec::Angle(a) => {
                if !a.is_finite() {
                    return Err(CliError::Config(format!("state angle {a} is not finite")));
                }
                Ok(angle_state(qubits, *a))
            }
            StateSpec::Vector(v) => {
                if v.len() != 1 << qubits {
                    return Err(CliError::Config(format!(
                        "state vector has {} entries, expected {} for {qubits} qubit(s)",
                        v.len(),
                        1 << qubits
                    )));
                }
                let z: Vec<C64> = v.iter().map(|p| C64::new(p[0], p[1])).collect();
                let n = norm(&z);
                if !n.is_finite() || n == 0.0 {
                    return Err(CliError::Config("state vector has zero or non-finite norm".into()));
                }
                Ok(z.into_iter().map(|c| c / n).collect())
            }
            StateSpec::Random(seed) => Ok(random_state(qubits, *seed)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub mode: Mode,
    pub qubits: usize,
    pub psi: StateSpec,
    /// Required in amplitude mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<StateSpec>,
    /// Pauli string such as `"ZI"`; required in observable mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observable: Option<String>,
}

impl Default for ProblemSpec {
    fn default() -> Self {
        Self {
            mode: Mode::Amplitude,
            qubits: 1,
            psi: StateSpec::Angle(0.0),
            phi: Some(StateSpec::Angle(FRAC_PI_6)),
            observable: None,
        }
    }
}

impl ProblemSpec {
    pub fn build(&self) -> CliResult<EstimationProblem> {
        if !(1..=3).contains(&self.qubits) {
            return Err(CliError::Config(format!("qubits = {} must be 1, 2 or 3", self.qubits)));
        }
        let psi = self.psi.build(self.qubits)?;
        let problem = match self.mode {
            Mode::Amplitude => {
                let phi = self
                    .phi
                    .as_ref()
                    .ok_or_else(|| CliError::Config("amplitude mode needs problem.phi".into()))?;
                EstimationProblem::amplitude(psi, phi.build(self.qubits)?)
            }
            Mode::Observable => {
                let label = self.observable.as_deref().ok_or_else(|| {
                    CliError::Config("observable mode needs problem.observable".into())
                })?;
                if label.len() != self.qubits {
                    return Err(CliError::Config(format!(
                        "observable {label:?} does not act on {} qubit(s)",
                        self.qubits
                    )));
                }
                let obs = pauli_string(label).map_err(|e| CliError::Config(e.to_string()))?;
                EstimationProblem::observable(psi, obs)
            }
        };
        problem.map_err(|e| CliError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IqaeSpec {
    #[serde(default = "default_confidence")]
    pub confidence: f64,
    #[serde(default = "default_target_eps")]
    pub target_eps: f64,
    #[serde(default = "default_max_rounds")]
    pub max_rounds: u32,
}

fn default_confidence() -> f64 {
    0.95
}
fn default_target_eps() -> f64 {
    1e-6
}
fn default_max_rounds() -> u32 {
    100
}

impl Default for IqaeSpec {
    fn default() -> Self {
        Self {
            confidence: default_confidence(),
            target_eps: default_target_eps(),
            max_rounds: default_max_rounds(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    #[serde(default)]
    pub problem: ProblemSpec,
    #[serde(default)]
    pub noise: NoiseSpec,
    /// Shots per circuit; absent means exact probabilities.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,
    /// Last doubling index `k`.
    #[serde(default = "default_iterations")]
    pub iterations: u32,
    #[serde(default = "default_trials")]
    pub trials: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub retry: bool,
    /// Additive `±perturbation` on every exact t-value; takes priority over shots.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<f64>,
    #[serde(default = "default_s_grid")]
    pub s_grid: Vec<f64>,
    #[serde(default = "default_t_depths")]
    pub t_depths: Vec<usize>,
    #[serde(default)]
    pub iqae: IqaeSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_iterations() -> u32 {
    6
}
fn default_trials() -> u32 {
    1
}
fn default_s_grid() -> Vec<f64> {
    (0..9).map(|k| 10f64.powf(-3.0 + 0.25 * k as f64)).collect()
}
fn default_t_depths() -> Vec<usize> {
    (1..=64).collect()
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            problem: ProblemSpec::default(),
            noise: NoiseSpec::None,
            shots: None,
            iterations: default_iterations(),
            trials: default_trials(),
            seed: 0,
            retry: false,
            perturbation: None,
            s_grid: default_s_grid(),
            t_depths: default_t_depths(),
            iqae: IqaeSpec::default(),
            output: OutputSpec::default(),
        }
    }
}

/// Command-line values layered over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub trials: Option<u32>,
    pub shots: Option<u64>,
    pub exact: bool,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// `--out` sets the CSV path and puts the SVG beside it.
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(trials) = o.trials {
            self.trials = trials;
        }
        if let Some(shots) = o.shots {
            self.shots = Some(shots);
        }
        if o.exact {
            self.shots = None;
        }
        if let Some(out) = &o.out {
            self.output.csv = Some(out.clone());
            self.output.svg = Some(out.with_extension("svg"));
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.version != CONFIG_VERSION {
            return bad(format!("unsupported config version {} (expected {CONFIG_VERSION})", self.version));
        }
        if self.iterations > MAX_ITERATIONS {
            return bad(format!("iterations = {} exceeds {MAX_ITERATIONS}", self.iterations));
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.shots == Some(0) {
            return bad("shots must be positive".into());
        }
        if let Some(p) = self.perturbation {
            if !(p.is_finite() && p >= 0.0) {
                return bad(format!("perturbation = {p} must be finite and non-negative"));
            }
        }
        if self.s_grid.iter().any(|s| !(*s > 0.0 && *s <= 1.0)) {
            return bad("s_grid values must lie in (0, 1]".into());
        }
        if self.t_depths.contains(&0) {
            return bad("t_depths must be positive".into());
        }
        let q = &self.iqae;
        if !(q.confidence > 0.0 && q.confidence < 1.0) {
            return bad(format!("iqae.confidence = {} must lie in (0, 1)", q.confidence));
        }
        if !(q.target_eps > 0.0) {
            return bad(format!("iqae.target_eps = {} must be positive", q.target_eps));
        }
        if !(1..=127).contains(&q.max_rounds) {
            return bad(format!("iqae.max_rounds = {} must lie in 1..=127", q.max_rounds));
        }
        self.resolved_noise().validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.problem.build()?;
        Ok(())
    }

    /// Noise model with a missing statistical seed taken from `seed`.
    pub fn resolved_noise(&self) -> NoiseSpec {
        match &self.noise {
            NoiseSpec::Statistical {
                fidelity,
                spread,
                seed: None,
            } => NoiseSpec::Statistical {
                fidelity: *fidelity,
                spread: *spread,
                seed: Some(self.seed),
            },
            other => other.clone(),
        }
    }

    /// Sampling mode for the estimator.
    pub fn sampling(&self) -> Sampling {
        match (self.perturbation, self.shots) {
            (Some(p), _) => Sampling::Perturbed(p),
            (None, Some(s)) => Sampling::Shots(s),
            (None, None) => Sampling::Exact,
        }
    }
}
