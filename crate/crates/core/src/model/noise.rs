use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64, I};

use super::problem::pauli;
use super::superop::{
    choi_min_eigenvalue, conjugation_superop, kraus_superop, ptm_to_superop, tensor_superops,
};

/// Redraws allowed before a statistical channel is declared unreachable.
const MAX_DRAWS: usize = 64;
const CP_TOL: f64 = 1e-12;
const WEIGHT_TOL: f64 = 1e-10;

fn default_fidelity() -> f64 {
    0.89
}
fn default_spread() -> f64 {
    0.02
}
fn default_gamma() -> f64 {
    0.1
}
fn default_pauli_i() -> f64 {
    0.6
}
fn default_pauli_x() -> f64 {
    0.1
}
fn default_pauli_y() -> f64 {
    0.0
}
fn default_pauli_z() -> f64 {
    0.3
}
fn default_delta_t() -> f64 {
    0.1228
}
fn default_depolarizing() -> f64 {
    0.3
}

/// Per-qubit noise model attached to every Grover layer.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NoiseSpec {
    #[default]
    None,
    /// Random Pauli transfer matrix `diag(1, κ, κ, κ) + spread·G`, frozen per seed.
    ///
    /// `κ` is solved so each qubit's average gate fidelity equals `fidelity`.
    Statistical {
        #[serde(default = "default_fidelity")]
        fidelity: f64,
        #[serde(default = "default_spread")]
        spread: f64,
        #[serde(default)]
        seed: Option<u64>,
    },
    /// `(1 − γ)ρ + γ·|0⟩⟨0|Tr ρ`.
    AmplitudeDamping {
        #[serde(default = "default_gamma")]
        gamma: f64,
    },
    /// `Σ w_P PρP` with weights for I, X, Y, Z.
    Pauli {
        #[serde(default = "default_pauli_i")]
        i: f64,
        #[serde(default = "default_pauli_x")]
        x: f64,
        #[serde(default = "default_pauli_y")]
        y: f64,
        #[serde(default = "default_pauli_z")]
        z: f64,
    },
    /// `U = exp(i·σx·δt)`.
    Coherent {
        #[serde(default = "default_delta_t")]
        delta_t: f64,
    },
    /// `(1 − p)ρ + (p/3)(XρX + YρY + ZρZ)`.
    Depolarizing {
        #[serde(default = "default_depolarizing")]
        p: f64,
    },
}

impl NoiseSpec {
    pub fn statistical(seed: u64) -> Self {
        NoiseSpec::Statistical {
            fidelity: default_fidelity(),
            spread: default_spread(),
            seed: Some(seed),
        }
    }

    pub fn amplitude_damping() -> Self {
        NoiseSpec::AmplitudeDamping {
            gamma: default_gamma(),
        }
    }

    pub fn pauli() -> Self {
        NoiseSpec::Pauli {
            i: default_pauli_i(),
            x: default_pauli_x(),
            y: default_pauli_y(),
            z: default_pauli_z(),
        }
    }

    pub fn coherent() -> Self {
        NoiseSpec::Coherent {
            delta_t: default_delta_t(),
        }
    }

    pub fn depolarizing() -> Self {
        NoiseSpec::Depolarizing {
            p: default_depolarizing(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            NoiseSpec::None => "none",
            NoiseSpec::Statistical { .. } => "statistical",
            NoiseSpec::AmplitudeDamping { .. } => "amplitude-damping",
            NoiseSpec::Pauli { .. } => "pauli",
            NoiseSpec::Coherent { .. } => "coherent",
            NoiseSpec::Depolarizing { .. } => "depolarizing",
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, NoiseSpec::None)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidNoise(msg));
        match *self {
            NoiseSpec::None => Ok(()),
            NoiseSpec::Statistical {
                fidelity,
                spread,
                seed,
            } => {
                if seed.is_none() {
                    return bad("statistical noise requires a seed".into());
                }
                if !(0.5..=1.0).contains(&fidelity) {
                    return bad(format!("statistical fidelity {fidelity} outside [0.5, 1]"));
                }
                if !(0.0..=0.5).contains(&spread) {
                    return bad(format!("statistical spread {spread} outside [0, 0.5]"));
                }
                Ok(())
            }
            NoiseSpec::AmplitudeDamping { gamma } => {
                if !(0.0..=1.0).contains(&gamma) {
                    return bad(format!("amplitude damping gamma {gamma} outside [0, 1]"));
                }
                Ok(())
            }
            NoiseSpec::Pauli { i, x, y, z } => {
                let sum = i + x + y + z;
                if (sum - 1.0).abs() > WEIGHT_TOL {
                    return bad(format!("Pauli weights sum to {sum}, not 1"));
                }
                Ok(())
            }
            NoiseSpec::Coherent { delta_t } => {
                if !delta_t.is_finite() {
                    return bad("coherent delta_t must be finite".into());
                }
                Ok(())
            }
            NoiseSpec::Depolarizing { p } => {
                if !(0.0..=1.0).contains(&p) {
                    return bad(format!("depolarizing p {p} outside [0, 1]"));
                }
                Ok(())
            }
        }
    }

    /// Single-qubit superoperator for the deterministic kinds.
    fn fixed_single_qubit(&self) -> Result<ComplexMatrix> {
        let w = |v: f64| C64::new(v, 0.0);
        let ptm_diag = |d: [f64; 4]| {
            ptm_to_superop(&ComplexMatrix::from_diag(&d.map(w)))
        };
        match *self {
            NoiseSpec::None => Ok(ComplexMatrix::identity(4)),
            NoiseSpec::AmplitudeDamping { gamma } => {
                let k0 = ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]]);
                let k1 = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
                let reset = kraus_superop(&[k0, k1])?;
                Ok(&ComplexMatrix::identity(4).scale(w(1.0 - gamma)) + &reset.scale(w(gamma)))
            }
            NoiseSpec::Pauli { i, x, y, z } => {
                ptm_diag([i + x + y + z, i + x - y - z, i - x + y - z, i - x - y + z])
            }
            NoiseSpec::Depolarizing { p } => {
                let f = 1.0 - 4.0 * p / 3.0;
                ptm_diag([1.0, f, f, f])
            }
            NoiseSpec::Coherent { delta_t } => {
                let u = &ComplexMatrix::identity(2).scale(w(delta_t.cos()))
                    + &pauli('X').unwrap().scale(I * delta_t.sin());
                Ok(conjugation_superop(&u))
            }
            NoiseSpec::Statistical { .. } => unreachable!("statistical noise is drawn per qubit"),
        }
    }
}

/// One completely positive, trace-preserving statistical draw.
fn draw_statistical(rng: &mut ChaCha8Rng, fidelity: f64, spread: f64) -> Result<ComplexMatrix> {
    // F_avg = (2·F_pro + 1)/3 on one qubit, and F_pro = Tr(R)/4.
    let target_trace = 4.0 * (3.0 * fidelity - 1.0) / 2.0;
    for _ in 0..MAX_DRAWS {
        let mut r = ComplexMatrix::zeros(4, 4);
        r[(0, 0)] = C64::new(1.0, 0.0);
        let mut diag_noise = 0.0;
        for row in 1..4 {
            for col in 0..4 {
                let g: f64 = rng.sample(StandardNormal);
                r[(row, col)] = C64::new(spread * g, 0.0);
                if row == col {
                    diag_noise += spread * g;
                }
            }
        }
        let kappa = (target_trace - 1.0 - diag_noise) / 3.0;
        for k in 1..4 {
            r[(k, k)] += kappa;
        }
        let s = ptm_to_superop(&r)?;
        if choi_min_eigenvalue(&s)? >= -CP_TOL {
            return Ok(s);
        }
    }
    Err(Error::InvalidNoise(format!(
        "no completely positive draw at fidelity {fidelity} with spread {spread} after {MAX_DRAWS} attempts"
    )))
}

/// Superoperator of the noise layer on a `dim`-dimensional register.
///
/// Each qubit receives the single-qubit model; statistical draws are independent per qubit.
pub fn noise_superop(spec: &NoiseSpec, dim: usize) -> Result<ComplexMatrix> {
    spec.validate()?;
    let qubits = match dim {
        2 => 1,
        4 => 2,
        8 => 3,
        _ => {
            return Err(Error::InvalidNoise(format!(
                "dimension {dim} does not describe 1-3 qubits"
            )))
        }
    };
    if spec.is_none() {
        return Ok(ComplexMatrix::identity(dim * dim));
    }
    let factors: Vec<ComplexMatrix> = match *spec {
        NoiseSpec::Statistical {
            fidelity,
            spread,
            seed,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.expect("validated"));
            (0..qubits)
                .map(|_| draw_statistical(&mut rng, fidelity, spread))
                .collect::<Result<_>>()?
        }
        _ => {
            let one = spec.fixed_single_qubit()?;
            vec![one; qubits]
        }
    };
    Ok(if qubits == 1 {
        factors.into_iter().next().unwrap()
    } else {
        tensor_superops(&factors)
    })
}

/// `F_pro = Re Tr(ideal†·noisy)/d²`.
pub fn process_fidelity(noisy: &ComplexMatrix, ideal: &ComplexMatrix, d: usize) -> Result<f64> {
    let dd = d * d;
    for m in [noisy, ideal] {
        if m.rows() != dd || m.cols() != dd {
            return Err(Error::DimensionMismatch {
                op: "process_fidelity",
                left: (dd, dd),
                right: (m.rows(), m.cols()),
            });
        }
    }
    let tr: C64 = (0..dd)
        .flat_map(|r| (0..dd).map(move |c| (r, c)))
        .map(|(r, c)| ideal[(r, c)].conj() * noisy[(r, c)])
        .sum();
    Ok(tr.re / dd as f64)
}

/// `F_avg = (d·F_pro + 1)/(d + 1)`.
pub fn avg_gate_fidelity(noisy: &ComplexMatrix, ideal: &ComplexMatrix, d: usize) -> Result<f64> {
    let fpro = process_fidelity(noisy, ideal, d)?;
    Ok((d as f64 * fpro + 1.0) / (d as f64 + 1.0))
}

/// `(1 − s)·I + s·N`.
pub fn interpolate(noise: &ComplexMatrix, s: f64) -> ComplexMatrix {
    let id = ComplexMatrix::identity(noise.rows());
    &id.scale(C64::new(1.0 - s, 0.0)) + &noise.scale(C64::new(s, 0.0))
}
