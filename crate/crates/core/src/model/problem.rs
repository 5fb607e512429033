use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{inner, kron, mat_mul, norm, ComplexMatrix, C64, I, ONE, ZERO};

/// Tolerance on state normalization.
pub const NORM_TOL: f64 = 1e-12;
/// Tolerance on `O² = I` and `O = O†`.
pub const OBS_TOL: f64 = 1e-10;

/// What the estimator is asked to recover.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// `|⟨φ|ψ⟩|²`
    Amplitude,
    /// `⟨ψ|O|ψ⟩`
    Observable,
}

/// Target states (and observable) of one estimation task on 1–3 qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationProblem {
    mode: Mode,
    qubits: usize,
    psi: Vec<C64>,
    phi: Option<Vec<C64>>,
    obs: Option<ComplexMatrix>,
}

fn qubits_for_dim(dim: usize) -> Result<usize> {
    match dim {
        2 => Ok(1),
        4 => Ok(2),
        8 => Ok(3),
        _ => Err(Error::InvalidProblem(format!(
            "state dimension {dim} does not describe 1-3 qubits"
        ))),
    }
}

fn check_unit(v: &[C64]) -> Result<()> {
    let n = norm(v);
    if (n - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized { norm: n });
    }
    Ok(())
}

impl EstimationProblem {
    /// Estimate `|⟨φ|ψ⟩|²`.
    pub fn amplitude(psi: Vec<C64>, phi: Vec<C64>) -> Result<Self> {
        let qubits = qubits_for_dim(psi.len())?;
        if phi.len() != psi.len() {
            return Err(Error::InvalidProblem(format!(
                "psi has dimension {} but phi has {}",
                psi.len(),
                phi.len()
            )));
        }
        check_unit(&psi)?;
        check_unit(&phi)?;
        Ok(Self {
            mode: Mode::Amplitude,
            qubits,
            psi,
            phi: Some(phi),
            obs: None,
        })
    }

    /// Estimate `⟨ψ|O|ψ⟩` for a Hermitian involution `O`.
    pub fn observable(psi: Vec<C64>, obs: ComplexMatrix) -> Result<Self> {
        let qubits = qubits_for_dim(psi.len())?;
        check_unit(&psi)?;
        if obs.rows() != psi.len() || obs.cols() != psi.len() {
            return Err(Error::InvalidProblem(format!(
                "observable is {}x{} but the state has dimension {}",
                obs.rows(),
                obs.cols(),
                psi.len()
            )));
        }
        if !obs.is_hermitian(OBS_TOL) {
            return Err(Error::InvalidProblem("observable is not Hermitian".into()));
        }
        let sq = mat_mul(&obs, &obs)?;
        if sq.distance(&ComplexMatrix::identity(psi.len())) > OBS_TOL {
            return Err(Error::InvalidProblem("observable does not square to I".into()));
        }
        Ok(Self {
            mode: Mode::Observable,
            qubits,
            psi,
            phi: None,
            obs: Some(obs),
        })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    /// Hilbert-space dimension `2^qubits`.
    pub fn dim(&self) -> usize {
        self.psi.len()
    }

    pub fn psi(&self) -> &[C64] {
        &self.psi
    }

    pub fn phi(&self) -> Option<&[C64]> {
        self.phi.as_deref()
    }

    pub fn observable_matrix(&self) -> Option<&ComplexMatrix> {
        self.obs.as_ref()
    }

    /// The second circuit state: `φ` in amplitude mode, `O|ψ⟩` in observable mode.
    pub fn partner(&self) -> Vec<C64> {
        match self.mode {
            Mode::Amplitude => self.phi.clone().expect("amplitude problem carries phi"),
            Mode::Observable => self
                .obs
                .as_ref()
                .expect("observable problem carries O")
                .apply(&self.psi),
        }
    }

    /// The Grover-type unitary for this mode.
    pub fn grover(&self) -> ComplexMatrix {
        match self.mode {
            Mode::Amplitude => grover_amplitude(self).expect("mode checked"),
            Mode::Observable => grover_observable(self).expect("mode checked"),
        }
    }

    /// The quantity being estimated, computed directly from the states.
    pub fn exact_value(&self) -> f64 {
        match self.mode {
            Mode::Amplitude => inner(self.phi.as_ref().unwrap(), &self.psi).norm_sqr(),
            Mode::Observable => inner(&self.psi, &self.partner()).re,
        }
    }

    /// Channel phase `θ_ch ∈ [0, π]` of the noiseless problem, from the exact value.
    pub fn ideal_theta_ch(&self) -> f64 {
        let cos_g = match self.mode {
            Mode::Amplitude => 2.0 * self.exact_value() - 1.0,
            Mode::Observable => self.exact_value(),
        };
        let theta_g = cos_g.clamp(-1.0, 1.0).acos();
        let theta_ch = 2.0 * theta_g;
        if theta_ch > PI {
            2.0 * PI - theta_ch
        } else {
            theta_ch
        }
    }

    pub fn geometry(&self) -> TwoStateGeometry {
        TwoStateGeometry::new(&self.psi, &self.partner())
    }
}

/// Two-state parametrization with `α = φ`, `β = φ⊥` and `|ψ⟩ = a|φ⟩ + b|φ⊥⟩`.
///
/// With that basis `μ = 0`, `ν = arccos|a|` and `λ = −arg a` is the relative
/// phase that the real-rotation picture ignores. It is reported only as a
/// diagnostic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoStateGeometry {
    pub mu: f64,
    pub nu: f64,
    pub lam: f64,
    pub a: C64,
    pub b: C64,
}

impl TwoStateGeometry {
    pub fn new(psi: &[C64], phi: &[C64]) -> Self {
        let a = inner(phi, psi);
        let rest: Vec<C64> = psi.iter().zip(phi).map(|(p, f)| p - a * f).collect();
        let b = C64::new(norm(&rest), 0.0);
        Self {
            mu: 0.0,
            nu: a.norm().clamp(0.0, 1.0).acos(),
            lam: if a.norm() > 0.0 { -a.arg() } else { 0.0 },
            a,
            b,
        }
    }
}

/// `2|x⟩⟨x| − I`.
pub fn reflection_about(state: &[C64]) -> Result<ComplexMatrix> {
    check_unit(state)?;
    let mut r = ComplexMatrix::outer(state, state).scale(C64::new(2.0, 0.0));
    for i in 0..state.len() {
        r[(i, i)] -= ONE;
    }
    Ok(r)
}

/// `G = (2|ψ⟩⟨ψ| − I)(2|φ⟩⟨φ| − I)`.
pub fn grover_amplitude(problem: &EstimationProblem) -> Result<ComplexMatrix> {
    if problem.mode != Mode::Amplitude {
        return Err(Error::WrongMode {
            expected: "amplitude",
        });
    }
    let g0 = reflection_about(&problem.psi)?;
    let g1 = reflection_about(problem.phi.as_ref().unwrap())?;
    mat_mul(&g0, &g1)
}

/// `G_O = (2|ψ⟩⟨ψ| − I) O`.
pub fn grover_observable(problem: &EstimationProblem) -> Result<ComplexMatrix> {
    if problem.mode != Mode::Observable {
        return Err(Error::WrongMode {
            expected: "observable",
        });
    }
    let g0 = reflection_about(&problem.psi)?;
    mat_mul(&g0, problem.obs.as_ref().unwrap())
}

/// Estimated value and its mirror-branch partner for a channel phase `θ_ch ∈ [0, π]`.
///
/// The channel phase is twice the state-space eigenphase, so the amplitude is
/// `(1 + cos(θ_ch/2))/2` and the expectation `cos(θ_ch/2)`. The mirror is the
/// value for `2π − θ_ch`, which cosine data cannot tell apart.
pub fn theta_to_value(theta_ch: f64, mode: Mode) -> Result<(f64, f64)> {
    const SLACK: f64 = 1e-12;
    if !(-SLACK..=PI + SLACK).contains(&theta_ch) || theta_ch.is_nan() {
        return Err(Error::OutOfRange {
            what: "theta_ch",
            value: theta_ch,
        });
    }
    let half = (theta_ch.clamp(0.0, PI) / 2.0).cos();
    Ok(match mode {
        Mode::Amplitude => {
            let v = (1.0 + half) / 2.0;
            (v, 1.0 - v)
        }
        Mode::Observable => (half, -half),
    })
}

/// `|φ⟩⟨φ| − |ψ⟩⟨ψ|`, with `O|ψ⟩` standing in for `φ` in observable mode.
pub fn rho_tilde(problem: &EstimationProblem) -> ComplexMatrix {
    let partner = problem.partner();
    &ComplexMatrix::outer(&partner, &partner) - &ComplexMatrix::outer(&problem.psi, &problem.psi)
}

/// Unitary whose first column is `state`, built as a phased Householder reflection.
pub fn prep_unitary(state: &[C64]) -> Result<ComplexMatrix> {
    check_unit(state)?;
    let d = state.len();
    let omega = if state[0].norm() > 0.0 {
        state[0] / state[0].norm()
    } else {
        ONE
    };
    // w = x − ω e0; H = I − 2ww†/(w†w) satisfies H x = ω e0, hence (ωH) e0 = x.
    let mut w = state.to_vec();
    w[0] -= omega;
    let ww: f64 = w.iter().map(|z| z.norm_sqr()).sum();
    let mut h = ComplexMatrix::identity(d);
    if ww > 1e-30 {
        let outer = ComplexMatrix::outer(&w, &w).scale(C64::new(2.0 / ww, 0.0));
        h = &h - &outer;
    }
    Ok(h.scale(omega))
}

/// Single-qubit Pauli matrix by letter.
pub fn pauli(letter: char) -> Option<ComplexMatrix> {
    Some(match letter.to_ascii_uppercase() {
        'I' => ComplexMatrix::identity(2),
        'X' => ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]),
        'Y' => ComplexMatrix::from_vec(2, 2, vec![ZERO, -I, I, ZERO]).unwrap(),
        'Z' => ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]]),
        _ => return None,
    })
}

/// Pauli string such as `"XZ"`; the leftmost letter acts on the most significant qubit.
pub fn pauli_string(label: &str) -> Result<ComplexMatrix> {
    if label.is_empty() || label.len() > 3 {
        return Err(Error::InvalidProblem(format!(
            "Pauli string {label:?} must have 1-3 letters"
        )));
    }
    label.chars().try_fold(ComplexMatrix::identity(1), |acc, ch| {
        pauli(ch)
            .map(|p| kron(&acc, &p))
            .ok_or_else(|| Error::InvalidProblem(format!("unknown Pauli letter {ch:?}")))
    })
}

/// `cos(angle)|0…0⟩ + sin(angle)|0…01⟩` on `qubits` qubits.
pub fn angle_state(qubits: usize, angle: f64) -> Vec<C64> {
    let mut v = vec![ZERO; 1 << qubits];
    v[0] = C64::new(angle.cos(), 0.0);
    v[1] = C64::new(angle.sin(), 0.0);
    v
}

/// Unitarily invariant random state on `qubits` qubits, reproducible per seed.
pub fn random_state(qubits: usize, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v: Vec<C64> = (0..1usize << qubits)
        .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let n = norm(&v);
    v.into_iter().map(|z| z / n).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::basis_vector;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_6};

    fn plus() -> Vec<C64> {
        vec![C64::new(FRAC_1_SQRT_2, 0.0); 2]
    }

    fn pi6_problem() -> EstimationProblem {
        EstimationProblem::amplitude(basis_vector(2, 0), angle_state(1, FRAC_PI_6)).unwrap()
    }

    #[test]
    fn reflection_examples() {
        let r0 = reflection_about(&basis_vector(2, 0)).unwrap();
        assert_eq!(r0, pauli('Z').unwrap());
        let rp = reflection_about(&plus()).unwrap();
        assert!(rp.distance(&pauli('X').unwrap()) < 1e-15);
        let s = angle_state(1, 0.4);
        let perp = angle_state(1, 0.4 + PI / 2.0);
        let r = reflection_about(&s).unwrap();
        assert!(crate::linalg::vec_distance(&r.apply(&s), &s) < 1e-15);
        let minus_perp: Vec<C64> = perp.iter().map(|z| -z).collect();
        assert!(crate::linalg::vec_distance(&r.apply(&perp), &minus_perp) < 1e-15);
    }

    #[test]
    fn reflection_rejects_unnormalized() {
        let v = vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)];
        assert!(matches!(reflection_about(&v), Err(Error::NotNormalized { .. })));
    }

    #[test]
    fn grover_pi6_is_rotation_by_minus_pi_over_3() {
        // R_ψ R_φ = Ref(0)·Ref(π/6) = Rot(−π/3).
        let g = grover_amplitude(&pi6_problem()).unwrap();
        let expected = ComplexMatrix::from_real_rows(&[&[0.5, 0.866], &[-0.866, 0.5]]);
        for (a, b) in g.as_slice().iter().zip(expected.as_slice()) {
            assert!((a - b).norm() < 1e-3);
        }
        assert_abs_diff_eq!(g.trace().re, 1.0, epsilon = 1e-12);
        // Tr G = 4a − 4 + 2 ⇒ a = 0.75
        assert_abs_diff_eq!((g.trace().re + 2.0) / 4.0, 0.75, epsilon = 1e-12);
    }

    #[test]
    fn grover_coincident_and_orthogonal() {
        let s = angle_state(1, 0.3);
        let same = EstimationProblem::amplitude(s.clone(), s.clone()).unwrap();
        let g = grover_amplitude(&same).unwrap();
        let gs = g.apply(&s);
        assert!(crate::linalg::vec_distance(&gs, &s) < 1e-14);

        let perp = angle_state(1, 0.3 + PI / 2.0);
        let orth = EstimationProblem::amplitude(s.clone(), perp).unwrap();
        let g = grover_amplitude(&orth).unwrap();
        assert!(g.distance(&ComplexMatrix::identity(2).scale(-ONE)) < 1e-14);
    }

    #[test]
    fn grover_mode_errors() {
        let obs = EstimationProblem::observable(plus(), pauli('Z').unwrap()).unwrap();
        assert!(matches!(grover_amplitude(&obs), Err(Error::WrongMode { .. })));
        assert!(matches!(
            grover_observable(&pi6_problem()),
            Err(Error::WrongMode { .. })
        ));
    }

    #[test]
    fn grover_observable_examples() {
        let p = EstimationProblem::observable(basis_vector(2, 0), pauli('Z').unwrap()).unwrap();
        assert_eq!(grover_observable(&p).unwrap(), ComplexMatrix::identity(2));
        let p = EstimationProblem::observable(plus(), pauli('Z').unwrap()).unwrap();
        let g = grover_observable(&p).unwrap();
        let expected = ComplexMatrix::from_real_rows(&[&[0.0, -1.0], &[1.0, 0.0]]);
        assert!(g.distance(&expected) < 1e-15);
    }

    #[test]
    fn theta_to_value_examples() {
        assert_eq!(theta_to_value(0.0, Mode::Amplitude).unwrap(), (1.0, 0.0));
        let (v, m) = theta_to_value(2.0 * PI / 3.0, Mode::Amplitude).unwrap();
        assert_abs_diff_eq!(v, 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(m, 0.25, epsilon = 1e-12);
        let (v, _) = theta_to_value(PI, Mode::Observable).unwrap();
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-12);
        assert!(matches!(
            theta_to_value(3.5, Mode::Amplitude),
            Err(Error::OutOfRange { .. })
        ));
        assert!(theta_to_value(-0.1, Mode::Observable).is_err());
    }

    #[test]
    fn rho_tilde_examples() {
        let s = angle_state(1, 0.7);
        let same = EstimationProblem::amplitude(s.clone(), s).unwrap();
        assert!(rho_tilde(&same).frob_norm() < 1e-15);
        let rt = rho_tilde(&pi6_problem());
        let expected = ComplexMatrix::from_real_rows(&[&[-0.25, 0.433], &[0.433, 0.25]]);
        assert!(rt.distance(&expected) < 1e-3);
    }

    #[test]
    fn geometry_matches_overlap() {
        let g = pi6_problem().geometry();
        assert_abs_diff_eq!(g.a.norm_sqr() + g.b.norm_sqr(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!((g.mu - g.nu).cos().powi(2), 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(g.lam, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn prep_unitary_maps_ground_state() {
        let target = vec![
            C64::new(0.1, 0.2),
            C64::new(-0.3, 0.4),
            C64::new(0.5, -0.1),
            C64::new(0.2, 0.3),
        ];
        let n = norm(&target);
        let target: Vec<C64> = target.into_iter().map(|z| z / n).collect();
        let u = prep_unitary(&target).unwrap();
        assert!(u.is_unitary(1e-12));
        assert!(crate::linalg::vec_distance(&u.col(0), &target) < 1e-14);
        // Already a basis state: still unitary with the right first column.
        let e0 = basis_vector(4, 0);
        assert!(crate::linalg::vec_distance(&prep_unitary(&e0).unwrap().col(0), &e0) < 1e-15);
    }

    #[test]
    fn observable_validation() {
        let not_inv = ComplexMatrix::from_real_rows(&[&[2.0, 0.0], &[0.0, 0.5]]);
        assert!(EstimationProblem::observable(plus(), not_inv).is_err());
        let not_herm = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]);
        assert!(EstimationProblem::observable(plus(), not_herm).is_err());
        assert!(EstimationProblem::amplitude([ONE; 3].iter().map(|z| z / 3f64.sqrt()).collect(), basis_vector(3, 0)).is_err());
    }

    #[test]
    fn random_states_are_unit_and_seeded() {
        let a = random_state(3, 5);
        assert_eq!(a.len(), 8);
        assert_abs_diff_eq!(norm(&a), 1.0, epsilon = 1e-14);
        assert_eq!(a, random_state(3, 5));
        assert_ne!(a, random_state(3, 6));
    }

    #[test]
    fn pauli_strings() {
        let zz = pauli_string("ZZ").unwrap();
        assert_eq!(zz.rows(), 4);
        assert!(zz.is_hermitian(1e-15) && zz.is_unitary(1e-15));
        assert!(pauli_string("Q").is_err());
        assert!(pauli_string("XXXX").is_err());
    }
}
