//! Brute-force checks of first-order eigen-perturbation claims for `N(s)·M_G`.
//!
//! `N(s) = (1 − s)·I + s·N` and `δM_G(s) = (N(s) − I)·M_G`, so `‖δM_G‖ ∝ s`.

use crate::circuit::Simulator;
use crate::error::{Error, Result};
use crate::linalg::{eig_dense, inner, mat_mul, norm, normalized, ComplexMatrix, C64, ZERO};
use crate::model::{interpolate, rho_tilde, vec_inner, vectorize, EstimationProblem};

/// Eigenvector overlaps below this flag a row.
pub const MATCH_THRESHOLD: f64 = 0.5;

/// Eigenbasis of `G` on `span(ψ, φ)` and the induced channel basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBasis {
    /// Eigenvector of `G` with eigenphase `θ_G ∈ [0, π]`.
    pub v_plus: Vec<C64>,
    /// Eigenvector with eigenphase `−θ_G`.
    pub v_minus: Vec<C64>,
    pub theta_g: f64,
    /// `vec(v₊v₊†), vec(v₊v₋†), vec(v₋v₊†), vec(v₋v₋†)`.
    pub vectors: [Vec<C64>; 4],
}

impl SubspaceBasis {
    /// Ideal channel eigenvector with eigenvalue `e^{iθ_ch}`.
    pub fn rho_plus(&self) -> &[C64] {
        &self.vectors[1]
    }

    /// Ideal channel eigenvector with eigenvalue `e^{−iθ_ch}`.
    pub fn rho_minus(&self) -> &[C64] {
        &self.vectors[2]
    }

    /// `c = ⟨⟨v₊v₋|ρ̃⟩⟩`.
    pub fn c(&self, problem: &EstimationProblem) -> C64 {
        vec_inner(self.rho_plus(), &vectorize(&rho_tilde(problem)))
    }
}

pub fn subspace_basis(problem: &EstimationProblem) -> Result<SubspaceBasis> {
    let psi = problem.psi().to_vec();
    let partner = problem.partner();
    let ov = inner(&psi, &partner);
    let rest: Vec<C64> = partner.iter().zip(&psi).map(|(f, p)| f - ov * p).collect();
    let e1 = normalized(&rest)
        .filter(|_| norm(&rest) > 1e-9)
        .ok_or_else(|| Error::Degenerate("the two circuit states are parallel".into()))?;
    let d = psi.len();
    let mut b = ComplexMatrix::zeros(d, 2);
    b.set_col(0, &psi);
    b.set_col(1, &e1);
    let g2 = problem.grover().restrict(&b)?;
    let spec = eig_dense(&g2)?;
    let lift = |w: &[C64]| b.apply(w);
    let (l0, l1) = (spec.values[0], spec.values[1]);
    let (plus, minus) = if l0.arg() >= l1.arg() { (0, 1) } else { (1, 0) };
    let v_plus = lift(&spec.vectors[plus]);
    let v_minus = lift(&spec.vectors[minus]);
    let theta_g = spec.values[plus].arg().abs();
    let ket = |a: &[C64], c: &[C64]| vectorize(&ComplexMatrix::outer(a, c));
    let vectors = [
        ket(&v_plus, &v_plus),
        ket(&v_plus, &v_minus),
        ket(&v_minus, &v_plus),
        ket(&v_minus, &v_minus),
    ];
    Ok(SubspaceBasis {
        v_plus,
        v_minus,
        theta_g,
        vectors,
    })
}

/// Full analysis of one interpolation strength.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationReport {
    pub s: f64,
    /// `‖δM_G‖_F`.
    pub eps: f64,
    pub ideal: [C64; 2],
    pub perturbed: [C64; 2],
    /// `λᵢ + ⟨⟨ρᵢ|δM_G|ρᵢ⟩⟩`.
    pub first_order: [C64; 2],
    /// `|⟨⟨ρᵢ|δM_G|ρᵢ⟩⟩|`.
    pub first_order_shift: [f64; 2],
    pub lemma1_residual: [f64; 2],
    pub overlaps: [f64; 2],
    pub flagged: bool,
    pub c: C64,
    pub c1: C64,
    pub c2: C64,
    /// `‖c·ρᵢ₁ + c*·ρᵢ₂ − c₁ρ₁ − c₂ρ₂‖`.
    pub lemma2_residual: f64,
    pub c1_error: f64,
    pub c2_error: f64,
    /// `‖Δ₁‖, ‖Δ₂‖, ‖Δρ‖`.
    pub delta_norms: [f64; 3],
    pub theta_ideal: f64,
    pub theta_pert: f64,
    /// `(n, |t_n − (|c₁|²λ₁ⁿ + |c₂|²λ₂ⁿ)|)`.
    pub tn_errors: Vec<(usize, f64)>,
}

struct Matched {
    value: C64,
    vector: Vec<C64>,
    overlap: f64,
}

fn match_eigenpair(spectrum: &crate::linalg::Spectrum, ideal: &[C64]) -> Matched {
    let mut best = (0usize, -1.0f64);
    for (k, v) in spectrum.vectors.iter().enumerate() {
        let o = inner(ideal, v).norm() / norm(v);
        if o > best.1 {
            best = (k, o);
        }
    }
    let v = &spectrum.vectors[best.0];
    let ov = inner(ideal, v);
    let phase = if ov.norm() > 0.0 { ov.conj() / ov.norm() } else { C64::new(1.0, 0.0) };
    let scale = phase / norm(v);
    Matched {
        value: spectrum.values[best.0],
        vector: v.iter().map(|z| z * scale).collect(),
        overlap: best.1,
    }
}

fn sub(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Least-squares `(c₁, c₂)` with `target ≈ c₁r₁ + c₂r₂`.
fn fit_pair(r1: &[C64], r2: &[C64], target: &[C64]) -> (C64, C64) {
    let (g11, g12, g22) = (inner(r1, r1), inner(r1, r2), inner(r2, r2));
    let (b1, b2) = (inner(r1, target), inner(r2, target));
    let det = g11 * g22 - g12 * g12.conj();
    if det.norm() < 1e-300 {
        return (ZERO, ZERO);
    }
    ((b1 * g22 - g12 * b2) / det, (g11 * b2 - g12.conj() * b1) / det)
}

/// Analyzes `N(s)·M_G` against `M_G` for the noise superoperator `noise`.
pub fn analyze(
    problem: &EstimationProblem,
    noise: &ComplexMatrix,
    s: f64,
    depths: &[usize],
) -> Result<PerturbationReport> {
    let basis = subspace_basis(problem)?;
    let sim = Simulator::with_noise_superop(problem.clone(), interpolate(noise, s))?;
    let m_g = sim.ideal_layer();
    let layer = sim.layer();
    let delta = layer - m_g;
    let eps = delta.frob_norm();
    let theta_ideal = (2.0 * basis.theta_g).min(2.0 * std::f64::consts::PI - 2.0 * basis.theta_g);

    let ideal_vecs = [basis.rho_plus().to_vec(), basis.rho_minus().to_vec()];
    let ideal_vals = [
        C64::from_polar(1.0, 2.0 * basis.theta_g),
        C64::from_polar(1.0, -2.0 * basis.theta_g),
    ];
    let spectrum = eig_dense(layer)?;
    let mut perturbed = [ZERO; 2];
    let mut first_order = [ZERO; 2];
    let mut first_order_shift = [0.0; 2];
    let mut lemma1_residual = [0.0; 2];
    let mut overlaps = [0.0; 2];
    let mut vectors: Vec<Vec<C64>> = Vec::with_capacity(2);
    for k in 0..2 {
        let m = match_eigenpair(&spectrum, &ideal_vecs[k]);
        let shift = inner(&ideal_vecs[k], &delta.apply(&ideal_vecs[k]))
            / inner(&ideal_vecs[k], &ideal_vecs[k]);
        perturbed[k] = m.value;
        first_order[k] = ideal_vals[k] + shift;
        first_order_shift[k] = shift.norm();
        lemma1_residual[k] = (m.value - first_order[k]).norm();
        overlaps[k] = m.overlap;
        vectors.push(m.vector);
    }
    let flagged = overlaps.iter().any(|o| *o < MATCH_THRESHOLD);

    let rt = vectorize(&rho_tilde(problem));
    let c = vec_inner(&ideal_vecs[0], &rt);
    let (c1, c2) = fit_pair(&vectors[0], &vectors[1], &rt);
    let ideal_part: Vec<C64> = ideal_vecs[0]
        .iter()
        .zip(&ideal_vecs[1])
        .map(|(a, b)| c * a + c.conj() * b)
        .collect();
    let fitted: Vec<C64> = vectors[0]
        .iter()
        .zip(&vectors[1])
        .map(|(a, b)| c1 * a + c2 * b)
        .collect();
    let lemma2_residual = norm(&sub(&ideal_part, &fitted));
    let delta_norms = [
        norm(&sub(&vectors[0], &ideal_vecs[0])),
        norm(&sub(&vectors[1], &ideal_vecs[1])),
        norm(&sub(&rt, &fitted)),
    ];

    let mut tn_errors = Vec::with_capacity(depths.len());
    for &n in depths {
        let model = c1.norm_sqr() * perturbed[0].powu(n as u32)
            + c2.norm_sqr() * perturbed[1].powu(n as u32);
        tn_errors.push((n, (C64::new(sim.exact_t(n)?, 0.0) - model).norm()));
    }

    Ok(PerturbationReport {
        s,
        eps,
        ideal: ideal_vals,
        perturbed,
        first_order,
        first_order_shift,
        lemma1_residual,
        overlaps,
        flagged,
        c,
        c1,
        c2,
        lemma2_residual,
        c1_error: (c1 - c).norm(),
        c2_error: (c2 - c.conj()).norm(),
        delta_norms,
        theta_ideal,
        theta_pert: perturbed[0].arg().abs(),
        tn_errors,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lemma1Row {
    pub s: f64,
    pub eps: f64,
    pub residual: f64,
    pub first_order_shift: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lemma2Row {
    pub s: f64,
    pub eps: f64,
    pub residual: f64,
    pub c1_error: f64,
    pub c2_error: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Theorem1Row {
    pub s: f64,
    pub eps: f64,
    pub errors: Vec<(usize, f64)>,
    pub theta_ideal: f64,
    pub theta_pert: f64,
    pub flagged: bool,
}

impl Theorem1Row {
    pub fn max_error(&self) -> f64 {
        self.errors.iter().map(|e| e.1).fold(0.0, f64::max)
    }
}

impl PerturbationReport {
    pub fn lemma1(&self) -> Lemma1Row {
        Lemma1Row {
            s: self.s,
            eps: self.eps,
            residual: self.lemma1_residual[0].max(self.lemma1_residual[1]),
            first_order_shift: self.first_order_shift[0].max(self.first_order_shift[1]),
            flagged: self.flagged,
        }
    }

    pub fn lemma2(&self) -> Lemma2Row {
        Lemma2Row {
            s: self.s,
            eps: self.eps,
            residual: self.lemma2_residual,
            c1_error: self.c1_error,
            c2_error: self.c2_error,
            flagged: self.flagged,
        }
    }

    pub fn theorem1(&self) -> Theorem1Row {
        Theorem1Row {
            s: self.s,
            eps: self.eps,
            errors: self.tn_errors.clone(),
            theta_ideal: self.theta_ideal,
            theta_pert: self.theta_pert,
            flagged: self.flagged,
        }
    }
}

pub fn lemma1_check(problem: &EstimationProblem, noise: &ComplexMatrix, s: f64) -> Result<Lemma1Row> {
    Ok(analyze(problem, noise, s, &[])?.lemma1())
}

pub fn lemma2_check(problem: &EstimationProblem, noise: &ComplexMatrix, s: f64) -> Result<Lemma2Row> {
    Ok(analyze(problem, noise, s, &[])?.lemma2())
}

pub fn theorem1_check(
    problem: &EstimationProblem,
    noise: &ComplexMatrix,
    s: f64,
    depths: &[usize],
) -> Result<Theorem1Row> {
    Ok(analyze(problem, noise, s, depths)?.theorem1())
}

/// Channel phase of the eigenvalue of `N·M_G` continuing `e^{iθ_ch}`, folded into `[0, π]`.
pub fn perturbed_phase(sim: &Simulator) -> Result<f64> {
    let basis = subspace_basis(sim.problem())?;
    let spectrum = eig_dense(sim.layer())?;
    let m = match_eigenpair(&spectrum, basis.rho_plus());
    if m.overlap < MATCH_THRESHOLD {
        return Err(Error::AmbiguousMatch { overlap: m.overlap });
    }
    Ok(m.value.arg().abs())
}

/// `B†·M·B` for the four-vector channel basis.
pub fn basis_matrix(basis: &SubspaceBasis, m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let dd = basis.vectors[0].len();
    let mut b = ComplexMatrix::zeros(dd, 4);
    for (k, v) in basis.vectors.iter().enumerate() {
        b.set_col(k, v);
    }
    mat_mul(&b.adjoint(), &mat_mul(m, &b)?)
}
