//! Row-stacked vectorization: `vec(ρ)[i·d + j] = ρ[i][j]`.
//!
//! Under this convention `AρB ↦ (A ⊗ Bᵀ)·vec(ρ)` and `⟨⟨σ|ρ⟩⟩ = Tr(σ†ρ)`.

use crate::error::{Error, Result};
use crate::linalg::{eig_dense, inner, kron, ComplexMatrix, C64, ZERO};

use super::problem::pauli;

pub fn vectorize(op: &ComplexMatrix) -> Vec<C64> {
    op.as_slice().to_vec()
}

pub fn devectorize(v: &[C64]) -> Result<ComplexMatrix> {
    let d = (v.len() as f64).sqrt().round() as usize;
    if d * d != v.len() {
        return Err(Error::NotSquare {
            op: "devectorize",
            rows: v.len(),
            cols: 1,
        });
    }
    ComplexMatrix::from_vec(d, d, v.to_vec())
}

/// `⟨⟨σ|ρ⟩⟩ = Tr(σ†ρ)`.
pub fn vec_inner(sigma: &[C64], rho: &[C64]) -> C64 {
    inner(sigma, rho)
}

/// Superoperator of `ρ ↦ AρB`.
pub fn sandwich_superop(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    kron(a, &b.transpose())
}

/// Superoperator of `ρ ↦ UρU†`.
pub fn conjugation_superop(u: &ComplexMatrix) -> ComplexMatrix {
    kron(u, &u.conj())
}

/// Superoperator of `ρ ↦ Σ KρK†`.
pub fn kraus_superop(kraus: &[ComplexMatrix]) -> Result<ComplexMatrix> {
    let first = kraus
        .first()
        .ok_or_else(|| Error::InvalidNoise("empty Kraus set".into()))?;
    let d = first.rows();
    let mut s = ComplexMatrix::zeros(d * d, d * d);
    for k in kraus {
        if k.rows() != d || k.cols() != d {
            return Err(Error::DimensionMismatch {
                op: "kraus_superop",
                left: (d, d),
                right: (k.rows(), k.cols()),
            });
        }
        s = &s + &conjugation_superop(k);
    }
    Ok(s)
}

/// Columns are `vec(P)/√2` for `P ∈ {I, X, Y, Z}`.
fn pauli_basis_change() -> ComplexMatrix {
    let mut b = ComplexMatrix::zeros(4, 4);
    for (j, letter) in ['I', 'X', 'Y', 'Z'].into_iter().enumerate() {
        let p = vectorize(&pauli(letter).unwrap());
        let scaled: Vec<C64> = p.iter().map(|z| z / std::f64::consts::SQRT_2).collect();
        b.set_col(j, &scaled);
    }
    b
}

/// Single-qubit Pauli transfer matrix (basis I, X, Y, Z) to a superoperator.
pub fn ptm_to_superop(ptm: &ComplexMatrix) -> Result<ComplexMatrix> {
    if ptm.rows() != 4 || ptm.cols() != 4 {
        return Err(Error::DimensionMismatch {
            op: "ptm_to_superop",
            left: (4, 4),
            right: (ptm.rows(), ptm.cols()),
        });
    }
    let b = pauli_basis_change();
    Ok(&(&b * ptm) * &b.adjoint())
}

/// Single-qubit superoperator to its Pauli transfer matrix.
pub fn superop_to_ptm(s: &ComplexMatrix) -> Result<ComplexMatrix> {
    if s.rows() != 4 || s.cols() != 4 {
        return Err(Error::DimensionMismatch {
            op: "superop_to_ptm",
            left: (4, 4),
            right: (s.rows(), s.cols()),
        });
    }
    let b = pauli_basis_change();
    Ok(&(&b.adjoint() * s) * &b)
}

/// Superoperator of `E₀ ⊗ E₁ ⊗ …`, each factor acting on one qubit.
///
/// The leftmost factor acts on the most significant qubit.
pub fn tensor_superops(factors: &[ComplexMatrix]) -> ComplexMatrix {
    let q = factors.len();
    let d = 1usize << q;
    let dd = d * d;
    let mut s = ComplexMatrix::zeros(dd, dd);
    let bit = |x: usize, k: usize| (x >> (q - 1 - k)) & 1;
    for row in 0..dd {
        let (i, j) = (row / d, row % d);
        for col in 0..dd {
            let (ip, jp) = (col / d, col % d);
            let mut v = C64::new(1.0, 0.0);
            for (k, f) in factors.iter().enumerate() {
                let r = bit(i, k) * 2 + bit(j, k);
                let c = bit(ip, k) * 2 + bit(jp, k);
                v *= f[(r, c)];
                if v == ZERO {
                    break;
                }
            }
            s[(row, col)] = v;
        }
    }
    s
}

/// Choi matrix `J = Σ |i⟩⟨j| ⊗ E(|i⟩⟨j|)`.
pub fn choi(s: &ComplexMatrix) -> Result<ComplexMatrix> {
    let dd = s.rows();
    let d = (dd as f64).sqrt().round() as usize;
    if d * d != dd || !s.is_square() {
        return Err(Error::NotSquare {
            op: "choi",
            rows: s.rows(),
            cols: s.cols(),
        });
    }
    let mut j = ComplexMatrix::zeros(dd, dd);
    for i in 0..d {
        for jj in 0..d {
            for a in 0..d {
                for b in 0..d {
                    j[(i * d + a, jj * d + b)] = s[(a * d + b, i * d + jj)];
                }
            }
        }
    }
    Ok(j)
}

/// Smallest real part over the Choi spectrum; negative means not completely positive.
pub fn choi_min_eigenvalue(s: &ComplexMatrix) -> Result<f64> {
    let j = choi(s)?;
    let spec = eig_dense(&j)?;
    Ok(spec
        .values
        .iter()
        .map(|l| l.re)
        .fold(f64::INFINITY, f64::min))
}

/// `max |Tr(E(|i⟩⟨j|)) − δ_ij|` over basis operators.
pub fn trace_defect(s: &ComplexMatrix) -> f64 {
    let dd = s.rows();
    let d = (dd as f64).sqrt().round() as usize;
    let mut worst: f64 = 0.0;
    for col in 0..dd {
        let tr: C64 = (0..d).map(|a| s[(a * d + a, col)]).sum();
        let want = if col / d == col % d { 1.0 } else { 0.0 };
        worst = worst.max((tr - want).norm());
    }
    worst
}
