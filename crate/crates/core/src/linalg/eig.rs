//! Complex eigendecomposition via Hessenberg reduction and shifted QR.
//!
//! The QR sweep keeps the full Schur form `A = Q T Q†` so that eigenvectors
//! can be recovered by back-substitution on `T`. Within a numerically
//! degenerate cluster the back-substitution never divides by the cluster gap;
//! the resulting vectors are then orthonormalized so that a cluster always
//! comes back as an orthonormal basis of its eigenspace.

use std::cmp::Ordering;
use std::f64::consts::TAU;

use super::{inner, norm, ComplexMatrix, C64, ONE, ZERO};
use crate::error::{Error, Result};

pub const MAX_EIG_DIM: usize = 64;

/// Eigenvalues closer than this are treated as one degenerate cluster.
const CLUSTER_GAP: f64 = 1e-8;

/// Eigenpairs of a square matrix, sorted by descending modulus then by phase in `[0, 2π)`.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: Vec<C64>,
    /// Unit-norm eigenvectors, `vectors[k]` paired with `values[k]`.
    pub vectors: Vec<Vec<C64>>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (C64, &[C64])> {
        self.values
            .iter()
            .copied()
            .zip(self.vectors.iter().map(|v| v.as_slice()))
    }

    /// Largest `‖M v − λ v‖₂` over all pairs.
    pub fn max_residual(&self, m: &ComplexMatrix) -> f64 {
        self.pairs()
            .map(|(lambda, v)| {
                let mv = m.apply(v);
                mv.iter()
                    .zip(v)
                    .map(|(a, b)| (a - lambda * b).norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }
}

/// Phase of `z` in `[0, 2π)`, snapping values within 1e-12 of 2π back to 0.
pub fn phase_0_2pi(z: C64) -> f64 {
    let mut p = z.arg();
    if p < 0.0 {
        p += TAU;
    }
    if TAU - p < 1e-12 {
        p = 0.0;
    }
    p
}

/// Full eigendecomposition of a square complex matrix of dimension ≤ 64.
pub fn eig_dense(m: &ComplexMatrix) -> Result<Spectrum> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            op: "eig_dense",
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let n = m.rows();
    if n > MAX_EIG_DIM {
        return Err(Error::DimensionTooLarge {
            dim: n,
            max: MAX_EIG_DIM,
        });
    }
    let (values, vectors) = match n {
        0 => (vec![], vec![]),
        1 => (vec![m[(0, 0)]], vec![vec![ONE]]),
        2 => eig_2x2(m),
        _ => eig_schur(m)?,
    };
    Ok(sort_spectrum(values, vectors))
}

fn sort_spectrum(values: Vec<C64>, vectors: Vec<Vec<C64>>) -> Spectrum {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        values[b]
            .norm()
            .partial_cmp(&values[a].norm())
            .unwrap_or(Ordering::Equal)
    });
    // Moduli equal to within rounding form one group, ordered by phase.
    let mut sorted = Vec::with_capacity(order.len());
    let mut start = 0;
    while start < order.len() {
        let lead = values[order[start]].norm();
        let mut end = start + 1;
        while end < order.len() && (lead - values[order[end]].norm()).abs() <= 1e-9 * lead.max(1.0)
        {
            end += 1;
        }
        let mut group = order[start..end].to_vec();
        group.sort_by(|&a, &b| {
            phase_0_2pi(values[a])
                .partial_cmp(&phase_0_2pi(values[b]))
                .unwrap_or(Ordering::Equal)
        });
        sorted.extend(group);
        start = end;
    }
    Spectrum {
        values: sorted.iter().map(|&i| values[i]).collect(),
        vectors: sorted.iter().map(|&i| vectors[i].clone()).collect(),
    }
}

/// Closed-form eigenpairs of a 2×2 matrix.
fn eig_2x2(m: &ComplexMatrix) -> (Vec<C64>, Vec<Vec<C64>>) {
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let tr = a + d;
    let det = a * d - b * c;
    let mut s = (tr * tr - 4.0 * det).sqrt();
    if (tr + s).norm() < (tr - s).norm() {
        s = -s;
    }
    let l1 = (tr + s) / 2.0;
    let l2 = if l1.norm() > 1e-300 { det / l1 } else { (tr - s) / 2.0 };

    let scale = super::frob_norm(m).max(1e-300);
    if b.norm() <= 1e-15 * scale && c.norm() <= 1e-15 * scale {
        // Diagonal: pair each eigenvalue with the nearer diagonal entry.
        let (e0, e1) = (vec![ONE, ZERO], vec![ZERO, ONE]);
        return if (l1 - a).norm() <= (l1 - d).norm() {
            (vec![l1, l2], vec![e0, e1])
        } else {
            (vec![l1, l2], vec![e1, e0])
        };
    }
    let vec_for = |lambda: C64| -> Vec<C64> {
        let v = if b.norm() >= c.norm() {
            vec![b, lambda - a]
        } else {
            vec![lambda - d, c]
        };
        let n = norm(&v);
        v.into_iter().map(|z| z / n).collect()
    };
    let v1 = vec_for(l1);
    let mut v2 = vec_for(l2);
    if (l1 - l2).norm() < CLUSTER_GAP * scale.max(1.0) {
        v2 = orthonormal_complement_2(&v1);
    }
    (vec![l1, l2], vec![v1, v2])
}

fn orthonormal_complement_2(v: &[C64]) -> Vec<C64> {
    vec![-v[1].conj(), v[0].conj()]
}

/// Complex Givens rotation `[[c, s], [-s̄, c]]` with real `c`, mapping `(a, b)` to `(r, 0)`.
fn givens(a: C64, b: C64) -> (f64, C64) {
    let an = a.norm();
    let bn = b.norm();
    if bn == 0.0 {
        return (1.0, ZERO);
    }
    if an == 0.0 {
        return (0.0, b.conj() / bn);
    }
    let r = an.hypot(bn);
    let c = an / r;
    let s = (a / an) * b.conj() / r;
    (c, s)
}

fn eig_schur(m: &ComplexMatrix) -> Result<(Vec<C64>, Vec<Vec<C64>>)> {
    let n = m.rows();
    let mut h = m.clone();
    let mut q = ComplexMatrix::identity(n);
    hessenberg(&mut h, &mut q);
    schur_qr(&mut h, &mut q)?;
    let t = h;

    let values: Vec<C64> = (0..n).map(|k| t[(k, k)]).collect();
    let scale = super::frob_norm(m).max(1e-300);
    let small = f64::EPSILON * scale;

    let mut vectors = Vec::with_capacity(n);
    for k in 0..n {
        let lambda = values[k];
        let mut y = vec![ZERO; n];
        y[k] = ONE;
        for j in (0..k).rev() {
            let rhs: C64 = ((j + 1)..=k).map(|l| t[(j, l)] * y[l]).sum();
            let denom = t[(j, j)] - lambda;
            if denom.norm() < CLUSTER_GAP * scale.max(1.0) {
                // Same cluster: keep the component out of the vector.
                y[j] = ZERO;
            } else {
                let denom = if denom.norm() < small {
                    C64::new(small, 0.0)
                } else {
                    denom
                };
                y[j] = -rhs / denom;
            }
        }
        let x = q.apply(&y);
        let nx = norm(&x);
        vectors.push(x.into_iter().map(|z| z / nx).collect::<Vec<_>>());
    }

    orthonormalize_clusters(&values, &mut vectors, CLUSTER_GAP * scale.max(1.0));
    Ok((values, vectors))
}

/// Gram–Schmidt inside each group of eigenvalues closer than `gap`.
fn orthonormalize_clusters(values: &[C64], vectors: &mut [Vec<C64>], gap: f64) {
    let n = values.len();
    let mut assigned = vec![false; n];
    for i in 0..n {
        if assigned[i] {
            continue;
        }
        let members: Vec<usize> = (i..n)
            .filter(|&j| !assigned[j] && (values[j] - values[i]).norm() < gap)
            .collect();
        for &j in &members {
            assigned[j] = true;
        }
        if members.len() < 2 {
            continue;
        }
        for (pos, &j) in members.iter().enumerate() {
            let mut v = vectors[j].clone();
            for _pass in 0..2 {
                for &prev in &members[..pos] {
                    let proj = inner(&vectors[prev], &v);
                    for (vi, pi) in v.iter_mut().zip(&vectors[prev]) {
                        *vi -= proj * pi;
                    }
                }
            }
            let nv = norm(&v);
            if nv > 1e-8 {
                vectors[j] = v.into_iter().map(|z| z / nv).collect();
            }
        }
    }
}

/// Householder reduction to upper Hessenberg form, accumulating `Q`.
fn hessenberg(h: &mut ComplexMatrix, q: &mut ComplexMatrix) {
    let n = h.rows();
    for k in 0..n.saturating_sub(2) {
        let x: Vec<C64> = ((k + 1)..n).map(|r| h[(r, k)]).collect();
        let xnorm = norm(&x);
        if xnorm == 0.0 {
            continue;
        }
        let omega = if x[0].norm() > 0.0 {
            x[0] / x[0].norm()
        } else {
            ONE
        };
        let alpha = -omega * xnorm;
        let mut v = x;
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let beta = 2.0 / vnorm2;

        // H ← P H: rows k+1..n.
        for c in 0..n {
            let s: C64 = v
                .iter()
                .enumerate()
                .map(|(i, vi)| vi.conj() * h[(k + 1 + i, c)])
                .sum();
            for (i, vi) in v.iter().enumerate() {
                h[(k + 1 + i, c)] -= beta * vi * s;
            }
        }
        // H ← H P and Q ← Q P: columns k+1..n.
        for mat in [&mut *h, &mut *q] {
            for r in 0..n {
                let s: C64 = v
                    .iter()
                    .enumerate()
                    .map(|(i, vi)| mat[(r, k + 1 + i)] * vi)
                    .sum();
                for (i, vi) in v.iter().enumerate() {
                    mat[(r, k + 1 + i)] -= beta * s * vi.conj();
                }
            }
        }
        for r in (k + 2)..n {
            h[(r, k)] = ZERO;
        }
    }
}

/// Shifted QR iteration on a Hessenberg matrix, leaving the Schur form in `h`.
fn schur_qr(h: &mut ComplexMatrix, q: &mut ComplexMatrix) -> Result<()> {
    let n = h.rows();
    let budget = 60 * n;
    let mut total = 0usize;
    let mut hi = n - 1;
    let mut since_deflation = 0usize;

    while hi > 0 {
        // Locate the active window [lo, hi].
        let mut lo = hi;
        while lo > 0 {
            let off = h[(lo, lo - 1)].norm();
            let diag = h[(lo, lo)].norm() + h[(lo - 1, lo - 1)].norm();
            let tiny = if diag > 0.0 {
                f64::EPSILON * diag
            } else {
                f64::EPSILON * super::frob_norm(h)
            };
            if off <= tiny {
                h[(lo, lo - 1)] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            since_deflation = 0;
            continue;
        }

        total += 1;
        since_deflation += 1;
        if total > budget {
            return Err(Error::NoConvergence {
                dim: n,
                iterations: total,
            });
        }

        let shift = if since_deflation % 11 == 10 {
            // Exceptional shift to break cycles.
            h[(hi, hi)] + C64::new(0.75 * h[(hi, hi - 1)].norm(), 0.0)
        } else {
            wilkinson_shift(
                h[(hi - 1, hi - 1)],
                h[(hi - 1, hi)],
                h[(hi, hi - 1)],
                h[(hi, hi)],
            )
        };

        for k in lo..=hi {
            h[(k, k)] -= shift;
        }
        let mut rots = Vec::with_capacity(hi - lo);
        for k in lo..hi {
            let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
            for col in k..n {
                let a = h[(k, col)];
                let b = h[(k + 1, col)];
                h[(k, col)] = c * a + s * b;
                h[(k + 1, col)] = -s.conj() * a + c * b;
            }
            h[(k + 1, k)] = ZERO;
            rots.push((k, c, s));
        }
        for &(k, c, s) in &rots {
            let rmax = (k + 2).min(hi);
            for r in 0..=rmax {
                let a = h[(r, k)];
                let b = h[(r, k + 1)];
                h[(r, k)] = c * a + s.conj() * b;
                h[(r, k + 1)] = -s * a + c * b;
            }
            for r in 0..n {
                let a = q[(r, k)];
                let b = q[(r, k + 1)];
                q[(r, k)] = c * a + s.conj() * b;
                q[(r, k + 1)] = -s * a + c * b;
            }
        }
        for k in lo..=hi {
            h[(k, k)] += shift;
        }
    }
    Ok(())
}

/// Eigenvalue of `[[a, b], [c, d]]` closer to `d`.
fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let tr = a + d;
    let det = a * d - b * c;
    let s = (tr * tr - 4.0 * det).sqrt();
    let l1 = (tr + s) / 2.0;
    let l2 = (tr - s) / 2.0;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}
