//! Symmetric eigendecomposition and the PSD spectral split.
//!
//! The eigensolver is cyclic Jacobi: sweeps of plane rotations that zero
//! each off-diagonal pair in turn. Convergence is unconditional for
//! symmetric input and the rotations keep the accumulated eigenvector
//! basis orthonormal to machine precision, which is exactly what the
//! downstream split needs. Matrices here are at most a few thousand on a
//! side, where Jacobi's O(n^3)-per-sweep cost is acceptable.

use serde::{Deserialize, Serialize};

use super::SymmetricMatrix;
use crate::linalg::Mat;
use crate::{Error, Result};

/// Stop once the off-diagonal Frobenius norm falls below this fraction of
/// the full Frobenius norm of the input.
const OFF_DIAG_STOP: f64 = 1e-12;

/// Jacobi sweep limit; reaching it on a symmetric matrix would indicate a
/// non-finite entry slipped through, not slow convergence.
const MAX_SWEEPS: usize = 100;

/// Eigenvalues in descending order with the matching orthonormal
/// eigenvectors as columns of `vectors`.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: Mat,
}

impl EigenDecomposition {
    /// Column `i` of the eigenvector matrix.
    pub fn vector(&self, i: usize) -> Vec<f64> {
        (0..self.vectors.rows()).map(|r| self.vectors.get(r, i)).collect()
    }
}

/// The PSD pair whose difference reconstructs an indefinite symmetric
/// matrix: `u_plus` collects the positive spectrum, `u_minus` the negated
/// negative spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSplit {
    pub u_plus: SymmetricMatrix,
    pub u_minus: SymmetricMatrix,
}

/// Cyclic Jacobi eigendecomposition.
///
/// Sweeps rotate every (p, q) pair once; the off-diagonal mass is strictly
/// non-increasing, and iteration stops when it drops below
/// 1e-12 times the Frobenius norm of the input (or after 100 sweeps).
/// Eigenvalues are returned descending. Each eigenvector's sign is fixed
/// so its largest-magnitude entry is positive, making the basis
/// reproducible across runs.
pub fn sym_eig(a: &SymmetricMatrix) -> Result<EigenDecomposition> {
    if !a.is_finite() {
        return Err(Error::InvalidInput(
            "eigendecomposition input has non-finite entries".into(),
        ));
    }
    let n = a.order();
    if n == 0 {
        return Ok(EigenDecomposition {
            values: Vec::new(),
            vectors: Mat::zeros(0, 0),
        });
    }

    let mut w = a.to_mat();
    let mut v = Mat::identity(n);
    let stop = OFF_DIAG_STOP * a.frobenius_norm();

    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&w) <= stop {
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = w.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = w.get(p, p);
                let aqq = w.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                // tan of the rotation angle, smaller root for stability
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                // Rotate rows/columns p and q of the working matrix.
                for k in 0..n {
                    let wkp = w.get(k, p);
                    let wkq = w.get(k, q);
                    w.set(k, p, c * wkp - s * wkq);
                    w.set(k, q, s * wkp + c * wkq);
                }
                for k in 0..n {
                    let wpk = w.get(p, k);
                    let wqk = w.get(q, k);
                    w.set(p, k, c * wpk - s * wqk);
                    w.set(q, k, s * wpk + c * wqk);
                }
                // Accumulate the rotation into the eigenvector basis.
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| w.get(i, i)).collect();
    order.sort_by(|&i, &j| diag[j].partial_cmp(&diag[i]).unwrap());

    let values: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = Mat::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        // Sign convention: largest-magnitude entry positive.
        let mut max_idx = 0;
        let mut max_abs = 0.0;
        for r in 0..n {
            let x = v.get(r, src).abs();
            if x > max_abs {
                max_abs = x;
                max_idx = r;
            }
        }
        let flip = if v.get(max_idx, src) < 0.0 { -1.0 } else { 1.0 };
        for r in 0..n {
            vectors.set(r, col, flip * v.get(r, src));
        }
    }

    Ok(EigenDecomposition { values, vectors })
}

fn off_diagonal_norm(w: &Mat) -> f64 {
    let n = w.rows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let x = w.get(i, j);
            acc += 2.0 * x * x;
        }
    }
    acc.sqrt()
}

/// Splits a symmetric matrix into PSD parts: eigenvalues above `zero_tol`
/// go to `u_plus`, those below `-zero_tol` (negated) to `u_minus`, and
/// anything in between is dropped from both so numerically-zero modes
/// cannot pollute either piece.
pub fn spectral_split(a: &SymmetricMatrix, zero_tol: f64) -> Result<SpectralSplit> {
    let eig = sym_eig(a)?;
    Ok(split_from_eig(a.order(), &eig, zero_tol))
}

/// [`spectral_split`] with the default threshold 1e-9 times the spectral
/// radius.
pub fn spectral_split_auto(a: &SymmetricMatrix) -> Result<SpectralSplit> {
    let eig = sym_eig(a)?;
    let radius = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(split_from_eig(a.order(), &eig, 1e-9 * radius))
}

fn split_from_eig(n: usize, eig: &EigenDecomposition, zero_tol: f64) -> SpectralSplit {
    let mut plus = SymmetricMatrix::zeros(n);
    let mut minus = SymmetricMatrix::zeros(n);
    for (idx, &val) in eig.values.iter().enumerate() {
        if val.abs() <= zero_tol {
            continue;
        }
        let vec = eig.vector(idx);
        let (target, weight) = if val > 0.0 {
            (&mut plus, val)
        } else {
            (&mut minus, -val)
        };
        for i in 0..n {
            for j in i..n {
                let v = target.get(i, j) + weight * vec[i] * vec[j];
                target.set_sym(i, j, v);
            }
        }
    }
    SpectralSplit {
        u_plus: plus,
        u_minus: minus,
    }
}
