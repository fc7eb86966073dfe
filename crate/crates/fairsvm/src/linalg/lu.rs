//! Partial-pivot LU solve for the Newton systems in the interior-point
//! solver. Dense, in-place, no factor reuse: every Newton step builds a
//! fresh KKT matrix anyway.

use super::Mat;
use crate::{Error, Result};

/// Solves `a x = b` by Gaussian elimination with partial pivoting,
/// consuming `a`. Fails if a pivot's magnitude falls below 1e-300 times
/// the largest initial entry, which on these KKT systems means the
/// regularization was defeated by non-finite input.
pub fn lu_solve(mut a: Mat, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.rows();
    assert_eq!(a.cols(), n, "lu_solve needs a square matrix");
    assert_eq!(b.len(), n, "rhs length mismatch");

    let mut x = b.to_vec();
    let scale = a.max_abs().max(1.0);
    let pivot_floor = 1e-300 * scale;

    for col in 0..n {
        let mut pivot_row = col;
        let mut pivot_val = a.get(col, col).abs();
        for r in col + 1..n {
            let v = a.get(r, col).abs();
            if v > pivot_val {
                pivot_val = v;
                pivot_row = r;
            }
        }
        if pivot_val <= pivot_floor || !pivot_val.is_finite() {
            return Err(Error::Solver(format!(
                "singular linear system at column {col} (pivot {pivot_val:.3e})"
            )));
        }
        if pivot_row != col {
            for j in 0..n {
                let tmp = a.get(col, j);
                a.set(col, j, a.get(pivot_row, j));
                a.set(pivot_row, j, tmp);
            }
            x.swap(col, pivot_row);
        }
        let inv_p = 1.0 / a.get(col, col);
        for r in col + 1..n {
            let factor = a.get(r, col) * inv_p;
            if factor == 0.0 {
                continue;
            }
            a.set(r, col, 0.0);
            for j in col + 1..n {
                let v = a.get(r, j) - factor * a.get(col, j);
                a.set(r, j, v);
            }
            x[r] -= factor * x[col];
        }
    }

    for col in (0..n).rev() {
        let mut acc = x[col];
        for j in col + 1..n {
            acc -= a.get(col, j) * x[j];
        }
        x[col] = acc / a.get(col, col);
    }
    Ok(x)
}
