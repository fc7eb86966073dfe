//! Dense linear algebra for the trainers.
//!
//! Everything here is dense and row-major. Sizes stay modest (a few
//! thousand at most on the kernel path), so simple O(n^3) algorithms with
//! predictable numerics beat anything clever: a cyclic Jacobi
//! eigendecomposition, a partial-pivot LU, and population-form covariance.
//! The spectral split of an indefinite symmetric matrix into a difference
//! of two PSD matrices lives in [`eigen`]; it is the piece the
//! convex-concave training loop is built on.

mod eigen;
mod lu;

pub use eigen::{spectral_split, spectral_split_auto, sym_eig, EigenDecomposition, SpectralSplit};
pub use lu::lu_solve;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Builds from nested rows. Panics on ragged input; callers validate
    /// shape before reaching this point.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Mat { rows: r, cols: c, data }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "shape mismatch");
        Mat { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matvec shape mismatch");
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            let row = self.row(i);
            let mut acc = 0.0;
            for j in 0..self.cols {
                acc += row[j] * x[j];
            }
            out[i] = acc;
        }
        out
    }

    pub fn transpose(&self) -> Mat {
        let mut out = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self.get(i, k);
                if aik == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let out_row = out.row_mut(i);
                for j in 0..orow.len() {
                    out_row[j] += aik * orow[j];
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Selects the given rows into a new matrix.
    pub fn select_rows(&self, idx: &[usize]) -> Mat {
        let mut out = Mat::zeros(idx.len(), self.cols);
        for (r, &i) in idx.iter().enumerate() {
            out.row_mut(r).copy_from_slice(self.row(i));
        }
        out
    }

    pub fn column_means(&self) -> Vec<f64> {
        let mut means = vec![0.0; self.cols];
        for i in 0..self.rows {
            let row = self.row(i);
            for j in 0..self.cols {
                means[j] += row[j];
            }
        }
        let n = self.rows as f64;
        for m in &mut means {
            *m /= n;
        }
        means
    }
}

/// Symmetric matrix stored as a full square for cheap row access. The
/// constructors are the only writers and they mirror every entry, so both
/// triangles always agree exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricMatrix {
    order: usize,
    data: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn zeros(order: usize) -> Self {
        SymmetricMatrix {
            order,
            data: vec![0.0; order * order],
        }
    }

    /// Fills from `f(i, j)` evaluated only on the upper triangle (i <= j)
    /// and mirrored, so asymmetric generators cannot leak in.
    pub fn from_fn(order: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = SymmetricMatrix::zeros(order);
        for i in 0..order {
            for j in i..order {
                let v = f(i, j);
                m.data[i * order + j] = v;
                m.data[j * order + i] = v;
            }
        }
        m
    }

    /// Accepts a square matrix that is symmetric up to `tol` in max-norm,
    /// averaging the triangles to make symmetry exact.
    pub fn from_mat(m: &Mat, tol: f64) -> Result<Self> {
        if m.rows() != m.cols() {
            return Err(Error::InvalidInput(format!(
                "symmetric matrix must be square, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        let n = m.rows();
        let mut worst = 0.0f64;
        let out = SymmetricMatrix::from_fn(n, |i, j| {
            let a = m.get(i, j);
            let b = m.get(j, i);
            worst = worst.max((a - b).abs());
            0.5 * (a + b)
        });
        if worst > tol {
            return Err(Error::InvalidInput(format!(
                "matrix is not symmetric: max asymmetry {worst:.3e} exceeds {tol:.3e}"
            )));
        }
        Ok(out)
    }

    pub fn diag(entries: &[f64]) -> Self {
        let n = entries.len();
        SymmetricMatrix::from_fn(n, |i, j| if i == j { entries[i] } else { 0.0 })
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.order && j < self.order);
        self.data[i * self.order + j]
    }

    /// Writes entry (i, j) and its mirror.
    #[inline]
    pub fn set_sym(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.order && j < self.order);
        self.data[i * self.order + j] = v;
        self.data[j * self.order + i] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.order..(i + 1) * self.order]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.order, "matvec shape mismatch");
        let mut out = vec![0.0; self.order];
        for i in 0..self.order {
            let row = self.row(i);
            let mut acc = 0.0;
            for j in 0..self.order {
                acc += row[j] * x[j];
            }
            out[i] = acc;
        }
        out
    }

    /// x' A x.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let ax = self.matvec(x);
        dot(x, &ax)
    }

    pub fn trace(&self) -> f64 {
        (0..self.order).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// self + scale * other.
    pub fn add_scaled(&self, other: &SymmetricMatrix, scale: f64) -> SymmetricMatrix {
        assert_eq!(self.order, other.order, "order mismatch");
        SymmetricMatrix::from_fn(self.order, |i, j| self.get(i, j) + scale * other.get(i, j))
    }

    pub fn scale(&self, s: f64) -> SymmetricMatrix {
        SymmetricMatrix::from_fn(self.order, |i, j| s * self.get(i, j))
    }

    pub fn to_mat(&self) -> Mat {
        Mat::from_vec(self.order, self.order, self.data.clone())
    }
}

/// Population-form sample covariance of the rows: column-mean-center, then
/// (1/m) Xc' Xc. Two rows minimum so a variance exists at all.
pub fn sample_covariance(rows: &Mat) -> Result<SymmetricMatrix> {
    let m = rows.rows();
    if m < 2 {
        return Err(Error::DegenerateGroup(format!(
            "covariance needs at least 2 rows, got {m}"
        )));
    }
    let p = rows.cols();
    let means = rows.column_means();
    let mut cov = SymmetricMatrix::zeros(p);
    for r in 0..m {
        let row = rows.row(r);
        for i in 0..p {
            let di = row[i] - means[i];
            for j in i..p {
                let dj = row[j] - means[j];
                cov.data[i * p + j] += di * dj;
            }
        }
    }
    let inv_m = 1.0 / m as f64;
    for i in 0..p {
        for j in i..p {
            let v = cov.data[i * p + j] * inv_m;
            cov.data[i * p + j] = v;
            cov.data[j * p + i] = v;
        }
    }
    Ok(cov)
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for i in 0..a.len() {
        acc += a[i] * b[i];
    }
    acc
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mat_basic_ops() {
        let a = Mat::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        assert_eq!(a.get(0, 1), 2.0);
        assert_eq!(a.matvec(&[1.0, 1.0]), vec![3.0, 7.0]);
        let at = a.transpose();
        assert_eq!(at.get(1, 0), 2.0);
        let aa = a.matmul(&a);
        assert_eq!(aa.get(0, 0), 7.0);
        assert_eq!(aa.get(1, 1), 22.0);
    }

    #[test]
    fn symmetric_from_mat_rejects_asymmetry() {
        let m = Mat::from_rows(&[vec![1.0, 2.0], vec![-2.0, 1.0]]);
        assert!(SymmetricMatrix::from_mat(&m, 1e-9).is_err());
        let s = Mat::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert!(SymmetricMatrix::from_mat(&s, 1e-9).is_ok());
    }

    #[test]
    fn covariance_identical_rows_is_zero() {
        let rows = Mat::from_rows(&[vec![3.0, -1.0], vec![3.0, -1.0], vec![3.0, -1.0]]);
        let cov = sample_covariance(&rows).unwrap();
        assert_eq!(cov.max_abs(), 0.0);
    }

    #[test]
    fn covariance_two_point_example() {
        // mean (1,0); deviations (-1,0),(1,0); (1/2) sum -> diag(1,0)
        let rows = Mat::from_rows(&[vec![0.0, 0.0], vec![2.0, 0.0]]);
        let cov = sample_covariance(&rows).unwrap();
        assert!((cov.get(0, 0) - 1.0).abs() < 1e-15);
        assert_eq!(cov.get(0, 1), 0.0);
        assert_eq!(cov.get(1, 1), 0.0);
    }

    #[test]
    fn covariance_matches_two_pass_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(42);
        let n = 10;
        let p = 4;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..p).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let cov = sample_covariance(&Mat::from_rows(&rows)).unwrap();

        // Independent two-pass computation, scalar loops only.
        let mut means = vec![0.0; p];
        for r in &rows {
            for j in 0..p {
                means[j] += r[j] / n as f64;
            }
        }
        for i in 0..p {
            for j in 0..p {
                let mut acc = 0.0;
                for r in &rows {
                    acc += (r[i] - means[i]) * (r[j] - means[j]);
                }
                acc /= n as f64;
                assert!(
                    (cov.get(i, j) - acc).abs() <= 1e-12,
                    "covariance mismatch at ({i},{j})"
                );
            }
        }
    }

    #[test]
    fn covariance_rejects_single_row() {
        let rows = Mat::from_rows(&[vec![1.0, 2.0]]);
        assert!(matches!(
            sample_covariance(&rows),
            Err(Error::DegenerateGroup(_))
        ));
    }
}
