//! Data-dependent fairness constraint objects.
//!
//! Two constructions, each in two spaces. The mean-difference vector gives
//! the linear constraint that the average score must be (nearly) equal
//! across protected groups. The covariance gap is the difference of
//! within-group second moments; bounding the score's quadratic form in it
//! matches score spread across groups. The gap is indefinite, so it is
//! shipped together with its spectral split into a PSD pair: that pair is
//! what the convex-concave trainers linearize against, and splitting by
//! spectrum (rather than using the two group covariances directly) gives
//! strictly tighter convex subproblems.
//!
//! Kernel-space forms are expressed over beta = Y o alpha; trainers apply
//! the Y product at the boundary, so the matrices built here never bake
//! the labels in.

use crate::linalg::{
    sample_covariance, spectral_split_auto, Mat, SpectralSplit, SymmetricMatrix,
};
use crate::{Error, Result};

/// Row indices of the two protected groups.
#[derive(Debug, Clone)]
pub struct GroupIndex {
    pub pos: Vec<usize>,
    pub neg: Vec<usize>,
}

impl GroupIndex {
    /// Partitions rows by z in {-1, +1}; both groups must be nonempty.
    pub fn from_z(z: &[f64]) -> Result<Self> {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for (i, &zi) in z.iter().enumerate() {
            if zi == 1.0 {
                pos.push(i);
            } else if zi == -1.0 {
                neg.push(i);
            } else {
                return Err(Error::InvalidInput(format!(
                    "protected attribute must be -1 or +1, got {zi} at row {i}"
                )));
            }
        }
        if pos.is_empty() || neg.is_empty() {
            return Err(Error::DegenerateGroup(format!(
                "need both protected groups, got {} positive and {} negative",
                pos.len(),
                neg.len()
            )));
        }
        Ok(GroupIndex { pos, neg })
    }

    /// Signed indicator scaled by group size: 1/#P on P, -1/#N on N.
    /// Averaging any per-row quantity against this realizes a group-mean
    /// difference.
    pub fn mean_contrast(&self, n: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        for &i in &self.pos {
            v[i] = 1.0 / self.pos.len() as f64;
        }
        for &i in &self.neg {
            v[i] = -1.0 / self.neg.len() as f64;
        }
        v
    }
}

/// Linear fairness constraint: |direction . x| <= bound, where x is the
/// weight vector in predictor space or the (Y o alpha) vector in kernel
/// space.
#[derive(Debug, Clone)]
pub struct LinearFairnessConstraint {
    pub direction: Vec<f64>,
    pub bound: f64,
}

/// Covariance-gap constraint material: the indefinite gap and its PSD
/// spectral split.
#[derive(Debug, Clone)]
pub struct CovarianceGap {
    pub gap: SymmetricMatrix,
    pub split: SpectralSplit,
}

impl CovarianceGap {
    fn from_gap(gap: SymmetricMatrix) -> Result<Self> {
        let split = spectral_split_auto(&gap)?;
        Ok(CovarianceGap { gap, split })
    }

    /// w' gap w, the quantity the fair trainers penalize.
    pub fn quadratic_form(&self, w: &[f64]) -> f64 {
        self.gap.quadratic_form(w)
    }
}

/// Difference of group means of the predictor rows: (1/#P) sum_P x_i -
/// (1/#N) sum_N x_i.
pub fn mean_difference(x: &Mat, z: &[f64]) -> Result<Vec<f64>> {
    let group = GroupIndex::from_z(z)?;
    let contrast = group.mean_contrast(x.rows());
    let mut out = vec![0.0; x.cols()];
    for (i, &c) in contrast.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let row = x.row(i);
        for j in 0..out.len() {
            out[j] += c * row[j];
        }
    }
    Ok(out)
}

/// Predictor-space covariance gap Sigma_plus - Sigma_minus with its split.
pub fn covariance_gap(x: &Mat, z: &[f64]) -> Result<CovarianceGap> {
    let group = GroupIndex::from_z(z)?;
    let cov_p = sample_covariance(&x.select_rows(&group.pos))?;
    let cov_n = sample_covariance(&x.select_rows(&group.neg))?;
    CovarianceGap::from_gap(cov_p.add_scaled(&cov_n, -1.0))
}

/// Gram-space covariance gap S_plus - S_minus where
/// S = (1/m) B (I - (1/m) e e') B' for the n-by-m Gram block B of each
/// group. Expanded as (1/m) B B' - (1/m^2) (B e)(B e)' to avoid forming
/// the centering matrix.
pub fn kernel_covariance_gap(
    k_plus: &Mat,
    k_minus: &Mat,
    group: &GroupIndex,
) -> Result<CovarianceGap> {
    if k_plus.cols() != group.pos.len() || k_minus.cols() != group.neg.len() {
        return Err(Error::InvalidInput(format!(
            "Gram block widths {}/{} do not match group sizes {}/{}",
            k_plus.cols(),
            k_minus.cols(),
            group.pos.len(),
            group.neg.len()
        )));
    }
    if k_plus.rows() != k_minus.rows() {
        return Err(Error::InvalidInput(
            "Gram blocks disagree on row count".into(),
        ));
    }
    let s_p = centered_gram_moment(k_plus);
    let s_n = centered_gram_moment(k_minus);
    CovarianceGap::from_gap(s_p.add_scaled(&s_n, -1.0))
}

fn centered_gram_moment(b: &Mat) -> SymmetricMatrix {
    let n = b.rows();
    let m = b.cols();
    let inv_m = 1.0 / m as f64;
    let row_sums: Vec<f64> = (0..n).map(|i| b.row(i).iter().sum()).collect();
    SymmetricMatrix::from_fn(n, |i, j| {
        let mut acc = 0.0;
        let ri = b.row(i);
        let rj = b.row(j);
        for k in 0..m {
            acc += ri[k] * rj[k];
        }
        inv_m * acc - inv_m * inv_m * row_sums[i] * row_sums[j]
    })
}

/// Kernel-space mean-difference direction kappa = K . contrast, so that
/// kappa . (Y o alpha) is the group score-mean gap.
pub fn kernel_mean_difference(k_full: &Mat, group: &GroupIndex) -> Vec<f64> {
    let contrast = group.mean_contrast(k_full.cols());
    k_full.matvec(&contrast)
}
