//! Threshold-sweep evaluation.
//!
//! Everything here treats a classifier as the full family sign(score - t)
//! over all real thresholds t, with sign(0) = +1. ROC curves against the
//! label give accuracy (AUC); ROC curves against the protected attribute
//! give fairness: a perfectly fair score assigns both groups the same
//! positive rate at every threshold, so its z-ROC hugs the diagonal, and
//! the maximal vertical deviation |TPR - FPR| is the demographic-parity
//! gap. Conditioning the same statistic on y = +1 gives the
//! equal-opportunity gap.
//!
//! For an empirical score set, sweeping "all real t" reduces to one
//! evaluation per distinct score value (ties share a threshold), plus
//! sentinels beyond both ends; the curves here carry exactly those points.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// ROC polyline from (0,0) to (1,1), one point per distinct score.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RocCurve {
    /// (false positive rate, true positive rate), monotone in both
    /// coordinates.
    pub points: Vec<(f64, f64)>,
}

/// Everything the CLI reports about one scored dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FairnessReport {
    pub auc_y: f64,
    pub dp_delta: f64,
    pub eo_delta: f64,
    pub roc_y: RocCurve,
    pub roc_z: RocCurve,
    pub roc_z_given_y_pos: RocCurve,
}

fn validate_scores(scores: &[f64]) -> Result<()> {
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidInput("non-finite score".into()));
    }
    Ok(())
}

/// ROC curve of `scores` against binary `labels` in {-1, +1}.
///
/// Thresholds sweep the distinct score values descending; a point records
/// the rates of the classifier score >= t (sign(0) = +1 puts ties on the
/// positive side). The curve starts at (0,0) and ends at (1,1).
pub fn roc(scores: &[f64], labels: &[f64]) -> Result<RocCurve> {
    if scores.len() != labels.len() {
        return Err(Error::InvalidInput(format!(
            "{} scores vs {} labels",
            scores.len(),
            labels.len()
        )));
    }
    validate_scores(scores)?;
    let npos = labels.iter().filter(|&&y| y == 1.0).count();
    let nneg = labels.iter().filter(|&&y| y == -1.0).count();
    if npos + nneg != labels.len() {
        return Err(Error::InvalidInput("labels must be -1 or +1".into()));
    }
    if npos == 0 || nneg == 0 {
        return Err(Error::DegenerateLabel(format!(
            "roc needs both labels, got {npos} positive and {nneg} negative"
        )));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());

    let mut points = Vec::with_capacity(scores.len() + 1);
    points.push((0.0, 0.0));
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut k = 0;
    while k < order.len() {
        let s = scores[order[k]];
        // Consume the whole tie group: one threshold per distinct value.
        while k < order.len() && scores[order[k]] == s {
            if labels[order[k]] == 1.0 {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        points.push((fp as f64 / nneg as f64, tp as f64 / npos as f64));
    }
    Ok(RocCurve { points })
}

/// Trapezoidal area under the curve.
pub fn auc(curve: &RocCurve) -> f64 {
    let mut area = 0.0;
    for w in curve.points.windows(2) {
        let (x0, y0) = w[0];
        let (x1, y1) = w[1];
        area += (x1 - x0) * 0.5 * (y0 + y1);
    }
    area
}

/// Demographic-parity gap: the maximum over all thresholds of the
/// absolute difference in positive-prediction rate between the two
/// protected groups. Equals the largest vertical deviation of the z-ROC
/// from the diagonal.
pub fn dp_delta(scores: &[f64], z: &[f64]) -> Result<f64> {
    let has_pos = z.iter().any(|&v| v == 1.0);
    let has_neg = z.iter().any(|&v| v == -1.0);
    if !has_pos || !has_neg {
        return Err(Error::DegenerateGroup(
            "demographic parity needs both protected groups".into(),
        ));
    }
    let curve = roc(scores, z)?;
    Ok(curve
        .points
        .iter()
        .fold(0.0f64, |m, &(fpr, tpr)| m.max((tpr - fpr).abs())))
}

/// Equal-opportunity gap: the demographic-parity gap restricted to rows
/// whose true label is +1.
pub fn eo_delta(scores: &[f64], z: &[f64], y: &[f64]) -> Result<f64> {
    let mut s_sub = Vec::new();
    let mut z_sub = Vec::new();
    for i in 0..scores.len() {
        if y[i] == 1.0 {
            s_sub.push(scores[i]);
            z_sub.push(z[i]);
        }
    }
    if !z_sub.iter().any(|&v| v == 1.0) || !z_sub.iter().any(|&v| v == -1.0) {
        return Err(Error::DegenerateGroup(
            "equal opportunity needs both protected groups among y=+1 rows".into(),
        ));
    }
    dp_delta(&s_sub, &z_sub)
}

/// Full evaluation of one scored dataset.
pub fn evaluate(scores: &[f64], y: &[f64], z: &[f64]) -> Result<FairnessReport> {
    let roc_y = roc(scores, y)?;
    let roc_z = roc(scores, z)?;
    let mut s_sub = Vec::new();
    let mut z_sub = Vec::new();
    for i in 0..scores.len() {
        if y[i] == 1.0 {
            s_sub.push(scores[i]);
            z_sub.push(z[i]);
        }
    }
    let roc_zy = roc(&s_sub, &z_sub).map_err(|_| {
        Error::DegenerateGroup(
            "equal opportunity needs both protected groups among y=+1 rows".into(),
        )
    })?;
    Ok(FairnessReport {
        auc_y: auc(&roc_y),
        dp_delta: dp_delta(scores, z)?,
        eo_delta: eo_delta(scores, z, y)?,
        roc_y,
        roc_z,
        roc_z_given_y_pos: roc_zy,
    })
}
