//! Linear SVM trainers: unconstrained, mean-constrained, and the
//! spectrally constrained model.
//!
//! All three minimize hinge loss plus λ‖w‖². The mean-constrained model
//! (zsvm) additionally boxes the group-mean score difference to ±d. The
//! spectral model (ssvm) further penalizes the group covariance gap
//! through a scalar slack t weighted by μ: the indefinite quadratic
//! w'(Σ₊−Σ₋)w is split into its positive and negative spectral parts
//! and the concave side is linearized around the current iterate, so
//! each subproblem is a convex QCQP. Re-linearizing at the minimizer
//! and repeating drives the true penalized objective monotonically
//! down; this majorize-minimize loop is the training algorithm.

use serde::{Deserialize, Serialize};

use crate::fairness::{covariance_gap, mean_difference, CovarianceGap, GroupIndex};
use crate::linalg::{dot, Mat, SymmetricMatrix};
use crate::qp::{
    AffineRow, ConvexQuadraticProgram, QuadForm, QuadIneq, SolverOptions, SolverStatus,
};
use crate::{Error, Result};

/// Trained linear classifier; the score of a row x is x'w + b.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearModel {
    pub w: Vec<f64>,
    pub b: f64,
    pub lambda: f64,
    /// Mean-difference bound, when that constraint was active.
    pub d: Option<f64>,
    /// Covariance penalty weight, when the spectral loop ran.
    pub mu: Option<f64>,
    /// Subproblem solves performed (1 for the single-shot trainers).
    pub iterations: usize,
    /// Final value of the trained objective: hinge + λ‖w‖², plus
    /// μ·|w'(Σ₊−Σ₋)w| for the spectral model.
    pub final_objective: f64,
    /// Penalized objective after the initializer and after each
    /// accepted iterate; non-increasing.
    pub objective_trace: Vec<f64>,
}

/// Outer-loop controls for the spectral trainer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CcpConfig {
    pub max_outer_iterations: usize,
    /// Relative penalized-objective stagnation threshold.
    pub objective_change_tolerance: f64,
    /// Covariance penalty weight μ ≥ 0.
    pub mu: f64,
}

impl Default for CcpConfig {
    fn default() -> Self {
        CcpConfig {
            max_outer_iterations: 50,
            objective_change_tolerance: 1e-6,
            mu: 1.0,
        }
    }
}

impl CcpConfig {
    pub fn with_mu(mu: f64) -> Self {
        CcpConfig { mu, ..CcpConfig::default() }
    }

    fn validate(&self) -> Result<()> {
        if self.max_outer_iterations == 0 {
            return Err(Error::InvalidInput("max_outer_iterations must be ≥ 1".into()));
        }
        if !(self.objective_change_tolerance > 0.0) {
            return Err(Error::InvalidInput("objective tolerance must be > 0".into()));
        }
        if !(self.mu >= 0.0) {
            return Err(Error::InvalidInput("mu must be ≥ 0".into()));
        }
        Ok(())
    }
}

fn validate_training_inputs(x: &Mat, y: &[f64], lambda: f64) -> Result<()> {
    let n = x.rows();
    if n < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 rows, got {n}")));
    }
    if y.len() != n {
        return Err(Error::InvalidInput(format!(
            "{} rows but {} labels",
            n,
            y.len()
        )));
    }
    if x.data().iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite predictor value".into()));
    }
    if y.iter().any(|&v| v != 1.0 && v != -1.0) {
        return Err(Error::InvalidInput("labels must be -1 or +1".into()));
    }
    if !y.contains(&1.0) || !y.contains(&-1.0) {
        return Err(Error::DegenerateLabel("training needs both labels".into()));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidInput(format!("lambda must be > 0, got {lambda}")));
    }
    Ok(())
}

/// Variable layout shared by every subproblem: w, then b, then the n
/// hinge slacks, then (optionally) the covariance slack t.
struct Layout {
    p: usize,
    n: usize,
    with_t: bool,
}

impl Layout {
    fn b(&self) -> usize {
        self.p
    }
    fn u(&self, i: usize) -> usize {
        self.p + 1 + i
    }
    fn t(&self) -> usize {
        debug_assert!(self.with_t);
        self.p + 1 + self.n
    }
    fn dim(&self) -> usize {
        self.p + 1 + self.n + usize::from(self.with_t)
    }
}

/// Linearized majorant pair for the covariance slack at expansion point
/// `w_k`: the two convex constraints
///   w'U₊w − 2(U₋w_k)'w + w_k'U₋w_k ≤ t
///   w'U₋w − 2(U₊w_k)'w + w_k'U₊w_k ≤ t
/// whose maximum upper-bounds |w'(Σ₊−Σ₋)w| with equality at w = w_k.
fn majorant_constraints(
    gap: &CovarianceGap,
    w_k: &[f64],
    layout: &Layout,
) -> Vec<QuadIneq> {
    let p = layout.p;
    let w_support: Vec<usize> = (0..p).collect();
    let mut out = Vec::with_capacity(2);
    for (quad_part, lin_part) in [
        (&gap.split.u_plus, &gap.split.u_minus),
        (&gap.split.u_minus, &gap.split.u_plus),
    ] {
        let lin_at_wk = lin_part.matvec(w_k);
        let mut support: Vec<usize> = w_support.clone();
        support.push(layout.t());
        let mut coeffs: Vec<f64> = lin_at_wk.iter().map(|v| -2.0 * v).collect();
        coeffs.push(-1.0);
        let rhs = -lin_part.quadratic_form(w_k);
        out.push(QuadIneq {
            quad: QuadForm::new(w_support.clone(), quad_part.clone()),
            lin: AffineRow::new(support, coeffs, rhs),
        });
    }
    out
}

/// Assembles the shared QP skeleton: hinge rows, slack bounds, and the
/// regularized objective, with optional mean-difference box and
/// covariance majorants.
fn build_subproblem(
    x: &Mat,
    y: &[f64],
    lambda: f64,
    mean_dir: Option<(&[f64], f64)>,
    covariance: Option<(&CovarianceGap, &[f64], f64)>,
) -> ConvexQuadraticProgram {
    let n = x.rows();
    let p = x.cols();
    let layout = Layout { p, n, with_t: covariance.is_some() };
    let mut prob = ConvexQuadraticProgram::new(layout.dim());

    let reg = SymmetricMatrix::from_fn(p, |i, j| if i == j { lambda } else { 0.0 });
    prob.objective_quad = Some(QuadForm::new((0..p).collect(), reg));
    for i in 0..n {
        prob.objective_lin[layout.u(i)] = 1.0;
        prob.lower[layout.u(i)] = 0.0;
    }

    // Hinge: y_i(x_i'w + b) ≥ 1 − u_i, written as a ≤ row.
    for i in 0..n {
        let mut support: Vec<usize> = (0..p).collect();
        support.push(layout.b());
        support.push(layout.u(i));
        let mut coeffs: Vec<f64> = (0..p).map(|j| -y[i] * x.get(i, j)).collect();
        coeffs.push(-y[i]);
        coeffs.push(-1.0);
        prob.inequalities.push(AffineRow::new(support, coeffs, -1.0));
    }

    if let Some((m, d)) = mean_dir {
        let support: Vec<usize> = (0..p).collect();
        if d == 0.0 {
            prob.equalities.push(AffineRow::new(support, m.to_vec(), 0.0));
        } else {
            prob.inequalities.push(AffineRow::new(
                support.clone(),
                m.to_vec(),
                d,
            ));
            prob.inequalities.push(AffineRow::new(
                support,
                m.iter().map(|v| -v).collect(),
                d,
            ));
        }
    }

    if let Some((gap, w_k, mu)) = covariance {
        prob.objective_lin[layout.t()] = mu;
        prob.quad_inequalities = majorant_constraints(gap, w_k, &layout);
    }
    prob
}

fn solve_svm_qp(
    prob: &ConvexQuadraticProgram,
    initial_point: Option<Vec<f64>>,
) -> Result<crate::qp::SolverResult> {
    let opts = SolverOptions { initial_point, ..SolverOptions::default() };
    let res = crate::qp::solve_with(prob, &opts)?;
    match res.status {
        SolverStatus::Converged => Ok(res),
        SolverStatus::MaxIterations => Err(Error::Solver(format!(
            "interior-point stalled: kkt residual {:.3e}",
            res.kkt_residual
        ))),
        SolverStatus::InfeasibleDetected => {
            Err(Error::Solver("constraints infeasible".into()))
        }
    }
}

fn hinge_sum(x: &Mat, y: &[f64], w: &[f64], b: f64) -> f64 {
    (0..x.rows())
        .map(|i| (1.0 - y[i] * (dot(x.row(i), w) + b)).max(0.0))
        .sum()
}

/// Hinge + λ‖w‖² + μ|w'(Σ₊−Σ₋)w|: the quantity the spectral loop
/// monotonically decreases.
fn penalized_objective(
    x: &Mat,
    y: &[f64],
    lambda: f64,
    mu: f64,
    gap: &CovarianceGap,
    w: &[f64],
    b: f64,
) -> f64 {
    hinge_sum(x, y, w, b) + lambda * dot(w, w) + mu * gap.gap.quadratic_form(w).abs()
}

/// Plain soft-margin linear SVM.
pub fn train_lsvm(x: &Mat, y: &[f64], lambda: f64) -> Result<LinearModel> {
    validate_training_inputs(x, y, lambda)?;
    let prob = build_subproblem(x, y, lambda, None, None);
    let res = solve_svm_qp(&prob, None)?;
    let p = x.cols();
    let w = res.solution[..p].to_vec();
    let b = res.solution[p];
    let objective = hinge_sum(x, y, &w, b) + lambda * dot(&w, &w);
    Ok(LinearModel {
        w,
        b,
        lambda,
        d: None,
        mu: None,
        iterations: 1,
        final_objective: objective,
        objective_trace: vec![objective],
    })
}

/// Linear SVM with the group-mean score difference boxed to ±d
/// (an equality when d = 0).
pub fn train_zsvm(x: &Mat, y: &[f64], z: &[f64], lambda: f64, d: f64) -> Result<LinearModel> {
    validate_training_inputs(x, y, lambda)?;
    if !(d >= 0.0) || !d.is_finite() {
        return Err(Error::InvalidInput(format!("d must be finite and ≥ 0, got {d}")));
    }
    let _groups = GroupIndex::from_z(z)?;
    if z.len() != x.rows() {
        return Err(Error::InvalidInput("z length mismatch".into()));
    }
    let m = mean_difference(x, z)?;
    let prob = build_subproblem(x, y, lambda, Some((&m, d)), None);
    let res = solve_svm_qp(&prob, None)?;
    let p = x.cols();
    let w = res.solution[..p].to_vec();
    let b = res.solution[p];
    let objective = hinge_sum(x, y, &w, b) + lambda * dot(&w, &w);
    Ok(LinearModel {
        w,
        b,
        lambda,
        d: Some(d),
        mu: None,
        iterations: 1,
        final_objective: objective,
        objective_trace: vec![objective],
    })
}

/// Spectral fair SVM: mean-difference box plus the covariance penalty,
/// trained by the majorize-minimize loop described at module level.
///
/// Initialized at the mean-constrained solution; each accepted iterate
/// can only decrease the penalized objective, and the loop stops on
/// relative stagnation below the configured tolerance, on the iteration
/// cap, or on a (numerical) objective increase, returning the last
/// accepted iterate.
pub fn train_ssvm(
    x: &Mat,
    y: &[f64],
    z: &[f64],
    lambda: f64,
    d: f64,
    ccp: &CcpConfig,
) -> Result<LinearModel> {
    validate_training_inputs(x, y, lambda)?;
    ccp.validate()?;
    if !(d >= 0.0) || !d.is_finite() {
        return Err(Error::InvalidInput(format!("d must be finite and ≥ 0, got {d}")));
    }

    // Initialize from the mean-constrained model; an infeasibility
    // report at d = 0 can only be numerical (w = 0 satisfies the
    // equality), so retry with a hairline box.
    let init = match train_zsvm(x, y, z, lambda, d) {
        Ok(m) => m,
        Err(Error::Solver(_)) if d == 0.0 => train_zsvm(x, y, z, lambda, 1e-8)?,
        Err(e) => return Err(e),
    };

    if ccp.mu == 0.0 {
        // Zero penalty: the slack term vanishes and every subproblem is
        // exactly the initializer's program.
        return Ok(LinearModel {
            mu: Some(0.0),
            d: Some(d),
            ..init
        });
    }

    let gap = covariance_gap(x, z)?;
    let m = mean_difference(x, z)?;
    let p = x.cols();
    let n = x.rows();
    let layout = Layout { p, n, with_t: true };

    let mut w_acc = init.w.clone();
    let mut b_acc = init.b;
    let mut f_acc = penalized_objective(x, y, lambda, ccp.mu, &gap, &w_acc, b_acc);
    let mut trace = vec![f_acc];
    let mut accepted = 0usize;

    for k in 1..=ccp.max_outer_iterations {
        let prob = build_subproblem(x, y, lambda, Some((&m, d)), Some((&gap, &w_acc, ccp.mu)));

        // Warm start near the expansion point. The expansion point itself
        // sits ON the mean box (the previous solve left it there), and a
        // start hugging a boundary freezes the interior-point line
        // search, so pull w slightly inward; u and t get explicit slack.
        let w0: Vec<f64> = w_acc.iter().map(|v| 0.99 * v).collect();
        let mut x0 = vec![0.0; layout.dim()];
        x0[..p].copy_from_slice(&w0);
        x0[layout.b()] = b_acc;
        for i in 0..n {
            x0[layout.u(i)] = (1.0 - y[i] * (dot(x.row(i), &w0) + b_acc)).max(0.0) + 1.0;
        }
        let majorant_at = |quad: &SymmetricMatrix, lin: &SymmetricMatrix| {
            quad.quadratic_form(&w0) - 2.0 * dot(&lin.matvec(&w_acc), &w0)
                + lin.quadratic_form(&w_acc)
        };
        x0[layout.t()] = majorant_at(&gap.split.u_plus, &gap.split.u_minus)
            .max(majorant_at(&gap.split.u_minus, &gap.split.u_plus))
            + 1.0;

        let res = solve_svm_qp(&prob, Some(x0)).map_err(|e| Error::Training {
            iteration: k,
            message: e.to_string(),
        })?;
        let w_new = res.solution[..p].to_vec();
        let b_new = res.solution[layout.b()];
        let f_new = penalized_objective(x, y, lambda, ccp.mu, &gap, &w_new, b_new);

        if f_new > f_acc + 1e-10 * f_acc.abs().max(1.0) {
            // The majorization argument forbids a true increase; seeing
            // one means solver noise dominates, so keep the last
            // accepted iterate.
            break;
        }
        let stalled = (f_acc - f_new).abs() <= ccp.objective_change_tolerance * f_acc.abs().max(1.0);
        w_acc = w_new;
        b_acc = b_new;
        f_acc = f_new;
        trace.push(f_acc);
        accepted = k;
        if stalled {
            break;
        }
    }

    Ok(LinearModel {
        w: w_acc,
        b: b_acc,
        lambda,
        d: Some(d),
        mu: Some(ccp.mu),
        iterations: accepted.max(1),
        final_objective: f_acc,
        objective_trace: trace,
    })
}

/// Pre-threshold scores x_i'w + b.
pub fn decision_values(model: &LinearModel, x: &Mat) -> Result<Vec<f64>> {
    if x.cols() != model.w.len() {
        return Err(Error::InvalidInput(format!(
            "model has {} coefficients but data has {} columns",
            model.w.len(),
            x.cols()
        )));
    }
    Ok((0..x.rows()).map(|i| dot(x.row(i), &model.w) + model.b).collect())
}
