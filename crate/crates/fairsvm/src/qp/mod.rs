//! Convex solver for the two problem shapes the trainers produce:
//! box/equality-constrained QPs (kernel dual, plain primal SVM with hinge
//! slacks) and QPs with additional convex quadratic inequality constraints
//! (the convex-concave subproblems).
//!
//! One primal-dual interior-point engine covers both. Quadratic inequality
//! constraints enter the Newton system directly through their gradients
//! and Hessians, so no cone reformulation is needed. Problems are stated
//! with objective `x'Px + q'x` (no 1/2 factor) and quadratic constraints
//! `x'Q_k x + q_k'x <= r_k`, matching how the trainers write them down.
//!
//! Affine rows are sparse (support + coefficients) because the primal SVM
//! problems carry thousands of hinge rows that each touch only a handful
//! of coordinates; the engine exploits that structure heavily (see
//! [`ipm`]).

mod ipm;

use crate::linalg::{spectral_split_auto, SymmetricMatrix};
use crate::{Error, Result};

/// A symmetric quadratic form restricted to a subset of coordinates:
/// contributes `x_S' M x_S` where `S = support`.
#[derive(Debug, Clone)]
pub struct QuadForm {
    pub support: Vec<usize>,
    pub matrix: SymmetricMatrix,
}

impl QuadForm {
    pub fn new(support: Vec<usize>, matrix: SymmetricMatrix) -> Self {
        assert_eq!(support.len(), matrix.order(), "support/matrix mismatch");
        QuadForm { support, matrix }
    }

    /// x_S' M x_S.
    pub fn value(&self, x: &[f64]) -> f64 {
        let xs: Vec<f64> = self.support.iter().map(|&j| x[j]).collect();
        self.matrix.quadratic_form(&xs)
    }

    /// Adds `scale * 2 M x_S` into `out` at the support coordinates
    /// (the gradient of the form, scaled).
    pub fn add_scaled_grad(&self, x: &[f64], scale: f64, out: &mut [f64]) {
        let xs: Vec<f64> = self.support.iter().map(|&j| x[j]).collect();
        let mx = self.matrix.matvec(&xs);
        for (k, &j) in self.support.iter().enumerate() {
            out[j] += scale * 2.0 * mx[k];
        }
    }
}

/// Sparse affine row `sum_k coeffs[k] * x[support[k]]` with a right-hand
/// side; used for both equalities (= rhs) and inequalities (<= rhs).
#[derive(Debug, Clone)]
pub struct AffineRow {
    pub support: Vec<usize>,
    pub coeffs: Vec<f64>,
    pub rhs: f64,
}

impl AffineRow {
    pub fn new(support: Vec<usize>, coeffs: Vec<f64>, rhs: f64) -> Self {
        assert_eq!(support.len(), coeffs.len(), "support/coeff mismatch");
        AffineRow { support, coeffs, rhs }
    }

    /// Dense row constructor that drops zero coefficients.
    pub fn from_dense(row: &[f64], rhs: f64) -> Self {
        let mut support = Vec::new();
        let mut coeffs = Vec::new();
        for (j, &c) in row.iter().enumerate() {
            if c != 0.0 {
                support.push(j);
                coeffs.push(c);
            }
        }
        AffineRow { support, coeffs, rhs }
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (k, &j) in self.support.iter().enumerate() {
            acc += self.coeffs[k] * x[j];
        }
        acc
    }
}

/// Convex quadratic inequality `x'Qx + q'x <= rhs` with `Q` PSD.
#[derive(Debug, Clone)]
pub struct QuadIneq {
    pub quad: QuadForm,
    pub lin: AffineRow,
}

impl QuadIneq {
    /// Constraint value g(x) = x'Qx + q'x - rhs (feasible iff <= 0).
    pub fn g(&self, x: &[f64]) -> f64 {
        self.quad.value(x) + self.lin.dot(x) - self.lin.rhs
    }
}

/// A convex QP/QCQP in the form
///
/// ```text
/// minimize    x'Px + q'x
/// subject to  A x  = b          (equalities)
///             G x <= h          (affine inequalities)
///             x'Q_k x + q_k'x <= r_k   (quadratic inequalities, Q_k PSD)
///             lower <= x <= upper      (optional per-coordinate box)
/// ```
#[derive(Debug, Clone)]
pub struct ConvexQuadraticProgram {
    pub dim: usize,
    pub objective_quad: Option<QuadForm>,
    pub objective_lin: Vec<f64>,
    pub equalities: Vec<AffineRow>,
    pub inequalities: Vec<AffineRow>,
    pub quad_inequalities: Vec<QuadIneq>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ConvexQuadraticProgram {
    pub fn new(dim: usize) -> Self {
        ConvexQuadraticProgram {
            dim,
            objective_quad: None,
            objective_lin: vec![0.0; dim],
            equalities: Vec::new(),
            inequalities: Vec::new(),
            quad_inequalities: Vec::new(),
            lower: vec![f64::NEG_INFINITY; dim],
            upper: vec![f64::INFINITY; dim],
        }
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        let mut v = crate::linalg::dot(&self.objective_lin, x);
        if let Some(p) = &self.objective_quad {
            v += p.value(x);
        }
        v
    }

    /// Gradient of the objective, dense.
    pub fn objective_grad(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.objective_lin.clone();
        if let Some(p) = &self.objective_quad {
            p.add_scaled_grad(x, 1.0, &mut g);
        }
        g
    }

    /// Structural and PSD validation. Called by the trainers' tests and on
    /// freshly built subproblems under debug assertions; not in the solve
    /// hot path because the builders construct PSD terms by construction
    /// and the eigendecomposition here would double their cost.
    pub fn validate(&self) -> Result<()> {
        let dim = self.dim;
        let check_support = |s: &[usize], what: &str| -> Result<()> {
            for &j in s {
                if j >= dim {
                    return Err(Error::InvalidInput(format!(
                        "{what}: coordinate {j} out of range (dim {dim})"
                    )));
                }
            }
            Ok(())
        };
        if self.objective_lin.len() != dim || self.lower.len() != dim || self.upper.len() != dim {
            return Err(Error::InvalidInput("vector length != dim".into()));
        }
        for j in 0..dim {
            if self.lower[j] > self.upper[j] {
                return Err(Error::InvalidInput(format!(
                    "empty box at coordinate {j}: [{}, {}]",
                    self.lower[j], self.upper[j]
                )));
            }
        }
        let psd_ok = |m: &SymmetricMatrix| -> Result<bool> {
            let split = spectral_split_auto(m)?;
            Ok(split.u_minus.max_abs() <= 1e-9 * m.max_abs().max(1.0))
        };
        if let Some(p) = &self.objective_quad {
            check_support(&p.support, "objective quad")?;
            if !psd_ok(&p.matrix)? {
                return Err(Error::InvalidInput("objective quadratic term is not PSD".into()));
            }
        }
        for (k, row) in self.equalities.iter().enumerate() {
            check_support(&row.support, &format!("equality {k}"))?;
        }
        for (k, row) in self.inequalities.iter().enumerate() {
            check_support(&row.support, &format!("inequality {k}"))?;
        }
        for (k, qc) in self.quad_inequalities.iter().enumerate() {
            check_support(&qc.quad.support, &format!("quad inequality {k}"))?;
            check_support(&qc.lin.support, &format!("quad inequality {k} linear part"))?;
            if !psd_ok(&qc.quad.matrix)? {
                return Err(Error::InvalidInput(format!(
                    "quad inequality {k} matrix is not PSD"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverStatus {
    Converged,
    MaxIterations,
    InfeasibleDetected,
}

#[derive(Debug, Clone)]
pub struct SolverResult {
    pub solution: Vec<f64>,
    pub objective: f64,
    /// Max violation over equalities, affine/quadratic inequalities, and
    /// box bounds.
    pub feas_residual: f64,
    /// Scaled max of dual stationarity residual and surrogate duality gap.
    pub kkt_residual: f64,
    pub iterations: usize,
    pub status: SolverStatus,
    /// Inequality multipliers in engine order: affine rows, quadratic
    /// rows, then lower/upper bound rows per bounded coordinate.
    pub ineq_duals: Vec<f64>,
    pub eq_duals: Vec<f64>,
    /// Per-iteration (before, after) values of the residual-norm merit
    /// function the line search descends.
    pub merit_trace: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub feas_tol: f64,
    pub kkt_tol: f64,
    pub max_iter: usize,
    pub initial_point: Option<Vec<f64>>,
    /// Turns off the structural elimination of sparse slack coordinates in
    /// the Newton solve; used to cross-check the two code paths.
    pub disable_elimination: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            feas_tol: 1e-7,
            kkt_tol: 1e-7,
            // Generous: iterations are cheap after slack elimination, and
            // steps shrink to a few percent near strongly active
            // constraints, where the residual decays slowly.
            max_iter: 600,
            initial_point: None,
            disable_elimination: false,
        }
    }
}

/// Solves the program with default options.
pub fn solve(problem: &ConvexQuadraticProgram) -> Result<SolverResult> {
    solve_with(problem, &SolverOptions::default())
}

/// Solves the program. Infeasibility is reported through the status flag,
/// not as an error; errors mean the input was malformed or the linear
/// algebra broke down.
pub fn solve_with(problem: &ConvexQuadraticProgram, options: &SolverOptions) -> Result<SolverResult> {
    ipm::solve(problem, options)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn active_bound_minimum() {
        // minimize x^2 subject to x >= 1
        let mut p = ConvexQuadraticProgram::new(1);
        p.objective_quad = Some(QuadForm::new(vec![0], SymmetricMatrix::diag(&[1.0])));
        p.lower[0] = 1.0;
        let r = solve(&p).unwrap();
        assert_eq!(r.status, SolverStatus::Converged);
        assert_close(r.solution[0], 1.0, 1e-6);
        assert_close(r.objective, 1.0, 1e-6);
    }

    #[test]
    fn unconstrained_stationarity() {
        // minimize x'diag(1,2)x - (2,4).x  -> x = (1,1)
        let mut p = ConvexQuadraticProgram::new(2);
        p.objective_quad = Some(QuadForm::new(vec![0, 1], SymmetricMatrix::diag(&[1.0, 2.0])));
        p.objective_lin = vec![-2.0, -4.0];
        let r = solve(&p).unwrap();
        assert_eq!(r.status, SolverStatus::Converged);
        assert_close(r.solution[0], 1.0, 1e-8);
        assert_close(r.solution[1], 1.0, 1e-8);
    }

    #[test]
    fn two_point_svm_primal() {
        // Points x1 = 1 (y = +1), x2 = -1 (y = -1), lambda = 1.
        // Variables (w, b, u1, u2): minimize u1 + u2 + w^2
        // s.t. u_i >= 1 - y_i(w x_i + b), u_i >= 0.
        // Analytic optimum: w = 1, b = 0, objective 1.
        let mut p = ConvexQuadraticProgram::new(4);
        p.objective_quad = Some(QuadForm::new(vec![0], SymmetricMatrix::diag(&[1.0])));
        p.objective_lin = vec![0.0, 0.0, 1.0, 1.0];
        // -y_i(w x_i + b) - u_i <= -1
        p.inequalities.push(AffineRow::new(vec![0, 1, 2], vec![-1.0, -1.0, -1.0], -1.0));
        p.inequalities.push(AffineRow::new(vec![0, 1, 3], vec![-1.0, 1.0, -1.0], -1.0));
        p.lower[2] = 0.0;
        p.lower[3] = 0.0;
        // The optimum sits at the hinge kink, where primal accuracy scales
        // as the square root of the duality gap; tighten the gap.
        let opts = SolverOptions {
            feas_tol: 1e-9,
            kkt_tol: 1e-9,
            ..Default::default()
        };
        let r = solve_with(&p, &opts).unwrap();
        assert_eq!(r.status, SolverStatus::Converged);
        assert_close(r.solution[0], 1.0, 1e-4);
        assert_close(r.solution[1], 0.0, 1e-4);
        assert_close(r.objective, 1.0, 1e-6);
    }

    #[test]
    fn toy_qcqp() {
        // minimize t subject to w^2 <= t, w >= 2  ->  w = 2, t = 4.
        let mut p = ConvexQuadraticProgram::new(2);
        p.objective_lin = vec![0.0, 1.0];
        p.quad_inequalities.push(QuadIneq {
            quad: QuadForm::new(vec![0], SymmetricMatrix::diag(&[1.0])),
            lin: AffineRow::new(vec![1], vec![-1.0], 0.0),
        });
        p.lower[0] = 2.0;
        let r = solve(&p).unwrap();
        assert_eq!(r.status, SolverStatus::Converged);
        assert_close(r.solution[0], 2.0, 1e-5);
        assert_close(r.solution[1], 4.0, 1e-4);
    }

    #[test]
    fn equality_constrained_projection() {
        // minimize ||x||^2 s.t. x0 + x1 = 2  ->  x = (1,1)
        let mut p = ConvexQuadraticProgram::new(2);
        p.objective_quad = Some(QuadForm::new(vec![0, 1], SymmetricMatrix::diag(&[1.0, 1.0])));
        p.equalities.push(AffineRow::new(vec![0, 1], vec![1.0, 1.0], 2.0));
        let r = solve(&p).unwrap();
        assert_eq!(r.status, SolverStatus::Converged);
        assert_close(r.solution[0], 1.0, 1e-7);
        assert_close(r.solution[1], 1.0, 1e-7);
    }

    #[test]
    fn infeasible_problem_is_flagged_not_thrown() {
        // x <= -1 and x >= 1 cannot hold together.
        let mut p = ConvexQuadraticProgram::new(1);
        p.objective_quad = Some(QuadForm::new(vec![0], SymmetricMatrix::diag(&[1.0])));
        p.inequalities.push(AffineRow::new(vec![0], vec![1.0], -1.0));
        p.inequalities.push(AffineRow::new(vec![0], vec![-1.0], -1.0));
        let r = solve(&p).unwrap();
        assert_eq!(r.status, SolverStatus::InfeasibleDetected);
    }

    #[test]
    fn validate_rejects_indefinite_objective() {
        let mut p = ConvexQuadraticProgram::new(2);
        p.objective_quad = Some(QuadForm::new(
            vec![0, 1],
            SymmetricMatrix::diag(&[1.0, -1.0]),
        ));
        assert!(p.validate().is_err());
    }

    #[test]
    fn validate_rejects_out_of_range_support() {
        let mut p = ConvexQuadraticProgram::new(2);
        p.inequalities.push(AffineRow::new(vec![5], vec![1.0], 0.0));
        assert!(p.validate().is_err());
    }

    #[test]
    fn validate_accepts_well_formed_qcqp() {
        let mut p = ConvexQuadraticProgram::new(3);
        p.objective_quad = Some(QuadForm::new(vec![0, 1], SymmetricMatrix::diag(&[1.0, 2.0])));
        p.quad_inequalities.push(QuadIneq {
            quad: QuadForm::new(vec![0, 1], SymmetricMatrix::diag(&[1.0, 0.5])),
            lin: AffineRow::new(vec![2], vec![-1.0], 0.0),
        });
        p.equalities.push(AffineRow::new(vec![0, 2], vec![1.0, 1.0], 1.0));
        assert!(p.validate().is_ok());
    }
}
