//! Primal-dual interior-point engine.
//!
//! Classic log-barrier primal-dual scheme: at each iterate the barrier
//! parameter is set from the surrogate duality gap, one Newton step is
//! taken on the perturbed KKT residual, and a backtracking line search
//! keeps the multipliers positive, keeps every inequality strictly
//! satisfied, and forces the residual norm down (that residual norm is the
//! merit function whose before/after values the solver reports).
//! Equalities are handled infeasible-start, so the initial point only has
//! to be strictly inside the inequality region; when the slack-inflation
//! heuristic cannot produce such a point, a phase-1 problem (minimize the
//! worst violation) is solved with the same engine, and primal
//! infeasibility is declared when that problem cannot reach a negative
//! value.
//!
//! The primal SVM problems routed here carry thousands of hinge-slack
//! coordinates: each appears in one multi-coordinate inequality row, has
//! no objective curvature coupling, and sits in no quadratic constraint.
//! The Newton solve detects such coordinates structurally and eliminates
//! them through a Schur complement onto the small dense block, so the
//! factorization cost is driven by the feature count, not the sample
//! count. `disable_elimination` routes around this for cross-checking.

use crate::linalg::{lu_solve, norm_inf, Mat};
use crate::qp::{
    AffineRow, ConvexQuadraticProgram, SolverOptions, SolverResult, SolverStatus,
};
use crate::{Error, Result};

const BARRIER_GROWTH: f64 = 10.0;
const REG: f64 = 1e-10;
const ARMIJO: f64 = 0.01;
const BACKTRACK: f64 = 0.5;
const MAX_BACKTRACKS: usize = 60;
const BOUNDARY_FRACTION: f64 = 0.99;
/// No inequality slack may lose more than this fraction of its value in
/// one step; keeps iterates off constraint boundaries while the residual
/// is still large (a slammed slack freezes the line search for good).
const SLACK_KEEP: f64 = 0.01;
/// Per-iteration cap on barrier-parameter growth. The gap-driven rule
/// alone can sharpen the barrier several orders of magnitude in a burst,
/// leaving iterates far below the central path against a boundary, where
/// steps collapse; bounded growth lets the centering keep up.
const BARRIER_STEP_CAP: f64 = 3.0;
/// Interior margin phase 1 aims for before handing over; the final
/// iterate is still accepted down to a hairline margin when the problem
/// is too tight for this one.
const PHASE1_MARGIN: f64 = 1e-3;

/// One barrier inequality, referencing problem storage.
#[derive(Debug, Clone, Copy)]
enum Ineq {
    /// `inequalities[idx]` as a'x - rhs <= 0.
    Affine(usize),
    /// `quad_inequalities[idx]` as x'Qx + q'x - rhs <= 0.
    Quad(usize),
    /// lower[j] - x_j <= 0.
    Lower(usize),
    /// x_j - upper[j] <= 0.
    Upper(usize),
}

/// Support bookkeeping for one quadratic inequality: the sorted union of
/// its quadratic and linear supports, with positions of each part.
struct QuadMeta {
    total: Vec<usize>,
    quad_pos: Vec<usize>,
    lin_pos: Vec<usize>,
}

/// Structural elimination info for the Newton solve.
struct Elim {
    dense: Vec<usize>,
    dense_pos: Vec<usize>,
    elim_pos: Vec<usize>,
    n_elim: usize,
}

struct Engine<'a> {
    prob: &'a ConvexQuadraticProgram,
    /// Problem equalities plus rows pinning coordinates whose box
    /// degenerates to a point.
    eqs: Vec<AffineRow>,
    ineqs: Vec<Ineq>,
    quad_meta: Vec<QuadMeta>,
    elim: Elim,
}

pub(super) fn solve(prob: &ConvexQuadraticProgram, opts: &SolverOptions) -> Result<SolverResult> {
    let dim = prob.dim;
    if prob.objective_lin.len() != dim || prob.lower.len() != dim || prob.upper.len() != dim {
        return Err(Error::InvalidInput(
            "objective/bound vector length does not match problem dimension".into(),
        ));
    }
    for j in 0..dim {
        if prob.lower[j] > prob.upper[j] {
            return Err(Error::InvalidInput(format!(
                "empty box at coordinate {j}"
            )));
        }
    }
    let engine = Engine::new(prob, opts.disable_elimination);
    if engine.ineqs.is_empty() {
        return engine.solve_without_inequalities(opts);
    }

    // Starting point: caller-provided if strictly feasible, else the box
    // heuristic, else phase 1.
    let x0 = match &opts.initial_point {
        Some(x) if x.len() == dim && engine.strictly_feasible(x, 0.0) => x.clone(),
        _ => {
            let xh = engine.heuristic_point();
            if engine.strictly_feasible(&xh, -PHASE1_MARGIN) {
                xh
            } else {
                match engine.phase1(&xh, opts)? {
                    Some(x) => x,
                    None => {
                        return Ok(engine.build_result(
                            &xh,
                            &engine.initial_duals(&xh),
                            &vec![0.0; engine.eqs.len()],
                            0,
                            SolverStatus::InfeasibleDetected,
                            Vec::new(),
                        ));
                    }
                }
            }
        }
    };
    let lam0 = engine.initial_duals(&x0);
    engine.run(x0, lam0, opts, None)
}

impl<'a> Engine<'a> {
    fn new(prob: &'a ConvexQuadraticProgram, disable_elimination: bool) -> Self {
        let dim = prob.dim;
        let mut eqs = prob.equalities.clone();
        let mut pinned = vec![false; dim];
        for j in 0..dim {
            if prob.lower[j] == prob.upper[j] && prob.lower[j].is_finite() {
                pinned[j] = true;
                eqs.push(AffineRow::new(vec![j], vec![1.0], prob.lower[j]));
            }
        }

        let mut ineqs = Vec::new();
        for i in 0..prob.inequalities.len() {
            ineqs.push(Ineq::Affine(i));
        }
        for i in 0..prob.quad_inequalities.len() {
            ineqs.push(Ineq::Quad(i));
        }
        for j in 0..dim {
            if pinned[j] {
                continue;
            }
            if prob.lower[j].is_finite() {
                ineqs.push(Ineq::Lower(j));
            }
            if prob.upper[j].is_finite() {
                ineqs.push(Ineq::Upper(j));
            }
        }

        let quad_meta: Vec<QuadMeta> = prob
            .quad_inequalities
            .iter()
            .map(|qc| {
                let mut total: Vec<usize> = qc
                    .quad
                    .support
                    .iter()
                    .chain(qc.lin.support.iter())
                    .copied()
                    .collect();
                total.sort_unstable();
                total.dedup();
                let pos = |j: usize| total.binary_search(&j).unwrap();
                QuadMeta {
                    quad_pos: qc.quad.support.iter().map(|&j| pos(j)).collect(),
                    lin_pos: qc.lin.support.iter().map(|&j| pos(j)).collect(),
                    total,
                }
            })
            .collect();

        let elim = if disable_elimination {
            Elim::dense_only(dim)
        } else {
            Elim::detect(prob, &eqs, &quad_meta)
        };

        Engine {
            prob,
            eqs,
            ineqs,
            quad_meta,
            elim,
        }
    }

    fn heuristic_point(&self) -> Vec<f64> {
        let dim = self.prob.dim;
        let mut x = vec![0.0; dim];
        for j in 0..dim {
            let lo = self.prob.lower[j];
            let up = self.prob.upper[j];
            x[j] = match (lo.is_finite(), up.is_finite()) {
                (true, true) => 0.5 * (lo + up),
                (true, false) => lo + 1.0,
                (false, true) => up - 1.0,
                (false, false) => 0.0,
            };
        }
        x
    }

    /// Centered multipliers 1/(-g), clamped: a start hugging a boundary
    /// must not seed a multiplier so large that the first Newton systems
    /// are numerically singular.
    fn initial_duals(&self, x: &[f64]) -> Vec<f64> {
        // Centered guess 1/slack, tightly capped: initial multipliers enter
        // the dual residual linearly, so a start with tiny slacks would
        // otherwise inject huge residual mass the iteration then has to
        // grind away. Low duals are cheap to raise (only negative steps
        // are capped by positivity).
        self.ineqs
            .iter()
            .enumerate()
            .map(|(i, _)| {
                let g = self.g_single(i, x);
                if g < 0.0 {
                    (-1.0 / g).clamp(1e-3, 1e1)
                } else {
                    1.0
                }
            })
            .collect()
    }

    fn g_single(&self, i: usize, x: &[f64]) -> f64 {
        match self.ineqs[i] {
            Ineq::Affine(r) => {
                let row = &self.prob.inequalities[r];
                row.dot(x) - row.rhs
            }
            Ineq::Quad(q) => self.prob.quad_inequalities[q].g(x),
            Ineq::Lower(j) => self.prob.lower[j] - x[j],
            Ineq::Upper(j) => x[j] - self.prob.upper[j],
        }
    }

    fn g_all(&self, x: &[f64]) -> Vec<f64> {
        (0..self.ineqs.len()).map(|i| self.g_single(i, x)).collect()
    }

    fn strictly_feasible(&self, x: &[f64], margin: f64) -> bool {
        (0..self.ineqs.len()).all(|i| {
            let g = self.g_single(i, x);
            g.is_finite() && g < margin
        })
    }

    /// Gradient vectors of the quadratic inequalities at `x`, each over
    /// its total support.
    fn quad_grads(&self, x: &[f64]) -> Vec<Vec<f64>> {
        self.prob
            .quad_inequalities
            .iter()
            .zip(&self.quad_meta)
            .map(|(qc, meta)| {
                let mut g = vec![0.0; meta.total.len()];
                let xs: Vec<f64> = qc.quad.support.iter().map(|&j| x[j]).collect();
                let mx = qc.quad.matrix.matvec(&xs);
                for (k, &p) in meta.quad_pos.iter().enumerate() {
                    g[p] += 2.0 * mx[k];
                }
                for (k, &p) in meta.lin_pos.iter().enumerate() {
                    g[p] += qc.lin.coeffs[k];
                }
                g
            })
            .collect()
    }

    /// Adds `scale * grad g_i(x)` into `out`; `grads` is the cache from
    /// [`Self::quad_grads`] at the same `x`.
    fn add_grad(&self, i: usize, scale: f64, grads: &[Vec<f64>], out: &mut [f64]) {
        match self.ineqs[i] {
            Ineq::Affine(r) => {
                let row = &self.prob.inequalities[r];
                for (k, &j) in row.support.iter().enumerate() {
                    out[j] += scale * row.coeffs[k];
                }
            }
            Ineq::Quad(q) => {
                let meta = &self.quad_meta[q];
                for (k, &j) in meta.total.iter().enumerate() {
                    out[j] += scale * grads[q][k];
                }
            }
            Ineq::Lower(j) => out[j] -= scale,
            Ineq::Upper(j) => out[j] += scale,
        }
    }

    fn grad_dot(&self, i: usize, grads: &[Vec<f64>], v: &[f64]) -> f64 {
        match self.ineqs[i] {
            Ineq::Affine(r) => {
                let row = &self.prob.inequalities[r];
                let mut acc = 0.0;
                for (k, &j) in row.support.iter().enumerate() {
                    acc += row.coeffs[k] * v[j];
                }
                acc
            }
            Ineq::Quad(q) => {
                let meta = &self.quad_meta[q];
                let mut acc = 0.0;
                for (k, &j) in meta.total.iter().enumerate() {
                    acc += grads[q][k] * v[j];
                }
                acc
            }
            Ineq::Lower(j) => -v[j],
            Ineq::Upper(j) => v[j],
        }
    }

    /// Dual stationarity residual grad f + sum lam_i grad g_i + A'nu.
    fn dual_residual(&self, x: &[f64], lam: &[f64], nu: &[f64], grads: &[Vec<f64>]) -> Vec<f64> {
        let mut r = self.prob.objective_grad(x);
        for (i, &l) in lam.iter().enumerate() {
            self.add_grad(i, l, grads, &mut r);
        }
        for (k, row) in self.eqs.iter().enumerate() {
            for (s, &j) in row.support.iter().enumerate() {
                r[j] += nu[k] * row.coeffs[s];
            }
        }
        r
    }

    /// Norm of the full perturbed KKT residual at barrier parameter `t`;
    /// this is the line-search merit function.
    fn residual_norm(&self, x: &[f64], lam: &[f64], nu: &[f64], t: f64) -> f64 {
        let (d, c, e) = self.residual_parts(x, lam, nu, t);
        (d * d + c * c + e * e).sqrt()
    }

    /// Squared-norm pieces of the merit: (dual, centering, equality).
    fn residual_parts(&self, x: &[f64], lam: &[f64], nu: &[f64], t: f64) -> (f64, f64, f64) {
        let grads = self.quad_grads(x);
        let r_dual = self.dual_residual(x, lam, nu, &grads);
        let d: f64 = r_dual.iter().map(|v| v * v).sum();
        let mut c = 0.0f64;
        for (i, &l) in lam.iter().enumerate() {
            let rc = -l * self.g_single(i, x) - 1.0 / t;
            c += rc * rc;
        }
        let mut e = 0.0f64;
        for row in &self.eqs {
            let rp = row.dot(x) - row.rhs;
            e += rp * rp;
        }
        (d.sqrt(), c.sqrt(), e.sqrt())
    }

    /// Newton direction for the perturbed KKT system, with the eliminable
    /// block folded out by a Schur complement.
    #[allow(clippy::too_many_arguments)]
    fn newton_step(
        &self,
        x: &[f64],
        lam: &[f64],
        nu: &[f64],
        t: f64,
        gvals: &[f64],
        grads: &[Vec<f64>],
    ) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let dim = self.prob.dim;
        let nd = self.elim.dense.len();
        let ne = self.eqs.len();
        let sz = nd + ne;
        let mut s_mat = Mat::zeros(sz, sz);
        let mut rhs = vec![0.0; sz];
        let mut diag_e = vec![REG; self.elim.n_elim];
        let mut rhs_e = vec![0.0; self.elim.n_elim];
        let mut coup: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.elim.n_elim];

        // Right-hand side: -grad f - A'nu + sum (1/(t g_i)) grad g_i.
        let mut rhs_x = self.prob.objective_grad(x);
        for v in &mut rhs_x {
            *v = -*v;
        }
        for (k, row) in self.eqs.iter().enumerate() {
            for (s, &j) in row.support.iter().enumerate() {
                rhs_x[j] -= nu[k] * row.coeffs[s];
            }
        }
        for i in 0..self.ineqs.len() {
            let c = 1.0 / (t * gvals[i]);
            self.add_grad(i, c, grads, &mut rhs_x);
        }
        for (p, &j) in self.elim.dense.iter().enumerate() {
            rhs[p] = rhs_x[j];
        }
        for j in 0..dim {
            let e = self.elim.elim_pos[j];
            if e != usize::MAX {
                rhs_e[e] = rhs_x[j];
            }
        }
        for (k, row) in self.eqs.iter().enumerate() {
            rhs[nd + k] = row.rhs - row.dot(x);
        }

        // Hessian part from the objective.
        if let Some(p) = &self.prob.objective_quad {
            let s = p.support.len();
            for a in 0..s {
                let ja = p.support[a];
                let va = 2.0 * p.matrix.get(a, a);
                let ea = self.elim.elim_pos[ja];
                if ea != usize::MAX {
                    diag_e[ea] += va;
                } else {
                    let pa = self.elim.dense_pos[ja];
                    let cur = s_mat.get(pa, pa);
                    s_mat.set(pa, pa, cur + va);
                }
                for b in a + 1..s {
                    let v = 2.0 * p.matrix.get(a, b);
                    if v == 0.0 {
                        continue;
                    }
                    let pa = self.elim.dense_pos[ja];
                    let pb = self.elim.dense_pos[p.support[b]];
                    debug_assert!(pa != usize::MAX && pb != usize::MAX);
                    s_mat.set(pa, pb, s_mat.get(pa, pb) + v);
                    s_mat.set(pb, pa, s_mat.get(pb, pa) + v);
                }
            }
        }

        // Barrier contributions per inequality.
        for (i, &ineq) in self.ineqs.iter().enumerate() {
            let w = lam[i] / (-gvals[i]);
            match ineq {
                Ineq::Lower(j) | Ineq::Upper(j) => {
                    let e = self.elim.elim_pos[j];
                    if e != usize::MAX {
                        diag_e[e] += w;
                    } else {
                        let p = self.elim.dense_pos[j];
                        s_mat.set(p, p, s_mat.get(p, p) + w);
                    }
                }
                Ineq::Affine(r) => {
                    let row = &self.prob.inequalities[r];
                    self.add_rank_one(
                        &row.support,
                        &row.coeffs,
                        w,
                        &mut s_mat,
                        &mut diag_e,
                        &mut coup,
                    );
                }
                Ineq::Quad(q) => {
                    // Curvature: 2 lam Q over the quadratic support (all
                    // dense by the elimination rules).
                    let qc = &self.prob.quad_inequalities[q];
                    let s = qc.quad.support.len();
                    for a in 0..s {
                        let pa = self.elim.dense_pos[qc.quad.support[a]];
                        debug_assert_ne!(pa, usize::MAX);
                        for b in a..s {
                            let v = 2.0 * lam[i] * qc.quad.matrix.get(a, b);
                            if v == 0.0 {
                                continue;
                            }
                            let pb = self.elim.dense_pos[qc.quad.support[b]];
                            s_mat.set(pa, pb, s_mat.get(pa, pb) + v);
                            if a != b {
                                s_mat.set(pb, pa, s_mat.get(pb, pa) + v);
                            }
                        }
                    }
                    // Rank-one barrier term on the gradient.
                    let meta = &self.quad_meta[q];
                    self.add_rank_one(&meta.total, &grads[q], w, &mut s_mat, &mut diag_e, &mut coup);
                }
            }
        }

        // Regularization and the equality blocks.
        for p in 0..nd {
            s_mat.set(p, p, s_mat.get(p, p) + REG);
        }
        for k in 0..ne {
            s_mat.set(nd + k, nd + k, -REG);
        }
        for (k, row) in self.eqs.iter().enumerate() {
            for (s, &j) in row.support.iter().enumerate() {
                let p = self.elim.dense_pos[j];
                debug_assert_ne!(p, usize::MAX, "equality touches eliminated coordinate");
                s_mat.set(p, nd + k, s_mat.get(p, nd + k) + row.coeffs[s]);
                s_mat.set(nd + k, p, s_mat.get(nd + k, p) + row.coeffs[s]);
            }
        }

        // Schur-complement the eliminated coordinates out.
        let mut scratch = vec![0.0; nd];
        let mut touched: Vec<usize> = Vec::new();
        for e in 0..self.elim.n_elim {
            if coup[e].is_empty() {
                continue;
            }
            touched.clear();
            for &(p, v) in &coup[e] {
                if scratch[p] == 0.0 && !touched.contains(&p) {
                    touched.push(p);
                }
                scratch[p] += v;
            }
            let inv_d = 1.0 / diag_e[e];
            for &p in &touched {
                let cp = scratch[p];
                rhs[p] -= cp * inv_d * rhs_e[e];
                for &q in &touched {
                    s_mat.set(p, q, s_mat.get(p, q) - cp * scratch[q] * inv_d);
                }
            }
            for &p in &touched {
                scratch[p] = 0.0;
            }
        }

        let sol = lu_solve(s_mat, &rhs)?;

        // Expand to the full coordinate vector.
        let mut dx = vec![0.0; dim];
        for (p, &j) in self.elim.dense.iter().enumerate() {
            dx[j] = sol[p];
        }
        for j in 0..dim {
            let e = self.elim.elim_pos[j];
            if e == usize::MAX {
                continue;
            }
            let mut c_dot = 0.0;
            for &(p, v) in &coup[e] {
                c_dot += v * sol[p];
            }
            dx[j] = (rhs_e[e] - c_dot) / diag_e[e];
        }
        let dnu = sol[nd..].to_vec();

        let mut dlam = vec![0.0; self.ineqs.len()];
        for i in 0..self.ineqs.len() {
            let w = lam[i] / (-gvals[i]);
            let gd = self.grad_dot(i, grads, &dx);
            dlam[i] = w * gd - lam[i] - 1.0 / (t * gvals[i]);
        }
        Ok((dx, dnu, dlam))
    }

    /// Adds `w * a a'` for a sparse row, splitting it across the dense
    /// block, the eliminated diagonal, and the coupling lists. At most one
    /// support member may be eliminated (the detection pass guarantees it).
    fn add_rank_one(
        &self,
        support: &[usize],
        coeffs: &[f64],
        w: f64,
        s_mat: &mut Mat,
        diag_e: &mut [f64],
        coup: &mut [Vec<(usize, f64)>],
    ) {
        let mut elim_k = usize::MAX;
        for (k, &j) in support.iter().enumerate() {
            if self.elim.elim_pos[j] != usize::MAX {
                debug_assert_eq!(elim_k, usize::MAX, "two eliminated coords in one row");
                elim_k = k;
            }
        }
        if elim_k == usize::MAX {
            for (a, &ja) in support.iter().enumerate() {
                let pa = self.elim.dense_pos[ja];
                for b in a..support.len() {
                    let v = w * coeffs[a] * coeffs[b];
                    if v == 0.0 {
                        continue;
                    }
                    let pb = self.elim.dense_pos[support[b]];
                    s_mat.set(pa, pb, s_mat.get(pa, pb) + v);
                    if a != b {
                        s_mat.set(pb, pa, s_mat.get(pb, pa) + v);
                    }
                }
            }
            return;
        }
        let je = support[elim_k];
        let ce = coeffs[elim_k];
        let e = self.elim.elim_pos[je];
        diag_e[e] += w * ce * ce;
        for (a, &ja) in support.iter().enumerate() {
            if a == elim_k {
                continue;
            }
            let pa = self.elim.dense_pos[ja];
            coup[e].push((pa, w * ce * coeffs[a]));
            for b in a..support.len() {
                if b == elim_k {
                    continue;
                }
                let v = w * coeffs[a] * coeffs[b];
                if v == 0.0 {
                    continue;
                }
                let pb = self.elim.dense_pos[support[b]];
                s_mat.set(pa, pb, s_mat.get(pa, pb) + v);
                if a != b {
                    s_mat.set(pb, pa, s_mat.get(pb, pa) + v);
                }
            }
        }
    }

    fn run(
        &self,
        mut x: Vec<f64>,
        mut lam: Vec<f64>,
        opts: &SolverOptions,
        early_exit: Option<&dyn Fn(&[f64]) -> bool>,
    ) -> Result<SolverResult> {
        let mut nu = vec![0.0; self.eqs.len()];
        let m = self.ineqs.len() as f64;
        let mut merit_trace: Vec<(f64, f64)> = Vec::new();
        let mut status = SolverStatus::MaxIterations;
        let mut iterations = opts.max_iter;
        let mut recentered = false;
        let mut t_prev = 0.0f64;

        for iter in 0..opts.max_iter {
            if let Some(cb) = early_exit {
                if cb(&x) {
                    status = SolverStatus::Converged;
                    iterations = iter;
                    break;
                }
            }
            let gvals = self.g_all(&x);
            let grads = self.quad_grads(&x);
            let eta: f64 = -lam
                .iter()
                .zip(&gvals)
                .map(|(l, g)| l * g)
                .sum::<f64>();
            let t_gap = BARRIER_GROWTH * m / eta.max(1e-300);
            // Monotone, growth-capped barrier schedule.
            let t = if t_prev == 0.0 {
                t_gap
            } else {
                t_gap.clamp(t_prev, BARRIER_STEP_CAP * t_prev)
            };
            t_prev = t;

            let r_dual = self.dual_residual(&x, &lam, &nu, &grads);
            let grad_f_norm = norm_inf(&self.prob.objective_grad(&x));
            let eq_res = self
                .eqs
                .iter()
                .fold(0.0f64, |mx, row| mx.max((row.dot(&x) - row.rhs).abs()));
            let obj = self.prob.objective(&x);
            let dual_scaled = norm_inf(&r_dual) / (1.0 + grad_f_norm);
            let gap_scaled = eta / (1.0 + obj.abs());
            if eq_res <= opts.feas_tol && dual_scaled <= opts.kkt_tol && gap_scaled <= opts.kkt_tol
            {
                status = SolverStatus::Converged;
                iterations = iter;
                break;
            }

            let (dx, dnu, dlam) = self.newton_step(&x, &lam, &nu, t, &gvals, &grads)?;

            // Largest multiplier-preserving step, then backtrack for
            // strict feasibility, then for residual decrease.
            let mut s = 1.0f64;
            for (l, dl) in lam.iter().zip(&dlam) {
                if *dl < 0.0 {
                    s = s.min(-l / dl);
                }
            }
            s = (BOUNDARY_FRACTION * s).min(1.0);
            let s_cap = s;

            let mut backtracks = 0;
            let mut stalled = false;
            let mut stall_phase = "feasibility";
            loop {
                let xt: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + s * d).collect();
                // Fraction-to-boundary: every slack stays strictly
                // positive and keeps at least SLACK_KEEP of its value
                // (slacks are concave along the step, so backtracking
                // preserves this once it holds).
                let keeps = (0..self.ineqs.len()).all(|i| {
                    let g = self.g_single(i, &xt);
                    g.is_finite() && -g >= SLACK_KEEP * (-gvals[i])
                });
                if keeps {
                    break;
                }
                s *= BACKTRACK;
                backtracks += 1;
                if backtracks > MAX_BACKTRACKS {
                    stalled = true;
                    break;
                }
            }
            let merit0 = self.residual_norm(&x, &lam, &nu, t);
            let mut merit1 = merit0;
            if !stalled {
                stall_phase = "armijo";
                let trace_ls = std::env::var("QP_TRACE_LS").is_ok();
                loop {
                    let xt: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + s * d).collect();
                    let lt: Vec<f64> = lam.iter().zip(&dlam).map(|(a, d)| a + s * d).collect();
                    let nt: Vec<f64> = nu.iter().zip(&dnu).map(|(a, d)| a + s * d).collect();
                    let r = self.residual_norm(&xt, &lt, &nt, t);
                    if trace_ls {
                        let (rd, rc, re) = self.residual_parts(&xt, &lt, &nt, t);
                        eprintln!(
                            "[ls]   iter {iter} s {s:.3e} r {r:.6e} (d {rd:.3e} c {rc:.3e} \
                             e {re:.3e}) vs {:.6e}",
                            (1.0 - ARMIJO * s) * merit0
                        );
                    }
                    if r <= (1.0 - ARMIJO * s) * merit0 {
                        merit1 = r;
                        x = xt;
                        lam = lt;
                        nu = nt;
                        break;
                    }
                    s *= BACKTRACK;
                    backtracks += 1;
                    if backtracks > MAX_BACKTRACKS {
                        stalled = true;
                        break;
                    }
                }
            }
            if std::env::var("QP_TRACE").is_ok() {
                let mut min_slack = f64::INFINITY;
                let mut pin = 0usize;
                for (i, &g) in gvals.iter().enumerate() {
                    if -g < min_slack {
                        min_slack = -g;
                        pin = i;
                    }
                }
                let pin_tag = match self.ineqs[pin] {
                    Ineq::Lower(j) => format!("L{j}"),
                    Ineq::Upper(j) => format!("U{j}"),
                    Ineq::Affine(r) => format!("A{r}"),
                    Ineq::Quad(q) => format!("Q{q}"),
                };
                let (rd, rc, re) = self.residual_parts(&x, &lam, &nu, t);
                eprintln!(
                    "[qp] iter {iter}: eta {eta:.3e} t {t:.3e} merit {merit0:.6e} -> \
                     {merit1:.6e} s {s:.3e} cap {s_cap:.3e} bt {backtracks} \
                     min_slack {min_slack:.3e}@{pin_tag} lam_pin {:.3e} dlam_pin {:.3e} \
                     |dx| {:.3e} |dlam| {:.3e} parts d {rd:.3e} c {rc:.3e} e {re:.3e} \
                     dual {dual_scaled:.3e} gap {gap_scaled:.3e} eq {eq_res:.3e}{}",
                    lam[pin],
                    dlam[pin],
                    norm_inf(&dx),
                    norm_inf(&dlam),
                    if stalled {
                        format!(" STALL({stall_phase})")
                    } else {
                        String::new()
                    }
                );
            }
            if stalled {
                if !recentered {
                    // One-shot rescue: multipliers can drift so far off
                    // the central path that no step helps; restart them
                    // from the centered guess at the current iterate.
                    recentered = true;
                    lam = self.initial_duals(&x);
                    nu = vec![0.0; self.eqs.len()];
                    continue;
                }
                iterations = iter + 1;
                status = SolverStatus::MaxIterations;
                break;
            }
            merit_trace.push((merit0, merit1));
        }

        Ok(self.build_result(&x, &lam, &nu, iterations, status, merit_trace))
    }

    fn build_result(
        &self,
        x: &[f64],
        lam: &[f64],
        nu: &[f64],
        iterations: usize,
        status: SolverStatus,
        merit_trace: Vec<(f64, f64)>,
    ) -> SolverResult {
        let gvals = self.g_all(x);
        let grads = self.quad_grads(x);
        let mut feas = 0.0f64;
        for &g in &gvals {
            feas = feas.max(g);
        }
        for row in &self.eqs {
            feas = feas.max((row.dot(x) - row.rhs).abs());
        }
        feas = feas.max(0.0);
        let r_dual = self.dual_residual(x, lam, nu, &grads);
        let grad_f_norm = norm_inf(&self.prob.objective_grad(x));
        let eta: f64 = -lam.iter().zip(&gvals).map(|(l, g)| l * g).sum::<f64>();
        let obj = self.prob.objective(x);
        let kkt = (norm_inf(&r_dual) / (1.0 + grad_f_norm)).max(eta.abs() / (1.0 + obj.abs()));
        SolverResult {
            solution: x.to_vec(),
            objective: obj,
            feas_residual: feas,
            kkt_residual: kkt,
            iterations,
            status,
            ineq_duals: lam.to_vec(),
            eq_duals: nu.to_vec(),
            merit_trace,
        }
    }

    /// Direct KKT solve when no inequalities exist: one Newton step is
    /// exact for a convex quadratic with linear equalities.
    fn solve_without_inequalities(&self, opts: &SolverOptions) -> Result<SolverResult> {
        let dim = self.prob.dim;
        let ne = self.eqs.len();
        let sz = dim + ne;
        let mut kkt = Mat::zeros(sz, sz);
        let mut rhs = vec![0.0; sz];
        for j in 0..dim {
            kkt.set(j, j, REG);
            rhs[j] = -self.prob.objective_lin[j];
        }
        if let Some(p) = &self.prob.objective_quad {
            for a in 0..p.support.len() {
                for b in 0..p.support.len() {
                    let ja = p.support[a];
                    let jb = p.support[b];
                    kkt.set(ja, jb, kkt.get(ja, jb) + 2.0 * p.matrix.get(a, b));
                }
            }
        }
        for (k, row) in self.eqs.iter().enumerate() {
            for (s, &j) in row.support.iter().enumerate() {
                kkt.set(j, dim + k, row.coeffs[s]);
                kkt.set(dim + k, j, row.coeffs[s]);
            }
            kkt.set(dim + k, dim + k, -REG);
            rhs[dim + k] = row.rhs;
        }
        let sol = lu_solve(kkt, &rhs)?;
        let x = sol[..dim].to_vec();
        let nu = sol[dim..].to_vec();
        let mut result = self.build_result(&x, &[], &nu, 1, SolverStatus::Converged, Vec::new());
        if result.feas_residual > opts.feas_tol || result.kkt_residual > opts.kkt_tol {
            result.status = SolverStatus::MaxIterations;
        }
        Ok(result)
    }

    /// Phase 1: minimize the worst inequality violation `s` subject to
    /// g_i(x) <= s and the original box. Returns a strictly feasible
    /// point, or None when the optimum cannot get below zero.
    fn phase1(&self, x_heur: &[f64], opts: &SolverOptions) -> Result<Option<Vec<f64>>> {
        let dim = self.prob.dim;
        let s_idx = dim;
        let mut p1 = ConvexQuadraticProgram::new(dim + 1);
        p1.objective_lin[s_idx] = 1.0;
        p1.lower[..dim].copy_from_slice(&self.prob.lower);
        p1.upper[..dim].copy_from_slice(&self.prob.upper);
        p1.lower[s_idx] = -1.0;
        for row in &self.prob.inequalities {
            let mut support = row.support.clone();
            let mut coeffs = row.coeffs.clone();
            support.push(s_idx);
            coeffs.push(-1.0);
            p1.inequalities.push(AffineRow::new(support, coeffs, row.rhs));
        }
        for qc in &self.prob.quad_inequalities {
            let mut lin_support = qc.lin.support.clone();
            let mut lin_coeffs = qc.lin.coeffs.clone();
            lin_support.push(s_idx);
            lin_coeffs.push(-1.0);
            p1.quad_inequalities.push(super::QuadIneq {
                quad: qc.quad.clone(),
                lin: AffineRow::new(lin_support, lin_coeffs, qc.lin.rhs),
            });
        }

        let engine1 = Engine::new(&p1, opts.disable_elimination);
        let mut x0 = x_heur.to_vec();
        let worst = (0..self.ineqs.len())
            .map(|i| self.g_single(i, x_heur))
            .fold(f64::NEG_INFINITY, f64::max);
        x0.push(worst.max(0.0) + 1.0);
        if !engine1.strictly_feasible(&x0, 0.0) {
            return Err(Error::Solver(
                "phase-1 start is not strictly feasible".into(),
            ));
        }
        let lam0 = engine1.initial_duals(&x0);
        // Exit with a real interior cushion when one is reachable; the
        // post-run check below still accepts a hairline margin for
        // problems whose feasible set is too thin for the cushion.
        let accept = |xt: &[f64]| self.strictly_feasible(&xt[..dim], -PHASE1_MARGIN);
        let opts1 = SolverOptions {
            initial_point: None,
            ..opts.clone()
        };
        let res = engine1.run(x0, lam0, &opts1, Some(&accept))?;
        let x_part = res.solution[..dim].to_vec();
        if self.strictly_feasible(&x_part, -1e-11) {
            Ok(Some(x_part))
        } else {
            Ok(None)
        }
    }
}

impl Elim {
    fn dense_only(dim: usize) -> Self {
        Elim {
            dense: (0..dim).collect(),
            dense_pos: (0..dim).collect(),
            elim_pos: vec![usize::MAX; dim],
            n_elim: 0,
        }
    }

    /// Finds coordinates safe to fold out of the Newton system: no
    /// objective cross-curvature, absent from every equality and every
    /// quadratic constraint, and sharing no multi-coordinate inequality
    /// row with another eliminated coordinate.
    fn detect(
        prob: &ConvexQuadraticProgram,
        eqs: &[AffineRow],
        quad_meta: &[QuadMeta],
    ) -> Self {
        let dim = prob.dim;
        let mut candidate = vec![true; dim];

        if let Some(p) = &prob.objective_quad {
            for a in 0..p.support.len() {
                for b in a + 1..p.support.len() {
                    if p.matrix.get(a, b) != 0.0 {
                        candidate[p.support[a]] = false;
                        candidate[p.support[b]] = false;
                    }
                }
            }
        }
        for meta in quad_meta {
            for &j in &meta.total {
                candidate[j] = false;
            }
        }
        for row in eqs {
            for &j in &row.support {
                candidate[j] = false;
            }
        }

        // Multi-coordinate rows may keep at most one candidate each; keep
        // the one involved in the fewest such rows (hinge slacks appear in
        // exactly one).
        let multi: Vec<&AffineRow> = prob
            .inequalities
            .iter()
            .filter(|r| r.support.len() >= 2)
            .collect();
        let mut row_count = vec![0usize; dim];
        for row in &multi {
            for &j in &row.support {
                row_count[j] += 1;
            }
        }
        loop {
            let mut changed = false;
            for row in &multi {
                let mut live: Vec<usize> =
                    row.support.iter().copied().filter(|&j| candidate[j]).collect();
                if live.len() <= 1 {
                    continue;
                }
                live.sort_by_key(|&j| (row_count[j], j));
                for &j in &live[1..] {
                    candidate[j] = false;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }

        // Structural invariant check; fall back to the dense path if it
        // fails rather than risk a wrong Newton direction.
        for row in &multi {
            if row.support.iter().filter(|&&j| candidate[j]).count() > 1 {
                return Elim::dense_only(dim);
            }
        }

        let mut dense = Vec::new();
        let mut elim_list = Vec::new();
        for j in 0..dim {
            if candidate[j] {
                elim_list.push(j);
            } else {
                dense.push(j);
            }
        }
        let mut dense_pos = vec![usize::MAX; dim];
        let mut elim_pos = vec![usize::MAX; dim];
        for (p, &j) in dense.iter().enumerate() {
            dense_pos[j] = p;
        }
        for (e, &j) in elim_list.iter().enumerate() {
            elim_pos[j] = e;
        }
        Elim {
            n_elim: elim_list.len(),
            dense,
            dense_pos,
            elim_pos,
        }
    }
}
