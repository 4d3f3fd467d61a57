//! ADMM with variable splitting for the weighted mixed ℓ2,1 functional.
//!
//! The split problem is
//!
//! ```text
//! min α1 Σ‖Z_i‖ + α2 Σ‖Q_ij‖ + ½‖AX − B‖²   s.t.  Z = W∘X,  Q = W∘X
//! ```
//!
//! One inner iteration runs the X-update (a per-column linear solve), the
//! Z- and Q-updates (row- and element-chunk shrinkage) and dual ascent on
//! `λ1`, `λ2`. The outer loop re-weights `W = 1/(|X̂| + ε)` between passes.

use std::fmt::Write as _;
use std::time::Instant;

use nalgebra::{linalg::Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::functional::{self, penalty_on_scaled, weight_update, Regularization, Weights, DEFAULT_EPSILON};
use crate::matrix::{chunk_norms, ChunkLayout, ComplexMatrix, C64};
use crate::shrinkage::{shrink_chunks_in_place, Granularity};

pub const DEFAULT_MAX_COUNT: usize = 2;
pub const DEFAULT_MAX_INNER_ITERS: usize = 500;
pub const DEFAULT_TOL_PRIMAL: f64 = 1e-6;
pub const DEFAULT_TOL_CHANGE: f64 = 1e-8;

/// How the X-update inverts `2β diag(w_l²) + A^H A`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum XPath {
    /// `P_l − P_l A^H (I_L + A P_l A^H)^{-1} A P_l` with `P_l = (0.5/β) diag(w_l^-2)`.
    Woodbury,
    /// Cholesky of the KN × KN system.
    Direct,
}

impl XPath {
    pub fn automatic(layout: &ChunkLayout) -> Self {
        if layout.pilot_len < layout.x_rows() {
            XPath::Woodbury
        } else {
            XPath::Direct
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub reg: Regularization,
    pub beta: Beta,
    /// Weight floor of the re-weighting rule.
    pub epsilon: f64,
    /// Number of re-weighting passes.
    pub max_count: usize,
    pub max_inner_iters: usize,
    pub tol_primal: f64,
    pub tol_change: f64,
    /// `None` picks [`XPath::automatic`].
    pub x_path: Option<XPath>,
    /// Record the worst per-column X-update stationarity residual of every iteration.
    pub track_stationarity: bool,
}

/// Penalty parameter of the augmented Lagrangian.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Beta {
    /// A fixed value.
    Fixed(f64),
    /// This multiple of the mean diagonal of `A^H A`, i.e. `c · ‖A‖_F² / KN`.
    Scaled(f64),
}

/// Multiple of the mean diagonal of `A^H A` used by the default [`Beta`].
pub const DEFAULT_BETA_SCALE: f64 = 1.5;

impl Default for Beta {
    fn default() -> Self {
        Beta::Scaled(DEFAULT_BETA_SCALE)
    }
}

impl Beta {
    fn coefficient(self) -> f64 {
        match self {
            Beta::Fixed(v) | Beta::Scaled(v) => v,
        }
    }

    /// Resolves the rule against a problem. A zero `A` resolves a scaled
    /// rule to its coefficient.
    pub fn resolve(self, problem: &Problem) -> f64 {
        match self {
            Beta::Fixed(v) => v,
            Beta::Scaled(c) => {
                let m = problem.mean_gram_diagonal();
                if m > 0.0 {
                    c * m
                } else {
                    c
                }
            }
        }
    }
}

impl SolverConfig {
    pub fn new(reg: Regularization) -> Self {
        Self {
            reg,
            beta: Beta::default(),
            epsilon: DEFAULT_EPSILON,
            max_count: DEFAULT_MAX_COUNT,
            max_inner_iters: DEFAULT_MAX_INNER_ITERS,
            tol_primal: DEFAULT_TOL_PRIMAL,
            tol_change: DEFAULT_TOL_CHANGE,
            x_path: None,
            track_stationarity: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.reg.is_zero() {
            return Err(Error::Domain("alpha1 and alpha2 are both zero".into()));
        }
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Domain(format!("{name} must be positive and finite, got {v}")))
            }
        };
        positive("beta", self.beta.coefficient())?;
        positive("epsilon", self.epsilon)?;
        positive("tol_primal", self.tol_primal)?;
        positive("tol_change", self.tol_change)?;
        if self.max_count == 0 || self.max_inner_iters == 0 {
            return Err(Error::Domain("max_count and max_inner_iters must be >= 1".into()));
        }
        Ok(())
    }
}

/// Problem data with the products every iteration needs.
#[derive(Clone, Debug)]
pub struct Problem {
    pub layout: ChunkLayout,
    pub a: ComplexMatrix,
    pub b: ComplexMatrix,
    a_adj: ComplexMatrix,
    a_adj_b: ComplexMatrix,
    /// `‖A‖₂²`
    a_norm_sqr: f64,
}

impl Problem {
    /// `‖A‖_F² / KN`, the mean diagonal entry of `A^H A`.
    pub fn mean_gram_diagonal(&self) -> f64 {
        self.a.frobenius_norm_sqr() / self.a.cols() as f64
    }

    pub fn new(a: ComplexMatrix, b: ComplexMatrix, layout: ChunkLayout) -> Result<Self> {
        layout.validate()?;
        layout.check_a(&a, "A")?;
        layout.check_b(&b, "B")?;
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::Domain("A and B must be finite".into()));
        }
        let a_adj = a.adjoint();
        let a_adj_b = a_adj.matmul(&b)?;
        let a_norm_sqr = spectral_norm_sqr(&a);
        Ok(Self {
            layout,
            a,
            b,
            a_adj,
            a_adj_b,
            a_norm_sqr,
        })
    }

    /// `A^H B`
    pub fn correlation(&self) -> &ComplexMatrix {
        &self.a_adj_b
    }

    /// `A^H A X`
    fn gram_apply(&self, x: &ComplexMatrix) -> ComplexMatrix {
        self.a_adj.matmul(&self.a.matmul(x).expect("shape")).expect("shape")
    }
}

/// Largest eigenvalue of the smaller of `A A^H` and `A^H A`.
fn spectral_norm_sqr(a: &ComplexMatrix) -> f64 {
    let (rows, cols) = a.shape();
    let m = DMatrix::from_row_slice(rows, cols, a.as_slice());
    let gram = if rows <= cols {
        &m * m.adjoint()
    } else {
        m.adjoint() * &m
    };
    gram.symmetric_eigenvalues().iter().copied().fold(0.0, f64::max)
}

/// ADMM iterates. All five matrices have the shape of `X`.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverState {
    pub x: ComplexMatrix,
    pub z: ComplexMatrix,
    pub q: ComplexMatrix,
    pub lambda1: ComplexMatrix,
    pub lambda2: ComplexMatrix,
    pub weights: Weights,
    pub inner_iter: usize,
    pub outer_iter: usize,
}

impl SolverState {
    /// `Z = Q = λ1 = λ2 = 0`, `X = 0` until the first X-update.
    pub fn initial(layout: &ChunkLayout, weights: Weights) -> Self {
        let zero = ComplexMatrix::zeros(layout.x_rows(), layout.x_cols());
        Self {
            x: zero.clone(),
            z: zero.clone(),
            q: zero.clone(),
            lambda1: zero.clone(),
            lambda2: zero,
            weights,
            inner_iter: 0,
            outer_iter: 1,
        }
    }

    fn check(&self, layout: &ChunkLayout) -> Result<()> {
        for (name, m) in [
            ("X", &self.x),
            ("Z", &self.z),
            ("Q", &self.q),
            ("lambda1", &self.lambda1),
            ("lambda2", &self.lambda2),
        ] {
            layout.check_x(m, name)?;
        }
        if self.weights.shape() != layout.x_shape() {
            return Err(Error::Domain("weights do not match layout".into()));
        }
        Ok(())
    }

    fn is_finite(&self) -> bool {
        self.x.is_finite()
            && self.z.is_finite()
            && self.q.is_finite()
            && self.lambda1.is_finite()
            && self.lambda2.is_finite()
    }
}

/// `D = β W∘(Z+Q) + A^H B − W∘(λ1+λ2)`
fn x_update_rhs(state: &SolverState, problem: &Problem, beta: f64) -> ComplexMatrix {
    let w = state.weights.values();
    let data = (0..w.len())
        .map(|k| {
            let zq = state.z.as_slice()[k] + state.q.as_slice()[k];
            let dual = state.lambda1.as_slice()[k] + state.lambda2.as_slice()[k];
            zq * (beta * w[k]) + problem.a_adj_b.as_slice()[k] - dual * w[k]
        })
        .collect();
    ComplexMatrix::from_vec(problem.layout.x_rows(), problem.layout.x_cols(), data).expect("shape")
}

struct ColumnFactor {
    /// Diagonal of `P_l` (Woodbury only).
    p: Vec<f64>,
    chol: Cholesky<C64, Dyn>,
}

/// Per-column factorizations for a fixed `(W, β)`, reused across inner iterations.
pub struct XSolver {
    path: XPath,
    beta: f64,
    columns: Vec<ColumnFactor>,
}

fn to_nalgebra(m: &ComplexMatrix) -> DMatrix<C64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

impl XSolver {
    pub fn new(problem: &Problem, weights: &Weights, beta: f64, path: XPath) -> Result<Self> {
        let layout = &problem.layout;
        let (kn, gm) = layout.x_shape();
        let l = layout.pilot_len;
        let a = to_nalgebra(&problem.a);
        let gram = match path {
            XPath::Direct => Some(a.adjoint() * &a),
            XPath::Woodbury => None,
        };
        let mut columns = Vec::with_capacity(gm);
        for col in 0..gm {
            let w2: Vec<f64> = (0..kn).map(|r| weights.get(r, col).powi(2)).collect();
            let (p, system) = match path {
                XPath::Woodbury => {
                    let p: Vec<f64> = w2.iter().map(|&w2| 0.5 / (beta * w2)).collect();
                    let mut ap = a.clone();
                    for (k, mut column) in ap.column_iter_mut().enumerate() {
                        column *= C64::new(p[k], 0.0);
                    }
                    let mut s = &ap * a.adjoint();
                    for i in 0..l {
                        s[(i, i)] += C64::new(1.0, 0.0);
                    }
                    (p, s)
                }
                XPath::Direct => {
                    let mut m = gram.clone().expect("gram");
                    for (i, w2) in w2.iter().enumerate() {
                        m[(i, i)] += C64::new(2.0 * beta * w2, 0.0);
                    }
                    (Vec::new(), m)
                }
            };
            let chol = Cholesky::new(system).ok_or(Error::Singular { column: col })?;
            columns.push(ColumnFactor { p, chol });
        }
        Ok(Self { path, beta, columns })
    }

    pub fn path(&self) -> XPath {
        self.path
    }

    /// Minimiser of the augmented Lagrangian in `X` for the given state.
    pub fn solve(&self, state: &SolverState, problem: &Problem) -> ComplexMatrix {
        self.solve_with_image(state, problem).0
    }

    /// As [`XSolver::solve`], also returning `A X` when it comes for free.
    ///
    /// With `S = I + A P A^H`, `S s = A u` and `x = u − P A^H s`, the image is
    /// `A x = A u − (S − I) s = s`.
    fn solve_with_image(&self, state: &SolverState, problem: &Problem) -> (ComplexMatrix, Option<ComplexMatrix>) {
        let d = x_update_rhs(state, problem, self.beta);
        let mut x = ComplexMatrix::zeros(d.rows(), d.cols());
        let mut image = match self.path {
            XPath::Woodbury => Some(ComplexMatrix::zeros(problem.layout.pilot_len, d.cols())),
            XPath::Direct => None,
        };
        for (col, factor) in self.columns.iter().enumerate() {
            let rhs = d.column(col);
            let out: Vec<C64> = match self.path {
                XPath::Woodbury => {
                    let u: Vec<C64> = rhs.iter().zip(&factor.p).map(|(&d, &p)| d * p).collect();
                    let v = DVector::from_vec(problem.a.mul_vec(&u));
                    let s = factor.chol.solve(&v);
                    let t = problem.a_adj.mul_vec(s.as_slice());
                    if let Some(image) = image.as_mut() {
                        image.set_column(col, s.as_slice());
                    }
                    u.iter()
                        .zip(&t)
                        .zip(&factor.p)
                        .map(|((&u, &t), &p)| u - t * p)
                        .collect()
                }
                XPath::Direct => factor.chol.solve(&DVector::from_vec(rhs)).as_slice().to_vec(),
            };
            x.set_column(col, &out);
        }
        (x, image)
    }
}

/// X-subproblem: solves `(2β W^∘2 ∘ X + A^H A X)[:, l] = D[:, l]` for every column.
pub fn x_update(state: &SolverState, problem: &Problem, config: &SolverConfig) -> Result<ComplexMatrix> {
    state.check(&problem.layout)?;
    let path = config.x_path.unwrap_or_else(|| XPath::automatic(&problem.layout));
    Ok(XSolver::new(problem, &state.weights, config.beta.resolve(problem), path)?.solve(state, problem))
}

/// Per-column relative residual of the X-update stationarity equation at `x`.
pub fn stationarity_residuals(x: &ComplexMatrix, state: &SolverState, problem: &Problem, beta: f64) -> Vec<f64> {
    let d = x_update_rhs(state, problem, beta);
    let gx = problem.gram_apply(x);
    let w = &state.weights;
    (0..x.cols())
        .map(|col| {
            let (mut diff, mut dn, mut ln) = (0.0, 0.0, 0.0);
            for r in 0..x.rows() {
                let lhs = x.get(r, col) * (2.0 * beta * w.get(r, col).powi(2)) + gx.get(r, col);
                let rhs = d.get(r, col);
                diff += (lhs - rhs).norm_sqr();
                dn += rhs.norm_sqr();
                ln += lhs.norm_sqr();
            }
            let scale = dn.max(ln).sqrt();
            if scale == 0.0 {
                0.0
            } else {
                diff.sqrt() / scale
            }
        })
        .collect()
}

fn shrink_step(
    state: &SolverState,
    dual: &ComplexMatrix,
    alpha: f64,
    beta: f64,
    layout: &ChunkLayout,
    g: Granularity,
) -> ComplexMatrix {
    let mut t = state.weights.apply(&state.x).expect("shape");
    for (v, l) in t.as_mut_slice().iter_mut().zip(dual.as_slice()) {
        *v += l / beta;
    }
    shrink_chunks_in_place(&mut t, layout, g, alpha / beta);
    t
}

/// `Z = Shrink_(N,GM)(W∘X + λ1/β, α1/β)`
pub fn z_update(state: &SolverState, problem: &Problem, config: &SolverConfig) -> Result<ComplexMatrix> {
    let layout = &problem.layout;
    state.check(layout)?;
    let beta = config.beta.resolve(problem);
    Ok(shrink_step(
        state,
        &state.lambda1,
        config.reg.alpha1,
        beta,
        layout,
        Granularity::RowChunk,
    ))
}

/// `Q = Shrink_(N,M)(W∘X + λ2/β, α2/β)`
pub fn q_update(state: &SolverState, problem: &Problem, config: &SolverConfig) -> Result<ComplexMatrix> {
    let layout = &problem.layout;
    state.check(layout)?;
    let beta = config.beta.resolve(problem);
    Ok(shrink_step(
        state,
        &state.lambda2,
        config.reg.alpha2,
        beta,
        layout,
        Granularity::ElementChunk,
    ))
}

/// `λ1 ← λ1 − β(Z − W∘X)`, `λ2 ← λ2 − β(Q − W∘X)`
pub fn dual_update(state: &SolverState, beta: f64) -> (ComplexMatrix, ComplexMatrix) {
    let wx = state.weights.apply(&state.x).expect("shape");
    let step = |lambda: &ComplexMatrix, split: &ComplexMatrix| {
        let data = lambda
            .as_slice()
            .iter()
            .zip(split.as_slice())
            .zip(wx.as_slice())
            .map(|((&l, &s), &w)| l - (s - w) * beta)
            .collect();
        ComplexMatrix::from_vec(lambda.rows(), lambda.cols(), data).expect("shape")
    };
    (step(&state.lambda1, &state.z), step(&state.lambda2, &state.q))
}

/// One row of the solve trace.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub outer_pass: usize,
    pub inner_iter: usize,
    pub objective: f64,
    /// `‖Z − W∘X‖ / max(1, ‖W∘X‖)`
    pub primal_residual_z: f64,
    /// `‖Q − W∘X‖ / max(1, ‖W∘X‖)`
    pub primal_residual_q: f64,
    /// `‖X_k − X_{k−1}‖ / max(1, ‖X_k‖)`
    pub dx_rel: f64,
    /// Worst per-column X-update residual, when tracked.
    pub stationarity: Option<f64>,
}

impl IterationRecord {
    pub fn primal_residual(&self) -> f64 {
        self.primal_residual_z.max(self.primal_residual_q)
    }
}

#[derive(Clone, Debug)]
pub struct InnerSolve {
    pub state: SolverState,
    pub records: Vec<IterationRecord>,
    pub converged: bool,
}

fn run_inner(problem: &Problem, config: &SolverConfig, mut state: SolverState) -> Result<InnerSolve> {
    let layout = &problem.layout;
    let path = config.x_path.unwrap_or_else(|| XPath::automatic(layout));
    let beta = config.beta.resolve(problem);
    let solver = XSolver::new(problem, &state.weights, beta, path)?;
    let mut records = Vec::new();
    let mut converged = false;
    for it in 1..=config.max_inner_iters {
        let (x_new, image) = solver.solve_with_image(&state, problem);
        let x_prev = std::mem::replace(&mut state.x, x_new);
        let stationarity = config.track_stationarity.then(|| {
            stationarity_residuals(&state.x, &state, problem, beta)
                .into_iter()
                .fold(0.0, f64::max)
        });
        state.z = shrink_step(
            &state,
            &state.lambda1,
            config.reg.alpha1,
            beta,
            layout,
            Granularity::RowChunk,
        );
        state.q = shrink_step(
            &state,
            &state.lambda2,
            config.reg.alpha2,
            beta,
            layout,
            Granularity::ElementChunk,
        );
        let (l1, l2) = dual_update(&state, beta);
        state.lambda1 = l1;
        state.lambda2 = l2;
        state.inner_iter = it;
        if !state.is_finite() {
            return Err(Error::Divergence {
                outer: state.outer_iter,
                iteration: it,
            });
        }

        let wx = state.weights.apply(&state.x)?;
        let scale = wx.frobenius_norm().max(1.0);
        let r_z = state.z.sub(&wx)?.frobenius_norm() / scale;
        let r_q = state.q.sub(&wx)?.frobenius_norm() / scale;
        let dx_rel = state.x.sub(&x_prev)?.frobenius_norm() / state.x.frobenius_norm().max(1.0);
        let objective = match image {
            Some(ax) => 0.5 * ax.sub(&problem.b)?.frobenius_norm_sqr() + penalty_on_scaled(&wx, &config.reg, layout),
            None => functional::objective(&state.x, &problem.a, &problem.b, &state.weights, &config.reg, layout)?,
        };
        records.push(IterationRecord {
            outer_pass: state.outer_iter,
            inner_iter: it,
            objective,
            primal_residual_z: r_z,
            primal_residual_q: r_q,
            dx_rel,
            stationarity,
        });
        if r_z.max(r_q) <= config.tol_primal && dx_rel <= config.tol_change {
            converged = true;
            break;
        }
    }
    Ok(InnerSolve {
        state,
        records,
        converged,
    })
}

/// Inner ADMM loop for fixed weights. Starts from `init` (or the zero
/// state) and stops once both scaled primal residuals are below
/// `tol_primal` and the relative X-change is below `tol_change`, or after
/// `max_inner_iters` iterations.
pub fn inner_solve(
    problem: &Problem,
    weights: &Weights,
    config: &SolverConfig,
    init: Option<SolverState>,
) -> Result<InnerSolve> {
    config.validate()?;
    let state = match init {
        Some(mut s) => {
            s.weights = weights.clone();
            s
        }
        None => SolverState::initial(&problem.layout, weights.clone()),
    };
    state.check(&problem.layout)?;
    run_inner(problem, config, state)
}

/// `X` with every chunk that the splitting variables set exactly to zero
/// (row chunks of `Z`, element chunks of `Q`) cleared.
pub fn support_projection(state: &SolverState, layout: &ChunkLayout) -> ComplexMatrix {
    let z_norms = chunk_norms(&state.z, layout);
    let q_norms = chunk_norms(&state.q, layout);
    let mut x = state.x.clone();
    for user in 0..layout.users {
        for rrh in 0..layout.rrhs {
            if z_norms.rows[user] == 0.0 || q_norms.element(user, rrh) == 0.0 {
                for r in layout.user_rows(user) {
                    for c in layout.rrh_cols(rrh) {
                        x.set(r, c, C64::new(0.0, 0.0));
                    }
                }
            }
        }
    }
    x
}

/// The estimate returned for a finished inner solve: one proximal-gradient
/// step in `Y = W∘X` taken from [`support_projection`], with step `1/Λ`
/// where `Λ = ‖A‖₂² · max(W^-1)²` bounds the Lipschitz constant of the
/// scaled data term.
///
/// ADMM approaches chunks whose optimum is zero only asymptotically when
/// their dual certificate is nearly tight, leaving them at round-off size.
/// The prox step clears those chunks, and it makes the optimality residual
/// of the result proportional to the step length, so that residual can be
/// certified.
pub fn proximal_finish(state: &SolverState, problem: &Problem, reg: &Regularization) -> Result<ComplexMatrix> {
    let layout = &problem.layout;
    state.check(layout)?;
    let x0 = support_projection(state, layout);
    let inv_max = state.weights.values().iter().map(|w| 1.0 / w).fold(0.0, f64::max);
    let lip = problem.a_norm_sqr * inv_max * inv_max;
    if !(lip > 0.0 && lip.is_finite()) {
        return Ok(x0);
    }
    let residual = problem.a.matmul(&x0)?.sub(&problem.b)?;
    let grad = problem.a_adj.matmul(&residual)?;
    let w = state.weights.values();
    let data = (0..w.len())
        .map(|k| x0.as_slice()[k] * w[k] - grad.as_slice()[k] / (w[k] * lip))
        .collect();
    let mut y = ComplexMatrix::from_vec(layout.x_rows(), layout.x_cols(), data)?;
    shrink_chunks_in_place(&mut y, layout, Granularity::ElementChunk, reg.alpha2 / lip);
    shrink_chunks_in_place(&mut y, layout, Granularity::RowChunk, reg.alpha1 / lip);
    state.weights.apply_inverse(&y)
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub x_hat: ComplexMatrix,
    pub records: Vec<IterationRecord>,
    /// Inner iterations per outer pass.
    pub inner_iterations_used: Vec<usize>,
    pub converged: Vec<bool>,
    /// Weights of the last pass.
    pub weights: Weights,
    /// Seconds.
    pub wall_time: f64,
}

impl SolveReport {
    pub fn objective_history(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.objective).collect()
    }

    pub fn primal_residual_history(&self) -> Vec<f64> {
        self.records.iter().map(IterationRecord::primal_residual).collect()
    }

    pub fn total_inner_iterations(&self) -> usize {
        self.inner_iterations_used.iter().sum()
    }

    /// `outer_pass,inner_iter,objective,primal_residual_z,primal_residual_q,dx_rel`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("outer_pass,inner_iter,objective,primal_residual_z,primal_residual_q,dx_rel\n");
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.outer_pass, r.inner_iter, r.objective, r.primal_residual_z, r.primal_residual_q, r.dx_rel
            );
        }
        out
    }
}

/// Re-weighted ADMM. Pass 1 uses unit weights; each later pass sets
/// `W = 1/(|X̂| + ε)` from the previous estimate, keeps `X`, restarts the
/// splitting variables at `W∘X` and resets the multipliers.
pub fn solve_problem(problem: &Problem, config: &SolverConfig) -> Result<SolveReport> {
    config.validate()?;
    let start = Instant::now();
    let layout = &problem.layout;
    let mut weights = Weights::ones_for(layout);
    weights.epsilon = config.epsilon;
    let mut state = SolverState::initial(layout, weights.clone());
    let mut x_hat = state.x.clone();
    let mut records = Vec::new();
    let mut inner_iterations_used = Vec::with_capacity(config.max_count);
    let mut converged = Vec::with_capacity(config.max_count);

    for pass in 1..=config.max_count {
        if pass > 1 {
            weights = weight_update(&x_hat, config.epsilon)?;
            let wx = weights.apply(&x_hat)?;
            state = SolverState::initial(layout, weights.clone());
            state.x = x_hat.clone();
            state.z = wx.clone();
            state.q = wx;
            state.outer_iter = pass;
        }
        let inner = run_inner(problem, config, state)?;
        x_hat = proximal_finish(&inner.state, problem, &config.reg)?;
        inner_iterations_used.push(inner.records.len());
        converged.push(inner.converged);
        records.extend(inner.records);
        state = inner.state;
    }

    Ok(SolveReport {
        x_hat,
        records,
        inner_iterations_used,
        converged,
        weights,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

pub fn solve(a: &ComplexMatrix, b: &ComplexMatrix, config: &SolverConfig, layout: &ChunkLayout) -> Result<SolveReport> {
    let problem = Problem::new(a.clone(), b.clone(), *layout)?;
    solve_problem(&problem, config)
}
