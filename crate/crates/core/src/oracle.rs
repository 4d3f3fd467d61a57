//! Independent certificates for ADMM solutions at fixed weights.
//!
//! [`prox_grad_solve`] minimises the same objective with a monotone
//! accelerated proximal-gradient method (MFISTA). It works in the scaled
//! variable `Y = W∘X`, where both penalties become plain chunk norms and
//! their joint prox is exact: element-chunk shrinkage followed by row-chunk
//! shrinkage. [`kkt_residual`] measures how far a candidate violates the
//! subgradient optimality conditions.

use crate::error::{Error, Result};
use crate::functional::{penalty_on_scaled, Regularization, Weights};
use crate::matrix::{chunk_norms, ChunkLayout, ComplexMatrix, C64};
use crate::shrinkage::{shrink_chunks_in_place, Granularity};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleConfig {
    pub max_iters: usize,
    /// Stop once the objective improved by less than `tol_obj` (relative)
    /// over the last [`OracleConfig::window`] iterations.
    pub tol_obj: f64,
    pub window: usize,
    pub power_iters: usize,
    pub lipschitz_inflation: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            max_iters: 20_000,
            tol_obj: 1e-10,
            window: 100,
            power_iters: 100,
            lipschitz_inflation: 1.02,
        }
    }
}

impl OracleConfig {
    fn validate(&self) -> Result<()> {
        if self.max_iters == 0 || self.window == 0 || self.power_iters == 0 {
            return Err(Error::Domain("oracle iteration counts must be >= 1".into()));
        }
        if self.tol_obj.is_nan()
            || self.tol_obj <= 0.0
            || self.lipschitz_inflation.is_nan()
            || self.lipschitz_inflation < 1.0
        {
            return Err(Error::Domain("oracle tolerances must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct OracleResult {
    pub x: ComplexMatrix,
    pub objective: f64,
    /// Objective after every iteration (nonincreasing).
    pub objective_history: Vec<f64>,
    pub lipschitz: f64,
}

struct Scaled<'a> {
    a: &'a ComplexMatrix,
    a_adj: ComplexMatrix,
    b: &'a ComplexMatrix,
    weights: &'a Weights,
    reg: &'a Regularization,
    layout: &'a ChunkLayout,
}

impl Scaled<'_> {
    fn residual(&self, y: &ComplexMatrix) -> ComplexMatrix {
        let x = self.weights.apply_inverse(y).expect("shape");
        self.a.matmul(&x).expect("shape").sub(self.b).expect("shape")
    }

    /// `W^∘(−1) ∘ A^H r`
    fn pullback(&self, r: &ComplexMatrix) -> ComplexMatrix {
        self.weights
            .apply_inverse(&self.a_adj.matmul(r).expect("shape"))
            .expect("shape")
    }

    fn objective(&self, y: &ComplexMatrix) -> f64 {
        0.5 * self.residual(y).frobenius_norm_sqr() + penalty_on_scaled(y, self.reg, self.layout)
    }

    fn prox(&self, v: &mut ComplexMatrix, step: f64) {
        shrink_chunks_in_place(v, self.layout, Granularity::ElementChunk, step * self.reg.alpha2);
        shrink_chunks_in_place(v, self.layout, Granularity::RowChunk, step * self.reg.alpha1);
    }

    /// Largest eigenvalue of `Y ↦ W^-1 ∘ A^H A (W^-1 ∘ Y)` by power iteration.
    fn lipschitz(&self, iters: usize) -> f64 {
        let (rows, cols) = self.layout.x_shape();
        let mut v = ComplexMatrix::from_fn(rows, cols, |r, c| {
            let t = (r * 7919 + c * 104_729 + 1) as f64;
            C64::new(1.0 + 0.5 * (t * 0.618).sin(), 0.5 * (t * 0.377).cos())
        });
        let mut lambda = 0.0;
        for _ in 0..iters {
            let n = v.frobenius_norm();
            if n == 0.0 {
                return 0.0;
            }
            v = v.scale(1.0 / n);
            let x = self.weights.apply_inverse(&v).expect("shape");
            let av = self.a.matmul(&x).expect("shape");
            let tv = self.pullback(&av);
            lambda = av.frobenius_norm_sqr();
            v = tv;
        }
        lambda
    }
}

fn check_inputs(a: &ComplexMatrix, b: &ComplexMatrix, weights: &Weights, layout: &ChunkLayout) -> Result<()> {
    layout.validate()?;
    layout.check_a(a, "oracle A")?;
    layout.check_b(b, "oracle B")?;
    if weights.shape() != layout.x_shape() {
        return Err(Error::Domain("weights do not match layout".into()));
    }
    Ok(())
}

pub fn prox_grad_solve_detailed(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    weights: &Weights,
    reg: &Regularization,
    layout: &ChunkLayout,
    config: &OracleConfig,
) -> Result<OracleResult> {
    config.validate()?;
    check_inputs(a, b, weights, layout)?;
    let sp = Scaled {
        a,
        a_adj: a.adjoint(),
        b,
        weights,
        reg,
        layout,
    };
    let lip = sp.lipschitz(config.power_iters) * config.lipschitz_inflation;
    let (rows, cols) = layout.x_shape();
    let mut x_prev = ComplexMatrix::zeros(rows, cols);
    let mut f_prev = sp.objective(&x_prev);
    let mut history = Vec::new();
    if lip == 0.0 {
        // A = 0: the minimiser of the penalty alone.
        return Ok(OracleResult {
            x: x_prev,
            objective: f_prev,
            objective_history: vec![f_prev],
            lipschitz: 0.0,
        });
    }
    let step = 1.0 / lip;
    let mut y = x_prev.clone();
    let mut t = 1.0f64;

    for it in 0..config.max_iters {
        let grad = sp.pullback(&sp.residual(&y));
        let mut z = y.sub(&grad.scale(step))?;
        sp.prox(&mut z, step);
        if !z.is_finite() {
            return Err(Error::Divergence {
                outer: 1,
                iteration: it + 1,
            });
        }
        let f_z = sp.objective(&z);
        let (x, f_x) = if f_z <= f_prev {
            (z.clone(), f_z)
        } else {
            (x_prev.clone(), f_prev)
        };
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        // y = x + (t/t')(z − x) + ((t − 1)/t')(x − x_prev)
        let c1 = t / t_next;
        let c2 = (t - 1.0) / t_next;
        let data = x
            .as_slice()
            .iter()
            .zip(z.as_slice())
            .zip(x_prev.as_slice())
            .map(|((&xk, &zk), &xp)| xk + (zk - xk) * c1 + (xk - xp) * c2)
            .collect();
        y = ComplexMatrix::from_vec(rows, cols, data)?;
        t = t_next;
        x_prev = x;
        f_prev = f_x;
        history.push(f_x);

        let k = history.len();
        if k > config.window {
            let old = history[k - 1 - config.window];
            if old - f_x <= config.tol_obj * f_x.abs().max(f64::MIN_POSITIVE) {
                break;
            }
        }
    }
    Ok(OracleResult {
        x: weights.apply_inverse(&x_prev)?,
        objective: f_prev,
        objective_history: history,
        lipschitz: lip,
    })
}

/// Reference minimiser of the weighted objective at fixed `W`.
pub fn prox_grad_solve(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    weights: &Weights,
    reg: &Regularization,
    layout: &ChunkLayout,
    config: &OracleConfig,
) -> Result<ComplexMatrix> {
    Ok(prox_grad_solve_detailed(a, b, weights, reg, layout, config)?.x)
}

/// Optimality violation of `x_hat`, scaled by `1 / max(1, ‖A^H B‖_F)`.
///
/// With `G = A^H(AX − B)` the conditions are, per row chunk `i`:
/// * `X_i ≠ 0`: `G_ij + α1 V_ij + α2 U_ij = 0` on nonzero element chunks,
///   with `V_i = X_i∘W_i²/‖W_i∘X_i‖` and `U_ij = X_ij∘W_ij²/‖W_ij∘X_ij‖`;
///   on zero element chunks `‖G_ij ∘ W_ij^-1‖ ≤ α2`.
/// * `X_i = 0`: some split `−G_i∘W_i^-1 = α1 v + α2 u` with `‖v‖ ≤ 1` and
///   every `‖u_j‖ ≤ 1` must exist, i.e. the element-shrunk
///   `S_α2(−G_i∘W_i^-1)` has norm at most `α1`.
///
/// Returns the larger of the stationarity norm on the support and the worst
/// dual-feasibility excess.
pub fn kkt_residual(
    x_hat: &ComplexMatrix,
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    weights: &Weights,
    reg: &Regularization,
    layout: &ChunkLayout,
) -> Result<f64> {
    check_inputs(a, b, weights, layout)?;
    layout.check_x(x_hat, "kkt x_hat")?;
    let a_adj = a.adjoint();
    let scale = a_adj.matmul(b)?.frobenius_norm().max(1.0);
    let grad = a_adj.matmul(&a.matmul(x_hat)?.sub(b)?)?;
    let wx = weights.apply(x_hat)?;
    let norms = chunk_norms(&wx, layout);
    let (alpha1, alpha2) = (reg.alpha1, reg.alpha2);

    let mut stationarity_sq = 0.0;
    let mut worst_dual = 0.0f64;
    for user in 0..layout.users {
        let rows = layout.user_rows(user);
        if norms.rows[user] == 0.0 {
            let mut shrunk_sq = 0.0;
            for rrh in 0..layout.rrhs {
                let mut sq = 0.0;
                for r in rows.clone() {
                    for c in layout.rrh_cols(rrh) {
                        sq += (grad.get(r, c) / weights.get(r, c)).norm_sqr();
                    }
                }
                shrunk_sq += (sq.sqrt() - alpha2).max(0.0).powi(2);
            }
            worst_dual = worst_dual.max(shrunk_sq.sqrt() - alpha1);
            continue;
        }
        let row_norm = norms.rows[user];
        for rrh in 0..layout.rrhs {
            let el_norm = norms.element(user, rrh);
            if el_norm == 0.0 {
                let mut sq = 0.0;
                for r in rows.clone() {
                    for c in layout.rrh_cols(rrh) {
                        sq += (grad.get(r, c) / weights.get(r, c)).norm_sqr();
                    }
                }
                worst_dual = worst_dual.max(sq.sqrt() - alpha2);
            } else {
                for r in rows.clone() {
                    for c in layout.rrh_cols(rrh) {
                        let w2 = weights.get(r, c).powi(2);
                        let xv = x_hat.get(r, c) * w2;
                        let g = grad.get(r, c) + xv * (alpha1 / row_norm) + xv * (alpha2 / el_norm);
                        stationarity_sq += g.norm_sqr();
                    }
                }
            }
        }
    }
    Ok(stationarity_sq.sqrt().max(worst_dual.max(0.0)) / scale)
}
