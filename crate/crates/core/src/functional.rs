//! The weighted mixed ℓ2,1 objective
//!
//! ```text
//! f(X) = α1 Σ_i ‖W_i ∘ X_i‖_F + α2 Σ_{i,j} ‖W_ij ∘ X_ij‖_F + ½‖AX − B‖_F²
//! ```
//!
//! together with the re-weighting rule and the thresholds `α1*`, `α2*`
//! above which the minimiser is identically zero.
//!
//! How to split the budget between `α1` and `α2` is left to the caller:
//! small dense networks favour a larger `α1` (row-chunk sparsity
//! dominates), large networks a larger `α2`.

use std::fmt;
use std::str::FromStr;

use crate::error::{dim_err, Error, Result};
use crate::matrix::{chunk_norms, ChunkLayout, ComplexMatrix, C64};

/// Default fraction of the zero-solution thresholds used by presets.
pub const DEFAULT_FRACTION: f64 = 0.03;
pub const DEFAULT_EPSILON: f64 = 1e-8;

/// Strictly positive real weights, one per entry of `X`.
#[derive(Clone, Debug, PartialEq)]
pub struct Weights {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    pub epsilon: f64,
}

impl Weights {
    pub fn ones(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            values: vec![1.0; rows * cols],
            epsilon: DEFAULT_EPSILON,
        }
    }

    pub fn ones_for(layout: &ChunkLayout) -> Self {
        Self::ones(layout.x_rows(), layout.x_cols())
    }

    pub fn from_values(rows: usize, cols: usize, values: Vec<f64>, epsilon: f64) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(dim_err("weights", (rows, cols), (values.len(), 1)));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::Domain(format!("weights must be positive and finite, found {v}")));
        }
        Ok(Self {
            rows,
            cols,
            values,
            epsilon,
        })
    }

    /// Reads weights stored as a complex matrix with zero imaginary parts.
    pub fn from_matrix(m: &ComplexMatrix, epsilon: f64) -> Result<Self> {
        if let Some(z) = m.as_slice().iter().find(|z| z.im != 0.0) {
            return Err(Error::Domain(format!("weights must be real, found {z}")));
        }
        Self::from_values(m.rows(), m.cols(), m.as_slice().iter().map(|z| z.re).collect(), epsilon)
    }

    pub fn to_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.rows, self.cols, |r, c| C64::new(self.get(r, c), 0.0))
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.cols + c]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_all_ones(&self) -> bool {
        self.values.iter().all(|&v| v == 1.0)
    }

    fn check(&self, m: &ComplexMatrix, context: &'static str) -> Result<()> {
        if m.shape() != self.shape() {
            return Err(dim_err(context, self.shape(), m.shape()));
        }
        Ok(())
    }

    /// `W ∘ m`
    pub fn apply(&self, m: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check(m, "weights apply")?;
        Ok(self.zip(m, |w, z| z * w))
    }

    /// `W^∘(−1) ∘ m`
    pub fn apply_inverse(&self, m: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check(m, "weights apply_inverse")?;
        Ok(self.zip(m, |w, z| z / w))
    }

    fn zip(&self, m: &ComplexMatrix, f: impl Fn(f64, C64) -> C64) -> ComplexMatrix {
        let data = self.values.iter().zip(m.as_slice()).map(|(&w, &z)| f(w, z)).collect();
        ComplexMatrix::from_vec(self.rows, self.cols, data).expect("shape checked")
    }
}

/// `W[i,j] = 1 / (|X[i,j]| + ε)`.
pub fn weight_update(x_prev: &ComplexMatrix, epsilon: f64) -> Result<Weights> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Domain(format!("epsilon must be positive, got {epsilon}")));
    }
    if !x_prev.is_finite() {
        return Err(Error::Domain("previous estimate is not finite".into()));
    }
    let values = x_prev.as_slice().iter().map(|z| 1.0 / (z.norm() + epsilon)).collect();
    Weights::from_values(x_prev.rows(), x_prev.cols(), values, epsilon)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Regularization {
    pub alpha1: f64,
    pub alpha2: f64,
}

impl Regularization {
    pub fn new(alpha1: f64, alpha2: f64) -> Result<Self> {
        for (name, v) in [("alpha1", alpha1), ("alpha2", alpha2)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("{name} must be nonnegative and finite, got {v}")));
            }
        }
        Ok(Self { alpha1, alpha2 })
    }

    pub fn is_zero(&self) -> bool {
        self.alpha1 == 0.0 && self.alpha2 == 0.0
    }

    /// False when either parameter reaches its zero-solution threshold.
    pub fn is_nondegenerate(&self, bounds: &TuningBounds) -> bool {
        self.alpha1 < bounds.alpha1_star && self.alpha2 < bounds.alpha2_star
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TuningBounds {
    pub alpha1_star: f64,
    pub alpha2_star: f64,
}

fn check_problem(
    x: Option<&ComplexMatrix>,
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    weights: &Weights,
    layout: &ChunkLayout,
) -> Result<()> {
    layout.check_a(a, "A")?;
    layout.check_b(b, "B")?;
    if let Some(x) = x {
        layout.check_x(x, "X")?;
    }
    if weights.shape() != layout.x_shape() {
        return Err(dim_err("weights", layout.x_shape(), weights.shape()));
    }
    Ok(())
}

/// Regularisation part `α1 Σ‖W_i∘X_i‖ + α2 Σ‖W_ij∘X_ij‖` on `Y = W∘X`.
pub(crate) fn penalty_on_scaled(y: &ComplexMatrix, reg: &Regularization, layout: &ChunkLayout) -> f64 {
    let norms = chunk_norms(y, layout);
    reg.alpha1 * norms.rows.iter().sum::<f64>() + reg.alpha2 * norms.elements.iter().sum::<f64>()
}

pub fn objective(
    x: &ComplexMatrix,
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    weights: &Weights,
    reg: &Regularization,
    layout: &ChunkLayout,
) -> Result<f64> {
    check_problem(Some(x), a, b, weights, layout)?;
    let residual = a.matmul(x)?.sub(b)?;
    let y = weights.apply(x)?;
    Ok(penalty_on_scaled(&y, reg, layout) + 0.5 * residual.frobenius_norm_sqr())
}

/// `α1* = max_i ‖(A_i^H B) ∘ W_i^∘(−1)‖_F`, `α2* = max_ij ‖(A_i^H B_j) ∘ W_ij^∘(−1)‖_F`.
pub fn tuning_bounds(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    weights: &Weights,
    layout: &ChunkLayout,
) -> Result<TuningBounds> {
    check_problem(None, a, b, weights, layout)?;
    let correlation = a.adjoint().matmul(b)?;
    let scaled = weights.apply_inverse(&correlation)?;
    let norms = chunk_norms(&scaled, layout);
    let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    Ok(TuningBounds {
        alpha1_star: max(&norms.rows),
        alpha2_star: max(&norms.elements),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PresetKind {
    Full,
    RowLasso,
    ElementLasso,
}

impl PresetKind {
    pub fn label(&self) -> &'static str {
        match self {
            PresetKind::Full => "full",
            PresetKind::RowLasso => "row_lasso",
            PresetKind::ElementLasso => "element_lasso",
        }
    }
}

impl fmt::Display for PresetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for PresetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "full" => Ok(PresetKind::Full),
            "row" | "row_lasso" => Ok(PresetKind::RowLasso),
            "element" | "element_lasso" => Ok(PresetKind::ElementLasso),
            other => Err(Error::Domain(format!("unknown preset `{other}`"))),
        }
    }
}

pub fn preset(kind: PresetKind, bounds: &TuningBounds, fraction: f64) -> Result<Regularization> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Domain(format!("fraction must lie in (0, 1), got {fraction}")));
    }
    let (a1, a2) = match kind {
        PresetKind::Full => (fraction * bounds.alpha1_star, fraction * bounds.alpha2_star),
        PresetKind::RowLasso => (fraction * bounds.alpha1_star, 0.0),
        PresetKind::ElementLasso => (0.0, fraction * bounds.alpha2_star),
    };
    Regularization::new(a1, a2)
}
