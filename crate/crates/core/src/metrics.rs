//! Estimation and detection quality.

use std::collections::BTreeSet;

use crate::error::{dim_err, Error, Result};
use crate::matrix::{chunk_norms, ChunkLayout, ComplexMatrix};

/// NMSE floor reported for exact recovery.
pub const NMSE_FLOOR_DB: f64 = -300.0;
pub const DEFAULT_REL_THRESHOLD: f64 = 0.1;

/// `10·log10(‖X̂ − X‖² / ‖X‖²)`, clamped below at [`NMSE_FLOOR_DB`].
pub fn nmse(x_hat: &ComplexMatrix, truth_x: &ComplexMatrix) -> Result<f64> {
    if x_hat.shape() != truth_x.shape() {
        return Err(dim_err("nmse", truth_x.shape(), x_hat.shape()));
    }
    let signal = truth_x.frobenius_norm_sqr();
    if signal == 0.0 {
        return Err(Error::Domain("NMSE undefined for a zero reference".into()));
    }
    let err = x_hat.sub(truth_x)?.frobenius_norm_sqr();
    Ok((10.0 * (err / signal).log10()).max(NMSE_FLOOR_DB))
}

#[derive(Clone, Debug, PartialEq)]
pub struct DetectionResult {
    /// 1-based user indices.
    pub estimated_active: BTreeSet<usize>,
    /// `‖X̂_i‖_F` per user.
    pub row_energies: Vec<f64>,
    /// Absolute energy threshold that was applied.
    pub threshold_used: f64,
}

/// User `i` is active iff `‖X̂_i‖ > rel_threshold · max_k ‖X̂_k‖`.
pub fn detect_active(x_hat: &ComplexMatrix, layout: &ChunkLayout, rel_threshold: f64) -> Result<DetectionResult> {
    if !(rel_threshold > 0.0 && rel_threshold < 1.0) {
        return Err(Error::Domain(format!(
            "relative threshold must lie in (0, 1), got {rel_threshold}"
        )));
    }
    layout.check_x(x_hat, "detect_active")?;
    let row_energies = chunk_norms(x_hat, layout).rows;
    let peak = row_energies.iter().copied().fold(0.0, f64::max);
    let threshold_used = rel_threshold * peak;
    let estimated_active = if peak == 0.0 {
        BTreeSet::new()
    } else {
        row_energies
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > threshold_used)
            .map(|(i, _)| i + 1)
            .collect()
    };
    Ok(DetectionResult {
        estimated_active,
        row_energies,
        threshold_used,
    })
}

/// Misses plus false alarms: the size of the symmetric difference.
pub fn detection_errors(estimated: &BTreeSet<usize>, truth: &BTreeSet<usize>) -> usize {
    estimated.symmetric_difference(truth).count()
}
