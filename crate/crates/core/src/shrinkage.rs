//! Block soft-thresholding: the proximal operator of `τ‖·‖_F`.

use crate::error::{Error, Result};
use crate::matrix::{ChunkLayout, ComplexMatrix};

/// Scale factor `1 − τ/‖b‖` or `None` when the block collapses to zero
/// (`‖b‖ ≤ τ`, boundary included).
#[inline]
fn shrink_factor(norm: f64, tau: f64) -> Option<f64> {
    if norm <= tau {
        None
    } else {
        Some(1.0 - tau / norm)
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau.is_nan() || tau < 0.0 {
        return Err(Error::Domain(format!(
            "shrinkage threshold must be nonnegative, got {tau}"
        )));
    }
    Ok(())
}

/// `argmin_X τ‖X‖_F + ½‖X − b‖_F²  =  max(‖b‖_F − τ, 0) · b / ‖b‖_F`.
pub fn matrix_shrink(b: &ComplexMatrix, tau: f64) -> Result<ComplexMatrix> {
    check_tau(tau)?;
    Ok(match shrink_factor(b.frobenius_norm(), tau) {
        None => ComplexMatrix::zeros(b.rows(), b.cols()),
        Some(s) => b.scale(s),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Granularity {
    /// N × GM blocks, one per user.
    RowChunk,
    /// N × M blocks, one per user–RRH pair.
    ElementChunk,
}

/// Applies [`matrix_shrink`] independently to every chunk of `m`.
///
/// Chunk norms are accumulated in the same row-major order as on an
/// extracted block, so the result is bit-identical to extract/shrink/insert.
pub fn chunk_shrink(
    m: &ComplexMatrix,
    layout: &ChunkLayout,
    granularity: Granularity,
    tau: f64,
) -> Result<ComplexMatrix> {
    check_tau(tau)?;
    layout.check_x(m, "chunk_shrink")?;
    let mut out = m.clone();
    shrink_chunks_in_place(&mut out, layout, granularity, tau);
    Ok(out)
}

pub(crate) fn shrink_chunks_in_place(m: &mut ComplexMatrix, layout: &ChunkLayout, granularity: Granularity, tau: f64) {
    let col_blocks: Vec<std::ops::Range<usize>> = match granularity {
        Granularity::RowChunk => std::iter::once(0..layout.x_cols()).collect(),
        Granularity::ElementChunk => (0..layout.rrhs).map(|j| layout.rrh_cols(j)).collect(),
    };
    let width = m.cols();
    let data = m.as_mut_slice();
    for user in 0..layout.users {
        let rows = layout.user_rows(user);
        for cols in &col_blocks {
            let mut sq = 0.0;
            for r in rows.clone() {
                for z in &data[r * width + cols.start..r * width + cols.end] {
                    sq += z.norm_sqr();
                }
            }
            let factor = shrink_factor(sq.sqrt(), tau);
            for r in rows.clone() {
                for z in &mut data[r * width + cols.start..r * width + cols.end] {
                    *z = match factor {
                        None => num_complex::Complex64::new(0.0, 0.0),
                        Some(s) => *z * s,
                    };
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{chunk_extract, chunk_insert, C64};
    use crate::rng::RngStream;
    use proptest::prelude::*;

    fn random(rows: usize, cols: usize, rng: &mut RngStream) -> ComplexMatrix {
        ComplexMatrix::from_fn(rows, cols, |_, _| rng.complex_gaussian(1.0))
    }

    #[test]
    fn closed_form_examples() {
        let b = ComplexMatrix::from_real_rows(&[&[3.0, 4.0]]);
        let s = matrix_shrink(&b, 2.0).unwrap();
        assert!(s.sub(&b.scale(0.6)).unwrap().frobenius_norm() < 1e-15);

        let unit = ComplexMatrix::from_real_rows(&[&[0.6, 0.8]]);
        assert!(matrix_shrink(&unit, 1.0).unwrap().is_zero());
        assert!(matrix_shrink(&ComplexMatrix::zeros(2, 2), 0.0).unwrap().is_zero());
        assert!(matrix_shrink(&unit, -0.1).is_err());
        assert!(matrix_shrink(&unit, f64::NAN).is_err());
    }

    #[test]
    fn scalar_complex_soft_threshold_matches_grid_minimum() {
        let b = C64::new(3.0, 4.0);
        let tau = 2.0;
        let bm = ComplexMatrix::from_vec(1, 1, vec![b]).unwrap();
        let got = matrix_shrink(&bm, tau).unwrap().get(0, 0);
        // brute-force minimisation of tau|x| + ½|x − b|² on a 2-D grid, then refine
        let f = |x: C64| tau * x.norm() + 0.5 * (x - b).norm_sqr();
        let mut best = (C64::new(0.0, 0.0), f64::INFINITY);
        let mut center = C64::new(0.0, 0.0);
        let mut span = 6.0;
        for _ in 0..8 {
            for i in 0..=200 {
                for j in 0..=200 {
                    let x = center + C64::new(span * (i as f64 / 100.0 - 1.0), span * (j as f64 / 100.0 - 1.0));
                    let v = f(x);
                    if v < best.1 {
                        best = (x, v);
                    }
                }
            }
            center = best.0;
            span /= 20.0;
        }
        assert!((got - best.0).norm() < 1e-8, "{got} vs grid {}", best.0);
        assert!((got - b * 0.6).norm() < 1e-14);
    }

    #[test]
    fn chunk_examples() {
        let layout = ChunkLayout::new(2, 1, 1, 1, 1).unwrap();
        let m = ComplexMatrix::from_real_rows(&[&[3.0], &[4.0]]);
        let s = chunk_shrink(&m, &layout, Granularity::RowChunk, 3.5).unwrap();
        assert_eq!(s.get(0, 0), C64::new(0.0, 0.0));
        assert!((s.get(1, 0) - C64::new(0.5, 0.0)).norm() < 1e-15);

        let layout = ChunkLayout::new(3, 2, 2, 2, 1).unwrap();
        let mut rng = RngStream::new(3, 0);
        let m = random(6, 4, &mut rng);
        for g in [Granularity::RowChunk, Granularity::ElementChunk] {
            assert_eq!(chunk_shrink(&m, &layout, g, 0.0).unwrap(), m);
            assert!(chunk_shrink(&m, &layout, g, m.frobenius_norm() + 1.0)
                .unwrap()
                .is_zero());
        }
        assert!(chunk_shrink(&ComplexMatrix::zeros(5, 4), &layout, Granularity::RowChunk, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn norm_law(seed in any::<u64>(), tau in 0.0f64..4.0, rows in 1usize..4, cols in 1usize..4) {
            let b = random(rows, cols, &mut RngStream::new(seed, 0));
            let s = matrix_shrink(&b, tau).unwrap();
            let expected = (b.frobenius_norm() - tau).max(0.0);
            prop_assert!((s.frobenius_norm() - expected).abs() <= 1e-12 * (1.0 + expected));
        }

        #[test]
        fn prox_minimality(seed in any::<u64>(), tau in 0.0f64..3.0) {
            let mut rng = RngStream::new(seed, 1);
            let b = random(2, 3, &mut rng);
            let s = matrix_shrink(&b, tau).unwrap();
            let f = |x: &ComplexMatrix| tau * x.frobenius_norm() + 0.5 * x.sub(&b).unwrap().frobenius_norm_sqr();
            let fs = f(&s);
            for k in 0..100 {
                let scale = 10f64.powi(-(k % 6));
                let y = s.add(&random(2, 3, &mut rng).scale(scale)).unwrap();
                prop_assert!(fs <= f(&y) + 1e-14);
            }
        }

        #[test]
        fn nonexpansive(seed in any::<u64>(), tau in 0.0f64..3.0) {
            let mut rng = RngStream::new(seed, 2);
            let b1 = random(3, 2, &mut rng);
            let b2 = random(3, 2, &mut rng);
            let d = matrix_shrink(&b1, tau).unwrap().sub(&matrix_shrink(&b2, tau).unwrap()).unwrap();
            prop_assert!(d.frobenius_norm() <= b1.sub(&b2).unwrap().frobenius_norm() + 1e-14);
        }

        #[test]
        fn chunk_shrink_is_blockwise_matrix_shrink(seed in any::<u64>(), tau in 0.0f64..3.0) {
            let layout = ChunkLayout::new(3, 3, 2, 2, 1).unwrap();
            let m = random(6, 6, &mut RngStream::new(seed, 3));
            let row = chunk_shrink(&m, &layout, Granularity::RowChunk, tau).unwrap();
            let elem = chunk_shrink(&m, &layout, Granularity::ElementChunk, tau).unwrap();
            let mut row_ref = ComplexMatrix::zeros(6, 6);
            let mut elem_ref = ComplexMatrix::zeros(6, 6);
            for i in 1..=3 {
                let block = matrix_shrink(&chunk_extract(&m, &layout, i, None).unwrap(), tau).unwrap();
                chunk_insert(&mut row_ref, &layout, i, None, &block).unwrap();
                for j in 1..=3 {
                    let block = matrix_shrink(&chunk_extract(&m, &layout, i, Some(j)).unwrap(), tau).unwrap();
                    chunk_insert(&mut elem_ref, &layout, i, Some(j), &block).unwrap();
                }
            }
            prop_assert_eq!(row, row_ref);
            prop_assert_eq!(elem, elem_ref);
        }
    }
}
