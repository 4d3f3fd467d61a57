//! Dense complex matrices and the chunked view of the unknown channel matrix.
//!
//! The unknown `X` has `K·N` rows (one block of `N` rows per user) and `G·M`
//! columns (one block of `M` columns per RRH). A *row chunk* is the `N × GM`
//! block of one user; an *element chunk* is the `N × M` block of one
//! user–RRH pair. Public chunk indices are 1-based; everything internal is
//! 0-based.

use std::ops::Range;

use num_complex::Complex64;

use crate::error::{dim_err, Error, Result};

pub type C64 = Complex64;

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension {
                context: "from_vec",
                expected: format!("{} entries", rows * cols),
                got: format!("{} entries", data.len()),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from real-valued rows. Panics on ragged input.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Self::from_fn(rows.len(), cols, |r, c| C64::new(rows[r][c], 0.0))
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: C64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn row(&self, r: usize) -> &[C64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<C64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn set_column(&mut self, c: usize, values: &[C64]) {
        debug_assert_eq!(values.len(), self.rows);
        for (r, v) in values.iter().enumerate() {
            self.set(r, c, *v);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    pub fn frobenius_norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_sqr().sqrt()
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|z| z * s)
    }

    fn zip_with(&self, other: &Self, context: &'static str, f: impl Fn(C64, C64) -> C64) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(dim_err(context, self.shape(), other.shape()));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    pub fn hadamard(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "hadamard", |a, b| a * b)
    }

    /// `self · other`.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension {
                context: "matmul",
                expected: format!("inner dimension {}", self.cols),
                got: format!("{}", other.rows),
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            let out_row = &mut out.data[r * other.cols..(r + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[r * self.cols + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let other_row = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, &b) in out_row.iter_mut().zip(other_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.get(c, r).conj())
    }

    /// `self · v` for a column vector.
    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        debug_assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(&a, &b)| a * b).sum())
            .collect()
    }
}

/// Frobenius norm `sqrt(Σ |m_ij|²)`.
pub fn frobenius_norm(m: &ComplexMatrix) -> f64 {
    m.frobenius_norm()
}

/// Element-wise product.
pub fn hadamard(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    a.hadamard(b)
}

/// Dimensions of a C-RAN problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ChunkLayout {
    /// K
    pub users: usize,
    /// G
    pub rrhs: usize,
    /// M
    pub rrh_antennas: usize,
    /// N
    pub user_antennas: usize,
    /// L
    pub pilot_len: usize,
}

impl ChunkLayout {
    pub fn new(users: usize, rrhs: usize, rrh_antennas: usize, user_antennas: usize, pilot_len: usize) -> Result<Self> {
        let layout = Self {
            users,
            rrhs,
            rrh_antennas,
            user_antennas,
            pilot_len,
        };
        layout.validate()?;
        Ok(layout)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("K", self.users),
            ("G", self.rrhs),
            ("M", self.rrh_antennas),
            ("N", self.user_antennas),
            ("L", self.pilot_len),
        ] {
            if v == 0 {
                return Err(Error::Domain(format!("layout field {name} must be >= 1")));
            }
        }
        Ok(())
    }

    pub fn with_pilot_len(self, pilot_len: usize) -> Self {
        Self { pilot_len, ..self }
    }

    /// KN
    #[inline]
    pub fn x_rows(&self) -> usize {
        self.users * self.user_antennas
    }

    /// GM
    #[inline]
    pub fn x_cols(&self) -> usize {
        self.rrhs * self.rrh_antennas
    }

    pub fn x_shape(&self) -> (usize, usize) {
        (self.x_rows(), self.x_cols())
    }

    pub fn a_shape(&self) -> (usize, usize) {
        (self.pilot_len, self.x_rows())
    }

    pub fn b_shape(&self) -> (usize, usize) {
        (self.pilot_len, self.x_cols())
    }

    pub fn check_x(&self, m: &ComplexMatrix, context: &'static str) -> Result<()> {
        check_shape(m, self.x_shape(), context)
    }

    pub fn check_a(&self, m: &ComplexMatrix, context: &'static str) -> Result<()> {
        check_shape(m, self.a_shape(), context)
    }

    pub fn check_b(&self, m: &ComplexMatrix, context: &'static str) -> Result<()> {
        check_shape(m, self.b_shape(), context)
    }

    /// Rows of row chunk `user` (0-based).
    #[inline]
    pub fn user_rows(&self, user: usize) -> Range<usize> {
        user * self.user_antennas..(user + 1) * self.user_antennas
    }

    /// Columns of RRH `rrh` (0-based).
    #[inline]
    pub fn rrh_cols(&self, rrh: usize) -> Range<usize> {
        rrh * self.rrh_antennas..(rrh + 1) * self.rrh_antennas
    }

    fn check_user(&self, i: usize) -> Result<usize> {
        if i == 0 || i > self.users {
            return Err(Error::Index {
                what: "user",
                index: i,
                max: self.users,
            });
        }
        Ok(i - 1)
    }

    fn check_rrh(&self, j: usize) -> Result<usize> {
        if j == 0 || j > self.rrhs {
            return Err(Error::Index {
                what: "rrh",
                index: j,
                max: self.rrhs,
            });
        }
        Ok(j - 1)
    }
}

pub(crate) fn check_shape(m: &ComplexMatrix, expected: (usize, usize), context: &'static str) -> Result<()> {
    if m.shape() != expected {
        return Err(dim_err(context, expected, m.shape()));
    }
    Ok(())
}

fn block_bounds(layout: &ChunkLayout, user0: usize, rrh0: Option<usize>) -> (Range<usize>, Range<usize>) {
    let rows = layout.user_rows(user0);
    let cols = match rrh0 {
        Some(j) => layout.rrh_cols(j),
        None => 0..layout.x_cols(),
    };
    (rows, cols)
}

/// Row chunk `i` (N × GM) or, with `j`, element chunk `(i, j)` (N × M).
/// Indices are 1-based.
pub fn chunk_extract(x: &ComplexMatrix, layout: &ChunkLayout, i: usize, j: Option<usize>) -> Result<ComplexMatrix> {
    layout.check_x(x, "chunk_extract")?;
    let user0 = layout.check_user(i)?;
    let rrh0 = j.map(|j| layout.check_rrh(j)).transpose()?;
    let (rows, cols) = block_bounds(layout, user0, rrh0);
    let width = cols.len();
    let mut data = Vec::with_capacity(rows.len() * width);
    for r in rows.clone() {
        data.extend_from_slice(&x.row(r)[cols.clone()]);
    }
    ComplexMatrix::from_vec(rows.len(), width, data)
}

/// Writes `block` back into the chunk addressed by `(i, j)`. Inverse of [`chunk_extract`].
pub fn chunk_insert(
    x: &mut ComplexMatrix,
    layout: &ChunkLayout,
    i: usize,
    j: Option<usize>,
    block: &ComplexMatrix,
) -> Result<()> {
    layout.check_x(x, "chunk_insert")?;
    let user0 = layout.check_user(i)?;
    let rrh0 = j.map(|j| layout.check_rrh(j)).transpose()?;
    let (rows, cols) = block_bounds(layout, user0, rrh0);
    check_shape(block, (rows.len(), cols.len()), "chunk_insert")?;
    for (br, r) in rows.enumerate() {
        for (bc, c) in cols.clone().enumerate() {
            x.set(r, c, block.get(br, bc));
        }
    }
    Ok(())
}

/// Weighted chunk norms of a matrix: `‖W_i ∘ X_i‖_F` per user and
/// `‖W_ij ∘ X_ij‖_F` per user–RRH pair (row-major `K × G`).
#[derive(Clone, Debug, PartialEq)]
pub struct ChunkNorms {
    pub rows: Vec<f64>,
    pub elements: Vec<f64>,
    rrhs: usize,
}

impl ChunkNorms {
    /// Element-chunk norm for 0-based `(user, rrh)`.
    pub fn element(&self, user: usize, rrh: usize) -> f64 {
        self.elements[user * self.rrhs + rrh]
    }
}

pub fn chunk_norm_map(x: &ComplexMatrix, w: &ComplexMatrix, layout: &ChunkLayout) -> Result<ChunkNorms> {
    layout.check_x(x, "chunk_norm_map")?;
    layout.check_x(w, "chunk_norm_map")?;
    let wx = x.hadamard(w)?;
    Ok(chunk_norms(&wx, layout))
}

/// Unweighted chunk norms of an already conforming matrix.
pub(crate) fn chunk_norms(m: &ComplexMatrix, layout: &ChunkLayout) -> ChunkNorms {
    let mut rows = Vec::with_capacity(layout.users);
    let mut elements = Vec::with_capacity(layout.users * layout.rrhs);
    for user in 0..layout.users {
        let mut row_sq = 0.0;
        for r in layout.user_rows(user) {
            row_sq += m.row(r).iter().map(|z| z.norm_sqr()).sum::<f64>();
        }
        rows.push(row_sq.sqrt());
        for rrh in 0..layout.rrhs {
            let mut sq = 0.0;
            for r in layout.user_rows(user) {
                sq += m.row(r)[layout.rrh_cols(rrh)].iter().map(|z| z.norm_sqr()).sum::<f64>();
            }
            elements.push(sq.sqrt());
        }
    }
    ChunkNorms {
        rows,
        elements,
        rrhs: layout.rrhs,
    }
}
