//! Dense row-major `f64` matrices and the embedding/Gram newtypes.
//!
//! Storage order is row-major throughout the crate — entry `(r, c)` of an
//! `rows × cols` matrix lives at `data[r * cols + c]`. All file I/O declares
//! this order explicitly, which removes any ambiguity between `d × m` and
//! `m × d` conventions.
//!
//! The conventional shapes are:
//!
//! * `F` — `d × m` embedding matrix, one column per candidate item;
//! * `G` — `m × n` score matrix, one column per quality signal;
//! * `Q` — `d × n` query matrix;
//! * `Φ = FᵀF` — `m × m` Gram matrix;
//! * `W` — `n × m` residual score matrix.

use crate::error::{Error, Result};

// ── Matrix ──────────────────────────────────────────────────────────────────

/// Dense row-major matrix of 64-bit floats.
///
/// Invariants: `rows ≥ 1`, `cols ≥ 1`, and every entry is finite. The checked
/// constructors enforce these; internal kernels that build matrices entry by
/// entry keep them by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// All-zeros matrix of the given shape.
    ///
    /// # Panics
    /// Panics if either dimension is zero (an internal programming error;
    /// external inputs are validated before reaching this point).
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be positive");
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    /// Builds a matrix from row-major data, validating shape and finiteness.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidParameter(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "expected {rows}x{cols} = {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteEntry { row: pos / cols, col: pos % cols });
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix from a closure over `(row, col)`.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Matrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m.data[r * cols + c] = f(r, c);
            }
        }
        m
    }

    /// `n × n` identity.
    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Number of rows.
    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of columns.
    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Entry `(r, c)`.
    #[inline]
    pub fn at(&self, r: usize, c: usize) -> f64 {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c]
    }

    /// Sets entry `(r, c)`.
    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c] = v;
    }

    /// Row `r` as a contiguous slice.
    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        debug_assert!(r < self.rows);
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Mutable row `r`.
    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        debug_assert!(r < self.rows);
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Underlying row-major storage.
    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Mutable row-major storage.
    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Column `c` copied into a `Vec` (columns are strided in row-major order).
    pub fn col(&self, c: usize) -> Vec<f64> {
        debug_assert!(c < self.cols);
        (0..self.rows).map(|r| self.at(r, c)).collect()
    }

    /// ℓ2 norm of column `c`.
    pub fn col_norm(&self, c: usize) -> f64 {
        (0..self.rows).map(|r| self.at(r, c) * self.at(r, c)).sum::<f64>().sqrt()
    }

    /// Transposed copy.
    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |r, c| self.at(c, r))
    }

    /// Plain matrix product `self · other`.
    pub fn mat_mul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(r, k);
                let orow = other.row(k);
                let out_row = out.row_mut(r);
                for c in 0..other.cols {
                    out_row[c] += a * orow[c];
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ · other` without materializing the transpose.
    pub fn transpose_mul(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply ({}x{})^T by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.cols, other.cols);
        for k in 0..self.rows {
            let srow = self.row(k);
            let orow = other.row(k);
            for r in 0..self.cols {
                let a = srow[r];
                let out_row = out.row_mut(r);
                for c in 0..other.cols {
                    out_row[c] += a * orow[c];
                }
            }
        }
        Ok(out)
    }

    /// Frobenius norm.
    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Sum of diagonal entries (square matrices).
    pub fn trace(&self) -> f64 {
        debug_assert_eq!(self.rows, self.cols);
        (0..self.rows).map(|i| self.at(i, i)).sum()
    }

    /// Largest absolute asymmetry `|A[i][j] − A[j][i]|` (square matrices).
    pub fn max_asymmetry(&self) -> f64 {
        debug_assert_eq!(self.rows, self.cols);
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self.at(i, j) - self.at(j, i)).abs());
            }
        }
        worst
    }
}

// ── EmbeddingMatrix ─────────────────────────────────────────────────────────

/// A `d × m` pool of candidate embeddings, one column per item.
///
/// The `normalized` flag records whether every column has unit ℓ2 norm
/// (within `1e-8`); [`crate::linalg::normalize_columns`] is the only way to
/// set it. Nothing in this crate normalizes implicitly.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    inner: Matrix,
    normalized: bool,
}

impl EmbeddingMatrix {
    /// Wraps a raw matrix without normalizing (flag unset).
    pub fn raw(inner: Matrix) -> Self {
        EmbeddingMatrix { inner, normalized: false }
    }

    /// Internal constructor for normalized pools.
    pub(crate) fn normalized(inner: Matrix) -> Self {
        EmbeddingMatrix { inner, normalized: true }
    }

    /// Embedding dimension `d`.
    #[inline]
    pub fn d(&self) -> usize {
        self.inner.rows()
    }

    /// Pool size `m`.
    #[inline]
    pub fn m(&self) -> usize {
        self.inner.cols()
    }

    /// Whether columns are unit-norm.
    #[inline]
    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// The underlying `d × m` matrix.
    #[inline]
    pub fn matrix(&self) -> &Matrix {
        &self.inner
    }

    /// Consumes the wrapper, returning the underlying matrix.
    pub fn into_matrix(self) -> Matrix {
        self.inner
    }

    /// Copies the selected columns into a dense `d × |S|` matrix.
    pub fn columns(&self, indices: &[usize]) -> Matrix {
        Matrix::from_fn(self.d(), indices.len(), |r, c| self.inner.at(r, indices[c]))
    }
}

// ── GramMatrix ──────────────────────────────────────────────────────────────

/// The `m × m` Gram matrix `Φ = FᵀF` of a pool.
///
/// Exactly symmetric by construction (only the upper triangle is computed and
/// then mirrored); unit diagonal when built from a normalized pool.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    inner: Matrix,
}

impl GramMatrix {
    pub(crate) fn new(inner: Matrix) -> Self {
        debug_assert_eq!(inner.rows(), inner.cols());
        GramMatrix { inner }
    }

    /// Pool size `m`.
    #[inline]
    pub fn m(&self) -> usize {
        self.inner.rows()
    }

    /// Entry `Φ[i][j]`.
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.inner.at(i, j)
    }

    /// The underlying `m × m` matrix.
    #[inline]
    pub fn matrix(&self) -> &Matrix {
        &self.inner
    }

    /// Copies `Φ[S, S]` into a dense `|S| × |S|` matrix.
    pub fn submatrix(&self, indices: &[usize]) -> Matrix {
        Matrix::from_fn(indices.len(), indices.len(), |r, c| {
            self.inner.at(indices[r], indices[c])
        })
    }
}

// ── tests ───────────────────────────────────────────────────────────────────
