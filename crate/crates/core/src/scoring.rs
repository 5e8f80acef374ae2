//! Score constructions: the regularized query matrix `Q_ε`, geometry-only
//! self-compression scores, and aggregation of external multi-attribute
//! evaluations.
//!
//! `Q_ε` solves the ridge problem `min_Q ‖FᵀQ − G‖²_F + ε‖Q‖²_F`, whose unique
//! minimizer is `Q_ε = F(FᵀF + εI_m)⁻¹G`. It is computed here in the
//! equivalent d-sized form `(F·Fᵀ + εI_d)⁻¹·F·G`, which costs `O(d³ + m·d²)`
//! instead of `O(m³)` — the pool is typically much larger than the embedding
//! dimension.

use crate::error::{Error, Result};
use crate::linalg::{cholesky, Jitter};
use crate::matrix::{EmbeddingMatrix, GramMatrix, Matrix};

/// Default ridge ε for [`regularized_query`]: keeps fit residuals below score
/// quantization on unit-norm embeddings while staying well-posed.
pub const DEFAULT_EPSILON: f64 = 1e-6;

// ── Domain types ────────────────────────────────────────────────────────────

/// An `m × n` matrix of per-item quality signals, one labeled column each.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    inner: Matrix,
    labels: Vec<String>,
}

impl ScoreMatrix {
    /// Wraps a matrix of scores with one label per column.
    pub fn new(inner: Matrix, labels: Vec<String>) -> Result<Self> {
        if labels.len() != inner.cols() {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {} score columns",
                labels.len(),
                inner.cols()
            )));
        }
        Ok(ScoreMatrix { inner, labels })
    }

    /// Single-column scores with one label.
    pub fn single(values: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        let m = values.len();
        ScoreMatrix::new(Matrix::from_vec(m, 1, values)?, vec![label.into()])
    }

    /// Pool size `m`.
    #[inline]
    pub fn m(&self) -> usize {
        self.inner.rows()
    }

    /// Number of signals `n`.
    #[inline]
    pub fn n(&self) -> usize {
        self.inner.cols()
    }

    /// Column labels.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// The underlying `m × n` matrix.
    #[inline]
    pub fn matrix(&self) -> &Matrix {
        &self.inner
    }

    /// Score of item `i` under signal `j`.
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.inner.at(i, j)
    }

    /// Total squared mass `Σᵢ ‖gᵢ‖²` (the empty-selection trace objective).
    pub fn total_energy(&self) -> f64 {
        self.inner.as_slice().iter().map(|v| v * v).sum()
    }

    /// Scales every column to unit ℓ2 norm, preserving signs.
    ///
    /// Used by the optional score-standardization mode for pools that mix
    /// heterogeneous signal scales; zero columns are left untouched and
    /// reported by index.
    pub fn standardize_columns(&self) -> (ScoreMatrix, Vec<usize>) {
        let mut out = self.inner.clone();
        let mut skipped = Vec::new();
        for c in 0..out.cols() {
            let norm = out.col_norm(c);
            if norm <= 1e-12 {
                skipped.push(c);
                continue;
            }
            for r in 0..out.rows() {
                out.set(r, c, out.at(r, c) / norm);
            }
        }
        (
            ScoreMatrix { inner: out, labels: self.labels.clone() },
            skipped,
        )
    }
}

/// The regularized query matrix `Q_ε` (`d × n`) with its construction record.
///
/// `epsilon` is the ridge used to build it (`0.0` means the matrix was
/// supplied directly rather than regularized) and `fit_residual` is
/// `‖FᵀQ_ε − G‖_F` against the scores it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryMatrix {
    inner: Matrix,
    epsilon: f64,
    fit_residual: f64,
}

impl QueryMatrix {
    /// Wraps a directly supplied query matrix (no regularization involved).
    pub fn exact(inner: Matrix) -> Self {
        QueryMatrix { inner, epsilon: 0.0, fit_residual: 0.0 }
    }

    /// Embedding dimension `d`.
    #[inline]
    pub fn d(&self) -> usize {
        self.inner.rows()
    }

    /// Number of query columns `n`.
    #[inline]
    pub fn n(&self) -> usize {
        self.inner.cols()
    }

    /// Ridge used at construction (0.0 for directly supplied matrices).
    #[inline]
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// `‖FᵀQ_ε − G‖_F` recorded at construction.
    #[inline]
    pub fn fit_residual(&self) -> f64 {
        self.fit_residual
    }

    /// The underlying `d × n` matrix.
    #[inline]
    pub fn matrix(&self) -> &Matrix {
        &self.inner
    }
}

/// One external evaluation: four 0–5 rubric criteria for one item.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AttributeRecord {
    /// Zero-based item id.
    pub item_id: usize,
    /// Coherence score, 0–5.
    pub coherence: u8,
    /// Accuracy score, 0–5.
    pub accuracy: u8,
    /// Helpfulness score, 0–5.
    pub helpfulness: u8,
    /// Difficulty score, 0–5.
    pub difficulty: u8,
}

impl AttributeRecord {
    /// Validates the 0–5 range of every attribute.
    pub fn new(
        item_id: usize,
        coherence: i64,
        accuracy: i64,
        helpfulness: i64,
        difficulty: i64,
    ) -> Result<Self> {
        for value in [coherence, accuracy, helpfulness, difficulty] {
            if !(0..=5).contains(&value) {
                return Err(Error::ScoreOutOfRange { item_id, value });
            }
        }
        Ok(AttributeRecord {
            item_id,
            coherence: coherence as u8,
            accuracy: accuracy as u8,
            helpfulness: helpfulness as u8,
            difficulty: difficulty as u8,
        })
    }

    /// Total score across the four criteria (0–20).
    pub fn total(&self) -> u8 {
        self.coherence + self.accuracy + self.helpfulness + self.difficulty
    }
}

// ── Operations ──────────────────────────────────────────────────────────────

/// Builds the regularized query matrix `Q_ε = F(FᵀF + εI_m)⁻¹G` via the
/// d-sized form `(F·Fᵀ + εI_d)⁻¹·F·G`, recording the fit residual
/// `‖FᵀQ_ε − G‖_F`.
///
/// The d-form and the m-form agree (this is asserted in tests, not at
/// runtime). The recorded residual satisfies `fit_residual ≤ ε·‖Q_ε‖_F` when
/// the scores are realizable (`G = FᵀQ₀` for some `Q₀`) on a pool whose
/// nonzero singular values are ≥ 1; for scores with mass outside the span of
/// the pool rows, the residual has an ε-independent least-squares floor.
///
/// # Errors
/// [`Error::DimensionMismatch`] if `G` has a different pool size than `F`;
/// [`Error::InvalidParameter`] if `epsilon ≤ 0`.
pub fn regularized_query(
    f: &EmbeddingMatrix,
    g: &ScoreMatrix,
    epsilon: f64,
) -> Result<QueryMatrix> {
    if g.m() != f.m() {
        return Err(Error::DimensionMismatch(format!(
            "pool has {} items, scores have {}",
            f.m(),
            g.m()
        )));
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let (d, m) = (f.d(), f.m());
    let fm = f.matrix();

    // A = F·Fᵀ + εI_d  (d × d, symmetric; rows of F are contiguous).
    let mut a = Matrix::zeros(d, d);
    for i in 0..d {
        let ri = fm.row(i);
        for j in i..d {
            let rj = fm.row(j);
            let v: f64 = ri.iter().zip(rj).map(|(x, y)| x * y).sum();
            a.set(i, j, v);
            a.set(j, i, v);
        }
    }
    for i in 0..d {
        a.set(i, i, a.at(i, i) + epsilon);
    }

    // B = F·G (d × n).
    let b = fm.mat_mul(g.matrix())?;
    let q = cholesky(&a, Jitter::RetryOnce)?.solve_matrix(&b)?;

    // fit_residual = ‖FᵀQ − G‖_F.
    let mut residual2 = 0.0f64;
    for j in 0..m {
        for c in 0..g.n() {
            let mut dot = 0.0;
            for r in 0..d {
                dot += fm.at(r, j) * q.at(r, c);
            }
            let diff = dot - g.at(j, c);
            residual2 += diff * diff;
        }
    }
    Ok(QueryMatrix { inner: q, epsilon, fit_residual: residual2.sqrt() })
}

/// Geometry-only representativeness scores: `gᵢ = Σⱼ Φ[i][j]`, the row sums
/// of the Gram matrix, as a single column labeled `"self-compression"`.
pub fn self_compression_scores(phi: &GramMatrix) -> ScoreMatrix {
    let m = phi.m();
    let mut sums = vec![0.0f64; m];
    for i in 0..m {
        let row = phi.matrix().row(i);
        sums[i] = row.iter().sum();
    }
    ScoreMatrix::single(sums, "self-compression").expect("m >= 1 by GramMatrix invariant")
}

/// Sums the four rubric criteria per item into a single `"total"` column
/// (range 0–20). Items with no record score 0; their ids are returned as the
/// coverage warning list, in increasing order.
///
/// # Errors
/// [`Error::DuplicateRecord`] if an item appears twice;
/// [`Error::IndexOutOfRange`] if an id is ≥ `m`;
/// [`Error::InvalidParameter`] if `m == 0`.
pub fn aggregate_attributes(
    records: &[AttributeRecord],
    m: usize,
) -> Result<(ScoreMatrix, Vec<usize>)> {
    if m == 0 {
        return Err(Error::InvalidParameter("pool size m must be positive".into()));
    }
    let mut totals = vec![0.0f64; m];
    let mut seen = vec![false; m];
    for rec in records {
        if rec.item_id >= m {
            return Err(Error::IndexOutOfRange { id: rec.item_id, m });
        }
        if seen[rec.item_id] {
            return Err(Error::DuplicateRecord(rec.item_id));
        }
        seen[rec.item_id] = true;
        totals[rec.item_id] = rec.total() as f64;
    }
    let missing: Vec<usize> = (0..m).filter(|&i| !seen[i]).collect();
    Ok((ScoreMatrix::single(totals, "total")?, missing))
}

// ── tests ───────────────────────────────────────────────────────────────────
