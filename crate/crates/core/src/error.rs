//! Crate-wide error type.
//!
//! Every fallible operation in this crate returns [`Error`]. Variants are
//! deliberately fine-grained so that callers (in particular the CLI) can map
//! them to stable machine-readable codes.

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A column that must be normalized has (numerically) zero length.
    #[error("column {0} has zero norm (<= 1e-12) and cannot be normalized")]
    ZeroColumn(usize),

    /// A symmetric factorization hit a non-positive pivot: the matrix is
    /// singular or indefinite. Callers that evaluate determinants treat this
    /// as `det -> 0`.
    #[error("matrix is not positive definite (pivot {pivot:.3e} at row {row})")]
    NotPositiveDefinite {
        /// Zero-based row at which factorization failed.
        row: usize,
        /// The offending pivot value.
        pivot: f64,
    },

    /// Operand shapes do not line up.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Two attribute records share one item id.
    #[error("duplicate attribute record for item {0}")]
    DuplicateRecord(usize),

    /// An item id points outside the candidate pool.
    #[error("item id {id} out of range for pool size {m}")]
    IndexOutOfRange {
        /// The offending id.
        id: usize,
        /// Pool size.
        m: usize,
    },

    /// An attribute score lies outside the 0–5 rubric range.
    #[error("attribute score {value} for item {item_id} outside 0..=5")]
    ScoreOutOfRange {
        /// Item the record belongs to.
        item_id: usize,
        /// The offending value.
        value: i64,
    },

    /// A selection index appears twice.
    #[error("duplicate selection index {0}")]
    DuplicateIndex(usize),

    /// Requested budget exceeds the candidate pool.
    #[error("budget k = {k} exceeds pool size m = {m}")]
    BudgetExceedsPool {
        /// Requested budget.
        k: usize,
        /// Pool size.
        m: usize,
    },

    /// Exhaustive search would enumerate too many subsets.
    #[error("exhaustive search over {combinations} subsets exceeds the 2e6 guard")]
    InstanceTooLarge {
        /// Number of subsets C(m, k) the search would visit.
        combinations: u128,
    },

    /// The query matrix is (numerically) rank deficient.
    #[error("query matrix is rank deficient (sigma_min = {sigma_min:.3e} <= 1e-10)")]
    RankDeficientQ {
        /// Smallest singular value found.
        sigma_min: f64,
    },

    /// A caller violated a documented precondition that is cheap to check.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A matrix entry is NaN or infinite.
    #[error("non-finite entry at ({row}, {col})")]
    NonFiniteEntry {
        /// Zero-based row.
        row: usize,
        /// Zero-based column.
        col: usize,
    },
}
