//! Greedy information projection: mutual-information subset selection over
//! embedding pools.
//!
//! Given a pool of `m` embedding columns `F ∈ ℝ^{d×m}`, queries
//! `Q ∈ ℝ^{d×n}`, and scores `G = FᵀQ`, the library selects a budget-`k`
//! subset `S` whose span retains as much information about the queries as
//! possible. The exact objective is the log-determinant of the query
//! covariance projected away from `span(F_S)`; the workhorse solver is a
//! greedy matching pursuit over residual scores that needs only the Gram
//! matrix `Φ = FᵀF` and `G` — never the raw embeddings — at
//! `O(m²d + mnk)` total cost.
//!
//! The crate is organized bottom-up:
//!
//! - [`matrix`]: dense row-major matrices and the embedding/Gram/score
//!   wrappers with their invariants.
//! - [`linalg`]: column normalization, blockwise Gram products, Cholesky
//!   factorization (strict and jitter-retrying), Jacobi eigenvalues, and
//!   singular-value extremes.
//! - [`rng`]: a portable counter-seeded generator for every experiment.
//! - [`scoring`]: score constructions — regularized query recovery,
//!   self-compression scores, attribute aggregation.
//! - [`objective`]: mutual information, the exact and relaxed objectives,
//!   captured energy, and the spectral quality bound.
//! - [`selector`]: greedy matching pursuit plus the exhaustive oracle and
//!   random / top-k baselines.
//! - [`harness`]: seeded fidelity, stability, and timing experiments.
//!
//! All indices are 0-based. Computations are deterministic: identical
//! inputs (and seeds) produce bit-identical outputs.

pub mod error;
pub mod harness;
pub mod linalg;
pub mod matrix;
pub mod objective;
pub mod rng;
pub mod scoring;
pub mod selector;

pub use error::{Error, Result};
pub use harness::{
    fidelity_experiment, iou, stability_experiment, timing_bench, BenchRow, FidelityConfig,
    FidelityRow, ScoreMode, StabilityRow,
};
pub use linalg::{
    chol_logdet, chol_logdet_strict, gram, normalize_columns, sigma_extremes, spd_solve,
    symmetric_eigenvalues, CholeskyFactor, Jitter, DEFAULT_GRAM_BLOCK,
};
pub use matrix::{EmbeddingMatrix, GramMatrix, Matrix};
pub use objective::{
    amgm_check, captured_energy, entropy_objective, exact_objective, exact_objective_logdet,
    linearized_trace, mi_value, quality_bound, ObjectiveReport, QualityBoundReport, SelectionSet,
    SolveDiag,
};
pub use scoring::{
    aggregate_attributes, regularized_query, self_compression_scores, AttributeRecord,
    QueryMatrix, ScoreMatrix, DEFAULT_EPSILON,
};
pub use selector::{
    brute_force_select, greedy_mp, mp_step_gain, random_select, recorrelation_diagnostic,
    residual_update, topk_select, BruteForceObjective, ResidualScoreMatrix, SelectionResult,
    StopReason,
};
