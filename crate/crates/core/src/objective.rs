//! Objectives and bounds: Gaussian mutual information, the exact projected
//! log-determinant objective, its AM-GM trace relaxation, captured projection
//! energy, the entropy/diversity-only fallback, and the spectral quality
//! lower bound.
//!
//! For a selection `S` with atoms `F_S` and queries `Q`, the central
//! identity is
//!
//! ```text
//! I(Z_Q; Z_{F_S}) = ½·[log det(QᵀQ) − log det(Qᵀ P_S Q)]
//!                 with P_S = I − F_S(F_SᵀF_S)⁻¹F_Sᵀ,
//! ```
//!
//! so maximizing mutual information is minimizing the determinant of the
//! query covariance projected onto the complement of `span(F_S)`. All
//! determinants are computed and compared in log space; raw values are
//! exponentiated only for reports. The Gram-only dual of the trace
//! relaxation splits the total score mass into captured and residual parts:
//! `captured_energy(S) + linearized_trace(S) = Σᵢ‖gᵢ‖²` whenever the scores
//! are exactly consistent (`G = FᵀQ`).

use crate::error::{Error, Result};
use crate::linalg::{chol_logdet_strict, cholesky, sigma_extremes, symmetric_eigenvalues, Jitter};
use crate::matrix::{EmbeddingMatrix, GramMatrix, Matrix};
use crate::scoring::{QueryMatrix, ScoreMatrix};

/// Ridge fallback scale used when a projector inverse fails at ridge 0:
/// the retry uses `RIDGE_FALLBACK_SCALE · trace`.
pub const RIDGE_FALLBACK_SCALE: f64 = 1e-10;

// ── Domain types ────────────────────────────────────────────────────────────

/// An ordered set of selected pool indices (selection order, no duplicates).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionSet {
    indices: Vec<usize>,
}

impl SelectionSet {
    /// Builds a selection, rejecting duplicate indices.
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        let mut seen = std::collections::HashSet::with_capacity(indices.len());
        for &i in &indices {
            if !seen.insert(i) {
                return Err(Error::DuplicateIndex(i));
            }
        }
        Ok(SelectionSet { indices })
    }

    /// The empty selection.
    pub fn empty() -> Self {
        SelectionSet { indices: Vec::new() }
    }

    /// Number of selected items.
    #[inline]
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    /// Whether nothing is selected.
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Indices in selection order.
    #[inline]
    pub fn as_slice(&self) -> &[usize] {
        &self.indices
    }

    /// Validates that every index is `< m`.
    pub fn validate_range(&self, m: usize) -> Result<()> {
        for &i in &self.indices {
            if i >= m {
                return Err(Error::IndexOutOfRange { id: i, m });
            }
        }
        Ok(())
    }

    /// The first `k` selections as a new set.
    pub fn prefix(&self, k: usize) -> SelectionSet {
        SelectionSet { indices: self.indices[..k.min(self.len())].to_vec() }
    }
}

/// How a projector inverse was actually regularized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveDiag {
    /// Ridge that ended up on the diagonal.
    pub ridge_used: f64,
    /// True when the automatic `1e-10 · trace` fallback fired at ridge 0.
    pub fallback: bool,
}

/// Every objective value for one `(Q, F, G, S)` instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveReport {
    /// Mutual information in nats (`+∞` when the selection spans query
    /// directions).
    pub mi_nats: f64,
    /// `log det(Qᵀ P_S Q)` (`−∞` for a fully captured query).
    pub exact_logdet: f64,
    /// Residual trace objective `Σᵢ‖gᵢ‖² − captured_energy`.
    pub linearized_trace: f64,
    /// Captured projection energy of the scores on `S`.
    pub captured_energy: f64,
    /// `½·log det(Φ[S,S])` (`−∞` on a singular submatrix).
    pub entropy_logdet: f64,
    /// AM-GM right-hand side `n·log(trace(Qᵀ P_S Q)/n)` in log space.
    pub amgm_rhs_log: f64,
}

impl ObjectiveReport {
    /// Evaluates every objective on one instance (the CLI's report path).
    pub fn evaluate(
        q: &QueryMatrix,
        f: &EmbeddingMatrix,
        phi: &GramMatrix,
        g: &ScoreMatrix,
        s: &SelectionSet,
        ridge: f64,
    ) -> Result<ObjectiveReport> {
        let (lhs_log, rhs_log, _) = amgm_parts(q, f, s, ridge)?;
        Ok(ObjectiveReport {
            mi_nats: mi_value(q, f, s)?,
            exact_logdet: lhs_log,
            linearized_trace: linearized_trace(phi, g, s, ridge)?,
            captured_energy: captured_energy(phi, g, s, ridge)?,
            entropy_logdet: if s.is_empty() { 0.0 } else { entropy_objective(phi, s)? },
            amgm_rhs_log: rhs_log,
        })
    }
}

/// The spectral lower bound on `‖F_SᵀQ‖₂` with both published right-hand
/// sides.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityBoundReport {
    /// `‖F_SᵀQ‖₂`, the quantity being bounded from below.
    pub lhs: f64,
    /// `η = det(Qᵀ(I − P_{F_S})Q)`, the unexplained query volume.
    pub eta: f64,
    /// Numerical rank `r` of `Q`.
    pub rank_q: usize,
    /// Smallest singular value of `F_S`.
    pub sigma_min_fs: f64,
    /// Smallest singular value of `Q`.
    pub sigma_min_q: f64,
    /// Main-text form: `σ_min(F_S)·√(1 − (η/det(QᵀQ))^{1/r})`.
    pub rhs_main: f64,
    /// Proof form: `σ_min(F_S)·σ_min(Q)·√(1 − (η/det(QᵀQ))^{1/r})`.
    pub rhs_proof: f64,
    /// `lhs ≥ rhs_proof − 1e−8`; only the proof form is asserted.
    pub holds_proof_form: bool,
}

// ── Shared helpers ──────────────────────────────────────────────────────────

/// Factors `A + ridge·I` strictly; at ridge 0 a failure triggers one retry
/// with the `1e-10·trace` fallback (recorded in the diagnostics).
fn spd_factor_with_fallback(
    a: &Matrix,
    ridge: f64,
) -> Result<(crate::linalg::CholeskyFactor, SolveDiag)> {
    if ridge < 0.0 {
        return Err(Error::InvalidParameter(format!("ridge must be >= 0, got {ridge}")));
    }
    let with_ridge = |r: f64| -> Matrix {
        let mut m = a.clone();
        if r > 0.0 {
            for i in 0..m.rows() {
                m.set(i, i, m.at(i, i) + r);
            }
        }
        m
    };
    match cholesky(&with_ridge(ridge), Jitter::None) {
        Ok(f) => Ok((f, SolveDiag { ridge_used: ridge, fallback: false })),
        Err(first) => {
            if ridge > 0.0 {
                return Err(first);
            }
            let fallback = RIDGE_FALLBACK_SCALE * a.trace();
            if !(fallback > 0.0) {
                return Err(first);
            }
            let f = cholesky(&with_ridge(fallback), Jitter::None)?;
            Ok((f, SolveDiag { ridge_used: fallback, fallback: true }))
        }
    }
}

/// `AᵀA`-style small symmetric products used to assemble covariances.
fn gram_of(m: &Matrix) -> Matrix {
    m.transpose_mul(m).expect("shapes agree by construction")
}

/// `Qᵀ P_S Q = QᵀQ − Bᵀ(F_SᵀF_S + ridge·I)⁻¹B` with `B = F_SᵀQ`.
/// Returns the n×n matrix with diagnostics; `S` may be empty (projector = I).
fn projected_query_cov(
    q: &QueryMatrix,
    f: &EmbeddingMatrix,
    s: &SelectionSet,
    ridge: f64,
) -> Result<(Matrix, SolveDiag)> {
    if q.d() != f.d() {
        return Err(Error::DimensionMismatch(format!(
            "query dimension {} vs pool dimension {}",
            q.d(),
            f.d()
        )));
    }
    s.validate_range(f.m())?;
    let qtq = gram_of(q.matrix());
    if s.is_empty() {
        return Ok((qtq, SolveDiag { ridge_used: ridge, fallback: false }));
    }
    let fs = f.columns(s.as_slice());
    let a = gram_of(&fs); // F_SᵀF_S, k×k
    let b = fs.transpose_mul(q.matrix())?; // F_SᵀQ, k×n
    let (factor, diag) = spd_factor_with_fallback(&a, ridge)?;
    let x = factor.solve_matrix(&b)?;
    // M = QᵀQ − BᵀX.
    let n = q.n();
    let mut m = qtq;
    for i in 0..n {
        for j in 0..n {
            let mut dot = 0.0;
            for r in 0..b.rows() {
                dot += b.at(r, i) * x.at(r, j);
            }
            m.set(i, j, m.at(i, j) - dot);
        }
    }
    // Symmetrize away round-off so downstream factorizations see an exactly
    // symmetric matrix.
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m.at(i, j) + m.at(j, i));
            m.set(i, j, v);
            m.set(j, i, v);
        }
    }
    Ok((m, diag))
}

/// Strict log-determinant with `det → 0` mapped to `−∞`.
fn logdet_or_neg_inf(a: &Matrix) -> f64 {
    match chol_logdet_strict(a) {
        Ok(v) => v,
        Err(_) => f64::NEG_INFINITY,
    }
}

// ── Operations ──────────────────────────────────────────────────────────────

/// Mutual information (nats) between the query and selection projections of
/// a standard Gaussian probe, from the joint covariance
/// `Σ = [[QᵀQ, QᵀF_S], [F_SᵀQ, F_SᵀF_S]]`:
/// `½·[log det(QᵀQ) + log det(F_SᵀF_S) − log det Σ]`.
///
/// Returns `+∞` when `Σ` (or either marginal block) is numerically singular —
/// the selection shares directions with the query, which is the objective's
/// supremum, not a fault.
///
/// # Errors
/// [`Error::InvalidParameter`] on an empty selection; dimension mismatches.
pub fn mi_value(q: &QueryMatrix, f: &EmbeddingMatrix, s: &SelectionSet) -> Result<f64> {
    if s.is_empty() {
        return Err(Error::InvalidParameter("mutual information needs a nonempty selection".into()));
    }
    if q.d() != f.d() {
        return Err(Error::DimensionMismatch(format!(
            "query dimension {} vs pool dimension {}",
            q.d(),
            f.d()
        )));
    }
    s.validate_range(f.m())?;
    let n = q.n();
    let k = s.len();
    let fs = f.columns(s.as_slice());

    let qtq = gram_of(q.matrix());
    let fstfs = gram_of(&fs);
    let cross = q.matrix().transpose_mul(&fs)?; // QᵀF_S, n×k

    let mut joint = Matrix::zeros(n + k, n + k);
    for i in 0..n {
        for j in 0..n {
            joint.set(i, j, qtq.at(i, j));
        }
        for j in 0..k {
            joint.set(i, n + j, cross.at(i, j));
            joint.set(n + j, i, cross.at(i, j));
        }
    }
    for i in 0..k {
        for j in 0..k {
            joint.set(n + i, n + j, fstfs.at(i, j));
        }
    }

    let (lq, lf, lj) = (
        chol_logdet_strict(&qtq),
        chol_logdet_strict(&fstfs),
        chol_logdet_strict(&joint),
    );
    match (lq, lf, lj) {
        (Ok(a), Ok(b), Ok(c)) => Ok(0.5 * (a + b - c)),
        // Any singular block means shared directions: the MI supremum.
        _ => Ok(f64::INFINITY),
    }
}

/// Log-determinant of the projected query covariance,
/// `log det(Qᵀ(I − F_S(F_SᵀF_S + ridge·I)⁻¹F_Sᵀ)Q)`, with diagnostics.
///
/// Returns `−∞` when the projected covariance is numerically singular
/// (`det → 0`: the selection fully captures some query direction). The empty
/// selection gives `log det(QᵀQ)`.
///
/// # Errors
/// [`Error::NotPositiveDefinite`] when `F_SᵀF_S + ridge·I` cannot be factored
/// even after the automatic ridge-0 fallback (duplicate selected columns).
pub fn exact_objective_logdet(
    q: &QueryMatrix,
    f: &EmbeddingMatrix,
    s: &SelectionSet,
    ridge: f64,
) -> Result<(f64, SolveDiag)> {
    let (m, diag) = projected_query_cov(q, f, s, ridge)?;
    Ok((logdet_or_neg_inf(&m), diag))
}

/// The exact objective `det(Qᵀ(I − F_S(F_SᵀF_S + ridge·I)⁻¹F_Sᵀ)Q)`,
/// computed in log space and exponentiated on return.
///
/// # Errors
/// As [`exact_objective_logdet`].
pub fn exact_objective(
    q: &QueryMatrix,
    f: &EmbeddingMatrix,
    s: &SelectionSet,
    ridge: f64,
) -> Result<f64> {
    Ok(exact_objective_logdet(q, f, s, ridge)?.0.exp())
}

/// Captured projection energy with diagnostics:
/// `Σᵢ G[S,i]ᵀ(Φ[S,S] + ridge·I)⁻¹ G[S,i]`.
pub fn captured_energy_diag(
    phi: &GramMatrix,
    g: &ScoreMatrix,
    s: &SelectionSet,
    ridge: f64,
) -> Result<(f64, SolveDiag)> {
    if g.m() != phi.m() {
        return Err(Error::DimensionMismatch(format!(
            "gram has {} items, scores have {}",
            phi.m(),
            g.m()
        )));
    }
    s.validate_range(phi.m())?;
    if s.is_empty() {
        return Ok((0.0, SolveDiag { ridge_used: ridge, fallback: false }));
    }
    let a = phi.submatrix(s.as_slice());
    // G[S, :], k×n.
    let bs = Matrix::from_fn(s.len(), g.n(), |r, c| g.at(s.as_slice()[r], c));
    let (factor, diag) = spd_factor_with_fallback(&a, ridge)?;
    let x = factor.solve_matrix(&bs)?;
    let mut energy = 0.0f64;
    for (bv, xv) in bs.as_slice().iter().zip(x.as_slice()) {
        energy += bv * xv;
    }
    Ok((energy.max(0.0), diag))
}

/// Captured projection energy of the scores on the selection: non-negative
/// and non-decreasing as `S` grows (at ridge 0).
///
/// # Errors
/// [`Error::NotPositiveDefinite`] when `Φ[S,S] + ridge·I` cannot be factored
/// even after the automatic ridge-0 fallback.
pub fn captured_energy(
    phi: &GramMatrix,
    g: &ScoreMatrix,
    s: &SelectionSet,
    ridge: f64,
) -> Result<f64> {
    Ok(captured_energy_diag(phi, g, s, ridge)?.0)
}

/// Residual trace objective in score space:
/// `Σᵢ‖gᵢ‖² − captured_energy(S)` — the Gram-only form, which differs from
/// the true projected trace `trace(Qᵀ P_S Q)` by the selection-independent
/// constant `‖FᵀQ‖_F² − ‖Q‖_F²` when `G = FᵀQ`, so both rank subsets
/// identically. Can be negative when that constant is (e.g. coherent pools
/// whose score mass understates the query mass).
///
/// # Errors
/// As [`captured_energy`].
pub fn linearized_trace(
    phi: &GramMatrix,
    g: &ScoreMatrix,
    s: &SelectionSet,
    ridge: f64,
) -> Result<f64> {
    let captured = captured_energy(phi, g, s, ridge)?;
    Ok(g.total_energy() - captured)
}

/// Diversity-only entropy objective `½·log det(Φ[S,S])`.
///
/// Returns `−∞` on a singular submatrix (duplicate or dependent selected
/// columns) instead of erroring — rank deficiency is a legitimate value of
/// this objective, not a fault.
///
/// # Errors
/// [`Error::InvalidParameter`] on an empty selection.
pub fn entropy_objective(phi: &GramMatrix, s: &SelectionSet) -> Result<f64> {
    if s.is_empty() {
        return Err(Error::InvalidParameter("entropy objective needs a nonempty selection".into()));
    }
    s.validate_range(phi.m())?;
    let sub = phi.submatrix(s.as_slice());
    Ok(0.5 * logdet_or_neg_inf(&sub))
}

/// Shared assembly for the AM-GM comparison: returns
/// `(lhs_log, rhs_log, diag)` where `lhs_log = log det(Qᵀ P_S Q)` and
/// `rhs_log = n·log(trace(Qᵀ P_S Q)/n)`.
fn amgm_parts(
    q: &QueryMatrix,
    f: &EmbeddingMatrix,
    s: &SelectionSet,
    ridge: f64,
) -> Result<(f64, f64, SolveDiag)> {
    let (m, diag) = projected_query_cov(q, f, s, ridge)?;
    let n = m.rows();
    if n == 1 {
        // Scalar case: both sides are the log of the same entry — keep them
        // bitwise identical rather than routing one through a factorization.
        let v = m.at(0, 0);
        let log = if v > 0.0 { v.ln() } else { f64::NEG_INFINITY };
        return Ok((log, log, diag));
    }
    let lhs = logdet_or_neg_inf(&m);
    let mean = m.trace() / n as f64;
    let rhs = if mean > 0.0 { n as f64 * mean.ln() } else { f64::NEG_INFINITY };
    Ok((lhs, rhs, diag))
}

/// Checks the arithmetic–geometric mean relaxation
/// `det(Qᵀ P_S Q) ≤ (trace(Qᵀ P_S Q)/n)ⁿ` in log space.
///
/// Returns `(lhs_log, rhs_log, holds)` with
/// `holds = lhs_log ≤ rhs_log + 1e−8`; equality occurs exactly when all
/// eigenvalues of the projected covariance coincide (and always at `n = 1`,
/// where both sides are computed identically).
///
/// # Errors
/// [`Error::InvalidParameter`] on an empty selection; factorization failures
/// propagate.
pub fn amgm_check(
    q: &QueryMatrix,
    f: &EmbeddingMatrix,
    s: &SelectionSet,
) -> Result<(f64, f64, bool)> {
    if s.is_empty() {
        return Err(Error::InvalidParameter("AM-GM check needs a nonempty selection".into()));
    }
    let (lhs, rhs, _) = amgm_parts(q, f, s, 0.0)?;
    let holds = match (lhs.is_finite(), rhs.is_finite()) {
        (true, true) => lhs <= rhs + 1e-8,
        // det → 0 is below any finite RHS; a zero trace forces a zero det.
        (false, _) => true,
        (true, false) => false,
    };
    Ok((lhs, rhs, holds))
}

/// Evaluates the spectral quality bound, reporting both published right-hand
/// sides and asserting only the proof form
/// `‖F_SᵀQ‖₂ ≥ σ_min(F_S)·σ_min(Q)·√(1 − (η/det(QᵀQ))^{1/r})`.
///
/// # Errors
/// [`Error::RankDeficientQ`] when `σ_min(Q) ≤ 1e−10`;
/// [`Error::InvalidParameter`] on an empty selection.
pub fn quality_bound(
    q: &QueryMatrix,
    f: &EmbeddingMatrix,
    s: &SelectionSet,
) -> Result<QualityBoundReport> {
    if s.is_empty() {
        return Err(Error::InvalidParameter("quality bound needs a nonempty selection".into()));
    }
    s.validate_range(f.m())?;
    let (sigma_min_q, _) = sigma_extremes(q.matrix())?;
    if sigma_min_q <= 1e-10 {
        return Err(Error::RankDeficientQ { sigma_min: sigma_min_q });
    }
    // Numerical rank of Q from the spectrum of QᵀQ.
    let qtq = gram_of(q.matrix());
    let rank_q = symmetric_eigenvalues(&qtq)?
        .iter()
        .filter(|&&lambda| lambda.max(0.0).sqrt() > 1e-10)
        .count();

    let fs = f.columns(s.as_slice());
    let (sigma_min_fs, _) = sigma_extremes(&fs)?;
    let b = fs.transpose_mul(q.matrix())?; // F_SᵀQ
    let (_, lhs) = sigma_extremes(&b)?;

    let (eta_log, _) = exact_objective_logdet(q, f, s, 0.0)?;
    let det_qtq_log = logdet_or_neg_inf(&qtq);

    // (η/det(QᵀQ))^{1/r} in log space, clamped into [0, 1] for the sqrt.
    let ratio_pow = if eta_log == f64::NEG_INFINITY {
        0.0
    } else {
        ((eta_log - det_qtq_log) / rank_q as f64).exp()
    };
    let inside = (1.0 - ratio_pow.min(1.0)).max(0.0);
    let root = inside.sqrt();

    let rhs_main = sigma_min_fs * root;
    let rhs_proof = sigma_min_fs * sigma_min_q * root;
    Ok(QualityBoundReport {
        lhs,
        eta: eta_log.exp(),
        rank_q,
        sigma_min_fs,
        sigma_min_q,
        rhs_main,
        rhs_proof,
        holds_proof_form: lhs >= rhs_proof - 1e-8,
    })
}

// ── tests ───────────────────────────────────────────────────────────────────
