//! Subset selectors: greedy matching pursuit over residual scores, the
//! exhaustive small-instance oracle, and the random / top-k baselines.
//!
//! The greedy selector works entirely in score space. With `W⁽⁰⁾ = Gᵀ`
//! (rows = score columns, columns = pool items), step `t` picks
//!
//! ```text
//! s_t = argmax_{j ∉ S} Σᵢ W[i][j]²
//! ```
//!
//! and then updates every unselected column by
//! `W[i][j] ← W[i][j] − Φ[j][s_t]·W[i][s_t]`, which is the Gram-space image
//! of the embedding-space residual recursion `rᵢ ← rᵢ − (rᵢᵀf_{s_t})f_{s_t}`.
//! Selected columns are masked by a flag array and zeroed exactly; `Φ` is
//! never mutated. This is plain matching pursuit — no re-orthogonalization —
//! so residuals can re-correlate with previously selected atoms on coherent
//! pools; [`recorrelation_diagnostic`] measures how much.

use crate::error::{Error, Result};
use crate::matrix::{GramMatrix, Matrix};
use crate::objective::{
    captured_energy, entropy_objective, exact_objective_logdet, SelectionSet,
};
use crate::rng;
use crate::scoring::{QueryMatrix, ScoreMatrix};

/// Relative pivot threshold below which a candidate atom is treated as
/// linearly dependent on the already-selected set when tracking the
/// captured-energy trace.
const DEPENDENT_ATOM_TOL: f64 = 1e-12;

// ── Domain types ────────────────────────────────────────────────────────────

/// Why a selector stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// The requested budget `k` was filled.
    BudgetReached,
    /// The best remaining gain fell below `gain_tol` before the budget
    /// filled.
    GainBelowTol,
    /// Every pool item was selected.
    PoolExhausted,
}

impl StopReason {
    /// Stable lowercase identifier for reports.
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::BudgetReached => "budget_reached",
            StopReason::GainBelowTol => "gain_below_tol",
            StopReason::PoolExhausted => "pool_exhausted",
        }
    }
}

/// Output of any selector.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    /// Selected indices in selection order.
    pub indices: SelectionSet,
    /// Per-step argmax gains `Σᵢ W[i][s_t]²` (greedy) or squared scores
    /// (top-k); empty for selectors with no per-step quantity.
    pub gains: Vec<f64>,
    /// Per-step captured energy (greedy, top-k) or the single optimum value
    /// (brute force); empty for the random baseline.
    pub objective_trace: Vec<f64>,
    /// Why selection stopped.
    pub stop_reason: StopReason,
}

/// The residual score matrix `W` (rows = score columns, columns = pool
/// items), updated in place as atoms are selected.
#[derive(Debug, Clone)]
pub struct ResidualScoreMatrix {
    /// `n×m`; already-selected columns are exactly zero.
    w: Matrix,
    selected: Vec<bool>,
    step: usize,
}

impl ResidualScoreMatrix {
    /// Initializes `W⁽⁰⁾ = Gᵀ`.
    pub fn new(g: &ScoreMatrix) -> ResidualScoreMatrix {
        let (m, n) = (g.m(), g.n());
        let w = Matrix::from_fn(n, m, |i, j| g.at(j, i));
        ResidualScoreMatrix { w, selected: vec![false; m], step: 0 }
    }

    /// Number of pool items.
    #[inline]
    pub fn m(&self) -> usize {
        self.w.cols()
    }

    /// Number of score columns.
    #[inline]
    pub fn n(&self) -> usize {
        self.w.rows()
    }

    /// Update steps applied so far.
    #[inline]
    pub fn step(&self) -> usize {
        self.step
    }

    /// Whether column `j` has been selected.
    #[inline]
    pub fn is_selected(&self, j: usize) -> bool {
        self.selected[j]
    }

    /// Residual score of score column `i` against pool item `j`.
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.w.at(i, j)
    }
}

// ── Residual-update primitives ──────────────────────────────────────────────

/// The greedy step gain `Σᵢ W[i][j]²` of an (unselected) column.
pub fn mp_step_gain(w: &ResidualScoreMatrix, j: usize) -> f64 {
    debug_assert!(!w.selected[j], "step gain queried on a selected column");
    let mut acc = 0.0;
    for i in 0..w.n() {
        let v = w.w.at(i, j);
        acc += v * v;
    }
    acc
}

/// Applies the residual update for a just-picked atom `s`: every unselected
/// column `j` gets `W[i][j] ← W[i][j] − Φ[j][s]·W[i][s]`, column `s` is
/// zeroed exactly, and `s` is marked selected.
pub fn residual_update(w: &mut ResidualScoreMatrix, gram: &GramMatrix, s: usize) {
    debug_assert!(!w.selected[s], "atom selected twice");
    let m = w.m();
    let phi_s = gram.matrix().row(s);
    // Snapshot the pivot column before overwriting anything.
    let ws: Vec<f64> = (0..w.n()).map(|i| w.w.at(i, s)).collect();
    w.selected[s] = true;
    for (i, &wis) in ws.iter().enumerate() {
        let row = w.w.row_mut(i);
        for j in 0..m {
            if !w.selected[j] {
                row[j] -= phi_s[j] * wis;
            }
        }
        // Exact zero rather than the roundoff of wis·(1 − Φ[s][s]).
        row[s] = 0.0;
    }
    w.step += 1;
}

// ── Greedy matching pursuit ─────────────────────────────────────────────────

/// Incremental Cholesky of `Φ[S,S]` used to track exact captured energy as
/// the greedy selection grows, in O(k³ + k²·n) total.
struct CapturedTracker {
    /// Packed lower-triangular rows of `L`: row `t` holds `t + 1` entries.
    lrows: Vec<Vec<f64>>,
    /// Pool index behind each Cholesky row.
    atom_ids: Vec<usize>,
    /// Per score column `i`, the growing vector `yᵢ = L⁻¹ G[S,i]`.
    ys: Vec<Vec<f64>>,
    /// Running `Σᵢ‖yᵢ‖²` — the captured energy of the tracked set.
    captured: f64,
}

impl CapturedTracker {
    fn new(n: usize) -> CapturedTracker {
        CapturedTracker {
            lrows: Vec::new(),
            atom_ids: Vec::new(),
            ys: vec![Vec::new(); n],
            captured: 0.0,
        }
    }

    /// Folds atom `j` into the factorization and returns the updated
    /// captured energy. A numerically dependent atom (pivot² ≤
    /// `1e−12·Φ[j][j]`) adds nothing and is left out of the factor.
    fn push(&mut self, gram: &GramMatrix, g: &ScoreMatrix, j: usize) -> f64 {
        let t = self.lrows.len();
        // Solve L·l = Φ[S_prev, j] by forward substitution.
        let mut l = vec![0.0f64; t];
        for r in 0..t {
            let mut v = gram.at(self.atom_ids[r], j);
            for (c, &lc) in l[..r].iter().enumerate() {
                v -= self.lrows[r][c] * lc;
            }
            l[r] = v / self.lrows[r][r];
        }
        let phi_jj = gram.at(j, j);
        let diag2 = phi_jj - l.iter().map(|v| v * v).sum::<f64>();
        if diag2 <= DEPENDENT_ATOM_TOL * phi_jj {
            return self.captured;
        }
        let diag = diag2.sqrt();
        for (i, y) in self.ys.iter_mut().enumerate() {
            let mut v = g.at(j, i);
            for (c, &lc) in l.iter().enumerate() {
                v -= lc * y[c];
            }
            let ynew = v / diag;
            self.captured += ynew * ynew;
            y.push(ynew);
        }
        let mut row = l;
        row.push(diag);
        self.lrows.push(row);
        self.atom_ids.push(j);
        self.captured
    }
}

/// Greedy matching pursuit: selects up to `k` atoms by repeated
/// largest-residual-energy picks with in-place residual updates.
///
/// Ties at the argmax break toward the lowest index. Stops early with
/// [`StopReason::GainBelowTol`] when the best remaining gain drops below
/// `gain_tol` (checked before selecting); reports
/// [`StopReason::PoolExhausted`] when every item was taken. Deterministic:
/// identical inputs produce bit-identical results.
///
/// # Errors
/// [`Error::BudgetExceedsPool`] when `k > m`; [`Error::DimensionMismatch`]
/// when the scores and Gram disagree on `m`; [`Error::InvalidParameter`] for
/// `k = 0` or a negative `gain_tol`.
pub fn greedy_mp(
    gram: &GramMatrix,
    g: &ScoreMatrix,
    k: usize,
    gain_tol: f64,
) -> Result<SelectionResult> {
    let m = gram.m();
    if g.m() != m {
        return Err(Error::DimensionMismatch(format!(
            "gram has {} items, scores have {}",
            m,
            g.m()
        )));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("budget k must be at least 1".into()));
    }
    if k > m {
        return Err(Error::BudgetExceedsPool { k, m });
    }
    if !(gain_tol >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "gain_tol must be >= 0, got {gain_tol}"
        )));
    }

    let n = g.n();
    let mut w = ResidualScoreMatrix::new(g);
    let mut indices = Vec::with_capacity(k);
    let mut gains = Vec::with_capacity(k);
    let mut trace = Vec::with_capacity(k);
    let mut tracker = CapturedTracker::new(n);
    let mut col_energy = vec![0.0f64; m];
    let mut stop = StopReason::BudgetReached;

    for _ in 0..k {
        // Column energies Σᵢ W[i][j]², accumulated row-wise for locality.
        col_energy.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..n {
            let row = w.w.row(i);
            for (acc, &v) in col_energy.iter_mut().zip(row) {
                *acc += v * v;
            }
        }
        // Strict > keeps the lowest index on ties.
        let mut best: Option<(usize, f64)> = None;
        for (j, &e) in col_energy.iter().enumerate() {
            if w.selected[j] {
                continue;
            }
            match best {
                Some((_, be)) if e <= be => {}
                _ => best = Some((j, e)),
            }
        }
        let (s, gain) = best.expect("k <= m guarantees an unselected column");
        if gain < gain_tol {
            stop = StopReason::GainBelowTol;
            break;
        }
        indices.push(s);
        gains.push(gain);
        trace.push(tracker.push(gram, g, s));
        residual_update(&mut w, gram, s);
    }

    if indices.len() == m {
        stop = StopReason::PoolExhausted;
    }
    Ok(SelectionResult {
        indices: SelectionSet::new(indices).expect("greedy never repeats an index"),
        gains,
        objective_trace: trace,
        stop_reason: stop,
    })
}

/// Replays a selection with the residual recursion applied to *every*
/// column — selected ones included — and returns the largest absolute
/// residual/selected-atom correlation seen after any step.
///
/// Plain matching pursuit only guarantees orthogonality against the most
/// recent atom; on coherent pools the residual can re-correlate with earlier
/// picks, which is exactly what this measures (it is ~0 on orthogonal
/// pools). Step-gain telescoping against captured energy is only meaningful
/// where this diagnostic is small.
///
/// # Errors
/// [`Error::DimensionMismatch`]; [`Error::IndexOutOfRange`].
pub fn recorrelation_diagnostic(
    gram: &GramMatrix,
    g: &ScoreMatrix,
    indices: &SelectionSet,
) -> Result<f64> {
    let m = gram.m();
    if g.m() != m {
        return Err(Error::DimensionMismatch(format!(
            "gram has {} items, scores have {}",
            m,
            g.m()
        )));
    }
    indices.validate_range(m)?;
    let n = g.n();
    // Full-update residual scores: W[i][j] = rᵢᵀfⱼ for every j.
    let mut w = Matrix::from_fn(n, m, |i, j| g.at(j, i));
    let mut selected = vec![false; m];
    let mut max_rc = 0.0f64;
    for &s in indices.as_slice() {
        let phi_s = gram.matrix().row(s);
        let ws: Vec<f64> = (0..n).map(|i| w.at(i, s)).collect();
        selected[s] = true;
        for (i, &wis) in ws.iter().enumerate() {
            let row = w.row_mut(i);
            for j in 0..m {
                row[j] -= phi_s[j] * wis;
            }
        }
        for (j, &sel) in selected.iter().enumerate() {
            if sel {
                for i in 0..n {
                    max_rc = max_rc.max(w.at(i, j).abs());
                }
            }
        }
    }
    Ok(max_rc)
}

// ── Baselines and the exhaustive oracle ─────────────────────────────────────

/// Which objective the exhaustive oracle optimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BruteForceObjective {
    /// Maximize captured projection energy.
    CapturedEnergy,
    /// Minimize the exact projected log-determinant (needs `Q` and `F`).
    ExactLogdet,
    /// Maximize `½·log det(Φ[S,S])`.
    Entropy,
}

/// `C(m, k)`, saturating at `u128::MAX`.
fn binomial_saturating(m: usize, k: usize) -> u128 {
    let k = k.min(m - k);
    let mut c: u128 = 1;
    for i in 1..=k {
        // Exact at every step when multiplied before dividing in order.
        c = match c.checked_mul((m - k + i) as u128) {
            Some(v) => v / i as u128,
            None => return u128::MAX,
        };
    }
    c
}

/// Exhaustive search over all size-`k` subsets in lexicographic order,
/// returning the first subset attaining the optimum of the requested
/// objective.
///
/// `gains` is empty (there is no per-step quantity); `objective_trace`
/// holds the single optimum value.
///
/// # Errors
/// [`Error::InstanceTooLarge`] when `C(m, k) > 2·10⁶`;
/// [`Error::InvalidParameter`] when `ExactLogdet` is requested without both
/// `Q` and `F`; [`Error::BudgetExceedsPool`].
pub fn brute_force_select(
    gram: &GramMatrix,
    g: &ScoreMatrix,
    k: usize,
    objective: BruteForceObjective,
    q: Option<&QueryMatrix>,
    f: Option<&crate::matrix::EmbeddingMatrix>,
) -> Result<SelectionResult> {
    let m = gram.m();
    if g.m() != m {
        return Err(Error::DimensionMismatch(format!(
            "gram has {} items, scores have {}",
            m,
            g.m()
        )));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("budget k must be at least 1".into()));
    }
    if k > m {
        return Err(Error::BudgetExceedsPool { k, m });
    }
    let combinations = binomial_saturating(m, k);
    if combinations > 2_000_000 {
        return Err(Error::InstanceTooLarge { combinations });
    }
    if objective == BruteForceObjective::ExactLogdet && (q.is_none() || f.is_none()) {
        return Err(Error::InvalidParameter(
            "exact log-det search needs both the query and embedding matrices".into(),
        ));
    }

    // Higher is better internally; the log-det objective is negated.
    let value_of = |subset: &SelectionSet| -> Result<f64> {
        Ok(match objective {
            BruteForceObjective::CapturedEnergy => captured_energy(gram, g, subset, 0.0)?,
            BruteForceObjective::Entropy => entropy_objective(gram, subset)?,
            BruteForceObjective::ExactLogdet => {
                -exact_objective_logdet(q.unwrap(), f.unwrap(), subset, 0.0)?.0
            }
        })
    };

    let mut comb: Vec<usize> = (0..k).collect();
    let mut best_set = SelectionSet::new(comb.clone()).expect("lexicographic start has no dups");
    let mut best_val = value_of(&best_set)?;
    loop {
        // Advance to the next lexicographic k-combination of [0, m).
        let mut i = k;
        loop {
            if i == 0 {
                // Enumeration finished.
                let optimum = match objective {
                    BruteForceObjective::ExactLogdet => -best_val,
                    _ => best_val,
                };
                return Ok(SelectionResult {
                    indices: best_set,
                    gains: Vec::new(),
                    objective_trace: vec![optimum],
                    stop_reason: StopReason::BudgetReached,
                });
            }
            i -= 1;
            if comb[i] != i + m - k {
                break;
            }
        }
        comb[i] += 1;
        for j in (i + 1)..k {
            comb[j] = comb[j - 1] + 1;
        }
        let set = SelectionSet::new(comb.clone()).expect("combination has no dups");
        let val = value_of(&set)?;
        // Strict > keeps the lexicographically first optimum.
        if val > best_val {
            best_val = val;
            best_set = set;
        }
    }
}

/// Uniform without-replacement baseline: `k` of `m` items from a seeded
/// deterministic generator (partial Fisher–Yates). `gains` and
/// `objective_trace` are empty.
///
/// # Errors
/// [`Error::BudgetExceedsPool`]; [`Error::InvalidParameter`] for `k = 0`.
pub fn random_select(m: usize, k: usize, seed: u64) -> Result<SelectionResult> {
    if k == 0 {
        return Err(Error::InvalidParameter("budget k must be at least 1".into()));
    }
    if k > m {
        return Err(Error::BudgetExceedsPool { k, m });
    }
    let mut rng = rng::master(seed);
    let mut pool: Vec<usize> = (0..m).collect();
    for t in 0..k {
        let j = t + rng::uniform_below(&mut rng, (m - t) as u64) as usize;
        pool.swap(t, j);
    }
    pool.truncate(k);
    Ok(SelectionResult {
        indices: SelectionSet::new(pool).expect("permutation prefix has no dups"),
        gains: Vec::new(),
        objective_trace: Vec::new(),
        stop_reason: StopReason::BudgetReached,
    })
}

/// Quality-only baseline: the `k` largest `|score|` items of a single score
/// column, ordered by decreasing magnitude, ties toward the lowest index.
/// `gains` holds the squared scores; `objective_trace` their prefix sums
/// (the captured energy each prefix would attain on an orthonormal pool).
///
/// # Errors
/// [`Error::InvalidParameter`] unless `n = 1` and `k ≥ 1`;
/// [`Error::BudgetExceedsPool`].
pub fn topk_select(scores: &ScoreMatrix, k: usize) -> Result<SelectionResult> {
    if scores.n() != 1 {
        return Err(Error::InvalidParameter(format!(
            "top-k needs a single score column, got {}",
            scores.n()
        )));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("budget k must be at least 1".into()));
    }
    let m = scores.m();
    if k > m {
        return Err(Error::BudgetExceedsPool { k, m });
    }
    let mut order: Vec<usize> = (0..m).collect();
    // Stable sort on descending |score|; equal magnitudes keep index order.
    order.sort_by(|&a, &b| {
        scores
            .at(b, 0)
            .abs()
            .partial_cmp(&scores.at(a, 0).abs())
            .expect("scores are finite")
    });
    order.truncate(k);
    let gains: Vec<f64> = order.iter().map(|&j| scores.at(j, 0) * scores.at(j, 0)).collect();
    let mut trace = Vec::with_capacity(k);
    let mut acc = 0.0;
    for &gn in &gains {
        acc += gn;
        trace.push(acc);
    }
    Ok(SelectionResult {
        indices: SelectionSet::new(order).expect("distinct positions"),
        gains,
        objective_trace: trace,
        stop_reason: StopReason::BudgetReached,
    })
}

// ── tests ───────────────────────────────────────────────────────────────────

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{gram, normalize_columns, DEFAULT_GRAM_BLOCK};
    use crate::matrix::EmbeddingMatrix;

    fn orthonormal_pool(m: usize) -> EmbeddingMatrix {
        normalize_columns(&Matrix::identity(m)).unwrap()
    }

    #[test]
    fn greedy_orthogonal_picks_top_scores_in_magnitude_order() {
        let f = orthonormal_pool(3);
        let phi = gram(&f, DEFAULT_GRAM_BLOCK);
        let g = ScoreMatrix::single(vec![0.2, 0.9, 0.5], "s").unwrap();
        let r = greedy_mp(&phi, &g, 2, 0.0).unwrap();
        assert_eq!(r.indices.as_slice(), &[1, 2]);
        assert_eq!(r.stop_reason, StopReason::BudgetReached);
        assert!((r.gains[0] - 0.81).abs() < 1e-15);
        assert!((r.gains[1] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn greedy_full_budget_exhausts_orthogonal_pool() {
        let f = orthonormal_pool(3);
        let phi = gram(&f, DEFAULT_GRAM_BLOCK);
        let g = ScoreMatrix::single(vec![0.2, 0.9, 0.5], "s").unwrap();
        let r = greedy_mp(&phi, &g, 3, 0.0).unwrap();
        assert_eq!(r.indices.as_slice(), &[1, 2, 0]);
        assert_eq!(r.stop_reason, StopReason::PoolExhausted);
        // Gains are the squared scores in decreasing order; the final W is 0,
        // which the trace confirms: all energy captured.
        assert_eq!(r.gains, vec![0.81, 0.25, 0.040000000000000008]);
        let total = g.total_energy();
        assert!((r.objective_trace[2] - total).abs() < 1e-12);
    }

    #[test]
    fn greedy_stops_below_gain_tol() {
        let f = orthonormal_pool(3);
        let phi = gram(&f, DEFAULT_GRAM_BLOCK);
        let g = ScoreMatrix::single(vec![0.0, 2.0, 0.0], "s").unwrap();
        let r = greedy_mp(&phi, &g, 3, 1e-12).unwrap();
        assert_eq!(r.indices.as_slice(), &[1]);
        assert_eq!(r.stop_reason, StopReason::GainBelowTol);
        assert_eq!(r.gains.len(), r.indices.len());
    }

    #[test]
    fn greedy_rejects_oversized_budget() {
        let f = orthonormal_pool(2);
        let phi = gram(&f, DEFAULT_GRAM_BLOCK);
        let g = ScoreMatrix::single(vec![1.0, 1.0], "s").unwrap();
        assert!(matches!(
            greedy_mp(&phi, &g, 3, 0.0).unwrap_err(),
            Error::BudgetExceedsPool { k: 3, m: 2 }
        ));
    }

    #[test]
    fn step_gain_matches_hand_values() {
        // Two score columns; item 0 scores (3, 4), item 1 scores (0, 0), so
        // W's column 0 is (3, 4) and column 1 is all zero.
        let gm = ScoreMatrix::new(
            Matrix::from_vec(2, 2, vec![3.0, 4.0, 0.0, 0.0]).unwrap(),
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let w = ResidualScoreMatrix::new(&gm);
        assert_eq!(mp_step_gain(&w, 0), 25.0);
        assert_eq!(mp_step_gain(&w, 1), 0.0);
    }

    #[test]
    fn residual_update_matches_explicit_recursion() {
        // Pool columns f₀ = (√2/2, √2/2), f₁ = (0, 1); query r = (1, 0).
        let h = (2.0f64).sqrt() / 2.0;
        let f = normalize_columns(&Matrix::from_vec(2, 2, vec![h, 0.0, h, 1.0]).unwrap()).unwrap();
        let phi = gram(&f, DEFAULT_GRAM_BLOCK);
        // G = Fᵀr = (√2/2, 0).
        let g = ScoreMatrix::single(vec![h, 0.0], "s").unwrap();
        let mut w = ResidualScoreMatrix::new(&g);
        assert_eq!(w.at(0, 1), 0.0);
        residual_update(&mut w, &phi, 0);
        // r′ = (1/2, −1/2) gives r′ᵀf₁ = −1/2.
        assert!((w.at(0, 1) + 0.5).abs() < 1e-12);
        assert_eq!(w.at(0, 0), 0.0, "selected column must be exactly zero");
        assert!(w.is_selected(0));
        assert_eq!(w.step(), 1);
    }

    #[test]
    fn residual_update_leaves_orthogonal_columns_unchanged() {
        let f = orthonormal_pool(3);
        let phi = gram(&f, DEFAULT_GRAM_BLOCK);
        let g = ScoreMatrix::single(vec![0.3, 0.7, -0.2], "s").unwrap();
        let mut w = ResidualScoreMatrix::new(&g);
        residual_update(&mut w, &phi, 1);
        assert_eq!(w.at(0, 0), 0.3);
        assert_eq!(w.at(0, 2), -0.2);
        assert_eq!(w.at(0, 1), 0.0);
    }

    #[test]
    fn brute_force_orthogonal_matches_topk() {
        let f = orthonormal_pool(4);
        let phi = gram(&f, DEFAULT_GRAM_BLOCK);
        let g = ScoreMatrix::single(vec![0.1, -0.8, 0.4, 0.3], "s").unwrap();
        let bf =
            brute_force_select(&phi, &g, 2, BruteForceObjective::CapturedEnergy, None, None)
                .unwrap();
        let mut got: Vec<usize> = bf.indices.as_slice().to_vec();
        got.sort_unstable();
        assert_eq!(got, vec![1, 2]);
        assert!(bf.gains.is_empty());
        assert_eq!(bf.objective_trace.len(), 1);
        assert!((bf.objective_trace[0] - (0.64 + 0.16)).abs() < 1e-12);
    }

    #[test]
    fn brute_force_full_set_any_objective() {
        let f = orthonormal_pool(3);
        let phi = gram(&f, DEFAULT_GRAM_BLOCK);
        let g = ScoreMatrix::single(vec![0.2, 0.9, 0.5], "s").unwrap();
        for obj in [BruteForceObjective::CapturedEnergy, BruteForceObjective::Entropy] {
            let bf = brute_force_select(&phi, &g, 3, obj, None, None).unwrap();
            assert_eq!(bf.indices.as_slice(), &[0, 1, 2]);
        }
    }

    #[test]
    fn brute_force_guards_instance_size() {
        let f = orthonormal_pool(40);
        let phi = gram(&f, DEFAULT_GRAM_BLOCK);
        let g = ScoreMatrix::single(vec![1.0; 40], "s").unwrap();
        // C(40, 20) ≈ 1.4·10¹¹ — far past the guard.
        assert!(matches!(
            brute_force_select(&phi, &g, 20, BruteForceObjective::CapturedEnergy, None, None)
                .unwrap_err(),
            Error::InstanceTooLarge { .. }
        ));
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial_saturating(5, 2), 10);
        assert_eq!(binomial_saturating(10, 10), 1);
        assert_eq!(binomial_saturating(52000, 5), 3_167_757_673_009_540_010_400);
    }

    #[test]
    fn random_select_is_deterministic_and_complete() {
        let a = random_select(10, 4, 7).unwrap();
        let b = random_select(10, 4, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.gains.is_empty() && a.objective_trace.is_empty());
        assert_eq!(a.stop_reason, StopReason::BudgetReached);

        let full = random_select(6, 6, 3).unwrap();
        let mut sorted = full.indices.as_slice().to_vec();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn topk_magnitude_and_ties() {
        let g = ScoreMatrix::single(vec![0.2, 0.9, 0.5], "s").unwrap();
        let r = topk_select(&g, 2).unwrap();
        assert_eq!(r.indices.as_slice(), &[1, 2]);
        assert_eq!(r.gains, vec![0.81, 0.25]);
        assert!((r.objective_trace[1] - 1.06).abs() < 1e-15);

        let neg = ScoreMatrix::single(vec![-3.0, 1.0], "s").unwrap();
        assert_eq!(topk_select(&neg, 1).unwrap().indices.as_slice(), &[0]);

        let tie = ScoreMatrix::single(vec![0.5, -0.5, 0.5], "s").unwrap();
        assert_eq!(tie.at(0, 0).abs(), tie.at(1, 0).abs());
        assert_eq!(topk_select(&tie, 2).unwrap().indices.as_slice(), &[0, 1]);
    }

    #[test]
    fn recorrelation_is_zero_on_orthogonal_pools() {
        let f = orthonormal_pool(4);
        let phi = gram(&f, DEFAULT_GRAM_BLOCK);
        let g = ScoreMatrix::single(vec![0.4, -0.2, 0.9, 0.1], "s").unwrap();
        let r = greedy_mp(&phi, &g, 4, 0.0).unwrap();
        let rc = recorrelation_diagnostic(&phi, &g, &r.indices).unwrap();
        assert!(rc < 1e-15, "orthogonal pool must not re-correlate, got {rc}");
    }
}
