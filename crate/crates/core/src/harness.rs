//! Desk-scale verification experiments: the linearization-fidelity table,
//! the noise-stability sweep, and the timing/complexity bench — all seeded,
//! deterministic, and pure functions of their parameters.
//!
//! Every random draw comes from a derived counter stream
//! (see [`crate::rng::derived`]) so trials are independent yet exactly
//! reproducible, and aggregation uses compensated summation over a fixed
//! trial order so results do not depend on evaluation scheduling.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::linalg::{gram, normalize_columns, DEFAULT_GRAM_BLOCK};
use crate::matrix::{EmbeddingMatrix, Matrix};
use crate::objective::{captured_energy, SelectionSet};
use crate::rng::{self, Phase};
use crate::scoring::{self, ScoreMatrix};
use crate::selector::{brute_force_select, greedy_mp, random_select, BruteForceObjective};
use rand_chacha::rand_core::RngCore;
use rand_chacha::ChaCha8Rng;

// ── Result rows ─────────────────────────────────────────────────────────────

/// One budget row of the linearization-fidelity table.
#[derive(Debug, Clone, PartialEq)]
pub struct FidelityRow {
    /// Selection budget.
    pub k: usize,
    /// Mean of `captured(greedy prefix k) / captured(exhaustive optimum k)`.
    pub mp_ratio_mean: f64,
    /// Population standard deviation of the greedy ratio.
    pub mp_ratio_std: f64,
    /// Mean of the same ratio for the uniform-random baseline.
    pub random_ratio_mean: f64,
    /// Population standard deviation of the random ratio.
    pub random_ratio_std: f64,
    /// Number of trials aggregated.
    pub trials: usize,
}

/// One `(sigma, budget)` row of the noise-stability sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityRow {
    /// Noise standard deviation applied to every raw embedding entry.
    pub sigma: f64,
    /// Selection budget.
    pub budget: usize,
    /// Mean IoU between the clean-pool selection and perturbed-pool
    /// selections.
    pub iou_mean: f64,
    /// Population standard deviation of the IoU.
    pub iou_std: f64,
    /// Number of trials aggregated.
    pub trials: usize,
}

/// One `(m, k)` cell of the timing bench.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    /// Pool size.
    pub m: usize,
    /// Selection budget.
    pub k: usize,
    /// Median wall-clock seconds over 5 repetitions of the Gram build.
    pub gram_seconds: f64,
    /// Median wall-clock seconds over 5 repetitions of the greedy selection.
    pub select_seconds: f64,
    /// `8·(m² + n·m)` plus fixed overhead — the working-set estimate, not a
    /// measurement.
    pub peak_bytes_estimate: u64,
}

// ── Shared helpers ──────────────────────────────────────────────────────────

/// Compensated (Kahan) sum in a fixed order.
fn kahan_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for &v in values {
        let y = v - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Mean and population standard deviation (compensated, fixed order).
fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = kahan_sum(values) / n;
    let sq: Vec<f64> = values.iter().map(|&v| (v - mean) * (v - mean)).collect();
    (mean, (kahan_sum(&sq) / n).sqrt())
}

/// Draws a `d×m` pool with i.i.d. standard normal entries, optionally
/// column-normalized.
fn draw_pool(rng: &mut ChaCha8Rng, d: usize, m: usize, normalize: bool) -> Result<EmbeddingMatrix> {
    let mut data = vec![0.0f64; d * m];
    rng::fill_standard_normal(rng, &mut data);
    let raw = Matrix::from_vec(d, m, data)?;
    if normalize {
        normalize_columns(&raw)
    } else {
        Ok(EmbeddingMatrix::raw(raw))
    }
}

/// Sorts a selection ascending so evaluation does not depend on pick order
/// (captured energy is order-invariant; a canonical order makes equal sets
/// evaluate bit-identically).
fn canonical(indices: &SelectionSet) -> SelectionSet {
    let mut v = indices.as_slice().to_vec();
    v.sort_unstable();
    SelectionSet::new(v).expect("sorting cannot introduce duplicates")
}

// ── Linearization fidelity ──────────────────────────────────────────────────

/// Parameters of [`fidelity_experiment`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FidelityConfig {
    /// Embedding dimension.
    pub d: usize,
    /// Pool size (kept small: the exhaustive oracle enumerates C(m, k)).
    pub m: usize,
    /// Number of query/score columns.
    pub n: usize,
    /// Independent trials.
    pub trials: usize,
    /// Master seed.
    pub seed: u64,
    /// Column-normalize the Gaussian pool before selection (the protocol
    /// default); `false` runs on the raw draws.
    pub normalize: bool,
}

impl Default for FidelityConfig {
    fn default() -> Self {
        FidelityConfig { d: 30, m: 10, n: 1, trials: 100, seed: 0, normalize: true }
    }
}

/// Greedy-vs-optimal captured-energy ratios on random Gaussian instances.
///
/// Per trial: draws a `d×m` standard-normal pool (column-normalized by
/// default) and a `d×n` uniform-`[0,1)` query block, forms scores
/// `G = FᵀQ`, runs one full greedy pass, and for every `k` in `1..=m`
/// compares greedy's first `k` picks and a fresh uniform-random size-`k`
/// subset against the exhaustive captured-energy optimum. Ratios are
/// aggregated as mean ± population std over trials.
///
/// At `k = m` all three subsets coincide, so both ratios are exactly 1.
///
/// # Errors
/// [`Error::InvalidParameter`] on zero-sized parameters;
/// [`Error::InstanceTooLarge`] from the exhaustive oracle when `C(m, k)`
/// exceeds its guard.
pub fn fidelity_experiment(config: FidelityConfig) -> Result<Vec<FidelityRow>> {
    let FidelityConfig { d, m, n, trials, seed, normalize } = config;
    if d == 0 || m == 0 || n == 0 || trials == 0 {
        return Err(Error::InvalidParameter(
            "fidelity experiment needs d, m, n, trials all >= 1".into(),
        ));
    }
    // ratios[k-1] = (greedy ratios, random ratios) across trials.
    let mut mp_ratios = vec![Vec::with_capacity(trials); m];
    let mut random_ratios = vec![Vec::with_capacity(trials); m];

    for trial in 0..trials {
        let mut rng = rng::derived(seed, Phase::Fidelity, 0, 0, trial);
        let f = draw_pool(&mut rng, d, m, normalize)?;
        let mut qdata = vec![0.0f64; d * n];
        rng::fill_uniform(&mut rng, &mut qdata);
        let q = Matrix::from_vec(d, n, qdata)?;
        let gmat = f.matrix().transpose_mul(&q)?;
        let labels = (0..n).map(|i| format!("q{i}")).collect();
        let g = ScoreMatrix::new(gmat, labels)?;
        let phi = gram(&f, DEFAULT_GRAM_BLOCK);

        // One full greedy pass; per-k prefixes are its first k picks.
        let full = greedy_mp(&phi, &g, m, 0.0)?;

        for k in 1..=m {
            let optimum = brute_force_select(
                &phi,
                &g,
                k,
                BruteForceObjective::CapturedEnergy,
                None,
                None,
            )?;
            let denom = captured_energy(&phi, &g, &canonical(&optimum.indices), 0.0)?;
            let mp = captured_energy(&phi, &g, &canonical(&full.indices.prefix(k)), 0.0)?;
            let rand_seed = rng.next_u64();
            let random = random_select(m, k, rand_seed)?;
            let rnd = captured_energy(&phi, &g, &canonical(&random.indices), 0.0)?;
            // A zero optimum means zero scores: everything captures nothing.
            let (mp_ratio, rnd_ratio) =
                if denom == 0.0 { (1.0, 1.0) } else { (mp / denom, rnd / denom) };
            mp_ratios[k - 1].push(mp_ratio);
            random_ratios[k - 1].push(rnd_ratio);
        }
    }

    let mut rows = Vec::with_capacity(m);
    for k in 1..=m {
        let (mp_mean, mp_std) = mean_std(&mp_ratios[k - 1]);
        let (rnd_mean, rnd_std) = mean_std(&random_ratios[k - 1]);
        rows.push(FidelityRow {
            k,
            mp_ratio_mean: mp_mean,
            mp_ratio_std: mp_std,
            random_ratio_mean: rnd_mean,
            random_ratio_std: rnd_std,
            trials,
        });
    }
    Ok(rows)
}

// ── Noise stability ─────────────────────────────────────────────────────────

/// Where the scores for each (clean or perturbed) pool come from.
#[derive(Debug, Clone, Copy)]
pub enum ScoreMode<'a> {
    /// Recompute self-compression scores (Gram row sums) from each pool.
    SelfCompression,
    /// Use one fixed score matrix for the clean baseline and every
    /// perturbation.
    Fixed(&'a ScoreMatrix),
}

/// IoU of two selections as index sets: `|A ∩ B| / |A ∪ B|`, defined as 1
/// when both are empty.
pub fn iou(a: &SelectionSet, b: &SelectionSet) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let sa: std::collections::HashSet<usize> = a.as_slice().iter().copied().collect();
    let sb: std::collections::HashSet<usize> = b.as_slice().iter().copied().collect();
    let inter = sa.intersection(&sb).count();
    let union = sa.len() + sb.len() - inter;
    inter as f64 / union as f64
}

/// Selection stability under embedding noise.
///
/// A clean baseline selection is computed per budget on the column-normalized
/// pool. Then, per `(sigma, budget, trial)`, every raw embedding entry is
/// perturbed with independent zero-mean Gaussian noise of stddev `sigma`
/// (before normalization), columns are re-normalized, scores are rebuilt per
/// `mode`, greedy selection reruns, and the IoU against the clean selection
/// is recorded. Rows come out in `sigmas × budgets` order.
///
/// # Errors
/// [`Error::InvalidParameter`] for empty grids, zero trials, or a negative
/// sigma; [`Error::ZeroColumn`] if a perturbation exactly cancels a column
/// (astronomically unlikely); score-dimension mismatches propagate.
pub fn stability_experiment(
    f: &EmbeddingMatrix,
    mode: ScoreMode<'_>,
    budgets: &[usize],
    sigmas: &[f64],
    trials: usize,
    seed: u64,
) -> Result<Vec<StabilityRow>> {
    if budgets.is_empty() || sigmas.is_empty() || trials == 0 {
        return Err(Error::InvalidParameter(
            "stability experiment needs nonempty budgets and sigmas and trials >= 1".into(),
        ));
    }
    if let Some(&bad) = sigmas.iter().find(|&&s| !(s >= 0.0)) {
        return Err(Error::InvalidParameter(format!("sigma must be >= 0, got {bad}")));
    }
    let scores_for = |pool: &EmbeddingMatrix| -> Result<(crate::matrix::GramMatrix, ScoreMatrix)> {
        let phi = gram(pool, DEFAULT_GRAM_BLOCK);
        let g = match mode {
            ScoreMode::SelfCompression => scoring::self_compression_scores(&phi),
            ScoreMode::Fixed(g) => g.clone(),
        };
        Ok((phi, g))
    };

    let clean_pool = normalize_columns(f.matrix())?;
    let (clean_phi, clean_g) = scores_for(&clean_pool)?;
    let mut baselines = Vec::with_capacity(budgets.len());
    for &b in budgets {
        baselines.push(greedy_mp(&clean_phi, &clean_g, b, 0.0)?.indices);
    }

    let (d, m) = (f.d(), f.m());
    let mut rows = Vec::with_capacity(sigmas.len() * budgets.len());
    for (si, &sigma) in sigmas.iter().enumerate() {
        for (bi, &budget) in budgets.iter().enumerate() {
            let mut ious = Vec::with_capacity(trials);
            for trial in 0..trials {
                let mut rng = rng::derived(seed, Phase::Stability, si, bi, trial);
                let mut noise = vec![0.0f64; d * m];
                rng::fill_standard_normal(&mut rng, &mut noise);
                let mut data = f.matrix().as_slice().to_vec();
                for (v, z) in data.iter_mut().zip(&noise) {
                    *v += sigma * z;
                }
                let perturbed = normalize_columns(&Matrix::from_vec(d, m, data)?)?;
                let (phi, g) = scores_for(&perturbed)?;
                let perturbed_sel = greedy_mp(&phi, &g, budget, 0.0)?.indices;
                ious.push(iou(&baselines[bi], &perturbed_sel));
            }
            let (mean, std) = mean_std(&ious);
            rows.push(StabilityRow { sigma, budget, iou_mean: mean, iou_std: std, trials });
        }
    }
    Ok(rows)
}

// ── Timing bench ────────────────────────────────────────────────────────────

const BENCH_REPS: usize = 5;
/// Fixed overhead added to the working-set estimate (factors, residual
/// matrix, bookkeeping).
const BENCH_FIXED_OVERHEAD_BYTES: u64 = 1 << 20;

/// Median of a small sample.
fn median(mut values: Vec<f64>) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).expect("timings are finite"));
    values[values.len() / 2]
}

/// Wall-clock scaling of the two pipeline stages on synthetic data.
///
/// For every `(m, k)` grid cell: draws a normalized `d×m` Gaussian pool and
/// an `m×n` Gaussian score matrix, then reports the median over 5
/// repetitions of (a) building the Gram matrix and (b) running greedy
/// selection to budget `k`. `peak_bytes_estimate` is the dominant
/// working-set size `8·(m² + n·m)` plus fixed overhead — an estimate, not a
/// measurement. Timing columns vary run to run; everything else is
/// deterministic in `seed`.
///
/// # Errors
/// [`Error::InvalidParameter`] for empty grids or zero `d`/`n`;
/// [`Error::BudgetExceedsPool`] when a cell has `k > m`.
pub fn timing_bench(
    m_grid: &[usize],
    k_grid: &[usize],
    d: usize,
    n: usize,
    seed: u64,
) -> Result<Vec<BenchRow>> {
    if m_grid.is_empty() || k_grid.is_empty() || d == 0 || n == 0 {
        return Err(Error::InvalidParameter(
            "timing bench needs nonempty grids and d, n >= 1".into(),
        ));
    }
    let mut rows = Vec::with_capacity(m_grid.len() * k_grid.len());
    for (mi, &m) in m_grid.iter().enumerate() {
        for (ki, &k) in k_grid.iter().enumerate() {
            if k > m {
                return Err(Error::BudgetExceedsPool { k, m });
            }
            let mut rng = rng::derived(seed, Phase::Bench, mi, ki, 0);
            let f = draw_pool(&mut rng, d, m, true)?;
            let mut gdata = vec![0.0f64; m * n];
            rng::fill_standard_normal(&mut rng, &mut gdata);
            let labels = (0..n).map(|i| format!("s{i}")).collect();
            let g = ScoreMatrix::new(Matrix::from_vec(m, n, gdata)?, labels)?;

            let mut gram_times = Vec::with_capacity(BENCH_REPS);
            let mut phi = None;
            for _ in 0..BENCH_REPS {
                // Release the previous Gram matrix before the timed rebuild:
                // holding two m×m buffers at once doubles peak memory, which
                // matters at the larger grid points.
                drop(phi.take());
                let t0 = Instant::now();
                phi = Some(gram(&f, DEFAULT_GRAM_BLOCK));
                gram_times.push(t0.elapsed().as_secs_f64());
            }
            let phi = phi.expect("BENCH_REPS > 0");

            let mut select_times = Vec::with_capacity(BENCH_REPS);
            for _ in 0..BENCH_REPS {
                let t0 = Instant::now();
                let out = greedy_mp(&phi, &g, k, 0.0)?;
                select_times.push(t0.elapsed().as_secs_f64());
                debug_assert_eq!(out.indices.len(), k);
            }

            rows.push(BenchRow {
                m,
                k,
                gram_seconds: median(gram_times),
                select_seconds: median(select_times),
                peak_bytes_estimate: 8 * (m as u64 * m as u64 + n as u64 * m as u64)
                    + BENCH_FIXED_OVERHEAD_BYTES,
            });
        }
    }
    Ok(rows)
}

// ── tests ───────────────────────────────────────────────────────────────────
