//! Selection reports and CSV table rendering.
//!
//! JSON is the canonical report format; CSV is provided for flat tables
//! (experiment outputs and a tabular view of a selection). Every renderer
//! here is deterministic: struct fields serialize in declaration order,
//! floats print in shortest-round-trip form, and tables carry their
//! parameters in `# key = value` comment lines so a file is self-describing.
//!
//! Wall-clock timings are the one quantity that can never be deterministic,
//! so [`SelectionReport::timings`] is optional and the command-line tool
//! leaves it out of output files (printing timings to standard error on
//! request instead); reruns with identical inputs, flags, and seed then
//! produce byte-identical files.

use gip_core::{BenchRow, FidelityRow, StabilityRow};
use serde::{Deserialize, Serialize};

/// Everything in a non-finite float that JSON cannot carry is mapped to
/// `None` (log-determinants use `-inf` as an "exactly singular" sentinel).
fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

// ── Report structure ────────────────────────────────────────────────────────

/// Content digests of the input files a selection was computed from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigests {
    /// Embedding file path as given on the command line.
    pub embeddings_path: String,
    /// SHA-256 of the embedding file's raw bytes, lowercase hex.
    pub embeddings_sha256: String,
    /// Score file path, absent under self-compression scoring.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub scores_path: Option<String>,
    /// SHA-256 of the score file, absent under self-compression scoring.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub scores_sha256: Option<String>,
}

/// The knobs that determine a selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    /// Selection budget after resolving `--k`/`--fraction`.
    pub k: usize,
    /// Tikhonov regularizer for the query-matrix construction.
    pub epsilon: f64,
    /// Ridge added when evaluating captured energy.
    pub ridge: f64,
    /// Greedy stops when the best step gain drops to this value or below.
    pub gain_tol: f64,
    /// Seed recorded for provenance (selection itself is deterministic).
    pub seed: u64,
    /// Whether pool columns were normalized to unit length before selection.
    pub normalize: bool,
    /// Whether score columns were scaled to unit Euclidean norm.
    pub standardize_scores: bool,
    /// Where the scores came from: `"file"` or `"self-compression"`.
    pub score_source: String,
}

/// Objective values evaluated on the final selection. Fields are `None`
/// when the underlying log-determinant is `-inf` (numerically singular).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSummary {
    /// Score energy captured by the selected subset.
    pub captured_energy: f64,
    /// Log-determinant of the projected query covariance (the exact
    /// objective; smaller is better).
    pub exact_logdet: Option<f64>,
    /// Differential-entropy-style log-determinant of the selected Gram
    /// submatrix (the diversity-only fallback).
    pub entropy: Option<f64>,
    /// `‖FᵀQ_ε − G‖_F` of the constructed query matrix.
    pub fit_residual: f64,
}

/// Wall-clock breakdown of one `select` run, in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WallClock {
    /// Reading and validating input files.
    pub read_seconds: f64,
    /// Building the Gram matrix.
    pub gram_seconds: f64,
    /// Greedy selection proper.
    pub select_seconds: f64,
    /// End-to-end command time.
    pub total_seconds: f64,
}

/// The full record of one selection run: inputs, parameters, the chosen
/// indices, and objective values. Round-trips losslessly through JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    /// Version of the tool that produced the report.
    pub tool_version: String,
    /// Input file digests.
    pub inputs: InputDigests,
    /// Resolved parameters.
    pub parameters: Parameters,
    /// Item ids that had no score row and were zero-filled.
    pub missing_score_items: usize,
    /// Score columns left unscaled by standardization (zero norm).
    pub skipped_score_columns: Vec<usize>,
    /// Selected indices, 0-based, in selection order.
    pub selected: Vec<usize>,
    /// Step gains, one per selected index.
    pub gains: Vec<f64>,
    /// Objective values on the final selection.
    pub objective: ObjectiveSummary,
    /// Why greedy stopped: `budget_reached`, `gain_below_tol`, or
    /// `pool_exhausted`.
    pub stop_reason: String,
    /// Wall-clock breakdown; not populated in output files (timings are
    /// inherently non-reproducible, and output files are byte-stable).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub timings: Option<WallClock>,
}

impl ObjectiveSummary {
    /// Builds a summary from raw objective values, mapping `-inf`
    /// sentinels to `None`.
    pub fn from_values(
        captured_energy: f64,
        exact_logdet: f64,
        entropy: f64,
        fit_residual: f64,
    ) -> Self {
        ObjectiveSummary {
            captured_energy,
            exact_logdet: finite(exact_logdet),
            entropy: finite(entropy),
            fit_residual,
        }
    }
}

impl SelectionReport {
    /// Canonical JSON rendering: pretty-printed, trailing newline,
    /// deterministic byte-for-byte for equal reports.
    pub fn to_json(&self) -> serde_json::Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    /// Parses a report previously rendered by [`SelectionReport::to_json`].
    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

// ── CSV rendering ───────────────────────────────────────────────────────────

/// Renders `# key = value` comment lines followed by a header line.
fn csv_preamble(out: &mut String, params: &[(&str, String)], header: &str) {
    for (key, value) in params {
        out.push_str(&format!("# {key} = {value}\n"));
    }
    out.push_str(header);
    out.push('\n');
}

/// Tabular view of a selection: one `step,index,gain` row per pick, with
/// the parameters and objective summary in comment lines.
pub fn selection_csv(report: &SelectionReport) -> String {
    let mut out = String::new();
    let fmt_opt = |v: Option<f64>| v.map_or("singular".to_string(), |x| format!("{x}"));
    csv_preamble(
        &mut out,
        &[
            ("tool_version", report.tool_version.clone()),
            ("embeddings_sha256", report.inputs.embeddings_sha256.clone()),
            ("k", format!("{}", report.parameters.k)),
            ("epsilon", format!("{}", report.parameters.epsilon)),
            ("ridge", format!("{}", report.parameters.ridge)),
            ("gain_tol", format!("{}", report.parameters.gain_tol)),
            ("seed", format!("{}", report.parameters.seed)),
            ("normalize", format!("{}", report.parameters.normalize)),
            ("score_source", report.parameters.score_source.clone()),
            ("captured_energy", format!("{}", report.objective.captured_energy)),
            ("exact_logdet", fmt_opt(report.objective.exact_logdet)),
            ("entropy", fmt_opt(report.objective.entropy)),
            ("fit_residual", format!("{}", report.objective.fit_residual)),
            ("stop_reason", report.stop_reason.clone()),
        ],
        "step,index,gain",
    );
    for (step, (&index, &gain)) in report.selected.iter().zip(&report.gains).enumerate() {
        out.push_str(&format!("{step},{index},{gain}\n"));
    }
    out
}

/// Fidelity experiment table: greedy and random captured-energy ratios
/// against the exhaustive optimum, one row per budget.
pub fn fidelity_csv(rows: &[FidelityRow], params: &[(&str, String)]) -> String {
    let mut out = String::new();
    csv_preamble(
        &mut out,
        params,
        "k,mp_ratio_mean,mp_ratio_std,random_ratio_mean,random_ratio_std,trials",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.k, r.mp_ratio_mean, r.mp_ratio_std, r.random_ratio_mean, r.random_ratio_std,
            r.trials
        ));
    }
    out
}

/// Stability experiment table: selection overlap under embedding noise,
/// one row per (sigma, budget) grid cell.
pub fn stability_csv(rows: &[StabilityRow], params: &[(&str, String)]) -> String {
    let mut out = String::new();
    csv_preamble(&mut out, params, "sigma,budget,iou_mean,iou_std,trials");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.sigma, r.budget, r.iou_mean, r.iou_std, r.trials
        ));
    }
    out
}

/// Timing bench table: median stage times per (m, k) grid cell. The two
/// `*_seconds` columns vary run to run; everything else is deterministic.
pub fn bench_csv(rows: &[BenchRow], params: &[(&str, String)]) -> String {
    let mut out = String::new();
    csv_preamble(&mut out, params, "m,k,gram_seconds,select_seconds,peak_bytes_estimate");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.m, r.k, r.gram_seconds, r.select_seconds, r.peak_bytes_estimate
        ));
    }
    out
}

// ── tests ───────────────────────────────────────────────────────────────────
