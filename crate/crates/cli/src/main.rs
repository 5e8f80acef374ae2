//! `gip` — greedy information projection subset selection.
//!
//! Three commands:
//!
//! * `select` runs the full pipeline on an embedding pool: load, optionally
//!   normalize, build the Gram matrix, score, select greedily, and write a
//!   report (JSON by default).
//! * `aggregate` sums a four-attribute rubric CSV into the single `total`
//!   score column that `select --scores` consumes.
//! * `experiment {fidelity,stability,bench}` runs the desk-scale
//!   verification protocols and writes CSV tables.
//!
//! Exit codes: 0 success, 1 data error (bad file contents, numerical
//! failures), 2 usage error (bad flags, bad `GIP_THREADS`). Data and usage
//! errors print a one-line JSON object on standard error. Output files are
//! written atomically and are byte-identical across reruns with the same
//! inputs, flags, and seed.

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use gip_cli::io::{self, IoError, MatrixFormat};
use gip_cli::report::{
    self, InputDigests, ObjectiveSummary, Parameters, SelectionReport,
};
use gip_cli::resolve_budget;
use gip_core::{
    aggregate_attributes, captured_energy, entropy_objective, exact_objective_logdet,
    fidelity_experiment, greedy_mp, gram, normalize_columns, regularized_query,
    self_compression_scores, stability_experiment, timing_bench, EmbeddingMatrix,
    FidelityConfig, Matrix, ScoreMode, DEFAULT_GRAM_BLOCK,
};

const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

// ── Errors and exit codes ───────────────────────────────────────────────────

/// Anything that aborts a command, tagged with how it maps to an exit code.
#[derive(Debug)]
enum CliError {
    /// Flag or environment misuse → exit 2.
    Usage(String),
    /// File reading, parsing, or writing failed → exit 1.
    Io(IoError),
    /// The numerical core rejected the inputs → exit 1.
    Core(gip_core::Error),
    /// Report serialization failed (should not happen) → exit 1.
    Json(serde_json::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Io(e) => write!(f, "{e}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Json(e) => write!(f, "{e}"),
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        // Surface validation failures that bubbled up through file parsing
        // under their own error kind rather than a generic wrapper.
        match e {
            IoError::Core(core) => CliError::Core(core),
            other => CliError::Io(other),
        }
    }
}

impl From<gip_core::Error> for CliError {
    fn from(e: gip_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Json(e)
    }
}

/// Stable machine-readable code for a numerical-core error.
fn core_kind(e: &gip_core::Error) -> &'static str {
    use gip_core::Error::*;
    match e {
        ZeroColumn(_) => "zero_column",
        NotPositiveDefinite { .. } => "not_positive_definite",
        DimensionMismatch(_) => "dimension_mismatch",
        DuplicateRecord(_) => "duplicate_record",
        IndexOutOfRange { .. } => "index_out_of_range",
        ScoreOutOfRange { .. } => "score_out_of_range",
        DuplicateIndex(_) => "duplicate_index",
        BudgetExceedsPool { .. } => "budget_exceeds_pool",
        InstanceTooLarge { .. } => "instance_too_large",
        RankDeficientQ { .. } => "rank_deficient_query",
        InvalidParameter(_) => "invalid_parameter",
        NonFiniteEntry { .. } => "non_finite_entry",
    }
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Io(e) => e.kind(),
            CliError::Core(e) => core_kind(e),
            CliError::Json(_) => "serialize",
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

type CmdResult = Result<(), CliError>;

// ── Flag surface ────────────────────────────────────────────────────────────

#[derive(Parser)]
#[command(
    name = "gip",
    version,
    about = "Greedy information projection: subset selection over embedding pools"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Select a subset of pool items by greedy matching pursuit
    Select(SelectArgs),
    /// Sum a rubric attribute CSV into a single total-score column
    Aggregate(AggregateArgs),
    /// Run a verification experiment and write its CSV table
    Experiment {
        #[command(subcommand)]
        which: ExperimentCommand,
    },
}

/// On-disk embedding format selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    /// Key on the file extension: `.csv` is CSV, anything else binary
    Auto,
    /// 16-byte-header binary container
    Binary,
    /// Headerless rectangular CSV grid
    Csv,
}

impl FormatArg {
    fn resolve(self, path: &Path) -> MatrixFormat {
        match self {
            FormatArg::Auto => io::infer_format(path),
            FormatArg::Binary => MatrixFormat::Binary,
            FormatArg::Csv => MatrixFormat::Csv,
        }
    }
}

/// Report output format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    /// Canonical full report
    Json,
    /// Flat step table with parameters in comment lines
    Csv,
}

fn parse_fraction(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("not a number: {s:?}"))?;
    if v.is_finite() && v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("fraction must lie in (0, 1], got {v}"))
    }
}

fn parse_positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("not a number: {s:?}"))?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(format!("value must be positive and finite, got {v}"))
    }
}

fn parse_non_negative(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("not a number: {s:?}"))?;
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("value must be non-negative and finite, got {v}"))
    }
}

#[derive(Args)]
#[command(group(ArgGroup::new("budget").required(true).args(["k", "fraction"])))]
#[command(group(ArgGroup::new("score_source").required(true).args(["scores", "self_compression"])))]
struct SelectArgs {
    /// Embedding pool file, one column per item
    #[arg(long, value_name = "PATH")]
    embeddings: PathBuf,

    /// How --embeddings is encoded
    #[arg(long, value_enum, default_value_t = FormatArg::Auto, value_name = "FORMAT")]
    embeddings_format: FormatArg,

    /// Score CSV with an `item_id,<label>,...` header
    #[arg(long, value_name = "PATH")]
    scores: Option<PathBuf>,

    /// Score items by their own pool geometry (Gram row sums); no score file
    #[arg(long)]
    self_compression: bool,

    /// Zero-fill items absent from the score file instead of erroring
    #[arg(long)]
    fill_missing_scores: bool,

    /// Scale every score column to unit Euclidean norm before selection
    #[arg(long)]
    standardize_scores: bool,

    /// Selection budget as an item count
    #[arg(long)]
    k: Option<usize>,

    /// Budget as a fraction of the pool: round(fraction·m), at least 1
    #[arg(long, value_parser = parse_fraction)]
    fraction: Option<f64>,

    /// Tikhonov regularizer for the query-matrix construction
    #[arg(long, default_value_t = 1e-6, value_parser = parse_positive)]
    epsilon: f64,

    /// Ridge added when evaluating captured energy
    #[arg(long, default_value_t = 0.0, value_parser = parse_non_negative)]
    ridge: f64,

    /// Stop early when the best step gain is at or below this threshold
    #[arg(long, default_value_t = 1e-12, value_parser = parse_non_negative)]
    gain_tol: f64,

    /// Normalize pool columns to unit length before selection (the default)
    #[arg(long, overrides_with = "no_normalize")]
    normalize: bool,

    /// Keep pool columns at their raw lengths
    #[arg(long, overrides_with = "normalize")]
    no_normalize: bool,

    /// Recorded in the report; selection itself is deterministic
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Write the report here instead of standard output
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Report format
    #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
    format: ReportFormat,

    /// Print a wall-clock breakdown to standard error
    #[arg(long)]
    timings: bool,
}

#[derive(Args)]
struct AggregateArgs {
    /// Rubric CSV: item_id,coherence,accuracy,helpfulness,difficulty
    #[arg(long, value_name = "PATH")]
    attributes: PathBuf,

    /// Pool size; items without a record total 0 and are warned about
    #[arg(long)]
    m: usize,

    /// Write the score CSV here instead of standard output
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ExperimentCommand {
    /// Greedy and random captured-energy ratios against the exhaustive
    /// optimum on random Gaussian instances
    Fidelity(FidelityArgs),
    /// Selection overlap (IoU) under Gaussian embedding noise
    Stability(StabilityArgs),
    /// Median wall-clock of Gram construction and greedy selection over an
    /// (m, k) grid
    Bench(BenchArgs),
}

#[derive(Args)]
struct FidelityArgs {
    /// Embedding dimension
    #[arg(long, default_value_t = 30)]
    d: usize,

    /// Pool size (the exhaustive oracle enumerates C(m, k) subsets)
    #[arg(long, default_value_t = 10)]
    m: usize,

    /// Number of score columns
    #[arg(long, default_value_t = 1)]
    n: usize,

    /// Independent random instances
    #[arg(long, default_value_t = 100)]
    trials: usize,

    /// Master seed
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Column-normalize each drawn pool (the default)
    #[arg(long, overrides_with = "no_normalize")]
    normalize: bool,

    /// Select on the raw Gaussian draws
    #[arg(long, overrides_with = "normalize")]
    no_normalize: bool,

    /// Write the CSV table here instead of standard output
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[command(group(ArgGroup::new("pool_source").required(true).args(["embeddings", "synthetic"])))]
struct StabilityArgs {
    /// Embedding pool file to perturb
    #[arg(long, value_name = "PATH")]
    embeddings: Option<PathBuf>,

    /// How --embeddings is encoded
    #[arg(long, value_enum, default_value_t = FormatArg::Auto, value_name = "FORMAT")]
    embeddings_format: FormatArg,

    /// Draw a seeded synthetic Gaussian pool instead of reading a file
    #[arg(long)]
    synthetic: bool,

    /// Synthetic pool dimension
    #[arg(long, default_value_t = 64)]
    synthetic_d: usize,

    /// Synthetic pool size
    #[arg(long, default_value_t = 2000)]
    synthetic_m: usize,

    /// Fixed score CSV; default recomputes self-compression scores per pool
    #[arg(long, value_name = "PATH")]
    scores: Option<PathBuf>,

    /// Selection budgets, comma-separated
    #[arg(long, value_delimiter = ',', default_values_t = vec![200, 400])]
    budgets: Vec<usize>,

    /// Noise standard deviations, comma-separated
    #[arg(long, value_delimiter = ',', default_values_t = vec![1e-8, 1e-4, 1e-3, 1e-2])]
    sigmas: Vec<f64>,

    /// Trials per (sigma, budget) cell
    #[arg(long, default_value_t = 3)]
    trials: usize,

    /// Master seed (also drives the synthetic pool)
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Write the CSV table here instead of standard output
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Pool sizes, comma-separated
    #[arg(long, value_delimiter = ',', default_values_t = vec![1000, 2000])]
    m_grid: Vec<usize>,

    /// Budgets, comma-separated
    #[arg(long, value_delimiter = ',', default_values_t = vec![50, 100])]
    k_grid: Vec<usize>,

    /// Embedding dimension
    #[arg(long, default_value_t = 16)]
    d: usize,

    /// Number of score columns
    #[arg(long, default_value_t = 4)]
    n: usize,

    /// Master seed
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Write the CSV table here instead of standard output
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

// ── Entry point ─────────────────────────────────────────────────────────────

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let object = serde_json::json!({
                "error": { "kind": err.kind(), "message": err.to_string() }
            });
            eprintln!("{object}");
            ExitCode::from(err.exit_code())
        }
    }
}

fn run(cli: Cli) -> CmdResult {
    validate_thread_cap()?;
    match cli.command {
        Command::Select(args) => cmd_select(args),
        Command::Aggregate(args) => cmd_aggregate(args),
        Command::Experiment { which } => match which {
            ExperimentCommand::Fidelity(args) => cmd_fidelity(args),
            ExperimentCommand::Stability(args) => cmd_stability(args),
            ExperimentCommand::Bench(args) => cmd_bench(args),
        },
    }
}

/// `GIP_THREADS` caps internal parallelism. The current kernels are
/// single-threaded, so any valid value runs identically, but an invalid
/// value is still a usage error rather than a silent no-op.
fn validate_thread_cap() -> CmdResult {
    match std::env::var_os("GIP_THREADS") {
        None => Ok(()),
        Some(raw) => match raw.to_str().and_then(|s| s.parse::<usize>().ok()) {
            Some(n) if n >= 1 => Ok(()),
            _ => Err(CliError::Usage(format!(
                "GIP_THREADS must be a positive integer, got {raw:?}"
            ))),
        },
    }
}

/// Writes `text` to `out` atomically, or to standard output when no path
/// was given.
fn write_output(out: Option<&Path>, text: &str) -> CmdResult {
    match out {
        Some(path) => Ok(io::atomic_write(path, text.as_bytes())?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

// ── select ──────────────────────────────────────────────────────────────────

fn cmd_select(args: SelectArgs) -> CmdResult {
    let t_total = Instant::now();
    let normalize = args.normalize || !args.no_normalize;

    // Inputs.
    let t_read = Instant::now();
    let format = args.embeddings_format.resolve(&args.embeddings);
    let raw = io::read_embeddings(&args.embeddings, format)?;
    let embeddings_sha256 = io::sha256_file(&args.embeddings)?;
    let pool = if normalize {
        normalize_columns(&raw)?
    } else {
        EmbeddingMatrix::raw(raw)
    };
    let m = pool.m();
    let (file_scores, scores_path, scores_sha256) = match &args.scores {
        Some(path) => {
            let read = io::read_scores(path, m, args.fill_missing_scores)?;
            let sha = io::sha256_file(path)?;
            (Some(read), Some(path.display().to_string()), Some(sha))
        }
        None => (None, None, None),
    };
    let read_seconds = t_read.elapsed().as_secs_f64();

    // Gram matrix.
    let t_gram = Instant::now();
    let phi = gram(&pool, DEFAULT_GRAM_BLOCK);
    let gram_seconds = t_gram.elapsed().as_secs_f64();

    // Scores, budget, selection.
    let missing_score_items = file_scores.as_ref().map_or(0, |r| r.missing.len());
    let scores = match file_scores {
        Some(read) => read.scores,
        None => self_compression_scores(&phi),
    };
    let (scores, skipped_score_columns) = if args.standardize_scores {
        scores.standardize_columns()
    } else {
        (scores, Vec::new())
    };
    let k = resolve_budget(args.k, args.fraction, m);

    let t_select = Instant::now();
    let result = greedy_mp(&phi, &scores, k, args.gain_tol)?;
    let select_seconds = t_select.elapsed().as_secs_f64();

    // Objective summary on the final selection.
    let captured = captured_energy(&phi, &scores, &result.indices, args.ridge)?;
    let query = regularized_query(&pool, &scores, args.epsilon)?;
    let (exact_logdet, _) = exact_objective_logdet(&query, &pool, &result.indices, args.ridge)?;
    let entropy = if result.indices.is_empty() {
        0.0
    } else {
        entropy_objective(&phi, &result.indices)?
    };

    let report = SelectionReport {
        tool_version: TOOL_VERSION.to_string(),
        inputs: InputDigests {
            embeddings_path: args.embeddings.display().to_string(),
            embeddings_sha256,
            scores_path,
            scores_sha256,
        },
        parameters: Parameters {
            k,
            epsilon: args.epsilon,
            ridge: args.ridge,
            gain_tol: args.gain_tol,
            seed: args.seed,
            normalize,
            standardize_scores: args.standardize_scores,
            score_source: if args.self_compression { "self-compression" } else { "file" }
                .to_string(),
        },
        missing_score_items,
        skipped_score_columns,
        selected: result.indices.as_slice().to_vec(),
        gains: result.gains,
        objective: ObjectiveSummary::from_values(
            captured,
            exact_logdet,
            entropy,
            query.fit_residual(),
        ),
        stop_reason: result.stop_reason.as_str().to_string(),
        // Never placed in output files: timings vary run to run, and output
        // files are byte-stable under identical inputs, flags, and seed.
        timings: None,
    };

    let text = match args.format {
        ReportFormat::Json => report.to_json()?,
        ReportFormat::Csv => report::selection_csv(&report),
    };
    write_output(args.out.as_deref(), &text)?;

    if args.timings {
        eprintln!(
            "timings: read {read_seconds:.3}s, gram {gram_seconds:.3}s, \
             select {select_seconds:.3}s, total {:.3}s",
            t_total.elapsed().as_secs_f64()
        );
    }
    Ok(())
}

// ── aggregate ───────────────────────────────────────────────────────────────

fn cmd_aggregate(args: AggregateArgs) -> CmdResult {
    let records = io::read_attributes(&args.attributes)?;
    let (scores, missing) = aggregate_attributes(&records, args.m)?;
    if !missing.is_empty() {
        let shown: Vec<usize> = missing.iter().copied().take(20).collect();
        let warning = serde_json::json!({
            "warning": {
                "kind": "missing_attribute_records",
                "count": missing.len(),
                "first_item_ids": shown,
            }
        });
        eprintln!("{warning}");
    }
    write_output(args.out.as_deref(), &io::encode_scores_csv(&scores))
}

// ── experiments ─────────────────────────────────────────────────────────────

fn cmd_fidelity(args: FidelityArgs) -> CmdResult {
    let normalize = args.normalize || !args.no_normalize;
    let rows = fidelity_experiment(FidelityConfig {
        d: args.d,
        m: args.m,
        n: args.n,
        trials: args.trials,
        seed: args.seed,
        normalize,
    })?;
    let text = report::fidelity_csv(
        &rows,
        &[
            ("command", "experiment fidelity".into()),
            ("tool_version", TOOL_VERSION.into()),
            ("d", args.d.to_string()),
            ("m", args.m.to_string()),
            ("n", args.n.to_string()),
            ("trials", args.trials.to_string()),
            ("seed", args.seed.to_string()),
            ("normalize", normalize.to_string()),
        ],
    );
    write_output(args.out.as_deref(), &text)
}

/// Draws the seeded synthetic Gaussian pool used by `experiment stability
/// --synthetic`.
fn synthetic_pool(d: usize, m: usize, seed: u64) -> Result<Matrix, CliError> {
    if d == 0 || m == 0 {
        return Err(CliError::Usage(format!(
            "synthetic pool needs positive dimensions, got {d}×{m}"
        )));
    }
    let mut rng = gip_core::rng::derived(seed, gip_core::rng::Phase::Pool, 0, 0, 0);
    let mut data = vec![0.0f64; d * m];
    gip_core::rng::fill_standard_normal(&mut rng, &mut data);
    Ok(Matrix::from_vec(d, m, data)?)
}

fn cmd_stability(args: StabilityArgs) -> CmdResult {
    let mut preamble: Vec<(&str, String)> = vec![
        ("command", "experiment stability".into()),
        ("tool_version", TOOL_VERSION.into()),
    ];
    let raw = match &args.embeddings {
        Some(path) => {
            let format = args.embeddings_format.resolve(path);
            let matrix = io::read_embeddings(path, format)?;
            preamble.push(("embeddings", path.display().to_string()));
            preamble.push(("embeddings_sha256", io::sha256_file(path)?));
            matrix
        }
        None => {
            preamble.push(("synthetic_d", args.synthetic_d.to_string()));
            preamble.push(("synthetic_m", args.synthetic_m.to_string()));
            synthetic_pool(args.synthetic_d, args.synthetic_m, args.seed)?
        }
    };
    let pool = EmbeddingMatrix::raw(raw);

    let fixed_scores = match &args.scores {
        Some(path) => {
            let read = io::read_scores(path, pool.m(), false)?;
            preamble.push(("scores", path.display().to_string()));
            preamble.push(("scores_sha256", io::sha256_file(path)?));
            Some(read.scores)
        }
        None => {
            preamble.push(("scores", "self-compression".into()));
            None
        }
    };
    let mode = match &fixed_scores {
        Some(s) => ScoreMode::Fixed(s),
        None => ScoreMode::SelfCompression,
    };

    let budgets: Vec<String> = args.budgets.iter().map(|b| b.to_string()).collect();
    let sigmas: Vec<String> = args.sigmas.iter().map(|s| s.to_string()).collect();
    preamble.push(("budgets", budgets.join(",")));
    preamble.push(("sigmas", sigmas.join(",")));
    preamble.push(("trials", args.trials.to_string()));
    preamble.push(("seed", args.seed.to_string()));

    let rows =
        stability_experiment(&pool, mode, &args.budgets, &args.sigmas, args.trials, args.seed)?;
    let text = report::stability_csv(&rows, &preamble);
    write_output(args.out.as_deref(), &text)
}

fn cmd_bench(args: BenchArgs) -> CmdResult {
    let rows = timing_bench(&args.m_grid, &args.k_grid, args.d, args.n, args.seed)?;
    let grid = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
    let text = report::bench_csv(
        &rows,
        &[
            ("command", "experiment bench".into()),
            ("tool_version", TOOL_VERSION.into()),
            ("m_grid", grid(&args.m_grid)),
            ("k_grid", grid(&args.k_grid)),
            ("d", args.d.to_string()),
            ("n", args.n.to_string()),
            ("seed", args.seed.to_string()),
        ],
    );
    write_output(args.out.as_deref(), &text)
}
