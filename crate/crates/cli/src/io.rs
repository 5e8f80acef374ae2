//! File formats: the binary embedding container, CSV readers for grids,
//! scores, and rubric attributes, content hashing, and atomic writes.
//!
//! # Binary embedding format
//!
//! A fixed 16-byte header followed by the matrix entries:
//!
//! | offset | size | field   | value                               |
//! |--------|------|---------|-------------------------------------|
//! | 0      | 4    | magic   | `"GIPF"`                            |
//! | 4      | 2    | version | `1`, little-endian                  |
//! | 6      | 1    | order   | `0` = row-major                     |
//! | 7      | 1    | dtype   | `0` = real64, little-endian         |
//! | 8      | 4    | d       | row count, little-endian            |
//! | 12     | 4    | m       | column count, little-endian         |
//!
//! The payload is exactly `8·d·m` bytes of row-major `f64` values. Reading
//! rejects trailing bytes, so a round trip is the identity on the entry
//! sequence.
//!
//! # CSV formats
//!
//! *Embeddings*: a headerless rectangular numeric grid, `d` rows of `m`
//! comma-separated values (one matrix row per line).
//!
//! *Scores*: a header line `item_id,<label>,...` followed by one row per
//! item. Rows may arrive in any order; ids are 0-based.
//!
//! *Attributes*: the fixed header
//! `item_id,coherence,accuracy,helpfulness,difficulty` followed by integer
//! rows, each attribute in `0..=5`.
//!
//! All cell coordinates in errors are 0-based and count data rows (the
//! header line of a score or attribute file is not row 0).

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use gip_core::{AttributeRecord, Matrix, ScoreMatrix};
use sha2::{Digest, Sha256};

/// Leading bytes of every binary embedding file.
pub const MAGIC: [u8; 4] = *b"GIPF";
/// The single format version this tool reads and writes.
pub const FORMAT_VERSION: u16 = 1;
/// Header size in bytes.
pub const HEADER_LEN: usize = 16;

/// How an embedding file is encoded on disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    /// The 16-byte-header binary container documented at module level.
    Binary,
    /// Headerless rectangular CSV grid.
    Csv,
}

/// Picks [`MatrixFormat::Csv`] for a `.csv` extension (case-insensitive)
/// and [`MatrixFormat::Binary`] for everything else.
pub fn infer_format(path: &Path) -> MatrixFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("csv") => MatrixFormat::Csv,
        _ => MatrixFormat::Binary,
    }
}

/// Errors from file parsing, validation, and writing.
#[derive(Debug, thiserror::Error)]
pub enum IoError {
    /// The file does not start with [`MAGIC`].
    #[error("bad magic {found:?}, expected \"GIPF\" — not an embedding file")]
    BadMagic {
        /// The first four bytes actually present.
        found: [u8; 4],
    },

    /// The header claims a version this tool does not speak.
    #[error("unsupported format version {found}, this tool reads version {FORMAT_VERSION}")]
    BadVersion {
        /// Version field from the header.
        found: u16,
    },

    /// The header's element-order byte is not row-major.
    #[error("unsupported element order {0}, only 0 (row-major) is defined")]
    UnsupportedOrder(u8),

    /// The header's element-type byte is not little-endian real64.
    #[error("unsupported element type {0}, only 0 (real64 little-endian) is defined")]
    UnsupportedDtype(u8),

    /// The file ends before the header does.
    #[error("file has {found} bytes, shorter than the {HEADER_LEN}-byte header")]
    TruncatedHeader {
        /// Total file length.
        found: usize,
    },

    /// The header promises more payload than the file holds.
    #[error(
        "payload truncated: header promises {d}×{m} entries ({expected} bytes), found {found}"
    )]
    TruncatedPayload {
        /// Header row count.
        d: usize,
        /// Header column count.
        m: usize,
        /// Expected payload bytes, `8·d·m`.
        expected: usize,
        /// Payload bytes actually present.
        found: usize,
    },

    /// Bytes remain after the promised payload.
    #[error("{extra} trailing bytes after the {expected}-byte payload")]
    TrailingBytes {
        /// Expected payload bytes.
        expected: usize,
        /// Surplus byte count.
        extra: usize,
    },

    /// The header declares a zero dimension, or a CSV grid is empty.
    #[error("empty matrix: {0}")]
    EmptyMatrix(String),

    /// A CSV row has the wrong number of cells.
    #[error("row {row} has {found} cells, expected {expected}")]
    RaggedCsv {
        /// 0-based data row.
        row: usize,
        /// Cell count implied by the first row (or header).
        expected: usize,
        /// Cell count found.
        found: usize,
    },

    /// A CSV cell failed to parse as a number.
    #[error("cell ({row}, {col}) is not numeric: {text:?}")]
    NonNumericCell {
        /// 0-based data row.
        row: usize,
        /// 0-based column.
        col: usize,
        /// The offending cell text.
        text: String,
    },

    /// A matrix entry is NaN or infinite.
    #[error("entry ({row}, {col}) is not finite: {value}")]
    NonFiniteValue {
        /// 0-based row.
        row: usize,
        /// 0-based column.
        col: usize,
        /// The offending value.
        value: f64,
    },

    /// A header line does not match the expected column list.
    #[error("bad header: expected {expected:?}, found {found:?}")]
    BadHeader {
        /// The required header line.
        expected: String,
        /// The header line actually present.
        found: String,
    },

    /// Two score rows carry the same item id.
    #[error("duplicate item id {0} in score file")]
    DuplicateItem(usize),

    /// Item ids are missing and zero-filling was not requested.
    #[error(
        "{count} of {m} item ids missing from score file (first missing: {first}); \
         pass --fill-missing-scores to zero-fill them"
    )]
    MissingItem {
        /// How many ids have no row.
        count: usize,
        /// Smallest missing id.
        first: usize,
        /// Pool size.
        m: usize,
    },

    /// An item id is at or beyond the pool size.
    #[error("item id {id} out of range for pool size {m}")]
    ItemOutOfRange {
        /// The offending id.
        id: usize,
        /// Pool size.
        m: usize,
    },

    /// A numerical-core invariant was violated while assembling the result.
    #[error(transparent)]
    Core(#[from] gip_core::Error),

    /// The underlying filesystem operation failed.
    #[error("{path}: {source}")]
    Io {
        /// File the operation touched.
        path: PathBuf,
        /// The OS-level error.
        source: std::io::Error,
    },
}

impl IoError {
    /// Stable machine-readable code for the error kind, used in the JSON
    /// error objects the CLI prints on standard error.
    pub fn kind(&self) -> &'static str {
        match self {
            IoError::BadMagic { .. } => "bad_magic",
            IoError::BadVersion { .. } => "bad_version",
            IoError::UnsupportedOrder(_) => "unsupported_order",
            IoError::UnsupportedDtype(_) => "unsupported_dtype",
            IoError::TruncatedHeader { .. } => "truncated_header",
            IoError::TruncatedPayload { .. } => "truncated_payload",
            IoError::TrailingBytes { .. } => "trailing_bytes",
            IoError::EmptyMatrix(_) => "empty_matrix",
            IoError::RaggedCsv { .. } => "ragged_csv",
            IoError::NonNumericCell { .. } => "non_numeric_cell",
            IoError::NonFiniteValue { .. } => "non_finite_value",
            IoError::BadHeader { .. } => "bad_header",
            IoError::DuplicateItem(_) => "duplicate_item",
            IoError::MissingItem { .. } => "missing_item",
            IoError::ItemOutOfRange { .. } => "item_out_of_range",
            IoError::Core(_) => "core",
            IoError::Io { .. } => "io",
        }
    }
}

/// Shorthand for fallible operations in this module.
pub type Result<T> = std::result::Result<T, IoError>;

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|source| IoError::Io { path: path.to_path_buf(), source })
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| IoError::Io { path: path.to_path_buf(), source })
}

// ── Binary container ────────────────────────────────────────────────────────

/// Serializes a matrix into the binary container format (header + row-major
/// little-endian payload).
pub fn encode_embeddings(matrix: &Matrix) -> Vec<u8> {
    let (d, m) = (matrix.rows(), matrix.cols());
    let mut bytes = Vec::with_capacity(HEADER_LEN + 8 * d * m);
    bytes.extend_from_slice(&MAGIC);
    bytes.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    bytes.push(0); // order: row-major
    bytes.push(0); // dtype: real64 little-endian
    bytes.extend_from_slice(&(d as u32).to_le_bytes());
    bytes.extend_from_slice(&(m as u32).to_le_bytes());
    for &v in matrix.as_slice() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    bytes
}

/// Parses the binary container format.
///
/// # Errors
/// [`IoError::TruncatedHeader`], [`IoError::BadMagic`],
/// [`IoError::BadVersion`], [`IoError::UnsupportedOrder`],
/// [`IoError::UnsupportedDtype`], [`IoError::EmptyMatrix`],
/// [`IoError::TruncatedPayload`], [`IoError::TrailingBytes`], or
/// [`IoError::NonFiniteValue`].
pub fn decode_embeddings(bytes: &[u8]) -> Result<Matrix> {
    if bytes.len() < HEADER_LEN {
        return Err(IoError::TruncatedHeader { found: bytes.len() });
    }
    let mut magic = [0u8; 4];
    magic.copy_from_slice(&bytes[0..4]);
    if magic != MAGIC {
        return Err(IoError::BadMagic { found: magic });
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != FORMAT_VERSION {
        return Err(IoError::BadVersion { found: version });
    }
    if bytes[6] != 0 {
        return Err(IoError::UnsupportedOrder(bytes[6]));
    }
    if bytes[7] != 0 {
        return Err(IoError::UnsupportedDtype(bytes[7]));
    }
    let d = u32::from_le_bytes([bytes[8], bytes[9], bytes[10], bytes[11]]) as usize;
    let m = u32::from_le_bytes([bytes[12], bytes[13], bytes[14], bytes[15]]) as usize;
    if d == 0 || m == 0 {
        return Err(IoError::EmptyMatrix(format!("header declares {d}×{m}")));
    }
    let expected = 8 * d * m;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() < expected {
        return Err(IoError::TruncatedPayload { d, m, expected, found: payload.len() });
    }
    if payload.len() > expected {
        return Err(IoError::TrailingBytes { expected, extra: payload.len() - expected });
    }
    let mut data = Vec::with_capacity(d * m);
    for chunk in payload.chunks_exact(8) {
        let mut raw = [0u8; 8];
        raw.copy_from_slice(chunk);
        data.push(f64::from_le_bytes(raw));
    }
    for (pos, &v) in data.iter().enumerate() {
        if !v.is_finite() {
            return Err(IoError::NonFiniteValue { row: pos / m, col: pos % m, value: v });
        }
    }
    Ok(Matrix::from_vec(d, m, data)?)
}

/// Writes a matrix to `path` in the binary container format, atomically.
pub fn write_embeddings_binary(path: &Path, matrix: &Matrix) -> Result<()> {
    atomic_write(path, &encode_embeddings(matrix))
}

// ── CSV grids ───────────────────────────────────────────────────────────────

/// Splits CSV text into non-empty trimmed lines (tolerates `\r\n` and a
/// trailing newline).
fn csv_lines(text: &str) -> Vec<&str> {
    text.lines().map(|l| l.trim_end_matches('\r')).filter(|l| !l.trim().is_empty()).collect()
}

/// Parses a headerless rectangular numeric grid: `d` lines of `m`
/// comma-separated values.
///
/// # Errors
/// [`IoError::EmptyMatrix`], [`IoError::RaggedCsv`],
/// [`IoError::NonNumericCell`], or [`IoError::NonFiniteValue`].
pub fn decode_embeddings_csv(text: &str) -> Result<Matrix> {
    let lines = csv_lines(text);
    if lines.is_empty() {
        return Err(IoError::EmptyMatrix("csv grid has no rows".into()));
    }
    let m = lines[0].split(',').count();
    let d = lines.len();
    let mut data = Vec::with_capacity(d * m);
    for (row, line) in lines.iter().enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != m {
            return Err(IoError::RaggedCsv { row, expected: m, found: cells.len() });
        }
        for (col, cell) in cells.iter().enumerate() {
            let value: f64 = cell.trim().parse().map_err(|_| IoError::NonNumericCell {
                row,
                col,
                text: cell.trim().to_string(),
            })?;
            if !value.is_finite() {
                return Err(IoError::NonFiniteValue { row, col, value });
            }
            data.push(value);
        }
    }
    Ok(Matrix::from_vec(d, m, data)?)
}

/// Renders a matrix as a headerless CSV grid (one matrix row per line,
/// shortest-round-trip float formatting).
pub fn encode_embeddings_csv(matrix: &Matrix) -> String {
    let mut out = String::new();
    for i in 0..matrix.rows() {
        for j in 0..matrix.cols() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&format!("{}", matrix.at(i, j)));
        }
        out.push('\n');
    }
    out
}

/// Loads an embedding matrix from disk in the given format. Normalization is
/// never applied here; the caller decides and records that choice.
pub fn read_embeddings(path: &Path, format: MatrixFormat) -> Result<Matrix> {
    match format {
        MatrixFormat::Binary => decode_embeddings(&read_file(path)?),
        MatrixFormat::Csv => decode_embeddings_csv(&read_text(path)?),
    }
}

// ── Score files ─────────────────────────────────────────────────────────────

/// A parsed score file plus bookkeeping the report wants.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoresRead {
    /// The assembled `m×n` score matrix, rows in item-id order.
    pub scores: ScoreMatrix,
    /// Ids that had no row and were zero-filled (empty in strict mode,
    /// where any gap is an error instead).
    pub missing: Vec<usize>,
}

/// Parses a score CSV (`item_id,<label>,...` header, one row per item, any
/// row order) against a pool of `expected_m` items.
///
/// Missing ids error in strict mode; with `fill_missing` they score zero in
/// every column and are listed in [`ScoresRead::missing`].
///
/// # Errors
/// [`IoError::BadHeader`] if the first column is not `item_id` or there is
/// no score column; [`IoError::NonNumericCell`], [`IoError::RaggedCsv`],
/// [`IoError::NonFiniteValue`], [`IoError::DuplicateItem`],
/// [`IoError::ItemOutOfRange`], or [`IoError::MissingItem`].
pub fn read_scores(path: &Path, expected_m: usize, fill_missing: bool) -> Result<ScoresRead> {
    let text = read_text(path)?;
    let lines = csv_lines(&text);
    if lines.is_empty() {
        return Err(IoError::BadHeader {
            expected: "item_id,<label>,...".into(),
            found: String::new(),
        });
    }
    let header: Vec<&str> = lines[0].split(',').map(str::trim).collect();
    if header.len() < 2 || header[0] != "item_id" {
        return Err(IoError::BadHeader {
            expected: "item_id,<label>,...".into(),
            found: lines[0].to_string(),
        });
    }
    let labels: Vec<String> = header[1..].iter().map(|s| s.to_string()).collect();
    let n = labels.len();

    let mut data = vec![0.0f64; expected_m * n];
    let mut seen = vec![false; expected_m];
    for (row, line) in lines[1..].iter().enumerate() {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != n + 1 {
            return Err(IoError::RaggedCsv { row, expected: n + 1, found: cells.len() });
        }
        let id: usize = cells[0].parse().map_err(|_| IoError::NonNumericCell {
            row,
            col: 0,
            text: cells[0].to_string(),
        })?;
        if id >= expected_m {
            return Err(IoError::ItemOutOfRange { id, m: expected_m });
        }
        if seen[id] {
            return Err(IoError::DuplicateItem(id));
        }
        seen[id] = true;
        for (j, cell) in cells[1..].iter().enumerate() {
            let value: f64 = cell.parse().map_err(|_| IoError::NonNumericCell {
                row,
                col: j + 1,
                text: cell.to_string(),
            })?;
            if !value.is_finite() {
                return Err(IoError::NonFiniteValue { row, col: j + 1, value });
            }
            data[id * n + j] = value;
        }
    }

    let missing: Vec<usize> = (0..expected_m).filter(|&i| !seen[i]).collect();
    if !missing.is_empty() && !fill_missing {
        return Err(IoError::MissingItem {
            count: missing.len(),
            first: missing[0],
            m: expected_m,
        });
    }
    let scores = ScoreMatrix::new(Matrix::from_vec(expected_m, n, data)?, labels)?;
    Ok(ScoresRead { scores, missing })
}

/// Renders a score matrix as `item_id,<label>,...` CSV, rows in id order —
/// the inverse of [`read_scores`] up to row order.
pub fn encode_scores_csv(scores: &ScoreMatrix) -> String {
    let mut out = String::from("item_id");
    for label in scores.labels() {
        out.push(',');
        out.push_str(label);
    }
    out.push('\n');
    for i in 0..scores.m() {
        out.push_str(&format!("{i}"));
        for j in 0..scores.n() {
            out.push_str(&format!(",{}", scores.at(i, j)));
        }
        out.push('\n');
    }
    out
}

// ── Attribute files ─────────────────────────────────────────────────────────

/// The exact header an attribute CSV must carry.
pub const ATTRIBUTE_HEADER: &str = "item_id,coherence,accuracy,helpfulness,difficulty";

/// Parses a rubric attribute CSV into records (file order, unvalidated
/// against any pool size — aggregation checks ranges and duplicates).
///
/// # Errors
/// [`IoError::BadHeader`] unless the header is exactly
/// [`ATTRIBUTE_HEADER`]; [`IoError::RaggedCsv`] or
/// [`IoError::NonNumericCell`] for malformed rows; [`IoError::Core`] when a
/// attribute value falls outside `0..=5`.
pub fn read_attributes(path: &Path) -> Result<Vec<AttributeRecord>> {
    let text = read_text(path)?;
    let lines = csv_lines(&text);
    if lines.is_empty() || lines[0].split(',').map(str::trim).collect::<Vec<_>>().join(",") != ATTRIBUTE_HEADER
    {
        return Err(IoError::BadHeader {
            expected: ATTRIBUTE_HEADER.into(),
            found: lines.first().map(|s| s.to_string()).unwrap_or_default(),
        });
    }
    let mut records = Vec::with_capacity(lines.len().saturating_sub(1));
    for (row, line) in lines[1..].iter().enumerate() {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != 5 {
            return Err(IoError::RaggedCsv { row, expected: 5, found: cells.len() });
        }
        let mut parsed = [0i64; 5];
        for (col, cell) in cells.iter().enumerate() {
            parsed[col] = cell.parse().map_err(|_| IoError::NonNumericCell {
                row,
                col,
                text: cell.to_string(),
            })?;
        }
        if parsed[0] < 0 {
            return Err(IoError::NonNumericCell { row, col: 0, text: cells[0].to_string() });
        }
        records.push(AttributeRecord::new(
            parsed[0] as usize,
            parsed[1],
            parsed[2],
            parsed[3],
            parsed[4],
        )?);
    }
    Ok(records)
}

// ── Hashing and atomic output ───────────────────────────────────────────────

/// Lowercase hex SHA-256 of a byte slice.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

/// Lowercase hex SHA-256 of a file's raw bytes.
pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(sha256_hex(&read_file(path)?))
}

/// Writes `bytes` to `path` atomically: the content lands in a sibling
/// `.tmp` file first and is renamed into place, so readers never observe a
/// half-written file.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let wrap = |source| IoError::Io { path: path.to_path_buf(), source };
    let mut file = fs::File::create(&tmp).map_err(wrap)?;
    file.write_all(bytes).map_err(wrap)?;
    file.sync_all().map_err(wrap)?;
    drop(file);
    fs::rename(&tmp, path).map_err(wrap)
}

// ── tests ───────────────────────────────────────────────────────────────────
