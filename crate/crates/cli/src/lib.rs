//! Support library for the `gip` command-line tool: file formats and
//! hashing ([`io`]), report structures and CSV rendering ([`report`]), and
//! small pieces of argument resolution that deserve direct tests.
//!
//! The binary itself lives in `main.rs` and only orchestrates: parse flags,
//! read inputs, call the numerical core, render a report.

pub mod io;
pub mod report;

/// Resolves the selection budget from `--k` or `--fraction` against a pool
/// of `m` items.
///
/// A fraction maps to `round(fraction·m)` — half-way cases round away from
/// zero — clamped below by 1 so a tiny fraction still selects something.
/// Exactly one of the two arguments must be present (the flag parser
/// enforces this; here it is a debug invariant).
pub fn resolve_budget(k: Option<usize>, fraction: Option<f64>, m: usize) -> usize {
    match (k, fraction) {
        (Some(k), None) => k,
        (None, Some(f)) => ((f * m as f64).round() as usize).max(1),
        _ => unreachable!("flag parser enforces exactly one of --k/--fraction"),
    }
}
