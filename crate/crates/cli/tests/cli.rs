//! End-to-end tests of the `gip` binary: exit codes, report contents,
//! file-format handling, and byte-level reproducibility on small fixtures.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gip_cli::io;
use gip_cli::report::SelectionReport;
use gip_core::Matrix;

/// Runs the binary with `args` and optional environment overrides.
fn gip(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_gip"));
    cmd.args(args);
    for (key, value) in env {
        cmd.env(key, value);
    }
    cmd.output().expect("binary should spawn")
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout is utf-8")
}

fn stderr_str(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("stderr is utf-8")
}

/// Asserts the process failed with `code` and printed a JSON error object
/// of the given kind on standard error.
fn assert_error(out: &Output, code: i32, kind: &str) {
    assert_eq!(out.status.code(), Some(code), "stderr: {}", stderr_str(out));
    let err: serde_json::Value =
        serde_json::from_str(stderr_str(out).lines().next().unwrap_or_default())
            .expect("stderr should carry a JSON error object");
    assert_eq!(err["error"]["kind"], kind, "full object: {err}");
}

/// A small deterministic pool: 4×6, mildly correlated columns.
fn fixture_pool() -> Matrix {
    Matrix::from_fn(4, 6, |i, j| {
        let base = ((i * 7 + j * 3) % 11) as f64 - 5.0;
        base / 3.0 + if i == j % 4 { 1.0 } else { 0.0 }
    })
}

fn write_pool_binary(dir: &Path) -> PathBuf {
    let path = dir.join("pool.gipf");
    io::write_embeddings_binary(&path, &fixture_pool()).unwrap();
    path
}

fn write_scores(dir: &Path, name: &str, rows: &[(usize, f64)]) -> PathBuf {
    let path = dir.join(name);
    let mut text = String::from("item_id,quality\n");
    for (id, value) in rows {
        text.push_str(&format!("{id},{value}\n"));
    }
    io::atomic_write(&path, text.as_bytes()).unwrap();
    path
}

fn full_scores(dir: &Path) -> PathBuf {
    write_scores(
        dir,
        "scores.csv",
        &[(0, 0.5), (1, 6.5), (2, 5.5), (3, 4.5), (4, 3.5), (5, 2.5)],
    )
}

#[test]
fn select_writes_a_valid_reproducible_report() {
    let dir = tempfile::tempdir().unwrap();
    let pool = write_pool_binary(dir.path());
    let scores = full_scores(dir.path());
    let out_a = dir.path().join("a.json");
    let out_b = dir.path().join("b.json");

    let run = |out: &Path| {
        gip(
            &[
                "select",
                "--embeddings",
                pool.to_str().unwrap(),
                "--scores",
                scores.to_str().unwrap(),
                "--k",
                "3",
                "--out",
                out.to_str().unwrap(),
            ],
            &[],
        )
    };
    let first = run(&out_a);
    assert!(first.status.success(), "stderr: {}", stderr_str(&first));
    let second = run(&out_b);
    assert!(second.status.success());

    let bytes_a = std::fs::read(&out_a).unwrap();
    let bytes_b = std::fs::read(&out_b).unwrap();
    assert_eq!(bytes_a, bytes_b, "same command must produce identical files");

    let report = SelectionReport::from_json(&String::from_utf8(bytes_a).unwrap()).unwrap();
    assert_eq!(report.selected.len(), 3);
    assert_eq!(report.gains.len(), 3);
    let mut sorted = report.selected.clone();
    sorted.sort_unstable();
    sorted.dedup();
    assert_eq!(sorted.len(), 3, "indices must be distinct");
    assert!(report.selected.iter().all(|&i| i < 6), "indices must be in range");
    assert_eq!(report.stop_reason, "budget_reached");
    assert_eq!(report.parameters.k, 3);
    assert_eq!(report.inputs.embeddings_sha256.len(), 64);
    assert!(report.timings.is_none(), "output files never carry timings");
    assert!(report.objective.captured_energy > 0.0);
}

#[test]
fn fraction_resolves_against_the_pool_size() {
    let dir = tempfile::tempdir().unwrap();
    let pool = write_pool_binary(dir.path());
    let out = gip(
        &[
            "select",
            "--embeddings",
            pool.to_str().unwrap(),
            "--self-compression",
            "--fraction",
            "0.25",
        ],
        &[],
    );
    assert!(out.status.success(), "stderr: {}", stderr_str(&out));
    // round(0.25 · 6) = round(1.5) = 2, half away from zero.
    let report = SelectionReport::from_json(&stdout_str(&out)).unwrap();
    assert_eq!(report.parameters.k, 2);
    assert_eq!(report.selected.len(), 2);
    assert_eq!(report.parameters.score_source, "self-compression");
    assert!(report.inputs.scores_path.is_none());
}

#[test]
fn csv_and_binary_embeddings_give_the_same_selection() {
    let dir = tempfile::tempdir().unwrap();
    let binary = write_pool_binary(dir.path());
    let csv = dir.path().join("pool.csv");
    io::atomic_write(&csv, io::encode_embeddings_csv(&fixture_pool()).as_bytes()).unwrap();
    let scores = full_scores(dir.path());

    let run = |path: &Path| {
        let out = gip(
            &[
                "select",
                "--embeddings",
                path.to_str().unwrap(),
                "--scores",
                scores.to_str().unwrap(),
                "--k",
                "4",
            ],
            &[],
        );
        assert!(out.status.success(), "stderr: {}", stderr_str(&out));
        SelectionReport::from_json(&stdout_str(&out)).unwrap()
    };
    let from_binary = run(&binary);
    let from_csv = run(&csv);
    assert_eq!(from_binary.selected, from_csv.selected);
    assert_eq!(from_binary.gains, from_csv.gains);
    assert_ne!(
        from_binary.inputs.embeddings_sha256, from_csv.inputs.embeddings_sha256,
        "digests hash raw bytes, which differ between encodings"
    );
}

#[test]
fn csv_report_format_emits_a_step_table() {
    let dir = tempfile::tempdir().unwrap();
    let pool = write_pool_binary(dir.path());
    let out = gip(
        &[
            "select",
            "--embeddings",
            pool.to_str().unwrap(),
            "--self-compression",
            "--k",
            "2",
            "--format",
            "csv",
        ],
        &[],
    );
    assert!(out.status.success());
    let text = stdout_str(&out);
    let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data[0], "step,index,gain");
    assert_eq!(data.len(), 3, "two picks, one header: {text}");
    assert!(text.contains("# stop_reason = budget_reached"));
}

#[test]
fn missing_score_rows_error_unless_filled() {
    let dir = tempfile::tempdir().unwrap();
    let pool = write_pool_binary(dir.path());
    let partial = write_scores(dir.path(), "partial.csv", &[(0, 1.0), (2, 2.0), (5, 3.0)]);

    let strict = gip(
        &[
            "select",
            "--embeddings",
            pool.to_str().unwrap(),
            "--scores",
            partial.to_str().unwrap(),
            "--k",
            "2",
        ],
        &[],
    );
    assert_error(&strict, 1, "missing_item");

    let filled = gip(
        &[
            "select",
            "--embeddings",
            pool.to_str().unwrap(),
            "--scores",
            partial.to_str().unwrap(),
            "--fill-missing-scores",
            "--k",
            "2",
        ],
        &[],
    );
    assert!(filled.status.success(), "stderr: {}", stderr_str(&filled));
    let report = SelectionReport::from_json(&stdout_str(&filled)).unwrap();
    assert_eq!(report.missing_score_items, 3);
}

#[test]
fn one_changed_input_byte_changes_the_recorded_digest() {
    let dir = tempfile::tempdir().unwrap();
    let pool = write_pool_binary(dir.path());
    let scores = full_scores(dir.path());

    let run = || {
        let out = gip(
            &[
                "select",
                "--embeddings",
                pool.to_str().unwrap(),
                "--scores",
                scores.to_str().unwrap(),
                "--k",
                "2",
            ],
            &[],
        );
        assert!(out.status.success());
        SelectionReport::from_json(&stdout_str(&out)).unwrap()
    };
    let before = run();

    // Flip one digit in one score value.
    let mut text = std::fs::read_to_string(&scores).unwrap();
    text = text.replace("0,0.5", "0,0.6");
    io::atomic_write(&scores, text.as_bytes()).unwrap();
    let after = run();

    assert_eq!(before.inputs.embeddings_sha256, after.inputs.embeddings_sha256);
    assert_ne!(before.inputs.scores_sha256, after.inputs.scores_sha256);
}

#[test]
fn malformed_inputs_are_data_errors_with_stable_kinds() {
    let dir = tempfile::tempdir().unwrap();

    // Truncated binary payload.
    let truncated = dir.path().join("short.gipf");
    let mut bytes = io::encode_embeddings(&fixture_pool());
    bytes.truncate(bytes.len() - 9);
    io::atomic_write(&truncated, &bytes).unwrap();
    let out = gip(
        &["select", "--embeddings", truncated.to_str().unwrap(), "--self-compression", "--k", "2"],
        &[],
    );
    assert_error(&out, 1, "truncated_payload");

    // Ragged CSV grid.
    let ragged = dir.path().join("ragged.csv");
    io::atomic_write(&ragged, b"1.0,2.0\n3.0\n").unwrap();
    let out = gip(
        &["select", "--embeddings", ragged.to_str().unwrap(), "--self-compression", "--k", "1"],
        &[],
    );
    assert_error(&out, 1, "ragged_csv");

    // Blank cell in a CSV grid.
    let blank = dir.path().join("blank.csv");
    io::atomic_write(&blank, b"1.0,2.0\n3.0,\n").unwrap();
    let out = gip(
        &["select", "--embeddings", blank.to_str().unwrap(), "--self-compression", "--k", "1"],
        &[],
    );
    assert_error(&out, 1, "non_numeric_cell");

    // Missing file.
    let out = gip(
        &["select", "--embeddings", "no_such_file.gipf", "--self-compression", "--k", "1"],
        &[],
    );
    assert_error(&out, 1, "io");
}

#[test]
fn usage_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let pool = write_pool_binary(dir.path());
    let pool_arg = pool.to_str().unwrap();

    // Budget flags are mutually exclusive and required.
    let both = gip(
        &[
            "select", "--embeddings", pool_arg, "--self-compression", "--k", "2", "--fraction",
            "0.5",
        ],
        &[],
    );
    assert_eq!(both.status.code(), Some(2));

    let neither = gip(&["select", "--embeddings", pool_arg, "--self-compression"], &[]);
    assert_eq!(neither.status.code(), Some(2));

    // A fraction outside (0, 1].
    let bad_fraction = gip(
        &["select", "--embeddings", pool_arg, "--self-compression", "--fraction", "1.5"],
        &[],
    );
    assert_eq!(bad_fraction.status.code(), Some(2));

    // Invalid thread cap.
    let bad_threads = gip(
        &["select", "--embeddings", pool_arg, "--self-compression", "--k", "2"],
        &[("GIP_THREADS", "many")],
    );
    assert_error(&bad_threads, 2, "usage");

    // A valid thread cap is accepted (the kernels are single-threaded).
    let good_threads = gip(
        &["select", "--embeddings", pool_arg, "--self-compression", "--k", "2"],
        &[("GIP_THREADS", "4")],
    );
    assert!(good_threads.status.success());
}

#[test]
fn aggregate_feeds_select_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let pool = write_pool_binary(dir.path());
    let attrs = dir.path().join("attrs.csv");
    io::atomic_write(
        &attrs,
        b"item_id,coherence,accuracy,helpfulness,difficulty\n0,3,4,5,2\n2,1,0,2,5\n4,5,5,5,5\n",
    )
    .unwrap();
    let totals = dir.path().join("totals.csv");

    let agg = gip(
        &[
            "aggregate",
            "--attributes",
            attrs.to_str().unwrap(),
            "--m",
            "6",
            "--out",
            totals.to_str().unwrap(),
        ],
        &[],
    );
    assert!(agg.status.success(), "stderr: {}", stderr_str(&agg));
    let warning: serde_json::Value =
        serde_json::from_str(stderr_str(&agg).lines().next().unwrap()).unwrap();
    assert_eq!(warning["warning"]["kind"], "missing_attribute_records");
    assert_eq!(warning["warning"]["count"], 3);

    let table = std::fs::read_to_string(&totals).unwrap();
    assert_eq!(table, "item_id,total\n0,14\n1,0\n2,8\n3,0\n4,20\n5,0\n");

    let sel = gip(
        &[
            "select",
            "--embeddings",
            pool.to_str().unwrap(),
            "--scores",
            totals.to_str().unwrap(),
            "--k",
            "2",
        ],
        &[],
    );
    assert!(sel.status.success(), "stderr: {}", stderr_str(&sel));
    let report = SelectionReport::from_json(&stdout_str(&sel)).unwrap();
    assert_eq!(report.selected.len(), 2);
}

#[test]
fn aggregate_rejects_out_of_range_rubric_values() {
    let dir = tempfile::tempdir().unwrap();
    let attrs = dir.path().join("bad_attrs.csv");
    io::atomic_write(
        &attrs,
        b"item_id,coherence,accuracy,helpfulness,difficulty\n0,3,9,5,2\n",
    )
    .unwrap();
    let out = gip(&["aggregate", "--attributes", attrs.to_str().unwrap(), "--m", "2"], &[]);
    assert_error(&out, 1, "score_out_of_range");
}

#[test]
fn fidelity_experiment_emits_exact_final_row() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("fidelity.csv");
    let out = gip(
        &[
            "experiment", "fidelity", "--d", "6", "--m", "5", "--trials", "4", "--seed", "3",
            "--out",
            out_path.to_str().unwrap(),
        ],
        &[],
    );
    assert!(out.status.success(), "stderr: {}", stderr_str(&out));
    let text = std::fs::read_to_string(&out_path).unwrap();
    assert!(text.contains("# seed = 3"));
    let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data.len(), 6, "header plus one row per budget: {text}");
    // The full-pool budget row is exactly 1 with zero spread for both
    // strategies (all subsets coincide there).
    assert_eq!(data[5], "5,1,0,1,0,4");
}

#[test]
fn stability_experiment_is_exact_at_zero_noise() {
    let out = gip(
        &[
            "experiment",
            "stability",
            "--synthetic",
            "--synthetic-d",
            "8",
            "--synthetic-m",
            "40",
            "--budgets",
            "4,8",
            "--sigmas",
            "0,0.001",
            "--trials",
            "2",
            "--seed",
            "5",
        ],
        &[],
    );
    assert!(out.status.success(), "stderr: {}", stderr_str(&out));
    let text = stdout_str(&out);
    let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data.len(), 5, "header plus sigmas × budgets rows: {text}");
    assert!(data[1].starts_with("0,4,1,0,"), "zero noise keeps the selection: {}", data[1]);
    assert!(data[2].starts_with("0,8,1,0,"), "zero noise keeps the selection: {}", data[2]);
}

#[test]
fn bench_experiment_reports_the_grid() {
    let out = gip(
        &[
            "experiment", "bench", "--m-grid", "60,120", "--k-grid", "6", "--d", "8", "--n",
            "2", "--seed", "1",
        ],
        &[],
    );
    assert!(out.status.success(), "stderr: {}", stderr_str(&out));
    let text = stdout_str(&out);
    let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data.len(), 3, "header plus one row per (m, k) cell: {text}");
    assert!(data[1].starts_with("60,6,"));
    assert!(data[2].starts_with("120,6,"));
}

#[test]
fn experiment_csv_goes_through_atomic_writes() {
    // The .tmp staging file must be gone and the content complete.
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("table.csv");
    let out = gip(
        &[
            "experiment", "fidelity", "--d", "4", "--m", "3", "--trials", "2", "--out",
            out_path.to_str().unwrap(),
        ],
        &[],
    );
    assert!(out.status.success());
    assert!(out_path.exists());
    let mut tmp = out_path.as_os_str().to_owned();
    tmp.push(".tmp");
    assert!(!PathBuf::from(tmp).exists());
    let text = std::fs::read_to_string(&out_path).unwrap();
    assert!(text.ends_with('\n'));
}
