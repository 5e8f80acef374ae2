//! Score constructions checked against their defining formulas: the
//! regularized query recovery against the pool-space normal equations, the
//! fit residual against direct recomputation, and self-compression scores
//! against naive row sums.

mod common;

use common::{max_abs_diff, naive_gram, normal_matrix, uniform_matrix};
use gip_core::{
    gram, normalize_columns, regularized_query, self_compression_scores, sigma_extremes,
    spd_solve, Matrix, ScoreMatrix, DEFAULT_GRAM_BLOCK,
};

/// The definitional pool-space form `Q = F·(FᵀF + εI_m)⁻¹·G`, solved as an
/// m×m system. The implementation uses the equivalent d×d form; the two must
/// agree entrywise.
fn pool_space_query(f: &Matrix, g: &Matrix, epsilon: f64) -> Matrix {
    let m = f.cols();
    let mut a = naive_gram(f);
    for i in 0..m {
        a.set(i, i, a.at(i, i) + epsilon);
    }
    let x = spd_solve(&a, g).unwrap();
    f.mat_mul(&x).unwrap()
}

#[test]
fn regularized_query_matches_pool_space_form() {
    // Both a wide pool (m > d) and a tall one (m < d).
    for (seed, d, m, n) in [(50u64, 4usize, 9usize, 2usize), (51, 7, 3, 1)] {
        let f = normalize_columns(&normal_matrix(seed, d, m)).unwrap();
        let g = normal_matrix(seed + 1, m, n);
        let gs = ScoreMatrix::new(g.clone(), (0..n).map(|i| format!("s{i}")).collect()).unwrap();
        for epsilon in [1e-6, 1e-3, 0.5] {
            let q = regularized_query(&f, &gs, epsilon).unwrap();
            let oracle = pool_space_query(f.matrix(), &g, epsilon);
            let diff = max_abs_diff(q.matrix(), &oracle);
            assert!(diff < 1e-9, "seed {seed}, eps {epsilon}: forms differ by {diff}");
        }
    }
}

#[test]
fn fit_residual_matches_direct_recomputation() {
    let f = normalize_columns(&normal_matrix(60, 5, 8)).unwrap();
    let g = normal_matrix(61, 8, 2);
    let gs = ScoreMatrix::new(g.clone(), vec!["a".into(), "b".into()]).unwrap();
    let q = regularized_query(&f, &gs, 1e-4).unwrap();
    let predicted = f.matrix().transpose_mul(q.matrix()).unwrap();
    let mut sq = 0.0;
    for (p, orig) in predicted.as_slice().iter().zip(g.as_slice()) {
        sq += (p - orig) * (p - orig);
    }
    let direct = sq.sqrt();
    assert!(
        (q.fit_residual() - direct).abs() < 1e-12,
        "residual {} vs direct {direct}",
        q.fit_residual()
    );
}

#[test]
fn realizable_scores_satisfy_epsilon_residual_bound() {
    // Consistent scores G = FᵀQ₀ on a pool whose nonzero singular values sit
    // above 1 (wide Gaussian pool, m = 4d): the recovery error is then
    // bounded by ε·‖Q‖_F.
    for seed in [70u64, 71, 72] {
        let (d, m, n) = (4usize, 16usize, 2usize);
        let f = normalize_columns(&normal_matrix(seed, d, m)).unwrap();
        let (sigma_min, _) = sigma_extremes(f.matrix()).unwrap();
        assert!(sigma_min >= 1.0, "fixture needs a well-spread pool, got sigma {sigma_min}");
        let q0 = uniform_matrix(seed + 7, d, n);
        let g = f.matrix().transpose_mul(&q0).unwrap();
        let gs = ScoreMatrix::new(g, vec!["a".into(), "b".into()]).unwrap();
        for epsilon in [1e-6, 1e-4, 1e-2] {
            let q = regularized_query(&f, &gs, epsilon).unwrap();
            let bound = epsilon * q.matrix().frobenius_norm();
            assert!(
                q.fit_residual() <= bound + 1e-12,
                "seed {seed}, eps {epsilon}: residual {} exceeds bound {bound}",
                q.fit_residual()
            );
        }
    }
}

#[test]
fn self_compression_scores_are_gram_row_sums() {
    let f = normalize_columns(&normal_matrix(80, 6, 11)).unwrap();
    let phi = gram(&f, DEFAULT_GRAM_BLOCK);
    let scores = self_compression_scores(&phi);
    assert_eq!(scores.m(), 11);
    assert_eq!(scores.n(), 1);
    for j in 0..11 {
        let mut row_sum = 0.0;
        for i in 0..11 {
            row_sum += phi.at(j, i);
        }
        assert!((scores.at(j, 0) - row_sum).abs() < 1e-12);
    }
}

#[test]
fn standardized_columns_have_unit_norm_and_report_skips() {
    let data = Matrix::from_vec(3, 2, vec![3.0, 0.0, 4.0, 0.0, 0.0, 0.0]).unwrap();
    let gs = ScoreMatrix::new(data, vec!["live".into(), "dead".into()]).unwrap();
    let (std, skipped) = gs.standardize_columns();
    assert_eq!(skipped, vec![1]);
    let mut norm = 0.0;
    for i in 0..3 {
        norm += std.at(i, 0) * std.at(i, 0);
    }
    assert!((norm - 1.0).abs() < 1e-12);
    // The all-zero column is carried through unchanged.
    for i in 0..3 {
        assert_eq!(std.at(i, 1), 0.0);
    }
}
