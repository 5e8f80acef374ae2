//! Independent oracles shared by the integration tests.
//!
//! Everything here deliberately avoids the library's linear-algebra paths:
//! determinants come from cofactor expansion, inverses from the adjugate,
//! eigenvalues from sign changes of the characteristic polynomial, and
//! matching-pursuit residuals from the explicit embedding-space recursion.
//! Slow and simple, so the fast implementations have something honest to be
//! checked against.

#![allow(dead_code)]

use gip_core::{rng, EmbeddingMatrix, Matrix};

/// Determinant by cofactor expansion along the first row. Exponential in
/// `n`; callers keep `n ≤ 6`.
pub fn det_cofactor(a: &Matrix) -> f64 {
    let n = a.rows();
    assert_eq!(n, a.cols(), "determinant needs a square matrix");
    assert!(n <= 6, "cofactor expansion is for tiny matrices only");
    if n == 1 {
        return a.at(0, 0);
    }
    let mut det = 0.0;
    for j in 0..n {
        let minor = Matrix::from_fn(n - 1, n - 1, |r, c| {
            a.at(r + 1, if c < j { c } else { c + 1 })
        });
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        det += sign * a.at(0, j) * det_cofactor(&minor);
    }
    det
}

/// Inverse via the adjugate (cofactor transpose); `n ≤ 3` keeps it exact
/// enough to serve as an oracle.
pub fn adjugate_inverse(a: &Matrix) -> Matrix {
    let n = a.rows();
    assert!(n <= 3 && n == a.cols());
    let det = det_cofactor(a);
    assert!(det.abs() > 1e-300, "oracle inverse needs a nonsingular matrix");
    if n == 1 {
        return Matrix::from_vec(1, 1, vec![1.0 / det]).expect("finite reciprocal");
    }
    Matrix::from_fn(n, n, |i, j| {
        // Cofactor C[j][i] / det (note the transpose).
        let minor = Matrix::from_fn(n - 1, n - 1, |r, c| {
            a.at(if r < j { r } else { r + 1 }, if c < i { c } else { c + 1 })
        });
        let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
        sign * det_cofactor(&minor) / det
    })
}

/// `FᵀF` by the naive triple loop, accumulating over rows in index order —
/// the same summation order the blockwise product uses, so results should
/// agree bit for bit.
pub fn naive_gram(f: &Matrix) -> Matrix {
    let (d, m) = (f.rows(), f.cols());
    Matrix::from_fn(m, m, |i, j| {
        let mut acc = 0.0;
        for r in 0..d {
            acc += f.at(r, i) * f.at(r, j);
        }
        acc
    })
}

/// `Qᵀ(I − F_S(F_SᵀF_S)⁻¹F_Sᵀ)Q` with the inner inverse taken by adjugate;
/// `|S| ≤ 3`.
pub fn projected_residual_oracle(q: &Matrix, fs: &Matrix) -> Matrix {
    let k = fs.cols();
    assert!(k <= 3, "oracle projector is for k <= 3");
    let a = naive_gram(fs);
    let a_inv = adjugate_inverse(&a);
    let b = Matrix::from_fn(k, q.cols(), |r, c| {
        let mut acc = 0.0;
        for t in 0..fs.rows() {
            acc += fs.at(t, r) * q.at(t, c);
        }
        acc
    });
    let qtq = naive_gram(q);
    Matrix::from_fn(q.cols(), q.cols(), |i, j| {
        let mut captured = 0.0;
        for r in 0..k {
            for c in 0..k {
                captured += b.at(r, i) * a_inv.at(r, c) * b.at(c, j);
            }
        }
        qtq.at(i, j) - captured
    })
}

/// Eigenvalues of a small symmetric matrix by bisection on sign changes of
/// the characteristic polynomial `det(A − λI)`. Needs distinct, reasonably
/// separated eigenvalues; panics if it cannot isolate `n` of them.
pub fn charpoly_eigenvalues(a: &Matrix) -> Vec<f64> {
    let n = a.rows();
    assert!(n <= 5 && n == a.cols());
    let p = |lambda: f64| -> f64 {
        let shifted = Matrix::from_fn(n, n, |i, j| {
            a.at(i, j) - if i == j { lambda } else { 0.0 }
        });
        det_cofactor(&shifted)
    };
    // Gershgorin bound on the spectrum.
    let mut radius = 0.0f64;
    for i in 0..n {
        let mut row_sum = 0.0;
        for j in 0..n {
            row_sum += a.at(i, j).abs();
        }
        radius = radius.max(row_sum);
    }
    radius += 1.0;
    let steps = 20_000;
    let mut roots = Vec::with_capacity(n);
    let mut prev_x = -radius;
    let mut prev_p = p(prev_x);
    for s in 1..=steps {
        let x = -radius + 2.0 * radius * s as f64 / steps as f64;
        let px = p(x);
        if prev_p == 0.0 {
            roots.push(prev_x);
        } else if px != 0.0 && prev_p.signum() != px.signum() {
            // Bisect the bracketed sign change.
            let (mut lo, mut hi, mut plo) = (prev_x, x, prev_p);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let pm = p(mid);
                if pm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if plo.signum() != pm.signum() {
                    hi = mid;
                } else {
                    lo = mid;
                    plo = pm;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        prev_x = x;
        prev_p = px;
    }
    assert_eq!(
        roots.len(),
        n,
        "oracle could not isolate {n} distinct eigenvalues (use a better-separated fixture)"
    );
    roots
}

/// The explicit embedding-space matching-pursuit state: residual vectors
/// `rᵢ ∈ ℝ^d` recomputed by the textbook recursion
/// `rᵢ ← rᵢ − (rᵢᵀf_s)·f_s`, giving oracle residual scores `rᵢᵀfⱼ`.
pub struct EmbeddingResidualOracle {
    f: Matrix,
    /// One residual per score column, each of dimension `d`.
    residuals: Vec<Vec<f64>>,
}

impl EmbeddingResidualOracle {
    /// Starts with `rᵢ = qᵢ` against a (normalized) pool.
    pub fn new(f: &EmbeddingMatrix, q: &Matrix) -> Self {
        assert_eq!(f.d(), q.rows());
        let residuals = (0..q.cols()).map(|i| q.col(i)).collect();
        EmbeddingResidualOracle { f: f.matrix().clone(), residuals }
    }

    /// Applies one selection step to every residual.
    pub fn select(&mut self, s: usize) {
        let fs = self.f.col(s);
        for r in &mut self.residuals {
            let coef: f64 = r.iter().zip(&fs).map(|(a, b)| a * b).sum();
            for (rv, fv) in r.iter_mut().zip(&fs) {
                *rv -= coef * fv;
            }
        }
    }

    /// The oracle residual score `rᵢᵀfⱼ`.
    pub fn w_entry(&self, i: usize, j: usize) -> f64 {
        let mut acc = 0.0;
        for r in 0..self.f.rows() {
            acc += self.residuals[i][r] * self.f.at(r, j);
        }
        acc
    }
}

/// A seeded `d×m` matrix of i.i.d. standard normals.
pub fn normal_matrix(seed: u64, d: usize, m: usize) -> Matrix {
    let mut rng = rng::master(seed);
    let mut data = vec![0.0f64; d * m];
    rng::fill_standard_normal(&mut rng, &mut data);
    Matrix::from_vec(d, m, data).expect("generated entries are finite")
}

/// A seeded `d×m` matrix of i.i.d. uniforms in `[0, 1)`.
pub fn uniform_matrix(seed: u64, d: usize, m: usize) -> Matrix {
    let mut rng = rng::master(seed);
    let mut data = vec![0.0f64; d * m];
    rng::fill_uniform(&mut rng, &mut data);
    Matrix::from_vec(d, m, data).expect("generated entries are finite")
}

/// An exactly orthonormal `d×m` pool: unit coordinate columns placed by a
/// seeded permutation (so the Gram matrix is exactly the identity).
pub fn coordinate_pool(seed: u64, d: usize, m: usize) -> EmbeddingMatrix {
    assert!(m <= d);
    let mut rng = rng::master(seed);
    let mut axes: Vec<usize> = (0..d).collect();
    for t in 0..m {
        let j = t + rng::uniform_below(&mut rng, (d - t) as u64) as usize;
        axes.swap(t, j);
    }
    let mut data = vec![0.0f64; d * m];
    for (c, &axis) in axes.iter().take(m).enumerate() {
        data[axis * m + c] = 1.0;
    }
    let raw = Matrix::from_vec(d, m, data).expect("unit entries");
    gip_core::normalize_columns(&raw).expect("unit columns normalize exactly")
}

/// An orthonormal (to round-off) `d×m` pool from Gram–Schmidt on Gaussian
/// draws.
pub fn gram_schmidt_pool(seed: u64, d: usize, m: usize) -> EmbeddingMatrix {
    assert!(m <= d);
    let raw = normal_matrix(seed, d, m);
    let mut cols: Vec<Vec<f64>> = (0..m).map(|c| raw.col(c)).collect();
    for c in 0..m {
        for prev in 0..c {
            let coef: f64 = cols[c].iter().zip(&cols[prev]).map(|(a, b)| a * b).sum();
            let prev_col = cols[prev].clone();
            for (v, p) in cols[c].iter_mut().zip(&prev_col) {
                *v -= coef * p;
            }
        }
        let norm: f64 = cols[c].iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(norm > 1e-8, "Gaussian draws are almost surely independent");
        for v in &mut cols[c] {
            *v /= norm;
        }
    }
    let data = Matrix::from_fn(d, m, |r, c| cols[c][r]);
    gip_core::normalize_columns(&data).expect("orthonormalized columns are nonzero")
}

/// Max absolute entrywise difference.
pub fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    assert_eq!((a.rows(), a.cols()), (b.rows(), b.cols()));
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
