//! Shared helpers for the integration suites: an independent dense solver
//! for the steady state and random policy generation.
//!
//! Each test target uses a subset of these.
#![allow(dead_code)]
#![allow(clippy::needless_range_loop)] // index form mirrors the matrix algebra

use losstol::{OutagePolicy, TransitionMatrix};
use rand::Rng;

/// Solve pi * A = pi, sum(pi) = 1 by Gaussian elimination on the transposed
/// balance equations with the last equation replaced by normalization.
/// Deliberately generic (no use of the chain's sparsity), so it checks the
/// product-form solution from the outside.
pub fn dense_steady_state(matrix: &TransitionMatrix) -> Vec<f64> {
    let n = matrix.n_states();
    // rows: (A^T - I) pi = 0 for the first n-1 equations, then sum = 1
    let mut a = vec![vec![0.0f64; n + 1]; n];
    for j in 0..n - 1 {
        for i in 0..n {
            a[j][i] = matrix.entry(i, j) - if i == j { 1.0 } else { 0.0 };
        }
    }
    for i in 0..n {
        a[n - 1][i] = 1.0;
    }
    a[n - 1][n] = 1.0;

    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r1, &r2| a[r1][col].abs().partial_cmp(&a[r2][col].abs()).unwrap())
            .unwrap();
        a.swap(col, pivot);
        assert!(a[col][col].abs() > 1e-14, "singular system");
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = a[row][col] / a[col][col];
            for k in col..=n {
                a[row][k] -= factor * a[col][k];
            }
        }
    }
    (0..n).map(|i| a[i][n] / a[i][i]).collect()
}

/// Random valid policy with the given burst tolerance N: non-increasing
/// entries strictly inside (0,1).
pub fn random_policy(n: usize, rng: &mut impl Rng) -> OutagePolicy {
    let mut eps: Vec<f64> = (0..=n).map(|_| rng.gen_range(1e-4..1.0 - 1e-4)).collect();
    eps.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap());
    OutagePolicy::new(eps).unwrap()
}
