//! Reference computations that share no code with the library.

#![allow(dead_code)]

use bpdyn_core::linalg::Matrix;
use proptest::prelude::*;

/// Gaussian elimination with partial pivoting on a dense square system.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// `L = A·diag(w)·Aᵀ` as nested rows.
pub fn laplacian(a: &Matrix, w: &[f64]) -> Vec<Vec<f64>> {
    let m = a.rows();
    (0..m)
        .map(|r| {
            (0..m)
                .map(|c| (0..a.cols()).map(|i| a.get(r, i) * w[i] * a.get(c, i)).sum())
                .collect()
        })
        .collect()
}

/// `q = W·Aᵀ·L⁻¹·b` for strictly positive `w`.
pub fn reference_minimizer(a: &Matrix, b: &[f64], w: &[f64]) -> Vec<f64> {
    let z = solve_dense(laplacian(a, w), b.to_vec());
    (0..a.cols())
        .map(|i| w[i] * (0..a.rows()).map(|r| a.get(r, i) * z[r]).sum::<f64>())
        .collect()
}

pub fn l1(x: &[f64]) -> f64 {
    x.iter().map(|v| v.abs()).sum()
}

pub fn residual(a: &Matrix, x: &[f64], b: &[f64]) -> f64 {
    a.mul_vec(x)
        .iter()
        .zip(b)
        .fold(0.0f64, |acc, (l, r)| acc.max((l - r).abs()))
}

/// Full-row-rank dense matrices with `m < n`, entries in `[-3, 3]`.
pub fn full_rank_matrix(max_m: usize, max_n: usize) -> impl Strategy<Value = Matrix> {
    (1..=max_m)
        .prop_flat_map(move |m| (Just(m), (m + 1)..=max_n))
        .prop_flat_map(|(m, n)| {
            proptest::collection::vec(-3.0f64..3.0, m * n)
                .prop_map(move |data| Matrix::new(m, n, data).unwrap())
        })
        .prop_filter("full row rank", |a| a.rank() == a.rows())
}

pub fn positive_weights(n: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(0.05f64..5.0, n)
}
