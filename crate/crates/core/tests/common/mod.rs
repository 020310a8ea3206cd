//! Reference computations that avoid the library's fast paths.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::PI;

/// `F[t, w] = exp(-2πi·t·w/n)` by direct evaluation.
pub fn dft_matrix(n: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(n, n, |t, w| Complex64::from_polar(1.0, -2.0 * PI * ((t * w) % n) as f64 / n as f64))
}

/// `n^{-1/2} F* diag(F σ) F`, complex, with no structure assumed.
pub fn explicit_h(taps: &[f64]) -> DMatrix<Complex64> {
    let n = taps.len();
    let f = dft_matrix(n);
    let sigma = &f * DVector::from_iterator(n, taps.iter().map(|&t| Complex64::new(t, 0.0)));
    let diag = DMatrix::from_diagonal(&sigma);
    (f.adjoint() * diag * f).map(|z| z / (n as f64).sqrt())
}

/// Rows `kept` of `[H; √n I]` built from the explicit product.
pub fn explicit_composite_rows(taps: &[f64], kept: &[usize]) -> DMatrix<f64> {
    let n = taps.len();
    let h = explicit_h(taps).map(|z| z.re);
    DMatrix::from_fn(kept.len(), n, |r, j| {
        let i = kept[r];
        if i < n {
            h[(i, j)]
        } else if i - n == j {
            (n as f64).sqrt()
        } else {
            0.0
        }
    })
}

pub fn l1(x: &[f64]) -> f64 {
    x.iter().map(|v| v.abs()).sum()
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    match k {
        0 => vec![vec![]],
        _ => (0..n)
            .flat_map(|last| {
                subsets(last, k - 1).into_iter().map(move |mut s| {
                    s.push(last);
                    s
                })
            })
            .collect(),
    }
}

pub struct SparseOptimum {
    pub solution: Vec<f64>,
    pub l1: f64,
    /// No other feasible vector of the searched sparsity ties the ℓ1 value.
    pub unique: bool,
}

/// Minimum-ℓ1 feasible point among all vectors supported on at most
/// `max_support` indices, by least squares on every support.
pub fn exhaustive_sparse_l1(a: &DMatrix<f64>, y: &[f64], max_support: usize) -> Option<SparseOptimum> {
    let n = a.ncols();
    let yv = DVector::from_column_slice(y);
    let tol = 1e-9 * yv.norm().max(1.0);
    let mut feasible: Vec<(f64, Vec<f64>)> = Vec::new();
    for k in 1..=max_support {
        for support in subsets(n, k) {
            let sub = a.select_columns(&support);
            let Some(coef) = sub.clone().svd(true, true).solve(&yv, 1e-12).ok() else {
                continue;
            };
            if (&sub * &coef - &yv).norm() > tol {
                continue;
            }
            let mut x = vec![0.0; n];
            for (i, &s) in support.iter().enumerate() {
                x[s] = coef[i];
            }
            feasible.push((l1(&x), x));
        }
    }
    let (best_l1, best) = feasible.iter().min_by(|a, b| a.0.total_cmp(&b.0))?.clone();
    let unique = feasible.iter().all(|(v, x)| {
        let same = x.iter().zip(&best).all(|(p, q)| (p - q).abs() <= 1e-9);
        same || *v > best_l1 + 1e-9 * (1.0 + best_l1)
    });
    Some(SparseOptimum {
        solution: best,
        l1: best_l1,
        unique,
    })
}
