#![allow(dead_code)]

use adasub::regression::{Dataset, Matrix};
use adasub::sim::{simulate, CorrelationSpec, SimConfig, SparsityChoice};
use adasub::ModelSubset;

/// Simulated training set with `s0` active covariates.
pub fn dataset(n: usize, p: usize, s0: usize, corr: CorrelationSpec, seed: u64) -> Dataset<f64> {
    let mut cfg = SimConfig::new(n, p, corr, seed);
    cfg.s0 = SparsityChoice::Fixed(s0);
    cfg.test_n = 0;
    simulate(&cfg).unwrap().train
}

/// Solves `A b = c` by Gaussian elimination with partial pivoting; `None` if singular.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut c: Vec<f64>) -> Option<Vec<f64>> {
    let m = c.len();
    for k in 0..m {
        let piv = (k..m).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))?;
        if a[piv][k].abs() < 1e-12 {
            return None;
        }
        a.swap(k, piv);
        c.swap(k, piv);
        for i in k + 1..m {
            let f = a[i][k] / a[k][k];
            for j in k..m {
                a[i][j] -= f * a[k][j];
            }
            c[i] -= f * c[k];
        }
    }
    let mut b = vec![0.0; m];
    for k in (0..m).rev() {
        let s: f64 = (k + 1..m).map(|j| a[k][j] * b[j]).sum();
        b[k] = (c[k] - s) / a[k][k];
    }
    Some(b)
}

/// Least squares with intercept from the raw normal equations.
/// Returns `(intercept, coefficients, rss)`.
pub fn normal_equations(x: &Matrix<f64>, y: &[f64], s: &[usize]) -> Option<(f64, Vec<f64>, f64)> {
    let n = y.len();
    let cols: Vec<Vec<f64>> = std::iter::once(vec![1.0; n])
        .chain(s.iter().map(|&j| x.col(j).to_vec()))
        .collect();
    let m = cols.len();
    let a: Vec<Vec<f64>> = (0..m)
        .map(|i| (0..m).map(|j| cols[i].iter().zip(&cols[j]).map(|(u, v)| u * v).sum()).collect())
        .collect();
    let c: Vec<f64> = cols.iter().map(|col| col.iter().zip(y).map(|(u, v)| u * v).sum()).collect();
    let b = solve_dense(a, c)?;
    let rss = (0..n)
        .map(|i| {
            let fit: f64 = (0..m).map(|k| b[k] * cols[k][i]).sum();
            (y[i] - fit).powi(2)
        })
        .sum();
    Some((b[0], b[1..].to_vec(), rss))
}

/// Every subset of `0..p` as a bit mask.
pub fn mask_subset(mask: u32, p: usize) -> Vec<usize> {
    (0..p).filter(|&j| mask >> j & 1 == 1).collect()
}

pub fn subset(v: &[usize]) -> ModelSubset {
    ModelSubset::from_unsorted(v.to_vec())
}
