//! Dense exact matrices and the largest singular value by power iteration.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{DyadicError, Result};
use crate::scalar::Scalar;

/// Row-major dense matrix over the scalar ring.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScalarMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Scalar>,
}

impl ScalarMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ScalarMatrix { rows, cols, data: vec![Scalar::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = ScalarMatrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Scalar::one();
        }
        m
    }

    pub fn get(&self, i: usize, j: usize) -> &Scalar {
        &self.data[i * self.cols + j]
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| {
                (0..self.cols).all(|j| {
                    let v = self.get(i, j);
                    if i == j {
                        *v == Scalar::one()
                    } else {
                        v.is_zero()
                    }
                })
            })
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.data.iter().map(Scalar::to_f64).collect()
    }

    pub fn scale(&self, c: &Scalar) -> ScalarMatrix {
        ScalarMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v * c).collect() }
    }
}

/// Build a matrix column by column; columns are computed in parallel.
pub fn assemble<F>(rows: usize, cols: usize, cap: usize, column: F) -> Result<ScalarMatrix>
where
    F: Fn(usize) -> Vec<Scalar> + Sync,
{
    if rows.max(cols) > cap {
        return Err(DyadicError::CapExceeded { what: "matrix dimension", size: rows.max(cols), cap });
    }
    let columns: Vec<Vec<Scalar>> = (0..cols).into_par_iter().map(&column).collect();
    let mut m = ScalarMatrix::zeros(rows, cols);
    for (j, col) in columns.into_iter().enumerate() {
        debug_assert_eq!(col.len(), rows);
        for (i, v) in col.into_iter().enumerate() {
            m.data[i * cols + j] = v;
        }
    }
    Ok(m)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerIteration {
    /// Stop once `‖AᵀA v − λ v‖ ≤ rel_tol · λ`.
    pub rel_tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for PowerIteration {
    fn default() -> Self {
        PowerIteration { rel_tol: 1e-10, max_iter: 10_000, seed: 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingularValue {
    pub value: f64,
    pub iterations: usize,
}

fn mat_vec(a: &[f64], rows: usize, cols: usize, v: &[f64]) -> Vec<f64> {
    (0..rows).map(|i| a[i * cols..(i + 1) * cols].iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

fn mat_t_vec(a: &[f64], rows: usize, cols: usize, u: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; cols];
    for i in 0..rows {
        let ui = u[i];
        if ui != 0.0 {
            for (o, x) in out.iter_mut().zip(&a[i * cols..(i + 1) * cols]) {
                *o += x * ui;
            }
        }
    }
    out
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Largest singular value of the row-major `rows × cols` matrix `a`.
pub fn largest_singular_value(a: &[f64], rows: usize, cols: usize, opts: PowerIteration) -> Result<SingularValue> {
    assert_eq!(a.len(), rows * cols);
    if cols == 0 || rows == 0 || a.iter().all(|&x| x == 0.0) {
        return Ok(SingularValue { value: 0.0, iterations: 0 });
    }
    let mut rng = crate::random::rng(opts.seed);
    let mut v: Vec<f64> = (0..cols).map(|_| rng.random_range(-1.0..1.0)).collect();
    let n = norm(&v);
    v.iter_mut().for_each(|x| *x /= n);
    let mut lambda = 0.0;
    for it in 1..=opts.max_iter {
        let w = mat_t_vec(a, rows, cols, &mat_vec(a, rows, cols, &v));
        lambda = v.iter().zip(&w).map(|(x, y)| x * y).sum::<f64>();
        let residual = norm(&w.iter().zip(&v).map(|(y, x)| y - lambda * x).collect::<Vec<_>>());
        let wn = norm(&w);
        if wn == 0.0 {
            // start vector in the kernel; the matrix is nonzero so retry is pointless here
            return Ok(SingularValue { value: 0.0, iterations: it });
        }
        if residual <= opts.rel_tol * lambda {
            return Ok(SingularValue { value: lambda.max(0.0).sqrt(), iterations: it });
        }
        v = w.into_iter().map(|x| x / wn).collect();
    }
    Err(DyadicError::NoConvergence { iterations: opts.max_iter, estimate: lambda.max(0.0).sqrt() })
}
