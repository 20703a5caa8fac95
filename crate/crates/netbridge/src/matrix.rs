//! Dense square matrices and nonnegative transition kernels.
//!
//! Everything here targets desk-scale problems (n up to a few hundred),
//! so storage is a flat row-major `Vec<f64>` with no sparsity machinery.

use crate::error::{Error, Result};

/// Dense n-by-n matrix, row major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut m = Matrix::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "row {i} has wrong length");
            m.data[i * n..(i + 1) * n].copy_from_slice(row);
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// y = M x
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| self.row(i).iter().zip(x).map(|(m, v)| m * v).sum())
            .collect()
    }

    /// y = M^T x
    pub fn tr_matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for (i, &xi) in x.iter().enumerate() {
            let row = self.row(i);
            if xi != 0.0 {
                for j in 0..self.n {
                    y[j] += row[j] * xi;
                }
            }
        }
        y
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a != 0.0 {
                    for j in 0..n {
                        out.data[i * n + j] += a * other.get(k, j);
                    }
                }
            }
        }
        out
    }

    pub fn max_entry(&self) -> f64 {
        self.data.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// 0/1 support pattern of the matrix.
    pub fn support(&self) -> BoolMatrix {
        let mut s = BoolMatrix::new(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                if self.get(i, j) > 0.0 {
                    s.set(i, j, true);
                }
            }
        }
        s
    }
}

/// Nonnegative kernel: a square matrix with all entries >= 0.
/// Rows need not sum to one (mass creation and killing are allowed).
#[derive(Debug, Clone, PartialEq)]
pub struct NonnegativeKernel(Matrix);

impl NonnegativeKernel {
    pub fn new(m: Matrix) -> Result<Self> {
        for i in 0..m.n() {
            for j in 0..m.n() {
                let v = m.get(i, j);
                if !(v >= 0.0) {
                    return Err(Error::Validation(format!(
                        "kernel entry ({},{}) = {} is negative or NaN",
                        i + 1,
                        j + 1,
                        v
                    )));
                }
            }
        }
        Ok(NonnegativeKernel(m))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.n()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0.get(i, j)
    }

    /// Recovered edge costs U_ij = -log m_ij; zero entries cost +inf.
    pub fn costs(&self) -> Matrix {
        let n = self.n();
        let mut u = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let m = self.get(i, j);
                u.set(i, j, if m > 0.0 { -m.ln() } else { f64::INFINITY });
            }
        }
        u
    }
}

/// Boolean square matrix for reachability and primitivity checks.
/// Support patterns are used instead of floating powers so that large
/// spectral radii cannot overflow.
#[derive(Debug, Clone, PartialEq)]
pub struct BoolMatrix {
    n: usize,
    data: Vec<bool>,
}

impl BoolMatrix {
    pub fn new(n: usize) -> Self {
        BoolMatrix {
            n,
            data: vec![false; n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        self.data[i * self.n + j] = v;
    }

    pub fn all_true(&self) -> bool {
        self.data.iter().all(|&b| b)
    }

    pub fn matmul(&self, other: &BoolMatrix) -> BoolMatrix {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = BoolMatrix::new(n);
        for i in 0..n {
            for k in 0..n {
                if self.get(i, k) {
                    for j in 0..n {
                        if other.get(k, j) {
                            out.set(i, j, true);
                        }
                    }
                }
            }
        }
        out
    }

    /// self^k by repeated multiplication (k >= 1).
    pub fn power(&self, k: usize) -> BoolMatrix {
        assert!(k >= 1);
        let mut acc = self.clone();
        for _ in 1..k {
            acc = acc.matmul(self);
        }
        acc
    }
}

/// Probability or nonnegative weight vector over the n states.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution(Vec<f64>);

impl Distribution {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        for (i, &w) in weights.iter().enumerate() {
            if !(w >= 0.0) {
                return Err(Error::Validation(format!(
                    "weight {} at state {} is negative or NaN",
                    w,
                    i + 1
                )));
            }
        }
        Ok(Distribution(weights))
    }

    /// Probability marginal: entries must sum to 1 within 1e-12.
    pub fn probability(weights: Vec<f64>) -> Result<Self> {
        let d = Distribution::new(weights)?;
        let s: f64 = d.0.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::Validation(format!(
                "marginal sums to {s}, expected 1"
            )));
        }
        Ok(d)
    }

    /// Kronecker delta at 1-based `node`.
    pub fn delta(n: usize, node: usize) -> Result<Self> {
        if node == 0 || node > n {
            return Err(Error::Validation(format!(
                "node {node} out of range 1..{n}"
            )));
        }
        let mut w = vec![0.0; n];
        w[node - 1] = 1.0;
        Ok(Distribution(w))
    }

    pub fn uniform(n: usize) -> Self {
        Distribution(vec![1.0 / n as f64; n])
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn support(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(i, _)| i)
            .collect()
    }
}
