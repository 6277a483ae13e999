use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Dense row-major matrix of `f64`.
///
/// This is deliberately minimal: the recurrent networks and baselines only
/// need products, transposed products and elementwise access, and keeping the
/// kernels in-crate pins the floating-point summation order so results are
/// reproducible bit-for-bit across runs and machines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix", into = "RawMatrix")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

/// Serde proxy so deserialized matrices pass through [`Matrix::new`]
/// validation instead of arriving with inconsistent dimensions.
#[derive(Clone, Serialize, Deserialize)]
struct RawMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl From<Matrix> for RawMatrix {
    fn from(m: Matrix) -> Self {
        RawMatrix {
            rows: m.rows,
            cols: m.cols,
            values: m.values,
        }
    }
}

impl TryFrom<RawMatrix> for Matrix {
    type Error = Error;

    fn try_from(r: RawMatrix) -> Result<Self> {
        Matrix::new(r.rows, r.cols, r.values)
    }
}

/// Dot product with four fixed-stride accumulators.
///
/// The accumulation order is a deterministic function of the slice length, so
/// repeated runs produce identical bits while still pipelining well on a
/// single core.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let chunks = a.len() / 4;
    let (mut s0, mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..chunks {
        let k = i * 4;
        s0 += a[k] * b[k];
        s1 += a[k + 1] * b[k + 1];
        s2 += a[k + 2] * b[k + 2];
        s3 += a[k + 3] * b[k + 3];
    }
    let mut tail = 0.0;
    for k in chunks * 4..a.len() {
        tail += a[k] * b[k];
    }
    (s0 + s1) + (s2 + s3) + tail
}

/// `y += alpha * x`, elementwise.
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

impl Matrix {
    /// Build a matrix from row-major values, validating length and finiteness.
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::shape(
                "Matrix::new",
                format!("{}x{} needs {} values, got {}", rows, cols, rows * cols, values.len()),
            ));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("matrix entry {v}")));
        }
        Ok(Matrix { rows, cols, values })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.values[i * n + i] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        debug_assert!(r < self.rows && c < self.cols);
        self.values[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        debug_assert!(r < self.rows && c < self.cols);
        self.values[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.values[r * self.cols..(r + 1) * self.cols]
    }

    /// Standard matrix product with deterministic summation order.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::shape(
                "matmul",
                format!(
                    "{}x{} * {}x{}: inner dimensions differ",
                    self.rows, self.cols, other.rows, other.cols
                ),
            ));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let a_row = self.row(i);
            let out_row = out.row_mut(i);
            for (k, &aik) in a_row.iter().enumerate() {
                axpy(aik, other.row(k), out_row);
            }
        }
        Ok(out)
    }

    /// `out = self * x` for a column vector `x`; panics on dimension mismatch.
    ///
    /// Hot path of the recurrent cells; callers validate shapes up front.
    #[inline]
    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.cols, "matvec: x length != cols");
        assert_eq!(out.len(), self.rows, "matvec: out length != rows");
        for i in 0..self.rows {
            out[i] = dot(self.row(i), x);
        }
    }

    /// `out += self * x`.
    #[inline]
    pub fn matvec_add(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.cols, "matvec_add: x length != cols");
        assert_eq!(out.len(), self.rows, "matvec_add: out length != rows");
        for i in 0..self.rows {
            out[i] += dot(self.row(i), x);
        }
    }

    /// `out += self^T * x`, accumulated row by row so access stays sequential.
    #[inline]
    pub fn matvec_t_add(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.rows, "matvec_t_add: x length != rows");
        assert_eq!(out.len(), self.cols, "matvec_t_add: out length != cols");
        for i in 0..self.rows {
            axpy(x[i], self.row(i), out);
        }
    }

    /// Rank-one update `self += a * b^T`.
    #[inline]
    pub fn add_outer(&mut self, a: &[f64], b: &[f64]) {
        assert_eq!(a.len(), self.rows, "add_outer: a length != rows");
        assert_eq!(b.len(), self.cols, "add_outer: b length != cols");
        for i in 0..self.rows {
            let row = &mut self.values[i * self.cols..(i + 1) * self.cols];
            axpy(a[i], b, row);
        }
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.values[j * self.rows + i] = self.values[i * self.cols + j];
            }
        }
        out
    }

    pub fn frobenius_distance(&self, other: &Matrix) -> f64 {
        debug_assert_eq!(self.rows, other.rows);
        debug_assert_eq!(self.cols, other.cols);
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Lower-triangular Cholesky factor L with L L^T = self.
    ///
    /// Fails on non-square or asymmetric input, and on any non-positive
    /// pivot, which doubles as the positive-definiteness check.
    pub fn cholesky(&self) -> Result<Matrix> {
        if self.rows != self.cols {
            return Err(Error::shape(
                "cholesky",
                format!("{}x{} is not square", self.rows, self.cols),
            ));
        }
        let n = self.rows;
        for i in 0..n {
            for j in 0..i {
                if (self.get(i, j) - self.get(j, i)).abs() > 1e-12 {
                    return Err(Error::shape(
                        "cholesky",
                        format!("asymmetric at ({i}, {j})"),
                    ));
                }
            }
        }
        let mut l = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let partial = dot(&l.row(i)[..j], &l.row(j)[..j]);
                let rem = self.get(i, j) - partial;
                if i == j {
                    if rem <= 0.0 {
                        return Err(Error::Degeneracy(format!(
                            "non-positive pivot {rem} at {i}"
                        )));
                    }
                    l.set(i, j, rem.sqrt());
                } else {
                    l.set(i, j, rem / l.get(j, j));
                }
            }
        }
        Ok(l)
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{:.6}", self.get(i, j))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
