//! Small dense row-major matrices.
//!
//! Everything here is sized for link-level work (a handful of LEDs and
//! photodiodes, networks with a few hundred units per layer), so the kernels
//! are plain loops ordered for contiguous access rather than blocked BLAS.

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn diagonal(values: &[T]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Builds a matrix from a row-major buffer.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "matrix buffer",
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    context: "matrix row",
                    expected: cols,
                    actual: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        let cols = self.cols;
        &mut self.data[r * cols..(r + 1) * cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[T]> {
        // chunks_exact panics on a zero chunk size
        self.data.chunks_exact(self.cols.max(1)).take(self.rows)
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }

    /// `self · rhs`.
    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch {
                context: "matmul inner dimension",
                expected: self.cols,
                actual: rhs.rows,
            });
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        matmul_into(self, rhs, &mut out);
        Ok(out)
    }

    /// `self · v`.
    pub fn matvec(&self, v: &[T]) -> Result<Vec<T>> {
        if self.cols != v.len() {
            return Err(Error::DimensionMismatch {
                context: "matvec",
                expected: self.cols,
                actual: v.len(),
            });
        }
        Ok(self.row_iter().map(|row| dot(row, v)).collect())
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn scale(&self, k: T) -> Self {
        self.map(|x| x * k)
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!(self.shape(), other.shape());
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }

    /// Converts every entry to another scalar type.
    pub fn cast<U: Scalar>(&self) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| U::of(x.as_f64())).collect(),
        }
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &T {
        &self.data[r * self.cols + c]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut T {
        &mut self.data[r * self.cols + c]
    }
}

#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// `out = a · b` with shapes already checked. The inner loop is an axpy over
/// contiguous rows of `b` and `out`, which the compiler vectorizes.
pub(crate) fn matmul_into<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>, out: &mut Matrix<T>) {
    debug_assert_eq!(a.cols, b.rows);
    debug_assert_eq!(out.shape(), (a.rows, b.cols));
    out.data.iter_mut().for_each(|x| *x = T::zero());
    let n = b.cols;
    for i in 0..a.rows {
        let out_row = &mut out.data[i * n..(i + 1) * n];
        for (k, &aik) in a.row(i).iter().enumerate() {
            if aik == T::zero() {
                continue;
            }
            let b_row = &b.data[k * n..(k + 1) * n];
            for (o, &bkj) in out_row.iter_mut().zip(b_row) {
                *o += aik * bkj;
            }
        }
    }
}

/// Thin singular value decomposition `A = U · diag(s) · Vᵀ` of an `m × n`
/// matrix with `m ≥ n`.
#[derive(Debug, Clone)]
pub struct Svd<T> {
    pub u: Matrix<T>,
    pub singular_values: Vec<T>,
    pub v: Matrix<T>,
}

const MAX_JACOBI_SWEEPS: usize = 60;

/// One-sided (Hestenes) Jacobi SVD. Accurate to high relative precision for
/// the small singular values, which matters for the condition check on
/// strongly correlated optical channels.
pub fn svd<T: Scalar>(a: &Matrix<T>) -> Result<Svd<T>> {
    let (m, n) = a.shape();
    if m < n {
        return Err(Error::DimensionMismatch {
            context: "svd requires rows >= cols",
            expected: n,
            actual: m,
        });
    }
    // columns of `work` converge to U·diag(s)
    let mut work = a.transpose();
    let mut v = Matrix::<T>::identity(n);
    let tol = T::epsilon();

    for _ in 0..MAX_JACOBI_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (alpha, beta, gamma) = {
                    let cp = work.row(p);
                    let cq = work.row(q);
                    (dot(cp, cp), dot(cq, cq), dot(cp, cq))
                };
                if gamma == T::zero() || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (gamma + gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                rotate_rows(&mut work, p, q, c, s);
                rotate_rows(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let singular_values: Vec<T> = (0..n).map(|j| dot(work.row(j), work.row(j)).sqrt()).collect();
    let mut u = Matrix::zeros(m, n);
    for (j, &sigma) in singular_values.iter().enumerate() {
        if sigma > T::zero() {
            for i in 0..m {
                u[(i, j)] = work[(j, i)] / sigma;
            }
        }
    }
    // `v` was accumulated with rotations applied to its rows
    Ok(Svd {
        u,
        singular_values,
        v: v.transpose(),
    })
}

fn rotate_rows<T: Scalar>(m: &mut Matrix<T>, p: usize, q: usize, c: T, s: T) {
    let cols = m.cols;
    for k in 0..cols {
        let xp = m.data[p * cols + k];
        let xq = m.data[q * cols + k];
        m.data[p * cols + k] = c * xp - s * xq;
        m.data[q * cols + k] = s * xp + c * xq;
    }
}

/// 2-norm condition number `σ_max / σ_min` (infinite when singular).
pub fn condition_number<T: Scalar>(a: &Matrix<T>) -> Result<T> {
    let s = if a.rows() >= a.cols() {
        svd(a)?
    } else {
        svd(&a.transpose())?
    };
    let max = s.singular_values.iter().fold(T::zero(), |m, &x| m.max(x));
    let min = s
        .singular_values
        .iter()
        .fold(T::infinity(), |m, &x| m.min(x));
    Ok(if min == T::zero() {
        T::infinity()
    } else {
        max / min
    })
}

/// Moore–Penrose pseudo-inverse `V · diag(1/s) · Uᵀ` of a full-column-rank
/// matrix. Rejects matrices whose condition number exceeds `max_condition`.
pub fn pinv<T: Scalar>(a: &Matrix<T>, max_condition: f64) -> Result<(Matrix<T>, f64)> {
    if a.rows() < a.cols() {
        let (p, cond) = pinv(&a.transpose(), max_condition)?;
        return Ok((p.transpose(), cond));
    }
    let Svd {
        u,
        singular_values,
        v,
    } = svd(a)?;
    let max = singular_values.iter().fold(T::zero(), |m, &x| m.max(x));
    let min = singular_values
        .iter()
        .fold(T::infinity(), |m, &x| m.min(x));
    let condition = if min > T::zero() {
        (max / min).as_f64()
    } else {
        f64::INFINITY
    };
    if condition.is_nan() || condition > max_condition {
        return Err(Error::RankDeficient {
            condition,
            limit: max_condition,
        });
    }
    let (m, n) = a.shape();
    let mut out = Matrix::zeros(n, m);
    for (j, &sigma) in singular_values.iter().enumerate() {
        let inv = T::one() / sigma;
        for r in 0..n {
            let vr = v[(r, j)] * inv;
            for c in 0..m {
                out[(r, c)] += vr * u[(c, j)];
            }
        }
    }
    Ok((out, condition))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix<f64> {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn matmul_small() {
        let a = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = m(&[&[5.0, 6.0], &[7.0, 8.0]]);
        assert_eq!(a.matmul(&b).unwrap(), m(&[&[19.0, 22.0], &[43.0, 50.0]]));
        assert!(a.matmul(&Matrix::zeros(3, 1)).is_err());
    }

    #[test]
    fn svd_reconstructs() {
        let a = m(&[&[3.0, 1.0, 0.5], &[1.0, 2.0, 0.0], &[0.0, 1.0, 4.0], &[2.0, 0.0, 1.0]]);
        let s = svd(&a).unwrap();
        let rebuilt = s
            .u
            .matmul(&Matrix::diagonal(&s.singular_values))
            .unwrap()
            .matmul(&s.v.transpose())
            .unwrap();
        assert!(rebuilt.max_abs_diff(&a) < 1e-12);
        let vtv = s.v.transpose().matmul(&s.v).unwrap();
        assert!(vtv.max_abs_diff(&Matrix::identity(3)) < 1e-12);
    }

    #[test]
    fn pinv_of_diagonal() {
        let (p, cond) = pinv(&Matrix::diagonal(&[2.0, 4.0]), 1e12).unwrap();
        assert!(p.max_abs_diff(&Matrix::diagonal(&[0.5, 0.25])) < 1e-15);
        assert!((cond - 2.0).abs() < 1e-12);
    }

    #[test]
    fn pinv_rejects_singular() {
        let a = m(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert!(matches!(pinv(&a, 1e12), Err(Error::RankDeficient { .. })));
        assert!(condition_number(&a).unwrap() > 1e12);
    }

    #[test]
    fn pinv_wide_matrix() {
        let a = m(&[&[1.0, 0.0, 1.0], &[0.0, 1.0, 1.0]]);
        let (p, _) = pinv(&a, 1e12).unwrap();
        let ap = a.matmul(&p).unwrap();
        assert!(ap.max_abs_diff(&Matrix::identity(2)) < 1e-12);
    }

    #[test]
    fn works_in_f32() {
        let a = Matrix::<f32>::from_rows(&[[4.0f32, 1.0], [1.0, 3.0]]).unwrap();
        let (p, _) = pinv(&a, 1e6).unwrap();
        assert!(p.matmul(&a).unwrap().max_abs_diff(&Matrix::identity(2)) < 1e-5);
    }
}
