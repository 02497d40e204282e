//! Dense row-major matrices, a pivot-reporting Cholesky factorization and
//! thin wrappers over nalgebra's symmetric eigensolver.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Copy> DenseMatrix<T> {
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { T::one() } else { T::zero() })
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.cols, "vector length");
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// `v^T A v`.
    pub fn quad_form(&self, v: &[T]) -> T {
        dot(v, &self.mul_vec(v))
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    /// Largest `|a_ij - a_ji|` relative to the largest `|a_ij|`.
    pub fn asymmetry(&self) -> T {
        let mut worst = T::zero();
        let mut scale = T::zero();
        for i in 0..self.rows {
            for j in 0..self.cols {
                scale = scale.max(self.get(i, j).abs());
                if j < self.rows && i < self.cols {
                    worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
                }
            }
        }
        if scale > T::zero() {
            worst / scale
        } else {
            T::zero()
        }
    }

    pub fn scaled(&self, c: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| *v * c).collect(),
        }
    }
}

impl DenseMatrix<f64> {
    pub fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }
}

#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + *x * *y)
}

pub fn norm2<T: Scalar>(v: &[T]) -> T {
    dot(v, v).sqrt()
}

/// Lower-triangular Cholesky factor `L` with `A = L L^T`.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    l: DenseMatrix<T>,
    min_pivot: T,
}

impl<T: Scalar> Cholesky<T> {
    /// Factorizes a symmetric positive-definite matrix; only the lower
    /// triangle is read. Fails with [`Error::GramSingular`] on the first
    /// pivot that is not safely positive, reporting the smallest pivot seen.
    pub fn factor(a: &DenseMatrix<T>) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: a.cols(),
            });
        }
        let max_diag = (0..n).map(|i| a.get(i, i).abs()).fold(T::zero(), T::max);
        let tol = T::epsilon() * T::from_usize(n.max(1)).unwrap() * max_diag;
        let mut l = DenseMatrix::zeros(n, n);
        let mut min_pivot = T::infinity();
        for i in 0..n {
            for j in 0..=i {
                let s = a.get(i, j) - dot(&l.row(i)[..j], &l.row(j)[..j]);
                if i == j {
                    min_pivot = min_pivot.min(s);
                    if !(s > tol) {
                        return Err(Error::GramSingular {
                            index: i,
                            pivot: min_pivot.as_f64(),
                        });
                    }
                    l.set(i, i, s.sqrt());
                } else {
                    l.set(i, j, s / l.get(j, j));
                }
            }
        }
        Ok(Self { l, min_pivot })
    }

    /// Smallest squared pivot `L_ii^2` encountered.
    pub fn min_pivot(&self) -> T {
        self.min_pivot
    }

    pub fn factor_l(&self) -> &DenseMatrix<T> {
        &self.l
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.l.rows();
        assert_eq!(b.len(), n, "rhs length");
        let mut u = vec![T::zero(); n];
        for i in 0..n {
            let row = self.l.row(i);
            u[i] = (b[i] - dot(&row[..i], &u[..i])) / row[i];
        }
        let mut z = vec![T::zero(); n];
        for i in (0..n).rev() {
            let mut s = u[i];
            for k in i + 1..n {
                s = s - self.l.get(k, i) * z[k];
            }
            z[i] = s / self.l.get(i, i);
        }
        z
    }
}

/// Eigenvalues of a real symmetric matrix, ascending.
pub fn symmetric_eigenvalues(a: &DenseMatrix<f64>) -> Result<Vec<f64>> {
    if a.rows() != a.cols() {
        return Err(Error::DimensionMismatch {
            expected: a.rows(),
            found: a.cols(),
        });
    }
    if a.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::EigFailure("non-finite matrix entry".into()));
    }
    let mut ev: Vec<f64> = a.to_nalgebra().symmetric_eigenvalues().iter().copied().collect();
    if ev.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigFailure("non-finite eigenvalue".into()));
    }
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// Eigenvalues of a complex Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(a: &DenseMatrix<Complex64>) -> Result<Vec<f64>> {
    if a.rows() != a.cols() {
        return Err(Error::DimensionMismatch {
            expected: a.rows(),
            found: a.cols(),
        });
    }
    let m = DMatrix::from_row_slice(a.rows(), a.cols(), a.as_slice());
    let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    if ev.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigFailure("non-finite eigenvalue".into()));
    }
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// Spectral norm of a real symmetric matrix.
pub fn symmetric_spectral_norm(a: &DenseMatrix<f64>) -> Result<f64> {
    let ev = symmetric_eigenvalues(a)?;
    Ok(ev.first().map_or(0.0, |v| v.abs()).max(ev.last().map_or(0.0, |v| v.abs())))
}
