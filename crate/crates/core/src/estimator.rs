//! Kernel ridge regression in dual form.
//!
//! The estimator is `f(x) = sum_i z_i k(x, x_i)` with `z = (alpha I + K)^{-1} y`;
//! `alpha = 0` gives the minimum-Hilbert-norm interpolant. No jitter is ever
//! added to the Gram matrix: a failed factorization surfaces as
//! [`Error::GramSingular`].

use crate::error::{Error, Result};
use crate::kernels::{FourierKernel, Kernel};
use crate::linalg::{dot, norm2, Cholesky, DenseMatrix};
use crate::risks::TargetFunction;
use crate::samples::SampleSet;
use crate::scalar::Scalar;

/// Symmetric Gram matrix `K_ij = k(x_i, x_j)`.
#[derive(Debug, Clone)]
pub struct GramMatrix<T> {
    entries: DenseMatrix<T>,
    kernel_tag: String,
}

impl<T: Scalar> GramMatrix<T> {
    pub fn entries(&self) -> &DenseMatrix<T> {
        &self.entries
    }

    pub fn kernel_tag(&self) -> &str {
        &self.kernel_tag
    }

    pub fn n(&self) -> usize {
        self.entries.rows()
    }
}

/// Solved dual coefficients together with the regularization used.
#[derive(Debug, Clone)]
pub struct DualWeights<T> {
    z: Vec<T>,
    alpha: T,
    samples: SampleSet<T>,
    min_pivot: T,
    residual: T,
}

impl<T: Scalar> DualWeights<T> {
    /// Wraps externally computed coefficients.
    pub fn new(z: Vec<T>, alpha: T, samples: SampleSet<T>) -> Result<Self> {
        if z.len() != samples.len() {
            return Err(Error::DimensionMismatch {
                expected: samples.len(),
                found: z.len(),
            });
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("non-finite dual weight".into()));
        }
        Ok(Self {
            z,
            alpha,
            samples,
            min_pivot: T::nan(),
            residual: T::nan(),
        })
    }

    pub fn z(&self) -> &[T] {
        &self.z
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn samples(&self) -> &SampleSet<T> {
        &self.samples
    }

    /// Smallest Cholesky pivot of `alpha I + K` (NaN when not solved here).
    pub fn min_pivot(&self) -> T {
        self.min_pivot
    }

    /// `||(alpha I + K) z - y|| / ||y||` measured after the solve.
    pub fn relative_residual(&self) -> T {
        self.residual
    }

    /// Same coefficients multiplied by `c`.
    pub fn scaled(&self, c: T) -> Self {
        Self {
            z: self.z.iter().map(|v| *v * c).collect(),
            ..self.clone()
        }
    }
}

pub fn gram_matrix<T: Scalar, K: Kernel<T> + ?Sized>(kernel: &K, samples: &SampleSet<T>) -> GramMatrix<T> {
    let xs = samples.locations();
    let n = xs.len();
    let mut entries = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = kernel.eval(xs[i], xs[j]);
            entries.set(i, j, v);
            entries.set(j, i, v);
        }
    }
    GramMatrix {
        entries,
        kernel_tag: kernel.tag(),
    }
}

/// Solves `(alpha I + K) z = y` by Cholesky factorization.
pub fn ridge_solve<T: Scalar>(
    gram: &GramMatrix<T>,
    samples: &SampleSet<T>,
    y: &[T],
    alpha: T,
) -> Result<DualWeights<T>> {
    let n = gram.n();
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: y.len(),
        });
    }
    if samples.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: samples.len(),
        });
    }
    if !(alpha >= T::zero()) {
        return Err(Error::InvalidParams(format!("alpha = {alpha} must be nonnegative")));
    }
    let mut shifted = gram.entries.clone();
    for i in 0..n {
        shifted.set(i, i, shifted.get(i, i) + alpha);
    }
    let chol = Cholesky::factor(&shifted)?;
    let z = chol.solve(y);
    let back = shifted.mul_vec(&z);
    let resid: Vec<T> = back.iter().zip(y).map(|(a, b)| *a - *b).collect();
    let y_norm = norm2(y);
    let residual = if y_norm > T::zero() {
        norm2(&resid) / y_norm
    } else {
        norm2(&resid)
    };
    Ok(DualWeights {
        z,
        alpha,
        samples: samples.clone(),
        min_pivot: chol.min_pivot(),
        residual,
    })
}

/// `f(x) = sum_i z_i k(x, x_i)`.
pub fn predict<T: Scalar, K: Kernel<T> + ?Sized>(w: &DualWeights<T>, kernel: &K, x: T) -> T {
    w.z.iter()
        .zip(w.samples.locations())
        .fold(T::zero(), |acc, (z, xi)| acc + *z * kernel.eval(x, *xi))
}

/// Squared Hilbert norm `z^T K z` of the estimator.
pub fn hilbert_norm_sq<T: Scalar>(w: &DualWeights<T>, gram: &GramMatrix<T>) -> T {
    gram.entries.quad_form(&w.z).max(T::zero())
}

/// Exact `||f - f*||_{L2}^2` via `z^T K2 z - 2 z^T f*(x) + ||f*||^2`,
/// where `K2` is the second-moment Gram matrix.
///
/// The target must live in the unit-eigenvalue top block, so that
/// `(T f*)(x_i) = f*(x_i)`.
pub fn l2_distance_sq_exact<T: Scalar>(
    w: &DualWeights<T>,
    k: &FourierKernel<T>,
    target: &TargetFunction<T>,
) -> Result<T> {
    if target.p() > k.p() {
        return Err(Error::UnsupportedTarget);
    }
    let xs = w.samples.locations();
    let k2 = gram_matrix(&k.second_moment_view(), &w.samples);
    let quad = k2.entries.quad_form(&w.z);
    let t: Vec<T> = xs.iter().map(|x| target.eval(*x)).collect();
    let cross = dot(&w.z, &t);
    let norm_sq = target.l2_norm_sq();
    let two = T::lit(2.0);
    let dist = quad - two * cross + norm_sq;
    if dist >= T::zero() {
        return Ok(dist);
    }
    let scale = quad.abs() + (two * cross).abs() + norm_sq;
    if -dist <= T::lit(1e-10) * scale.max(T::one()) {
        Ok(T::zero())
    } else {
        Err(Error::InvalidParams(format!(
            "negative squared L2 distance {dist} beyond rounding"
        )))
    }
}

/// Square root of [`l2_distance_sq_exact`].
pub fn l2_distance_exact<T: Scalar>(
    w: &DualWeights<T>,
    k: &FourierKernel<T>,
    target: &TargetFunction<T>,
) -> Result<T> {
    l2_distance_sq_exact(w, k, target).map(T::sqrt)
}
