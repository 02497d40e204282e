//! Kernels and feature maps.
//!
//! The bi-level Fourier kernel has eigenvalue 1 on frequencies `|l| <= p`
//! and `gamma` on `p < |l| <= d`, which sums to
//! `(1 - gamma) D_p(x - y) + gamma D_d(x - y)` with `D_m` the period-1
//! Dirichlet kernel. Everything is evaluated from `x - y` so each kernel is
//! exactly symmetric.
//!
//! `d` reaches ~10^9, so `D_d` needs sine arguments around 10^10. This relies
//! on the platform `sin` performing full argument reduction (glibc and the
//! Rust `libm` fallback both do).

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{dot, DenseMatrix};
use crate::samples::SampleSet;
use crate::scalar::Scalar;
use crate::spectra::{BiLevelParams, Spectrum};

/// Upper bound on the number of independent Gaussian features.
pub const MAX_GAUSSIAN_FEATURES: usize = 200_000;

/// Below this value of `|(2m + 1) pi t|` the Dirichlet kernel is evaluated
/// by its Taylor series.
const SERIES_THRESHOLD: f64 = 1e-4;

/// `D_m(t) = sin((2m + 1) pi t) / sin(pi t)`, with the removable
/// singularities at integer `t` filled in (`D_m(k) = 2m + 1`).
pub fn dirichlet_sinc<T: Scalar>(m: u64, t: T) -> T {
    let big_n = T::from_count(2 * m + 1);
    let t = t - t.round();
    let pi_t = T::PI() * t;
    let phase = big_n * pi_t;
    if phase.abs() < T::lit(SERIES_THRESHOLD) {
        big_n * (T::one() - (big_n * big_n - T::one()) * pi_t * pi_t / T::lit(6.0))
    } else {
        phase.sin() / pi_t.sin()
    }
}

/// A real, symmetric kernel on `[0, 1)`.
pub trait Kernel<T> {
    fn eval(&self, x: T, y: T) -> T;

    /// Short description recorded alongside Gram matrices.
    fn tag(&self) -> String;
}

/// Bi-level Fourier kernel with top half-bandwidth `p`, full half-bandwidth
/// `d` and tail eigenvalue `gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierKernel<T> {
    p: u64,
    d: u64,
    gamma: T,
}

impl<T: Scalar> FourierKernel<T> {
    /// `gamma = 0` is accepted and gives the pure top-block kernel `D_p`.
    pub fn new(p: u64, d: u64, gamma: T) -> Result<Self> {
        if d <= p {
            return Err(Error::InvalidParams(format!("need d > p, got p={p}, d={d}")));
        }
        if !(gamma >= T::zero() && gamma <= T::one()) {
            return Err(Error::InvalidParams(format!("gamma = {gamma} outside [0, 1]")));
        }
        Ok(Self { p, d, gamma })
    }

    /// Kernel of the symmetric-frequency bi-level ensemble for `params`.
    pub fn from_params(params: &BiLevelParams<T>) -> Self {
        Self {
            p: params.p(),
            d: params.d(),
            gamma: params.gamma(),
        }
    }

    pub fn p(&self) -> u64 {
        self.p
    }
    pub fn d(&self) -> u64 {
        self.d
    }
    pub fn gamma(&self) -> T {
        self.gamma
    }

    /// Number of top-block frequencies, `2p + 1`.
    pub fn top_count(&self) -> u64 {
        2 * self.p + 1
    }

    /// Number of tail frequencies, `2(d - p)`.
    pub fn tail_count(&self) -> u64 {
        2 * (self.d - self.p)
    }

    pub fn spectrum(&self) -> Spectrum<T> {
        Spectrum::BiLevel {
            top_value: T::one(),
            tail_value: self.gamma,
            top_count: self.top_count(),
            tail_count: self.tail_count(),
        }
    }

    /// `(1 - gamma) D_p(x - y) + gamma D_d(x - y)`.
    pub fn eval(&self, x: T, y: T) -> T {
        let t = x - y;
        (T::one() - self.gamma) * dirichlet_sinc(self.p, t) + self.gamma * dirichlet_sinc(self.d, t)
    }

    /// Kernel restricted to the tail frequencies: `gamma (D_d - D_p)(x - y)`.
    pub fn residual(&self, x: T, y: T) -> T {
        let t = x - y;
        self.gamma * (dirichlet_sinc(self.d, t) - dirichlet_sinc(self.p, t))
    }

    /// Kernel with squared eigenvalues: `(1 - gamma^2) D_p + gamma^2 D_d`.
    /// Its Gram matrix is the L2 Gram of the kernel sections.
    pub fn second_moment(&self, x: T, y: T) -> T {
        let t = x - y;
        let g2 = self.gamma * self.gamma;
        (T::one() - g2) * dirichlet_sinc(self.p, t) + g2 * dirichlet_sinc(self.d, t)
    }

    /// Top-block kernel `D_p(x - y)` (unit eigenvalues).
    pub fn top(&self, x: T, y: T) -> T {
        dirichlet_sinc(self.p, x - y)
    }

    /// `k(x, x) = (1 - gamma)(2p + 1) + gamma (2d + 1)`.
    pub fn diagonal(&self) -> T {
        (T::one() - self.gamma) * T::from_count(2 * self.p + 1)
            + self.gamma * T::from_count(2 * self.d + 1)
    }

    /// `k^R(x, x) = 2(d - p) gamma`.
    pub fn residual_diagonal(&self) -> T {
        T::from_count(self.tail_count()) * self.gamma
    }

    pub fn residual_view(&self) -> ResidualKernel<'_, T> {
        ResidualKernel(self)
    }

    pub fn second_moment_view(&self) -> SecondMomentKernel<'_, T> {
        SecondMomentKernel(self)
    }

    pub fn top_view(&self) -> TopKernel<'_, T> {
        TopKernel(self)
    }
}

impl<T: Scalar> Kernel<T> for FourierKernel<T> {
    fn eval(&self, x: T, y: T) -> T {
        FourierKernel::eval(self, x, y)
    }

    fn tag(&self) -> String {
        format!("fourier(p={},d={},gamma={:e})", self.p, self.d, self.gamma.as_f64())
    }
}

pub struct ResidualKernel<'a, T>(&'a FourierKernel<T>);
pub struct SecondMomentKernel<'a, T>(&'a FourierKernel<T>);
pub struct TopKernel<'a, T>(&'a FourierKernel<T>);

impl<T: Scalar> Kernel<T> for ResidualKernel<'_, T> {
    fn eval(&self, x: T, y: T) -> T {
        self.0.residual(x, y)
    }
    fn tag(&self) -> String {
        format!("residual-{}", self.0.tag())
    }
}

impl<T: Scalar> Kernel<T> for SecondMomentKernel<'_, T> {
    fn eval(&self, x: T, y: T) -> T {
        self.0.second_moment(x, y)
    }
    fn tag(&self) -> String {
        format!("second-moment-{}", self.0.tag())
    }
}

impl<T: Scalar> Kernel<T> for TopKernel<'_, T> {
    fn eval(&self, x: T, y: T) -> T {
        self.0.top(x, y)
    }
    fn tag(&self) -> String {
        format!("top-{}", self.0.tag())
    }
}

pub fn kernel_eval<T: Scalar>(k: &FourierKernel<T>, x: T, y: T) -> T {
    k.eval(x, y)
}

pub fn residual_kernel_eval<T: Scalar>(k: &FourierKernel<T>, x: T, y: T) -> T {
    k.residual(x, y)
}

pub fn second_moment_kernel_eval<T: Scalar>(k: &FourierKernel<T>, x: T, y: T) -> T {
    k.second_moment(x, y)
}

/// `e^{j 2 pi l x}` with `l x` reduced modulo 1 before scaling by `2 pi`.
pub fn fourier_feature<T: Scalar>(l: i64, x: T) -> Complex<T> {
    let lx = T::from_i64(l).unwrap() * x;
    let frac = lx - lx.round();
    Complex::from_polar(T::one(), T::TAU() * frac)
}

/// `n x (2p + 1)` matrix with entry `(i, l + p) = e^{j 2 pi l x_i}`, `l = -p..=p`.
pub fn top_feature_matrix<T: Scalar>(p: u64, samples: &SampleSet<T>) -> DenseMatrix<Complex<T>> {
    let p = p as i64;
    let xs = samples.locations();
    DenseMatrix::from_fn(xs.len(), (2 * p + 1) as usize, |i, c| {
        fourier_feature(c as i64 - p, xs[i])
    })
}

/// Independent standard Gaussian features `w_l(x_i)` with a spectrum whose
/// first `p` eigenvalues form the top block.
#[derive(Debug, Clone)]
pub struct IndepGaussianFeatures<T> {
    p: usize,
    d: usize,
    spectrum: Spectrum<T>,
    features: DenseMatrix<T>,
}

impl<T: Scalar> IndepGaussianFeatures<T> {
    /// Draws an `n x d` feature matrix, `d = spectrum.len()`.
    pub fn draw(n: usize, spectrum: Spectrum<T>, seed: u64) -> Result<Self> {
        let d = spectrum.len() as usize;
        if d > MAX_GAUSSIAN_FEATURES {
            return Err(Error::InvalidParams(format!(
                "{d} Gaussian features exceeds the cap of {MAX_GAUSSIAN_FEATURES}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..n * d)
            .map(|_| {
                let g: f64 = StandardNormal.sample(&mut rng);
                T::lit(g)
            })
            .collect();
        let features = DenseMatrix::from_row_major(n, d, data)?;
        let p = spectrum.top_count() as usize;
        Ok(Self {
            p,
            d,
            spectrum,
            features,
        })
    }

    pub fn from_parts(p: usize, d: usize, spectrum: Spectrum<T>, features: DenseMatrix<T>) -> Result<Self> {
        if features.cols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: features.cols(),
            });
        }
        if p > d {
            return Err(Error::InvalidParams(format!("p = {p} exceeds d = {d}")));
        }
        Ok(Self {
            p,
            d,
            spectrum,
            features,
        })
    }

    pub fn p(&self) -> usize {
        self.p
    }
    pub fn d(&self) -> usize {
        self.d
    }
    pub fn n(&self) -> usize {
        self.features.rows()
    }
    pub fn spectrum(&self) -> &Spectrum<T> {
        &self.spectrum
    }
    pub fn features(&self) -> &DenseMatrix<T> {
        &self.features
    }

    /// Tail eigenvalues aligned with feature columns `p..d`.
    pub fn tail_lambdas(&self) -> Result<Vec<T>> {
        let tail = self.spectrum.tail_count() as usize;
        if tail != self.d - self.p {
            return Err(Error::DimensionMismatch {
                expected: self.d - self.p,
                found: tail,
            });
        }
        Ok(self.spectrum.tail_values().collect())
    }

    /// `n x p` matrix of the top-block features.
    pub fn top_block(&self) -> DenseMatrix<T> {
        DenseMatrix::from_fn(self.n(), self.p, |i, l| self.features.get(i, l))
    }
}

/// `sum_{l > p} lambda_l w_l w_l^T` for the tail columns of `features`.
pub(crate) fn weighted_tail_gram<T: Scalar>(features: &DenseMatrix<T>, p: usize, tail: &[T]) -> DenseMatrix<T> {
    let n = features.rows();
    let weighted: Vec<Vec<T>> = (0..n)
        .map(|i| {
            features.row(i)[p..]
                .iter()
                .zip(tail)
                .map(|(w, l)| *w * *l)
                .collect()
        })
        .collect();
    let mut g = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = dot(&weighted[i], &features.row(j)[p..]);
            g.set(i, j, v);
            g.set(j, i, v);
        }
    }
    g
}

/// Residual Gram matrix `R R^* = sum_{l > p} lambda_l w_l w_l^T`.
pub fn indep_gaussian_residual_gram<T: Scalar>(f: &IndepGaussianFeatures<T>) -> Result<DenseMatrix<T>> {
    let tail = f.tail_lambdas()?;
    Ok(weighted_tail_gram(&f.features, f.p, &tail))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use std::f64::consts::PI;

    /// Real part of `sum_{|l| <= d} lambda_l e^{j 2 pi l t}` for the bi-level
    /// eigenvalues, summed term by term.
    fn explicit_sum(p: u64, d: u64, gamma: f64, t: f64) -> f64 {
        let mut acc = 1.0;
        for l in 1..=d {
            let lambda = if l <= p { 1.0 } else { gamma };
            acc += 2.0 * lambda * (2.0 * PI * l as f64 * t).cos();
        }
        acc
    }

    #[test]
    fn dirichlet_exact_values() {
        assert_eq!(dirichlet_sinc(3, 0.0), 7.0);
        assert_eq!(dirichlet_sinc(3, 2.0), 7.0);
        assert!((dirichlet_sinc(1, 0.5f64) + 1.0).abs() < 1e-15);
        assert!(dirichlet_sinc(2, 0.2f64).abs() < 1e-14);
        assert_eq!(dirichlet_sinc(0, 0.37), 1.0);
    }

    #[test]
    fn dirichlet_series_branch_continuous() {
        // Across the series/ratio switch the two formulas agree.
        let m = 1000u64;
        let big_n = (2 * m + 1) as f64;
        let t_switch = 1e-4 / (big_n * PI);
        let below = dirichlet_sinc(m, t_switch * 0.999_999);
        let above = dirichlet_sinc(m, t_switch * 1.000_001);
        assert!((below - above).abs() / big_n < 1e-9);
    }

    #[test]
    fn dirichlet_periodic_large_bandwidth() {
        let m = 100_000_000u64;
        // Dyadic offsets so that t + 1 is exact.
        for &t in &[0.123_046_875f64, 0.25, 0.499_023_437_5, 2f64.powi(-20)] {
            let a = dirichlet_sinc(m, t);
            let b = dirichlet_sinc(m, t + 1.0);
            let scale = (2 * m + 1) as f64;
            assert!((a - b).abs() <= 1e-10 * scale, "t={t}: {a} vs {b}");
        }
    }

    #[test]
    fn kernel_examples() {
        let k = FourierKernel::new(1, 2, 0.5).unwrap();
        assert!(k.eval(0.25f64, 0.0).abs() < 1e-15);
        assert_eq!(k.eval(0.3, 0.3), 0.5 * 3.0 + 0.5 * 5.0);
        assert_eq!(k.diagonal(), 4.0);

        let flat = FourierKernel::new(2, 7, 1.0).unwrap();
        for &(x, y) in &[(0.1, 0.7), (0.9, 0.05)] {
            assert_eq!(flat.eval(x, y), dirichlet_sinc(7, x - y));
            assert_eq!(flat.second_moment(x, y), dirichlet_sinc(7, x - y));
        }
        let top_only = FourierKernel::new(2, 7, 0.0).unwrap();
        assert_eq!(top_only.second_moment(0.1, 0.4), dirichlet_sinc(2, 0.1 - 0.4));
        assert_eq!(top_only.residual(0.1, 0.4), 0.0);
    }

    #[test]
    fn residual_diagonal_and_split() {
        let k = FourierKernel::new(3, 40, 0.02).unwrap();
        assert!((k.residual(0.4f64, 0.4) - 2.0 * 37.0 * 0.02).abs() < 1e-13);
        assert_eq!(k.residual_diagonal(), 2.0 * 37.0 * 0.02);
        let g = 0.7f64;
        let k2 = FourierKernel::new(3, 40, 0.02).unwrap();
        let (x, y) = (0.81f64, 0.17);
        assert!((k2.eval(x, y) - k2.residual(x, y) - dirichlet_sinc(3, x - y)).abs() < 1e-12);
        assert!((k.second_moment(g, g) - ((1.0 - 4e-4) * 7.0 + 4e-4 * 81.0)).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_kernels() {
        assert!(FourierKernel::new(3, 3, 0.5).is_err());
        assert!(FourierKernel::new(1, 3, 1.5).is_err());
        assert!(FourierKernel::new(1, 3, -0.1).is_err());
    }

    #[test]
    fn brute_force_equivalence_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let p = rng.gen_range(0..=50u64);
            let d = rng.gen_range(p + 1..=200u64);
            let gamma = rng.gen_range(0.0..1.0);
            let (x, y): (f64, f64) = (rng.gen(), rng.gen());
            let k = FourierKernel::new(p, d, gamma).unwrap();
            let oracle = explicit_sum(p, d, gamma, x - y);
            assert!((k.eval(x, y) - oracle).abs() < 1e-8, "p={p} d={d}");
        }
    }

    #[test]
    fn top_features_unit_modulus() {
        let s = SampleSet::new(vec![0.0, 0.3, 0.77]).unwrap();
        let v = top_feature_matrix(4, &s);
        assert_eq!((v.rows(), v.cols()), (3, 9));
        for c in 0..9 {
            assert!((v.get(0, c) - Complex::new(1.0, 0.0)).norm() < 1e-15);
        }
        for i in 0..3 {
            assert!((v.get(i, 4) - Complex::new(1.0, 0.0)).norm() < 1e-15);
            for c in 0..9 {
                assert!((v.get(i, c).norm() - 1.0f64).abs() < 1e-14);
            }
        }
        // Row sums of the top features reproduce D_p.
        let z: Complex<f64> = (0..9).map(|c| v.get(1, c) * v.get(2, c).conj()).sum();
        assert!((z.re - dirichlet_sinc(4, 0.3 - 0.77)).abs() < 1e-12 && z.im.abs() < 1e-12);
    }

    #[test]
    fn gaussian_rank_one_and_zero() {
        let w = DenseMatrix::from_row_major(3, 2, vec![1.0, 2.0, 3.0, -1.0, 0.5, 4.0]).unwrap();
        let s = Spectrum::explicit(vec![1.0, 1.0], 1).unwrap();
        let f = IndepGaussianFeatures::from_parts(1, 2, s, w).unwrap();
        let g = indep_gaussian_residual_gram(&f).unwrap();
        let col = [2.0, -1.0, 4.0];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(g.get(i, j), col[i] * col[j]);
            }
        }
        let zero = weighted_tail_gram(f.features(), 1, &[0.0]);
        assert!(zero.as_slice().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn gaussian_dimension_mismatch() {
        let w = DenseMatrix::zeros(2, 3);
        let s = Spectrum::explicit(vec![1.0, 1.0], 1).unwrap();
        let f = IndepGaussianFeatures::from_parts(1, 3, s, w).unwrap();
        assert!(matches!(
            indep_gaussian_residual_gram(&f),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn gaussian_cap_enforced() {
        let s = Spectrum::<f64>::bilevel(1.0, 0.5, 1, MAX_GAUSSIAN_FEATURES as u64).unwrap();
        assert!(IndepGaussianFeatures::draw(2, s, 0).is_err());
    }

    #[test]
    fn gaussian_residual_diagonal_mean() {
        // Monte Carlo mean of the diagonal over 10^4 redraws, flat unit tail.
        let (n, d, p) = (5usize, 50usize, 0usize);
        let s = Spectrum::explicit(vec![1.0; d], p).unwrap();
        let draws = 10_000;
        let mut acc = vec![0.0; n];
        for seed in 0..draws {
            let f = IndepGaussianFeatures::draw(n, s.clone(), seed).unwrap();
            let g = indep_gaussian_residual_gram(&f).unwrap();
            for (i, a) in acc.iter_mut().enumerate() {
                *a += g.get(i, i);
            }
        }
        let expected = s.traces().tr_tail;
        for a in acc {
            let mean = a / draws as f64;
            assert!((mean - expected).abs() / expected < 0.02, "{mean} vs {expected}");
        }
    }

    #[test]
    fn generic_f32_kernel() {
        let k = FourierKernel::<f32>::new(2, 9, 0.1).unwrap();
        let k64 = FourierKernel::<f64>::new(2, 9, 0.1).unwrap();
        let a = k.eval(0.2, 0.65) as f64;
        let b = k64.eval(0.2, 0.65);
        assert!((a - b).abs() < 1e-4);
    }

    proptest! {
        #[test]
        fn dirichlet_periodic_and_bounded(m in 0u64..5000, t in -10.0f64..10.0) {
            let a = dirichlet_sinc(m, t);
            let b = dirichlet_sinc(m, t + 1.0);
            let bound = (2 * m + 1) as f64;
            prop_assert!((a - b).abs() <= 1e-10 * bound.max(1.0) + 1e-10);
            prop_assert!(a.abs() <= bound * (1.0 + 1e-12));
        }

        #[test]
        fn kernels_symmetric(p in 0u64..100, extra in 1u64..100_000, gamma in 0.0f64..1.0, x in 0.0f64..1.0, y in 0.0f64..1.0) {
            let k = FourierKernel::new(p, p + extra, gamma).unwrap();
            prop_assert_eq!(k.eval(x, y), k.eval(y, x));
            prop_assert_eq!(k.residual(x, y), k.residual(y, x));
            prop_assert_eq!(k.second_moment(x, y), k.second_moment(y, x));
        }
    }
}
