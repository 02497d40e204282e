//! Empirical concentration measurements: spectral bracket of the residual
//! Gram matrix, deviation of the top-block sampling operator from the
//! identity, and the residual trace entering the variance bound.
//!
//! Everything here runs in `f64` with dense symmetric/Hermitian
//! eigendecompositions; matrix sizes stay below a few thousand.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::Result;
use crate::estimator::gram_matrix;
use crate::kernels::{fourier_feature, indep_gaussian_residual_gram, FourierKernel, IndepGaussianFeatures};
use crate::linalg::{dot, hermitian_eigenvalues, symmetric_eigenvalues, symmetric_spectral_norm, DenseMatrix};
use crate::samples::SampleSet;
use crate::theory::{bracket, condition_lower_bound};

/// Relative floor applied to the smallest residual-Gram eigenvalue.
pub const LAMBDA_MIN_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualGramStats {
    /// Smallest eigenvalue, floored at `1e-14 * trace`.
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Smallest eigenvalue as returned by the eigensolver.
    pub lambda_min_raw: f64,
}

impl ResidualGramStats {
    /// `lambda_max / lambda_min`; 1 for an identically zero residual.
    pub fn condition(&self) -> f64 {
        if self.lambda_max <= 0.0 {
            1.0
        } else {
            self.lambda_max / self.lambda_min
        }
    }
}

/// Quantities consumed by the deterministic bias and variance bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationReport {
    pub lambda_min_rrstar: f64,
    pub lambda_max_rrstar: f64,
    pub lambda_min_raw: f64,
    pub condition: f64,
    pub tr_rstar_r_l2: f64,
    /// `(alpha_U - alpha_L)/(alpha_U + alpha_L) + 2 ||C^*C / n - I||`.
    pub c_value: f64,
    pub deviation_cstar_c: f64,
    pub alpha: f64,
    pub alpha_l: f64,
    pub alpha_u: f64,
    pub n: usize,
    pub p_count: u64,
    pub d: u64,
    pub seed: Option<u64>,
}

fn stats_from_eigenvalues(ev: &[f64], trace: f64) -> ResidualGramStats {
    let raw = ev.first().copied().unwrap_or(0.0);
    let lambda_max = ev.last().copied().unwrap_or(0.0);
    ResidualGramStats {
        lambda_min: raw.max(LAMBDA_MIN_FLOOR * trace),
        lambda_max,
        lambda_min_raw: raw,
    }
}

/// Extreme eigenvalues of the residual Gram matrix `k^R(x_i, x_j)`.
pub fn residual_gram_stats(k: &FourierKernel<f64>, samples: &SampleSet<f64>) -> Result<ResidualGramStats> {
    let g = gram_matrix(&k.residual_view(), samples);
    let ev = symmetric_eigenvalues(g.entries())?;
    Ok(stats_from_eigenvalues(&ev, g.entries().trace()))
}

/// `(1/n) sum_i e^{j 2 pi m x_i}` for `m = 0..=max_m`.
fn empirical_moments(samples: &SampleSet<f64>, max_m: u64) -> Vec<Complex64> {
    let n = samples.len() as f64;
    (0..=max_m)
        .map(|m| {
            samples
                .locations()
                .iter()
                .map(|x| fourier_feature(m as i64, *x))
                .sum::<Complex64>()
                / n
        })
        .collect()
}

/// `||(1/n) V^H V - I||` for the `(2p + 1)` top Fourier features.
///
/// `(V^H V)_{ab}` only depends on `b - a`, so the matrix is assembled from
/// the empirical Fourier moments of the samples.
pub fn top_block_deviation(p: u64, samples: &SampleSet<f64>) -> Result<f64> {
    if samples.is_empty() {
        return Err(crate::error::Error::InvalidParams("need at least one sample".into()));
    }
    let moments = empirical_moments(samples, 2 * p);
    let size = (2 * p + 1) as usize;
    let m = DenseMatrix::from_fn(size, size, |a, b| {
        let shift = b as i64 - a as i64;
        let v = if shift >= 0 {
            moments[shift as usize]
        } else {
            moments[(-shift) as usize].conj()
        };
        if a == b {
            v - Complex64::new(1.0, 0.0)
        } else {
            v
        }
    });
    if p == 0 {
        return Ok(m.get(0, 0).norm());
    }
    let ev = hermitian_eigenvalues(&m)?;
    Ok(ev.iter().fold(0.0, |acc, v| acc.max(v.abs())))
}

/// `tr(R^* R) = sum_i sum_{l > p} lambda_l^2 |v_l(x_i)|^2`; for unit-modulus
/// Fourier features this is `n * 2(d - p) gamma^2`.
pub fn trace_rstar_r(k: &FourierKernel<f64>, samples: &SampleSet<f64>) -> f64 {
    samples.len() as f64 * k.spectrum().traces().tr_tail_sq
}

/// `sum_i sum_{l > p} lambda_l^2 w_l(x_i)^2` for independent Gaussian features.
pub fn trace_rstar_r_gaussian(f: &IndepGaussianFeatures<f64>) -> Result<f64> {
    let tail = f.tail_lambdas()?;
    let sq: Vec<f64> = tail.iter().map(|l| l * l).collect();
    Ok((0..f.n())
        .map(|i| {
            let row = &f.features().row(i)[f.p()..];
            let w2: Vec<f64> = row.iter().map(|w| w * w).collect();
            dot(&w2, &sq)
        })
        .sum())
}

/// Populates a [`ConcentrationReport`] for the Fourier kernel at regularization `alpha`.
pub fn theorem1_c_value(
    k: &FourierKernel<f64>,
    samples: &SampleSet<f64>,
    alpha: f64,
    seed: Option<u64>,
) -> Result<ConcentrationReport> {
    let stats = residual_gram_stats(k, samples)?;
    let deviation = top_block_deviation(k.p(), samples)?;
    let alpha_l = alpha + stats.lambda_min;
    let alpha_u = alpha + stats.lambda_max;
    let spread = match bracket(alpha_l, alpha_u) {
        Ok(br) => br.spread(),
        // alpha = 0 with a zero residual: no bracket exists.
        Err(_) => f64::INFINITY,
    };
    Ok(ConcentrationReport {
        lambda_min_rrstar: stats.lambda_min,
        lambda_max_rrstar: stats.lambda_max,
        lambda_min_raw: stats.lambda_min_raw,
        condition: stats.condition(),
        tr_rstar_r_l2: trace_rstar_r(k, samples),
        c_value: spread + 2.0 * deviation,
        deviation_cstar_c: deviation,
        alpha,
        alpha_l,
        alpha_u,
        n: samples.len(),
        p_count: k.top_count(),
        d: k.d(),
        seed,
    })
}

/// `||R R^* - (sum_tail lambda) I|| / sqrt(n sum_tail lambda^2)` for Gaussian
/// features; equals `||R R^* - (d-p) I|| / sqrt(n (d-p))` for a flat unit tail.
pub fn gaussian_residual_deviation(f: &IndepGaussianFeatures<f64>) -> Result<f64> {
    let g = indep_gaussian_residual_gram(f)?;
    let traces = f.spectrum().traces();
    let n = g.rows();
    let centered = DenseMatrix::from_fn(n, n, |i, j| {
        g.get(i, j) - if i == j { traces.tr_tail } else { 0.0 }
    });
    Ok(symmetric_spectral_norm(&centered)? / (n as f64 * traces.tr_tail_sq).sqrt())
}

/// `||(1/n) W^T W - I||` for the Gaussian top-block features `W` (`n x p`).
pub fn gaussian_top_block_deviation(f: &IndepGaussianFeatures<f64>) -> Result<f64> {
    let w = f.top_block();
    let (n, p) = (w.rows() as f64, w.cols());
    let cols: Vec<Vec<f64>> = (0..p).map(|l| (0..w.rows()).map(|i| w.get(i, l)).collect()).collect();
    let m = DenseMatrix::from_fn(p, p, |a, b| {
        dot(&cols[a], &cols[b]) / n - if a == b { 1.0 } else { 0.0 }
    });
    symmetric_spectral_norm(&m)
}

/// Outcome of repeated residual-Gram conditioning measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionSummary {
    pub n: usize,
    pub d: u64,
    pub tau: f64,
    pub bound: f64,
    /// Condition number per seed, in seed order.
    pub conditions: Vec<f64>,
    /// Fraction of trials whose condition number exceeds `bound`.
    pub exceedance: f64,
    pub median: f64,
}

/// Condition numbers of the residual Gram matrix for uniform samples, one
/// trial per seed, against `condition_lower_bound(n, d, tau)`.
pub fn condition_trials(k: &FourierKernel<f64>, n: usize, tau: f64, seeds: &[u64]) -> Result<ConditionSummary> {
    let conditions = seeds
        .par_iter()
        .map(|seed| {
            let s = SampleSet::uniform(n, *seed);
            residual_gram_stats(k, &s).map(|st| st.condition())
        })
        .collect::<Result<Vec<f64>>>()?;
    let bound = condition_lower_bound(n, k.d(), tau);
    let exceed = conditions.iter().filter(|c| **c >= bound).count();
    Ok(ConditionSummary {
        n,
        d: k.d(),
        tau,
        bound,
        exceedance: exceed as f64 / conditions.len().max(1) as f64,
        median: median(&conditions),
        conditions,
    })
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}
