//! Closed-form bounds and asymptotic verdicts.
//!
//! Every bound is returned with its hidden universal constant set to 1, so
//! only shapes and trends are comparable against measurements.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Spectral bracket `alpha_L I <= alpha I + R R^* <= alpha_U I` and its means.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularizationBracket<T> {
    pub alpha_l: T,
    pub alpha_u: T,
    /// Harmonic mean `2 alpha_U alpha_L / (alpha_U + alpha_L)`.
    pub alpha_bar: T,
    /// Arithmetic mean `(alpha_U + alpha_L) / 2`.
    pub alpha_tilde: T,
}

impl<T: Scalar> RegularizationBracket<T> {
    /// `(alpha_U - alpha_L) / (alpha_U + alpha_L)`, the first term of `c`.
    pub fn spread(&self) -> T {
        (self.alpha_u - self.alpha_l) / (self.alpha_u + self.alpha_l)
    }
}

pub fn bracket<T: Scalar>(alpha_l: T, alpha_u: T) -> Result<RegularizationBracket<T>> {
    if !(alpha_l > T::zero()) || !(alpha_u >= alpha_l) || !alpha_u.is_finite() {
        return Err(Error::InvalidBracket {
            alpha_l: alpha_l.as_f64(),
            alpha_u: alpha_u.as_f64(),
        });
    }
    let two = T::lit(2.0);
    let sum = alpha_u + alpha_l;
    // Clamp against rounding so the ordering of the means always holds.
    let alpha_bar = (two * alpha_u * alpha_l / sum).max(alpha_l).min(alpha_u);
    let alpha_tilde = (sum / two).max(alpha_bar).min(alpha_u);
    Ok(RegularizationBracket {
        alpha_l,
        alpha_u,
        alpha_bar,
        alpha_tilde,
    })
}

/// `min{sqrt(l1), sqrt(l_p)^-1 abar/((1-c) n), sqrt(abar/n)/(1-c)}`
/// `* (1 + sqrt(n l_{p+1} / abar)) * h_norm`.
pub fn bias_bound<T: Scalar>(
    br: &RegularizationBracket<T>,
    n: usize,
    lambda_1: T,
    lambda_p: T,
    lambda_p1: T,
    c: T,
    h_norm: T,
) -> T {
    let n = T::from_usize(n).unwrap();
    let abar = br.alpha_bar;
    let shrink = T::one() / (T::one() - c);
    let m = lambda_1
        .sqrt()
        .min(shrink * abar / (n * lambda_p.sqrt()))
        .min(shrink * (abar / n).sqrt());
    m * (T::one() + (n * lambda_p1 / abar).sqrt()) * h_norm
}

/// `sigma^2 (alpha_U / alpha_L + 1)^2 (p / n + tr(R^* R) / alpha_tilde^2)`.
pub fn variance_bound<T: Scalar>(
    br: &RegularizationBracket<T>,
    n: usize,
    p_count: u64,
    tr_rstar_r: T,
    sigma_sq: T,
) -> T {
    let ratio = br.alpha_u / br.alpha_l + T::one();
    let n = T::from_usize(n.max(1)).unwrap();
    sigma_sq * ratio * ratio * (T::from_count(p_count) / n + tr_rstar_r / (br.alpha_tilde * br.alpha_tilde))
}

/// Error of the noiseless estimate relative to the surviving signal:
/// `(c + sqrt(n l_{p+1} / abar)) * min{l1, abar/(n sqrt(l_p)), sqrt(abar/n)} * h_norm`.
pub fn refined_bias_bound<T: Scalar>(
    br: &RegularizationBracket<T>,
    n: usize,
    lambda_1: T,
    lambda_p: T,
    lambda_p1: T,
    c: T,
    h_norm: T,
) -> T {
    let n = T::from_usize(n).unwrap();
    let abar = br.alpha_bar;
    let m = lambda_1
        .min(abar / (n * lambda_p.sqrt()))
        .min((abar / n).sqrt());
    (c + (n * lambda_p1 / abar).sqrt()) * m * h_norm
}

/// `n / (alpha_bar + n)`: fraction of a flat-top signal kept by the ideal estimator.
pub fn survival_factor<T: Scalar>(n: usize, alpha_bar: T) -> T {
    let n = T::from_usize(n).unwrap();
    n / (alpha_bar + n)
}

/// `||residual||_{L2} / s`, an upper bound on the excess classification risk.
pub fn classification_upper_bound<T: Scalar>(residual_l2: T, s: T) -> Result<T> {
    if !(s > T::zero()) {
        return Err(Error::DegenerateSurvival(s.as_f64()));
    }
    Ok(residual_l2 / s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Consistent,
    Inconsistent,
    Unknown,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Consistent => "Consistent",
            Verdict::Inconsistent => "Inconsistent",
            Verdict::Unknown => "Unknown",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegimeVerdict {
    pub regression: Verdict,
    pub classification: Verdict,
    /// `beta > 2` and `r < 1`.
    pub preconditions_met: bool,
}

/// Asymptotic consistency of the bi-level ensemble with parameters `(beta, r, q)`.
///
/// Only strict inequalities decide; boundary cases and parameter sets that
/// miss `beta > 2, 0 < r < 1` give `Unknown`.
pub fn regime<T: Scalar>(beta: T, r: T, q: T) -> RegimeVerdict {
    let one = T::one();
    let two = T::lit(2.0);
    let preconditions_met = beta > two && r < one && r > T::zero();
    let unknown = RegimeVerdict {
        regression: Verdict::Unknown,
        classification: Verdict::Unknown,
        preconditions_met,
    };
    if !preconditions_met {
        return unknown;
    }
    let gap = one - r;
    if q < gap {
        RegimeVerdict {
            regression: Verdict::Consistent,
            classification: Verdict::Consistent,
            preconditions_met,
        }
    } else if q > gap {
        let separated = q < T::lit(1.5) * gap && beta > two * (r + q);
        RegimeVerdict {
            regression: Verdict::Inconsistent,
            classification: if separated {
                Verdict::Consistent
            } else {
                Verdict::Unknown
            },
            preconditions_met,
        }
    } else {
        unknown
    }
}

/// `n^2 (n-1)^2 / (2 pi^2 d^2 tau^2)`: lower bound on the condition number of
/// the Fourier residual Gram matrix, holding with probability `>= 1 - e^-tau`.
pub fn condition_lower_bound<T: Scalar>(n: usize, d: u64, tau: T) -> T {
    let n = T::from_usize(n).unwrap();
    let d = T::from_count(d);
    let nn = n * (n - T::one());
    nn * nn / (T::lit(2.0) * T::PI() * T::PI() * d * d * tau * tau)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistortionBranch {
    /// `lambda_p` is active at the optimum.
    TopLast,
    /// `lambda_p` lies below the worst-case eigenvalue; continuous bound used.
    Continuous,
}

/// Optimal survival factor against a top block spread over `[lambda_p, lambda_1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Distortion<T> {
    pub s_star: T,
    /// `||s I_G - S||_{H -> L2}` at `s_star`.
    pub objective: T,
    /// Eigenvalue paired with `lambda_1` at the optimum.
    pub lambda_active: T,
    pub branch: DistortionBranch,
}

/// `lambda_1 / (1 + sqrt(1 + lambda_1 / b))^2`, the eigenvalue maximizing the
/// two-point distortion objective.
pub fn worst_distortion_eigenvalue<T: Scalar>(lambda_1: T, b: T) -> T {
    let root = T::one() + (T::one() + lambda_1 / b).sqrt();
    lambda_1 / (root * root)
}

/// Minimizes `max_l sqrt(lambda_l) |s - lambda_l / (lambda_l + b)|` over `s`.
pub fn distortion_s_star<T: Scalar>(lambda_1: T, lambda_p: T, b: T) -> Result<Distortion<T>> {
    if !(lambda_p > T::zero()) || !(lambda_p <= lambda_1) || !lambda_1.is_finite() {
        return Err(Error::InvalidEigen {
            lambda_1: lambda_1.as_f64(),
            lambda_p: lambda_p.as_f64(),
        });
    }
    if !(b > T::zero()) || !b.is_finite() {
        return Err(Error::InvalidParams(format!("b = {b} must be positive")));
    }
    let worst = worst_distortion_eigenvalue(lambda_1, b);
    let (lambda, branch) = if lambda_p >= worst {
        (lambda_p, DistortionBranch::TopLast)
    } else {
        (worst, DistortionBranch::Continuous)
    };
    let geo = (lambda * lambda_1).sqrt();
    let denom = (b + lambda) * (b + lambda_1);
    let s_star = (lambda * lambda_1 + b * (lambda + lambda_1 - geo)) / denom;
    let objective = (b * geo * (lambda_1.sqrt() - lambda.sqrt()) / denom).max(T::zero());
    Ok(Distortion {
        s_star,
        objective,
        lambda_active: lambda,
        branch,
    })
}

/// `objective / s_star`: the classification bound's distortion penalty.
pub fn distortion_ratio<T: Scalar>(lambda_1: T, lambda_p: T, b: T) -> Result<T> {
    let d = distortion_s_star(lambda_1, lambda_p, b)?;
    Ok(d.objective / d.s_star)
}
