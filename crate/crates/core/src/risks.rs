//! Target functions, observation models and the two risk functionals:
//! relative squared L2 error and relative excess classification risk.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::estimator::{l2_distance_sq_exact, predict, DualWeights};
use crate::kernels::{fourier_feature, FourierKernel, Kernel};
use crate::samples::SampleSet;
use crate::scalar::Scalar;

/// Default midpoint count for the classification-risk quadrature.
pub const DEFAULT_RISK_GRID: usize = 8192;
/// Smallest accepted classification-risk grid.
pub const MIN_RISK_GRID: usize = 1024;

/// Uniform grid size used to normalize `max |eta*| = 1` for degree `p`.
pub fn normalization_grid_size(p: u64) -> usize {
    4096.max(32 * (2 * p as usize + 1))
}

/// Real trigonometric polynomial `sum_{|l| <= p} c_l e^{j 2 pi l x}` with
/// `c_{-l} = conj(c_l)`. Only `c_0..=c_p` are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetFunction<T> {
    half: Vec<Complex<T>>,
    normalization_grid_size: usize,
}

impl<T: Scalar> TargetFunction<T> {
    /// Random target of degree `p`: `c_0` real standard normal, `c_l`
    /// complex standard normal, then rescaled so that `max_x |eta*(x)| = 1`.
    pub fn generate(p: u64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut normal = || -> T { T::lit(StandardNormal.sample(&mut rng)) };
        let mut half = Vec::with_capacity(p as usize + 1);
        half.push(Complex::new(normal(), T::zero()));
        for _ in 1..=p {
            let re = normal();
            let im = normal();
            half.push(Complex::new(re, im));
        }
        let grid = normalization_grid_size(p);
        let mut target = Self {
            half,
            normalization_grid_size: grid,
        };
        let peak = target.max_abs();
        if peak > T::zero() {
            let inv = T::one() / peak;
            for c in &mut target.half {
                *c = *c * inv;
            }
        }
        target
    }

    /// Builds a target from `c_0..=c_p` without normalization.
    pub fn from_half_coefficients(half: Vec<Complex<T>>) -> Result<Self> {
        match half.first() {
            None => Err(Error::InvalidParams("need at least c_0".into())),
            Some(c0) if c0.im != T::zero() => {
                Err(Error::InvalidParams("c_0 must be real for a real target".into()))
            }
            Some(_) => {
                let p = half.len() as u64 - 1;
                Ok(Self {
                    half,
                    normalization_grid_size: normalization_grid_size(p),
                })
            }
        }
    }

    pub fn p(&self) -> u64 {
        self.half.len() as u64 - 1
    }

    pub fn normalization_grid(&self) -> usize {
        self.normalization_grid_size
    }

    /// Coefficient `c_l` for `|l| <= p`, zero otherwise.
    pub fn coefficient(&self, l: i64) -> Complex<T> {
        match self.half.get(l.unsigned_abs() as usize) {
            Some(c) if l >= 0 => *c,
            Some(c) => c.conj(),
            None => Complex::new(T::zero(), T::zero()),
        }
    }

    /// `eta*(x)` using the real form `c_0 + 2 sum_{l >= 1} Re(c_l e^{j 2 pi l x})`.
    pub fn eval(&self, x: T) -> T {
        let two = T::lit(2.0);
        self.half
            .iter()
            .enumerate()
            .skip(1)
            .fold(self.half[0].re, |acc, (l, c)| {
                acc + two * (*c * fourier_feature(l as i64, x)).re
            })
    }

    /// Full complex sum over `l = -p..=p`; its imaginary part vanishes.
    pub fn eval_complex(&self, x: T) -> Complex<T> {
        let p = self.p() as i64;
        (-p..=p)
            .map(|l| self.coefficient(l) * fourier_feature(l, x))
            .fold(Complex::new(T::zero(), T::zero()), |a, b| a + b)
    }

    /// `||eta*||_{L2}^2 = sum_l |c_l|^2` (Parseval).
    pub fn l2_norm_sq(&self) -> T {
        let two = T::lit(2.0);
        self.half
            .iter()
            .skip(1)
            .fold(self.half[0].norm_sqr(), |acc, c| acc + two * c.norm_sqr())
    }

    /// `max_x |eta*(x)|` over the whole circle.
    ///
    /// Grid peaks within 1% of the grid maximum are refined by golden-section
    /// search on the two neighbouring cells; the grid alone can miss the
    /// true peak by a relative `O((p / grid)^2)`.
    pub fn max_abs(&self) -> T {
        let grid = self.normalization_grid_size;
        let g = T::from_usize(grid).unwrap();
        let at = |k: usize| T::from_usize(k).unwrap() / g;
        let vals: Vec<T> = (0..grid).map(|k| self.eval(at(k)).abs()).collect();
        let grid_max = vals.iter().copied().fold(T::zero(), T::max);
        if !(grid_max > T::zero()) || self.p() == 0 {
            return grid_max;
        }
        let cutoff = grid_max * T::lit(0.99);
        let mut best = grid_max;
        for k in 0..grid {
            let prev = vals[(k + grid - 1) % grid];
            let next = vals[(k + 1) % grid];
            if vals[k] < cutoff || vals[k] < prev || vals[k] < next {
                continue;
            }
            let lo = at(k) - T::one() / g;
            let hi = at(k) + T::one() / g;
            best = best.max(self.golden_max_abs(lo, hi));
        }
        best
    }

    fn golden_max_abs(&self, mut lo: T, mut hi: T) -> T {
        let ratio = T::lit(0.618_033_988_749_894_8);
        let f = |x: T| self.eval(x).abs();
        let mut a = hi - ratio * (hi - lo);
        let mut b = lo + ratio * (hi - lo);
        let (mut fa, mut fb) = (f(a), f(b));
        for _ in 0..80 {
            if fa < fb {
                lo = a;
                a = b;
                fa = fb;
                b = lo + ratio * (hi - lo);
                fb = f(b);
            } else {
                hi = b;
                b = a;
                fb = fa;
                a = hi - ratio * (hi - lo);
                fa = f(a);
            }
        }
        fa.max(fb).max(f(lo)).max(f(hi))
    }

    /// `max_k |eta*(k / grid)|`.
    pub fn grid_max_abs(&self, grid: usize) -> T {
        let g = T::from_usize(grid).unwrap();
        (0..grid)
            .map(|k| self.eval(T::from_usize(k).unwrap() / g).abs())
            .fold(T::zero(), T::max)
    }
}

pub fn generate_target<T: Scalar>(p: u64, seed: u64) -> TargetFunction<T> {
    TargetFunction::generate(p, seed)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModel<T> {
    GaussianNoise { sigma: T },
    BinaryLabels,
}

/// Samples, observed responses, and the model that produced them.
#[derive(Debug, Clone)]
pub struct ObservationSet<T> {
    pub samples: SampleSet<T>,
    pub y: Vec<T>,
    pub model: NoiseModel<T>,
    /// Additive noise as drawn (`y - eta*(x)`); empty for binary labels.
    pub noise: Vec<T>,
}

/// `y_i = eta*(x_i) + sigma g_i` with `g_i` i.i.d. standard normal.
pub fn gaussian_observations<T: Scalar>(
    target: &TargetFunction<T>,
    samples: &SampleSet<T>,
    sigma: T,
    seed: u64,
) -> Result<ObservationSet<T>> {
    if !(sigma >= T::zero()) {
        return Err(Error::InvalidParams(format!("sigma = {sigma} must be nonnegative")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise: Vec<T> = (0..samples.len())
        .map(|_| {
            let g: f64 = StandardNormal.sample(&mut rng);
            sigma * T::lit(g)
        })
        .collect();
    let y = samples
        .locations()
        .iter()
        .zip(&noise)
        .map(|(x, xi)| target.eval(*x) + *xi)
        .collect();
    Ok(ObservationSet {
        samples: samples.clone(),
        y,
        model: NoiseModel::GaussianNoise { sigma },
        noise,
    })
}

/// `y_i = +1` with probability `(1 + eta*(x_i)) / 2`, else `-1`.
pub fn binary_labels<T: Scalar>(
    target: &TargetFunction<T>,
    samples: &SampleSet<T>,
    seed: u64,
) -> Result<ObservationSet<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = T::lit(0.5);
    let mut y = Vec::with_capacity(samples.len());
    for (i, x) in samples.locations().iter().enumerate() {
        let eta = target.eval(*x);
        if eta.abs() > T::one() + T::lit(1e-9) {
            return Err(Error::ProbabilityOutOfRange {
                index: i,
                value: eta.as_f64(),
            });
        }
        let u = T::lit(rng.gen::<f64>());
        y.push(if u < half * (T::one() + eta) { T::one() } else { -T::one() });
    }
    Ok(ObservationSet {
        samples: samples.clone(),
        y,
        model: NoiseModel::BinaryLabels,
        noise: Vec::new(),
    })
}

/// `||eta* - f||_{L2}^2 / ||eta*||_{L2}^2`, computed exactly.
pub fn relative_l2_error<T: Scalar>(
    w: &DualWeights<T>,
    k: &FourierKernel<T>,
    target: &TargetFunction<T>,
) -> Result<T> {
    let norm_sq = target.l2_norm_sq();
    if !(norm_sq > T::zero()) {
        return Err(Error::ZeroTarget);
    }
    Ok(l2_distance_sq_exact(w, k, target)? / norm_sq)
}

/// Sign convention for classification: `sign(0) = +1`.
#[inline]
fn label<T: Scalar>(v: T) -> bool {
    v >= T::zero()
}

/// Relative excess risk of the plug-in classifier `sign(estimate)`:
/// `int |eta*| 1{sign(estimate) != sign(eta*)} / int |eta*|`, by the
/// midpoint rule on `grid_size` cells.
pub fn excess_risk_of<T: Scalar>(
    estimate: impl Fn(T) -> T,
    target: &TargetFunction<T>,
    grid_size: usize,
) -> Result<T> {
    if grid_size < MIN_RISK_GRID {
        return Err(Error::InvalidParams(format!(
            "risk grid {grid_size} below minimum {MIN_RISK_GRID}"
        )));
    }
    let g = T::from_usize(grid_size).unwrap();
    let half = T::lit(0.5);
    let mut num = T::zero();
    let mut den = T::zero();
    for k in 0..grid_size {
        let x = (T::from_usize(k).unwrap() + half) / g;
        let eta = target.eval(x);
        let weight = eta.abs();
        den = den + weight;
        if label(estimate(x)) != label(eta) {
            num = num + weight;
        }
    }
    if !(den > T::zero()) {
        return Err(Error::ZeroTarget);
    }
    Ok(num / den)
}

/// [`excess_risk_of`] for the kernel estimator defined by `w`.
pub fn excess_classification_risk<T: Scalar, K: Kernel<T> + ?Sized>(
    w: &DualWeights<T>,
    kernel: &K,
    target: &TargetFunction<T>,
    grid_size: usize,
) -> Result<T> {
    excess_risk_of(|x| predict(w, kernel, x), target, grid_size)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mode {
    Binary,
    Gaussian,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Binary => "binary",
            Mode::Gaussian => "gaussian",
        }
    }

    pub fn parse(s: &str) -> Option<Mode> {
        match s.trim() {
            "binary" => Some(Mode::Binary),
            "gaussian" => Some(Mode::Gaussian),
            _ => None,
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Optional conditioning diagnostics attached to a trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialDiagnostics {
    pub cond_rrstar: f64,
    pub c_value: f64,
}

/// Outcome of one trial of the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskRecord {
    pub config_id: String,
    pub mode: Mode,
    pub n: usize,
    pub trial: usize,
    pub seed: u64,
    pub alpha: f64,
    pub rel_l2_error: f64,
    pub rel_excess_risk: f64,
    pub diagnostics: Option<TrialDiagnostics>,
    pub resamples: u32,
    pub wall_ms: Option<u64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::{gram_matrix, ridge_solve};

    #[test]
    fn constant_target_is_unit() {
        for seed in 0..5 {
            let t = TargetFunction::<f64>::generate(0, seed);
            let v = t.eval(0.37);
            assert!((v.abs() - 1.0).abs() < 1e-15);
            assert_eq!(t.eval(0.9), v);
        }
    }

    #[test]
    fn target_is_real_and_normalized() {
        let t = TargetFunction::<f64>::generate(7, 42);
        for k in 0..1000 {
            let x = k as f64 / 1000.0;
            let c = t.eval_complex(x);
            assert!(c.im.abs() <= 1e-12);
            assert!((c.re - t.eval(x)).abs() < 1e-12);
        }
        let grid = t.normalization_grid();
        assert_eq!(grid, 4096);
        assert!((t.max_abs() - 1.0).abs() < 1e-12);
        assert!(t.grid_max_abs(grid) <= 1.0 + 1e-12);
        assert!(t.grid_max_abs(grid) > 0.99);
        assert_eq!(normalization_grid_size(100), 32 * 201);
    }

    #[test]
    fn normalization_bounds_the_continuous_peak() {
        // A dense probe grid 16x finer than the normalization grid never
        // sees |eta*| above 1.
        for (p, seed) in [(3u64, 1u64), (40, 2), (251, 3)] {
            let t = TargetFunction::<f64>::generate(p, seed);
            let probe = 16 * t.normalization_grid();
            let dense = t.grid_max_abs(probe);
            assert!(dense <= 1.0 + 1e-12, "p={p}: {dense}");
            assert!(dense > 1.0 - 1e-6, "p={p}: {dense}");
        }
    }

    #[test]
    fn target_deterministic() {
        let a = TargetFunction::<f64>::generate(5, 9);
        let b = TargetFunction::<f64>::generate(5, 9);
        assert_eq!(a, b);
        assert_ne!(a, TargetFunction::<f64>::generate(5, 10));
    }

    #[test]
    fn parseval_matches_quadrature() {
        let t = TargetFunction::<f64>::generate(6, 3);
        let grid = 1024;
        let quad: f64 = (0..grid).map(|k| t.eval(k as f64 / grid as f64).powi(2)).sum::<f64>() / grid as f64;
        assert!((quad - t.l2_norm_sq()).abs() < 1e-12);
    }

    #[test]
    fn gaussian_noise_free_and_seeded() {
        let t = TargetFunction::<f64>::generate(3, 1);
        let s = SampleSet::<f64>::uniform(50, 2);
        let o = gaussian_observations(&t, &s, 0.0, 3).unwrap();
        for (x, y) in s.locations().iter().zip(&o.y) {
            assert_eq!(*y, t.eval(*x));
        }
        let a = gaussian_observations(&t, &s, 1.0, 3).unwrap();
        let b = gaussian_observations(&t, &s, 1.0, 3).unwrap();
        assert_eq!(a.y, b.y);
        assert!(gaussian_observations(&t, &s, -1.0, 3).is_err());
    }

    #[test]
    fn gaussian_noise_variance() {
        let t = TargetFunction::<f64>::generate(2, 1);
        let s = SampleSet::<f64>::uniform(100_000, 5);
        let sigma = 0.7;
        let o = gaussian_observations(&t, &s, sigma, 6).unwrap();
        let resid: Vec<f64> = s.locations().iter().zip(&o.y).map(|(x, y)| y - t.eval(*x)).collect();
        let mean = resid.iter().sum::<f64>() / resid.len() as f64;
        let var = resid.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (resid.len() - 1) as f64;
        assert!((var - sigma * sigma).abs() / (sigma * sigma) < 0.02, "{var}");
        for (r, xi) in resid.iter().zip(&o.noise) {
            assert!((r - xi).abs() < 1e-12);
        }
    }

    #[test]
    fn binary_extremes() {
        let plus = TargetFunction::from_half_coefficients(vec![Complex::new(1.0, 0.0)]).unwrap();
        let minus = TargetFunction::from_half_coefficients(vec![Complex::new(-1.0, 0.0)]).unwrap();
        let s = SampleSet::<f64>::uniform(500, 1);
        assert!(binary_labels(&plus, &s, 2).unwrap().y.iter().all(|y| *y == 1.0));
        assert!(binary_labels(&minus, &s, 2).unwrap().y.iter().all(|y| *y == -1.0));
        let bad = TargetFunction::from_half_coefficients(vec![Complex::new(1.5, 0.0)]).unwrap();
        assert!(matches!(
            binary_labels(&bad, &s, 2),
            Err(Error::ProbabilityOutOfRange { index: 0, .. })
        ));
    }

    #[test]
    fn binary_mean_tracks_eta() {
        let t = TargetFunction::<f64>::generate(3, 8);
        let x = 0.31;
        let eta = t.eval(x);
        let s = SampleSet::new(vec![x; 100_000]).unwrap();
        let o = binary_labels(&t, &s, 77).unwrap();
        let mean = o.y.iter().sum::<f64>() / o.y.len() as f64;
        assert!((mean - eta).abs() < 0.02, "{mean} vs {eta}");
    }

    #[test]
    fn excess_risk_cases() {
        let t = TargetFunction::<f64>::generate(4, 2);
        assert_eq!(excess_risk_of(|x| t.eval(x), &t, 4096).unwrap(), 0.0);
        assert_eq!(excess_risk_of(|x| 0.5 * t.eval(x), &t, 4096).unwrap(), 0.0);
        let flipped = excess_risk_of(|x| -t.eval(x), &t, 4096).unwrap();
        assert!((flipped - 1.0).abs() < 1e-12);
        assert!(excess_risk_of(|x| x, &t, 512).is_err());
    }

    #[test]
    fn excess_risk_grid_stability() {
        let t = TargetFunction::<f64>::generate(4, 12);
        let shifted = |x: f64| t.eval(x) + 0.3 * (2.0 * std::f64::consts::PI * 3.0 * x).sin();
        let a = excess_risk_of(shifted, &t, 4096).unwrap();
        let b = excess_risk_of(shifted, &t, 8192).unwrap();
        assert!((a - b).abs() <= 5e-3);
    }

    #[test]
    fn relative_error_of_zero_estimator() {
        let k = FourierKernel::new(3, 100, 0.1).unwrap();
        let t = TargetFunction::<f64>::generate(3, 5);
        let s = SampleSet::<f64>::uniform(20, 1);
        let zero = DualWeights::new(vec![0.0; 20], 0.0, s).unwrap();
        assert!((relative_l2_error(&zero, &k, &t).unwrap() - 1.0).abs() < 1e-10);
        let null = TargetFunction::from_half_coefficients(vec![Complex::new(0.0, 0.0)]).unwrap();
        assert!(matches!(relative_l2_error(&zero, &k, &null), Err(Error::ZeroTarget)));
    }

    #[test]
    fn noiseless_recovery_is_nearly_perfect() {
        // Plenty of samples, tiny tail: ridge recovers the top-block target.
        let k = FourierKernel::new(2, 40, 1e-4).unwrap();
        let t = TargetFunction::<f64>::generate(2, 4);
        let s = SampleSet::<f64>::uniform(200, 3);
        let o = gaussian_observations(&t, &s, 0.0, 1).unwrap();
        let g = gram_matrix(&k, &s);
        let w = ridge_solve(&g, &s, &o.y, 1e-8).unwrap();
        assert!(relative_l2_error(&w, &k, &t).unwrap() < 1e-4);
        assert_eq!(excess_classification_risk(&w, &k, &t, DEFAULT_RISK_GRID).unwrap(), 0.0);
    }

    #[test]
    fn mode_roundtrip() {
        for m in [Mode::Binary, Mode::Gaussian] {
            assert_eq!(Mode::parse(m.as_str()), Some(m));
        }
        assert_eq!(Mode::parse("poisson"), None);
    }
}
