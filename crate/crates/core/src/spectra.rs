//! Eigenvalue ensembles for the integral operator.
//!
//! The bi-level ensemble has `p` unit eigenvalues followed by `d - p` equal
//! small eigenvalues `gamma = n^-(beta - r - q)`, with `p = floor(n^r)` and
//! `d = floor(n^beta)`. Two counting conventions are supported:
//! [`Indexing::SingleIndex`] numbers features `1..=d`, while
//! [`Indexing::FourierSymmetric`] uses the frequencies `-d..=d`, so the top
//! block holds `2p + 1` features and the tail `2(d - p)`.
//!
//! Bi-level spectra are kept in closed form (values plus multiplicities);
//! `d` reaches ~10^9 in the sweeps.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Relative slack used when flooring `n^r` and `n^beta`, so that exact
/// integer powers such as `729^(1/3)` are not lost to rounding.
const FLOOR_SLACK: f64 = 1e-9;

fn floor_power(n: usize, exponent: f64) -> u64 {
    let x = (n as f64).powf(exponent);
    let f = x.floor();
    if f + 1.0 - x <= FLOOR_SLACK * x.max(1.0) {
        (f + 1.0) as u64
    } else {
        f as u64
    }
}

/// Knobs of the bi-level ensemble together with the derived `p`, `d`, `gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiLevelParams<T> {
    n: usize,
    beta: T,
    r: T,
    q: T,
    p: u64,
    d: u64,
    gamma: T,
}

impl<T: Scalar> BiLevelParams<T> {
    pub fn new(n: usize, beta: T, r: T, q: T) -> Result<Self> {
        let invalid = |msg: String| Err(Error::InvalidParams(msg));
        if n < 1 {
            return invalid("n must be positive".into());
        }
        if !beta.is_finite() || !r.is_finite() || !q.is_finite() {
            return invalid("beta, r, q must be finite".into());
        }
        if beta <= T::one() {
            return invalid(format!("beta = {beta} must exceed 1"));
        }
        if r <= T::zero() || r >= T::one() {
            return invalid(format!("r = {r} must lie in (0, 1)"));
        }
        // Relative slack so that q entered as the decimal value of beta - r
        // is treated as the boundary.
        let q_max = (beta - r) * (T::one() - T::lit(16.0) * T::epsilon());
        if q <= T::zero() || q >= q_max {
            return invalid(format!("q = {q} must lie in (0, beta - r = {})", beta - r));
        }
        let p = floor_power(n, r.as_f64());
        let d = floor_power(n, beta.as_f64());
        if p < 1 {
            return invalid(format!("p = floor(n^r) = {p} must be at least 1"));
        }
        if d < p + 1 {
            return invalid(format!("d = floor(n^beta) = {d} must exceed p = {p}"));
        }
        let gamma = T::from_usize(n).unwrap().powf(-(beta - r - q));
        if !(gamma > T::zero() && gamma < T::one()) {
            return invalid(format!("gamma = {gamma} must lie in (0, 1)"));
        }
        Ok(Self {
            n,
            beta,
            r,
            q,
            p,
            d,
            gamma,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn beta(&self) -> T {
        self.beta
    }
    pub fn r(&self) -> T {
        self.r
    }
    pub fn q(&self) -> T {
        self.q
    }
    /// Number of unit eigenvalues in single-index counting, `floor(n^r)`.
    pub fn p(&self) -> u64 {
        self.p
    }
    /// Total number of features in single-index counting, `floor(n^beta)`.
    pub fn d(&self) -> u64 {
        self.d
    }
    /// Tail eigenvalue `n^-(beta - r - q)`.
    pub fn gamma(&self) -> T {
        self.gamma
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Indexing {
    /// Features `1..=d`; `p` top, `d - p` tail.
    SingleIndex,
    /// Frequencies `-d..=d`; `2p + 1` top, `2(d - p)` tail.
    FourierSymmetric,
}

/// Nonincreasing, strictly positive eigenvalue sequence with a marked top block.
#[derive(Debug, Clone, PartialEq)]
pub enum Spectrum<T> {
    BiLevel {
        top_value: T,
        tail_value: T,
        top_count: u64,
        tail_count: u64,
    },
    /// Explicit values; the first `top_count` form the top block.
    Explicit { values: Vec<T>, top_count: usize },
}

/// Sums over the tail block: `sum lambda` and `sum lambda^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailTraces<T> {
    pub tr_tail: T,
    pub tr_tail_sq: T,
}

impl<T: Scalar> Spectrum<T> {
    pub fn bilevel(top_value: T, tail_value: T, top_count: u64, tail_count: u64) -> Result<Self> {
        if !(tail_value > T::zero()) || !top_value.is_finite() || top_value < tail_value {
            return Err(Error::InvalidParams(format!(
                "bi-level spectrum needs top_value >= tail_value > 0, got {top_value}, {tail_value}"
            )));
        }
        if top_count < 1 || tail_count < 1 {
            return Err(Error::InvalidParams(
                "bi-level spectrum needs nonempty top and tail blocks".into(),
            ));
        }
        Ok(Spectrum::BiLevel {
            top_value,
            tail_value,
            top_count,
            tail_count,
        })
    }

    pub fn explicit(values: Vec<T>, top_count: usize) -> Result<Self> {
        if top_count > values.len() {
            return Err(Error::DimensionMismatch {
                expected: values.len(),
                found: top_count,
            });
        }
        if let Some(i) = values.iter().position(|v| !(*v > T::zero()) || !v.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "eigenvalue #{i} = {} is not strictly positive",
                values[i]
            )));
        }
        if let Some(i) = values.windows(2).position(|w| w[0] < w[1]) {
            return Err(Error::InvalidParams(format!(
                "eigenvalues increase at index {i}: {} < {}",
                values[i],
                values[i + 1]
            )));
        }
        Ok(Spectrum::Explicit { values, top_count })
    }

    pub fn top_count(&self) -> u64 {
        match self {
            Spectrum::BiLevel { top_count, .. } => *top_count,
            Spectrum::Explicit { top_count, .. } => *top_count as u64,
        }
    }

    pub fn tail_count(&self) -> u64 {
        match self {
            Spectrum::BiLevel { tail_count, .. } => *tail_count,
            Spectrum::Explicit { values, top_count } => (values.len() - top_count) as u64,
        }
    }

    pub fn len(&self) -> u64 {
        self.top_count() + self.tail_count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Eigenvalue at zero-based position `i` in nonincreasing order.
    pub fn value(&self, i: u64) -> Option<T> {
        match self {
            Spectrum::BiLevel {
                top_value,
                tail_value,
                top_count,
                tail_count,
            } => {
                if i < *top_count {
                    Some(*top_value)
                } else if i < top_count + tail_count {
                    Some(*tail_value)
                } else {
                    None
                }
            }
            Spectrum::Explicit { values, .. } => values.get(i as usize).copied(),
        }
    }

    /// Largest eigenvalue.
    pub fn lambda_1(&self) -> Option<T> {
        self.value(0)
    }

    /// Last eigenvalue of the top block.
    pub fn lambda_top_last(&self) -> Option<T> {
        self.top_count().checked_sub(1).and_then(|i| self.value(i))
    }

    /// First tail eigenvalue, zero when the tail is empty.
    pub fn lambda_tail_first(&self) -> T {
        self.value(self.top_count()).unwrap_or_else(T::zero)
    }

    /// Iterates the tail eigenvalues. Only sensible for explicit or small spectra.
    pub fn tail_values(&self) -> Box<dyn Iterator<Item = T> + '_> {
        match self {
            Spectrum::BiLevel {
                tail_value,
                tail_count,
                ..
            } => Box::new(std::iter::repeat_n(*tail_value, *tail_count as usize)),
            Spectrum::Explicit { values, top_count } => Box::new(values[*top_count..].iter().copied()),
        }
    }

    pub fn traces(&self) -> TailTraces<T> {
        match self {
            Spectrum::BiLevel {
                tail_value,
                tail_count,
                ..
            } => {
                let m = T::from_count(*tail_count);
                TailTraces {
                    tr_tail: m * *tail_value,
                    tr_tail_sq: m * *tail_value * *tail_value,
                }
            }
            Spectrum::Explicit { values, top_count } => {
                let tail = &values[*top_count..];
                TailTraces {
                    tr_tail: tail.iter().copied().sum(),
                    tr_tail_sq: tail.iter().map(|v| *v * *v).sum(),
                }
            }
        }
    }
}

/// Bi-level spectrum for `params` in the requested counting convention.
pub fn bilevel_spectrum<T: Scalar>(params: &BiLevelParams<T>, indexing: Indexing) -> Spectrum<T> {
    let (p, d) = (params.p(), params.d());
    let (top_count, tail_count) = match indexing {
        Indexing::SingleIndex => (p, d - p),
        Indexing::FourierSymmetric => (2 * p + 1, 2 * (d - p)),
    };
    Spectrum::BiLevel {
        top_value: T::one(),
        tail_value: params.gamma(),
        top_count,
        tail_count,
    }
}

/// Tail traces `(sum lambda, sum lambda^2)` over indices past the top block.
pub fn spectrum_traces<T: Scalar>(s: &Spectrum<T>) -> TailTraces<T> {
    s.traces()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn n729_third_power_floor() {
        let params = BiLevelParams::new(729, 2.6, 1.0 / 3.0, 5.0 / 6.0).unwrap();
        assert_eq!(params.p(), 9);
        // 729^2.6 = 3^15.6 = 27_739_049.38
        assert_eq!(params.d(), 27_739_049);
        // 729^-(2.6 - 1/3 - 5/6) = 3^-8.6
        let expected = 3f64.powf(-8.6);
        assert!((params.gamma() - expected).abs() < 1e-15);
        assert!((params.gamma() - 7.89e-5).abs() < 5e-7);
    }

    #[test]
    fn paper_sweep_parameters_accepted() {
        for &n in &[10, 100, 1000, 3162] {
            BiLevelParams::new(n, 2.6, 0.3, 0.3).unwrap();
        }
    }

    #[test]
    fn q_at_boundary_rejected() {
        let err = BiLevelParams::new(100, 2.6, 0.3, 2.3).unwrap_err();
        assert!(matches!(err, Error::InvalidParams(_)));
        assert!(BiLevelParams::new(100, 1.0, 0.3, 0.3).is_err());
        assert!(BiLevelParams::new(100, 2.6, 1.0, 0.3).is_err());
        assert!(BiLevelParams::new(100, 2.6, 0.3, 0.0).is_err());
    }

    #[test]
    fn tiny_n_rejected() {
        // n = 1: p = 1, d = 1, no tail.
        assert!(BiLevelParams::new(1, 2.6, 0.3, 0.3).is_err());
    }

    #[test]
    fn counts_per_convention() {
        let params = BiLevelParams::new(729, 2.6, 1.0 / 3.0, 5.0 / 6.0).unwrap();
        let single = bilevel_spectrum(&params, Indexing::SingleIndex);
        let fourier = bilevel_spectrum(&params, Indexing::FourierSymmetric);
        assert_eq!(single.top_count(), 9);
        assert_eq!(single.tail_count(), 27_739_049 - 9);
        assert_eq!(fourier.top_count(), 19);
        assert_eq!(fourier.tail_count(), 2 * (27_739_049 - 9));
        assert_eq!(single.lambda_1(), fourier.lambda_1());
        assert_eq!(single.lambda_tail_first(), fourier.lambda_tail_first());
    }

    #[test]
    fn bilevel_traces_closed_form() {
        let (p, d, g) = (3u64, 40u64, 0.01);
        let s = Spectrum::bilevel(1.0, g, 2 * p + 1, 2 * (d - p)).unwrap();
        let t = spectrum_traces(&s);
        assert!((t.tr_tail - 2.0 * (d - p) as f64 * g).abs() < 1e-15);
        assert!((t.tr_tail_sq - 2.0 * (d - p) as f64 * g * g).abs() < 1e-15);
        let summed: f64 = s.tail_values().sum();
        assert!((summed - t.tr_tail).abs() < 1e-12);
    }

    #[test]
    fn explicit_traces() {
        let s = Spectrum::explicit(vec![1.0, 0.5, 0.25], 1).unwrap();
        let t = s.traces();
        assert_eq!(t.tr_tail, 0.75);
        assert_eq!(t.tr_tail_sq, 0.3125);
        assert_eq!(s.lambda_top_last(), Some(1.0));
        assert_eq!(s.lambda_tail_first(), 0.5);
    }

    #[test]
    fn explicit_rejects_bad_sequences() {
        assert!(Spectrum::explicit(vec![1.0, 2.0], 1).is_err());
        assert!(Spectrum::explicit(vec![1.0, 0.0], 1).is_err());
        assert!(Spectrum::explicit(vec![1.0], 2).is_err());
        assert!(Spectrum::bilevel(0.5, 1.0, 1, 1).is_err());
        assert!(Spectrum::bilevel(1.0, 0.5, 0, 1).is_err());
    }

    #[test]
    fn generic_over_f32() {
        let params = BiLevelParams::<f32>::new(100, 2.6, 0.3, 0.3).unwrap();
        assert_eq!(params.p(), 3);
        let s = bilevel_spectrum(&params, Indexing::FourierSymmetric);
        assert_eq!(s.top_count(), 7);
    }

    proptest! {
        #[test]
        fn bilevel_invariants(n in 2usize..5000, beta in 1.05f64..3.0, r in 0.05f64..0.95, qf in 0.01f64..0.99) {
            let q = qf * (beta - r);
            if let Ok(params) = BiLevelParams::new(n, beta, r, q) {
                prop_assert!(params.gamma() < 1.0);
                prop_assert!(params.p() >= 1 && params.d() > params.p());
                for idx in [Indexing::SingleIndex, Indexing::FourierSymmetric] {
                    let s = bilevel_spectrum(&params, idx);
                    let t = s.traces();
                    let m = s.tail_count() as f64;
                    prop_assert!((t.tr_tail / params.gamma() - m).abs() <= 4.0 * f64::EPSILON * m);
                    prop_assert!(s.lambda_1().unwrap() >= s.lambda_tail_first());
                }
            }
        }

        #[test]
        fn explicit_nonincreasing(mut v in proptest::collection::vec(1e-6f64..10.0, 1..50)) {
            v.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let s = Spectrum::explicit(v.clone(), 0).unwrap();
            for i in 1..s.len() {
                prop_assert!(s.value(i - 1).unwrap() >= s.value(i).unwrap());
            }
        }
    }
}
