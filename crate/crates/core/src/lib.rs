//! Bi-level ensemble kernel ridge regression on the unit circle: spectra,
//! Fourier and Gaussian-feature kernels, the ridge estimator, risk
//! measurement, closed-form bounds, concentration diagnostics and a
//! deterministic sweep harness.

// Negated comparisons are deliberate: they reject NaN alongside out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod diagnostics;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod kernels;
pub mod linalg;
pub mod risks;
pub mod samples;
pub mod scalar;
pub mod spectra;
pub mod theory;

pub use error::{Error, Result};
pub use estimator::{gram_matrix, predict, ridge_solve, DualWeights, GramMatrix};
pub use kernels::{dirichlet_sinc, FourierKernel, IndepGaussianFeatures, Kernel};
pub use risks::{Mode, RiskRecord, TargetFunction};
pub use samples::SampleSet;
pub use scalar::Scalar;
pub use spectra::{BiLevelParams, Indexing, Spectrum};
pub use theory::{regime, RegimeVerdict, Verdict};

pub type BiLevelParams64 = BiLevelParams<f64>;
pub type Spectrum64 = Spectrum<f64>;
pub type FourierKernel64 = FourierKernel<f64>;
pub type SampleSet64 = SampleSet<f64>;
pub type GramMatrix64 = GramMatrix<f64>;
pub type DualWeights64 = DualWeights<f64>;
pub type TargetFunction64 = TargetFunction<f64>;

pub type BiLevelParams32 = BiLevelParams<f32>;
pub type FourierKernel32 = FourierKernel<f32>;
pub type SampleSet32 = SampleSet<f32>;
