//! Sweep execution: one cell per (mode, n, trial), run in parallel and
//! aggregated in sorted order.

use std::time::{Duration, Instant};

use rayon::prelude::*;

use super::config::SweepConfig;
use super::seed::{derive_seed, SeedLabel};
use crate::diagnostics::theorem1_c_value;
use crate::error::{Error, Result};
use crate::estimator::{gram_matrix, ridge_solve};
use crate::kernels::FourierKernel;
use crate::risks::{
    binary_labels, excess_classification_risk, gaussian_observations, relative_l2_error, Mode, RiskRecord,
    TargetFunction, TrialDiagnostics,
};
use crate::samples::SampleSet;
use crate::spectra::BiLevelParams;

/// GramSingular retries before a trial is declared failed.
pub const MAX_RESAMPLES: u32 = 3;
/// Cells running longer than this are recorded as failures.
pub const CELL_BUDGET: Duration = Duration::from_secs(120);
/// Caps the worker pool when no explicit thread count is given.
pub const THREADS_ENV: &str = "INTERPLAB_THREADS";

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub threads: Option<usize>,
    /// Fill the `wall_ms` column. Off by default: timings make output
    /// differ between otherwise identical runs.
    pub record_timings: bool,
    pub cell_budget: Duration,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            threads: None,
            record_timings: false,
            cell_budget: CELL_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialFailure {
    pub mode: Mode,
    pub n: usize,
    pub trial: usize,
    pub reason: String,
}

/// Mean and standard error of both risks over the records of one (mode, n).
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub mode: Mode,
    pub n: usize,
    pub count: usize,
    pub mean_rel_l2_error: f64,
    pub se_rel_l2_error: f64,
    pub mean_rel_excess_risk: f64,
    pub se_rel_excess_risk: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub config_hash: String,
    pub version: String,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub config_id: String,
    /// Sorted by (mode, n, trial).
    pub records: Vec<RiskRecord>,
    pub failures: Vec<TrialFailure>,
    pub summary: Vec<SummaryRow>,
    pub provenance: Provenance,
}

fn trial_seed(cfg: &SweepConfig, n: usize, trial: usize) -> u64 {
    derive_seed(cfg.master_seed, &["trial".into(), n.into(), trial.into()])
}

fn samples_seed(cfg: &SweepConfig, n: usize, trial: usize, attempt: u32) -> u64 {
    derive_seed(cfg.master_seed, &["samples".into(), n.into(), trial.into(), attempt.into()])
}

fn target_seed(cfg: &SweepConfig, n: usize, trial: usize) -> u64 {
    derive_seed(cfg.master_seed, &["target".into(), n.into(), trial.into()])
}

fn observation_seed(cfg: &SweepConfig, mode: Mode, n: usize, trial: usize, attempt: u32) -> u64 {
    let labels: [SeedLabel; 5] = ["observations".into(), mode.as_str().into(), n.into(), trial.into(), attempt.into()];
    derive_seed(cfg.master_seed, &labels)
}

/// Runs one trial with default options.
pub fn run_trial(cfg: &SweepConfig, n: usize, trial: usize, mode: Mode) -> Result<RiskRecord> {
    run_trial_with(cfg, n, trial, mode, &RunOptions::default())
}

pub fn run_trial_with(cfg: &SweepConfig, n: usize, trial: usize, mode: Mode, opts: &RunOptions) -> Result<RiskRecord> {
    let started = Instant::now();
    let fail = |reason: String| Error::TrialFailed {
        n,
        trial,
        mode: mode.to_string(),
        reason,
    };
    let check_budget = || {
        if started.elapsed() > opts.cell_budget {
            Err(fail(format!("exceeded wall-time budget of {:?}", opts.cell_budget)))
        } else {
            Ok(())
        }
    };
    let params = BiLevelParams::new(n, cfg.beta, cfg.r, cfg.q)?;
    let kernel = FourierKernel::from_params(&params);
    let target = TargetFunction::generate(params.p(), target_seed(cfg, n, trial));

    let ((samples, weights), resamples) = with_resamples(|attempt| {
        let samples = SampleSet::uniform(n, samples_seed(cfg, n, trial, attempt));
        let obs_seed = observation_seed(cfg, mode, n, trial, attempt);
        let obs = match mode {
            Mode::Gaussian => gaussian_observations(&target, &samples, cfg.sigma, obs_seed)?,
            Mode::Binary => binary_labels(&target, &samples, obs_seed)?,
        };
        let gram = gram_matrix(&kernel, &samples);
        check_budget()?;
        let w = ridge_solve(&gram, &samples, &obs.y, cfg.alpha)?;
        Ok((samples, w))
    })
    .map_err(|e| match e {
        Error::GramSingular { pivot, .. } => fail(format!(
            "Gram matrix singular after {MAX_RESAMPLES} resamples (smallest pivot {pivot:e})"
        )),
        other => other,
    })?;
    check_budget()?;
    let rel_l2_error = relative_l2_error(&weights, &kernel, &target)?;
    let rel_excess_risk = excess_classification_risk(&weights, &kernel, &target, cfg.grid_size)?;
    let diagnostics = if cfg.diagnostics_enabled {
        Some(trial_diagnostics(&kernel, &samples, cfg.alpha)?)
    } else {
        None
    };
    check_budget()?;
    Ok(RiskRecord {
        config_id: cfg.config_id.clone(),
        mode,
        n,
        trial,
        seed: trial_seed(cfg, n, trial),
        alpha: cfg.alpha,
        rel_l2_error,
        rel_excess_risk,
        diagnostics,
        resamples,
        wall_ms: opts.record_timings.then(|| started.elapsed().as_millis() as u64),
    })
}

/// Calls `attempt(0)`, `attempt(1)`, ... while it reports `GramSingular`,
/// up to [`MAX_RESAMPLES`] retries. Returns the value and the retry count.
fn with_resamples<R>(mut attempt: impl FnMut(u32) -> Result<R>) -> Result<(R, u32)> {
    let mut k = 0;
    loop {
        match attempt(k) {
            Ok(v) => return Ok((v, k)),
            Err(Error::GramSingular { .. }) if k < MAX_RESAMPLES => k += 1,
            Err(e) => return Err(e),
        }
    }
}

fn trial_diagnostics(k: &FourierKernel<f64>, samples: &SampleSet<f64>, alpha: f64) -> Result<TrialDiagnostics> {
    let rep = theorem1_c_value(k, samples, alpha, None)?;
    Ok(TrialDiagnostics {
        cond_rrstar: rep.condition,
        c_value: rep.c_value,
    })
}

/// Thread count: explicit option, then `INTERPLAB_THREADS`, then rayon's default.
pub fn resolve_threads(explicit: Option<usize>) -> Option<usize> {
    explicit.filter(|t| *t > 0).or_else(|| {
        std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|t| *t > 0)
    })
}

pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    run_sweep_with(cfg, &RunOptions::default())
}

pub fn run_sweep_with(cfg: &SweepConfig, opts: &RunOptions) -> Result<SweepResult> {
    cfg.validate()?;
    let mut cells = Vec::with_capacity(cfg.modes.len() * cfg.n_values.len() * cfg.trials);
    for &mode in &cfg.modes {
        for &n in &cfg.n_values {
            for trial in 0..cfg.trials {
                cells.push((mode, n, trial));
            }
        }
    }
    cells.sort();
    let run = || -> Vec<(Mode, usize, usize, Result<RiskRecord>)> {
        cells
            .par_iter()
            .map(|&(mode, n, trial)| (mode, n, trial, run_trial_with(cfg, n, trial, mode, opts)))
            .collect()
    };
    let outcomes = match resolve_threads(opts.threads) {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?
            .install(run),
        None => run(),
    };
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (mode, n, trial, out) in outcomes {
        match out {
            Ok(r) => records.push(r),
            Err(e) => failures.push(TrialFailure {
                mode,
                n,
                trial,
                reason: e.to_string(),
            }),
        }
    }
    let summary = summarize(&records);
    Ok(SweepResult {
        config_id: cfg.config_id.clone(),
        records,
        failures,
        summary,
        provenance: Provenance {
            config_hash: cfg.hash(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        },
    })
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

/// Per-(mode, n) summary of records sorted by (mode, n, trial).
pub fn summarize(records: &[RiskRecord]) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    for group in records.chunk_by(|a, b| (a.mode, a.n) == (b.mode, b.n)) {
        let l2: Vec<f64> = group.iter().map(|r| r.rel_l2_error).collect();
        let ex: Vec<f64> = group.iter().map(|r| r.rel_excess_risk).collect();
        let (mean_l2, se_l2) = mean_and_se(&l2);
        let (mean_ex, se_ex) = mean_and_se(&ex);
        rows.push(SummaryRow {
            mode: group[0].mode,
            n: group[0].n,
            count: group.len(),
            mean_rel_l2_error: mean_l2,
            se_rel_l2_error: se_l2,
            mean_rel_excess_risk: mean_ex,
            se_rel_excess_risk: se_ex,
        });
    }
    rows
}

impl SweepResult {
    pub fn summary_for(&self, mode: Mode, n: usize) -> Option<&SummaryRow> {
        self.summary.iter().find(|r| r.mode == mode && r.n == n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(modes: Vec<Mode>, n_values: Vec<usize>, trials: usize) -> SweepConfig {
        let mut c = SweepConfig::new("t", 2.6, 0.3, 0.3);
        c.n_values = n_values;
        c.trials = trials;
        c.modes = modes;
        c.grid_size = 1024;
        c
    }

    #[test]
    fn single_cell_cardinality() {
        let res = run_sweep(&small(vec![Mode::Gaussian], vec![10], 1)).unwrap();
        assert_eq!(res.records.len(), 1);
        assert!(res.failures.is_empty());
        assert_eq!(res.summary.len(), 1);
        assert_eq!(res.summary[0].se_rel_l2_error, 0.0);
    }

    #[test]
    fn records_sorted_and_complete() {
        let cfg = small(vec![Mode::Binary, Mode::Gaussian], vec![10, 18, 32], 3);
        let res = run_sweep(&cfg).unwrap();
        assert_eq!(res.records.len(), 2 * 3 * 3);
        let keys: Vec<_> = res.records.iter().map(|r| (r.mode, r.n, r.trial)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        for row in &res.summary {
            let vals: Vec<f64> = res
                .records
                .iter()
                .filter(|r| r.mode == row.mode && r.n == row.n)
                .map(|r| r.rel_l2_error)
                .collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            assert!((mean - row.mean_rel_l2_error).abs() <= 1e-12);
        }
    }

    #[test]
    fn trial_is_deterministic() {
        let cfg = small(vec![Mode::Binary], vec![32], 1);
        let a = run_trial(&cfg, 32, 4, Mode::Binary).unwrap();
        let b = run_trial(&cfg, 32, 4, Mode::Binary).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.resamples, 0);
        assert!(a.wall_ms.is_none());
    }

    #[test]
    fn noiseless_recovers_signal() {
        let mut cfg = small(vec![Mode::Gaussian], vec![100], 1);
        cfg.sigma = 0.0;
        let rec = run_trial(&cfg, 100, 0, Mode::Gaussian).unwrap();
        assert!(rec.rel_l2_error < 1.0, "{}", rec.rel_l2_error);
    }

    #[test]
    fn permuted_grid_same_records() {
        // n_values must increase, so compare a grid against its pieces.
        let both = run_sweep(&small(vec![Mode::Gaussian], vec![10, 32], 2)).unwrap();
        let a = run_sweep(&small(vec![Mode::Gaussian], vec![10], 2)).unwrap();
        let b = run_sweep(&small(vec![Mode::Gaussian], vec![32], 2)).unwrap();
        let mut joined = a.records.clone();
        joined.extend(b.records);
        assert_eq!(both.records, joined);
    }

    #[test]
    fn thread_count_irrelevant() {
        let cfg = small(vec![Mode::Binary, Mode::Gaussian], vec![18, 56], 4);
        let one = run_sweep_with(&cfg, &RunOptions { threads: Some(1), ..Default::default() }).unwrap();
        let four = run_sweep_with(&cfg, &RunOptions { threads: Some(4), ..Default::default() }).unwrap();
        assert_eq!(one.records, four.records);
    }

    #[test]
    fn diagnostics_attached() {
        let mut cfg = small(vec![Mode::Gaussian], vec![32], 1);
        cfg.diagnostics_enabled = true;
        let rec = run_trial(&cfg, 32, 0, Mode::Gaussian).unwrap();
        let d = rec.diagnostics.unwrap();
        assert!(d.cond_rrstar >= 1.0);
        assert!(d.c_value >= 0.0);
    }

    #[test]
    fn budget_exhaustion_is_a_failure() {
        let cfg = small(vec![Mode::Gaussian], vec![100], 2);
        let opts = RunOptions {
            cell_budget: Duration::ZERO,
            ..Default::default()
        };
        let res = run_sweep_with(&cfg, &opts).unwrap();
        assert!(res.records.is_empty());
        assert_eq!(res.failures.len(), 2);
        assert!(res.failures[0].reason.contains("budget"));
    }

    #[test]
    fn resample_accounting() {
        let singular = || Error::GramSingular { index: 0, pivot: 0.0 };
        let (v, k) = with_resamples(|a| if a < 2 { Err(singular()) } else { Ok(a) }).unwrap();
        assert_eq!((v, k), (2, 2));
        let mut calls = 0;
        let err = with_resamples::<()>(|_| {
            calls += 1;
            Err(singular())
        })
        .unwrap_err();
        assert!(matches!(err, Error::GramSingular { .. }));
        assert_eq!(calls, 1 + MAX_RESAMPLES);
        let err = with_resamples::<()>(|_| Err(Error::ZeroTarget)).unwrap_err();
        assert!(matches!(err, Error::ZeroTarget));
    }
}
