use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use interplab::diagnostics::{condition_trials, theorem1_c_value};
use interplab::harness::csv::{emit_csv, read_csv};
use interplab::harness::svg::emit_svg;
use interplab::harness::{derive_seed, run_sweep_with, RunOptions, SweepConfig};
use interplab::theory::{
    bias_bound, bracket, condition_lower_bound, distortion_ratio, distortion_s_star, refined_bias_bound,
    survival_factor, variance_bound,
};
use interplab::{regime, BiLevelParams, Error, FourierKernel, SampleSet};

/// Bi-level ensemble kernel ridge regression experiments.
#[derive(Parser)]
#[command(name = "interplab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a risk sweep and write <config_id>.csv and <config_id>.svg.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the trial count from the config.
        #[arg(long)]
        trials: Option<usize>,
        /// Worker threads (default: INTERPLAB_THREADS, then all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Record per-trial wall time in the wall_ms column.
        #[arg(long)]
        timings: bool,
    },
    /// Asymptotic regression/classification verdicts.
    Regime {
        #[arg(long, allow_negative_numbers = true)]
        beta: f64,
        #[arg(long, allow_negative_numbers = true)]
        r: f64,
        #[arg(long, allow_negative_numbers = true)]
        q: f64,
    },
    /// Bias, variance and refined-bias bounds fed by measured concentration.
    Bounds {
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        r: f64,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1e-3)]
        alpha: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Hilbert norm of the target.
        #[arg(long, default_value_t = 1.0)]
        h_norm: f64,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
    },
    /// Residual Gram conditioning against its closed-form lower bound.
    Condition {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: u64,
        #[arg(long)]
        tau: f64,
        #[arg(long)]
        trials: usize,
        /// Top-block size excluded from the residual.
        #[arg(long, default_value_t = 0)]
        p: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Worst-case eigenvalue distortion of the classification bound.
    Distortion {
        #[arg(long)]
        lambda1: f64,
        #[arg(long)]
        lambdap: f64,
        #[arg(long)]
        b: f64,
    },
    /// Plot one or more sweep CSVs.
    Plot {
        #[arg(long = "in", required = true, num_args = 1..)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidParams(_) | Error::InvalidEigen { .. } => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            // Keep clap's headline and any indented detail, dropping the usage block.
            let text = e.to_string();
            let line = text
                .lines()
                .skip_while(|l| l.trim().is_empty())
                .take_while(|l| !l.trim().is_empty() && !l.starts_with("Usage:"))
                .map(str::trim)
                .collect::<Vec<_>>()
                .join(" ");
            eprintln!("{}", if line.is_empty() { "usage error" } else { &line });
            return ExitCode::from(1);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Sweep {
            config,
            out,
            trials,
            threads,
            timings,
        } => {
            if !config.is_file() {
                return Err(Failure::Usage(format!("--config: no such file {}", config.display())));
            }
            let mut cfg = SweepConfig::from_file(&config)?;
            if let Some(t) = trials {
                cfg.trials = t;
                cfg.validate()?;
            }
            std::fs::create_dir_all(&out).map_err(|e| Failure::Runtime(format!("{}: {e}", out.display())))?;
            let opts = RunOptions {
                threads,
                record_timings: timings,
                ..RunOptions::default()
            };
            let res = run_sweep_with(&cfg, &opts)?;
            let csv_path = out.join(format!("{}.csv", cfg.config_id));
            emit_csv(&res, &csv_path)?;
            println!("config {} ({}), version {}", cfg.config_id, res.provenance.config_hash, res.provenance.version);
            println!("{:<9} {:>6} {:>6} {:>24} {:>24}", "mode", "n", "count", "rel_l2_error", "rel_excess_risk");
            for row in &res.summary {
                println!(
                    "{:<9} {:>6} {:>6} {:>12.4e} ±{:>10.2e} {:>12.4e} ±{:>10.2e}",
                    row.mode.as_str(),
                    row.n,
                    row.count,
                    row.mean_rel_l2_error,
                    row.se_rel_l2_error,
                    row.mean_rel_excess_risk,
                    row.se_rel_excess_risk
                );
            }
            for f in &res.failures {
                eprintln!("failed: {} n={} trial={}: {}", f.mode, f.n, f.trial, f.reason);
            }
            println!("wrote {}", csv_path.display());
            if !res.records.is_empty() {
                let svg_path = out.join(format!("{}.svg", cfg.config_id));
                match emit_svg(&res.records, &svg_path) {
                    Ok(()) => println!("wrote {}", svg_path.display()),
                    Err(Error::EmptyResult) => eprintln!("no positive values to plot"),
                    Err(e) => return Err(e.into()),
                }
            }
        }
        Command::Regime { beta, r, q } => {
            let v = regime(beta, r, q);
            println!("regression: {}", v.regression);
            println!("classification: {}", v.classification);
            if !v.preconditions_met {
                println!("note: verdicts need beta > 2 and 0 < r < 1");
            }
        }
        Command::Bounds {
            beta,
            r,
            q,
            n,
            alpha,
            seed,
            h_norm,
            sigma,
        } => {
            let params = BiLevelParams::new(n, beta, r, q)?;
            let kernel = FourierKernel::from_params(&params);
            let spectrum = kernel.spectrum();
            let samples = SampleSet::uniform(n, seed);
            let rep = theorem1_c_value(&kernel, &samples, alpha, Some(seed))?;
            let br = bracket(rep.alpha_l, rep.alpha_u)?;
            let missing = || Failure::Runtime("spectrum has no top block".into());
            let l1 = spectrum.lambda_1().ok_or_else(missing)?;
            let lp = spectrum.lambda_top_last().ok_or_else(missing)?;
            let lp1 = spectrum.lambda_tail_first();
            println!("p = {}, d = {}, gamma = {:.6e}", params.p(), params.d(), params.gamma());
            println!("lambda_min(RR*) = {:.6e}", rep.lambda_min_rrstar);
            println!("lambda_max(RR*) = {:.6e}", rep.lambda_max_rrstar);
            println!("condition(RR*) = {:.6e}", rep.condition);
            println!("||C*C/n - I|| = {:.6e}", rep.deviation_cstar_c);
            println!("alpha_L = {:.6e}, alpha_U = {:.6e}", br.alpha_l, br.alpha_u);
            println!("alpha_bar = {:.6e}, alpha_tilde = {:.6e}", br.alpha_bar, br.alpha_tilde);
            println!("c = {:.6e}", rep.c_value);
            let vb = variance_bound(&br, n, rep.p_count, rep.tr_rstar_r_l2, sigma * sigma);
            if rep.c_value < 1.0 {
                println!("bias bound = {:.6e}", bias_bound(&br, n, l1, lp, lp1, rep.c_value, h_norm));
                println!("refined bias bound = {:.6e}", refined_bias_bound(&br, n, l1, lp, lp1, rep.c_value, h_norm));
            } else {
                println!("bias bound = vacuous (c >= 1)");
                println!("refined bias bound = vacuous (c >= 1)");
            }
            println!("variance bound = {vb:.6e}");
            println!("survival factor = {:.6e}", survival_factor(n, br.alpha_bar));
        }
        Command::Condition {
            n,
            d,
            tau,
            trials,
            p,
            seed,
        } => {
            if trials == 0 {
                return Err(Failure::Usage("--trials must be at least 1".into()));
            }
            let kernel = FourierKernel::new(p, d, 1.0)?;
            let seeds: Vec<u64> = (0..trials)
                .map(|t| derive_seed(seed, &["condition".into(), n.into(), d.into(), t.into()]))
                .collect();
            let summary = condition_trials(&kernel, n, tau, &seeds)?;
            println!("bound = {:.6}", condition_lower_bound(n, d, tau));
            println!("median condition = {:.6e}", summary.median);
            println!(
                "exceedance = {:.4} ({} of {})",
                summary.exceedance,
                summary.conditions.iter().filter(|c| **c >= summary.bound).count(),
                trials
            );
        }
        Command::Distortion { lambda1, lambdap, b } => {
            let d = distortion_s_star(lambda1, lambdap, b)?;
            println!("s_star = {:.12e}", d.s_star);
            println!("objective = {:.12e}", d.objective);
            println!("ratio = {:.12e}", distortion_ratio(lambda1, lambdap, b)?);
            println!("active eigenvalue = {:.12e} ({:?})", d.lambda_active, d.branch);
        }
        Command::Plot { inputs, out } => {
            let mut records = Vec::new();
            for path in &inputs {
                if !path.is_file() {
                    return Err(Failure::Usage(format!("--in: no such file {}", path.display())));
                }
                records.extend(read_csv(path)?);
            }
            emit_svg(&records, &out)?;
            println!("wrote {}", out.display());
        }
    }
    Ok(())
}
