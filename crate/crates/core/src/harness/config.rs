//! Sweep configuration files.
//!
//! Flat `key = value` lines; `#` starts a comment; lists are comma
//! separated. Reals accept plain decimals or fractions such as `1/3`.
//!
//! ```text
//! config_id = case1
//! beta = 2.6
//! r = 0.3
//! q = 0.3
//! n_values = 100, 316, 1000
//! trials = 20
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::risks::{Mode, DEFAULT_RISK_GRID, MIN_RISK_GRID};
use crate::spectra::BiLevelParams;

pub const DEFAULT_N_VALUES: [usize; 11] = [10, 18, 32, 56, 100, 178, 316, 562, 1000, 1778, 3162];
pub const DEFAULT_TRIALS: usize = 100;
pub const DEFAULT_ALPHA: f64 = 1e-3;
pub const DEFAULT_SIGMA: f64 = 1.0;
pub const DEFAULT_MASTER_SEED: u64 = 1;

const KEYS: [&str; 12] = [
    "config_id",
    "beta",
    "r",
    "q",
    "n_values",
    "trials",
    "alpha",
    "sigma",
    "grid_size",
    "master_seed",
    "modes",
    "diagnostics",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub config_id: String,
    pub beta: f64,
    pub r: f64,
    pub q: f64,
    pub n_values: Vec<usize>,
    pub trials: usize,
    pub alpha: f64,
    pub sigma: f64,
    pub grid_size: usize,
    pub master_seed: u64,
    /// Sorted, without duplicates.
    pub modes: Vec<Mode>,
    pub diagnostics_enabled: bool,
}

impl SweepConfig {
    /// A configuration with protocol defaults for everything but the spectrum.
    pub fn new(config_id: &str, beta: f64, r: f64, q: f64) -> Self {
        Self {
            config_id: config_id.to_string(),
            beta,
            r,
            q,
            n_values: DEFAULT_N_VALUES.to_vec(),
            trials: DEFAULT_TRIALS,
            alpha: DEFAULT_ALPHA,
            sigma: DEFAULT_SIGMA,
            grid_size: DEFAULT_RISK_GRID,
            master_seed: DEFAULT_MASTER_SEED,
            modes: vec![Mode::Binary, Mode::Gaussian],
            diagnostics_enabled: false,
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(Error::Config(format!("line {}: unknown key '{key}'", lineno + 1)));
            }
            if entries.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key '{key}'", lineno + 1)));
            }
        }
        let required = |k: &str| {
            entries
                .get(k)
                .cloned()
                .ok_or_else(|| Error::Config(format!("missing required key '{k}'")))
        };
        let mut cfg = SweepConfig::new(
            &required("config_id")?,
            parse_real("beta", &required("beta")?)?,
            parse_real("r", &required("r")?)?,
            parse_real("q", &required("q")?)?,
        );
        if let Some(v) = entries.get("n_values") {
            cfg.n_values = parse_list(v)
                .map(|s| parse_int::<usize>("n_values", s))
                .collect::<Result<_>>()?;
        }
        if let Some(v) = entries.get("trials") {
            cfg.trials = parse_int("trials", v)?;
        }
        if let Some(v) = entries.get("alpha") {
            cfg.alpha = parse_real("alpha", v)?;
        }
        if let Some(v) = entries.get("sigma") {
            cfg.sigma = parse_real("sigma", v)?;
        }
        if let Some(v) = entries.get("grid_size") {
            cfg.grid_size = parse_int("grid_size", v)?;
        }
        if let Some(v) = entries.get("master_seed") {
            cfg.master_seed = parse_int("master_seed", v)?;
        }
        if let Some(v) = entries.get("modes") {
            let mut modes = parse_list(v)
                .map(|s| Mode::parse(s).ok_or_else(|| Error::Config(format!("modes: unknown mode '{s}'"))))
                .collect::<Result<Vec<_>>>()?;
            modes.sort();
            modes.dedup();
            cfg.modes = modes;
        }
        if let Some(v) = entries.get("diagnostics") {
            cfg.diagnostics_enabled = match v.as_str() {
                "true" | "yes" | "1" => true,
                "false" | "no" | "0" => false,
                other => return Err(Error::Config(format!("diagnostics: expected true/false, got '{other}'"))),
            };
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.config_id.is_empty()
            || !self
                .config_id
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || "_-.".contains(c))
        {
            return bad(format!("config_id '{}' must be nonempty [A-Za-z0-9_.-]", self.config_id));
        }
        if self.n_values.is_empty() {
            return bad("n_values must be nonempty".into());
        }
        if self.n_values.windows(2).any(|w| w[0] >= w[1]) {
            return bad("n_values must be strictly increasing".into());
        }
        if self.trials < 1 {
            return bad("trials must be at least 1".into());
        }
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return bad(format!("alpha = {} must be finite and nonnegative", self.alpha));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return bad(format!("sigma = {} must be finite and nonnegative", self.sigma));
        }
        if self.grid_size < MIN_RISK_GRID {
            return bad(format!("grid_size must be at least {MIN_RISK_GRID}"));
        }
        if self.modes.is_empty() {
            return bad("modes must name at least one of gaussian, binary".into());
        }
        for &n in &self.n_values {
            BiLevelParams::new(n, self.beta, self.r, self.q)
                .map_err(|e| Error::Config(format!("n = {n}: {e}")))?;
        }
        Ok(())
    }

    /// Canonical rendering; parsing it yields the same configuration.
    pub fn to_text(&self) -> String {
        let list = |v: Vec<String>| v.join(", ");
        format!(
            "config_id = {}\nbeta = {:?}\nr = {:?}\nq = {:?}\nn_values = {}\ntrials = {}\nalpha = {:?}\nsigma = {:?}\ngrid_size = {}\nmaster_seed = {}\nmodes = {}\ndiagnostics = {}\n",
            self.config_id,
            self.beta,
            self.r,
            self.q,
            list(self.n_values.iter().map(|n| n.to_string()).collect()),
            self.trials,
            self.alpha,
            self.sigma,
            self.grid_size,
            self.master_seed,
            list(self.modes.iter().map(|m| m.to_string()).collect()),
            self.diagnostics_enabled,
        )
    }

    /// SHA-256 of [`SweepConfig::to_text`], hex encoded.
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_text().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

fn parse_list(v: &str) -> impl Iterator<Item = &str> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn parse_int<I: std::str::FromStr>(key: &str, v: &str) -> Result<I> {
    v.trim()
        .replace('_', "")
        .parse()
        .map_err(|_| Error::Config(format!("{key}: expected an integer, got '{v}'")))
}

/// Decimal or `num/den`.
pub fn parse_real(key: &str, v: &str) -> Result<f64> {
    let err = || Error::Config(format!("{key}: expected a real number, got '{v}'"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| err());
    let value = match v.split_once('/') {
        Some((a, b)) => num(a)? / num(b)?,
        None => num(v)?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(err())
    }
}
