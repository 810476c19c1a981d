//! Settings from flags and an optional `key = value` file; flags win.

use crate::error::{CliError, CliResult};
use geb_core::{EtaSchedule, KdeMode, SmallBlockPolicy, TuningConfig, WaveletName};
use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

const KNOWN_KEYS: &[&str] = &[
    "wavelet", "rho0", "b0", "eta", "nstar", "a0", "small-block", "kde", "sigma", "seed", "jobs", "format", "levels",
    "estimator", "truth", "epsilon", "replicates", "output", "out-dir",
];

/// Parsed `key = value` file. Blank lines and `#` comments are skipped;
/// `_` in keys is read as `-`.
#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::usage(format!("config line {}: expected key = value", i + 1)))?;
            let key = k.trim().replace('_', "-").to_ascii_lowercase();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(CliError::usage(format!("config line {}: unknown key '{key}'", i + 1)));
            }
            values.insert(key, v.trim().to_string());
        }
        Ok(ConfigFile { values })
    }

    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::flag("config", format!("cannot read {}: {e}", p.display())))?;
                Self::parse(&text)
            }
        }
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Flag value if given, else the file value, parsed and attributed to `--key`.
    pub fn pick<T: FromStr>(&self, key: &str, flag: Option<T>) -> CliResult<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.raw(key)
            .map(|v| v.parse::<T>().map_err(|e| CliError::flag(key, format!("'{v}': {e}"))))
            .transpose()
    }
}

/// Tuning flags shared by the commands.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct TuningArgs {
    /// Density-floor constant rho0 [default: 0.4]
    #[arg(long)]
    pub rho0: Option<f64>,
    /// Branch cutoff constant b0 [default: 2]
    #[arg(long)]
    pub b0: Option<f64>,
    /// Constant perturbation eta of the density floor [default: 0]
    #[arg(long)]
    pub eta: Option<f64>,
    /// Smallest block size that gets the hybrid rule [default: 64]
    #[arg(long)]
    pub nstar: Option<usize>,
    /// Threshold inflation A0 in sqrt(2 (1 + A0) log n) [default: 0]
    #[arg(long)]
    pub a0: Option<f64>,
    /// Rule for blocks below nstar: mle or james-stein [default: mle]
    #[arg(long = "small-block")]
    pub small_block: Option<String>,
    /// Kernel density evaluation: direct or fourier [default: direct]
    #[arg(long)]
    pub kde: Option<String>,
}

impl TuningArgs {
    pub fn resolve(&self, file: &ConfigFile) -> CliResult<TuningConfig> {
        let mut cfg = TuningConfig::default();
        if let Some(v) = file.pick("rho0", self.rho0)? {
            cfg.rho0 = v;
        }
        if let Some(v) = file.pick("b0", self.b0)? {
            cfg.b0 = v;
        }
        if let Some(v) = file.pick("eta", self.eta)? {
            if !(v > -1.0) || !v.is_finite() {
                return Err(CliError::flag("eta", "must exceed -1"));
            }
            cfg.eta = if v == 0.0 { EtaSchedule::Zero } else { EtaSchedule::Constant(v) };
        }
        if let Some(v) = file.pick("nstar", self.nstar)? {
            cfg.n_star = v;
        }
        if let Some(v) = file.pick("a0", self.a0)? {
            cfg.a0 = v;
        }
        if let Some(v) = file.pick("small-block", self.small_block.clone())? {
            cfg.small_block_policy = match v.as_str() {
                "mle" => SmallBlockPolicy::Mle,
                "james-stein" | "js" => SmallBlockPolicy::JamesStein,
                other => return Err(CliError::flag("small-block", format!("'{other}' (expected mle or james-stein)"))),
            };
        }
        if let Some(v) = file.pick("kde", self.kde.clone())? {
            cfg.kde_mode = match v.as_str() {
                "direct" => KdeMode::Direct,
                "fourier" => KdeMode::Fourier,
                other => return Err(CliError::flag("kde", format!("'{other}' (expected direct or fourier)"))),
            };
        }
        if !(cfg.rho0 > 0.0) || !cfg.rho0.is_finite() {
            return Err(CliError::flag("rho0", "must be positive"));
        }
        if !(cfg.b0 > 0.0) || !cfg.b0.is_finite() {
            return Err(CliError::flag("b0", "must be positive"));
        }
        if cfg.n_star < 3 {
            return Err(CliError::flag("nstar", "must be at least 3"));
        }
        if !(cfg.a0 >= 0.0) || !cfg.a0.is_finite() {
            return Err(CliError::flag("a0", "must be nonnegative"));
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format '{other}' (expected csv or json)")),
        }
    }
}

pub fn wavelet(file: &ConfigFile, flag: Option<String>) -> CliResult<WaveletName> {
    match file.pick::<String>("wavelet", flag)? {
        None => Ok(WaveletName::S8),
        Some(s) => s.parse().map_err(|e| CliError::flag("wavelet", e)),
    }
}

pub fn jobs(file: &ConfigFile, flag: Option<usize>) -> CliResult<Option<usize>> {
    let jobs = file.pick("jobs", flag)?;
    if jobs == Some(0) {
        return Err(CliError::flag("jobs", "must be at least 1"));
    }
    Ok(jobs)
}
