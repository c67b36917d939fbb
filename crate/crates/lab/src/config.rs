//! Plain-text experiment configs.
//!
//! One `key = value` per line, `#` starts a comment, lists are comma
//! separated. The first non-comment line must be `version = 1`. Keys:
//!
//! | key | value |
//! |---|---|
//! | `alpha` | tail exponent in (0,1) |
//! | `tail_constant` | per-side constant c₀ of P(J ≥ n) = L(n)n^(−α) |
//! | `slowly_varying` | `constant` or `log_corrected` |
//! | `p` | density of +1 colors, in (0,1) |
//! | `n` | window size, or a list for n-grid commands |
//! | `slice_times` | macroscopic times t ≥ 0 (also the V(t,1) grid of `analytic`) |
//! | `t_max` | backward cutoff: an integer, or `auto:c` for ⌈c·n^α·ln n⌉ |
//! | `reps` | replicate count |
//! | `seed` | master seed (required by every stochastic command) |
//! | `out` | output directory |
//! | `threads` | worker threads; results do not depend on it |
//! | `k` | lattice distances for `coalesce-prob` |
//! | `t_grid` | step counts for `heat-kernel` |
//! | `x_grid` | macroscopic positions written by `simulate-field` |
//! | `escape_radius` | distance at which a difference walk counts as escaped |
//! | `bump_center`, `bump_width` | Gaussian test function for `fgn-test` |
//! | `threshold.*` | acceptance thresholds, see [`Thresholds`] |

use crate::error::{LabError, Result};
use lrvoter_core::{SlowlyVarying, StepLaw};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::PathBuf;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Command {
    Analytic,
    SimulateField,
    CoalesceProb,
    HeatKernel,
    Hurst,
    GaussTest,
    FgnTest,
    ComponentScaling,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Analytic => "analytic",
            Command::SimulateField => "simulate-field",
            Command::CoalesceProb => "coalesce-prob",
            Command::HeatKernel => "heat-kernel",
            Command::Hurst => "hurst",
            Command::GaussTest => "gauss-test",
            Command::FgnTest => "fgn-test",
            Command::ComponentScaling => "component-scaling",
        }
    }

    pub fn is_stochastic(self) -> bool {
        !matches!(self, Command::Analytic | Command::HeatKernel)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TMaxPolicy {
    Explicit(u64),
    /// ⌈c·n^α·ln n⌉.
    Scaled(f64),
}

impl TMaxPolicy {
    pub fn resolve(self, law: &StepLaw, n: u64) -> u64 {
        match self {
            TMaxPolicy::Explicit(t) => t,
            TMaxPolicy::Scaled(c) => lrvoter_core::coalesce::default_t_max(law, n, c),
        }
    }
}

/// Acceptance thresholds. Defaults are fixed before any run.
#[derive(Debug, Clone, PartialEq)]
pub struct Thresholds {
    /// |MC − Fourier| ≤ sigmas·stderr + allowance.
    pub coalesce_sigmas: f64,
    pub coalesce_allowance: f64,
    /// Var(S_n(1,0)/σ_n) ∈ [1 − band, 1 + band].
    pub variance_band: f64,
    /// |mean H − (1+α)/2| ≤ tolerance.
    pub hurst_tolerance: f64,
    pub max_abs_skewness: f64,
    pub max_abs_excess_kurtosis: f64,
    /// KS distance < factor·1.63/√reps.
    pub ks_factor: f64,
    /// |Corr − V(t,1)/V(0,1)| ≤ sigmas·stderr + allowance.
    pub correlation_sigmas: f64,
    pub correlation_allowance: f64,
    pub supnorm_slope_tolerance: f64,
    pub max_leak: f64,
    /// occupation exponent ≤ α + margin.
    pub occupation_margin: f64,
    pub qnorm_relative: f64,
    /// |Var F / fgn_variance − 1| ≤ this.
    pub fgn_relative: f64,
    /// second-moment exponent ≤ 2α + margin.
    pub moment_margin: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            coalesce_sigmas: 3.0,
            coalesce_allowance: 1e-3,
            variance_band: 0.1,
            hurst_tolerance: 0.05,
            max_abs_skewness: 0.1,
            max_abs_excess_kurtosis: 0.2,
            ks_factor: 1.5,
            correlation_sigmas: 3.0,
            correlation_allowance: 0.05,
            supnorm_slope_tolerance: 0.1,
            max_leak: 1e-3,
            occupation_margin: 0.1,
            qnorm_relative: 1e-4,
            fgn_relative: 0.1,
            moment_margin: 0.15,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub alpha: f64,
    pub tail_constant: f64,
    pub slowly_varying: SlowlyVarying,
    pub p: f64,
    pub n: Vec<usize>,
    pub slice_times: Vec<f64>,
    pub t_max: TMaxPolicy,
    pub reps: u64,
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub threads: usize,
    pub k: Vec<i64>,
    pub t_grid: Vec<u64>,
    pub x_grid: Vec<f64>,
    pub escape_radius: i64,
    pub bump_center: f64,
    pub bump_width: f64,
    pub thresholds: Thresholds,
}

impl ExperimentConfig {
    /// Defaults for one subcommand; they reproduce the acceptance settings.
    pub fn defaults_for(command: Command) -> Self {
        let mut c = ExperimentConfig {
            alpha: 0.5,
            tail_constant: 0.5,
            slowly_varying: SlowlyVarying::Constant,
            p: 0.5,
            n: vec![1 << 14],
            slice_times: vec![0.0],
            t_max: TMaxPolicy::Scaled(8.0),
            reps: 1000,
            seed: None,
            out: PathBuf::from("out").join(command.name()),
            threads: 1,
            k: vec![1, 2, 5, 10, 20],
            t_grid: vec![],
            x_grid: (0..=16).map(|i| i as f64 / 16.0).collect(),
            escape_radius: lrvoter_core::coalesce::ESCAPE_RADIUS,
            bump_center: 0.5,
            bump_width: 1.0 / 12.0,
            thresholds: Thresholds::default(),
        };
        match command {
            Command::Analytic => {
                c.n = vec![1 << 10, 1 << 12, 1 << 14];
                c.slice_times = vec![0.0, 0.5, 1.0, 2.0];
            }
            Command::SimulateField => {
                c.n = vec![1 << 10];
                c.reps = 10;
            }
            Command::CoalesceProb => {
                c.t_max = TMaxPolicy::Explicit(1_000_000);
                c.reps = 200_000;
            }
            Command::HeatKernel => {
                c.t_grid = (0..=8).map(|k| (100.0 * 10f64.powf(0.25 * k as f64)).round() as u64).collect();
                c.n = (8..=12).map(|e| 1usize << e).collect();
            }
            Command::Hurst => c.reps = 200,
            Command::GaussTest => {
                c.n = vec![1 << 10, 1 << 12, 1 << 14];
                c.slice_times = vec![0.0];
            }
            Command::FgnTest => {}
            Command::ComponentScaling => {
                c.n = (9..=13).map(|e| 1usize << e).collect();
                c.reps = 200;
            }
        }
        c
    }

    /// Apply a config file body on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let mut version = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| LabError::ConfigSyntax { line: idx + 1, reason: format!("expected key = value, got `{line}`") })?;
            let (key, value) = (key.trim(), value.trim());
            if version.is_none() {
                if key != "version" {
                    return Err(LabError::ConfigSyntax { line: idx + 1, reason: "first setting must be `version`".into() });
                }
                let v: u32 = parse(key, value)?;
                if v != CONFIG_VERSION {
                    return Err(LabError::ConfigVersion(v, CONFIG_VERSION));
                }
                version = Some(v);
                continue;
            }
            self.set(key, value)?;
        }
        if version.is_none() {
            return Err(LabError::ConfigSyntax { line: 0, reason: "empty config: `version` missing".into() });
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let th = &mut self.thresholds;
        match key {
            "alpha" => self.alpha = parse(key, value)?,
            "tail_constant" => self.tail_constant = parse(key, value)?,
            "slowly_varying" => {
                self.slowly_varying = match value {
                    "constant" => SlowlyVarying::Constant,
                    "log_corrected" => SlowlyVarying::LogCorrected,
                    _ => return Err(bad(key, "expected `constant` or `log_corrected`")),
                }
            }
            "p" => self.p = parse(key, value)?,
            "n" => self.n = parse_list(key, value)?,
            "slice_times" => self.slice_times = parse_list(key, value)?,
            "t_max" => {
                self.t_max = match value.strip_prefix("auto") {
                    Some("") => TMaxPolicy::Scaled(8.0),
                    Some(rest) => TMaxPolicy::Scaled(parse(key, rest.strip_prefix(':').unwrap_or(rest))?),
                    None => TMaxPolicy::Explicit(parse(key, value)?),
                }
            }
            "reps" => self.reps = parse(key, value)?,
            "seed" => self.seed = Some(parse(key, value)?),
            "out" => self.out = PathBuf::from(value),
            "threads" => self.threads = parse(key, value)?,
            "k" => self.k = parse_list(key, value)?,
            "t_grid" => self.t_grid = parse_list(key, value)?,
            "x_grid" => self.x_grid = parse_list(key, value)?,
            "escape_radius" => self.escape_radius = parse(key, value)?,
            "bump_center" => self.bump_center = parse(key, value)?,
            "bump_width" => self.bump_width = parse(key, value)?,
            "threshold.coalesce_sigmas" => th.coalesce_sigmas = parse(key, value)?,
            "threshold.coalesce_allowance" => th.coalesce_allowance = parse(key, value)?,
            "threshold.variance_band" => th.variance_band = parse(key, value)?,
            "threshold.hurst_tolerance" => th.hurst_tolerance = parse(key, value)?,
            "threshold.max_abs_skewness" => th.max_abs_skewness = parse(key, value)?,
            "threshold.max_abs_excess_kurtosis" => th.max_abs_excess_kurtosis = parse(key, value)?,
            "threshold.ks_factor" => th.ks_factor = parse(key, value)?,
            "threshold.correlation_sigmas" => th.correlation_sigmas = parse(key, value)?,
            "threshold.correlation_allowance" => th.correlation_allowance = parse(key, value)?,
            "threshold.supnorm_slope_tolerance" => th.supnorm_slope_tolerance = parse(key, value)?,
            "threshold.max_leak" => th.max_leak = parse(key, value)?,
            "threshold.occupation_margin" => th.occupation_margin = parse(key, value)?,
            "threshold.qnorm_relative" => th.qnorm_relative = parse(key, value)?,
            "threshold.fgn_relative" => th.fgn_relative = parse(key, value)?,
            "threshold.moment_margin" => th.moment_margin = parse(key, value)?,
            "version" => return Err(bad(key, "may only appear once, first")),
            _ => return Err(bad(key, "unknown key")),
        }
        Ok(())
    }

    /// Check ranges; returns the step law the config describes.
    pub fn validate(&self, command: Command) -> Result<StepLaw> {
        let law = StepLaw::new(self.alpha, self.tail_constant, self.slowly_varying)?;
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(lrvoter_core::Error::ProbabilityOutOfRange(self.p).into());
        }
        if self.n.is_empty() || self.n.contains(&0) {
            return Err(bad("n", "need at least one window size >= 1"));
        }
        if self.slice_times.is_empty() || self.slice_times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(bad("slice_times", "need finite times >= 0"));
        }
        if let TMaxPolicy::Scaled(c) = self.t_max {
            if !(c.is_finite() && c > 0.0) {
                return Err(bad("t_max", "auto factor must be > 0"));
            }
        }
        if self.reps == 0 {
            return Err(bad("reps", "must be >= 1"));
        }
        if self.threads == 0 {
            return Err(bad("threads", "must be >= 1"));
        }
        if self.x_grid.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(bad("x_grid", "positions must lie in [0,1]"));
        }
        if self.escape_radius < 1 {
            return Err(bad("escape_radius", "must be >= 1"));
        }
        if !(self.bump_width > 0.0) {
            return Err(bad("bump_width", "must be > 0"));
        }
        if command.is_stochastic() && self.seed.is_none() {
            return Err(LabError::Missing("seed"));
        }
        match command {
            Command::Hurst if self.n.iter().any(|n| *n < 1024 || !n.is_power_of_two()) => {
                return Err(bad("n", "hurst needs powers of two >= 1024"));
            }
            Command::GaussTest | Command::FgnTest | Command::Hurst if self.reps < 2 => {
                return Err(bad("reps", "need at least 2 replicates"));
            }
            Command::ComponentScaling | Command::HeatKernel if self.n.len() < 2 => {
                return Err(bad("n", "need a grid of at least two sizes"));
            }
            Command::HeatKernel if self.t_grid.len() < 2 || self.t_grid.contains(&0) => {
                return Err(bad("t_grid", "need at least two step counts >= 1"));
            }
            _ => {}
        }
        Ok(law)
    }

    /// Canonical text form: every key in a fixed order. Parsing it back
    /// gives the same config, and its hash identifies a run.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let th = &self.thresholds;
        let list = |v: &[String]| v.join(", ");
        let _ = writeln!(s, "version = {CONFIG_VERSION}");
        let _ = writeln!(s, "alpha = {}", self.alpha);
        let _ = writeln!(s, "tail_constant = {}", self.tail_constant);
        let kind = match self.slowly_varying {
            SlowlyVarying::Constant => "constant",
            SlowlyVarying::LogCorrected => "log_corrected",
        };
        let _ = writeln!(s, "slowly_varying = {kind}");
        let _ = writeln!(s, "p = {}", self.p);
        let _ = writeln!(s, "n = {}", list(&strings(&self.n)));
        let _ = writeln!(s, "slice_times = {}", list(&strings(&self.slice_times)));
        match self.t_max {
            TMaxPolicy::Explicit(t) => writeln!(s, "t_max = {t}"),
            TMaxPolicy::Scaled(c) => writeln!(s, "t_max = auto:{c}"),
        }
        .ok();
        let _ = writeln!(s, "reps = {}", self.reps);
        if let Some(seed) = self.seed {
            let _ = writeln!(s, "seed = {seed}");
        }
        let _ = writeln!(s, "k = {}", list(&strings(&self.k)));
        let _ = writeln!(s, "t_grid = {}", list(&strings(&self.t_grid)));
        let _ = writeln!(s, "x_grid = {}", list(&strings(&self.x_grid)));
        let _ = writeln!(s, "escape_radius = {}", self.escape_radius);
        let _ = writeln!(s, "bump_center = {}", self.bump_center);
        let _ = writeln!(s, "bump_width = {}", self.bump_width);
        for (k, v) in [
            ("coalesce_sigmas", th.coalesce_sigmas),
            ("coalesce_allowance", th.coalesce_allowance),
            ("variance_band", th.variance_band),
            ("hurst_tolerance", th.hurst_tolerance),
            ("max_abs_skewness", th.max_abs_skewness),
            ("max_abs_excess_kurtosis", th.max_abs_excess_kurtosis),
            ("ks_factor", th.ks_factor),
            ("correlation_sigmas", th.correlation_sigmas),
            ("correlation_allowance", th.correlation_allowance),
            ("supnorm_slope_tolerance", th.supnorm_slope_tolerance),
            ("max_leak", th.max_leak),
            ("occupation_margin", th.occupation_margin),
            ("qnorm_relative", th.qnorm_relative),
            ("fgn_relative", th.fgn_relative),
            ("moment_margin", th.moment_margin),
        ] {
            let _ = writeln!(s, "threshold.{k} = {v}");
        }
        s
    }

    /// SHA-256 of the canonical text. `out` and `threads` are left out: they
    /// do not change any result.
    pub fn hash(&self) -> String {
        hex(&Sha256::digest(self.to_text().as_bytes()))
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn strings<T: ToString>(v: &[T]) -> Vec<String> {
    v.iter().map(|x| x.to_string()).collect()
}

fn bad(key: &str, reason: &str) -> LabError {
    LabError::ConfigValue { key: key.into(), reason: reason.into() }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value.trim().parse::<T>().map_err(|e| LabError::ConfigValue { key: key.into(), reason: format!("`{value}`: {e}") })
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    if value.trim().is_empty() {
        return Ok(vec![]);
    }
    value.split(',').map(|v| parse(key, v)).collect()
}
