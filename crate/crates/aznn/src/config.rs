//! Time-varying run configuration.
//!
//! Values come from built-in defaults, then an optional TOML file, then
//! command-line overrides. Validation happens once on the merged result.
//!
//! ```toml
//! n = 3
//! seed = 10
//! formula = "4_5"
//! tau = 0.02
//! t0 = 10
//! t_end = 610
//!
//! [startup]
//! eta = 160
//! steps = 12
//!
//! [iterate]
//! eta = 1.45
//!
//! [output]
//! csv = "sqrt.csv"
//! summary = "sqrt.toml"
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::Context;
use aznn_core::engine::{required_startup, PhaseConfig, RunSpec};
use aznn_core::findiff::{builtin, FormulaKind};
use aznn_core::problems::SymmetrizerSolve;
use serde::Deserialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Problem {
    Sqrt,
    Symmetrizer,
}

impl Problem {
    pub fn label(self) -> &'static str {
        match self {
            Self::Sqrt => "sqrt",
            Self::Symmetrizer => "symmetrizer",
        }
    }
}

/// A rejected configuration value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    fn new(field: &str, message: impl Into<String>) -> Self {
        Self { field: field.to_string(), message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid `{}`: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct OutputPaths {
    pub csv: Option<PathBuf>,
    pub summary: Option<PathBuf>,
    /// Directory receiving one matrix file per snapshot.
    pub snapshots: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimeVaryingConfig {
    pub problem: Problem,
    pub n: usize,
    /// Trial flow seed.
    pub seed: u64,
    /// Symmetrizer start seed.
    pub start_seed: u64,
    pub formula: FormulaKind,
    pub tau: f64,
    pub t0: f64,
    pub t_end: f64,
    pub eta_start: f64,
    pub startup_steps: usize,
    pub eta_iter: f64,
    pub eta_final: Option<f64>,
    pub final_switch_time: Option<f64>,
    pub baseline: bool,
    pub snapshot_times: Vec<f64>,
    pub solve: SymmetrizerSolve,
    pub output: OutputPaths,
}

impl TimeVaryingConfig {
    pub fn sqrt_default() -> Self {
        Self {
            problem: Problem::Sqrt,
            n: 3,
            seed: 10,
            start_seed: 0,
            formula: FormulaKind::FourFive45,
            tau: 0.02,
            t0: 10.0,
            t_end: 610.0,
            eta_start: 160.0,
            startup_steps: 12,
            eta_iter: 1.45,
            eta_final: None,
            final_switch_time: None,
            baseline: false,
            snapshot_times: Vec::new(),
            solve: SymmetrizerSolve::Full,
            output: OutputPaths::default(),
        }
    }

    pub fn symmetrizer_default() -> Self {
        Self {
            problem: Problem::Symmetrizer,
            n: 5,
            seed: 11,
            start_seed: 5,
            t_end: 3610.0,
            eta_start: 8.1,
            eta_iter: 0.9,
            solve: SymmetrizerSolve::Reduced,
            ..Self::sqrt_default()
        }
    }

    pub fn default_for(problem: Problem) -> Self {
        match problem {
            Problem::Sqrt => Self::sqrt_default(),
            Problem::Symmetrizer => Self::symmetrizer_default(),
        }
    }

    pub fn apply_file(&mut self, file: &FileConfig) -> Result<(), ConfigError> {
        if let Some(p) = &file.problem {
            if p != self.problem.label() {
                return Err(ConfigError::new(
                    "problem",
                    format!("file is for `{p}` but the command runs `{}`", self.problem.label()),
                ));
            }
        }
        set(&mut self.n, file.n);
        set(&mut self.seed, file.seed);
        set(&mut self.start_seed, file.start_seed);
        if let Some(f) = &file.formula {
            self.formula = parse_formula(f)?;
        }
        set(&mut self.tau, file.tau);
        set(&mut self.t0, file.t0);
        set(&mut self.t_end, file.t_end);
        set(&mut self.baseline, file.baseline);
        if let Some(s) = &file.snapshot_times {
            self.snapshot_times = s.clone();
        }
        if let Some(s) = &file.solve {
            self.solve = parse_solve(s)?;
        }
        if let Some(s) = &file.startup {
            set(&mut self.eta_start, s.eta);
            set(&mut self.startup_steps, s.steps);
        }
        if let Some(s) = &file.iterate {
            set(&mut self.eta_iter, s.eta);
        }
        if let Some(s) = &file.r#final {
            self.eta_final = s.eta.or(self.eta_final);
            self.final_switch_time = s.switch_time.or(self.final_switch_time);
        }
        if let Some(o) = &file.output {
            self.output.csv = o.csv.clone().or(self.output.csv.take());
            self.output.summary = o.summary.clone().or(self.output.summary.take());
            self.output.snapshots = o.snapshots.clone().or(self.output.snapshots.take());
        }
        Ok(())
    }

    /// Phase settings actually used; baseline mode collapses them to basic ZNN.
    pub fn phase_config(&self) -> PhaseConfig {
        let formula = builtin(self.formula);
        if self.baseline {
            return PhaseConfig::basic(self.eta_iter, &formula);
        }
        let cfg = PhaseConfig::new(self.eta_start, self.startup_steps, self.eta_iter);
        match (self.eta_final, self.final_switch_time) {
            (Some(e), Some(t)) => cfg.with_final(e, t),
            _ => cfg,
        }
    }

    pub fn run_spec(&self) -> RunSpec {
        RunSpec {
            cfg: self.phase_config(),
            formula: builtin(self.formula),
            tau: self.tau,
            t0: self.t0,
            t_end: self.t_end,
            snapshot_times: self.snapshot_times.clone(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n == 0 {
            return Err(ConfigError::new("n", "must be at least 1"));
        }
        if self.problem == Problem::Symmetrizer && self.n > 12 {
            return Err(ConfigError::new("n", "symmetrizer runs solve n²×n² systems; use n ≤ 12"));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(ConfigError::new("tau", "must be finite and positive"));
        }
        if !self.t0.is_finite() {
            return Err(ConfigError::new("t0", "must be finite"));
        }
        if !(self.t_end > self.t0 && self.t_end.is_finite()) {
            return Err(ConfigError::new("t_end", "must be finite and greater than t0"));
        }
        positive("startup.eta", self.eta_start)?;
        positive("iterate.eta", self.eta_iter)?;
        let formula = builtin(self.formula);
        let cfg = self.phase_config();
        let needed = required_startup(&formula);
        if cfg.startup_steps < needed {
            return Err(ConfigError::new(
                "startup.steps",
                format!("formula {} needs at least {needed} start-up steps", formula.label()),
            ));
        }
        if !self.baseline {
            match (self.eta_final, self.final_switch_time) {
                (None, None) => {}
                (Some(e), Some(t)) => {
                    positive("final.eta", e)?;
                    if !(t > self.t0 && t < self.t_end) {
                        return Err(ConfigError::new("final.switch_time", "must lie strictly between t0 and t_end"));
                    }
                }
                (Some(_), None) => return Err(ConfigError::new("final.switch_time", "required when final.eta is set")),
                (None, Some(_)) => return Err(ConfigError::new("final.eta", "required when final.switch_time is set")),
            }
        }
        if let Some(t) = self.snapshot_times.iter().find(|t| !(**t >= self.t0 && **t <= self.t_end)) {
            return Err(ConfigError::new("snapshot_times", format!("{t} lies outside [t0, t_end]")));
        }
        let spec = self.run_spec();
        if spec.total_steps() <= cfg.startup_steps {
            return Err(ConfigError::new(
                "t_end",
                format!("horizon holds {} steps, fewer than the start-up length", spec.total_steps()),
            ));
        }
        spec.validate().map_err(|e| ConfigError::new("config", e.to_string()))
    }
}

fn set<T: Copy>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn positive(field: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::new(field, "must be finite and positive"))
    }
}

pub fn parse_formula(s: &str) -> Result<FormulaKind, ConfigError> {
    FormulaKind::parse(s).ok_or_else(|| ConfigError::new("formula", format!("unknown formula `{s}`; use 1_2, 2_3 or 4_5")))
}

pub fn parse_solve(s: &str) -> Result<SymmetrizerSolve, ConfigError> {
    match s {
        "full" => Ok(SymmetrizerSolve::Full),
        "reduced" => Ok(SymmetrizerSolve::Reduced),
        _ => Err(ConfigError::new("solve", format!("unknown solve `{s}`; use full or reduced"))),
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub problem: Option<String>,
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub start_seed: Option<u64>,
    pub formula: Option<String>,
    pub tau: Option<f64>,
    pub t0: Option<f64>,
    pub t_end: Option<f64>,
    pub baseline: Option<bool>,
    pub snapshot_times: Option<Vec<f64>>,
    pub solve: Option<String>,
    pub startup: Option<StartupSection>,
    pub iterate: Option<IterateSection>,
    pub r#final: Option<FinalSection>,
    pub output: Option<OutputSection>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartupSection {
    pub eta: Option<f64>,
    pub steps: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IterateSection {
    pub eta: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FinalSection {
    pub eta: Option<f64>,
    pub switch_time: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub csv: Option<PathBuf>,
    pub summary: Option<PathBuf>,
    pub snapshots: Option<PathBuf>,
}

pub fn parse_file_config(text: &str) -> anyhow::Result<FileConfig> {
    Ok(toml::from_str(text)?)
}

pub fn load_file_config(path: &Path) -> anyhow::Result<FileConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_file_config(&text).with_context(|| format!("parsing {}", path.display()))
}
