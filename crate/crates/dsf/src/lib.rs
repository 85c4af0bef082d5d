//! Configured, seeded experiment runner for directed spanning forest
//! simulations. Every experiment writes CSV tables, a `summary.csv` with
//! standard errors, a `checks.csv` with pass/fail verdicts and a manifest.

use std::path::Path;
use std::time::Instant;

use thiserror::Error;

pub mod config;
pub mod experiments;
pub mod manifest;
pub mod output;
pub mod runner;

pub use config::{ConfigError, Experiment, ExperimentConfig};

use output::OutDir;
use runner::Runner;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: dsf_core::Error,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("{0}")]
    Runtime(String),
}

impl RunError {
    pub fn core(context: impl Into<String>, source: dsf_core::Error) -> Self {
        RunError::Core {
            context: context.into(),
            source,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        RunError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn csv(path: &Path, source: csv::Error) -> Self {
        RunError::Csv {
            path: path.display().to_string(),
            source,
        }
    }

    /// 1 for configuration errors, 2 for everything that fails at run time.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 1,
            _ => 2,
        }
    }
}

/// A named pass/fail verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        }
    }
}

/// One estimate with its standard error and sample size.
#[derive(Debug, Clone, PartialEq)]
pub struct Metric {
    pub name: String,
    pub value: f64,
    pub se: f64,
    pub n: u64,
}

/// What an experiment reports back besides its files.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub metrics: Vec<Metric>,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn metric(&mut self, name: &str, value: f64, se: f64, n: u64) {
        self.metrics.push(Metric {
            name: name.to_string(),
            value,
            se,
            n,
        });
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check::new(name, passed, detail));
    }

    pub fn get(&self, name: &str) -> Option<&Metric> {
        self.metrics.iter().find(|m| m.name == name)
    }

    pub fn get_check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Runs one experiment and writes all its outputs under `cfg.out`.
pub fn run(cfg: &ExperimentConfig) -> Result<Report, RunError> {
    cfg.validate()?;
    let started = Instant::now();
    let runner = Runner::new(cfg)?;
    let mut out = OutDir::create(&cfg.out)?;
    let report = experiments::dispatch(cfg, &runner, &mut out)?;
    let summary: Vec<_> = report
        .metrics
        .iter()
        .map(|m| row![m.name.as_str(), m.value, m.se, m.n])
        .collect();
    out.csv("summary.csv", &["metric", "value", "se", "n"], &summary)?;
    let checks: Vec<_> = report
        .checks
        .iter()
        .map(|c| row![c.name.as_str(), c.passed, c.detail.as_str()])
        .collect();
    out.csv("checks.csv", &["check", "passed", "detail"], &checks)?;
    manifest::write(cfg, &mut out)?;
    // wall time and thread count vary between identical runs, so they stay
    // out of the manifest
    let timing = format!(
        "wall_seconds = {:.3}\nthreads = {}\n",
        started.elapsed().as_secs_f64(),
        cfg.threads
    );
    let path = out.path(manifest::TIMING_FILE);
    std::fs::write(&path, timing).map_err(|e| RunError::io(&path, e))?;
    Ok(report)
}
