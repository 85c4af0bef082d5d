//! Experiment configuration: a flat `key = value` file plus flag overrides.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Experiment {
    Trace,
    RenewalStats,
    CoalescenceTail,
    LaplaceCheck,
    Donsker,
    Eta,
    DualCheck,
    RstChi,
    GammaSigma,
    OracleCheck,
    ResampleCheck,
}

impl Experiment {
    pub const ALL: [Experiment; 11] = [
        Experiment::Trace,
        Experiment::RenewalStats,
        Experiment::CoalescenceTail,
        Experiment::LaplaceCheck,
        Experiment::Donsker,
        Experiment::Eta,
        Experiment::DualCheck,
        Experiment::RstChi,
        Experiment::GammaSigma,
        Experiment::OracleCheck,
        Experiment::ResampleCheck,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Trace => "trace",
            Experiment::RenewalStats => "renewal-stats",
            Experiment::CoalescenceTail => "coalescence-tail",
            Experiment::LaplaceCheck => "laplace-check",
            Experiment::Donsker => "donsker",
            Experiment::Eta => "eta",
            Experiment::DualCheck => "dual-check",
            Experiment::RstChi => "rst-chi",
            Experiment::GammaSigma => "gamma-sigma",
            Experiment::OracleCheck => "oracle-check",
            Experiment::ResampleCheck => "resample-check",
        }
    }

    /// Tag mixed into every derived seed.
    pub fn tag(&self) -> u64 {
        Experiment::ALL.iter().position(|e| e == self).unwrap() as u64 + 1
    }

    fn default_replications(&self) -> u64 {
        match self {
            Experiment::Trace => 1,
            Experiment::RenewalStats => 100,
            Experiment::CoalescenceTail => 4000,
            Experiment::LaplaceCheck => 1000,
            Experiment::Donsker => 2000,
            Experiment::Eta => 2000,
            Experiment::DualCheck => 100,
            Experiment::RstChi => 100,
            Experiment::GammaSigma => 200,
            Experiment::OracleCheck => 10_000,
            Experiment::ResampleCheck => 5000,
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Experiment::ALL
            .iter()
            .copied()
            .find(|e| e.name() == s)
            .ok_or_else(|| format!("unknown experiment '{s}'"))
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("{key}: {message}")]
    Value { key: String, message: String },
    #[error("{0}")]
    Other(String),
}

/// Where a setting came from; used to reference file lines in errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    File(usize),
    Flag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub lambda: f64,
    pub kappa: u32,
    pub seed: u64,
    pub replications: u64,
    pub out: PathBuf,
    /// Worker threads; does not affect any output.
    pub threads: usize,

    // trace / renewal-stats
    pub k: usize,
    pub steps: u64,
    /// Spacing between starting walkers, in units of `1/√λ`.
    pub spacing: f64,
    pub renewals: u64,
    pub step_cap: u64,

    // coalescence-tail
    pub z0: Vec<f64>,
    pub t_grid: Vec<f64>,
    pub t_cap: Option<f64>,

    // laplace-check
    pub m0: Option<f64>,
    pub bin_width: f64,
    pub span: f64,
    pub transitions: u64,
    pub max_renewals: u64,

    // donsker / eta / gamma-sigma
    pub n: Option<u32>,
    pub t: f64,
    pub epsilon: Vec<f64>,
    pub gamma: Option<f64>,
    pub sigma: Option<f64>,
    pub gs_replications: u64,
    pub gs_renewals: u64,

    // dual-check
    pub window: f64,

    // rst-chi
    pub r: Vec<f64>,
    pub r_out_factor: Vec<f64>,
    pub bootstrap: u64,
}

/// Every accepted key, in the order they are documented.
pub const KEYS: &[&str] = &[
    "experiment",
    "lambda",
    "kappa",
    "seed",
    "replications",
    "out",
    "threads",
    "k",
    "steps",
    "spacing",
    "renewals",
    "step-cap",
    "z0",
    "t-grid",
    "t-cap",
    "m0",
    "bin-width",
    "span",
    "transitions",
    "max-renewals",
    "n",
    "t",
    "epsilon",
    "gamma",
    "sigma",
    "gs-replications",
    "gs-renewals",
    "window",
    "r",
    "r-out-factor",
    "bootstrap",
];

fn default_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        ExperimentConfig {
            experiment,
            lambda: 1.0,
            kappa: 6,
            seed: 0,
            replications: experiment.default_replications(),
            out: PathBuf::from("out"),
            threads: default_threads(),
            k: if experiment == Experiment::Trace { 2 } else { 1 },
            steps: match experiment {
                Experiment::OracleCheck => 100_000,
                Experiment::ResampleCheck => 5,
                _ => 1000,
            },
            spacing: 1.0,
            renewals: if experiment == Experiment::GammaSigma { 30 } else { 200 },
            step_cap: dsf_core::renewal::DEFAULT_STEP_CAP,
            z0: vec![1.0, 2.0, 3.0],
            t_grid: vec![100.0, 150.0, 200.0, 300.0, 400.0, 500.0, 600.0, 700.0, 850.0, 1000.0],
            t_cap: None,
            m0: None,
            bin_width: 2.0,
            span: 20.0,
            transitions: 100_000,
            max_renewals: 50,
            n: None,
            t: 1.0,
            epsilon: vec![0.05, 0.1, 0.2],
            gamma: None,
            sigma: None,
            gs_replications: 200,
            gs_renewals: 30,
            window: 20.0,
            r: vec![25.0, 50.0, 100.0, 200.0],
            r_out_factor: vec![4.0],
            bootstrap: 1000,
        }
    }

    /// Builds a configuration from `(key, value, origin)` settings applied
    /// in order; the experiment must be among them.
    pub fn from_settings(settings: &[(String, String, Origin)]) -> Result<Self, ConfigError> {
        let exp = settings
            .iter()
            .rev()
            .find(|(k, _, _)| normalize(k) == "experiment")
            .ok_or_else(|| ConfigError::Other("no experiment given".into()))?;
        let experiment = exp
            .1
            .trim()
            .parse::<Experiment>()
            .map_err(|m| located(exp.2, "experiment", m))?;
        let mut cfg = ExperimentConfig::new(experiment);
        for (k, v, origin) in settings {
            cfg.set(k, v).map_err(|m| located(*origin, &normalize(k), m))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies one setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let v = value.trim();
        match normalize(key).as_str() {
            "experiment" => self.experiment = v.parse()?,
            "lambda" => self.lambda = positive(v)?,
            "kappa" => {
                let k: u32 = int(v)?;
                if !(dsf_core::explore::MIN_KAPPA..=1000).contains(&k) {
                    return Err(format!("must be an integer in [6, 1000], got {k}"));
                }
                self.kappa = k;
            }
            "seed" => self.seed = int(v)?,
            "replications" => self.replications = count(v, 1, 100_000_000)?,
            "out" => {
                if v.is_empty() {
                    return Err("must not be empty".into());
                }
                self.out = PathBuf::from(v);
            }
            "threads" => self.threads = count(v, 1, 4096)? as usize,
            "k" => self.k = count(v, 1, 16)? as usize,
            "steps" => self.steps = count(v, 1, 100_000_000)?,
            "spacing" => self.spacing = positive(v)?,
            "renewals" => self.renewals = count(v, 1, 10_000_000)?,
            "step-cap" => self.step_cap = count(v, 1, 1_000_000_000)?,
            "z0" => self.z0 = list(v, positive)?,
            "t-grid" => self.t_grid = grid(v)?,
            "t-cap" => self.t_cap = Some(positive(v)?),
            "m0" => self.m0 = Some(positive(v)?),
            "bin-width" => self.bin_width = positive(v)?,
            "span" => self.span = positive(v)?,
            "transitions" => self.transitions = count(v, 1, 100_000_000)?,
            "max-renewals" => self.max_renewals = count(v, 1, 1_000_000)?,
            "n" => self.n = Some(count(v, 1, 10_000)? as u32),
            "t" => self.t = positive(v)?,
            "epsilon" => self.epsilon = increasing(list(v, positive)?)?,
            "gamma" => self.gamma = Some(positive(v)?),
            "sigma" => self.sigma = Some(positive(v)?),
            "gs-replications" => self.gs_replications = count(v, 1, 10_000_000)?,
            "gs-renewals" => self.gs_renewals = count(v, 2, 10_000_000)?,
            "window" => self.window = positive(v)?,
            "r" => self.r = increasing(list(v, positive)?)?,
            "r-out-factor" => {
                let f = list(v, positive)?;
                if f.iter().any(|&x| x < 2.0) {
                    return Err("factors must be at least 2".into());
                }
                self.r_out_factor = f;
            }
            "bootstrap" => self.bootstrap = count(v, 10, 1_000_000)?,
            other => return Err(format!("unknown key '{other}'")),
        }
        Ok(())
    }

    /// Cross-field checks.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |key: &str, message: String| ConfigError::Value {
            key: key.into(),
            message,
        };
        if let Some(cap) = self.t_cap {
            let max = self.t_grid.last().copied().unwrap_or(0.0);
            if cap < max {
                return Err(bad("t-cap", format!("must be at least the largest grid time {max}")));
            }
        }
        let min_m0 = 2.0 * (self.kappa as f64 + 1.0);
        if self.m0.is_some_and(|m| m < min_m0) {
            return Err(bad("m0", format!("must be at least 2(kappa + 1) = {min_m0}")));
        }
        if self.span < self.bin_width {
            return Err(bad("span", "must be at least bin-width".into()));
        }
        if self.gamma.is_some() != self.sigma.is_some() {
            return Err(bad("gamma", "gamma and sigma must be given together".into()));
        }
        Ok(())
    }

    pub fn m0(&self) -> f64 {
        self.m0.unwrap_or(2.0 * (self.kappa as f64 + 1.0))
    }

    pub fn t_cap(&self) -> f64 {
        self.t_cap
            .unwrap_or(10.0 * self.t_grid.last().copied().unwrap_or(1.0))
    }

    pub fn n_or(&self, default: u32) -> u32 {
        self.n.unwrap_or(default)
    }

    /// Settings that determine the outputs, as `key = value` lines.
    /// `threads` and `out` are left out on purpose.
    pub fn echo(&self) -> Vec<(String, String)> {
        let f = |x: f64| crate::output::fmt_f64(x);
        let fl = |v: &[f64]| v.iter().map(|&x| f(x)).collect::<Vec<_>>().join(",");
        let opt = |x: Option<f64>| x.map_or("auto".to_string(), f);
        vec![
            ("experiment".into(), self.experiment.to_string()),
            ("lambda".into(), f(self.lambda)),
            ("kappa".into(), self.kappa.to_string()),
            ("seed".into(), self.seed.to_string()),
            ("replications".into(), self.replications.to_string()),
            ("k".into(), self.k.to_string()),
            ("steps".into(), self.steps.to_string()),
            ("spacing".into(), f(self.spacing)),
            ("renewals".into(), self.renewals.to_string()),
            ("step-cap".into(), self.step_cap.to_string()),
            ("z0".into(), fl(&self.z0)),
            ("t-grid".into(), fl(&self.t_grid)),
            ("t-cap".into(), f(self.t_cap())),
            ("m0".into(), f(self.m0())),
            ("bin-width".into(), f(self.bin_width)),
            ("span".into(), f(self.span)),
            ("transitions".into(), self.transitions.to_string()),
            ("max-renewals".into(), self.max_renewals.to_string()),
            ("n".into(), self.n.map_or("auto".into(), |n| n.to_string())),
            ("t".into(), f(self.t)),
            ("epsilon".into(), fl(&self.epsilon)),
            ("gamma".into(), opt(self.gamma)),
            ("sigma".into(), opt(self.sigma)),
            ("gs-replications".into(), self.gs_replications.to_string()),
            ("gs-renewals".into(), self.gs_renewals.to_string()),
            ("window".into(), f(self.window)),
            ("r".into(), fl(&self.r)),
            ("r-out-factor".into(), fl(&self.r_out_factor)),
            ("bootstrap".into(), self.bootstrap.to_string()),
        ]
    }
}

fn located(origin: Origin, key: &str, message: String) -> ConfigError {
    match origin {
        Origin::File(line) => ConfigError::Line {
            line,
            message: format!("{key}: {message}"),
        },
        Origin::Flag => ConfigError::Value {
            key: format!("--{key}"),
            message,
        },
    }
}

fn normalize(key: &str) -> String {
    key.trim().replace('_', "-")
}

/// Parses a flat `key = value` file. `#` starts a comment; repeated keys
/// are rejected.
pub fn parse_file(text: &str) -> Result<Vec<(String, String, Origin)>, ConfigError> {
    let mut out: Vec<(String, String, Origin)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (k, v) = content.split_once('=').ok_or(ConfigError::Line {
            line,
            message: format!("expected 'key = value', got '{content}'"),
        })?;
        let key = normalize(k);
        if !KEYS.contains(&key.as_str()) {
            return Err(ConfigError::Line {
                line,
                message: format!("unknown key '{key}'"),
            });
        }
        if let Some((_, _, Origin::File(prev))) = out.iter().find(|(kk, _, _)| *kk == key) {
            return Err(ConfigError::Line {
                line,
                message: format!("duplicate key '{key}' (first set on line {prev})"),
            });
        }
        out.push((key, v.trim().to_string(), Origin::File(line)));
    }
    Ok(out)
}

/// Parses `--key value` and `--key=value` arguments.
pub fn flag_settings(args: &[String]) -> Result<Vec<(String, String, Origin)>, ConfigError> {
    let mut out = Vec::new();
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let Some(key) = a.strip_prefix("--") else {
            return Err(ConfigError::Other(format!("expected a --key, got '{a}'")));
        };
        let (key, value) = match key.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = it
                    .next()
                    .ok_or_else(|| ConfigError::Other(format!("--{key} needs a value")))?;
                (key.to_string(), v.clone())
            }
        };
        let norm = key.replace('_', "-");
        if !KEYS.contains(&norm.as_str()) {
            return Err(ConfigError::Other(format!("unknown flag '--{key}'")));
        }
        out.push((norm, value, Origin::Flag));
    }
    Ok(out)
}

fn int<T: FromStr>(v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("expected an integer, got '{v}'"))
}

fn count(v: &str, lo: u64, hi: u64) -> Result<u64, String> {
    let x: u64 = int(v)?;
    if x < lo || x > hi {
        return Err(format!("must be in [{lo}, {hi}], got {x}"));
    }
    Ok(x)
}

fn real(v: &str) -> Result<f64, String> {
    let x: f64 = v.parse().map_err(|_| format!("expected a number, got '{v}'"))?;
    if !x.is_finite() {
        return Err(format!("must be finite, got '{v}'"));
    }
    Ok(x)
}

fn positive(v: &str) -> Result<f64, String> {
    let x = real(v)?;
    if x <= 0.0 {
        return Err(format!("must be positive, got {x}"));
    }
    Ok(x)
}

fn list(v: &str, item: fn(&str) -> Result<f64, String>) -> Result<Vec<f64>, String> {
    let xs: Vec<f64> = v
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(item)
        .collect::<Result<_, _>>()?;
    if xs.is_empty() {
        return Err("expected a non-empty comma-separated list".into());
    }
    Ok(xs)
}

fn increasing(xs: Vec<f64>) -> Result<Vec<f64>, String> {
    if xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err("values must be strictly increasing".into());
    }
    Ok(xs)
}

/// `a..b` (ten log-spaced points), `a..b:m` (m points) or an explicit list.
fn grid(v: &str) -> Result<Vec<f64>, String> {
    let Some((a, rest)) = v.split_once("..") else {
        return increasing(list(v, positive)?);
    };
    let (b, m) = match rest.split_once(':') {
        Some((b, m)) => (b, count(m.trim(), 2, 10_000)? as usize),
        None => (rest, 10),
    };
    let (a, b) = (positive(a.trim())?, positive(b.trim())?);
    if b <= a {
        return Err("grid end must exceed its start".into());
    }
    let (la, lb) = (a.ln(), b.ln());
    let mut g: Vec<f64> = (0..m)
        .map(|i| (la + (lb - la) * i as f64 / (m - 1) as f64).exp())
        .collect();
    g[0] = a;
    g[m - 1] = b;
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags(pairs: &[(&str, &str)]) -> Vec<(String, String, Origin)> {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string(), Origin::Flag))
            .collect()
    }

    #[test]
    fn file_then_flags() {
        let mut s = parse_file("experiment = eta\n# comment\nlambda = 0.5\nseed = 3 # trailing\n").unwrap();
        s.extend(flags(&[("seed", "9")]));
        let c = ExperimentConfig::from_settings(&s).unwrap();
        assert_eq!(c.experiment, Experiment::Eta);
        assert_eq!(c.lambda, 0.5);
        assert_eq!(c.seed, 9);
    }

    #[test]
    fn errors_reference_lines() {
        let e = parse_file("experiment = eta\nbogus = 1\n").unwrap_err();
        assert_eq!(e, ConfigError::Line { line: 2, message: "unknown key 'bogus'".into() });
        let s = parse_file("experiment = eta\nkappa = 5\n").unwrap();
        match ExperimentConfig::from_settings(&s).unwrap_err() {
            ConfigError::Line { line, .. } => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(parse_file("seed = 1\nseed = 2\n").is_err());
        assert!(parse_file("just text\n").is_err());
    }

    #[test]
    fn ranges_are_enforced() {
        let base = |k: &str, v: &str| ExperimentConfig::from_settings(&flags(&[("experiment", "trace"), (k, v)]));
        assert!(base("lambda", "0").is_err());
        assert!(base("lambda", "nan").is_err());
        assert!(base("replications", "0").is_err());
        assert!(base("m0", "13").is_err());
        assert!(base("m0", "14").is_ok());
        assert!(base("gamma", "3").is_err());
        assert!(base("t-cap", "10").is_err());
        assert!(base("nope", "1").is_err());
    }

    #[test]
    fn grid_syntax() {
        let g = grid("10..1000:3").unwrap();
        assert_eq!(g[0], 10.0);
        assert!((g[1] - 100.0).abs() < 1e-9);
        assert_eq!(g[2], 1000.0);
        assert_eq!(grid("10..1000").unwrap().len(), 10);
        assert_eq!(grid("1,2,5").unwrap(), vec![1.0, 2.0, 5.0]);
        assert!(grid("5,2").is_err());
    }
}
