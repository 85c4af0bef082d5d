//! Run manifest: configuration echo, versions and the equivalent command.

use crate::config::{Experiment, ExperimentConfig};
use crate::output::OutDir;
use crate::RunError;

pub const MANIFEST_FILE: &str = "manifest.txt";
/// Wall time and thread count; not part of the reproducible outputs.
pub const TIMING_FILE: &str = "timing.txt";

/// The single command reproducing each acceptance criterion.
pub const CRITERIA: [(u32, &str, &str); 10] = [
    (1, "exact geometry and oracle suite", "dsf run oracle-check --seed 1"),
    (2, "renewal tails", "dsf run renewal-stats --lambda 0.0125 --replications 100 --renewals 200 --seed 2"),
    (3, "coalescence tail", "dsf run coalescence-tail --z0 1,2,3 --replications 4000 --seed 3"),
    (4, "Laplace conditions", "dsf run laplace-check --lambda 0.0125 --m0 14 --transitions 100000 --seed 4"),
    (5, "Donsker proxy", "dsf run donsker --lambda 0.0125 --n 20 --replications 2000 --seed 5"),
    (6, "resampled process law", "dsf run resample-check --replications 5000 --seed 6"),
    (7, "dual forest", "dsf run dual-check --window 20 --replications 100 --seed 7"),
    (8, "eta statistic", "dsf run eta --lambda 0.0125 --n 10 --t 1 --replications 2000 --seed 8"),
    (9, "RST sublinearity", "dsf run rst-chi --r 25,50,100,200 --r-out-factor 4 --replications 100 --seed 9"),
    (10, "determinism", "dsf run <any> twice, and with --threads 1 vs --threads 8; compare SHA-256 of outputs"),
];

/// Criteria served by an experiment.
pub fn criteria_for(e: Experiment) -> Vec<u32> {
    let mut v: Vec<u32> = CRITERIA
        .iter()
        .filter(|(_, _, cmd)| cmd.starts_with(&format!("dsf run {} ", e.name())))
        .map(|c| c.0)
        .collect();
    v.push(10);
    v
}

/// The command that reruns `cfg`.
pub fn invocation(cfg: &ExperimentConfig) -> String {
    let mut s = format!("dsf run {}", cfg.experiment);
    for (k, v) in cfg.echo() {
        if k == "experiment" || v == "auto" {
            continue;
        }
        s.push_str(&format!(" --{k} {v}"));
    }
    s
}

pub fn write(cfg: &ExperimentConfig, out: &mut OutDir) -> Result<(), RunError> {
    let mut body = String::new();
    body.push_str("[run]\n");
    body.push_str(&format!("dsf_version = {}\n", env!("CARGO_PKG_VERSION")));
    body.push_str(&format!("core_version = {}\n", dsf_core::VERSION));
    body.push_str(&format!("invocation = {}\n", invocation(cfg)));
    let crit: Vec<String> = criteria_for(cfg.experiment).iter().map(u32::to_string).collect();
    body.push_str(&format!("criteria = {}\n", crit.join(",")));
    body.push_str("\n[config]\n");
    for (k, v) in cfg.echo() {
        body.push_str(&format!("{k} = {v}\n"));
    }
    body.push_str("\n[files]\n");
    for f in out.files().to_vec() {
        body.push_str(&format!("{f}\n"));
    }
    out.text(MANIFEST_FILE, &body)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_experiment_criterion_is_listed_once() {
        let mut seen = Vec::new();
        for e in Experiment::ALL {
            for c in criteria_for(e) {
                if c != 10 {
                    assert!(!seen.contains(&c));
                    seen.push(c);
                }
            }
        }
        seen.sort();
        assert_eq!(seen, (1..=9).collect::<Vec<_>>());
    }

    #[test]
    fn invocation_round_trips() {
        let mut cfg = ExperimentConfig::new(Experiment::Eta);
        cfg.lambda = 0.0125;
        let inv = invocation(&cfg);
        let args: Vec<&str> = inv.split_whitespace().collect();
        let mut settings = vec![("experiment".to_string(), args[2].to_string(), crate::config::Origin::Flag)];
        for pair in args[3..].chunks(2) {
            settings.push((pair[0].trim_start_matches("--").to_string(), pair[1].to_string(), crate::config::Origin::Flag));
        }
        let back = ExperimentConfig::from_settings(&settings).unwrap();
        assert_eq!(back.echo(), cfg.echo());
    }
}
