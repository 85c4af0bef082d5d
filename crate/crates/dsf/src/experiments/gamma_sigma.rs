//! Renewal increment moments `γ = E[Δy]`, `σ = sd(Δx)`.

use dsf_core::scaling::{GammaSigma, RenewalIncrements};
use dsf_core::stats::ks_two_sample;

use super::{core, pooled_increments};
use crate::config::ExperimentConfig;
use crate::output::OutDir;
use crate::runner::Runner;
use crate::{row, Report, RunError};

pub fn run(cfg: &ExperimentConfig, runner: &Runner, out: &mut OutDir) -> Result<Report, RunError> {
    let mut report = Report::default();
    let (chains, gs) = pooled_increments(cfg, runner, 0, cfg.replications, cfg.renewals)?;
    record(&gs, &mut report);
    write_tables(&chains, &gs, out)?;
    increment_checks(&chains, cfg.kappa, &mut report)?;
    Ok(report)
}

pub(crate) fn record(gs: &GammaSigma, report: &mut Report) {
    report.metric("gamma", gs.gamma, gs.gamma_se, gs.n as u64);
    report.metric("sigma", gs.sigma, gs.sigma_se, gs.n as u64);
    report.metric("gamma_first", gs.gamma_first, f64::NAN, gs.n_first as u64);
    report.metric("sigma_first", gs.sigma_first, f64::NAN, gs.n_first as u64);
}

pub(crate) fn write_tables(chains: &[RenewalIncrements], gs: &GammaSigma, out: &mut OutDir) -> Result<(), RunError> {
    out.csv(
        "gamma_sigma.csv",
        &["estimate", "value", "se", "n"],
        &[
            row!["gamma", gs.gamma, gs.gamma_se, gs.n],
            row!["sigma", gs.sigma, gs.sigma_se, gs.n],
            row!["gamma_first", gs.gamma_first, f64::NAN, gs.n_first],
            row!["sigma_first", gs.sigma_first, f64::NAN, gs.n_first],
        ],
    )?;
    let mut rows = Vec::new();
    for (c, inc) in chains.iter().enumerate() {
        for (j, &(dx, dy)) in inc.first.iter().chain(&inc.stationary).enumerate() {
            rows.push(row![c, j as u64 + 1, dx, dy]);
        }
    }
    out.csv("increments.csv", &["chain", "ell", "dx", "dy"], &rows)
}

/// Minimal ordinate gain and symmetry of the stationary increments.
pub(crate) fn increment_checks(chains: &[RenewalIncrements], kappa: u32, report: &mut Report) -> Result<(), RunError> {
    let dx: Vec<f64> = chains.iter().flat_map(|c| c.stationary.iter().map(|p| p.0)).collect();
    let min_dy = chains
        .iter()
        .flat_map(|c| c.first.iter().chain(&c.stationary).map(|p| p.1))
        .fold(f64::INFINITY, f64::min);
    let need = kappa as f64 + 1.0;
    report.metric("min_increment_dy", min_dy, 0.0, dx.len() as u64);
    report.check(
        "increment_dy_at_least_kappa_plus_1",
        min_dy >= need,
        format!("min dy {min_dy:.6} vs {need}"),
    );
    let neg: Vec<f64> = dx.iter().map(|x| -x).collect();
    let ks = core("symmetry test", ks_two_sample(&dx, &neg))?;
    report.metric("symmetry_ks_p", ks.p_value, f64::NAN, dx.len() as u64);
    report.check(
        "increment_symmetry_ks_p_gt_0.01",
        ks.p_value > 0.01,
        format!("D = {:.4}, p = {:.4}", ks.statistic, ks.p_value),
    );
    Ok(())
}
