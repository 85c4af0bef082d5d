//! One module per experiment. Each writes its tables into the output
//! directory and returns metrics and checks.

use dsf_core::forest::ancestor;
use dsf_core::scaling::{chain_increments, gamma_sigma_from_increments, GammaSigma, RenewalIncrements};
use dsf_core::{Point, PoissonStore};

use crate::config::{Experiment, ExperimentConfig};
use crate::output::OutDir;
use crate::runner::Runner;
use crate::{Report, RunError};

mod coalescence_tail;
mod donsker;
mod dual_check;
mod eta;
mod gamma_sigma;
mod laplace_check;
mod oracle_check;
mod renewal_stats;
mod resample_check;
mod rst_chi;
mod trace;

pub fn dispatch(cfg: &ExperimentConfig, runner: &Runner, out: &mut OutDir) -> Result<Report, RunError> {
    match cfg.experiment {
        Experiment::Trace => trace::run(cfg, runner, out),
        Experiment::RenewalStats => renewal_stats::run(cfg, runner, out),
        Experiment::CoalescenceTail => coalescence_tail::run(cfg, runner, out),
        Experiment::LaplaceCheck => laplace_check::run(cfg, runner, out),
        Experiment::Donsker => donsker::run(cfg, runner, out),
        Experiment::Eta => eta::run(cfg, runner, out),
        Experiment::DualCheck => dual_check::run(cfg, runner, out),
        Experiment::RstChi => rst_chi::run(cfg, runner, out),
        Experiment::GammaSigma => gamma_sigma::run(cfg, runner, out),
        Experiment::OracleCheck => oracle_check::run(cfg, runner, out),
        Experiment::ResampleCheck => resample_check::run(cfg, runner, out),
    }
}

pub(crate) fn core<T>(context: &str, r: dsf_core::Result<T>) -> Result<T, RunError> {
    r.map_err(|e| RunError::core(context, e))
}

/// Abscissa at ordinate `t_end` of the forest path from `start`. Cells
/// below the current vertex are dropped as the path climbs.
pub(crate) fn path_position(store: &mut PoissonStore, start: Point, t_end: f64) -> dsf_core::Result<f64> {
    let mut cur = start;
    let mut n = 0u64;
    loop {
        let next = ancestor(&cur, store)?;
        if next.y >= t_end {
            return Ok(cur.x + (next.x - cur.x) * (t_end - cur.y) / (next.y - cur.y));
        }
        cur = next;
        n += 1;
        if n.is_multiple_of(4096) {
            store.discard_below(cur.y);
        }
    }
}

/// Renewal increments of `reps` single-walker chains, pooled in chain order.
pub(crate) fn pooled_increments(
    cfg: &ExperimentConfig,
    runner: &Runner,
    stream: u64,
    reps: u64,
    renewals: u64,
) -> Result<(Vec<RenewalIncrements>, GammaSigma), RunError> {
    let per_chain = runner.map("renewal increments", 0, reps, |i| {
        let mut store = runner.store(stream, i)?;
        chain_increments(Point::ORIGIN, &mut store, cfg.kappa, renewals, cfg.step_cap, |s, level| {
            s.discard_below(level);
        })
    })?;
    let mut all = RenewalIncrements::default();
    for inc in &per_chain {
        all.extend(inc.clone());
    }
    let gs = core("gamma/sigma estimate", gamma_sigma_from_increments(&all))?;
    Ok((per_chain, gs))
}

/// Scale parameters from the config when given, else estimated.
pub(crate) fn scale_estimate(
    cfg: &ExperimentConfig,
    runner: &Runner,
    report: &mut Report,
    out: &mut OutDir,
) -> Result<(f64, f64, Vec<RenewalIncrements>), RunError> {
    let (chains, gs) = pooled_increments(cfg, runner, 1000, cfg.gs_replications, cfg.gs_renewals)?;
    gamma_sigma::record(&gs, report);
    gamma_sigma::write_tables(&chains, &gs, out)?;
    let (gamma, sigma) = match (cfg.gamma, cfg.sigma) {
        (Some(g), Some(s)) => (g, s),
        _ => (gs.gamma, gs.sigma),
    };
    Ok((gamma, sigma, chains))
}
