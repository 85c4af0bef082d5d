//! Endpoint of a single path at time `n²γ`, divided by `nσ`, against the
//! standard normal law.

use dsf_core::math::normal_cdf;
use dsf_core::stats::{ks_one_sample, Moments};
use dsf_core::Point;

use super::{core, gamma_sigma, path_position, scale_estimate};
use crate::config::ExperimentConfig;
use crate::output::OutDir;
use crate::runner::Runner;
use crate::{row, Report, RunError};

const MAX_KS: f64 = 0.06;

pub fn run(cfg: &ExperimentConfig, runner: &Runner, out: &mut OutDir) -> Result<Report, RunError> {
    let mut report = Report::default();
    let (gamma, sigma, chains) = scale_estimate(cfg, runner, &mut report, out)?;
    gamma_sigma::increment_checks(&chains, cfg.kappa, &mut report)?;
    let n = cfg.n_or(20) as f64;
    let t_end = n * n * gamma;
    let ends = runner.map("donsker path", 0, cfg.replications, |rep| {
        let mut store = runner.store(0, rep)?;
        path_position(&mut store, Point::ORIGIN, t_end)
    })?;
    let z: Vec<f64> = ends.iter().map(|x| x / (n * sigma)).collect();
    out.csv(
        "donsker.csv",
        &["rep", "x_end", "standardized"],
        &ends.iter().zip(&z).enumerate().map(|(i, (x, s))| row![i, *x, *s]).collect::<Vec<_>>(),
    )?;
    let m: Moments = z.iter().copied().collect();
    let ks = core("normal test", ks_one_sample(&z, normal_cdf))?;
    let reps = cfg.replications;
    report.metric("time_horizon", t_end, f64::NAN, 1);
    report.metric("standardized_mean", m.mean(), m.std_err(), reps);
    report.metric("standardized_variance", m.variance(), m.variance() * (2.0 / (reps as f64 - 1.0)).sqrt(), reps);
    report.metric("normal_ks_statistic", ks.statistic, f64::NAN, reps);
    report.metric("normal_ks_p", ks.p_value, f64::NAN, reps);
    report.check(
        "standardized_endpoint_ks_lt_0.06",
        ks.statistic < MAX_KS,
        format!("D = {:.4}, p = {:.4}", ks.statistic, ks.p_value),
    );
    Ok(report)
}
