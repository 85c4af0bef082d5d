//! The next move after `m` steps has the same law whether it is drawn
//! from the original store or from a fresh one outside the history.

use dsf_core::explore::ExplorationState;
use dsf_core::math::PI;
use dsf_core::stats::{ks_one_sample, ks_two_sample};
use dsf_core::Point;

use super::core;
use crate::config::ExperimentConfig;
use crate::output::OutDir;
use crate::runner::Runner;
use crate::{row, Report, RunError};

const HALF_DISC_MAX_D: f64 = 0.03;

pub fn run(cfg: &ExperimentConfig, runner: &Runner, out: &mut OutDir) -> Result<Report, RunError> {
    let unit = 1.0 / cfg.lambda.sqrt();
    let m = cfg.steps;
    let starts = vec![Point::ORIGIN, Point::new(unit, 0.0)];
    let explore = |stream: u64, rep: u64| -> dsf_core::Result<(ExplorationState, dsf_core::PoissonStore)> {
        let mut store = runner.store(stream, rep)?;
        let mut st = ExplorationState::new(starts.clone(), cfg.kappa)?;
        for _ in 0..m {
            st.step(&mut store)?;
        }
        Ok((st, store))
    };
    let rows = runner.map("resample", 0, cfg.replications, |rep| {
        let (mut a, mut store_a) = explore(0, rep)?;
        let original = a.step(&mut store_a)?.displacement();
        let (mut b, _) = explore(1, rep)?;
        let mut fresh = runner.store(2, rep)?;
        let resampled = b.step_resampled(&mut fresh)?.displacement();
        let mut single = ExplorationState::new(vec![Point::ORIGIN], cfg.kappa)?;
        let first = single.step(&mut runner.store(3, rep)?)?.displacement();
        Ok((original, resampled, first))
    })?;
    let orig: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let res: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let first: Vec<f64> = rows.iter().map(|r| r.2).collect();
    out.csv(
        "resample.csv",
        &["rep", "original", "resampled", "first_move"],
        &rows.iter().enumerate().map(|(i, r)| row![i, r.0, r.1, r.2]).collect::<Vec<_>>(),
    )?;
    let two = core("two-sample test", ks_two_sample(&orig, &res))?;
    let lambda = cfg.lambda;
    let one = core(
        "half-disc test",
        ks_one_sample(&first, |r| if r <= 0.0 { 0.0 } else { 1.0 - (-lambda * PI * r * r / 2.0).exp() }),
    )?;
    let n = cfg.replications;
    let mut report = Report::default();
    report.metric("resample_ks_statistic", two.statistic, f64::NAN, n);
    report.metric("resample_ks_p", two.p_value, f64::NAN, n);
    report.metric("half_disc_ks_statistic", one.statistic, f64::NAN, n);
    report.metric("half_disc_ks_p", one.p_value, f64::NAN, n);
    report.check(
        "resampled_law_ks_p_gt_0.01",
        two.p_value > 0.01,
        format!("D = {:.4}, p = {:.4}, after {m} steps", two.statistic, two.p_value),
    );
    report.check(
        "half_disc_law_ks_lt_0.03",
        one.statistic < HALF_DISC_MAX_D,
        format!("D = {:.4}, p = {:.4}", one.statistic, one.p_value),
    );
    Ok(report)
}
