//! Crossing counts of radial spanning tree branches and the growth
//! exponent of their mean.

use dsf_core::rst::{chi_r_proxy_checked, RstTree};
use dsf_core::stats::{bootstrap_groups, linear_fit, quantile_sorted, Moments};

use crate::config::ExperimentConfig;
use crate::output::{Cell, OutDir};
use crate::runner::Runner;
use crate::{row, Report, RunError};

const PRIMARY_FACTOR: f64 = 4.0;
const MAX_SLOPE: f64 = 0.9;
const TREE_RADIUS: f64 = 25.0;

fn log_mean_slope(rs: &[f64], groups: &[Vec<f64>]) -> f64 {
    let xs: Vec<f64> = rs.iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = groups
        .iter()
        .map(|g| (g.iter().sum::<f64>() / g.len() as f64).ln())
        .collect();
    linear_fit(&xs, &ys).map_or(f64::NAN, |f| f.slope)
}

pub fn run(cfg: &ExperimentConfig, runner: &Runner, out: &mut OutDir) -> Result<Report, RunError> {
    let reps = cfg.replications;
    let mut rows: Vec<Vec<Cell>> = Vec::new();
    let mut report = Report::default();
    let mut all_valid = true;
    let mut primary: Vec<Vec<f64>> = Vec::new();
    for (fi, &f) in cfg.r_out_factor.iter().enumerate() {
        let mut groups = Vec::new();
        for (ri, &r) in cfg.r.iter().enumerate() {
            let stream = (fi * cfg.r.len() + ri) as u64;
            let res = runner.map("chi", 0, reps, |s| {
                // a separate store for every (r, seed)
                let mut store = runner.store(stream, s)?;
                chi_r_proxy_checked(r, f * r, &mut store)
            })?;
            let chis: Vec<f64> = res.iter().map(|c| c.0 as f64).collect();
            all_valid &= res.iter().all(|c| c.1);
            for (s, c) in res.iter().enumerate() {
                rows.push(row![r, f * r, s, c.0]);
            }
            let m: Moments = chis.iter().copied().collect();
            report.metric(&format!("chi_mean_r{r}_rout{}", f * r), m.mean(), m.std_err(), reps);
            groups.push(chis);
        }
        if f == PRIMARY_FACTOR || (fi == 0 && !cfg.r_out_factor.contains(&PRIMARY_FACTOR)) {
            primary = groups;
        }
    }
    out.csv("chi.csv", &["r", "R_out", "seed", "chi"], &rows)?;

    let trees = runner.map("rst tree", 0, reps.min(10), |s| {
        let mut store = runner.store(u64::MAX, s)?;
        Ok(RstTree::build(&mut store, TREE_RADIUS)?.is_valid())
    })?;
    let trees_ok = trees.iter().all(|v| *v);
    report.check(
        "tree_validity",
        all_valid && trees_ok,
        format!("traversed edges valid: {all_valid}, {} full trees valid: {trees_ok}", trees.len()),
    );

    if cfg.r.len() >= 3 {
        if primary.iter().any(|g| g.iter().sum::<f64>() <= 0.0) {
            report.check("sublinear_slope_upper95_lt_0.9", false, "a radius has zero mean count");
            return Ok(report);
        }
        let slope = log_mean_slope(&cfg.r, &primary);
        let boot = bootstrap_groups(&primary, cfg.bootstrap as usize, runner.seed(u64::MAX - 1, 0), |g| {
            log_mean_slope(&cfg.r, g)
        });
        let upper = quantile_sorted(&boot, 0.95);
        let boot_sd = {
            let m: Moments = boot.iter().copied().collect();
            m.std_dev()
        };
        report.metric("loglog_slope", slope, boot_sd, reps);
        report.metric("loglog_slope_upper95", upper, f64::NAN, cfg.bootstrap);
        report.check(
            "sublinear_slope_upper95_lt_0.9",
            upper < MAX_SLOPE,
            format!("slope {slope:.4}, bootstrap 95% upper bound {upper:.4}"),
        );
    }
    Ok(report)
}
