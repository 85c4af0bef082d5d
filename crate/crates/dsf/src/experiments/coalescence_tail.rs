//! Survival of the coalescence time of two paths started at distance `z0`.

use dsf_core::coalesce::{coalescence_time, tail_curve, CoalescenceSample, TailRow};
use dsf_core::stats::loglog_fit;
use dsf_core::Point;

use super::core;
use crate::config::ExperimentConfig;
use crate::output::{Cell, OutDir};
use crate::runner::Runner;
use crate::{row, Report, RunError};

const SLOPE_RANGE: (f64, f64) = (-0.65, -0.35);
const RATIO_RANGE: (f64, f64) = (1.5, 2.5);
const RATIO_T: f64 = 400.0;
const SUBADDITIVE_T: [f64; 2] = [100.0, 400.0];

fn label(z: f64) -> String {
    format!("{z}")
}

fn at(rows: &[TailRow], t: f64) -> Option<&TailRow> {
    rows.iter().find(|r| r.t == t)
}

pub fn run(cfg: &ExperimentConfig, runner: &Runner, out: &mut OutDir) -> Result<Report, RunError> {
    let cap = cfg.t_cap();
    let samples = runner.map("coalescence pair", 0, cfg.replications, |rep| {
        // one store per replication, shared by every starting gap
        let mut store = runner.store(0, rep)?;
        cfg.z0
            .iter()
            .map(|&z| coalescence_time(Point::ORIGIN, Point::new(z, 0.0), &mut store, cap))
            .collect::<dsf_core::Result<Vec<CoalescenceSample>>>()
    })?;
    let mut raw: Vec<Vec<Cell>> = Vec::new();
    for (rep, per) in samples.iter().enumerate() {
        for s in per {
            raw.push(row![rep, s.z0, s.t.unwrap_or(s.cap), s.censored()]);
        }
    }
    out.csv("coalescence_samples.csv", &["rep", "z0", "t", "censored"], &raw)?;

    let mut report = Report::default();
    let mut tables: Vec<(f64, Vec<TailRow>)> = Vec::new();
    for (j, &z) in cfg.z0.iter().enumerate() {
        let col: Vec<CoalescenceSample> = samples.iter().map(|per| per[j].clone()).collect();
        let rows = core("survival table", tail_curve(&col, &cfg.t_grid, 0.0))?;
        out.csv(
            &format!("survival_z{}.csv", label(z)),
            &["t", "survival", "se", "n"],
            &rows.iter().map(|r| row![r.t, r.survival, r.se, r.n]).collect::<Vec<_>>(),
        )?;
        let censored = col.iter().filter(|s| s.censored()).count();
        report.metric(
            &format!("censored_fraction_z{}", label(z)),
            censored as f64 / col.len() as f64,
            dsf_core::stats::proportion_se(censored as f64 / col.len() as f64, col.len()),
            col.len() as u64,
        );
        let monotone = rows.windows(2).all(|w| w[1].survival <= w[0].survival);
        report.check(&format!("survival_nonincreasing_z{}", label(z)), monotone, "");
        tables.push((z, rows));
    }
    let find = |z: f64| tables.iter().find(|(zz, _)| *zz == z).map(|(_, r)| r);

    if let Some(r1) = find(1.0) {
        let pts: Vec<(f64, f64)> = r1
            .iter()
            .filter(|r| (100.0..=1000.0).contains(&r.t) && r.survival > 0.0)
            .map(|r| (r.t, r.survival))
            .collect();
        if pts.len() >= 3 {
            let fit = core("log-log fit", loglog_fit(&pts))?;
            report.metric("loglog_slope_z1", fit.slope, fit.slope_se, pts.len() as u64);
            report.metric("loglog_r2_z1", fit.r_squared, f64::NAN, pts.len() as u64);
            report.check(
                "loglog_slope_in_range",
                (SLOPE_RANGE.0..=SLOPE_RANGE.1).contains(&fit.slope),
                format!("slope {:.4} +- {:.4}", fit.slope, fit.slope_se),
            );
        }
    }
    if let (Some(r1), Some(r2)) = (find(1.0), find(2.0)) {
        if let (Some(a), Some(b)) = (at(r1, RATIO_T), at(r2, RATIO_T)) {
            let ratio = b.survival / a.survival;
            let se = ratio * ((a.se / a.survival).powi(2) + (b.se / b.survival).powi(2)).sqrt();
            report.metric("ratio_z2_z1_t400", ratio, se, a.n as u64);
            report.check(
                "ratio_z2_over_z1_in_range",
                (RATIO_RANGE.0..=RATIO_RANGE.1).contains(&ratio),
                format!("ratio {ratio:.4} +- {se:.4}"),
            );
        }
    }
    if let (Some(r1), Some(r3)) = (find(1.0), find(3.0)) {
        for t in SUBADDITIVE_T {
            if let (Some(a), Some(c)) = (at(r1, t), at(r3, t)) {
                let se = (c.se * c.se + 9.0 * a.se * a.se).sqrt();
                report.check(
                    &format!("subadditive_z3_t{t}"),
                    c.survival <= 3.0 * a.survival + 3.0 * se,
                    format!("S3 {:.4} vs 3 S1 {:.4} + 3 SE {:.4}", c.survival, 3.0 * a.survival, 3.0 * se),
                );
            }
        }
    }
    Ok(report)
}
