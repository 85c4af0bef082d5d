//! Renewal log and the tails of `β` (steps between renewals) and of the
//! block length `W` (total displacement between renewals).

use dsf_core::renewal::RenewalChain;
use dsf_core::stats::{correlation, quantile_sorted, survival_at, tail_fit, FitResult, Moments};
use dsf_core::Point;

use super::core;
use crate::config::ExperimentConfig;
use crate::output::{Cell, OutDir};
use crate::runner::Runner;
use crate::{row, Report, RunError};

const GRID_POINTS: usize = 20;
const BETA_MIN_R2: f64 = 0.9;
const BLOCK_MIN_R2: f64 = 0.85;

struct ChainLog {
    rows: Vec<Vec<Cell>>,
    beta: Vec<f64>,
    block: Vec<f64>,
    min_gain: f64,
    misaligned: u64,
}

fn grid(sorted: &[f64]) -> Vec<f64> {
    let lo = quantile_sorted(sorted, 0.05);
    let hi = quantile_sorted(sorted, 0.99);
    (0..GRID_POINTS)
        .map(|i| lo + (hi - lo) * i as f64 / (GRID_POINTS - 1) as f64)
        .collect()
}

fn tail_table(samples: &[f64], grid: &[f64]) -> Vec<Vec<Cell>> {
    let n = samples.len();
    survival_at(samples, grid)
        .into_iter()
        .zip(grid)
        .map(|(s, &g)| row![g, s, dsf_core::stats::proportion_se(s, n), n])
        .collect()
}

pub fn run(cfg: &ExperimentConfig, runner: &Runner, out: &mut OutDir) -> Result<Report, RunError> {
    let k = cfg.k;
    let unit = 1.0 / cfg.lambda.sqrt();
    let starts: Vec<Point> = (0..k).map(|i| Point::new(i as f64 * cfg.spacing * unit, 0.0)).collect();
    let kf = cfg.kappa as f64;
    let logs = runner.map("renewal chain", 0, cfg.replications, |c| {
        let mut store = runner.store(0, c)?;
        let mut chain = RenewalChain::new(starts.clone(), cfg.kappa)?.with_step_cap(cfg.step_cap);
        let mut log = ChainLog {
            rows: Vec::new(),
            beta: Vec::new(),
            block: Vec::new(),
            min_gain: f64::INFINITY,
            misaligned: 0,
        };
        let mut prev_y = 0.0;
        for _ in 0..cfg.renewals {
            let rec = chain.next_renewal(&mut store)?;
            store.discard_below(rec.level);
            let y = rec.u_new[0].y;
            log.min_gain = log.min_gain.min(y - prev_y);
            prev_y = y;
            if rec.beta % k as u64 != 0 || rec.u_new.iter().any(|u| u.y != y) {
                log.misaligned += 1;
            }
            let mut r = row![c, rec.ell, rec.beta, rec.varrho];
            for u in &rec.u_new {
                r.push(u.x.into());
                r.push(u.y.into());
            }
            r.push(rec.block_size.into());
            log.rows.push(r);
            log.beta.push(rec.beta as f64);
            log.block.push(rec.block_size);
        }
        Ok(log)
    })?;

    let mut header: Vec<String> = ["chain", "ell", "beta", "varrho"].map(String::from).to_vec();
    for i in 1..=k {
        header.push(format!("u{i}x"));
        header.push(format!("u{i}y"));
    }
    header.push("block_size".into());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows: Vec<Vec<Cell>> = logs.iter().flat_map(|l| l.rows.iter().cloned()).collect();
    out.csv("renewal_log.csv", &header, &rows)?;

    let beta: Vec<f64> = logs.iter().flat_map(|l| l.beta.iter().copied()).collect();
    let block: Vec<f64> = logs.iter().flat_map(|l| l.block.iter().copied()).collect();
    let mut sb = beta.clone();
    sb.sort_by(f64::total_cmp);
    let mut sw = block.clone();
    sw.sort_by(f64::total_cmp);
    let gb = grid(&sb);
    let gw = grid(&sw);
    let surv_header = ["n", "survival", "se", "count"];
    out.csv("beta_tail.csv", &surv_header, &tail_table(&beta, &gb))?;
    out.csv("block_tail.csv", &surv_header, &tail_table(&block, &gw))?;
    let fb: FitResult = core("beta tail fit", tail_fit(&beta, &gb, |n| n))?;
    let fw: FitResult = core("block tail fit", tail_fit(&block, &gw, f64::sqrt))?;

    // successive β within a chain are independent
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for l in &logs {
        for w in l.beta.windows(2) {
            xs.push(w[0]);
            ys.push(w[1]);
        }
    }
    let rho = if xs.len() >= 3 { core("beta correlation", correlation(&xs, &ys))? } else { f64::NAN };
    let rho_bound = 3.0 / (xs.len() as f64).sqrt();

    let n = beta.len() as u64;
    let mut report = Report::default();
    let mb: Moments = beta.iter().copied().collect();
    let mw: Moments = block.iter().copied().collect();
    report.metric("renewals", n as f64, 0.0, n);
    report.metric("beta_mean", mb.mean(), mb.std_err(), n);
    report.metric("block_mean", mw.mean(), mw.std_err(), n);
    report.metric("beta_tail_slope", fb.slope, fb.slope_se, GRID_POINTS as u64);
    report.metric("beta_tail_r2", fb.r_squared, f64::NAN, GRID_POINTS as u64);
    report.metric("block_tail_slope", fw.slope, fw.slope_se, GRID_POINTS as u64);
    report.metric("block_tail_r2", fw.r_squared, f64::NAN, GRID_POINTS as u64);
    report.metric("successive_beta_correlation", rho, 1.0 / (xs.len() as f64).sqrt(), xs.len() as u64);
    let min_gain = logs.iter().map(|l| l.min_gain).fold(f64::INFINITY, f64::min);
    let misaligned: u64 = logs.iter().map(|l| l.misaligned).sum();
    report.check("beta_tail_loglinear_r2_gt_0.9", fb.r_squared > BETA_MIN_R2, format!("R2 = {:.4}", fb.r_squared));
    report.check(
        "block_tail_sqrt_r2_gt_0.85",
        fw.r_squared > BLOCK_MIN_R2,
        format!("R2 = {:.4}", fw.r_squared),
    );
    report.check("gain_at_least_kappa_plus_1", min_gain >= kf + 1.0, format!("min gain {min_gain:.6}"));
    report.check("beta_multiple_of_k_shared_ordinate", misaligned == 0, format!("{misaligned} records"));
    report.check(
        "successive_beta_uncorrelated",
        rho.abs() <= rho_bound,
        format!("rho = {rho:.4}, bound {rho_bound:.4}"),
    );
    Ok(report)
}
