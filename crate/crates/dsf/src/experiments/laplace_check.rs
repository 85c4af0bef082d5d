//! Drift and moment conditions of the killed gap process
//! `Y = f(Z) 1{Z > m0}` on bins of the gap `Z`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dsf_core::coalesce::{gap_chain, LaplaceBinning, LaplaceReport, LaplaceThresholds};
use dsf_core::Point;

use super::core;
use crate::config::ExperimentConfig;
use crate::output::{fmt_f64, OutDir};
use crate::runner::Runner;
use crate::{row, Report, RunError};

/// Chains are launched in fixed batches so the stopping point does not
/// depend on the thread count.
const BATCH: u64 = 512;
const MAX_CHAINS_PER_TRANSITION: u64 = 50;

fn render(rep: &LaplaceReport, th: &LaplaceThresholds, chains: u64) -> String {
    let mut s = String::from("{\n");
    s.push_str(&format!("  \"m0\": {},\n", fmt_f64(rep.m0)));
    s.push_str(&format!("  \"transitions\": {},\n", rep.transitions));
    s.push_str(&format!("  \"chains\": {chains},\n"));
    s.push_str(&format!(
        "  \"thresholds\": {{\"min_samples\": {}, \"drift_se_factor\": {}, \"min_second_moment\": {}, \"max_third_moment\": {}}},\n",
        th.min_samples,
        fmt_f64(th.drift_se_factor),
        fmt_f64(th.min_second_moment),
        fmt_f64(th.max_third_moment)
    ));
    s.push_str("  \"bins\": [\n");
    for (i, b) in rep.bins.iter().enumerate() {
        s.push_str(&format!(
            "    {{\"lo\": {}, \"hi\": {}, \"n\": {}, \"drift\": {}, \"drift_se\": {}, \"second\": {}, \"second_se\": {}, \"third\": {}, \"third_se\": {}, \"excluded\": {}, \"drift_ok\": {}, \"second_ok\": {}, \"third_ok\": {}}}{}\n",
            fmt_f64(b.lo),
            fmt_f64(b.hi),
            b.n,
            fmt_f64(b.drift),
            fmt_f64(b.drift_se),
            fmt_f64(b.second),
            fmt_f64(b.second_se),
            fmt_f64(b.third),
            fmt_f64(b.third_se),
            b.excluded,
            b.drift_ok,
            b.second_ok,
            b.third_ok,
            if i + 1 < rep.bins.len() { "," } else { "" }
        ));
    }
    s.push_str("  ],\n");
    s.push_str(&format!("  \"all_ok\": {}\n}}\n", rep.all_ok()));
    s
}

pub fn run(cfg: &ExperimentConfig, runner: &Runner, out: &mut OutDir) -> Result<Report, RunError> {
    let m0 = cfg.m0();
    let binning = core("binning", LaplaceBinning::new(m0, cfg.bin_width, cfg.span, cfg.kappa))?;
    let th = LaplaceThresholds::default();
    let mut acc = binning.accumulators();
    let mut recorded = 0u64;
    let mut chains = 0u64;
    let max_chains = cfg.transitions.saturating_mul(MAX_CHAINS_PER_TRANSITION);
    'outer: while recorded < cfg.transitions {
        if chains >= max_chains {
            break;
        }
        let paths = runner.map("gap chain", chains, chains + BATCH, |c| {
            let mut rng = ChaCha8Rng::seed_from_u64(runner.seed(1, c));
            // uniform on (m0, m0 + span]
            let z0 = m0 + cfg.span * (1.0 - rng.random::<f64>());
            let mut store = runner.store(0, c)?;
            let chain = gap_chain(
                Point::ORIGIN,
                Point::new(z0, 0.0),
                &mut store,
                cfg.kappa,
                cfg.max_renewals,
                cfg.step_cap,
                // transitions starting outside the bins are never recorded
                |z| z <= m0 || z > m0 + cfg.span,
            )?;
            Ok(chain.z_path)
        })?;
        for z in paths {
            chains += 1;
            for w in z.windows(2) {
                if core("transition", binning.record(&mut acc, w[0], w[1]))? {
                    recorded += 1;
                    if recorded == cfg.transitions {
                        break 'outer;
                    }
                }
            }
        }
    }
    let rep = binning.report(&acc, &th);
    out.csv(
        "laplace_bins.csv",
        &[
            "lo", "hi", "n", "drift", "drift_se", "second", "second_se", "third", "third_se", "excluded", "drift_ok",
            "second_ok", "third_ok",
        ],
        &rep.bins
            .iter()
            .map(|b| {
                row![
                    b.lo, b.hi, b.n, b.drift, b.drift_se, b.second, b.second_se, b.third, b.third_se, b.excluded,
                    b.drift_ok, b.second_ok, b.third_ok
                ]
            })
            .collect::<Vec<_>>(),
    )?;
    out.text("laplace_report.txt", &render(&rep, &th, chains))?;

    let mut report = Report::default();
    report.metric("transitions", recorded as f64, 0.0, recorded);
    report.metric("chains", chains as f64, 0.0, chains);
    for b in &rep.bins {
        let tag = format!("{}_{}", b.lo, b.hi);
        report.metric(&format!("drift_{tag}"), b.drift, b.drift_se, b.n);
        report.metric(&format!("second_{tag}"), b.second, b.second_se, b.n);
        report.metric(&format!("third_{tag}"), b.third, b.third_se, b.n);
    }
    let populated: Vec<_> = rep.bins.iter().filter(|b| !b.excluded).collect();
    let fails = |f: fn(&dsf_core::coalesce::LaplaceBin) -> bool| populated.iter().filter(|b| !f(b)).count();
    report.check(
        "transitions_reached",
        recorded >= cfg.transitions,
        format!("{recorded} of {} after {chains} chains", cfg.transitions),
    );
    report.check("populated_bins", !populated.is_empty(), format!("{} of {}", populated.len(), rep.bins.len()));
    report.check("drift_nonpositive_within_2se", fails(|b| b.drift_ok) == 0, format!("{} bins fail", fails(|b| b.drift_ok)));
    report.check(
        "second_moment_at_least_0.05",
        fails(|b| b.second_ok) == 0,
        format!("{} bins fail", fails(|b| b.second_ok)),
    );
    let worst = populated.iter().map(|b| b.third).fold(0.0, f64::max);
    report.check(
        "third_moment_at_most_500",
        fails(|b| b.third_ok) == 0,
        format!("{} bins fail, largest {worst:.1}", fails(|b| b.third_ok)),
    );
    Ok(report)
}
