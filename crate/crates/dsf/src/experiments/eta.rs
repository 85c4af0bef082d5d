//! `P(η ≥ 2)`: at least two distinct positions at time `t` among the
//! paths crossing `[0, ε]` at time 0, in rescaled units.

use dsf_core::scaling::{bw_pair_survival, count_distinct, crossing_fates};
use dsf_core::stats::proportion_se;

use super::{core, scale_estimate};
use crate::config::ExperimentConfig;
use crate::output::OutDir;
use crate::runner::Runner;
use crate::{row, Report, RunError};

const RATIO_RANGE: (f64, f64) = (1.6, 2.4);

pub fn run(cfg: &ExperimentConfig, runner: &Runner, out: &mut OutDir) -> Result<Report, RunError> {
    let mut report = Report::default();
    let (gamma, sigma, _) = scale_estimate(cfg, runner, &mut report, out)?;
    let n = cfg.n_or(10) as f64;
    let space = n * sigma;
    let time = n * n * gamma;
    let eps = cfg.epsilon.clone();
    let widest = eps[eps.len() - 1] * space;
    let etas = runner.map("eta window", 0, cfg.replications, |rep| {
        let mut store = runner.store(0, rep)?;
        let fates = crossing_fates(&mut store, 0.0, cfg.t * time, 0.0, widest, |s, y| {
            s.discard_below(y);
        })?;
        Ok(eps
            .iter()
            .map(|e| {
                let mut ends: Vec<f64> = fates.iter().filter(|f| f.0 <= e * space).map(|f| f.1).collect();
                count_distinct(&mut ends)
            })
            .collect::<Vec<usize>>())
    })?;
    let trials = etas.len();
    let p: Vec<f64> = (0..eps.len())
        .map(|j| etas.iter().filter(|row| row[j] >= 2).count() as f64 / trials as f64)
        .collect();
    out.csv(
        "eta.csv",
        &["epsilon", "t", "p_ge2", "se", "n_trials"],
        &eps.iter()
            .zip(&p)
            .map(|(&e, &pp)| row![e, cfg.t, pp, proportion_se(pp, trials), trials])
            .collect::<Vec<_>>(),
    )?;
    for (&e, &pp) in eps.iter().zip(&p) {
        report.metric(&format!("p_ge2_eps{e}"), pp, proportion_se(pp, trials), trials as u64);
        let bw = core("pair survival", bw_pair_survival(e, cfg.t))?;
        report.metric(&format!("bw_pair_survival_eps{e}"), bw, 0.0, 0);
    }
    let monotone = p.windows(2).all(|w| w[1] >= w[0]);
    report.check("p_ge2_monotone_in_epsilon", monotone, format!("{p:?}"));
    let idx = |x: f64| eps.iter().position(|&e| (e - x).abs() < 1e-12);
    if let (Some(i), Some(j)) = (idx(0.1), idx(0.2)) {
        let ratio = p[j] / p[i];
        let se = ratio
            * ((proportion_se(p[i], trials) / p[i]).powi(2) + (proportion_se(p[j], trials) / p[j]).powi(2)).sqrt();
        report.metric("ratio_eps0.2_eps0.1", ratio, se, trials as u64);
        report.check(
            "ratio_eps0.2_over_eps0.1_in_range",
            (RATIO_RANGE.0..=RATIO_RANGE.1).contains(&ratio),
            format!("ratio {ratio:.4} +- {se:.4}"),
        );
    }
    Ok(report)
}
