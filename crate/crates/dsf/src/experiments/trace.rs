//! Step-by-step log of the joint exploration of `k` paths.

use dsf_core::explore::ExplorationState;
use dsf_core::{Point, PointSource, Rect};

use super::core;
use crate::config::ExperimentConfig;
use crate::output::{Cell, OutDir};
use crate::runner::Runner;
use crate::{row, Report, RunError};

struct TraceRun {
    rows: Vec<Vec<Cell>>,
    store_rows: Vec<Vec<Cell>>,
    invariant_failures: u64,
    good_steps: u64,
}

pub fn run(cfg: &ExperimentConfig, runner: &Runner, out: &mut OutDir) -> Result<Report, RunError> {
    let k = cfg.k;
    let unit = 1.0 / cfg.lambda.sqrt();
    let starts: Vec<Point> = (0..k).map(|i| Point::new(i as f64 * cfg.spacing * unit, 0.0)).collect();
    core("trace", ExplorationState::new(starts.clone(), cfg.kappa).map(|_| ()))?;
    let runs = runner.map("trace", 0, cfg.replications, |rep| {
        let mut store = runner.store(0, rep)?;
        let mut st = ExplorationState::new(starts.clone(), cfg.kappa)?;
        let mut rows = Vec::with_capacity(cfg.steps as usize);
        let mut failures = 0u64;
        let mut good = 0u64;
        let (mut lo, mut hi) = (Point::new(f64::INFINITY, f64::INFINITY), Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
        let mut last_level = st.move_level();
        for _ in 0..cfg.steps {
            let before = st.positions().to_vec();
            let mv = st.step(&mut store)?;
            let level = st.move_level();
            let now = st.positions();
            let split = (0..k).any(|i| (0..i).any(|j| before[i] == before[j] && now[i] != now[j]));
            // clip tracks the lowest walker, levels never decrease, met walkers stay met
            if st.history().clip_level() != level || level < last_level || split {
                failures += 1;
            }
            last_level = level;
            let is_good = st.is_good_step();
            if is_good {
                st.mark_good();
                good += 1;
            }
            let mut r = row![rep, st.step_count(), mv.mover];
            for p in st.positions() {
                r.push(p.x.into());
                r.push(p.y.into());
                lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
                hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
            }
            r.push(st.height().into());
            r.push(is_good.into());
            rows.push(r);
        }
        let pad = 2.0 * unit;
        let region = Rect::new(lo.x.min(0.0) - pad, hi.x + pad, 0.0, hi.y + pad);
        let store_rows = store
            .points_in(&region)?
            .into_iter()
            .map(|p| row![rep, p.x, p.y])
            .collect();
        Ok(TraceRun {
            rows,
            store_rows,
            invariant_failures: failures,
            good_steps: good,
        })
    })?;
    let mut header: Vec<String> = vec!["rep".into(), "step".into(), "mover".into()];
    for i in 1..=k {
        header.push(format!("x{i}"));
        header.push(format!("y{i}"));
    }
    header.push("height".into());
    header.push("good".into());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows: Vec<Vec<Cell>> = runs.iter().flat_map(|r| r.rows.iter().cloned()).collect();
    out.csv("trace.csv", &header, &rows)?;
    let store_rows: Vec<Vec<Cell>> = runs.iter().flat_map(|r| r.store_rows.iter().cloned()).collect();
    out.csv("store.csv", &["rep", "x", "y"], &store_rows)?;

    let mut report = Report::default();
    let n = cfg.replications * cfg.steps;
    let good: u64 = runs.iter().map(|r| r.good_steps).sum();
    let p = good as f64 / n as f64;
    report.metric("good_step_fraction", p, (p * (1.0 - p) / n as f64).sqrt(), n);
    let failures: u64 = runs.iter().map(|r| r.invariant_failures).sum();
    report.check("exploration_invariants", failures == 0, format!("{failures} failing steps of {n}"));
    Ok(report)
}
