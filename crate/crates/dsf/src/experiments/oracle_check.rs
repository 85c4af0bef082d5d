//! Exact checks against brute-force oracles: the ancestor map, the
//! history height and the unexplored cone.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dsf_core::explore::ExplorationState;
use dsf_core::forest::{ancestor, ancestor_among};
use dsf_core::{Error, FixedPoints, HistorySet, Point, SemiBall};

use crate::config::ExperimentConfig;
use crate::output::OutDir;
use crate::runner::Runner;
use crate::{row, Report, RunError};

const MAX_POINTS: u64 = 20;
const CHAIN_STEPS: u64 = 1000;
const CONE_RESOLUTION: f64 = 0.01;
const HEIGHT_TOL: f64 = 1e-3;

fn coord(rng: &mut ChaCha8Rng, lattice: bool) -> f64 {
    if lattice {
        rng.random_range(-4i32..=4) as f64 * 0.5
    } else {
        rng.random_range(-2.0..2.0)
    }
}

/// Nearest point strictly above `x`, ties to the lower then the left one.
fn scan_ancestor(x: &Point, pts: &[Point]) -> Option<Point> {
    pts.iter()
        .filter(|p| p.y > x.y)
        .min_by(|a, b| {
            a.dist2(x)
                .total_cmp(&b.dist2(x))
                .then(a.y.total_cmp(&b.y))
                .then(a.x.total_cmp(&b.x))
        })
        .copied()
}

/// Returns true when the library ancestor agrees with the scan.
fn ancestor_instance(seed: u64) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lattice = rng.random_bool(0.5);
    let n = rng.random_range(1..=MAX_POINTS);
    let pts: Vec<Point> = (0..n)
        .map(|_| Point::new(coord(&mut rng, lattice), coord(&mut rng, lattice)))
        .collect();
    let x = Point::new(coord(&mut rng, lattice), coord(&mut rng, lattice));
    let got = ancestor(&x, &mut FixedPoints::new(pts.clone()));
    match (scan_ancestor(&x, &pts), got) {
        (Some(want), Ok(got)) => want == got,
        (None, Err(Error::SearchOverflow { .. })) => true,
        _ => false,
    }
}

/// Highest ordinate of the history on a fine grid, minus the clip level.
fn grid_height(h: &HistorySet, x0: f64, x1: f64, y_top: f64) -> f64 {
    let dx = 1e-3;
    let cols: Vec<f64> = (0..=((x1 - x0) / dx) as usize).map(|i| x0 + i as f64 * dx).collect();
    let hit = |y: f64| cols.iter().any(|&x| h.contains(&Point::new(x, y)));
    let clip = h.clip_level();
    let coarse = 1e-2;
    let mut y = y_top;
    while y >= clip && !hit(y) {
        y -= coarse;
    }
    if y < clip {
        return if hit(clip) { 0.0 } else { -1.0 };
    }
    let fine = 1e-4;
    let mut best = y;
    let mut z = y;
    while z <= y + 2.0 * coarse {
        if hit(z) {
            best = z;
        }
        z += fine;
    }
    best - clip
}

/// Absolute error between the history height and its grid estimate.
fn height_instance(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nb = rng.random_range(1..=5);
    let balls: Vec<SemiBall> = (0..nb)
        .map(|_| {
            SemiBall::new(
                Point::new(rng.random_range(-3.0..3.0), rng.random_range(-1.0..1.0)),
                rng.random_range(0.1..3.0),
            )
        })
        .collect();
    let clip = rng.random_range(-1.0..2.0);
    let h = HistorySet::from_balls(clip, balls.iter().copied());
    if h.is_empty() {
        return h.height();
    }
    let r_max = balls.iter().map(|b| b.radius).fold(0.0, f64::max);
    let y_top = balls.iter().map(|b| b.center.y).fold(f64::NEG_INFINITY, f64::max) + r_max + 0.01;
    let g = grid_height(&h, -3.0 - r_max, 3.0 + r_max, y_top);
    (h.height() - g).abs()
}

struct ChainResult {
    steps: u64,
    cone_failures: u64,
    dsf_mismatches: u64,
}

fn exploration_chain(runner: &Runner, cfg: &ExperimentConfig, c: u64, steps: u64) -> dsf_core::Result<ChainResult> {
    let mut store = runner.store(2, c)?;
    let k = (c % 3) as usize + 1;
    let unit = 1.0 / cfg.lambda.sqrt();
    // distinct start ordinates: the cone property is only claimed for those
    // (or for aligned starts whose ancestors are within distance 1)
    let rise = (0.5 * unit).min(1.0);
    let starts: Vec<Point> = (0..k).map(|i| Point::new(i as f64 * unit, i as f64 * rise)).collect();
    let mut st = ExplorationState::new(starts.clone(), cfg.kappa)?;
    let mut res = ChainResult {
        steps,
        cone_failures: 0,
        dsf_mismatches: 0,
    };
    for _ in 0..steps {
        let mv = st.step(&mut store)?;
        // the DSF on the Poisson points together with the starts
        if ancestor_among(&mv.from, &mut store, None, &starts)? != mv.to {
            res.dsf_mismatches += 1;
        }
        if st.is_good_step() {
            st.mark_good();
        }
        if !st.cone_avoids_history(CONE_RESOLUTION * unit) {
            res.cone_failures += 1;
        }
    }
    Ok(res)
}

pub fn run(cfg: &ExperimentConfig, runner: &Runner, out: &mut OutDir) -> Result<Report, RunError> {
    let n_anc = cfg.replications;
    let anc = runner.map("ancestor oracle", 0, n_anc, |i| Ok(ancestor_instance(runner.seed(0, i))))?;
    let anc_fail = anc.iter().filter(|ok| !**ok).count() as u64;

    let n_height = (cfg.replications / 10).max(1);
    let errs = runner.map("height oracle", 0, n_height, |i| Ok(height_instance(runner.seed(1, i))))?;
    let max_err = errs.iter().copied().fold(0.0, f64::max);

    let chains = cfg.steps.div_ceil(CHAIN_STEPS);
    let res = runner.map("exploration oracle", 0, chains, |c| {
        let steps = CHAIN_STEPS.min(cfg.steps - c * CHAIN_STEPS);
        exploration_chain(runner, cfg, c, steps)
    })?;
    let steps: u64 = res.iter().map(|r| r.steps).sum();
    let cone_fail: u64 = res.iter().map(|r| r.cone_failures).sum();
    let dsf_fail: u64 = res.iter().map(|r| r.dsf_mismatches).sum();

    out.csv(
        "oracle_check.csv",
        &["oracle", "instances", "failures", "max_error"],
        &[
            row!["ancestor_vs_scan", n_anc, anc_fail, 0.0],
            row!["height_vs_grid", n_height, errs.iter().filter(|e| **e > HEIGHT_TOL).count(), max_err],
            row!["cone_avoids_history", steps, cone_fail, 0.0],
            row!["exploration_is_dsf", steps, dsf_fail, 0.0],
        ],
    )?;
    let mut report = Report::default();
    report.metric("ancestor_failures", anc_fail as f64, 0.0, n_anc);
    report.metric("height_max_error", max_err, 0.0, n_height);
    report.metric("cone_failures", cone_fail as f64, 0.0, steps);
    report.metric("dsf_mismatches", dsf_fail as f64, 0.0, steps);
    report.check("ancestor_equals_scan", anc_fail == 0, format!("{anc_fail} of {n_anc} instances differ"));
    report.check(
        "height_equals_grid_sup",
        max_err <= HEIGHT_TOL,
        format!("max error {max_err:.2e} over {n_height} sets"),
    );
    report.check("cone_avoids_history", cone_fail == 0, format!("{cone_fail} of {steps} steps"));
    report.check("exploration_is_dsf", dsf_fail == 0, format!("{dsf_fail} of {steps} moves"));
    Ok(report)
}
