//! Primal and dual paths never cross; every dual vertex has one downward
//! edge; a shifted dual forest is caught by the crossing detector.

use dsf_core::dual::{check_noncrossing, DualForest, DEFAULT_MARGIN};
use dsf_core::forest::PathPolyline;
use dsf_core::Rect;

use crate::config::ExperimentConfig;
use crate::output::{Cell, OutDir};
use crate::runner::Runner;
use crate::{row, Report, RunError};

const RESOLUTION: f64 = 0.1;
const SHIFT: f64 = 0.3;

struct WindowResult {
    points: usize,
    vertices: usize,
    pairs: u64,
    violations: u64,
    structural: u64,
    perturbed: u64,
    edges: Vec<Vec<Cell>>,
}

pub fn run(cfg: &ExperimentConfig, runner: &Runner, out: &mut OutDir) -> Result<Report, RunError> {
    let w = cfg.window;
    // flanking paths of vertices this close to the window's sides or bottom
    // may start in the simulated margin rather than inside the window
    let margin = DEFAULT_MARGIN / cfg.lambda.sqrt();
    let near_boundary = |x: f64, y: f64| x < margin || w - x < margin || y < margin;
    let results = runner.map("dual window", 0, cfg.replications, |rep| {
        let mut store = runner.store(0, rep)?;
        let mut forest = DualForest::build(&mut store, Rect::new(0.0, w, 0.0, w))?;
        let points = forest.window_points().len();
        let edges = forest.dual_edges(&mut store)?;
        let structural = (edges.len() != 2 * points) as u64
            + edges
                .iter()
                .filter(|e| !(e.to.location.y < e.from.location.y && e.to.location.y == e.to.parent_primal.y))
                .count() as u64;
        let primal = forest.primal_paths(&mut store)?;
        let dual = forest.dual_paths(&mut store)?;
        let rep_ok = check_noncrossing(&primal, &dual, RESOLUTION);
        let shifted: Vec<PathPolyline> = dual
            .iter()
            .map(|d| PathPolyline::new(d.vertices().iter().map(|v| v.offset(SHIFT, 0.0)).collect()))
            .collect::<dsf_core::Result<_>>()?;
        let perturbed = check_noncrossing(&primal, &shifted, RESOLUTION).violations;
        Ok(WindowResult {
            points,
            vertices: edges.len(),
            pairs: rep_ok.pairs_checked,
            violations: rep_ok.violations,
            structural,
            perturbed,
            edges: edges
                .iter()
                .map(|e| {
                    row![
                        rep,
                        e.from.location.x,
                        e.from.location.y,
                        e.to.location.x,
                        e.to.location.y,
                        e.from.side.to_string(),
                        near_boundary(e.from.location.x, e.from.location.y)
                    ]
                })
                .collect(),
        })
    })?;
    out.csv(
        "dual_check.csv",
        &[
            "rep",
            "points",
            "dual_vertices",
            "pairs_checked",
            "violations",
            "structural_failures",
            "perturbed_violations",
        ],
        &results
            .iter()
            .enumerate()
            .map(|(i, r)| row![i, r.points, r.vertices, r.pairs, r.violations, r.structural, r.perturbed])
            .collect::<Vec<_>>(),
    )?;
    let edges: Vec<Vec<Cell>> = results.iter().flat_map(|r| r.edges.iter().cloned()).collect();
    out.csv("dual_edges.csv", &["rep", "from_x", "from_y", "to_x", "to_y", "side", "near_boundary"], &edges)?;

    let n = results.len() as u64;
    let violations: u64 = results.iter().map(|r| r.violations).sum();
    let structural: u64 = results.iter().map(|r| r.structural).sum();
    let pairs: u64 = results.iter().map(|r| r.pairs).sum();
    let caught = results.iter().filter(|r| r.perturbed > 0).count() as u64;
    let mut report = Report::default();
    report.metric("pairs_checked", pairs as f64, 0.0, n);
    report.metric("violations", violations as f64, 0.0, n);
    report.metric("structural_failures", structural as f64, 0.0, n);
    report.metric("perturbed_windows_caught", caught as f64, 0.0, n);
    report.check("zero_crossing_violations", violations == 0, format!("{violations} over {pairs} pairs in {n} windows"));
    report.check("one_downward_edge_per_dual_vertex", structural == 0, format!("{structural} failures"));
    report.check("perturbed_dual_detected", caught == n, format!("{caught} of {n} shifted windows flagged"));
    Ok(report)
}
