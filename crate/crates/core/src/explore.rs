//! Joint exploration of `k` DSF paths.
//!
//! At every step only the lowest walker moves (leftmost among equal
//! ordinates). Its candidate set is the Poisson points outside the current
//! history set, the other walkers' positions and the extra points carried
//! over from a restart. The semi-ball swept by the move is added to the
//! history, which is then clipped at the new lowest ordinate.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::forest::ancestor_among;
use crate::geom::{cone_contains, HistorySet, Point, Rect, SemiBall};
use crate::math::sqrt;
use crate::ppp::PointSource;

/// Smallest admissible value of the good-step height threshold κ.
pub const MIN_KAPPA: u32 = 6;

/// One move of the exploration process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Move {
    /// Walker selected by [`ExplorationState::select_mover`].
    pub mover: usize,
    pub from: Point,
    pub to: Point,
}

impl Move {
    pub fn displacement(&self) -> f64 {
        self.from.dist(&self.to)
    }
}

/// State `(g_n(u_1), …, g_n(u_k), H_n)` plus the bookkeeping needed for
/// good steps.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplorationState {
    positions: Vec<Point>,
    history: HistorySet,
    extra: Vec<Point>,
    step: u64,
    last_good_level: f64,
    kappa: u32,
    scratch: Vec<Point>,
}

fn lowest_ordinate(points: &[Point]) -> f64 {
    points.iter().map(|p| p.y).fold(f64::INFINITY, f64::min)
}

impl ExplorationState {
    /// Fresh exploration from `starts` with an empty history.
    pub fn new(starts: Vec<Point>, kappa: u32) -> Result<Self> {
        ExplorationState::with_initial(starts, &[], Vec::new(), kappa)
    }

    /// Exploration with an initial history (generated by `h0_balls` and
    /// clipped at the lowest start) and extra points.
    ///
    /// Requires the start ordinates to spread over at most `κ`, the clipped
    /// initial history to lie within one unit above the lowest start, and
    /// every extra point to belong to that history.
    pub fn with_initial(
        starts: Vec<Point>,
        h0_balls: &[SemiBall],
        extra: Vec<Point>,
        kappa: u32,
    ) -> Result<Self> {
        if starts.is_empty() {
            return Err(Error::InvalidArgument("exploration needs at least one walker"));
        }
        if kappa < MIN_KAPPA {
            return Err(Error::InvalidArgument("kappa must be an integer >= 6"));
        }
        if starts.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument("start points must be finite"));
        }
        let low = lowest_ordinate(&starts);
        let high = starts.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max);
        if high - low > kappa as f64 {
            return Err(Error::InvalidArgument(
                "start ordinates must spread over at most kappa",
            ));
        }
        let history = HistorySet::from_balls(low, h0_balls.iter().copied());
        // Small slack for the floating point error of `low + κ + 1`.
        if history.height() > 1.0 + 1e-9 {
            return Err(Error::InvalidArgument(
                "initial history must lie within one unit above the lowest start",
            ));
        }
        if extra.iter().any(|p| !history.contains(p)) {
            return Err(Error::InvalidArgument("extra points must lie in the initial history"));
        }
        Ok(ExplorationState {
            positions: starts,
            history,
            extra,
            step: 0,
            last_good_level: low,
            kappa,
            scratch: Vec::new(),
        })
    }

    /// Assembles a state from raw parts without checking the initial-data
    /// assumptions. The history is re-clipped at the lowest position.
    pub fn from_parts(
        positions: Vec<Point>,
        history_balls: &[SemiBall],
        extra: Vec<Point>,
        step: u64,
        last_good_level: f64,
        kappa: u32,
    ) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::InvalidArgument("exploration needs at least one walker"));
        }
        let low = lowest_ordinate(&positions);
        Ok(ExplorationState {
            history: HistorySet::from_balls(low, history_balls.iter().copied()),
            positions,
            extra,
            step,
            last_good_level,
            kappa,
            scratch: Vec::new(),
        })
    }

    pub fn k(&self) -> usize {
        self.positions.len()
    }

    pub fn kappa(&self) -> u32 {
        self.kappa
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    pub fn history(&self) -> &HistorySet {
        &self.history
    }

    pub fn extra(&self) -> &[Point] {
        &self.extra
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn last_good_level(&self) -> f64 {
        self.last_good_level
    }

    /// Ordinate of the moving vertex, `W_n^move(2)`.
    pub fn move_level(&self) -> f64 {
        self.history.clip_level()
    }

    /// Height of the current history set.
    pub fn height(&self) -> f64 {
        self.history.height()
    }

    /// The walker that moves next: lowest ordinate, then lowest abscissa,
    /// then lowest index.
    pub fn select_mover(&self) -> usize {
        let mut best = 0;
        for (i, p) in self.positions.iter().enumerate().skip(1) {
            let b = &self.positions[best];
            if p.y < b.y || (p.y == b.y && p.x < b.x) {
                best = i;
            }
        }
        best
    }

    /// True when all walkers sit at the same point.
    pub fn all_coalesced(&self) -> bool {
        self.positions.windows(2).all(|w| w[0] == w[1])
    }

    /// Advances the process by one move using `source` as the point process.
    ///
    /// Every walker located at the moving vertex moves with it, so walkers
    /// that have met stay together.
    pub fn step<S: PointSource + ?Sized>(&mut self, source: &mut S) -> Result<Move> {
        let mover = self.select_mover();
        let from = self.positions[mover];
        self.scratch.clear();
        self.scratch.extend(self.extra.iter().copied());
        self.scratch
            .extend(self.positions.iter().copied().filter(|p| *p != from));
        let to = ancestor_among(&from, source, Some(&self.history), &self.scratch)?;
        for p in self.positions.iter_mut() {
            if *p == from {
                *p = to;
            }
        }
        self.history.insert(SemiBall::new(from, from.dist(&to)));
        self.history.prune(lowest_ordinate(&self.positions))?;
        self.step += 1;
        Ok(Move { mover, from, to })
    }

    /// Same transition as [`ExplorationState::step`], drawing candidates
    /// from a point process independent of everything used so far.
    pub fn step_resampled<S: PointSource + ?Sized>(&mut self, fresh: &mut S) -> Result<Move> {
        self.step(fresh)
    }

    /// Good-step test: the step count is a positive multiple of `k`, the
    /// history height is at most `κ` and the moving level has risen by at
    /// least `κ + 1` since the previous good step.
    pub fn is_good_step(&self) -> bool {
        let k = self.k() as u64;
        let kappa = self.kappa as f64;
        self.step > 0
            && self.step.is_multiple_of(k)
            && self.height() <= kappa
            && self.move_level() >= self.last_good_level + kappa + 1.0
    }

    /// Records the current step as a good step.
    pub fn mark_good(&mut self) {
        self.last_good_level = self.move_level();
    }

    /// Apex of the unexplored cone: the moving vertex lifted by
    /// `max(height / 2, 1)`.
    pub fn cone_apex(&self) -> Point {
        let w = self.positions[self.select_mover()];
        w.offset(0.0, (self.height() / 2.0).max(1.0))
    }

    /// Distance from the cone apex to the nearest point of `source` inside
    /// the cone.
    pub fn zeta<S: PointSource + ?Sized>(&self, source: &mut S) -> Result<f64> {
        let apex = self.cone_apex();
        let cap = source.search_cap();
        let mut r = 2.0 / sqrt(source.intensity());
        loop {
            let r2 = r * r;
            let mut best = f64::INFINITY;
            let rect = Rect::new(apex.x - r, apex.x + r, apex.y, apex.y + r);
            source.for_each_in(&rect, &mut |p| {
                if cone_contains(&apex, p) {
                    let d2 = p.dist2(&apex);
                    if d2 <= r2 && d2 < best {
                        best = d2;
                    }
                }
            })?;
            if best.is_finite() {
                return Ok(sqrt(best));
            }
            if r >= cap {
                return Err(Error::SearchOverflow { radius: r });
            }
            r = (2.0 * r).min(cap);
        }
    }

    /// Checks that the unexplored cone misses the history set by testing
    /// boundary samples of the cone at spacing `resolution`, together with
    /// the lowest and highest point of every history ball.
    pub fn cone_avoids_history(&self, resolution: f64) -> bool {
        let apex = self.cone_apex();
        let h = &self.history;
        let reach = h.top() - apex.y;
        if reach > 0.0 {
            let n = (reach / resolution) as usize + 1;
            for i in 1..=n {
                let d = i as f64 * resolution;
                for p in [apex.offset(-d, d), apex.offset(d, d), apex.offset(0.0, d)] {
                    if h.contains(&p) {
                        return false;
                    }
                }
            }
        }
        h.balls().iter().all(|b| {
            let low = Point::new(b.center.x, b.center.y.max(h.clip_level()));
            let top = Point::new(b.center.x, b.top());
            !(cone_contains(&apex, &low) && h.contains(&low))
                && !(cone_contains(&apex, &top) && h.contains(&top))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forest::ancestor;
    use crate::ppp::{FixedPoints, PoissonStore};
    use alloc::vec;

    fn fixed(pts: &[(f64, f64)]) -> FixedPoints {
        FixedPoints::new(pts.iter().map(|&(x, y)| Point::new(x, y)).collect()).with_search_cap(64.0)
    }

    #[test]
    fn mover_selection() {
        let s = ExplorationState::new(vec![Point::new(0.0, 0.0), Point::new(5.0, 0.0)], 6).unwrap();
        assert_eq!(s.select_mover(), 0);
        let s = ExplorationState::new(vec![Point::new(5.0, 0.0), Point::new(0.0, 0.0)], 6).unwrap();
        assert_eq!(s.select_mover(), 1);
        let s = ExplorationState::new(vec![Point::new(3.0, 1.0), Point::new(0.0, 0.5)], 6).unwrap();
        assert_eq!(s.select_mover(), 1);
        let s = ExplorationState::new(vec![Point::new(3.0, 1.0)], 6).unwrap();
        assert_eq!(s.select_mover(), 0);
        let s = ExplorationState::new(vec![Point::new(1.0, 1.0), Point::new(1.0, 1.0)], 6).unwrap();
        assert_eq!(s.select_mover(), 0);
    }

    #[test]
    fn rejects_bad_initial_data() {
        assert!(ExplorationState::new(vec![], 6).is_err());
        assert!(ExplorationState::new(vec![Point::ORIGIN], 5).is_err());
        assert!(ExplorationState::new(vec![Point::ORIGIN, Point::new(0.0, 7.0)], 6).is_err());
        let tall = [SemiBall::new(Point::ORIGIN, 3.0)];
        assert!(ExplorationState::with_initial(vec![Point::ORIGIN], &tall, vec![], 6).is_err());
        let ok = [SemiBall::new(Point::ORIGIN, 1.0)];
        assert!(
            ExplorationState::with_initial(vec![Point::ORIGIN], &ok, vec![Point::new(5.0, 0.5)], 6)
                .is_err()
        );
        assert!(
            ExplorationState::with_initial(vec![Point::ORIGIN], &ok, vec![Point::new(0.0, 0.5)], 6)
                .is_ok()
        );
    }

    #[test]
    fn single_walker_step_is_ancestor() {
        let mut store = PoissonStore::with_intensity(1.0, 4).unwrap();
        let mut copy = store.clone();
        let mut s = ExplorationState::new(vec![Point::ORIGIN], 6).unwrap();
        let mv = s.step(&mut store).unwrap();
        assert_eq!(mv.to, ancestor(&Point::ORIGIN, &mut copy).unwrap());
        assert_eq!(s.positions()[0], mv.to);
        assert_eq!(s.move_level(), mv.to.y);
        assert_eq!(s.step_count(), 1);
    }

    #[test]
    fn walker_joins_nearby_walker() {
        let mut store = fixed(&[(0.0, 5.0), (3.0, 9.0)]);
        let mut s =
            ExplorationState::new(vec![Point::new(0.0, 0.0), Point::new(0.3, 0.4)], 6).unwrap();
        s.step(&mut store).unwrap();
        assert_eq!(s.positions()[0], s.positions()[1]);
        // coalesced walkers keep moving together
        for _ in 0..2 {
            s.step(&mut store).unwrap();
            assert_eq!(s.positions()[0], s.positions()[1]);
        }
    }

    #[test]
    fn good_step_clauses() {
        let mut store = fixed(&[(0.0, 8.0), (0.0, 20.0)]);
        let mut s = ExplorationState::new(vec![Point::ORIGIN, Point::new(1.0, 0.5)], 6).unwrap();
        assert!(!s.is_good_step());
        s.step(&mut store).unwrap();
        // step 1 is not a multiple of k = 2
        assert!(!s.is_good_step());
    }

    #[test]
    fn zeta_cases() {
        let s = ExplorationState::new(vec![Point::ORIGIN], 6).unwrap();
        // apex is (0, 1)
        let mut store = fixed(&[(0.0, 2.0)]);
        assert!((s.zeta(&mut store).unwrap() - 1.0).abs() < 1e-15);
        let mut store = fixed(&[(0.9, 1.2), (0.0, 3.0)]);
        assert!((s.zeta(&mut store).unwrap() - 2.0).abs() < 1e-15);
    }
}
