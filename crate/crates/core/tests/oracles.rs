//! The library against independent brute-force implementations.

use dsf_core::explore::ExplorationState;
use dsf_core::forest::{ancestor, ancestor_among};
use dsf_core::renewal::RenewalChain;
use dsf_core::{Error, FixedPoints, Point, PoissonStore};
use proptest::prelude::*;

/// Nearest point strictly above `x` with the documented tie rule.
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

/// Straightforward simulator of the joint exploration: keeps every swept
/// semi-ball forever and tests membership against all of them.
struct BruteExploration {
    positions: Vec<Point>,
    balls: Vec<(Point, f64)>,
}

impl BruteExploration {
    fn low(&self) -> f64 {
        self.positions.iter().map(|p| p.y).fold(f64::INFINITY, f64::min)
    }

    fn explored(&self, p: &Point) -> bool {
        p.y >= self.low()
            && self
                .balls
                .iter()
                .any(|(c, r)| p.y >= c.y && p.dist2(c) <= r * r)
    }

    fn height(&self) -> f64 {
        let low = self.low();
        self.balls
            .iter()
            .map(|(c, r)| c.y + r - low)
            .filter(|h| *h > 0.0)
            .fold(0.0, f64::max)
    }

    /// Returns false when the mover has no candidate left.
    fn step(&mut self, pts: &[Point]) -> bool {
        let mut order: Vec<usize> = (0..self.positions.len()).collect();
        order.sort_by(|&a, &b| {
            let (p, q) = (self.positions[a], self.positions[b]);
            p.y.total_cmp(&q.y).then(p.x.total_cmp(&q.x)).then(a.cmp(&b))
        });
        let from = self.positions[order[0]];
        let mut cands: Vec<Point> = pts.iter().filter(|p| !self.explored(p)).copied().collect();
        cands.extend(self.positions.iter().filter(|p| **p != from));
        let Some(to) = scan_ancestor(&from, &cands) else {
            return false;
        };
        for p in &mut self.positions {
            if *p == from {
                *p = to;
            }
        }
        self.balls.push((from, from.dist(&to)));
        true
    }
}

fn point() -> impl Strategy<Value = Point> {
    (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(x, y)| Point::new(x, y))
}

fn lattice_point() -> impl Strategy<Value = Point> {
    (-4i32..=4, -4i32..=4).prop_map(|(x, y)| Point::new(x as f64 * 0.5, y as f64 * 0.5))
}

proptest! {
    #[test]
    fn ancestor_matches_scan(pts in prop::collection::vec(point(), 1..40), x in point()) {
        let got = ancestor(&x, &mut FixedPoints::new(pts.clone()));
        match scan_ancestor(&x, &pts) {
            Some(want) => prop_assert_eq!(got.unwrap(), want),
            None => prop_assert!(matches!(got, Err(Error::SearchOverflow { .. })), "expected overflow"),
        }
    }

    #[test]
    fn ancestor_matches_scan_with_ties(pts in prop::collection::vec(lattice_point(), 1..30), x in lattice_point()) {
        let got = ancestor(&x, &mut FixedPoints::new(pts.clone()));
        match scan_ancestor(&x, &pts) {
            Some(want) => prop_assert_eq!(got.unwrap(), want),
            None => prop_assert!(got.is_err()),
        }
    }

    #[test]
    fn exploration_matches_brute_force(
        cloud in prop::collection::vec((-6.0..6.0f64, 0.0..30.0f64), 60..200),
        xs in prop::collection::vec(-2.0..2.0f64, 1..4),
        steps in 1usize..60,
    ) {
        let pts: Vec<Point> = cloud.iter().map(|&(x, y)| Point::new(x, y)).collect();
        let starts: Vec<Point> = xs.iter().enumerate().map(|(i, &x)| Point::new(x, -0.3 * i as f64)).collect();
        let mut lib = ExplorationState::new(starts.clone(), 6).unwrap();
        let mut brute = BruteExploration { positions: starts, balls: Vec::new() };
        let mut src = FixedPoints::new(pts.clone());
        for _ in 0..steps {
            let ok = brute.step(&pts);
            let got = lib.step(&mut src);
            if !ok {
                prop_assert!(got.is_err());
                break;
            }
            got.unwrap();
            prop_assert_eq!(lib.positions(), &brute.positions[..]);
            prop_assert!((lib.height() - brute.height()).abs() <= 1e-12);
        }
    }
}

#[test]
fn exploration_follows_forest_on_points_and_starts() {
    for seed in 0..5u64 {
        let mut store = PoissonStore::with_intensity(1.0, seed).unwrap();
        let starts = vec![Point::new(-1.0, 0.0), Point::new(0.0, 0.4), Point::new(1.5, 0.9)];
        let mut st = ExplorationState::new(starts.clone(), 6).unwrap();
        for _ in 0..3000 {
            let mv = st.step(&mut store).unwrap();
            let want = ancestor_among(&mv.from, &mut store, None, &starts).unwrap();
            assert_eq!(mv.to, want, "seed {seed} step {}", st.step_count());
        }
    }
}

#[test]
fn cone_can_meet_history_when_starts_share_an_ordinate() {
    let starts = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0)];
    let mut src = FixedPoints::new(vec![Point::new(0.0, 1.5), Point::new(1.0, 5.0)]);
    let mut st = ExplorationState::new(starts, 6).unwrap();
    st.step(&mut src).unwrap();
    assert_eq!(st.positions(), &[Point::new(0.0, 1.5), Point::new(1.0, 0.0)]);
    assert_eq!(st.cone_apex(), Point::new(1.0, 1.0));
    assert!(st.history().contains(&Point::new(1.0, 1.01)));
    assert!(!st.cone_avoids_history(0.01));
}

#[test]
fn cone_avoids_history_after_renewals() {
    let lambda = 0.0125;
    let unit = 1.0 / f64::sqrt(lambda);
    for seed in 0..6u64 {
        let mut store = PoissonStore::with_intensity(lambda, 100 + seed).unwrap();
        let starts = vec![Point::new(0.0, 0.0), Point::new(unit, 0.0)];
        let mut chain = RenewalChain::new(starts, 6).unwrap();
        chain.next_renewal(&mut store).unwrap();
        let mut bad = 0usize;
        for _ in 0..4 {
            chain
                .next_renewal_observed(&mut store, |st, _| {
                    if !st.cone_avoids_history(0.01 * unit) {
                        bad += 1;
                    }
                })
                .unwrap();
        }
        assert_eq!(bad, 0, "seed {seed}");
    }
}

#[test]
fn cone_avoids_history_with_distinct_ordinates() {
    let mut store = PoissonStore::with_intensity(1.0, 7).unwrap();
    let mut st = ExplorationState::new(vec![Point::new(0.0, 0.0), Point::new(0.8, 0.3)], 6).unwrap();
    for _ in 0..20_000 {
        st.step(&mut store).unwrap();
        assert!(st.cone_avoids_history(0.01), "step {}", st.step_count());
    }
}
