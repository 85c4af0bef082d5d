//! Renewal records, regenerated paths and locality, at an intensity where
//! renewals are frequent.

use dsf_core::explore::{ExplorationState, Move};
use dsf_core::forest::ancestor_among;
use dsf_core::geom::in_semiball;
use dsf_core::renewal::{renewal_sequence, RenewalChain, RenewalRecord};
use dsf_core::stats::{correlation, ks_two_sample};
use dsf_core::{Point, PointSource, PoissonStore, Rect, Result, SemiBall};

const LAMBDA: f64 = 0.0125;
const KAPPA: u32 = 6;

fn unit() -> f64 {
    1.0 / LAMBDA.sqrt()
}

fn store(seed: u64) -> PoissonStore {
    PoissonStore::with_intensity(LAMBDA, seed).unwrap()
}

fn pair() -> Vec<Point> {
    vec![Point::new(0.0, 0.0), Point::new(unit(), 0.0)]
}

fn check_records(kappa: u32) {
    let kf = kappa as f64;
    for seed in 0..20u64 {
        let starts = pair();
        let recs = renewal_sequence(&starts, &mut store(seed), 15, kappa).unwrap();
        let mut prev = starts[0].y;
        let mut varrho = 0;
        for (i, r) in recs.iter().enumerate() {
            assert_eq!(r.ell, i as u64 + 1);
            assert_eq!(r.beta % 2, 0);
            varrho += r.beta;
            assert_eq!(r.varrho, varrho);
            assert!(r.block_size >= 0.0);
            assert!(r.u_new.iter().all(|u| u.y == r.level + kf));
            assert!(r.u_new[0].y - prev >= kf + 1.0, "gain {}", r.u_new[0].y - prev);
            prev = r.u_new[0].y;
            for (u, e) in r.u_new.iter().zip(&r.extra_new) {
                assert!(in_semiball(e, &SemiBall::new(*u, 1.0)));
            }
            assert!(r.h0_balls.iter().all(|b| b.radius == kf + 1.0 && b.center.y == r.level));
        }
    }
}

#[test]
fn records_satisfy_their_invariants() {
    check_records(KAPPA);
}

#[test]
fn records_satisfy_their_invariants_kappa_7() {
    check_records(7);
}

/// Checks, after every move of the regenerated process, that the original
/// paths' vertices above the restart level and below the regenerated
/// moving level were all visited by the regenerated paths.
fn containment_run(seed: u64) -> Result<usize> {
    let starts = pair();
    let mut src = store(seed);
    let mut chain = RenewalChain::new(starts.clone(), KAPPA)?;
    let first = chain.next_renewal(&mut src)?;
    let restart = first.level + KAPPA as f64;
    let mut visited: Vec<Point> = Vec::new();
    let mut levels: Vec<f64> = Vec::new();
    chain.next_renewal_observed(&mut src, |st: &ExplorationState, mv: &Move| {
        visited.push(mv.to);
        levels.push(st.move_level());
    })?;
    let top = levels.last().copied().unwrap_or(restart);
    let mut original: Vec<Point> = Vec::new();
    for p in &first.positions {
        let mut cur = *p;
        while cur.y <= top {
            cur = ancestor_among(&cur, &mut src, None, &starts)?;
            if cur.y > restart && cur.y <= top && !original.contains(&cur) {
                original.push(cur);
            }
        }
    }
    original.sort_by(Point::time_order);
    let mut next = 0;
    let mut bad = 0;
    for (n, &level) in levels.iter().enumerate() {
        while next < original.len() && original[next].y <= level {
            if !visited[..=n].contains(&original[next]) {
                bad += 1;
            }
            next += 1;
        }
    }
    Ok(bad)
}

#[test]
fn original_paths_stay_inside_regenerated_paths() {
    for seed in 0..200u64 {
        assert_eq!(containment_run(seed).unwrap(), 0, "seed {seed}");
    }
}

/// Points of `inner` inside any of the boxes, points of `outer` elsewhere.
struct Patched {
    inner: PoissonStore,
    outer: PoissonStore,
    boxes: Vec<Rect>,
}

impl PointSource for Patched {
    fn for_each_in(&mut self, rect: &Rect, visit: &mut dyn FnMut(&Point)) -> Result<()> {
        let boxes = &self.boxes;
        self.inner.for_each_in(rect, &mut |p| {
            if boxes.iter().any(|b| b.contains(p)) {
                visit(p)
            }
        })?;
        self.outer.for_each_in(rect, &mut |p| {
            if !boxes.iter().any(|b| b.contains(p)) {
                visit(p)
            }
        })
    }
    fn intensity(&self) -> f64 {
        self.inner.intensity()
    }
    fn search_cap(&self) -> f64 {
        self.inner.search_cap()
    }
}

fn segment(chain: &mut RenewalChain, src: &mut dyn PointSource) -> Result<(RenewalRecord, Vec<Move>)> {
    let mut moves = Vec::new();
    let rec = chain.next_renewal_observed(src, |_, mv| moves.push(*mv))?;
    Ok((rec, moves))
}

#[test]
fn renewal_segments_only_read_their_block() {
    for seed in 0..100u64 {
        let mut src = store(seed);
        let mut chain = RenewalChain::new(pair(), KAPPA).unwrap();
        let skip = seed % 3;
        for _ in 0..skip {
            chain.next_renewal(&mut src).unwrap();
        }
        let starts = chain.current_starts().to_vec();
        let mut replay = chain.clone();
        let (rec, moves) = segment(&mut chain, &mut src).unwrap();
        let w = rec.block_size;
        let boxes = starts
            .iter()
            .map(|u| Rect::new(u.x - w, u.x + w, u.y, u.y + w))
            .collect();
        let mut patched = Patched {
            inner: src,
            outer: store(10_000 + seed),
            boxes,
        };
        let (rec2, moves2) = segment(&mut replay, &mut patched).unwrap();
        assert_eq!(rec, rec2, "seed {seed}");
        assert_eq!(moves, moves2, "seed {seed}");
    }
}

#[test]
fn single_walker_increments_symmetric_and_uncorrelated() {
    let mut dx = Vec::new();
    let mut betas_a = Vec::new();
    let mut betas_b = Vec::new();
    for seed in 0..50u64 {
        let recs = renewal_sequence(&[Point::new(0.0, 0.0)], &mut store(500 + seed), 101, KAPPA).unwrap();
        for w in recs.windows(2) {
            dx.push(w[1].u_new[0].x - w[0].u_new[0].x);
            betas_a.push(w[0].beta as f64);
            betas_b.push(w[1].beta as f64);
        }
    }
    let neg: Vec<f64> = dx.iter().map(|x| -x).collect();
    let ks = ks_two_sample(&dx, &neg).unwrap();
    assert!(ks.p_value > 0.01, "symmetry p = {}", ks.p_value);
    let rho = correlation(&betas_a, &betas_b).unwrap();
    let se = 1.0 / (betas_a.len() as f64).sqrt();
    assert!(rho.abs() <= 3.0 * se, "rho = {rho}");
}
