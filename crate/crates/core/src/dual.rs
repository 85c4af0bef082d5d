//! The dual (backward) forest and primal/dual non-crossing checks.
//!
//! Every Poisson point `x` carries two dual vertices, `l̂_x` and `r̂_x`,
//! placed halfway between `x` and the nearest forest path to its left and
//! right at time `x.y` (paths started strictly before `x.y`). From a dual
//! vertex `v` the dual edge goes down to `l̂` of the lower endpoint of the
//! right flanking edge at `v` if that endpoint is higher than the left
//! one's, and to `r̂` of the left lower endpoint otherwise.
//!
//! Everything is computed inside a window extended by a margin; flanks
//! whose position falls in the margin trigger a horizontal expansion.

use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use hashbrown::HashMap;

use crate::error::{Error, Result};
use crate::forest::{ancestor, PathPolyline};
use crate::geom::{Point, Rect};
use crate::ppp::PointSource;

/// Default margin around the window, in units of `1/√λ`.
pub const DEFAULT_MARGIN: f64 = 8.0;
const MAX_EXPANSIONS: u32 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Left,
    Right,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Left => "l",
            Side::Right => "r",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualVertex {
    pub location: Point,
    pub side: Side,
    /// The Poisson point this vertex flanks.
    pub parent_primal: Point,
}

/// A dual edge, pointing downwards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualEdge {
    pub from: DualVertex,
    pub to: DualVertex,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Flank {
    lower: Point,
    pos: f64,
    /// `dx/dy` of the crossing edge; orders edges meeting at one point.
    slope: f64,
}

impl Flank {
    fn key_cmp(&self, other: &Flank) -> Ordering {
        self.pos
            .total_cmp(&other.pos)
            .then(other.slope.total_cmp(&self.slope))
    }
}

type Key = (u64, u64);

fn key(p: &Point) -> Key {
    (p.x.to_bits(), p.y.to_bits())
}

/// Primal edges around a window, with memoized dual edges.
#[derive(Debug, Clone)]
pub struct DualForest {
    window: Rect,
    region: Rect,
    margin: f64,
    /// `(p, h(p))` for every point of the region, sorted by `p.y`.
    edges: Vec<(Point, Point)>,
    max_len: f64,
    parents: HashMap<Key, Point>,
    dual_memo: HashMap<(Key, Side), DualVertex>,
}

impl DualForest {
    /// Builds the primal edges around `window` with the default margin.
    pub fn build<S: PointSource + ?Sized>(source: &mut S, window: Rect) -> Result<Self> {
        let m = DEFAULT_MARGIN / crate::math::sqrt(source.intensity());
        DualForest::with_margin(source, window, m)
    }

    pub fn with_margin<S: PointSource + ?Sized>(source: &mut S, window: Rect, margin: f64) -> Result<Self> {
        if window.is_degenerate() {
            return Err(Error::InvalidArgument("dual window must have positive area"));
        }
        if !(margin > 0.0) {
            return Err(Error::InvalidArgument("dual margin must be positive"));
        }
        let region = Rect::new(
            window.x0 - 2.0 * margin,
            window.x1 + 2.0 * margin,
            window.y0 - 2.0 * margin,
            window.y1 + margin,
        );
        let mut f = DualForest {
            window,
            region,
            margin,
            edges: Vec::new(),
            max_len: 0.0,
            parents: HashMap::new(),
            dual_memo: HashMap::new(),
        };
        f.add_strip(source, region, None)?;
        Ok(f)
    }

    pub fn window(&self) -> Rect {
        self.window
    }

    pub fn region(&self) -> Rect {
        self.region
    }

    fn add_strip<S: PointSource + ?Sized>(
        &mut self,
        source: &mut S,
        strip: Rect,
        skip: Option<Rect>,
    ) -> Result<()> {
        for p in source.points_in(&strip)? {
            if skip.is_some_and(|r| r.contains(&p)) {
                continue;
            }
            let h = self.parent(source, &p)?;
            self.max_len = self.max_len.max(p.dist(&h));
            self.edges.push((p, h));
        }
        self.edges.sort_by(|a, b| a.0.time_order(&b.0));
        Ok(())
    }

    fn grow<S: PointSource + ?Sized>(&mut self, source: &mut S) -> Result<()> {
        let w = self.region.width() / 2.0;
        let old = self.region;
        self.region = Rect::new(old.x0 - w, old.x1 + w, old.y0, old.y1);
        self.add_strip(source, Rect::new(old.x0 - w, old.x0, old.y0, old.y1), Some(old))?;
        self.add_strip(source, Rect::new(old.x1, old.x1 + w, old.y0, old.y1), Some(old))?;
        Ok(())
    }

    fn parent<S: PointSource + ?Sized>(&mut self, source: &mut S, p: &Point) -> Result<Point> {
        if let Some(h) = self.parents.get(&key(p)) {
            return Ok(*h);
        }
        let h = ancestor(p, source)?;
        self.parents.insert(key(p), h);
        Ok(h)
    }

    /// Nearest crossing edge of the line `y = at.y` strictly on `side` of
    /// `at.x`, if it is certainly the true one.
    fn flank_exact(&self, at: &Point, side: Side) -> Option<Flank> {
        let s = at.y;
        if s < self.region.y0 + self.margin {
            return None;
        }
        let lo = self.edges.partition_point(|e| e.0.y < s - self.max_len);
        let hi = self.edges.partition_point(|e| e.0.y < s);
        let mut best: Option<Flank> = None;
        for (p, q) in &self.edges[lo..hi] {
            if q.y < s {
                continue;
            }
            let slope = (q.x - p.x) / (q.y - p.y);
            let pos = if q.y == s { q.x } else { p.x + slope * (s - p.y) };
            let f = Flank {
                lower: *p,
                pos,
                slope,
            };
            let keep = match side {
                Side::Right => pos > at.x && best.is_none_or(|b| f.key_cmp(&b).is_lt()),
                Side::Left => pos < at.x && best.is_none_or(|b| f.key_cmp(&b).is_gt()),
            };
            if keep {
                best = Some(f);
            }
        }
        let b = best?;
        let inner = b.pos >= self.region.x0 + self.margin && b.pos <= self.region.x1 - self.margin;
        inner.then_some(b)
    }

    fn flank<S: PointSource + ?Sized>(&mut self, source: &mut S, at: &Point, side: Side) -> Result<Flank> {
        if at.y < self.region.y0 + self.margin {
            return Err(Error::Domain {
                what: "dual query below the exact part of the region",
                value: at.y,
            });
        }
        let mut tries = 0;
        loop {
            if let Some(f) = self.flank_exact(at, side) {
                return Ok(f);
            }
            if tries == MAX_EXPANSIONS {
                return Err(Error::ResourceExhausted {
                    cells: self.edges.len(),
                    budget: MAX_EXPANSIONS as usize,
                });
            }
            self.grow(source)?;
            tries += 1;
        }
    }

    /// The forest path nearest to `p` on `side` at time `p.y`, among paths
    /// started strictly before `p.y`, from the lower endpoint of its
    /// crossing edge up to the window top.
    pub fn flanking_path<S: PointSource + ?Sized>(
        &mut self,
        source: &mut S,
        p: &Point,
        side: Side,
    ) -> Result<PathPolyline> {
        let f = self.flank(source, p, side)?;
        let top = self.window.y1.max(p.y);
        self.primal_path(source, f.lower, top)
    }

    /// Primal path from `p` until it passes ordinate `top`.
    pub fn primal_path<S: PointSource + ?Sized>(
        &mut self,
        source: &mut S,
        p: Point,
        top: f64,
    ) -> Result<PathPolyline> {
        let mut v = alloc::vec![p];
        let mut cur = p;
        while cur.y <= top {
            cur = self.parent(source, &cur)?;
            v.push(cur);
        }
        PathPolyline::new(v)
    }

    pub fn dual_vertex<S: PointSource + ?Sized>(
        &mut self,
        source: &mut S,
        p: &Point,
        side: Side,
    ) -> Result<DualVertex> {
        let f = self.flank(source, p, side)?;
        Ok(DualVertex {
            location: Point::new(0.5 * (p.x + f.pos), p.y),
            side,
            parent_primal: *p,
        })
    }

    /// Target of the unique dual edge leaving `v`.
    pub fn dual_ancestor<S: PointSource + ?Sized>(
        &mut self,
        source: &mut S,
        v: &DualVertex,
    ) -> Result<DualVertex> {
        let mk = (key(&v.parent_primal), v.side);
        if let Some(d) = self.dual_memo.get(&mk) {
            return Ok(*d);
        }
        let r = self.flank(source, &v.location, Side::Right)?;
        let l = self.flank(source, &v.location, Side::Left)?;
        let next = if r.lower.y > l.lower.y {
            self.dual_vertex(source, &r.lower, Side::Left)?
        } else {
            self.dual_vertex(source, &l.lower, Side::Right)?
        };
        self.dual_memo.insert(mk, next);
        Ok(next)
    }

    /// Dual vertices from `v` downwards, ending with the first one below
    /// the window.
    pub fn dual_path<S: PointSource + ?Sized>(
        &mut self,
        source: &mut S,
        v: DualVertex,
    ) -> Result<Vec<DualVertex>> {
        let mut out = alloc::vec![v];
        let mut cur = v;
        while cur.location.y >= self.window.y0 {
            cur = self.dual_ancestor(source, &cur)?;
            out.push(cur);
        }
        Ok(out)
    }

    /// Poisson points inside the window, sorted by `(y, x)`.
    pub fn window_points(&self) -> Vec<Point> {
        let w = self.window;
        let mut v: Vec<Point> = self.edges.iter().map(|e| e.0).filter(|p| w.contains(p)).collect();
        v.sort_by(Point::time_order);
        v
    }

    /// Both dual vertices of every window point.
    pub fn window_vertices<S: PointSource + ?Sized>(&mut self, source: &mut S) -> Result<Vec<DualVertex>> {
        let mut out = Vec::new();
        for p in self.window_points() {
            out.push(self.dual_vertex(source, &p, Side::Left)?);
            out.push(self.dual_vertex(source, &p, Side::Right)?);
        }
        Ok(out)
    }

    /// The outgoing edge of every window dual vertex.
    pub fn dual_edges<S: PointSource + ?Sized>(&mut self, source: &mut S) -> Result<Vec<DualEdge>> {
        let verts = self.window_vertices(source)?;
        verts
            .into_iter()
            .map(|v| {
                let to = self.dual_ancestor(source, &v)?;
                Ok(DualEdge { from: v, to })
            })
            .collect()
    }

    /// Primal paths from the window points to the window top.
    pub fn primal_paths<S: PointSource + ?Sized>(&mut self, source: &mut S) -> Result<Vec<PathPolyline>> {
        let top = self.window.y1;
        self.window_points()
            .into_iter()
            .map(|p| self.primal_path(source, p, top))
            .collect()
    }

    /// Dual paths from every window dual vertex, as polylines in
    /// increasing time (their starting time is their top end).
    pub fn dual_paths<S: PointSource + ?Sized>(&mut self, source: &mut S) -> Result<Vec<PathPolyline>> {
        let verts = self.window_vertices(source)?;
        verts
            .into_iter()
            .map(|v| {
                let mut pts: Vec<Point> = self.dual_path(source, v)?.iter().map(|d| d.location).collect();
                pts.reverse();
                PathPolyline::new(pts)
            })
            .collect()
    }
}

/// Outcome of [`check_noncrossing`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CrossingReport {
    /// Pairs with a common time interval that were examined.
    pub pairs_checked: u64,
    /// Pairs whose difference takes both strict signs.
    pub violations: u64,
}

/// Counts primal/dual pairs `(π, π̂)` with `σ_π < σ_π̂` such that
/// `(π(s) - π̂(s))(π(t) - π̂(t)) < 0` for some `s < t`. Differences are
/// evaluated at every vertex time and on a grid of step `resolution`.
pub fn check_noncrossing(primal: &[PathPolyline], dual: &[PathPolyline], resolution: f64) -> CrossingReport {
    let mut rep = CrossingReport::default();
    let mut times: Vec<f64> = Vec::new();
    for d in dual {
        let sd = d.end_time();
        for p in primal {
            if !(p.start_time() < sd) {
                continue;
            }
            let lo = p.start_time().max(d.start_time());
            let hi = p.end_time().min(sd);
            if !(lo < hi) {
                continue;
            }
            rep.pairs_checked += 1;
            let (a0, a1) = p.x_range_on(lo, hi);
            let (b0, b1) = d.x_range_on(lo, hi);
            if a1 < b0 || b1 < a0 {
                continue;
            }
            times.clear();
            times.push(lo);
            times.push(hi);
            times.extend(p.vertices().iter().chain(d.vertices()).map(|v| v.y).filter(|&y| y > lo && y < hi));
            if resolution > 0.0 {
                let mut t = lo + resolution;
                while t < hi {
                    times.push(t);
                    t += resolution;
                }
            }
            let (mut pos, mut neg) = (false, false);
            for &t in &times {
                let diff = p.eval_unchecked(t) - d.eval_unchecked(t);
                pos |= diff > 0.0;
                neg |= diff < 0.0;
            }
            if pos && neg {
                rep.violations += 1;
            }
        }
    }
    rep
}
