//! The directed spanning forest: ancestor map and path tracing.
//!
//! The ancestor of `x` is the closest candidate point with a strictly larger
//! ordinate. Ties (possible only for injected points) are broken by smaller
//! ordinate, then smaller abscissa.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geom::{HistorySet, Point, Rect};
use crate::math::sqrt;
use crate::ppp::PointSource;

#[inline]
fn better(cand: &Point, d2: f64, best: &Option<(f64, Point)>) -> bool {
    match best {
        None => true,
        Some((bd2, bp)) => d2 < *bd2 || (d2 == *bd2 && cand.time_order(bp).is_lt()),
    }
}

/// Nearest candidate strictly above `x`.
///
/// Candidates are the points of `source` outside `exclude`, together with
/// every point of `extra` (which may lie inside `exclude`). The search
/// radius starts at `2/√λ` and doubles until a candidate is found in the
/// closed upper semi-ball of that radius.
pub fn ancestor_among<S: PointSource + ?Sized>(
    x: &Point,
    source: &mut S,
    exclude: Option<&HistorySet>,
    extra: &[Point],
) -> Result<Point> {
    if !x.is_finite() {
        return Err(Error::InvalidArgument("ancestor query point must be finite"));
    }
    let cap = source.search_cap();
    let mut r = 2.0 / sqrt(source.intensity());
    loop {
        let r2 = r * r;
        let mut best: Option<(f64, Point)> = None;
        let rect = Rect::new(x.x - r, x.x + r, x.y, x.y + r);
        source.for_each_in(&rect, &mut |p| {
            if p.y <= x.y {
                return;
            }
            let d2 = p.dist2(x);
            if d2 > r2 {
                return;
            }
            if let Some(h) = exclude {
                if h.contains(p) {
                    return;
                }
            }
            if better(p, d2, &best) {
                best = Some((d2, *p));
            }
        })?;
        for p in extra {
            if p.y > x.y {
                let d2 = p.dist2(x);
                if d2 <= r2 && better(p, d2, &best) {
                    best = Some((d2, *p));
                }
            }
        }
        if let Some((_, p)) = best {
            return Ok(p);
        }
        if r >= cap {
            return Err(Error::SearchOverflow { radius: r });
        }
        r = (2.0 * r).min(cap);
    }
}

/// DSF ancestor of `x` with no exclusions.
pub fn ancestor<S: PointSource + ?Sized>(x: &Point, source: &mut S) -> Result<Point> {
    ancestor_among(x, source, None, &[])
}

/// A piecewise linear path with strictly increasing vertex ordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct PathPolyline {
    vertices: Vec<Point>,
}

impl PathPolyline {
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::InvalidArgument("a path needs at least one vertex"));
        }
        if vertices.windows(2).any(|w| !(w[1].y > w[0].y)) {
            return Err(Error::InvalidArgument("path ordinates must increase strictly"));
        }
        Ok(PathPolyline { vertices })
    }

    pub fn single(p: Point) -> Self {
        PathPolyline { vertices: vec![p] }
    }

    pub(crate) fn push(&mut self, p: Point) {
        debug_assert!(p.y > self.end_time());
        self.vertices.push(p);
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn start(&self) -> Point {
        self.vertices[0]
    }

    pub fn end(&self) -> Point {
        *self.vertices.last().expect("non-empty path")
    }

    pub fn start_time(&self) -> f64 {
        self.vertices[0].y
    }

    pub fn end_time(&self) -> f64 {
        self.end().y
    }

    /// Abscissa of the path at time `t` (linear interpolation).
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t >= self.start_time() && t <= self.end_time()) {
            return Err(Error::Domain {
                what: "path evaluation time",
                value: t,
            });
        }
        Ok(self.eval_unchecked(t))
    }

    pub(crate) fn eval_unchecked(&self, t: f64) -> f64 {
        let v = &self.vertices;
        // first vertex with y >= t
        let i = v.partition_point(|p| p.y < t);
        if i == 0 {
            return v[0].x;
        }
        if i == v.len() {
            return v[v.len() - 1].x;
        }
        let (a, b) = (v[i - 1], v[i]);
        if b.y == t {
            return b.x;
        }
        a.x + (b.x - a.x) * (t - a.y) / (b.y - a.y)
    }

    /// Horizontal range covered on `[t0, t1]`.
    pub fn x_range_on(&self, t0: f64, t1: f64) -> (f64, f64) {
        let a = self.eval_unchecked(t0);
        let b = self.eval_unchecked(t1);
        let mut lo = a.min(b);
        let mut hi = a.max(b);
        for p in &self.vertices {
            if p.y > t0 && p.y < t1 {
                lo = lo.min(p.x);
                hi = hi.max(p.x);
            }
        }
        (lo, hi)
    }
}

/// Follows ancestors from `x` until the last vertex lies above `y_max`.
pub fn trace_path<S: PointSource + ?Sized>(
    x: Point,
    source: &mut S,
    y_max: f64,
) -> Result<PathPolyline> {
    let mut path = PathPolyline::single(x);
    while path.end_time() <= y_max {
        let next = ancestor(&path.end(), source)?;
        path.push(next);
    }
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::SemiBall;
    use crate::ppp::{FixedPoints, PoissonStore};

    fn fixed(pts: &[(f64, f64)]) -> FixedPoints {
        FixedPoints::new(pts.iter().map(|&(x, y)| Point::new(x, y)).collect()).with_search_cap(64.0)
    }

    #[test]
    fn ancestor_prefers_nearest() {
        let mut s = fixed(&[(0.5, 1.0), (-2.0, 0.1)]);
        assert_eq!(ancestor(&Point::ORIGIN, &mut s).unwrap(), Point::new(0.5, 1.0));
    }

    #[test]
    fn ancestor_requires_strictly_larger_ordinate() {
        let mut s = fixed(&[(1.0, 0.0), (0.0, 3.0)]);
        assert_eq!(ancestor(&Point::ORIGIN, &mut s).unwrap(), Point::new(0.0, 3.0));
    }

    #[test]
    fn ancestor_skips_excluded_points() {
        let mut s = fixed(&[(0.5, 1.0), (0.0, 2.0)]);
        let h = HistorySet::from_balls(0.0, [SemiBall::new(Point::new(0.5, 1.0), 0.1)]);
        let got = ancestor_among(&Point::ORIGIN, &mut s, Some(&h), &[]).unwrap();
        assert_eq!(got, Point::new(0.0, 2.0));
        // an extra point inside the excluded region is still a candidate
        let got = ancestor_among(&Point::ORIGIN, &mut s, Some(&h), &[Point::new(0.5, 1.0)]).unwrap();
        assert_eq!(got, Point::new(0.5, 1.0));
    }

    #[test]
    fn ancestor_ties_prefer_lower_then_left() {
        let mut s = fixed(&[(1.0, 1.0), (-1.0, 1.0), (0.0, 2.0f64.sqrt())]);
        assert_eq!(ancestor(&Point::ORIGIN, &mut s).unwrap(), Point::new(-1.0, 1.0));
    }

    #[test]
    fn ancestor_overflow_is_reported() {
        let mut s = fixed(&[(0.0, -1.0)]);
        assert!(matches!(
            ancestor(&Point::ORIGIN, &mut s),
            Err(Error::SearchOverflow { .. })
        ));
    }

    #[test]
    fn trace_cases() {
        let mut s = fixed(&[(0.0, 1.0), (0.0, 2.0)]);
        let p = trace_path(Point::ORIGIN, &mut s, -1.0).unwrap();
        assert_eq!(p.vertices().len(), 1);
        let p = trace_path(Point::ORIGIN, &mut s, 1.5).unwrap();
        assert_eq!(
            p.vertices(),
            &[Point::ORIGIN, Point::new(0.0, 1.0), Point::new(0.0, 2.0)]
        );
    }

    #[test]
    fn trace_is_deterministic() {
        let mut a = PoissonStore::with_intensity(1.0, 99).unwrap();
        let mut b = PoissonStore::with_intensity(1.0, 99).unwrap();
        let pa = trace_path(Point::new(0.3, 0.0), &mut a, 50.0).unwrap();
        let pb = trace_path(Point::new(0.3, 0.0), &mut b, 50.0).unwrap();
        assert_eq!(pa, pb);
        assert!(pa.end_time() > 50.0);
    }

    #[test]
    fn eval_cases() {
        let p = PathPolyline::new(alloc::vec![Point::ORIGIN, Point::new(2.0, 1.0)]).unwrap();
        assert_eq!(p.eval(0.5).unwrap(), 1.0);
        assert_eq!(p.eval(1.0).unwrap(), 2.0);
        assert_eq!(p.eval(0.0).unwrap(), 0.0);
        assert!(p.eval(1.5).is_err());
        assert!(p.eval(-0.1).is_err());
        let q = PathPolyline::new(alloc::vec![
            Point::ORIGIN,
            Point::new(2.0, 1.0),
            Point::new(2.0, 3.0)
        ])
        .unwrap();
        assert_eq!(q.eval(2.0).unwrap(), 2.0);
    }

    #[test]
    fn polyline_rejects_non_increasing_ordinates() {
        assert!(PathPolyline::new(alloc::vec![Point::ORIGIN, Point::new(1.0, 0.0)]).is_err());
        assert!(PathPolyline::new(alloc::vec![]).is_err());
    }
}
