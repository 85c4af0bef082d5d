//! Radial spanning tree rooted at the origin, and a finite proxy for the
//! number of semi-infinite branches crossing a circle.
//!
//! The parent of `x` is the nearest point among the Poisson points of
//! strictly smaller norm and the origin itself.

use alloc::vec::Vec;

use hashbrown::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::geom::{Point, Rect};
use crate::math::sqrt;
use crate::ppp::PointSource;

/// Band beyond `R_out` scanned for edges crossing the outer circle, in
/// units of `1/√λ`.
pub const OUTER_BAND: f64 = 5.0;

/// Nearest point of strictly smaller norm, or the origin.
pub fn rst_ancestor<S: PointSource + ?Sized>(x: &Point, source: &mut S) -> Result<Point> {
    if !x.is_finite() {
        return Err(Error::InvalidArgument("RST query point must be finite"));
    }
    let nx = x.norm();
    if nx == 0.0 {
        return Err(Error::InvalidArgument("the origin has no RST parent"));
    }
    let mut r = (2.0 / sqrt(source.intensity())).min(nx);
    loop {
        let r2 = r * r;
        let mut best: Option<(f64, Point)> = None;
        let rect = Rect::new(x.x - r, x.x + r, x.y - r, x.y + r);
        source.for_each_in(&rect, &mut |p| {
            if !(p.norm() < nx) {
                return;
            }
            let d2 = p.dist2(x);
            if d2 > r2 {
                return;
            }
            let better = match best {
                None => true,
                Some((bd2, bp)) => d2 < bd2 || (d2 == bd2 && p.norm() < bp.norm()),
            };
            if better {
                best = Some((d2, *p));
            }
        })?;
        if let Some((d2, p)) = best {
            // the origin wins ties
            return Ok(if d2 < nx * nx { p } else { Point::ORIGIN });
        }
        if r >= nx {
            return Ok(Point::ORIGIN);
        }
        r = (2.0 * r).min(nx);
    }
}

/// The RST restricted to the points of a disc.
#[derive(Debug, Clone, PartialEq)]
pub struct RstTree {
    /// Points sorted by norm; index `i` refers to `points[i]`.
    pub points: Vec<Point>,
    /// Parent index, `None` for the origin.
    pub parent: Vec<Option<usize>>,
}

impl RstTree {
    /// All Poisson points of norm at most `radius` with their parents.
    pub fn build<S: PointSource + ?Sized>(source: &mut S, radius: f64) -> Result<Self> {
        let mut pts: Vec<Point> = source
            .points_in(&Rect::new(-radius, radius, -radius, radius))?
            .into_iter()
            .filter(|p| p.norm() <= radius)
            .collect();
        pts.sort_by(|a, b| a.norm().total_cmp(&b.norm()).then(a.time_order(b)));
        let index: HashMap<(u64, u64), usize> = pts
            .iter()
            .enumerate()
            .map(|(i, p)| ((p.x.to_bits(), p.y.to_bits()), i))
            .collect();
        let mut parent = Vec::with_capacity(pts.len());
        for p in &pts {
            let a = rst_ancestor(p, source)?;
            parent.push(if a == Point::ORIGIN {
                None
            } else {
                Some(*index.get(&(a.x.to_bits(), a.y.to_bits())).ok_or(Error::ContractViolation(
                    "RST parent lies outside the disc",
                ))?)
            });
        }
        Ok(RstTree { points: pts, parent })
    }

    /// Parent norms decrease strictly and every branch ends at the origin.
    pub fn is_valid(&self) -> bool {
        self.parent.iter().enumerate().all(|(i, par)| match par {
            None => true,
            Some(j) => self.points[*j].norm() < self.points[i].norm(),
        })
    }
}

/// Number of distinct edges through which the RST branches crossing the
/// circle of radius `r_out` cross the circle of radius `r`.
pub fn chi_r_proxy<S: PointSource + ?Sized>(r: f64, r_out: f64, source: &mut S) -> Result<usize> {
    Ok(chi_r_proxy_checked(r, r_out, source)?.0)
}

/// As [`chi_r_proxy`], also returning whether every traversed edge had a
/// strictly smaller parent norm.
pub fn chi_r_proxy_checked<S: PointSource + ?Sized>(
    r: f64,
    r_out: f64,
    source: &mut S,
) -> Result<(usize, bool)> {
    if !(r > 0.0 && r_out >= 2.0 * r) {
        return Err(Error::InvalidArgument("chi proxy needs r > 0 and R_out >= 2r"));
    }
    let band = r_out + OUTER_BAND / sqrt(source.intensity());
    let starts: Vec<Point> = source
        .points_in(&Rect::new(-band, band, -band, band))?
        .into_iter()
        .filter(|p| {
            let n = p.norm();
            n >= r_out && n <= band
        })
        .collect();
    let mut valid = true;
    let mut parent_of = |p: &Point, source: &mut S| -> Result<Point> {
        let a = rst_ancestor(p, source)?;
        valid &= a.norm() < p.norm();
        Ok(a)
    };
    let mut visited: HashSet<(u64, u64)> = HashSet::new();
    let mut crossings: HashSet<(u64, u64)> = HashSet::new();
    for s in starts {
        let first = parent_of(&s, source)?;
        if !(first.norm() < r_out) {
            continue;
        }
        let mut cur = s;
        let mut next = first;
        loop {
            if next.norm() < r {
                crossings.insert((cur.x.to_bits(), cur.y.to_bits()));
                break;
            }
            if !visited.insert((next.x.to_bits(), next.y.to_bits())) {
                break;
            }
            cur = next;
            next = parent_of(&cur, source)?;
        }
    }
    Ok((crossings.len(), valid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ppp::{FixedPoints, PoissonStore};
    use alloc::vec;

    fn fixed(pts: &[(f64, f64)]) -> FixedPoints {
        FixedPoints::new(pts.iter().map(|&(x, y)| Point::new(x, y)).collect())
    }

    #[test]
    fn ancestor_cases() {
        let mut s = fixed(&[(1.0, 0.0)]);
        assert_eq!(rst_ancestor(&Point::new(1.0, 0.0), &mut s).unwrap(), Point::ORIGIN);
        let mut s = fixed(&[(1.0, 0.0), (0.0, 5.0)]);
        assert_eq!(rst_ancestor(&Point::new(3.0, 0.0), &mut s).unwrap(), Point::new(1.0, 0.0));
        let mut s = fixed(&[(9.0, 1.0), (0.0, 3.0)]);
        assert_eq!(rst_ancestor(&Point::new(10.0, 0.0), &mut s).unwrap(), Point::new(9.0, 1.0));
        assert!(rst_ancestor(&Point::ORIGIN, &mut s).is_err());
    }

    #[test]
    fn ancestor_matches_exhaustive_scan() {
        let mut store = PoissonStore::with_intensity(1.0, 5).unwrap();
        let pts = store.points_in(&Rect::new(-15.0, 15.0, -15.0, 15.0)).unwrap();
        for x in pts.iter().filter(|p| p.norm() < 10.0) {
            let mut best = Point::ORIGIN;
            for p in &pts {
                if p.norm() < x.norm() && p.dist(x) < best.dist(x) {
                    best = *p;
                }
            }
            assert_eq!(rst_ancestor(x, &mut store).unwrap(), best);
        }
    }

    #[test]
    fn tree_is_valid() {
        let mut store = PoissonStore::with_intensity(1.0, 6).unwrap();
        let t = RstTree::build(&mut store, 20.0).unwrap();
        assert!(t.points.len() > 1000);
        assert!(t.is_valid());
    }

    #[test]
    fn chi_trivial_cases() {
        let mut empty = FixedPoints::new(vec![]);
        assert_eq!(chi_r_proxy(1.0, 4.0, &mut empty).unwrap(), 0);
        // a single ray of points: one branch
        let mut ray = fixed(&[(0.5, 0.0), (1.5, 0.0), (2.5, 0.0), (3.5, 0.0), (4.5, 0.0)]);
        assert_eq!(chi_r_proxy(1.0, 4.0, &mut ray).unwrap(), 1);
        assert!(chi_r_proxy(1.0, 1.5, &mut ray).is_err());
    }

    #[test]
    fn chi_nonincreasing_in_outer_radius() {
        for seed in 0..3 {
            let mut store = PoissonStore::with_intensity(1.0, seed).unwrap();
            let a = chi_r_proxy(10.0, 20.0, &mut store).unwrap();
            let b = chi_r_proxy(10.0, 40.0, &mut store).unwrap();
            let c = chi_r_proxy(10.0, 80.0, &mut store).unwrap();
            assert!(a >= b && b >= c, "{a} {b} {c}");
            assert!(c >= 1);
        }
    }
}
