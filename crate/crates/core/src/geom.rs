//! Points, rectangles, semi-balls, cones and history sets.
//!
//! All regions are closed: a semi-ball `B⁺(c, r)` is the closed disc of
//! radius `r` around `c` intersected with the closed half-plane
//! `{y ≥ c.y}`, and cone boundary rays belong to the cone.

use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// A planar location: `x` is space, `y` is time.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    #[inline]
    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    #[inline]
    pub fn dist2(&self, other: &Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    #[inline]
    pub fn dist(&self, other: &Point) -> f64 {
        crate::math::hypot(self.x - other.x, self.y - other.y)
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        crate::math::hypot(self.x, self.y)
    }

    #[inline]
    pub fn offset(&self, dx: f64, dy: f64) -> Point {
        Point::new(self.x + dx, self.y + dy)
    }

    /// Total order used for deterministic tie-breaking: smaller ordinate
    /// first, then smaller abscissa.
    #[inline]
    pub fn time_order(&self, other: &Point) -> core::cmp::Ordering {
        self.y
            .total_cmp(&other.y)
            .then_with(|| self.x.total_cmp(&other.x))
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Closed axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub const fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Rect { x0, x1, y0, y1 }
    }

    /// Square of half-side `r` around `c`.
    pub fn around(c: Point, r: f64) -> Self {
        Rect::new(c.x - r, c.x + r, c.y - r, c.y + r)
    }

    #[inline]
    pub fn contains(&self, p: &Point) -> bool {
        p.x >= self.x0 && p.x <= self.x1 && p.y >= self.y0 && p.y <= self.y1
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        if self.is_degenerate() {
            0.0
        } else {
            self.width() * self.height()
        }
    }

    /// True when the rectangle has zero (or negative) extent along an axis.
    pub fn is_degenerate(&self) -> bool {
        !(self.x1 > self.x0 && self.y1 > self.y0)
    }
}

/// Closed upper semi-ball `B(center, radius) ∩ {y ≥ center.y}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemiBall {
    pub center: Point,
    pub radius: f64,
}

impl SemiBall {
    pub fn new(center: Point, radius: f64) -> Self {
        debug_assert!(radius >= 0.0);
        SemiBall { center, radius }
    }

    /// Highest ordinate reached by the semi-ball.
    #[inline]
    pub fn top(&self) -> f64 {
        self.center.y + self.radius
    }

    #[inline]
    pub fn contains(&self, p: &Point) -> bool {
        in_semiball(p, self)
    }
}

/// Membership in a closed semi-ball.
#[inline]
pub fn in_semiball(p: &Point, b: &SemiBall) -> bool {
    p.y >= b.center.y && p.dist2(&b.center) <= b.radius * b.radius
}

/// The explored region of the joint exploration process: a union of
/// semi-balls intersected with the half-plane above `clip_level`.
#[derive(Debug, Clone, PartialEq)]
pub struct HistorySet {
    clip_level: f64,
    balls: Vec<SemiBall>,
}

impl HistorySet {
    pub fn empty(clip_level: f64) -> Self {
        HistorySet {
            clip_level,
            balls: Vec::new(),
        }
    }

    /// Builds a history set, dropping balls that do not reach above the
    /// clip level.
    pub fn from_balls(clip_level: f64, balls: impl IntoIterator<Item = SemiBall>) -> Self {
        let mut h = HistorySet::empty(clip_level);
        for b in balls {
            h.insert(b);
        }
        h
    }

    pub fn clip_level(&self) -> f64 {
        self.clip_level
    }

    pub fn balls(&self) -> &[SemiBall] {
        &self.balls
    }

    pub fn is_empty(&self) -> bool {
        self.balls.is_empty()
    }

    /// Adds a semi-ball; balls whose top does not exceed the clip level
    /// carry no area above it and are dropped.
    pub fn insert(&mut self, ball: SemiBall) {
        if ball.top() > self.clip_level {
            self.balls.push(ball);
        }
    }

    /// Membership: above the clip level and inside one retained ball.
    pub fn contains(&self, p: &Point) -> bool {
        p.y >= self.clip_level && self.balls.iter().any(|b| in_semiball(p, b))
    }

    /// Height of the history set above its clip level; zero when empty.
    pub fn height(&self) -> f64 {
        let top = self
            .balls
            .iter()
            .map(SemiBall::top)
            .fold(f64::NEG_INFINITY, f64::max);
        if top.is_finite() {
            (top - self.clip_level).max(0.0)
        } else {
            0.0
        }
    }

    /// Highest ordinate of the history set, or the clip level when empty.
    pub fn top(&self) -> f64 {
        self.clip_level + self.height()
    }

    /// Raises the clip level and removes balls lying entirely below it.
    pub fn prune(&mut self, new_clip: f64) -> Result<()> {
        if new_clip < self.clip_level {
            return Err(Error::ContractViolation("history clip level must not decrease"));
        }
        self.clip_level = new_clip;
        self.balls.retain(|b| b.top() > new_clip);
        Ok(())
    }

    /// Non-mutating variant of [`HistorySet::prune`].
    pub fn pruned(&self, new_clip: f64) -> Result<HistorySet> {
        let mut h = self.clone();
        h.prune(new_clip)?;
        Ok(h)
    }
}

/// Membership in the closed cone of half-aperture π/4 around the upward
/// vertical axis, apex excluded: `|dx| ≤ dy` and `dy > 0`.
#[inline]
pub fn cone_contains(apex: &Point, p: &Point) -> bool {
    let dy = p.y - apex.y;
    dy > 0.0 && (p.x - apex.x).abs() <= dy
}
