//! Reproducible homogeneous Poisson point processes on the plane.
//!
//! A [`PoissonStore`] splits the plane into cells of `cell_width ×
//! slab_height` and generates each cell on first use from a seed derived
//! from `(global seed, cell index)`. The realization therefore does not
//! depend on the order in which regions are requested, and extending a
//! store never changes points that were already generated.

use alloc::vec::Vec;

use hashbrown::HashMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::geom::{HistorySet, Point, Rect};
use crate::math::{derive_seed, floor, sqrt};

/// Anything the ancestor searches can query for points in a rectangle.
pub trait PointSource {
    /// Calls `visit` on every point lying in the closed rectangle.
    fn for_each_in(&mut self, rect: &Rect, visit: &mut dyn FnMut(&Point)) -> Result<()>;

    /// Mean number of points per unit area (used to size search radii).
    fn intensity(&self) -> f64;

    /// Largest radius a nearest-point search may reach before giving up.
    fn search_cap(&self) -> f64;

    /// Collects the points of `rect`, sorted by `(y, x)`.
    fn points_in(&mut self, rect: &Rect) -> Result<Vec<Point>> {
        let mut out = Vec::new();
        self.for_each_in(rect, &mut |p| out.push(*p))?;
        out.sort_by(Point::time_order);
        Ok(out)
    }
}

impl<S: PointSource + ?Sized> PointSource for &mut S {
    fn for_each_in(&mut self, rect: &Rect, visit: &mut dyn FnMut(&Point)) -> Result<()> {
        (**self).for_each_in(rect, visit)
    }
    fn intensity(&self) -> f64 {
        (**self).intensity()
    }
    fn search_cap(&self) -> f64 {
        (**self).search_cap()
    }
}

/// An explicit, finite list of points.
#[derive(Debug, Clone)]
pub struct FixedPoints {
    points: Vec<Point>,
    intensity: f64,
    search_cap: f64,
}

impl FixedPoints {
    pub fn new(points: Vec<Point>) -> Self {
        FixedPoints {
            points,
            intensity: 1.0,
            search_cap: 1.0e6,
        }
    }

    pub fn with_search_cap(mut self, cap: f64) -> Self {
        self.search_cap = cap;
        self
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }
}

impl PointSource for FixedPoints {
    fn for_each_in(&mut self, rect: &Rect, visit: &mut dyn FnMut(&Point)) -> Result<()> {
        self.points.iter().filter(|p| rect.contains(p)).for_each(visit);
        Ok(())
    }
    fn intensity(&self) -> f64 {
        self.intensity
    }
    fn search_cap(&self) -> f64 {
        self.search_cap
    }
}

/// Parameters of a [`PoissonStore`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoreConfig {
    pub intensity: f64,
    pub slab_height: f64,
    pub cell_width: f64,
    /// Maximum number of materialized cells.
    pub max_cells: usize,
    /// Radius cap for nearest-point searches.
    pub search_cap: f64,
}

impl StoreConfig {
    /// Defaults with cells scaled to hold about 64 points each.
    pub fn new(intensity: f64) -> Self {
        let side = if intensity > 0.0 && intensity.is_finite() {
            8.0 / sqrt(intensity)
        } else {
            8.0
        };
        StoreConfig {
            intensity,
            slab_height: side,
            cell_width: side,
            search_cap: 1.0e4 / sqrt(intensity.clamp(1e-12, 1.0)),
            ..StoreConfig::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.intensity > 0.0 && self.intensity.is_finite()) {
            return Err(Error::InvalidArgument("intensity must be positive and finite"));
        }
        if !(self.slab_height > 0.0 && self.cell_width > 0.0) {
            return Err(Error::InvalidArgument("cell dimensions must be positive"));
        }
        Ok(())
    }
}

impl Default for StoreConfig {
    fn default() -> Self {
        StoreConfig {
            intensity: 1.0,
            slab_height: 8.0,
            cell_width: 8.0,
            max_cells: 1 << 22,
            search_cap: 1.0e4,
        }
    }
}

type CellKey = (i64, i64);

/// Lazily generated Poisson point process with optional conditioning.
///
/// Points falling in the `forbidden` region are discarded (thinning) and
/// `forced` points are always present.
#[derive(Debug, Clone)]
pub struct PoissonStore {
    config: StoreConfig,
    seed: u64,
    cells: HashMap<CellKey, Vec<Point>>,
    forbidden: Option<HistorySet>,
    forced: Vec<Point>,
    covered: Option<Rect>,
}

impl PoissonStore {
    pub fn new(config: StoreConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        Ok(PoissonStore {
            config,
            seed,
            cells: HashMap::new(),
            forbidden: None,
            forced: Vec::new(),
            covered: None,
        })
    }

    /// Unit-cell defaults at the given intensity.
    pub fn with_intensity(intensity: f64, seed: u64) -> Result<Self> {
        PoissonStore::new(StoreConfig::new(intensity), seed)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn config(&self) -> &StoreConfig {
        &self.config
    }

    /// Conditions the process on having no points in `region`.
    pub fn set_forbidden(&mut self, region: HistorySet) {
        self.forbidden = Some(region);
    }

    /// Injects deterministic points. Duplicates of already forced points
    /// are ignored.
    pub fn force_points(&mut self, points: impl IntoIterator<Item = Point>) {
        for p in points {
            if !self.forced.contains(&p) {
                self.forced.push(p);
            }
        }
    }

    pub fn forced(&self) -> &[Point] {
        &self.forced
    }

    pub fn materialized_cells(&self) -> usize {
        self.cells.len()
    }

    /// Drops materialized cells lying entirely below ordinate `y`.
    /// Cells are pure functions of the seed and their index, so a later
    /// query regenerates them identically.
    pub fn discard_below(&mut self, y: f64) -> usize {
        let h = self.config.slab_height;
        let before = self.cells.len();
        self.cells.retain(|&(_, iy), _| (iy + 1) as f64 * h > y);
        before - self.cells.len()
    }

    /// Bounding rectangle of all explicit extensions so far.
    pub fn covered(&self) -> Option<Rect> {
        self.covered
    }

    fn cell_range(&self, rect: &Rect) -> (i64, i64, i64, i64) {
        let w = self.config.cell_width;
        let h = self.config.slab_height;
        (
            floor(rect.x0 / w) as i64,
            floor(rect.x1 / w) as i64,
            floor(rect.y0 / h) as i64,
            floor(rect.y1 / h) as i64,
        )
    }

    fn generate_cell(&self, key: CellKey) -> Vec<Point> {
        let (ix, iy) = key;
        let w = self.config.cell_width;
        let h = self.config.slab_height;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, &[ix as u64, iy as u64]));
        let mean = self.config.intensity * w * h;
        let count = Poisson::new(mean)
            .map(|d| d.sample(&mut rng) as usize)
            .unwrap_or(0);
        let x0 = ix as f64 * w;
        let y0 = iy as f64 * h;
        let mut pts: Vec<Point> = (0..count)
            .map(|_| {
                let u: f64 = rng.random();
                let v: f64 = rng.random();
                Point::new(x0 + u * w, y0 + v * h)
            })
            .collect();
        pts.sort_by(|a, b| a.x.total_cmp(&b.x));
        pts
    }

    fn ensure_cells(&mut self, rect: &Rect) -> Result<()> {
        let (cx0, cx1, cy0, cy1) = self.cell_range(rect);
        let wanted = ((cx1 - cx0 + 1) as i128 * (cy1 - cy0 + 1) as i128) as u128;
        if wanted > self.config.max_cells as u128 {
            return Err(Error::ResourceExhausted {
                cells: wanted.min(usize::MAX as u128) as usize,
                budget: self.config.max_cells,
            });
        }
        for iy in cy0..=cy1 {
            for ix in cx0..=cx1 {
                if !self.cells.contains_key(&(ix, iy)) {
                    if self.cells.len() >= self.config.max_cells {
                        return Err(Error::ResourceExhausted {
                            cells: self.cells.len() + 1,
                            budget: self.config.max_cells,
                        });
                    }
                    let pts = self.generate_cell((ix, iy));
                    self.cells.insert((ix, iy), pts);
                }
            }
        }
        Ok(())
    }

    /// Materializes every cell meeting `[-need_halfwidth, need_halfwidth] ×
    /// [bottom, need_top]`, where `bottom` is the lowest ordinate covered by
    /// previous extensions (or 0 for a fresh store).
    pub fn extend(&mut self, need_top: f64, need_halfwidth: f64) -> Result<()> {
        if !(need_top.is_finite() && need_halfwidth.is_finite()) {
            return Err(Error::InvalidArgument("extension bounds must be finite"));
        }
        let bottom = self.covered.map_or(0.0, |r| r.y0.min(0.0));
        let rect = Rect::new(-need_halfwidth.abs(), need_halfwidth.abs(), bottom, need_top.max(bottom));
        self.extend_to(&rect)
    }

    /// Materializes every cell meeting `rect`.
    pub fn extend_to(&mut self, rect: &Rect) -> Result<()> {
        self.ensure_cells(rect)?;
        self.covered = Some(match self.covered {
            None => *rect,
            Some(c) => Rect::new(
                c.x0.min(rect.x0),
                c.x1.max(rect.x1),
                c.y0.min(rect.y0),
                c.y1.max(rect.y1),
            ),
        });
        Ok(())
    }

    /// All points of the conditioned process inside `rect`, sorted by
    /// `(y, x)`. Degenerate rectangles yield an empty list.
    pub fn sample_region(&mut self, rect: &Rect) -> Result<Vec<Point>> {
        if rect.is_degenerate() {
            return Ok(Vec::new());
        }
        self.points_in(rect)
    }
}

impl PointSource for PoissonStore {
    fn for_each_in(&mut self, rect: &Rect, visit: &mut dyn FnMut(&Point)) -> Result<()> {
        self.ensure_cells(rect)?;
        let (cx0, cx1, cy0, cy1) = self.cell_range(rect);
        for iy in cy0..=cy1 {
            for ix in cx0..=cx1 {
                let cell = &self.cells[&(ix, iy)];
                let start = cell.partition_point(|p| p.x < rect.x0);
                for p in &cell[start..] {
                    if p.x > rect.x1 {
                        break;
                    }
                    if p.y < rect.y0 || p.y > rect.y1 {
                        continue;
                    }
                    if let Some(f) = &self.forbidden {
                        if f.contains(p) {
                            continue;
                        }
                    }
                    visit(p);
                }
            }
        }
        for p in &self.forced {
            if rect.contains(p) {
                visit(p);
            }
        }
        Ok(())
    }

    fn intensity(&self) -> f64 {
        self.config.intensity
    }

    fn search_cap(&self) -> f64 {
        self.config.search_cap
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::SemiBall;
    use alloc::vec;

    fn store(seed: u64) -> PoissonStore {
        PoissonStore::with_intensity(1.0, seed).unwrap()
    }

    #[test]
    fn degenerate_rect_is_empty() {
        let mut s = store(1);
        assert!(s.sample_region(&Rect::new(0.0, 0.0, 0.0, 10.0)).unwrap().is_empty());
        assert!(s.sample_region(&Rect::new(0.0, 10.0, 3.0, 3.0)).unwrap().is_empty());
    }

    #[test]
    fn rejects_bad_intensity() {
        assert!(PoissonStore::with_intensity(0.0, 1).is_err());
        assert!(PoissonStore::with_intensity(-1.0, 1).is_err());
        assert!(PoissonStore::with_intensity(f64::NAN, 1).is_err());
    }

    #[test]
    fn forbidden_whole_rect_keeps_forced_point() {
        let mut s = store(3);
        let big = SemiBall::new(Point::new(0.0, -100.0), 1000.0);
        s.set_forbidden(HistorySet::from_balls(-100.0, vec![big]));
        s.force_points([Point::new(0.0, 1.0), Point::new(0.0, 1.0)]);
        let got = s.sample_region(&Rect::new(-5.0, 5.0, -5.0, 5.0)).unwrap();
        assert_eq!(got, vec![Point::new(0.0, 1.0)]);
    }

    #[test]
    fn extension_is_idempotent_and_append_only() {
        let mut a = store(11);
        a.extend(16.0, 16.0).unwrap();
        let region = Rect::new(-16.0, 16.0, 0.0, 16.0);
        let before = a.sample_region(&region).unwrap();
        let cells = a.materialized_cells();
        a.extend(16.0, 16.0).unwrap();
        assert_eq!(a.materialized_cells(), cells);
        // one more slab on top
        a.extend(24.0, 16.0).unwrap();
        assert_eq!(a.sample_region(&region).unwrap(), before);
        let new_slab = a.sample_region(&Rect::new(-16.0, 16.0, 16.0, 24.0)).unwrap();
        assert!(new_slab.iter().all(|p| p.y >= 16.0));

        let mut b = store(11);
        b.extend(8.0, 16.0).unwrap();
        b.extend(24.0, 16.0).unwrap();
        let all = Rect::new(-16.0, 16.0, 0.0, 24.0);
        assert_eq!(a.sample_region(&all).unwrap(), b.sample_region(&all).unwrap());
    }

    #[test]
    fn query_order_does_not_change_realization() {
        let mut a = store(5);
        let mut b = store(5);
        let r1 = Rect::new(-3.0, 3.0, 0.0, 3.0);
        let r2 = Rect::new(40.0, 50.0, 40.0, 50.0);
        let a1 = a.sample_region(&r1).unwrap();
        let a2 = a.sample_region(&r2).unwrap();
        let b2 = b.sample_region(&r2).unwrap();
        let b1 = b.sample_region(&r1).unwrap();
        assert_eq!(a1, b1);
        assert_eq!(a2, b2);
    }

    #[test]
    fn memory_budget_is_enforced() {
        let cfg = StoreConfig {
            max_cells: 4,
            ..StoreConfig::default()
        };
        let mut s = PoissonStore::new(cfg, 0).unwrap();
        let err = s.extend(100.0, 100.0).unwrap_err();
        assert!(matches!(err, Error::ResourceExhausted { .. }));
    }
}
