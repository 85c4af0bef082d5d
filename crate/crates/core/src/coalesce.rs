//! Coalescence of two DSF paths, the gap chain between renewals and the
//! drift/moment diagnostics on its Lyapunov transform.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::forest::ancestor;
use crate::geom::Point;
use crate::math::abs;
use crate::ppp::PointSource;
use crate::renewal::RenewalChain;
use crate::stats::{proportion_se, Moments};

/// Abscissa tolerance under which two paths count as equal.
pub const MEET_TOL: f64 = 1e-9;

/// One coalescence measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct CoalescenceSample {
    /// Initial gap `u2.x - u1.x`.
    pub z0: f64,
    /// Meeting ordinate, `None` when censored at `cap`.
    pub t: Option<f64>,
    pub cap: f64,
    /// Renewal index at which the gap chain hits 0, when tracked and reached.
    pub nu: Option<u64>,
    /// Gap chain `Z_0, Z_1, ...` (empty unless tracked).
    pub z_path: Vec<f64>,
    /// Ordinates of the regenerated starting points, aligned with `z_path`.
    pub renewal_levels: Vec<f64>,
}

impl CoalescenceSample {
    pub fn censored(&self) -> bool {
        self.t.is_none()
    }

    /// Whether the paths are still apart at ordinate `t`.
    pub fn survives(&self, t: f64) -> bool {
        self.t.is_none_or(|ct| ct > t)
    }
}

struct Segment {
    a: Point,
    b: Point,
}

impl Segment {
    fn at(&self, t: f64) -> f64 {
        if t >= self.b.y {
            return self.b.x;
        }
        self.a.x + (self.b.x - self.a.x) * (t - self.a.y) / (self.b.y - self.a.y)
    }
}

fn check_pair(u1: &Point, u2: &Point) -> Result<()> {
    if !(u1.is_finite() && u2.is_finite()) {
        return Err(Error::InvalidArgument("starting points must be finite"));
    }
    if u1.y != u2.y {
        return Err(Error::InvalidArgument("starting points must share one ordinate"));
    }
    if u1.x > u2.x {
        return Err(Error::InvalidArgument("starting points must satisfy u1.x <= u2.x"));
    }
    Ok(())
}

/// First ordinate at which the interpolated paths from `u1` and `u2` agree,
/// or a censored sample if they are still apart at `t_cap`.
pub fn coalescence_time<S: PointSource + ?Sized>(
    u1: Point,
    u2: Point,
    source: &mut S,
    t_cap: f64,
) -> Result<CoalescenceSample> {
    check_pair(&u1, &u2)?;
    let mut sample = CoalescenceSample {
        z0: u2.x - u1.x,
        t: None,
        cap: t_cap,
        nu: None,
        z_path: Vec::new(),
        renewal_levels: Vec::new(),
    };
    let mut t = u1.y;
    if u1 == u2 {
        sample.t = Some(t);
        return Ok(sample);
    }
    let mut s1 = Segment {
        a: u1,
        b: ancestor(&u1, source)?,
    };
    let mut s2 = Segment {
        a: u2,
        b: ancestor(&u2, source)?,
    };
    loop {
        let d0 = s1.at(t) - s2.at(t);
        if abs(d0) <= MEET_TOL {
            if t <= t_cap {
                sample.t = Some(t);
            }
            return Ok(sample);
        }
        if t >= t_cap {
            return Ok(sample);
        }
        let tn = s1.b.y.min(s2.b.y);
        let d1 = s1.at(tn) - s2.at(tn);
        if abs(d1) <= MEET_TOL || d0 * d1 < 0.0 {
            let root = if abs(d1) <= MEET_TOL {
                tn
            } else {
                t + (tn - t) * d0 / (d0 - d1)
            };
            if root <= t_cap {
                sample.t = Some(root);
            }
            return Ok(sample);
        }
        t = tn;
        if s1.b.y == tn {
            let next = ancestor(&s1.b, source)?;
            s1 = Segment { a: s1.b, b: next };
        }
        if s2.b.y == tn {
            let next = ancestor(&s2.b, source)?;
            s2 = Segment { a: s2.b, b: next };
        }
    }
}

/// The gap chain between the two regenerated paths started at `u1`, `u2`.
#[derive(Debug, Clone, PartialEq)]
pub struct GapChain {
    /// `Z_0 = u2.x - u1.x`, then the gap at every renewal.
    pub z_path: Vec<f64>,
    /// Ordinate of the regenerated starting points at each entry.
    pub levels: Vec<f64>,
    /// First renewal index with a zero gap.
    pub nu: Option<u64>,
}

/// Follows the `k = 2` renewal chain until the gap hits 0, `max_renewals`
/// renewals have occurred, or `stop` returns true for the current gap.
pub fn gap_chain<S: PointSource + ?Sized>(
    u1: Point,
    u2: Point,
    source: &mut S,
    kappa: u32,
    max_renewals: u64,
    step_cap: u64,
    mut stop: impl FnMut(f64) -> bool,
) -> Result<GapChain> {
    check_pair(&u1, &u2)?;
    let mut out = GapChain {
        z_path: alloc::vec![u2.x - u1.x],
        levels: alloc::vec![u1.y],
        nu: None,
    };
    if u1 == u2 {
        out.nu = Some(0);
        return Ok(out);
    }
    let mut chain = RenewalChain::new(alloc::vec![u1, u2], kappa)?.with_step_cap(step_cap);
    while chain.renewals() < max_renewals {
        let rec = chain.next_renewal(source)?;
        let z = abs(rec.u_new[1].x - rec.u_new[0].x);
        out.z_path.push(z);
        out.levels.push(rec.u_new[0].y);
        if z == 0.0 {
            out.nu = Some(rec.ell);
            break;
        }
        if stop(z) {
            break;
        }
    }
    Ok(out)
}

/// [`coalescence_time`] together with the gap chain on the same store.
pub fn coalescence_with_chain<S: PointSource + ?Sized>(
    u1: Point,
    u2: Point,
    source: &mut S,
    t_cap: f64,
    kappa: u32,
    max_renewals: u64,
    step_cap: u64,
) -> Result<CoalescenceSample> {
    let mut sample = coalescence_time(u1, u2, source, t_cap)?;
    let chain = gap_chain(u1, u2, source, kappa, max_renewals, step_cap, |_| false)?;
    sample.nu = chain.nu;
    sample.z_path = chain.z_path;
    sample.renewal_levels = chain.levels;
    Ok(sample)
}

/// `f(x) = (1/2 + 1/(x + 2)) x`, an increasing concave bijection of `[0, ∞)`.
pub fn f_transform(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::Domain {
            what: "f-transform argument must be nonnegative",
            value: x,
        });
    }
    Ok((0.5 + 1.0 / (x + 2.0)) * x)
}

/// Increment of the killed process `Y = f(Z) 1{Z > m0}` over one
/// transition `z -> z_next` started above `m0`.
pub fn killed_increment(z: f64, z_next: f64, m0: f64) -> Result<f64> {
    let next = if z_next > m0 { f_transform(z_next)? } else { 0.0 };
    Ok(next - f_transform(z)?)
}

/// Acceptance thresholds applied per bin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceThresholds {
    pub min_samples: u64,
    /// Drift is accepted when `mean <= drift_se_factor * se`.
    pub drift_se_factor: f64,
    pub min_second_moment: f64,
    pub max_third_moment: f64,
}

impl Default for LaplaceThresholds {
    fn default() -> Self {
        LaplaceThresholds {
            min_samples: 50,
            drift_se_factor: 2.0,
            min_second_moment: 0.05,
            max_third_moment: 500.0,
        }
    }
}

/// Sufficient statistics of `ΔY` for one bin of starting gaps.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BinAccumulator {
    pub d1: Moments,
    pub d2: Moments,
    pub d3: Moments,
}

impl BinAccumulator {
    pub fn push(&mut self, dy: f64) {
        self.d1.push(dy);
        self.d2.push(dy * dy);
        self.d3.push(abs(dy * dy * dy));
    }

    pub fn merge(&mut self, other: &BinAccumulator) {
        self.d1.merge(&other.d1);
        self.d2.merge(&other.d2);
        self.d3.merge(&other.d3);
    }
}

/// Per-bin estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceBin {
    pub lo: f64,
    pub hi: f64,
    pub n: u64,
    pub drift: f64,
    pub drift_se: f64,
    pub second: f64,
    pub second_se: f64,
    pub third: f64,
    pub third_se: f64,
    /// Fewer than the minimum number of samples; excluded from the verdict.
    pub excluded: bool,
    pub drift_ok: bool,
    pub second_ok: bool,
    pub third_ok: bool,
}

impl LaplaceBin {
    pub fn ok(&self) -> bool {
        self.excluded || (self.drift_ok && self.second_ok && self.third_ok)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceReport {
    pub m0: f64,
    pub transitions: u64,
    pub bins: Vec<LaplaceBin>,
}

impl LaplaceReport {
    pub fn populated(&self) -> usize {
        self.bins.iter().filter(|b| !b.excluded).count()
    }

    /// All populated bins satisfy the three conditions.
    pub fn all_ok(&self) -> bool {
        self.populated() > 0 && self.bins.iter().all(LaplaceBin::ok)
    }
}

/// Bin edges `m0, m0 + w, ..., m0 + span`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceBinning {
    pub m0: f64,
    pub width: f64,
    pub span: f64,
}

impl LaplaceBinning {
    /// `m0 >= 2(κ + 1)` is required.
    pub fn new(m0: f64, width: f64, span: f64, kappa: u32) -> Result<Self> {
        if !(m0 >= 2.0 * (kappa as f64 + 1.0)) {
            return Err(Error::Domain {
                what: "m0 must be at least 2(kappa + 1)",
                value: m0,
            });
        }
        if !(width > 0.0 && span >= width) {
            return Err(Error::InvalidArgument("bin width must be positive and at most the span"));
        }
        Ok(LaplaceBinning { m0, width, span })
    }

    pub fn count(&self) -> usize {
        libm::ceil(self.span / self.width - 1e-12) as usize
    }

    /// Bin holding `z`, if `z ∈ (m0, m0 + span]`.
    pub fn index(&self, z: f64) -> Option<usize> {
        if !(z > self.m0 && z <= self.m0 + self.span) {
            return None;
        }
        let i = libm::ceil((z - self.m0) / self.width) as usize;
        Some(i.clamp(1, self.count()) - 1)
    }

    pub fn accumulators(&self) -> Vec<BinAccumulator> {
        alloc::vec![BinAccumulator::default(); self.count()]
    }

    /// Adds a transition `z -> z_next` to `acc` when `z` falls in a bin.
    pub fn record(&self, acc: &mut [BinAccumulator], z: f64, z_next: f64) -> Result<bool> {
        match self.index(z) {
            Some(i) => {
                acc[i].push(killed_increment(z, z_next, self.m0)?);
                Ok(true)
            }
            None => Ok(false),
        }
    }

    pub fn report(&self, acc: &[BinAccumulator], th: &LaplaceThresholds) -> LaplaceReport {
        let mut transitions = 0;
        let bins = acc
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let n = a.d1.count();
                transitions += n;
                let lo = self.m0 + i as f64 * self.width;
                let hi = (lo + self.width).min(self.m0 + self.span);
                let excluded = n < th.min_samples;
                let (drift, drift_se) = (a.d1.mean(), a.d1.std_err());
                let (second, second_se) = (a.d2.mean(), a.d2.std_err());
                let (third, third_se) = (a.d3.mean(), a.d3.std_err());
                LaplaceBin {
                    lo,
                    hi,
                    n,
                    drift,
                    drift_se,
                    second,
                    second_se,
                    third,
                    third_se,
                    excluded,
                    drift_ok: !excluded && drift <= th.drift_se_factor * drift_se,
                    second_ok: !excluded && second >= th.min_second_moment,
                    third_ok: !excluded && third <= th.max_third_moment,
                }
            })
            .collect();
        LaplaceReport {
            m0: self.m0,
            transitions,
            bins,
        }
    }
}

/// Bins the transitions `(Z, Z')` with `Z ∈ (m0, m0 + span]` and checks
/// the drift and moment conditions of `ΔY` in each bin.
pub fn laplace_conditions(
    transitions: &[(f64, f64)],
    binning: &LaplaceBinning,
    th: &LaplaceThresholds,
) -> Result<LaplaceReport> {
    let mut acc = binning.accumulators();
    for &(z, zn) in transitions {
        if z < 0.0 || zn < 0.0 {
            return Err(Error::Domain {
                what: "gap must be nonnegative",
                value: z.min(zn),
            });
        }
        binning.record(&mut acc, z, zn)?;
    }
    Ok(binning.report(&acc, th))
}

/// One row of an empirical survival table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailRow {
    pub t: f64,
    pub survival: f64,
    pub se: f64,
    pub n: usize,
}

/// Empirical `P(T > t - start)` on `t_grid`, where `start` is the common
/// starting ordinate. Censored samples survive every grid point.
pub fn tail_curve(samples: &[CoalescenceSample], t_grid: &[f64], start: f64) -> Result<Vec<TailRow>> {
    if samples.is_empty() {
        return Err(Error::InsufficientData("no coalescence samples"));
    }
    if t_grid.is_empty() || t_grid[0] <= 0.0 || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("time grid must be positive and increasing"));
    }
    let tmax = start + t_grid[t_grid.len() - 1];
    if samples.iter().any(|s| s.censored() && s.cap < tmax) {
        return Err(Error::InvalidArgument("censoring cap below the largest grid time"));
    }
    let n = samples.len();
    Ok(t_grid
        .iter()
        .map(|&t| {
            let alive = samples.iter().filter(|s| s.survives(start + t)).count();
            let p = alive as f64 / n as f64;
            TailRow {
                t,
                survival: p,
                se: proportion_se(p, n),
                n,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ppp::{FixedPoints, PoissonStore};
    use alloc::vec;

    #[test]
    fn same_start_meets_immediately() {
        let mut s = FixedPoints::new(vec![]);
        let c = coalescence_time(Point::ORIGIN, Point::ORIGIN, &mut s, 10.0).unwrap();
        assert_eq!(c.t, Some(0.0));
    }

    #[test]
    fn shared_parent_meets_at_vertex() {
        let mut s = FixedPoints::new(vec![Point::new(0.5, 1.0)]);
        let c = coalescence_time(Point::ORIGIN, Point::new(1.0, 0.0), &mut s, 10.0).unwrap();
        assert_eq!(c.t, Some(1.0));
        assert_eq!(c.z0, 1.0);
    }

    #[test]
    fn zero_cap_censors() {
        let mut s = FixedPoints::new(vec![Point::new(0.5, 1.0)]);
        let c = coalescence_time(Point::ORIGIN, Point::new(1.0, 0.0), &mut s, 0.0).unwrap();
        assert!(c.censored());
    }

    #[test]
    fn rejects_misordered_starts() {
        let mut s = FixedPoints::new(vec![]);
        assert!(coalescence_time(Point::new(1.0, 0.0), Point::ORIGIN, &mut s, 1.0).is_err());
        assert!(coalescence_time(Point::ORIGIN, Point::new(1.0, 0.5), &mut s, 1.0).is_err());
    }

    #[test]
    fn poisson_pair_meets_at_shared_vertex() {
        let mut store = PoissonStore::with_intensity(1.0, 9).unwrap();
        let c = coalescence_time(Point::ORIGIN, Point::new(1.0, 0.0), &mut store, 1e4).unwrap();
        let t = c.t.expect("pair at distance 1 meets before 1e4");
        let p = crate::forest::trace_path(Point::ORIGIN, &mut store, t).unwrap();
        assert!(p.vertices().iter().any(|v| v.y == t));
    }

    #[test]
    fn f_transform_values() {
        assert_eq!(f_transform(0.0).unwrap(), 0.0);
        assert_eq!(f_transform(2.0).unwrap(), 1.5);
        for x in [1.0, 5.0, 10.0] {
            let f = f_transform(x).unwrap();
            assert!(x / 2.0 < f && f < x);
        }
        assert!(f_transform(-1.0).is_err());
    }

    #[test]
    fn absorbed_transition_has_zero_increment_below_m0() {
        // 0 -> 0 never enters a bin; its increment is zero anyway
        assert_eq!(killed_increment(0.0, 0.0, 14.0).unwrap(), 0.0);
        let b = LaplaceBinning::new(14.0, 2.0, 20.0, 6).unwrap();
        assert_eq!(b.index(0.0), None);
        assert_eq!(b.index(14.0), None);
        assert_eq!(b.index(14.5), Some(0));
        assert_eq!(b.index(34.0), Some(9));
        assert_eq!(b.index(34.1), None);
        assert!(LaplaceBinning::new(13.0, 2.0, 20.0, 6).is_err());
    }

    #[test]
    fn simple_walk_has_negative_drift() {
        let b = LaplaceBinning::new(14.0, 1.0, 20.0, 6).unwrap();
        let mut tr = Vec::new();
        for m in 15..=34 {
            for _ in 0..100 {
                tr.push((m as f64, m as f64 + 1.0));
                tr.push((m as f64, m as f64 - 1.0));
            }
        }
        let rep = laplace_conditions(&tr, &b, &LaplaceThresholds::default()).unwrap();
        assert_eq!(rep.populated(), 20);
        for bin in &rep.bins {
            let m = bin.hi;
            let f = |x: f64| if x > 14.0 { f_transform(x).unwrap() } else { 0.0 };
            let exact = 0.5 * (f(m + 1.0) + f(m - 1.0)) - f(m);
            assert!(exact < 0.0);
            assert!((bin.drift - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn tail_curve_basics() {
        let mk = |t: Option<f64>| CoalescenceSample {
            z0: 1.0,
            t,
            cap: 100.0,
            nu: None,
            z_path: vec![],
            renewal_levels: vec![],
        };
        let s = vec![mk(Some(1.0)), mk(Some(5.0)), mk(None), mk(Some(20.0))];
        let rows = tail_curve(&s, &[2.0, 10.0, 50.0], 0.0).unwrap();
        let surv: Vec<f64> = rows.iter().map(|r| r.survival).collect();
        assert_eq!(surv, vec![0.75, 0.5, 0.25]);
        let early = vec![mk(Some(0.5)), mk(Some(0.7))];
        assert!(tail_curve(&early, &[1.0, 2.0], 0.0)
            .unwrap()
            .iter()
            .all(|r| r.survival == 0.0));
        assert!(tail_curve(&[], &[1.0], 0.0).is_err());
        assert!(tail_curve(&s, &[1.0, 200.0], 0.0).is_err());
    }
}
