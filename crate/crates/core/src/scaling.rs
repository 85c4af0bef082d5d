//! Diffusive rescaling of paths, renewal-based estimates of the time and
//! space normalizers, the η counting statistic and the Brownian web pair
//! survival law.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::forest::{ancestor, PathPolyline};
use crate::geom::{Point, Rect};
use crate::math::{abs, erf, sqrt};
use crate::ppp::PointSource;
use crate::renewal::RenewalChain;
use crate::stats::Moments;

/// Distinctness tolerance for path positions.
pub const DISTINCT_TOL: f64 = 1e-9;

/// Space is divided by `n σ` and time by `n² γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleParams {
    pub n: u32,
    pub gamma: f64,
    pub sigma: f64,
}

impl ScaleParams {
    pub fn new(n: u32, gamma: f64, sigma: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("scale index n must be positive"));
        }
        if !(gamma > 0.0 && gamma.is_finite() && sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidArgument("gamma and sigma must be positive and finite"));
        }
        Ok(ScaleParams { n, gamma, sigma })
    }

    pub fn space(&self) -> f64 {
        self.n as f64 * self.sigma
    }

    pub fn time(&self) -> f64 {
        let n = self.n as f64;
        n * n * self.gamma
    }

    pub fn apply(&self, p: &Point) -> Point {
        Point::new(p.x / self.space(), p.y / self.time())
    }
}

pub fn scale_path(path: &PathPolyline, p: &ScaleParams) -> PathPolyline {
    let v = path.vertices().iter().map(|q| p.apply(q)).collect();
    PathPolyline::new(v).expect("positive scaling keeps ordinates increasing")
}

/// Renewal increments of single-walker chains.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RenewalIncrements {
    /// `u^(ℓ+1) - u^(ℓ)` for `ℓ >= 1`.
    pub stationary: Vec<(f64, f64)>,
    /// `u^(1) - u^(0)`.
    pub first: Vec<(f64, f64)>,
}

impl RenewalIncrements {
    pub fn extend(&mut self, other: RenewalIncrements) {
        self.stationary.extend(other.stationary);
        self.first.extend(other.first);
    }
}

/// Runs one `k = 1` chain from `start` for `renewals` renewals and returns
/// its increments. `after_renewal` sees the level after each renewal (for
/// store housekeeping).
pub fn chain_increments<S: PointSource + ?Sized>(
    start: Point,
    source: &mut S,
    kappa: u32,
    renewals: u64,
    step_cap: u64,
    mut after_renewal: impl FnMut(&mut S, f64),
) -> Result<RenewalIncrements> {
    let mut chain = RenewalChain::new(alloc::vec![start], kappa)?.with_step_cap(step_cap);
    let mut prev = start;
    let mut out = RenewalIncrements::default();
    for ell in 1..=renewals {
        let rec = chain.next_renewal(source)?;
        let u = rec.u_new[0];
        let inc = (u.x - prev.x, u.y - prev.y);
        if ell == 1 {
            out.first.push(inc);
        } else {
            out.stationary.push(inc);
        }
        prev = u;
        after_renewal(source, rec.level);
    }
    Ok(out)
}

/// Moment estimates of the renewal increments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaSigma {
    pub gamma: f64,
    pub gamma_se: f64,
    pub sigma: f64,
    pub sigma_se: f64,
    pub n: usize,
    /// Same estimates from the first increments only.
    pub gamma_first: f64,
    pub sigma_first: f64,
    pub n_first: usize,
}

impl GammaSigma {
    pub fn params(&self, n: u32) -> Result<ScaleParams> {
        ScaleParams::new(n, self.gamma, self.sigma)
    }
}

fn sigma_with_se(xs: &[f64]) -> (f64, f64) {
    let m: Moments = xs.iter().copied().collect();
    let mean = m.mean();
    let var = m.variance();
    let sigma = sqrt(var);
    // delta method on the variance
    let n = xs.len() as f64;
    let m4: f64 = xs.iter().map(|x| (x - mean) * (x - mean) * (x - mean) * (x - mean)).sum::<f64>() / n;
    let var_se = sqrt(((m4 - var * var) / n).max(0.0));
    (sigma, var_se / (2.0 * sigma))
}

/// `γ = E[Δy]` and `σ = sd(Δx)` over the stationary increments.
pub fn gamma_sigma_from_increments(inc: &RenewalIncrements) -> Result<GammaSigma> {
    if inc.stationary.len() < 2 {
        return Err(Error::InsufficientData("need at least two stationary renewal increments"));
    }
    let dx: Vec<f64> = inc.stationary.iter().map(|p| p.0).collect();
    let dy: Moments = inc.stationary.iter().map(|p| p.1).collect();
    let (sigma, sigma_se) = sigma_with_se(&dx);
    let (gamma_first, sigma_first) = if inc.first.len() >= 2 {
        let fx: Moments = inc.first.iter().map(|p| p.0).collect();
        let fy: Moments = inc.first.iter().map(|p| p.1).collect();
        (fy.mean(), fx.std_dev())
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(GammaSigma {
        gamma: dy.mean(),
        gamma_se: dy.std_err(),
        sigma,
        sigma_se,
        n: inc.stationary.len(),
        gamma_first,
        sigma_first,
        n_first: inc.first.len(),
    })
}

/// Runs `replications` chains, each on the store built by `store_for(r)`,
/// and estimates `γ, σ`.
pub fn estimate_gamma_sigma<S: PointSource>(
    replications: u64,
    renewals_per_chain: u64,
    kappa: u32,
    mut store_for: impl FnMut(u64) -> Result<S>,
) -> Result<GammaSigma> {
    if replications < 100 {
        return Err(Error::InvalidArgument("at least 100 replications are required"));
    }
    let mut all = RenewalIncrements::default();
    for r in 0..replications {
        let mut store = store_for(r)?;
        let inc = chain_increments(
            Point::ORIGIN,
            &mut store,
            kappa,
            renewals_per_chain,
            crate::renewal::DEFAULT_STEP_CAP,
            |_, _| {},
        )?;
        all.extend(inc);
    }
    gamma_sigma_from_increments(&all)
}

/// Number of distinct positions at `t0 + t` of the paths started no later
/// than `t0` whose position at `t0` lies in `[a, b]`.
pub fn eta_count(paths: &[PathPolyline], t0: f64, t: f64, a: f64, b: f64) -> Result<usize> {
    if !(a < b) {
        return Err(Error::InvalidArgument("eta interval needs a < b"));
    }
    if !(t > 0.0) {
        return Err(Error::InvalidArgument("eta time span must be positive"));
    }
    let t1 = t0 + t;
    let mut ends: Vec<f64> = Vec::new();
    for p in paths {
        if p.start_time() > t0 || p.end_time() < t1 {
            continue;
        }
        let x0 = p.eval_unchecked(t0);
        if x0 < a || x0 > b {
            continue;
        }
        ends.push(p.eval_unchecked(t1));
    }
    Ok(count_distinct(&mut ends))
}

/// Number of clusters of values separated by more than [`DISTINCT_TOL`].
pub fn count_distinct(xs: &mut [f64]) -> usize {
    if xs.is_empty() {
        return 0;
    }
    xs.sort_by(f64::total_cmp);
    1 + xs.windows(2).filter(|w| w[1] - w[0] > DISTINCT_TOL).count()
}

/// Half-width, in units of `1/√λ`, of the band scanned for edges crossing
/// a horizontal line. An edge longer than this needs an empty half-disc of
/// that radius above its lower end.
pub const CROSSING_BAND: f64 = 8.0;

/// For every forest edge crossing `[a, b] × {t0}` from below, its abscissa
/// at `t0` and the abscissa at `t0 + t` of the path carrying it, sorted by
/// the first. Paths are advanced jointly in time; `housekeeping` receives
/// the lowest live ordinate now and then, so stores can drop old cells.
pub fn crossing_fates<S: PointSource + ?Sized>(
    source: &mut S,
    t0: f64,
    t: f64,
    a: f64,
    b: f64,
    mut housekeeping: impl FnMut(&mut S, f64),
) -> Result<Vec<(f64, f64)>> {
    if !(a < b) {
        return Err(Error::InvalidArgument("crossing interval needs a < b"));
    }
    if !(t > 0.0) {
        return Err(Error::InvalidArgument("crossing time span must be positive"));
    }
    let t1 = t0 + t;
    let band = CROSSING_BAND / sqrt(source.intensity());
    let below = source.points_in(&Rect::new(a - band, b + band, t0 - band, t0))?;
    let mut starts: Vec<f64> = Vec::new();
    // live vertices with the indices of the crossings they carry
    let mut front: Vec<(Point, Vec<usize>)> = Vec::new();
    for p in below.iter().filter(|p| p.y < t0) {
        let h = ancestor(p, source)?;
        if h.y < t0 {
            continue;
        }
        let x0 = p.x + (h.x - p.x) * (t0 - p.y) / (h.y - p.y);
        if x0 < a || x0 > b {
            continue;
        }
        let i = starts.len();
        starts.push(x0);
        match front.iter_mut().find(|f| f.0 == *p) {
            Some(f) => f.1.push(i),
            None => front.push((*p, alloc::vec![i])),
        }
    }
    let mut ends = alloc::vec![f64::NAN; starts.len()];
    let mut moves = 0u64;
    while !front.is_empty() {
        let lo = (0..front.len())
            .min_by(|&i, &j| front[i].0.time_order(&front[j].0))
            .unwrap_or(0);
        let (v, idx) = front.swap_remove(lo);
        let h = ancestor(&v, source)?;
        if h.y >= t1 {
            let x = v.x + (h.x - v.x) * (t1 - v.y) / (h.y - v.y);
            for i in idx {
                ends[i] = x;
            }
            continue;
        }
        match front.iter_mut().find(|f| f.0 == h) {
            Some(f) => f.1.extend(idx),
            None => front.push((h, idx)),
        }
        moves += 1;
        if moves.is_multiple_of(4096) {
            if let Some(m) = front.iter().map(|f| f.0.y).min_by(f64::total_cmp) {
                housekeeping(source, m);
            }
        }
    }
    let mut out: Vec<(f64, f64)> = starts.into_iter().zip(ends).collect();
    out.sort_by(|p, q| p.0.total_cmp(&q.0));
    Ok(out)
}

/// Probability that two coalescing standard Brownian motions started at
/// distance `d` are still apart at time `t`.
pub fn bw_pair_survival(d: f64, t: f64) -> Result<f64> {
    if !(d >= 0.0 && t > 0.0) {
        return Err(Error::Domain {
            what: "pair survival needs d >= 0 and t > 0",
            value: if t > 0.0 { d } else { t },
        });
    }
    Ok(erf(abs(d) / (2.0 * sqrt(t))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::normal_cdf;
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn path(pts: &[(f64, f64)]) -> PathPolyline {
        PathPolyline::new(pts.iter().map(|&(x, y)| Point::new(x, y)).collect()).unwrap()
    }

    #[test]
    fn scaling_arithmetic() {
        let p = path(&[(4.0, 8.0), (6.0, 12.0)]);
        let id = ScaleParams::new(1, 1.0, 1.0).unwrap();
        assert_eq!(scale_path(&p, &id), p);
        let s = scale_path(&p, &ScaleParams::new(2, 2.0, 1.0).unwrap());
        assert_eq!(s.start(), Point::new(2.0, 1.0));
        assert_eq!(s.start_time(), p.start_time() / 8.0);
        assert!(ScaleParams::new(0, 1.0, 1.0).is_err());
    }

    #[test]
    fn eta_cases() {
        let a = path(&[(0.0, 0.0), (0.0, 1.0), (1.0, 3.0)]);
        let b = path(&[(0.5, 0.0), (0.0, 1.0), (1.0, 3.0)]);
        let c = path(&[(2.0, 0.5), (3.0, 3.0)]);
        assert_eq!(eta_count(&[], 0.5, 1.0, 0.0, 1.0).unwrap(), 0);
        assert_eq!(eta_count(&[a.clone(), b.clone()], 0.5, 1.0, -1.0, 1.0).unwrap(), 1);
        assert_eq!(eta_count(&[a, b, c], 0.5, 1.0, -1.0, 3.0).unwrap(), 2);
    }

    #[test]
    fn eta_is_scale_invariant() {
        let paths = vec![
            path(&[(0.0, 0.0), (0.3, 1.0), (1.0, 3.0)]),
            path(&[(0.5, 0.2), (0.7, 1.5), (1.0, 3.0)]),
            path(&[(1.1, 0.1), (1.6, 2.2), (2.0, 3.5)]),
        ];
        let sp = ScaleParams::new(3, 2.5, 0.7).unwrap();
        let scaled: Vec<_> = paths.iter().map(|p| scale_path(p, &sp)).collect();
        let (t0, t, a, b) = (0.5, 2.0, -0.2, 1.4);
        assert_eq!(
            eta_count(&paths, t0, t, a, b).unwrap(),
            eta_count(&scaled, t0 / sp.time(), t / sp.time(), a / sp.space(), b / sp.space()).unwrap()
        );
    }

    #[test]
    fn pair_survival_limits() {
        assert!(bw_pair_survival(1e-12, 1.0).unwrap() < 1e-9);
        assert!(bw_pair_survival(1.0, 1e-12).unwrap() > 1.0 - 1e-9);
        assert!((bw_pair_survival(1.0, 1.0).unwrap() - 0.5205).abs() < 1e-4);
        // reflection principle on the difference process
        for (d, t) in [(0.3, 2.0), (1.0, 1.0), (2.5, 0.7)] {
            let refl = 2.0 * normal_cdf(d / sqrt(2.0 * t)) - 1.0;
            assert!((bw_pair_survival(d, t).unwrap() - refl).abs() < 1e-12);
        }
    }

    #[test]
    fn pair_survival_matches_discrete_walks() {
        // difference of two walks with Gaussian steps, monitored every dt;
        // the start moves toward the barrier by the usual discrete-monitoring correction
        let (d, t, dt) = (1.0, 1.0, 1e-3);
        let steps = (t / dt) as usize;
        let sd = sqrt(2.0 * dt);
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let reps = 20_000;
        let mut alive = 0;
        for _ in 0..reps {
            let mut z = d - 0.5826 * sd;
            let mut ok = true;
            for _ in 0..steps {
                let g: f64 = StandardNormal.sample(&mut rng);
                z += sd * g;
                if z <= 0.0 {
                    ok = false;
                    break;
                }
            }
            if ok {
                alive += 1;
            }
        }
        let mc = alive as f64 / reps as f64;
        assert!((mc - bw_pair_survival(d, t).unwrap()).abs() < 0.01, "{mc}");
    }

    #[test]
    fn gamma_sigma_from_known_increments() {
        let inc = RenewalIncrements {
            stationary: vec![(1.0, 8.0), (-1.0, 10.0), (1.0, 8.0), (-1.0, 10.0)],
            first: vec![],
        };
        let g = gamma_sigma_from_increments(&inc).unwrap();
        assert_eq!(g.gamma, 9.0);
        assert!((g.sigma - sqrt(4.0 / 3.0)).abs() < 1e-12);
        assert!(g.gamma_first.is_nan());
    }

    #[test]
    fn crossing_fates_agree_with_eta_count() {
        use crate::forest::trace_path;
        use crate::ppp::PoissonStore;
        for seed in 0..4 {
            let mut store = PoissonStore::with_intensity(1.0, seed).unwrap();
            let (t0, t, a, b) = (10.0, 6.0, 0.0, 6.0);
            let fates = crossing_fates(&mut store, t0, t, a, b, |_, _| {}).unwrap();
            let starts = store.points_in(&Rect::new(-20.0, 26.0, -5.0, t0)).unwrap();
            let paths: Vec<PathPolyline> = starts
                .into_iter()
                .filter(|p| p.y < t0)
                .map(|p| trace_path(p, &mut store, t0 + t).unwrap())
                .collect();
            let mut ends: Vec<f64> = fates.iter().map(|f| f.1).collect();
            assert!(ends.iter().all(|x| x.is_finite()));
            assert_eq!(count_distinct(&mut ends), eta_count(&paths, t0, t, a, b).unwrap());
            // every path through the segment shows up exactly once
            let through = paths
                .iter()
                .filter(|p| {
                    let x = p.eval(t0).unwrap();
                    (a..=b).contains(&x) && p.vertices().iter().filter(|v| v.y < t0).count() == 1
                })
                .count();
            assert_eq!(through, fates.len());
        }
    }
}
