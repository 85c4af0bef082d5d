//! Statistical helpers: least-squares fits, Kolmogorov–Smirnov tests,
//! exactly mergeable moment accumulators and a seeded bootstrap.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::math::{exp, ln, sqrt, PI};

/// Ordinary least-squares line fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub slope_se: f64,
}

/// Fits `y = intercept + slope · x`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<FitResult> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidArgument("fit inputs must have equal length"));
    }
    let n = xs.len();
    if n < 3 {
        return Err(Error::InsufficientData("a line fit needs at least 3 points"));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::InvalidArgument("fit abscissae must not all be equal"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .sum();
    let r_squared = if syy > 0.0 {
        (1.0 - sse / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    let slope_se = sqrt((sse / (nf - 2.0)).max(0.0) / sxx);
    Ok(FitResult {
        slope,
        intercept,
        r_squared,
        slope_se,
    })
}

/// Least squares on `(ln t, ln s)`.
pub fn loglog_fit(points: &[(f64, f64)]) -> Result<FitResult> {
    if points.iter().any(|&(t, s)| !(t > 0.0 && s > 0.0)) {
        return Err(Error::Domain {
            what: "log-log fit needs positive coordinates",
            value: points
                .iter()
                .map(|&(t, s)| t.min(s))
                .fold(f64::INFINITY, f64::min),
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| ln(p.0)).collect();
    let ys: Vec<f64> = points.iter().map(|p| ln(p.1)).collect();
    linear_fit(&xs, &ys)
}

/// Empirical survival `P(X ≥ g)` of `samples` at each grid value.
pub fn survival_at(samples: &[f64], grid: &[f64]) -> Vec<f64> {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    grid.iter()
        .map(|&g| {
            let below = sorted.partition_point(|&x| x < g);
            (sorted.len() - below) as f64 / n
        })
        .collect()
}

/// Fits `ln P(X ≥ g)` against `transform(g)` over the grid values with a
/// non-zero survival.
pub fn tail_fit(samples: &[f64], grid: &[f64], transform: impl Fn(f64) -> f64) -> Result<FitResult> {
    let surv = survival_at(samples, grid);
    let (xs, ys): (Vec<f64>, Vec<f64>) = grid
        .iter()
        .zip(&surv)
        .filter(|(_, &s)| s > 0.0)
        .map(|(&g, &s)| (transform(g), ln(s)))
        .unzip();
    linear_fit(&xs, &ys)
}

/// Result of a Kolmogorov–Smirnov test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Survival function of the Kolmogorov distribution, `P(K > x)`.
///
/// Both theta-series are truncated at 100 terms or once a term drops
/// below 1e-12.
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 1.0 {
        // P(K ≤ x) = √(2π)/x Σ exp(-(2j-1)² π² / (8x²))
        let mut sum = 0.0;
        for j in 1..=100 {
            let m = (2 * j - 1) as f64;
            let term = exp(-m * m * PI * PI / (8.0 * x * x));
            sum += term;
            if term < 1e-12 {
                break;
            }
        }
        (1.0 - sqrt(2.0 * PI) / x * sum).clamp(0.0, 1.0)
    } else {
        // P(K > x) = 2 Σ (-1)^{j-1} exp(-2 j² x²)
        let mut sum = 0.0;
        for j in 1..=100 {
            let jf = j as f64;
            let term = exp(-2.0 * jf * jf * x * x);
            sum += if j % 2 == 1 { term } else { -term };
            if term < 1e-12 {
                break;
            }
        }
        (2.0 * sum).clamp(0.0, 1.0)
    }
}

const KS_MIN_SAMPLE: usize = 20;

/// One-sample KS test of `sample` against a continuous `cdf`.
pub fn ks_one_sample(sample: &[f64], cdf: impl Fn(f64) -> f64) -> Result<KsResult> {
    if sample.len() < KS_MIN_SAMPLE {
        return Err(Error::InsufficientData("KS test needs at least 20 observations"));
    }
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_sf(sqrt(n) * d),
    })
}

/// Two-sample KS test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.len() < KS_MIN_SAMPLE || b.len() < KS_MIN_SAMPLE {
        return Err(Error::InsufficientData("KS test needs at least 20 observations per sample"));
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let v = xs[i].min(ys[j]);
        while i < n && xs[i] <= v {
            i += 1;
        }
        while j < m && ys[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_sf(sqrt(ne) * d),
    })
}

/// Exactly rounded floating point sum whose value does not depend on the
/// order of the inputs or of merges (Shewchuk's partials).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExactSum {
    partials: Vec<f64>,
}

impl ExactSum {
    pub fn new() -> Self {
        ExactSum::default()
    }

    pub fn add(&mut self, mut x: f64) {
        let mut i = 0;
        for j in 0..self.partials.len() {
            let mut y = self.partials[j];
            if x.abs() < y.abs() {
                core::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                self.partials[i] = lo;
                i += 1;
            }
            x = hi;
        }
        self.partials.truncate(i);
        self.partials.push(x);
    }

    pub fn merge(&mut self, other: &ExactSum) {
        for &p in &other.partials {
            self.add(p);
        }
    }

    /// Correctly rounded total.
    pub fn value(&self) -> f64 {
        let p = &self.partials;
        let mut n = p.len();
        if n == 0 {
            return 0.0;
        }
        n -= 1;
        let mut hi = p[n];
        let mut lo = 0.0;
        while n > 0 {
            let x = hi;
            n -= 1;
            let y = p[n];
            hi = x + y;
            let yr = hi - x;
            lo = y - yr;
            if lo != 0.0 {
                break;
            }
        }
        if n > 0 && ((lo < 0.0 && p[n - 1] < 0.0) || (lo > 0.0 && p[n - 1] > 0.0)) {
            let y = lo * 2.0;
            let x = hi + y;
            if y == x - hi {
                hi = x;
            }
        }
        hi
    }
}

/// Streaming mean and variance with exact, order-independent merging.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Moments {
    n: u64,
    s1: ExactSum,
    s2: ExactSum,
}

impl Moments {
    pub fn new() -> Self {
        Moments::default()
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.s1.add(x);
        self.s2.add(x * x);
    }

    pub fn merge(&mut self, other: &Moments) {
        self.n += other.n;
        self.s1.merge(&other.s1);
        self.s2.merge(&other.s2);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            f64::NAN
        } else {
            self.s1.value() / self.n as f64
        }
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            return f64::NAN;
        }
        let n = self.n as f64;
        let m = self.s1.value() / n;
        ((self.s2.value() - n * m * m) / (n - 1.0)).max(0.0)
    }

    pub fn std_dev(&self) -> f64 {
        sqrt(self.variance())
    }

    /// Standard error of the mean.
    pub fn std_err(&self) -> f64 {
        sqrt(self.variance() / self.n as f64)
    }
}

impl FromIterator<f64> for Moments {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut m = Moments::new();
        iter.into_iter().for_each(|x| m.push(x));
        m
    }
}

/// Binomial standard error of an empirical proportion.
pub fn proportion_se(p: f64, n: usize) -> f64 {
    if n == 0 {
        return f64::NAN;
    }
    sqrt((p * (1.0 - p) / n as f64).max(0.0))
}

/// Pearson correlation of consecutive pairs.
pub fn correlation(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return Err(Error::InsufficientData("correlation needs at least 3 pairs"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::InsufficientData("correlation of a constant sample"));
    }
    Ok(sxy / sqrt(sxx * syy))
}

/// Percentile bootstrap over groups: each replicate resamples every group
/// with replacement and evaluates `statistic` on the resampled groups.
/// Returns the sorted replicate values.
pub fn bootstrap_groups(
    groups: &[Vec<f64>],
    replicates: usize,
    seed: u64,
    statistic: impl Fn(&[Vec<f64>]) -> f64,
) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut buf: Vec<Vec<f64>> = groups.iter().map(|g| Vec::with_capacity(g.len())).collect();
    let mut out = Vec::with_capacity(replicates);
    for _ in 0..replicates {
        for (g, b) in groups.iter().zip(buf.iter_mut()) {
            b.clear();
            for _ in 0..g.len() {
                b.push(g[rng.random_range(0..g.len())]);
            }
        }
        out.push(statistic(&buf));
    }
    out.sort_by(f64::total_cmp);
    out
}

/// Empirical quantile (nearest rank) of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let idx = (libm::ceil(q * sorted.len() as f64) as usize).clamp(1, sorted.len()) - 1;
    sorted[idx]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::normal_cdf;
    use alloc::vec;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn exact_power_law() {
        let pts: Vec<(f64, f64)> = [1.0, 4.0, 16.0].iter().map(|&t| (t, 1.0 / sqrt(t))).collect();
        let fit = loglog_fit(&pts).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_survival_has_zero_slope() {
        let fit = loglog_fit(&[(1.0, 0.3), (2.0, 0.3), (5.0, 0.3)]).unwrap();
        assert!(fit.slope.abs() < 1e-12);
    }

    #[test]
    fn loglog_rejects_nonpositive() {
        assert!(loglog_fit(&[(1.0, 0.0), (2.0, 0.3), (5.0, 0.3)]).is_err());
        assert!(loglog_fit(&[(1.0, 0.1), (2.0, 0.3)]).is_err());
    }

    #[test]
    fn noisy_power_law_slope_within_three_se() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let pts: Vec<(f64, f64)> = (1..=40)
            .map(|i| {
                let t = i as f64 * 5.0;
                let noise: f64 = StandardNormal.sample(&mut rng);
                (t, 2.0 * crate::math::pow(t, -0.7) * exp(0.05 * noise))
            })
            .collect();
        let fit = loglog_fit(&pts).unwrap();
        assert!((fit.slope + 0.7).abs() < 3.0 * fit.slope_se, "{fit:?}");
    }

    #[test]
    fn kolmogorov_reference_values() {
        // P(K > 1.36) ≈ 0.0494, P(K > 0.5) ≈ 0.9639
        assert!((kolmogorov_sf(1.3581) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_sf(0.5) - 0.9639).abs() < 1e-3);
        // the two series agree where they meet
        assert!((kolmogorov_sf(1.0 - 1e-12) - kolmogorov_sf(1.0)).abs() < 1e-9);
    }

    #[test]
    fn ks_calibration_and_power() {
        let mut passes = 0;
        for seed in 0..100u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s: Vec<f64> = (0..200).map(|_| StandardNormal.sample(&mut rng)).collect();
            if ks_one_sample(&s, normal_cdf).unwrap().p_value > 0.01 {
                passes += 1;
            }
        }
        assert!(passes >= 98, "{passes}");

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s: Vec<f64> = (0..200)
            .map(|_| { let z: f64 = StandardNormal.sample(&mut rng); 5.0 + z })
            .collect();
        assert!(ks_one_sample(&s, normal_cdf).unwrap().p_value < 1e-6);

        let t = ks_two_sample(&s, &s).unwrap();
        assert_eq!(t.statistic, 0.0);
        assert!(ks_one_sample(&s[..10], normal_cdf).is_err());
    }

    #[test]
    fn two_sample_detects_shift() {
        let a: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let b: Vec<f64> = (0..100).map(|i| i as f64 + 50.0).collect();
        let r = ks_two_sample(&a, &b).unwrap();
        assert!((r.statistic - 0.5).abs() < 1e-12);
        assert!(r.p_value < 1e-9);
    }

    #[test]
    fn exact_sum_is_order_independent() {
        let xs = [1e16, 1.0, -1e16, 3.5, 1e-8, -2.25, 7e15, 0.1];
        let mut a = ExactSum::new();
        xs.iter().for_each(|&x| a.add(x));
        let mut b = ExactSum::new();
        xs.iter().rev().for_each(|&x| b.add(x));
        assert_eq!(a.value(), b.value());
        assert_eq!(a.value(), 7e15 + 2.35000001);
    }

    #[test]
    fn moments_basic() {
        let m: Moments = [1.0, 2.0, 3.0, 4.0].into_iter().collect();
        assert_eq!(m.mean(), 2.5);
        assert!((m.variance() - 5.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn survival_counts_ties_as_reaching() {
        let s = survival_at(&[1.0, 2.0, 2.0, 5.0], &[0.0, 2.0, 3.0, 6.0]);
        assert_eq!(s, vec![1.0, 0.75, 0.25, 0.0]);
    }
}
