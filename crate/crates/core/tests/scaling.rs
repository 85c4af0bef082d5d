//! Diffusive growth of a single forest path.

use dsf_core::forest::ancestor;
use dsf_core::stats::linear_fit;
use dsf_core::{Point, PoissonStore};

/// `sup_{s ≤ m} |x(s)|` along the path from the origin.
fn max_deviation(seed: u64, levels: &[f64]) -> Vec<f64> {
    let mut store = PoissonStore::with_intensity(1.0, seed).unwrap();
    let mut cur = Point::new(0.0, 0.0);
    let mut sup = 0.0f64;
    let mut out = Vec::new();
    for &m in levels {
        while cur.y <= m {
            let next = ancestor(&cur, &mut store).unwrap();
            if next.y > m {
                let x = cur.x + (next.x - cur.x) * (m - cur.y) / (next.y - cur.y);
                sup = sup.max(x.abs());
                out.push(sup);
                sup = sup.max(next.x.abs());
                cur = next;
                break;
            }
            cur = next;
            sup = sup.max(cur.x.abs());
        }
        store.discard_below(cur.y - 10.0);
    }
    out
}

#[test]
fn deviation_grows_like_square_root() {
    let levels = [100.0, 400.0, 1600.0];
    let mut cols = vec![Vec::new(); levels.len()];
    for seed in 0..500u64 {
        for (i, d) in max_deviation(seed, &levels).into_iter().enumerate() {
            cols[i].push(d);
        }
    }
    let medians: Vec<f64> = cols
        .iter_mut()
        .map(|c| {
            c.sort_by(f64::total_cmp);
            c[c.len() / 2]
        })
        .collect();
    let xs: Vec<f64> = levels.iter().map(|m| m.ln()).collect();
    let ys: Vec<f64> = medians.iter().map(|m| m.ln()).collect();
    let fit = linear_fit(&xs, &ys).unwrap();
    assert!((fit.slope - 0.5).abs() <= 0.1, "slope {} medians {medians:?}", fit.slope);
}
