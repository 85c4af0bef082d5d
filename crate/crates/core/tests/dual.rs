//! The dual forest does not depend on how far the simulated region reaches.

use dsf_core::dual::DualForest;
use dsf_core::{PoissonStore, Rect};

#[test]
fn enlarging_the_window_keeps_interior_edges() {
    for seed in 0..10u64 {
        let mut store = PoissonStore::with_intensity(1.0, seed).unwrap();
        let small = Rect::new(0.0, 10.0, 0.0, 10.0);
        let mut a = DualForest::build(&mut store, small).unwrap();
        let mut b = DualForest::build(&mut store, Rect::new(-10.0, 20.0, -10.0, 20.0)).unwrap();
        let mut compared = 0;
        for e in a.dual_edges(&mut store).unwrap() {
            if !small.contains(&e.to.location) {
                continue;
            }
            let v = b.dual_vertex(&mut store, &e.from.parent_primal, e.from.side).unwrap();
            assert_eq!(v, e.from);
            assert_eq!(b.dual_ancestor(&mut store, &v).unwrap(), e.to, "seed {seed}");
            compared += 1;
        }
        assert!(compared > 100);
    }
}
