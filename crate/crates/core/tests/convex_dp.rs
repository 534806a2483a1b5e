mod common;

use common::{brute_convex_value, is_convex_trace, rng, uniform_cloud, uniform_weights, value};
use rand::Rng;
use setrate_core::convex::{hull_closure, is_feasible_convex, max_weight_convex_subset_2d};
use setrate_core::model::PointCloud;

#[test]
fn dp_matches_enumeration() {
    let mut r = rng(21, "convex-dp");
    for _ in 0..200 {
        let n = r.gen_range(1..=11);
        let cloud = uniform_cloud(2, n, &mut r);
        let w = uniform_weights(n, &mut r);
        let sel = max_weight_convex_subset_2d(&cloud, &w).unwrap();
        assert!(is_convex_trace(&cloud, &sel.indices));
        let got = value(&sel.indices, &w);
        let want = brute_convex_value(&cloud, &w);
        assert!((got - want).abs() < 1e-12, "dp {got} vs enumeration {want}");
    }
}

#[test]
fn feasibility_agrees_with_triangle_test() {
    let mut r = rng(22, "convex-feasible");
    for _ in 0..300 {
        let n = r.gen_range(3..=9);
        let cloud = uniform_cloud(2, n, &mut r);
        let subset: Vec<usize> = (0..n).filter(|_| r.gen_bool(0.5)).collect();
        assert_eq!(is_feasible_convex(&subset, &cloud).unwrap(), is_convex_trace(&cloud, &subset));
        let closed = hull_closure(&subset, &cloud).unwrap();
        assert!(is_convex_trace(&cloud, &closed));
        assert!(subset.iter().all(|i| closed.contains(i)));
        assert_eq!(hull_closure(&closed, &cloud).unwrap(), closed);
    }
}

#[test]
fn grid_points_with_collinear_triples() {
    // exact orientation predicates must handle collinear points
    let pts: Vec<Vec<f64>> = (0..3)
        .flat_map(|i| (0..3).map(move |j| vec![i as f64 / 2.0, j as f64 / 2.0]))
        .collect();
    let cloud = PointCloud::new(2, &pts).unwrap();
    let mut w = vec![1.0; 9];
    w[4] = -5.0;
    // the centre lies in the hull of any set containing two opposite points
    let sel = max_weight_convex_subset_2d(&cloud, &w).unwrap();
    assert!(!sel.contains(4));
    assert!((sel.objective_value - brute_convex_value(&cloud, &w)).abs() < 1e-12);
    assert!(is_feasible_convex(&sel.indices, &cloud).unwrap());
}

#[test]
fn all_positive_weights_take_everything() {
    let mut r = rng(23, "convex-all");
    let cloud = uniform_cloud(2, 40, &mut r);
    let w: Vec<f64> = (0..40).map(|_| r.gen_range(0.1..1.0)).collect();
    let sel = max_weight_convex_subset_2d(&cloud, &w).unwrap();
    assert_eq!(sel.len(), 40);
}
