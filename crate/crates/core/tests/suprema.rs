mod common;

use common::{down_set_masks, members, rng, uniform_cloud, value};
use rand::Rng;
use rand_distr::StandardNormal;
use setrate_core::model::{PointCloud, SetClassDescriptor};
use setrate_core::suprema::{
    default_eps_grid, estimate_sup_expectation, greedy_packing, greedy_packing_entropy, localized_sup_lagrangian,
    multiplier_inequality_check_with, random_family, symmetrized_sup, ConcaveMajorant, EntropyConfig,
    MultiplierConfig, MultiplierLaw,
};
use statrs::function::erf::erfc;

/// Largest `sum_{i in C} xi_i` over down-sets of each size.
fn best_by_size(cloud: &PointCloud, xi: &[f64]) -> Vec<f64> {
    let n = cloud.len();
    let mut best = vec![f64::NEG_INFINITY; n + 1];
    for m in down_set_masks(cloud) {
        let s = members(m, n);
        let v = value(&s, xi);
        best[s.len()] = best[s.len()].max(v);
    }
    best
}

#[test]
fn lagrangian_matches_constrained_enumeration() {
    let mut r = rng(51, "sup-lagrange");
    for trial in 0..200 {
        let d = 2 + trial % 2;
        let n = r.gen_range(2..=14);
        let cloud = uniform_cloud(d, n, &mut r);
        let xi: Vec<f64> = (0..n).map(|_| r.sample(StandardNormal)).collect();
        let top = xi.iter().copied().fold(0.0, f64::max) + 0.1;
        let grid: Vec<f64> = (0..120).map(|k| top * k as f64 / 119.0).collect();
        let env = localized_sup_lagrangian(&cloud, SetClassDescriptor::lower(d).unwrap(), &xi, &grid).unwrap();
        let best = best_by_size(&cloud, &xi);
        for p in &env {
            assert!(
                (p.value - best[p.size]).abs() < 1e-12,
                "size {}: {} vs {}",
                p.size,
                p.value,
                best[p.size]
            );
        }
        assert_eq!(env.last().unwrap().size, 0);
        assert!(env.windows(2).all(|w| w[0].size >= w[1].size));
    }
}

#[test]
fn symmetrized_sup_matches_enumeration() {
    let mut r = rng(52, "sup-brute");
    for _ in 0..100 {
        let n = r.gen_range(1..=12);
        let cloud = uniform_cloud(2, n, &mut r);
        let xi: Vec<f64> = (0..n).map(|_| r.sample(StandardNormal)).collect();
        let got = symmetrized_sup(&cloud, SetClassDescriptor::lower(2).unwrap(), &xi).unwrap();
        let want = down_set_masks(&cloud)
            .into_iter()
            .map(|m| value(&members(m, n), &xi).abs())
            .fold(0.0, f64::max)
            / (n as f64).sqrt();
        assert!((got - want).abs() < 1e-12);
    }
}

#[test]
fn sup_expectation_is_reproducible() {
    let class = SetClassDescriptor::lower(2).unwrap();
    let a = estimate_sup_expectation(class, 64, 40, &MultiplierLaw::Rademacher, 9).unwrap();
    let b = estimate_sup_expectation(class, 64, 40, &MultiplierLaw::Rademacher, 9).unwrap();
    assert_eq!(a, b);
    assert!(a.mean > 0.0 && a.std_error > 0.0);
}

fn integrate(f: impl Fn(f64) -> f64, end: f64) -> f64 {
    let h = 1e-4;
    let steps = (end / h) as usize;
    (0..steps).map(|j| f((j as f64 + 0.5) * h)).sum::<f64>() * h
}

#[test]
fn multiplier_check_in_closed_form_for_the_whole_space() {
    // class {empty, everything}: sup |sum_{i in C} w_i| = |sum w_i|, so for
    // n = 2 psi(1) = psi(2) = 1 and the majorant is min(x, 1)
    let sup = |_: &PointCloud, w: &[f64]| Ok(w.iter().sum::<f64>().abs());
    let config = MultiplierConfig {
        replications: 40_000,
        t_step: 1e-3,
    };
    let rep = multiplier_inequality_check_with(&sup, 2, 2, &MultiplierLaw::Gaussian, &config, 3).unwrap();
    assert_eq!(rep.k_grid, vec![1, 2]);
    assert_eq!(rep.psi_hat[0], 1.0);
    assert!((rep.psi_hat[1] - 1.0).abs() <= 4.0 * rep.psi_se[1]);
    let lhs = 2.0 / std::f64::consts::PI.sqrt();
    assert!((rep.lhs - lhs).abs() <= 4.0 * rep.lhs_se);
    let tail = |t: f64| erfc(t / 2f64.sqrt());
    let tail_rhs = 4.0 * integrate(|t| (2.0 * tail(t)).min(1.0), 12.0);
    assert!((rep.tail_rhs - tail_rhs).abs() <= 4.0 * rep.tail_rhs_se + 1e-3);
    // E max(|xi_1|, |xi_2|) = E |xi_1 + xi_2|: the order-statistic bound is
    // tight here
    let order_rhs = integrate(|t| 1.0 - (1.0 - tail(t)).powi(2), 12.0);
    assert!((order_rhs - lhs).abs() < 1e-6);
    assert!((rep.order_rhs - order_rhs).abs() <= 4.0 * rep.order_rhs_se);
    assert!(tail_rhs > lhs);
    assert_eq!(rep.violations, 0);
}

#[test]
fn concave_majorant_dominates_and_is_concave() {
    let mut r = rng(53, "sup-majorant");
    for _ in 0..100 {
        let pts: Vec<(f64, f64)> = (1..=8).map(|k| (k as f64, r.gen_range(0.0..3.0))).collect();
        let m = ConcaveMajorant::new(&pts);
        for &(x, y) in &pts {
            assert!(m.eval(x) >= y - 1e-12);
        }
        assert_eq!(m.eval(0.0), 0.0);
        let xs: Vec<f64> = (0..=160).map(|k| k as f64 * 0.05).collect();
        for w in xs.windows(3) {
            let (a, b, c) = (m.eval(w[0]), m.eval(w[1]), m.eval(w[2]));
            assert!(b >= 0.5 * (a + c) - 1e-9);
            assert!(b >= a - 1e-12);
        }
    }
}

fn hamming(a: &[u64], b: &[u64]) -> u32 {
    a.iter().zip(b).map(|(x, y)| (x ^ y).count_ones()).sum()
}

#[test]
fn greedy_packing_is_separated_and_maximal() {
    let mut r = rng(54, "sup-packing");
    let cloud = uniform_cloud(2, 200, &mut r);
    let config = EntropyConfig {
        family_size: 400,
        ..EntropyConfig::default()
    };
    let family = random_family(SetClassDescriptor::lower(2).unwrap(), &cloud, &config).unwrap();
    for eps in [0.1, 0.3, 0.6] {
        let threshold = eps * eps * 200.0;
        let mut centers: Vec<&Vec<u64>> = Vec::new();
        for f in &family {
            if centers.iter().all(|c| hamming(c, f) as f64 > threshold) {
                centers.push(f);
            }
        }
        assert_eq!(greedy_packing(&family, 200, eps), centers.len());
        for (i, a) in centers.iter().enumerate() {
            for b in &centers[i + 1..] {
                assert!(hamming(a, b) as f64 > threshold);
            }
        }
        for f in &family {
            assert!(centers.iter().any(|c| hamming(c, f) as f64 <= threshold));
        }
    }
}

#[test]
fn entropy_family_prefixes_are_stable() {
    let mut r = rng(55, "sup-prefix");
    let cloud = uniform_cloud(2, 150, &mut r);
    let class = SetClassDescriptor::lower(2).unwrap();
    let small = EntropyConfig {
        family_size: 300,
        ..EntropyConfig::default()
    };
    let large = EntropyConfig {
        family_size: 900,
        ..EntropyConfig::default()
    };
    let a = random_family(class, &cloud, &small).unwrap();
    let b = random_family(class, &cloud, &large).unwrap();
    assert_eq!(a[..], b[..300]);
    // packing counts grow with the family and shrink with the radius
    for eps in default_eps_grid() {
        assert!(greedy_packing(&a, 150, eps) <= greedy_packing(&b, 150, eps));
    }
    let counts: Vec<usize> = default_eps_grid().iter().map(|&e| greedy_packing(&b, 150, e)).collect();
    assert!(counts.windows(2).all(|w| w[0] >= w[1]));
    let est = greedy_packing_entropy(class, &cloud, &default_eps_grid(), &large).unwrap();
    assert_eq!(est.packing_counts, counts);
}
