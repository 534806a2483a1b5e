//! Independent reference implementations shared by the integration tests.
//! Nothing here calls into the solvers under test.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use setrate_core::model::{PointCloud, SeedPolicy};

pub fn rng(seed: u64, purpose: &str) -> ChaCha8Rng {
    SeedPolicy::new(seed).rng(0, purpose)
}

pub fn uniform_cloud(d: usize, n: usize, rng: &mut ChaCha8Rng) -> PointCloud {
    let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.gen()).collect()).collect();
    PointCloud::new(d, &pts).unwrap()
}

pub fn uniform_weights(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// `a <= b` componentwise.
pub fn leq(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

pub fn members(mask: u32, n: usize) -> Vec<usize> {
    (0..n).filter(|&i| mask >> i & 1 == 1).collect()
}

/// Sum over a sorted index list, the summation order used everywhere in the
/// comparisons so that identical sets give bitwise identical values.
pub fn value(indices: &[usize], w: &[f64]) -> f64 {
    let mut idx = indices.to_vec();
    idx.sort_unstable();
    idx.iter().map(|&i| w[i]).sum()
}

/// Every subset of the cloud closed downward under componentwise order.
pub fn down_set_masks(cloud: &PointCloud) -> Vec<u32> {
    let n = cloud.len();
    assert!(n <= 20);
    let below: Vec<u32> = (0..n)
        .map(|j| {
            (0..n)
                .filter(|&i| leq(cloud.point(i), cloud.point(j)))
                .fold(0u32, |m, i| m | 1 << i)
        })
        .collect();
    (0u32..1 << n)
        .filter(|&mask| (0..n).all(|j| mask >> j & 1 == 0 || below[j] & !mask == 0))
        .collect()
}

/// Best down-set value by enumeration (empty set allowed).
pub fn brute_down_value(cloud: &PointCloud, w: &[f64]) -> f64 {
    down_set_masks(cloud)
        .into_iter()
        .map(|m| value(&members(m, cloud.len()), w))
        .fold(0.0, f64::max)
}

fn cross(o: &[f64], a: &[f64], b: &[f64]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Closed triangle membership.
pub fn in_triangle(p: &[f64], a: &[f64], b: &[f64], c: &[f64]) -> bool {
    let s = [cross(a, b, p), cross(b, c, p), cross(c, a, p)];
    s.iter().all(|&v| v >= 0.0) || s.iter().all(|&v| v <= 0.0)
}

/// `true` iff no point outside `subset` lies in its convex hull, checked
/// through triangles of the subset (Caratheodory in the plane).
pub fn is_convex_trace(cloud: &PointCloud, subset: &[usize]) -> bool {
    let n = cloud.len();
    let inside: Vec<bool> = (0..n).map(|i| subset.contains(&i)).collect();
    for (x, &a) in subset.iter().enumerate() {
        for (y, &b) in subset.iter().enumerate().skip(x + 1) {
            for &c in &subset[y + 1..] {
                for p in (0..n).filter(|&p| !inside[p]) {
                    if in_triangle(cloud.point(p), cloud.point(a), cloud.point(b), cloud.point(c)) {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Best value over convex traces by enumeration (empty set allowed).
pub fn brute_convex_value(cloud: &PointCloud, w: &[f64]) -> f64 {
    let n = cloud.len();
    assert!(n <= 16);
    (1u32..1 << n)
        .map(|m| members(m, n))
        .filter(|s| is_convex_trace(cloud, s))
        .map(|s| value(&s, w))
        .fold(0.0, f64::max)
}

/// Pool adjacent violators on an already ordered sequence.
pub fn pava(y: &[f64]) -> Vec<f64> {
    let mut pools: Vec<(f64, usize)> = Vec::new();
    for &v in y {
        pools.push((v, 1));
        while pools.len() > 1 {
            let (s1, c1) = pools[pools.len() - 1];
            let (s0, c0) = pools[pools.len() - 2];
            if s0 / c0 as f64 > s1 / c1 as f64 {
                pools.pop();
                *pools.last_mut().unwrap() = (s0 + s1, c0 + c1);
            } else {
                break;
            }
        }
    }
    pools
        .into_iter()
        .flat_map(|(s, c)| std::iter::repeat(s / c as f64).take(c))
        .collect()
}

/// Euclidean projection onto `{f : f_i <= f_j whenever X_i <= X_j}` by
/// Dykstra's alternating projections onto the pairwise half-spaces.
pub fn dykstra_projection(cloud: &PointCloud, y: &[f64]) -> Vec<f64> {
    let n = cloud.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| i != j && leq(cloud.point(i), cloud.point(j)))
        .collect();
    let mut f = y.to_vec();
    let mut corr = vec![[0.0f64; 2]; pairs.len()];
    for _ in 0..200_000 {
        let before = f.clone();
        for (k, &(i, j)) in pairs.iter().enumerate() {
            let (mut a, mut b) = (f[i] + corr[k][0], f[j] + corr[k][1]);
            let (a0, b0) = (a, b);
            if a > b {
                let m = 0.5 * (a + b);
                a = m;
                b = m;
            }
            corr[k] = [a0 - a, b0 - b];
            f[i] = a;
            f[j] = b;
        }
        let change = f.iter().zip(&before).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        if change < 1e-14 {
            break;
        }
    }
    f
}
