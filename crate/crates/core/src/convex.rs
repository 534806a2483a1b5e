//! Maximum-weight convex-position subsets of a planar point set.
//!
//! A subset `S` of the sample is feasible when `conv(S) ∩ sample = S`, so the
//! weight of a feasible set is the total weight of sample points in a closed
//! convex polygon spanned by sample points. Coordinates are snapped to a
//! `2^-40` grid and all orientation tests are exact integer arithmetic.
//!
//! The solver is the rooted fan dynamic program: every polygon with at least
//! three vertices is enumerated from its lowest (then leftmost) vertex, the
//! other vertices in increasing polar angle, and split into fan triangles
//! whose closed point weights come from precomputed "points below segment"
//! tables. For each middle vertex, valid predecessors form a prefix of the
//! incoming edges sorted by direction, which gives `O(n^3 log n)` overall.
//! Empty sets, singletons and segments are handled separately.

use crate::closure::{quantize_all, SelectionKind, SetSelection};
use crate::error::{Error, Result};
use crate::flow::Cap;
use crate::model::PointCloud;

const GRID: f64 = (1u64 << 40) as f64;

/// Largest instance accepted by [`brute_force_convex_subset`].
pub const BRUTE_FORCE_LIMIT: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) struct GridPoint {
    pub x: i64,
    pub y: i64,
}

impl GridPoint {
    fn snap(p: &[f64]) -> Self {
        Self {
            x: (p[0] * GRID).round() as i64,
            y: (p[1] * GRID).round() as i64,
        }
    }

    fn sub(self, o: Self) -> (i64, i64) {
        (self.x - o.x, self.y - o.y)
    }
}

#[inline]
fn cross(u: (i64, i64), v: (i64, i64)) -> i128 {
    u.0 as i128 * v.1 as i128 - u.1 as i128 * v.0 as i128
}

#[inline]
pub(crate) fn orient(a: GridPoint, b: GridPoint, c: GridPoint) -> i128 {
    cross(b.sub(a), c.sub(a))
}

fn snapped(cloud: &PointCloud) -> Result<Vec<GridPoint>> {
    if cloud.dim() != 2 {
        return Err(Error::Unsupported(format!(
            "convex-position oracle requires d = 2 (got d = {})",
            cloud.dim()
        )));
    }
    Ok(cloud.points().map(GridPoint::snap).collect())
}

/// Convex hull vertices (counter-clockwise, no collinear vertices) of the
/// given sample points, as point indices.
pub fn hull_indices(cloud: &PointCloud, indices: &[usize]) -> Result<Vec<usize>> {
    let grid = snapped(cloud)?;
    Ok(hull_of(&grid, indices))
}

fn hull_of(grid: &[GridPoint], indices: &[usize]) -> Vec<usize> {
    let mut pts: Vec<usize> = indices.to_vec();
    pts.sort_by_key(|&i| (grid[i], i));
    pts.dedup_by_key(|i| grid[*i]);
    if pts.len() <= 2 {
        return pts;
    }
    let mut lower: Vec<usize> = Vec::new();
    for &i in &pts {
        while lower.len() >= 2
            && orient(grid[lower[lower.len() - 2]], grid[lower[lower.len() - 1]], grid[i]) <= 0
        {
            lower.pop();
        }
        lower.push(i);
    }
    let mut upper: Vec<usize> = Vec::new();
    for &i in pts.iter().rev() {
        while upper.len() >= 2
            && orient(grid[upper[upper.len() - 2]], grid[upper[upper.len() - 1]], grid[i]) <= 0
        {
            upper.pop();
        }
        upper.push(i);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    if lower.len() == 2 && grid[lower[0]] == grid[lower[1]] {
        lower.pop();
    }
    lower
}

/// Closed-hull membership for a hull produced by `hull_of`.
fn in_closed_hull(grid: &[GridPoint], hull: &[usize], q: GridPoint) -> bool {
    match hull.len() {
        0 => false,
        1 => grid[hull[0]] == q,
        2 => {
            let (a, b) = (grid[hull[0]], grid[hull[1]]);
            orient(a, b, q) == 0
                && q.x >= a.x.min(b.x)
                && q.x <= a.x.max(b.x)
                && q.y >= a.y.min(b.y)
                && q.y <= a.y.max(b.y)
        }
        k => (0..k).all(|i| orient(grid[hull[i]], grid[hull[(i + 1) % k]], q) >= 0),
    }
}

/// `true` iff no unselected sample point lies inside or on `conv(subset)`.
pub fn is_feasible_convex(subset: &[usize], cloud: &PointCloud) -> Result<bool> {
    let grid = snapped(cloud)?;
    let hull = hull_of(&grid, subset);
    let mut member = vec![false; grid.len()];
    for &i in subset {
        member[i] = true;
    }
    Ok((0..grid.len()).all(|i| member[i] || !in_closed_hull(&grid, &hull, grid[i])))
}

/// All sample points in the closed hull of `subset`.
pub fn hull_closure(subset: &[usize], cloud: &PointCloud) -> Result<Vec<usize>> {
    let grid = snapped(cloud)?;
    let hull = hull_of(&grid, subset);
    Ok((0..grid.len())
        .filter(|&i| in_closed_hull(&grid, &hull, grid[i]))
        .collect())
}

fn check_weights(cloud: &PointCloud, weights: &[f64]) -> Result<()> {
    if weights.len() != cloud.len() {
        return Err(Error::InvalidInput(format!(
            "{} weights for {} points",
            weights.len(),
            cloud.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !w.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite weight {w}")));
    }
    Ok(())
}

fn selection(indices: Vec<usize>, weights: &[f64]) -> SetSelection {
    let objective_value = indices.iter().map(|&i| weights[i]).sum();
    SetSelection {
        indices,
        kind: SelectionKind::ConvexPosition,
        objective_value,
    }
}

/// Exhaustive optimum over all `2^n` subsets, keeping the feasible ones.
pub fn brute_force_convex_subset(cloud: &PointCloud, weights: &[f64]) -> Result<SetSelection> {
    let grid = snapped(cloud)?;
    check_weights(cloud, weights)?;
    let n = grid.len();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge {
            n,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let q = quantize_all(weights)?;
    let mut best: (Cap, u32) = (0, 0);
    for mask in 1u32..(1 << n) {
        let subset: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        let hull = hull_of(&grid, &subset);
        let feasible = (0..n).all(|i| mask >> i & 1 == 1 || !in_closed_hull(&grid, &hull, grid[i]));
        if !feasible {
            continue;
        }
        let val: Cap = subset.iter().map(|&i| q[i]).sum();
        if val > best.0 {
            best = (val, mask);
        }
    }
    let indices = (0..n).filter(|&i| best.1 >> i & 1 == 1).collect();
    Ok(selection(indices, weights))
}

struct Sites {
    pts: Vec<GridPoint>,
    weight: Vec<Cap>,
    // strictly-below and on-segment sums for site pairs u < v in lex order
    below: Vec<Cap>,
    on: Vec<Cap>,
}

impl Sites {
    /// Merges coincident points; sites are in lexicographic `(x, y)` order.
    fn new(grid: &[GridPoint], q: &[Cap]) -> Self {
        let mut order: Vec<usize> = (0..grid.len()).collect();
        order.sort_by_key(|&i| (grid[i], i));
        let mut pts: Vec<GridPoint> = Vec::new();
        let mut weight: Vec<Cap> = Vec::new();
        for i in order {
            if pts.last() == Some(&grid[i]) {
                *weight.last_mut().unwrap() += q[i];
            } else {
                pts.push(grid[i]);
                weight.push(q[i]);
            }
        }
        let m = pts.len();
        let mut below = vec![0; m * m];
        let mut on = vec![0; m * m];
        for u in 0..m {
            for v in (u + 1)..m {
                let (mut b, mut z) = (0, 0);
                for k in (u + 1)..v {
                    let o = orient(pts[u], pts[v], pts[k]);
                    if o < 0 {
                        b += weight[k];
                    } else if o == 0 {
                        z += weight[k];
                    }
                }
                below[u * m + v] = b;
                on[u * m + v] = z;
            }
        }
        Self {
            pts,
            weight,
            below,
            on,
        }
    }

    fn len(&self) -> usize {
        self.pts.len()
    }

    #[inline]
    fn d(&self, u: usize, v: usize) -> Cap {
        self.below[u * self.len() + v]
    }

    #[inline]
    fn z(&self, u: usize, v: usize) -> Cap {
        let (a, b) = if u < v { (u, v) } else { (v, u) };
        self.on[a * self.len() + b]
    }

    fn segment(&self, u: usize, v: usize) -> Cap {
        self.weight[u] + self.weight[v] + self.z(u, v)
    }

    /// Weight of points in the closed triangle, excluding its vertices.
    fn triangle_between(&self, a: usize, b: usize, c: usize) -> Cap {
        let mut t = [a, b, c];
        t.sort_unstable();
        let [l, m, r] = t;
        let o = orient(self.pts[l], self.pts[r], self.pts[m]);
        if o > 0 {
            self.d(l, m) + self.z(l, m) + self.d(m, r) + self.z(m, r) - self.d(l, r)
        } else {
            debug_assert!(o < 0);
            self.d(l, r) + self.z(l, r) - self.weight[m] - self.d(l, m) - self.d(m, r)
        }
    }
}

const NEG: Cap = Cap::MIN / 4;
const START: u32 = u32::MAX;

enum Best {
    Empty,
    Point(usize),
    Segment(usize, usize),
    Polygon(Vec<usize>),
}

/// Exact maximum-weight feasible subset (empty set allowed).
pub fn max_weight_convex_subset_2d(cloud: &PointCloud, weights: &[f64]) -> Result<SetSelection> {
    let grid = snapped(cloud)?;
    check_weights(cloud, weights)?;
    let q = quantize_all(weights)?;
    let sites = Sites::new(&grid, &q);
    let m = sites.len();

    let mut best_val: Cap = 0;
    let mut best = Best::Empty;
    for u in 0..m {
        if sites.weight[u] > best_val {
            best_val = sites.weight[u];
            best = Best::Point(u);
        }
    }
    for u in 0..m {
        for v in (u + 1)..m {
            let s = sites.segment(u, v);
            if s > best_val {
                best_val = s;
                best = Best::Segment(u, v);
            }
        }
    }

    let mut f: Vec<Cap> = Vec::new();
    let mut parent: Vec<u32> = Vec::new();
    for p in 0..m {
        let pp = sites.pts[p];
        let mut cand: Vec<usize> = (0..m)
            .filter(|&s| {
                let c = sites.pts[s];
                c.y > pp.y || (c.y == pp.y && c.x > pp.x)
            })
            .collect();
        let k = cand.len();
        if k < 2 {
            continue;
        }
        cand.sort_by(|&a, &b| {
            let o = orient(pp, sites.pts[a], sites.pts[b]);
            0.cmp(&o).then(a.cmp(&b))
        });
        f.clear();
        f.resize(k * k, NEG);
        parent.clear();
        parent.resize(k * k, START);

        let mut incoming: Vec<(usize, (i64, i64))> = Vec::with_capacity(k);
        let mut outgoing: Vec<(usize, (i64, i64))> = Vec::with_capacity(k);
        let mut local_best: Option<(Cap, usize, usize)> = None;
        for i in 0..k {
            let a = cand[i];
            let pa = sites.pts[a];
            incoming.clear();
            for (c_idx, &c) in cand[..i].iter().enumerate() {
                if f[c_idx * k + i] > NEG {
                    incoming.push((c_idx, pa.sub(sites.pts[c])));
                }
            }
            outgoing.clear();
            for (j, &b) in cand.iter().enumerate().skip(i + 1) {
                if orient(pp, pa, sites.pts[b]) > 0 {
                    outgoing.push((j, sites.pts[b].sub(pa)));
                }
            }
            if outgoing.is_empty() {
                continue;
            }
            incoming.sort_by(|x, y| 0.cmp(&cross(x.1, y.1)));
            outgoing.sort_by(|x, y| 0.cmp(&cross(x.1, y.1)));

            let start = sites.weight[a] + sites.z(p, a);
            let mut run: (Cap, u32) = (NEG, START);
            let mut ptr = 0;
            for &(j, u) in &outgoing {
                while ptr < incoming.len() && cross(incoming[ptr].1, u) > 0 {
                    let c_idx = incoming[ptr].0;
                    let val = f[c_idx * k + i];
                    if val > run.0 {
                        run = (val, c_idx as u32);
                    }
                    ptr += 1;
                }
                let b = cand[j];
                let tri = sites.weight[b] + sites.triangle_between(p, a, b) - sites.z(p, a);
                let (prev, par) = if run.0 > start { run } else { (start, START) };
                let val = prev + tri;
                f[i * k + j] = val;
                parent[i * k + j] = par;
                if local_best.map_or(true, |(v, _, _)| val > v) {
                    local_best = Some((val, i, j));
                }
            }
        }
        if let Some((val, i, j)) = local_best {
            let total = sites.weight[p] + val;
            if total > best_val {
                best_val = total;
                let mut chain = vec![cand[j], cand[i]];
                let (mut a, mut b) = (i, j);
                loop {
                    let par = parent[a * k + b];
                    if par == START {
                        break;
                    }
                    b = a;
                    a = par as usize;
                    chain.push(cand[a]);
                }
                chain.push(p);
                chain.reverse();
                best = Best::Polygon(chain);
            }
        }
    }

    let vertices: Vec<GridPoint> = match best {
        Best::Empty => Vec::new(),
        Best::Point(u) => vec![sites.pts[u]],
        Best::Segment(u, v) => vec![sites.pts[u], sites.pts[v]],
        Best::Polygon(chain) => chain.iter().map(|&s| sites.pts[s]).collect(),
    };
    let indices: Vec<usize> = if vertices.is_empty() {
        Vec::new()
    } else {
        let hull_grid: Vec<GridPoint> = vertices.clone();
        let hull: Vec<usize> = (0..hull_grid.len()).collect();
        (0..grid.len())
            .filter(|&i| in_closed_hull(&hull_grid, &hull, grid[i]))
            .collect()
    };
    debug_assert_eq!(indices.iter().map(|&i| q[i]).sum::<Cap>(), best_val);
    Ok(selection(indices, weights))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SeedPolicy;
    use rand::Rng;

    fn cloud(points: &[[f64; 2]]) -> PointCloud {
        let pts: Vec<Vec<f64>> = points.iter().map(|p| p.to_vec()).collect();
        PointCloud::new(2, &pts).unwrap()
    }

    /// Points on a coarse grid so that rigid motions are exact.
    fn grid_cloud(rng: &mut impl Rng, n: usize) -> PointCloud {
        let coords: Vec<f64> = (0..2 * n).map(|_| rng.gen_range(0..=1024) as f64 / 1024.0).collect();
        PointCloud::from_flat(2, coords).unwrap()
    }

    #[test]
    fn negative_weights_give_empty() {
        let c = cloud(&[[0.1, 0.1], [0.5, 0.9], [0.9, 0.2]]);
        let s = max_weight_convex_subset_2d(&c, &[-1.0, -0.5, -2.0]).unwrap();
        assert!(s.is_empty());
        assert_eq!(s.objective_value, 0.0);
    }

    #[test]
    fn triangle_selected() {
        let c = cloud(&[[0.1, 0.1], [0.5, 0.9], [0.9, 0.2]]);
        let s = max_weight_convex_subset_2d(&c, &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(s.indices, vec![0, 1, 2]);
        assert_eq!(s.objective_value, 3.0);
    }

    #[test]
    fn rejects_wrong_dimension() {
        let c = PointCloud::new(3, &[vec![0.1, 0.2, 0.3]]).unwrap();
        assert!(max_weight_convex_subset_2d(&c, &[1.0]).is_err());
        assert!(is_feasible_convex(&[0], &c).is_err());
    }

    #[test]
    fn brute_force_limit() {
        let mut rng = SeedPolicy::new(3).rng(0, "bf");
        let c = PointCloud::uniform(2, 13, &mut rng);
        assert!(matches!(
            brute_force_convex_subset(&c, &[0.0; 13]),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn feasibility_examples() {
        let square = cloud(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]]);
        assert!(!is_feasible_convex(&[0, 1, 2, 3], &square).unwrap());
        assert!(is_feasible_convex(&[0, 1, 2, 3, 4], &square).unwrap());
        let line = cloud(&[[0.1, 0.1], [0.3, 0.3], [0.5, 0.5]]);
        assert!(!is_feasible_convex(&[0, 2], &line).unwrap());
        assert!(is_feasible_convex(&[0, 1], &line).unwrap());
        assert!(is_feasible_convex(&[], &line).unwrap());
        assert!(is_feasible_convex(&[1], &line).unwrap());
    }

    /// Exact membership by Carathéodory: q ∈ conv(S) iff q lies in a closed
    /// triangle, on a closed segment, or on a point of S.
    fn caratheodory_inside(grid: &[GridPoint], s: &[usize], q: GridPoint) -> bool {
        let on_seg = |a: GridPoint, b: GridPoint| {
            orient(a, b, q) == 0
                && q.x >= a.x.min(b.x)
                && q.x <= a.x.max(b.x)
                && q.y >= a.y.min(b.y)
                && q.y <= a.y.max(b.y)
        };
        for (ii, &i) in s.iter().enumerate() {
            if grid[i] == q {
                return true;
            }
            for (jj, &j) in s.iter().enumerate().skip(ii + 1) {
                if on_seg(grid[i], grid[j]) {
                    return true;
                }
                for &k in &s[jj + 1..] {
                    let (a, b, c) = (grid[i], grid[j], grid[k]);
                    let o1 = orient(a, b, q).signum();
                    let o2 = orient(b, c, q).signum();
                    let o3 = orient(c, a, q).signum();
                    let has_neg = o1 < 0 || o2 < 0 || o3 < 0;
                    let has_pos = o1 > 0 || o2 > 0 || o3 > 0;
                    if !(has_neg && has_pos) && orient(a, b, c) != 0 {
                        return true;
                    }
                }
            }
        }
        false
    }

    #[test]
    fn feasibility_matches_exact_caratheodory_oracle() {
        let policy = SeedPolicy::new(8);
        for case in 0..1000 {
            let mut rng = policy.rng(case, "feasible");
            let n = rng.gen_range(1..=12);
            // tiny grid: many collinear and coincident configurations
            let coords: Vec<f64> = (0..2 * n).map(|_| rng.gen_range(0..=4) as f64 / 4.0).collect();
            let c = PointCloud::from_flat(2, coords).unwrap();
            let subset: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
            let grid = snapped(&c).unwrap();
            let want = (0..n)
                .filter(|i| !subset.contains(i))
                .all(|i| !caratheodory_inside(&grid, &subset, grid[i]));
            assert_eq!(is_feasible_convex(&subset, &c).unwrap(), want, "case {case}");
        }
    }

    #[test]
    fn matches_brute_force() {
        let policy = SeedPolicy::new(77);
        for case in 0..200 {
            let mut rng = policy.rng(case, "convex");
            let n = rng.gen_range(1..=11);
            let c = PointCloud::uniform(2, n, &mut rng);
            let w: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let fast = max_weight_convex_subset_2d(&c, &w).unwrap();
            let slow = brute_force_convex_subset(&c, &w).unwrap();
            let qf: Cap = quantize_all(&w).unwrap().iter().enumerate().filter(|(i, _)| fast.contains(*i)).map(|(_, v)| v).sum();
            let qs: Cap = quantize_all(&w).unwrap().iter().enumerate().filter(|(i, _)| slow.contains(*i)).map(|(_, v)| v).sum();
            assert_eq!(qf, qs, "case {case}");
            assert!(is_feasible_convex(&fast.indices, &c).unwrap());
        }
    }

    #[test]
    fn zero_weight_point_does_not_change_value() {
        let policy = SeedPolicy::new(12);
        for case in 0..50 {
            let mut rng = policy.rng(case, "zero");
            let n = rng.gen_range(3..=30);
            let c = PointCloud::uniform(2, n, &mut rng);
            let w: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let base = max_weight_convex_subset_2d(&c, &w).unwrap();
            let mut pts: Vec<Vec<f64>> = c.points().map(|p| p.to_vec()).collect();
            pts.push(vec![rng.gen(), rng.gen()]);
            let mut w2 = w.clone();
            w2.push(0.0);
            let c2 = PointCloud::new(2, &pts).unwrap();
            let s = max_weight_convex_subset_2d(&c2, &w2).unwrap();
            assert!((s.objective_value - base.objective_value).abs() < 1e-9, "case {case}");
        }
    }

    #[test]
    fn scaling_and_rigid_motions() {
        let policy = SeedPolicy::new(13);
        for case in 0..40 {
            let mut rng = policy.rng(case, "motion");
            let n = rng.gen_range(3..=40);
            let c = grid_cloud(&mut rng, n);
            let w: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let base = max_weight_convex_subset_2d(&c, &w).unwrap();
            assert!(is_feasible_convex(&base.indices, &c).unwrap());

            let scaled: Vec<f64> = w.iter().map(|x| 2.5 * x).collect();
            let s = max_weight_convex_subset_2d(&c, &scaled).unwrap();
            assert_eq!(s.indices, base.indices);

            let transforms: [fn(&[f64]) -> Vec<f64>; 3] = [
                |p| vec![1.0 - p[1], p[0]],
                |p| vec![1.0 - p[0], 1.0 - p[1]],
                |p| vec![p[1], p[0]],
            ];
            for t in transforms {
                let moved: Vec<Vec<f64>> = c.points().map(t).collect();
                let cm = PointCloud::new(2, &moved).unwrap();
                let sm = max_weight_convex_subset_2d(&cm, &w).unwrap();
                assert!((sm.objective_value - base.objective_value).abs() < 1e-9, "case {case}");
            }
        }
    }
}
