//! Geometric representatives of estimated and true sets, with exact
//! Lebesgue volumes under the uniform law on `[0,1]^d` where available.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::dominated;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// Union of orthants `[0, c]`.
    Lower,
    /// Union of orthants `[c, 1]`.
    Upper,
}

/// A lower (or upper) set given by its extreme corners.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Staircase {
    pub dim: usize,
    pub corners: Vec<Vec<f64>>,
    pub orientation: Orientation,
}

impl Staircase {
    /// Keeps only the extreme corners (maximal for lower, minimal for upper),
    /// deduplicated and sorted lexicographically.
    pub fn new(dim: usize, corners: Vec<Vec<f64>>, orientation: Orientation) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("staircase dimension must be positive".into()));
        }
        if corners.iter().any(|c| c.len() != dim) {
            return Err(Error::InvalidInput("corner dimension mismatch".into()));
        }
        let below = |a: &[f64], b: &[f64]| match orientation {
            Orientation::Lower => dominated(a, b),
            Orientation::Upper => dominated(b, a),
        };
        let mut sorted = corners;
        sorted.sort_by(|a, b| {
            a.iter()
                .zip(b)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        sorted.dedup();
        let keep: Vec<bool> = (0..sorted.len())
            .map(|i| {
                !(0..sorted.len()).any(|j| j != i && below(&sorted[i], &sorted[j]))
            })
            .collect();
        let corners = sorted
            .into_iter()
            .zip(keep)
            .filter_map(|(c, k)| k.then_some(c))
            .collect();
        Ok(Self {
            dim,
            corners,
            orientation,
        })
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.corners.iter().any(|c| match self.orientation {
            Orientation::Lower => dominated(x, c),
            Orientation::Upper => dominated(c, x),
        })
    }

    /// Corners of the reflected set `x -> 1 - x`, which is a lower staircase.
    fn as_lower_corners(&self) -> Vec<Vec<f64>> {
        match self.orientation {
            Orientation::Lower => self.corners.clone(),
            Orientation::Upper => self
                .corners
                .iter()
                .map(|c| c.iter().map(|v| 1.0 - v).collect())
                .collect(),
        }
    }

    /// Exact volume for `d <= 3`.
    pub fn volume(&self) -> Result<f64> {
        if self.dim > 3 {
            return Err(Error::Unsupported(format!(
                "exact staircase volume needs d <= 3 (got d = {}); use the Monte Carlo path",
                self.dim
            )));
        }
        Ok(lower_volume(self.dim, &self.as_lower_corners()))
    }
}

/// Volume of a union of orthants `[0, c]`; corners need not be an antichain.
pub(crate) fn lower_volume(dim: usize, corners: &[Vec<f64>]) -> f64 {
    if corners.is_empty() {
        return 0.0;
    }
    match dim {
        1 => corners.iter().map(|c| c[0]).fold(0.0, f64::max),
        2 => {
            let mut pts: Vec<(f64, f64)> = corners.iter().map(|c| (c[0], c[1])).collect();
            area_2d(&mut pts)
        }
        _ => {
            // sweep the last axis from the top; each slab has a constant
            // (d-1)-dimensional cross-section
            let last = dim - 1;
            let mut order: Vec<&Vec<f64>> = corners.iter().collect();
            order.sort_by(|a, b| b[last].total_cmp(&a[last]));
            let mut vol = 0.0;
            let mut active: Vec<Vec<f64>> = Vec::new();
            let mut i = 0;
            while i < order.len() {
                let level = order[i][last];
                while i < order.len() && order[i][last] == level {
                    active.push(order[i][..last].to_vec());
                    i += 1;
                }
                let next = order.get(i).map_or(0.0, |c| c[last]);
                vol += (level - next) * lower_volume(last, &active);
            }
            vol
        }
    }
}

fn area_2d(pts: &mut [(f64, f64)]) -> f64 {
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    // height on (x_{k-1}, x_k] is the largest y among corners with x >= x_k
    let mut area = 0.0;
    let mut suffix_max = 0.0f64;
    let mut heights = vec![0.0; pts.len()];
    for k in (0..pts.len()).rev() {
        suffix_max = suffix_max.max(pts[k].1);
        heights[k] = suffix_max;
    }
    let mut prev_x = 0.0;
    for (k, &(x, _)) in pts.iter().enumerate() {
        area += (x - prev_x) * heights[k];
        prev_x = x;
    }
    area
}

/// Disjoint boxes `(lo, hi)` whose union is the lower staircase.
pub(crate) fn lower_boxes(dim: usize, corners: &[Vec<f64>]) -> Vec<(Vec<f64>, Vec<f64>)> {
    if corners.is_empty() {
        return Vec::new();
    }
    if dim == 1 {
        let m = corners.iter().map(|c| c[0]).fold(0.0, f64::max);
        return vec![(vec![0.0], vec![m])];
    }
    let last = dim - 1;
    let mut order: Vec<&Vec<f64>> = corners.iter().collect();
    order.sort_by(|a, b| b[last].total_cmp(&a[last]));
    let mut boxes = Vec::new();
    let mut active: Vec<Vec<f64>> = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let level = order[i][last];
        while i < order.len() && order[i][last] == level {
            active.push(order[i][..last].to_vec());
            i += 1;
        }
        let next = order.get(i).map_or(0.0, |c| c[last]);
        if level > next {
            for (mut lo, mut hi) in lower_boxes(last, &active) {
                lo.push(next);
                hi.push(level);
                boxes.push((lo, hi));
            }
        }
    }
    boxes
}

fn factorial(d: usize) -> f64 {
    (1..=d).map(|k| k as f64).product()
}

/// Volume of `{x in [lo, hi] : sum x <= t}`.
pub(crate) fn box_below_hyperplane(lo: &[f64], hi: &[f64], t: f64) -> f64 {
    let d = lo.len();
    let base = t - lo.iter().sum::<f64>();
    if base <= 0.0 {
        return 0.0;
    }
    let lens: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| b - a).collect();
    let full: f64 = lens.iter().sum();
    if base >= full {
        return lens.iter().product();
    }
    let mut acc = 0.0;
    for mask in 0u32..(1 << d) {
        let shift: f64 = (0..d).filter(|&j| mask >> j & 1 == 1).map(|j| lens[j]).sum();
        let r = base - shift;
        if r > 0.0 {
            let term = r.powi(d as i32);
            if mask.count_ones() % 2 == 0 {
                acc += term;
            } else {
                acc -= term;
            }
        }
    }
    (acc / factorial(d)).max(0.0)
}

/// Convex polygon with counter-clockwise vertices (possibly degenerate).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexPolygon {
    pub vertices: Vec<[f64; 2]>,
}

impl ConvexPolygon {
    pub fn area(&self) -> f64 {
        let v = &self.vertices;
        if v.len() < 3 {
            return 0.0;
        }
        let mut s = 0.0;
        for i in 0..v.len() {
            let (a, b) = (v[i], v[(i + 1) % v.len()]);
            s += a[0] * b[1] - a[1] * b[0];
        }
        (s / 2.0).abs()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let v = &self.vertices;
        match v.len() {
            0 => false,
            1 => v[0][0] == x[0] && v[0][1] == x[1],
            2 => {
                let cr = (v[1][0] - v[0][0]) * (x[1] - v[0][1]) - (v[1][1] - v[0][1]) * (x[0] - v[0][0]);
                cr == 0.0
                    && x[0] >= v[0][0].min(v[1][0])
                    && x[0] <= v[0][0].max(v[1][0])
                    && x[1] >= v[0][1].min(v[1][1])
                    && x[1] <= v[0][1].max(v[1][1])
            }
            k => (0..k).all(|i| {
                let (a, b) = (v[i], v[(i + 1) % k]);
                (b[0] - a[0]) * (x[1] - a[1]) - (b[1] - a[1]) * (x[0] - a[0]) >= 0.0
            }),
        }
    }

    /// Keeps the part with `n . x <= c`.
    pub fn clip(&self, n: [f64; 2], c: f64) -> ConvexPolygon {
        let v = &self.vertices;
        if v.len() < 3 {
            return ConvexPolygon { vertices: Vec::new() };
        }
        let side = |p: [f64; 2]| n[0] * p[0] + n[1] * p[1] - c;
        let mut out = Vec::with_capacity(v.len() + 1);
        for i in 0..v.len() {
            let (a, b) = (v[i], v[(i + 1) % v.len()]);
            let (sa, sb) = (side(a), side(b));
            if sa <= 0.0 {
                out.push(a);
            }
            if (sa < 0.0 && sb > 0.0) || (sa > 0.0 && sb < 0.0) {
                let t = sa / (sa - sb);
                out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
            }
        }
        ConvexPolygon { vertices: out }
    }

    pub fn intersect(&self, other: &ConvexPolygon) -> ConvexPolygon {
        let w = &other.vertices;
        if w.len() < 3 {
            return ConvexPolygon { vertices: Vec::new() };
        }
        let mut cur = self.clone();
        for i in 0..w.len() {
            let (a, b) = (w[i], w[(i + 1) % w.len()]);
            // inside of a CCW edge is to its left: cross(b - a, x - a) >= 0
            let n = [b[1] - a[1], -(b[0] - a[0])];
            let c = n[0] * a[0] + n[1] * a[1];
            cur = cur.clip(n, c);
        }
        cur
    }
}

/// Sets whose uniform-law measure the risk evaluator understands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Region {
    Empty { dim: usize },
    Staircase(Staircase),
    Polygon(ConvexPolygon),
    /// `{x in [0,1]^d : x_1 + ... + x_d <= threshold}`.
    HalfSpace { dim: usize, threshold: f64 },
}

impl Region {
    /// The default truth `{sum x_j <= d/2}`: a lower set and convex.
    pub fn default_truth(dim: usize) -> Self {
        Region::HalfSpace {
            dim,
            threshold: dim as f64 / 2.0,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Region::Empty { dim } | Region::HalfSpace { dim, .. } => *dim,
            Region::Staircase(s) => s.dim,
            Region::Polygon(_) => 2,
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Region::Empty { .. } => false,
            Region::Staircase(s) => s.contains(x),
            Region::Polygon(p) => p.contains(x),
            Region::HalfSpace { threshold, .. } => x.iter().sum::<f64>() <= *threshold,
        }
    }

    pub fn volume(&self) -> Option<f64> {
        match self {
            Region::Empty { .. } => Some(0.0),
            Region::Staircase(s) => s.volume().ok(),
            Region::Polygon(p) => Some(p.area()),
            Region::HalfSpace { dim, threshold } => {
                Some(box_below_hyperplane(&vec![0.0; *dim], &vec![1.0; *dim], *threshold))
            }
        }
    }

    /// Exact `vol(self ∩ other)` where a closed form is implemented.
    pub fn intersection_volume(&self, other: &Region) -> Option<f64> {
        use Region::*;
        if self.dim() != other.dim() {
            return None;
        }
        match (self, other) {
            (Empty { .. }, _) | (_, Empty { .. }) => Some(0.0),
            (Staircase(s), HalfSpace { threshold, .. }) | (HalfSpace { threshold, .. }, Staircase(s)) => {
                if s.dim > 3 {
                    return None;
                }
                let boxes = lower_boxes(s.dim, &s.as_lower_corners());
                let d = s.dim as f64;
                Some(match s.orientation {
                    Orientation::Lower => boxes
                        .iter()
                        .map(|(lo, hi)| box_below_hyperplane(lo, hi, *threshold))
                        .sum(),
                    // reflected: sum x <= t  <=>  sum y >= d - t
                    Orientation::Upper => boxes
                        .iter()
                        .map(|(lo, hi)| {
                            let vol: f64 = lo.iter().zip(hi).map(|(a, b)| b - a).product();
                            vol - box_below_hyperplane(lo, hi, d - threshold)
                        })
                        .sum(),
                })
            }
            (Staircase(a), Staircase(b)) => {
                if a.orientation != b.orientation || a.dim > 3 {
                    return None;
                }
                let mut meet = Vec::with_capacity(a.corners.len() * b.corners.len());
                for ca in &a.corners {
                    for cb in &b.corners {
                        let c: Vec<f64> = ca
                            .iter()
                            .zip(cb)
                            .map(|(x, y)| match a.orientation {
                                Orientation::Lower => x.min(*y),
                                Orientation::Upper => x.max(*y),
                            })
                            .collect();
                        meet.push(c);
                    }
                }
                let st = crate::erm::Staircase::new(a.dim, meet, a.orientation).ok()?;
                st.volume().ok()
            }
            (Polygon(p), HalfSpace { threshold, .. }) | (HalfSpace { threshold, .. }, Polygon(p)) => {
                Some(p.clip([1.0, 1.0], *threshold).area())
            }
            (Polygon(p), Polygon(q)) => Some(p.intersect(q).area()),
            (HalfSpace { dim, threshold: t1 }, HalfSpace { threshold: t2, .. }) => {
                Some(box_below_hyperplane(&vec![0.0; *dim], &vec![1.0; *dim], t1.min(*t2)))
            }
            _ => None,
        }
    }
}
