//! Exact L2 isotonic regression on a dominance poset by recursive min-cut
//! partitioning, with an independent upper-set optimality certificate.
//!
//! Responses are pooled per poset node (duplicate points share a node), so
//! the problem solved is the weighted projection with node masses equal to
//! multiplicities.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::closure::{max_closure, max_weight_up_set, quantize_all, WeightedInstance};
use crate::error::{Error, Result};
use crate::model::{DominancePoset, SeedPolicy};

/// Fitted values closer than this are treated as one level set.
pub const VALUE_QUANTUM: f64 = 1e-12;
/// Largest certificate slack accepted as optimal.
pub const CERTIFICATE_TOLERANCE: f64 = 1e-8;
const MONOTONE_TOLERANCE: f64 = 1e-12;
/// Grid lookups for `d = 2` prediction are used up to this many cells.
const MAX_GRID_CELLS: usize = 1 << 23;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsotonicFit {
    /// Level sets of the fit, as poset node ids, ordered by value.
    pub blocks: Vec<Vec<usize>>,
    pub block_values: Vec<f64>,
    /// Fitted value per poset node.
    pub fitted: Vec<f64>,
    pub certificate_slack: f64,
}

impl IsotonicFit {
    /// Fitted value at every sample point.
    pub fn point_values(&self, poset: &DominancePoset) -> Vec<f64> {
        (0..poset.point_count())
            .map(|p| self.fitted[poset.node_of_point(p)])
            .collect()
    }

    fn from_values(fitted: Vec<f64>, sums: &[f64], mass: &[f64]) -> Self {
        let mut order: Vec<usize> = (0..fitted.len()).collect();
        order.sort_by(|&a, &b| fitted[a].total_cmp(&fitted[b]).then(a.cmp(&b)));
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        let mut last = f64::NEG_INFINITY;
        for &v in &order {
            if blocks.is_empty() || fitted[v] - last > VALUE_QUANTUM {
                blocks.push(Vec::new());
            }
            last = fitted[v];
            blocks.last_mut().unwrap().push(v);
        }
        let mut fitted = fitted;
        let mut block_values = Vec::with_capacity(blocks.len());
        for b in &mut blocks {
            b.sort_unstable();
            let m: f64 = b.iter().map(|&v| mass[v]).sum();
            let s: f64 = b.iter().map(|&v| sums[v]).sum();
            let mean = s / m;
            for &v in b.iter() {
                fitted[v] = mean;
            }
            block_values.push(mean);
        }
        Self {
            blocks,
            block_values,
            fitted,
            certificate_slack: 0.0,
        }
    }
}

/// Per-node response sums and masses.
fn pool(poset: &DominancePoset, responses: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if responses.len() != poset.point_count() {
        return Err(Error::InvalidInput(format!(
            "{} responses for {} points",
            responses.len(),
            poset.point_count()
        )));
    }
    if responses.iter().any(|y| !y.is_finite()) {
        return Err(Error::InvalidInput("responses must be finite".into()));
    }
    let sums = poset.aggregate(responses);
    let mass = (0..poset.node_count())
        .map(|v| poset.multiplicity(v) as f64)
        .collect();
    Ok((sums, mass))
}

/// Euclidean projection of `responses` onto the monotone cone of `poset`.
pub fn isotonic_fit(poset: &DominancePoset, responses: &[f64]) -> Result<IsotonicFit> {
    let (sums, mass) = pool(poset, responses)?;
    let n = poset.node_count();
    let mut fitted = vec![0.0; n];
    let mut local = vec![usize::MAX; n];
    let mut stack: Vec<Vec<usize>> = if n > 0 { vec![(0..n).collect()] } else { Vec::new() };

    while let Some(block) = stack.pop() {
        let m: f64 = block.iter().map(|&v| mass[v]).sum();
        let mu = block.iter().map(|&v| sums[v]).sum::<f64>() / m;
        if block.len() > 1 {
            for (k, &v) in block.iter().enumerate() {
                local[v] = k;
            }
            // the block is order-convex, so induced cover edges generate
            // its order
            let mut forces = Vec::new();
            for (k, &v) in block.iter().enumerate() {
                for &u in poset.upper_covers(v) {
                    if local[u] != usize::MAX {
                        forces.push((k, local[u]));
                    }
                }
            }
            let w: Vec<f64> = block.iter().map(|&v| sums[v] - mass[v] * mu).collect();
            let sol = max_closure(block.len(), &forces, &quantize_all(&w)?)?;
            for &v in &block {
                local[v] = usize::MAX;
            }
            if sol.value > 0 && !sol.selected.is_empty() && sol.selected.len() < block.len() {
                let mut upper = vec![false; block.len()];
                for &k in &sol.selected {
                    upper[k] = true;
                }
                let (hi, lo): (Vec<(usize, usize)>, Vec<(usize, usize)>) =
                    block.iter().copied().enumerate().partition(|&(k, _)| upper[k]);
                stack.push(lo.into_iter().map(|(_, v)| v).collect());
                stack.push(hi.into_iter().map(|(_, v)| v).collect());
                continue;
            }
        }
        for &v in &block {
            fitted[v] = mu;
        }
    }

    let mut fit = IsotonicFit::from_values(fitted, &sums, &mass);
    fit.certificate_slack = certify_optimality(poset, responses, &fit)?.slack;
    Ok(fit)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    /// `max_U sum_{i in U} (Y_i - f_i)` over upper sets, empty set included.
    pub slack: f64,
    /// Largest `|sum_{i in B} (Y_i - f_i)|` over blocks.
    pub block_residual: f64,
}

impl Certificate {
    pub fn is_optimal(&self) -> bool {
        self.slack <= CERTIFICATE_TOLERANCE && self.block_residual <= CERTIFICATE_TOLERANCE
    }
}

/// Checks the projection conditions for `fit`; zero slack certifies
/// optimality because upper-set indicators are monotone.
pub fn certify_optimality(poset: &DominancePoset, responses: &[f64], fit: &IsotonicFit) -> Result<Certificate> {
    let (sums, mass) = pool(poset, responses)?;
    if fit.fitted.len() != poset.node_count() {
        return Err(Error::InvalidInput("fit does not match the poset".into()));
    }
    for &(lo, hi) in poset.edges() {
        if fit.fitted[lo] > fit.fitted[hi] + MONOTONE_TOLERANCE {
            return Err(Error::NotMonotone {
                lower: lo,
                upper: hi,
                lower_value: fit.fitted[lo],
                upper_value: fit.fitted[hi],
            });
        }
    }
    let residual: Vec<f64> = (0..poset.node_count())
        .map(|v| sums[v] - mass[v] * fit.fitted[v])
        .collect();
    let inst = WeightedInstance::new(poset, residual.clone())?;
    let best = max_weight_up_set(&inst, true)?;
    let block_residual = fit
        .blocks
        .iter()
        .map(|b| b.iter().map(|&v| residual[v]).sum::<f64>().abs())
        .fold(0.0, f64::max);
    Ok(Certificate {
        slack: best.objective_value.max(0.0),
        block_residual,
    })
}

/// Pool-adjacent-violators on a totally ordered poset.
pub fn pava_chain(poset: &DominancePoset, responses: &[f64]) -> Result<IsotonicFit> {
    let order = poset
        .chain_order()
        .ok_or_else(|| Error::InvalidInput("pava_chain needs a chain".into()))?;
    let (sums, mass) = pool(poset, responses)?;
    // stack of (sum, mass, count) pools
    let mut pools: Vec<(f64, f64, usize)> = Vec::new();
    for &v in &order {
        pools.push((sums[v], mass[v], 1));
        while pools.len() > 1 {
            let (s1, m1, c1) = pools[pools.len() - 1];
            let (s0, m0, c0) = pools[pools.len() - 2];
            if s0 / m0 > s1 / m1 {
                pools.pop();
                *pools.last_mut().unwrap() = (s0 + s1, m0 + m1, c0 + c1);
            } else {
                break;
            }
        }
    }
    let mut fitted = vec![0.0; order.len()];
    let mut k = 0;
    for (s, m, c) in pools {
        for &v in &order[k..k + c] {
            fitted[v] = s / m;
        }
        k += c;
    }
    let mut fit = IsotonicFit::from_values(fitted, &sums, &mass);
    fit.certificate_slack = certify_optimality(poset, responses, &fit)?.slack;
    Ok(fit)
}

/// Lower-envelope extension `x -> max { f_i : X_i <= x }`, defaulting to the
/// smallest fitted value.
pub struct Predictor {
    dim: usize,
    floor: f64,
    // nodes by decreasing fitted value: (value, coordinates)
    ranked: Vec<(f64, Vec<f64>)>,
    grid: Option<Grid2>,
}

struct Grid2 {
    xs: Vec<f64>,
    ys: Vec<f64>,
    // table[a * (ys.len() + 1) + b]: max over nodes with x among the first a
    // distinct values and y among the first b
    table: Vec<f64>,
}

impl Predictor {
    pub fn new(fit: &IsotonicFit, poset: &DominancePoset) -> Self {
        let dim = poset.dim();
        let floor = fit.fitted.iter().copied().fold(f64::INFINITY, f64::min);
        let mut ranked: Vec<(f64, Vec<f64>)> = (0..poset.node_count())
            .map(|v| (fit.fitted[v], poset.node_coords(v).to_vec()))
            .collect();
        ranked.sort_by(|a, b| b.0.total_cmp(&a.0));
        let grid = (dim == 2).then(|| Grid2::build(&ranked)).flatten();
        Self {
            dim,
            floor,
            ranked,
            grid,
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        if let Some(g) = &self.grid {
            let a = g.xs.partition_point(|&v| v <= x[0]);
            let b = g.ys.partition_point(|&v| v <= x[1]);
            let v = g.table[a * (g.ys.len() + 1) + b];
            return if v == f64::NEG_INFINITY { self.floor } else { v };
        }
        self.ranked
            .iter()
            .find(|(_, c)| c.iter().zip(x).all(|(p, q)| p <= q))
            .map_or(self.floor, |(v, _)| *v)
    }
}

impl Grid2 {
    fn build(ranked: &[(f64, Vec<f64>)]) -> Option<Self> {
        let mut xs: Vec<f64> = ranked.iter().map(|(_, c)| c[0]).collect();
        let mut ys: Vec<f64> = ranked.iter().map(|(_, c)| c[1]).collect();
        for v in [&mut xs, &mut ys] {
            v.sort_by(f64::total_cmp);
            v.dedup();
        }
        let (w, h) = (xs.len() + 1, ys.len() + 1);
        if w.checked_mul(h)? > MAX_GRID_CELLS {
            return None;
        }
        let mut table = vec![f64::NEG_INFINITY; w * h];
        for (v, c) in ranked {
            let a = xs.partition_point(|&t| t < c[0]) + 1;
            let b = ys.partition_point(|&t| t < c[1]) + 1;
            let cell = &mut table[a * h + b];
            *cell = cell.max(*v);
        }
        for a in 0..w {
            for b in 0..h {
                let mut m = table[a * h + b];
                if a > 0 {
                    m = m.max(table[(a - 1) * h + b]);
                }
                if b > 0 {
                    m = m.max(table[a * h + b - 1]);
                }
                table[a * h + b] = m;
            }
        }
        Some(Self { xs, ys, table })
    }
}

pub fn predict(fit: &IsotonicFit, poset: &DominancePoset, x: &[f64]) -> f64 {
    Predictor::new(fit, poset).predict(x)
}

/// Default monotone truth `clip(sum x_j - d/2, -1, 1)`.
pub fn default_truth(x: &[f64]) -> f64 {
    (x.iter().sum::<f64>() - x.len() as f64 / 2.0).clamp(-1.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct L2Risk {
    pub value: f64,
    pub std_error: f64,
}

/// Monte Carlo estimate of `int (f_hat - f0)^2` under the uniform law.
pub fn l2_risk<F>(fit: &IsotonicFit, poset: &DominancePoset, f0: F, samples: usize, seed: u64) -> Result<L2Risk>
where
    F: Fn(&[f64]) -> f64,
{
    if samples < 2 {
        return Err(Error::InvalidInput("Monte Carlo needs at least 2 samples".into()));
    }
    let pred = Predictor::new(fit, poset);
    let mut rng = SeedPolicy::new(seed).rng(0, "l2-risk");
    let mut x = vec![0.0; poset.dim()];
    let (mut s1, mut s2) = (0.0, 0.0);
    for _ in 0..samples {
        x.iter_mut().for_each(|v| *v = rng.gen());
        let e = (pred.predict(&x) - f0(&x)).powi(2);
        s1 += e;
        s2 += e * e;
    }
    let n = samples as f64;
    let mean = s1 / n;
    let var = ((s2 - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok(L2Risk {
        value: mean,
        std_error: (var / n).sqrt(),
    })
}
