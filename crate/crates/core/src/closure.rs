//! Maximum-weight down-sets and up-sets of a dominance poset (maximum-weight
//! closure), solved exactly by one minimum cut.
//!
//! Weights are quantized to integer multiples of [`WEIGHT_QUANTUM`] before
//! entering the flow network. Node `i` with positive weight gets an arc from
//! the source with capacity `w_i`, a negative node gets an arc to the sink
//! with capacity `-w_i`, and every precedence constraint "selecting `u`
//! forces `v`" is an infinite arc `u -> v`. The selected set is the source
//! side of the source-minimal minimum cut, which is the smallest optimal
//! closure.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{Cap, Capacity, NetworkBuilder};
use crate::model::DominancePoset;

pub const WEIGHT_QUANTUM: f64 = 1e-12;

/// Largest instance accepted by [`brute_force_down_set`].
pub const BRUTE_FORCE_LIMIT: usize = 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionKind {
    DownSet,
    UpSet,
    ConvexPosition,
}

/// A selected subset with its objective value.
///
/// `indices` are node indices of the poset for closure outputs, and sample
/// point indices everywhere else (ERM outputs, convex selections). The two
/// coincide when the cloud has no duplicate points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetSelection {
    pub indices: Vec<usize>,
    pub kind: SelectionKind,
    pub objective_value: f64,
}

impl SetSelection {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    pub fn indicator(&self, n: usize) -> Vec<bool> {
        let mut v = vec![false; n];
        for &i in &self.indices {
            v[i] = true;
        }
        v
    }
}

/// A poset with one real weight per node.
#[derive(Debug, Clone)]
pub struct WeightedInstance<'a> {
    poset: &'a DominancePoset,
    weights: Vec<f64>,
}

impl<'a> WeightedInstance<'a> {
    /// `weights` has one entry per poset node.
    pub fn new(poset: &'a DominancePoset, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != poset.node_count() {
            return Err(Error::InvalidInput(format!(
                "{} weights for {} nodes",
                weights.len(),
                poset.node_count()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite weight {w}")));
        }
        Ok(Self { poset, weights })
    }

    /// One weight per sample point; merged duplicates receive summed weights.
    pub fn from_point_weights(poset: &'a DominancePoset, point_weights: &[f64]) -> Result<Self> {
        if point_weights.len() != poset.point_count() {
            return Err(Error::InvalidInput(format!(
                "{} weights for {} points",
                point_weights.len(),
                poset.point_count()
            )));
        }
        Self::new(poset, poset.aggregate(point_weights))
    }

    pub fn poset(&self) -> &DominancePoset {
        self.poset
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Same poset, weights negated.
    pub fn negated(&self) -> Self {
        Self {
            poset: self.poset,
            weights: self.weights.iter().map(|w| -w).collect(),
        }
    }

    pub fn value_of(&self, nodes: &[usize]) -> f64 {
        nodes.iter().map(|&i| self.weights[i]).sum()
    }
}

pub(crate) fn quantize(w: f64) -> Result<Cap> {
    let q = (w / WEIGHT_QUANTUM).round();
    if !q.is_finite() || q.abs() > 2f64.powi(58) {
        return Err(Error::CapacityOverflow);
    }
    Ok(q as Cap)
}

pub(crate) fn quantize_all(weights: &[f64]) -> Result<Vec<Cap>> {
    weights.iter().map(|&w| quantize(w)).collect()
}

/// Solution of a closure problem on local node ids.
#[derive(Debug, Clone)]
pub(crate) struct Closure {
    pub selected: Vec<usize>,
    pub value: Cap,
}

/// Maximum-weight closure: `forces` lists pairs `(u, v)` meaning that
/// selecting `u` requires selecting `v`. Returns the minimal optimal closure.
pub(crate) fn max_closure(n: usize, forces: &[(usize, usize)], weights: &[Cap]) -> Result<Closure> {
    debug_assert_eq!(weights.len(), n);
    let (s, t) = (n, n + 1);
    let mut b = NetworkBuilder::new(n + 2, s, t);
    let mut positive: Cap = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0 {
            b.add_arc(s, i, Capacity::Finite(w));
            positive = positive.checked_add(w).ok_or(Error::CapacityOverflow)?;
        } else if w < 0 {
            b.add_arc(i, t, Capacity::Finite(-w));
        }
    }
    if positive == 0 {
        return Ok(Closure {
            selected: Vec::new(),
            value: 0,
        });
    }
    for &(u, v) in forces {
        b.add_arc(u, v, Capacity::Infinite);
    }
    let flow = b.build()?.max_flow();
    let selected: Vec<usize> = (0..n).filter(|&i| flow.source_side[i]).collect();
    Ok(Closure {
        selected,
        value: positive - flow.value,
    })
}

fn down_forces(poset: &DominancePoset) -> Vec<(usize, usize)> {
    poset.edges().iter().map(|&(lo, hi)| (hi, lo)).collect()
}

fn solve_oriented(inst: &WeightedInstance<'_>, allow_empty: bool, kind: SelectionKind) -> Result<SetSelection> {
    let poset = inst.poset;
    let n = poset.node_count();
    let forces = match kind {
        SelectionKind::DownSet => down_forces(poset),
        SelectionKind::UpSet => poset.edges().to_vec(),
        SelectionKind::ConvexPosition => unreachable!(),
    };
    let q = quantize_all(&inst.weights)?;
    let mut best = max_closure(n, &forces, &q)?;
    if best.selected.is_empty() && !allow_empty {
        // a non-empty down-set contains a minimal node (up-set: a maximal
        // one); force each candidate in turn
        let extreme: Vec<usize> = (0..n)
            .filter(|&v| match kind {
                SelectionKind::DownSet => poset.lower_covers(v).is_empty(),
                _ => poset.upper_covers(v).is_empty(),
            })
            .collect();
        let big: Cap = q.iter().map(|w| w.abs()).sum::<Cap>() + 1;
        let mut forced_best: Option<Closure> = None;
        for v in extreme {
            let mut qv = q.clone();
            qv[v] = big;
            let mut c = max_closure(n, &forces, &qv)?;
            c.value = c.value - big + q[v];
            if forced_best.as_ref().map_or(true, |b| c.value > b.value) {
                forced_best = Some(c);
            }
        }
        best = forced_best.expect("poset has at least one node");
    }
    let value = inst.value_of(&best.selected);
    Ok(SetSelection {
        indices: best.selected,
        kind,
        objective_value: value,
    })
}

pub fn max_weight_down_set(inst: &WeightedInstance<'_>, allow_empty: bool) -> Result<SetSelection> {
    solve_oriented(inst, allow_empty, SelectionKind::DownSet)
}

pub fn max_weight_up_set(inst: &WeightedInstance<'_>, allow_empty: bool) -> Result<SetSelection> {
    solve_oriented(inst, allow_empty, SelectionKind::UpSet)
}

/// Exhaustive optimum over all down-sets; returns the intersection of all
/// optimal down-sets (itself optimal), with the empty set allowed.
pub fn brute_force_down_set(inst: &WeightedInstance<'_>) -> Result<SetSelection> {
    brute_force(inst, SelectionKind::DownSet)
}

pub fn brute_force_up_set(inst: &WeightedInstance<'_>) -> Result<SetSelection> {
    brute_force(inst, SelectionKind::UpSet)
}

fn brute_force(inst: &WeightedInstance<'_>, kind: SelectionKind) -> Result<SetSelection> {
    let poset = inst.poset;
    let n = poset.node_count();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge {
            n,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    // required[v]: nodes that must accompany v
    let required: Vec<u32> = (0..n)
        .map(|v| {
            (0..n)
                .filter(|&u| match kind {
                    SelectionKind::DownSet => poset.reaches(u, v),
                    _ => poset.reaches(v, u),
                })
                .fold(0u32, |m, u| m | 1 << u)
        })
        .collect();
    let q = quantize_all(&inst.weights)?;
    let mut best: Cap = 0;
    let mut meet: u32 = 0;
    for mask in 1u32..(1u32 << n) {
        let closed = (0..n).all(|v| mask >> v & 1 == 0 || required[v] & !mask == 0);
        if !closed {
            continue;
        }
        let val: Cap = (0..n).filter(|&v| mask >> v & 1 == 1).map(|v| q[v]).sum();
        if val > best {
            best = val;
            meet = mask;
        } else if val == best {
            meet &= mask;
        }
    }
    let indices: Vec<usize> = (0..n).filter(|&v| meet >> v & 1 == 1).collect();
    Ok(SetSelection {
        objective_value: inst.value_of(&indices),
        indices,
        kind,
    })
}

/// `true` iff `nodes` is closed downward (or upward) under reachability.
pub fn is_closed(poset: &DominancePoset, nodes: &[usize], kind: SelectionKind) -> bool {
    let mut member = vec![false; poset.node_count()];
    for &v in nodes {
        member[v] = true;
    }
    poset.edges().iter().all(|&(lo, hi)| match kind {
        SelectionKind::DownSet => !member[hi] || member[lo],
        SelectionKind::UpSet => !member[lo] || member[hi],
        SelectionKind::ConvexPosition => true,
    })
}
