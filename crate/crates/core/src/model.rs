//! Shared data model: point clouds, the componentwise dominance poset, set
//! class descriptors and deterministic seed derivation.

use std::io::{Read, Write};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sample points in `[0,1]^d`, stored row-major in a stable index order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
}

impl PointCloud {
    pub fn new(dim: usize, points: &[Vec<f64>]) -> Result<Self> {
        let mut coords = Vec::with_capacity(points.len() * dim);
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::InvalidCloud(format!(
                    "point {i} has {} coordinates, expected {dim}",
                    p.len()
                )));
            }
            coords.extend_from_slice(p);
        }
        Self::from_flat(dim, coords)
    }

    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidCloud("dimension must be positive".into()));
        }
        if coords.is_empty() || coords.len() % dim != 0 {
            return Err(Error::InvalidCloud(format!(
                "{} coordinates do not form a non-empty set of {dim}-dimensional points",
                coords.len()
            )));
        }
        if let Some(pos) = coords.iter().position(|c| !(0.0..=1.0).contains(c)) {
            return Err(Error::InvalidCloud(format!(
                "coordinate {} of point {} is {} (outside [0,1])",
                pos % dim,
                pos / dim,
                coords[pos]
            )));
        }
        Ok(Self { dim, coords })
    }

    /// `n` i.i.d. uniform points on the unit cube.
    pub fn uniform<R: Rng + ?Sized>(dim: usize, n: usize, rng: &mut R) -> Self {
        assert!(dim > 0 && n > 0);
        let coords = (0..n * dim).map(|_| rng.gen::<f64>()).collect();
        Self { dim, coords }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let mut coords = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            coords.extend_from_slice(self.point(i));
        }
        Self::from_flat(self.dim, coords)
    }

    /// Reads one point per row (`x1,...,xd`). A non-numeric first row is
    /// treated as a header.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let rows = read_numeric_rows(reader)?;
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        Self::new(dim, &rows)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
        for p in self.points() {
            w.write_record(p.iter().map(|c| c.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Parses a headerless (or single-header) numeric CSV into rows.
pub fn read_numeric_rows<R: Read>(reader: R) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        let parsed: std::result::Result<Vec<f64>, _> =
            record.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(row) => rows.push(row),
            Err(_) if line == 0 => continue,
            Err(e) => {
                return Err(Error::InvalidInput(format!("row {}: {e}", line + 1)));
            }
        }
    }
    Ok(rows)
}

/// Fixed-size bitset over `0..len`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct BitSet {
    words: Vec<u64>,
}

impl BitSet {
    pub(crate) fn new(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
        }
    }

    #[inline]
    pub(crate) fn insert(&mut self, i: usize) {
        self.words[i >> 6] |= 1 << (i & 63);
    }

    #[inline]
    pub(crate) fn contains(&self, i: usize) -> bool {
        self.words[i >> 6] >> (i & 63) & 1 == 1
    }

    /// `self |= other`, restricted to the first `upto` bits' words.
    pub(crate) fn union_prefix(&mut self, other: &BitSet, upto: usize) {
        let w = upto.div_ceil(64).min(self.words.len());
        for (a, b) in self.words[..w].iter_mut().zip(&other.words[..w]) {
            *a |= *b;
        }
    }

    /// Set bits in descending order.
    pub(crate) fn iter_desc(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().rev().flat_map(|(wi, &word)| {
            let mut w = word;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = 63 - w.leading_zeros() as usize;
                w &= !(1u64 << b);
                Some(wi * 64 + b)
            })
        })
    }
}

#[inline]
pub(crate) fn dominated(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

/// Componentwise dominance order on a point cloud, with duplicate points
/// merged into a single node and the cover relation (Hasse diagram) as edges.
#[derive(Debug, Clone)]
pub struct DominancePoset {
    dim: usize,
    node_coords: Vec<f64>,
    members: Vec<Vec<usize>>,
    node_of_point: Vec<usize>,
    edges: Vec<(usize, usize)>,
    lower_covers: Vec<Vec<usize>>,
    upper_covers: Vec<Vec<usize>>,
    // reachability, indexed by position in the lexicographic linear extension
    position: Vec<usize>,
    strictly_below: Vec<BitSet>,
}

impl DominancePoset {
    pub fn build(cloud: &PointCloud) -> Self {
        let dim = cloud.dim();
        let n_points = cloud.len();

        let mut by_lex: Vec<usize> = (0..n_points).collect();
        by_lex.sort_by(|&a, &b| lex_cmp(cloud.point(a), cloud.point(b)).then(a.cmp(&b)));

        // groups of identical points, each listed by ascending point index
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for &i in &by_lex {
            match groups.last_mut() {
                Some(g) if cloud.point(g[0]) == cloud.point(i) => g.push(i),
                _ => groups.push(vec![i]),
            }
        }
        // lexicographic rank of each group is its index in `groups`; node ids
        // follow first occurrence in the input order
        let mut group_order: Vec<usize> = (0..groups.len()).collect();
        group_order.sort_by_key(|&g| groups[g][0]);
        let n = groups.len();
        let mut position = vec![0; n];
        let mut members = Vec::with_capacity(n);
        let mut node_coords = Vec::with_capacity(n * dim);
        let mut node_of_point = vec![0; n_points];
        for (node, &g) in group_order.iter().enumerate() {
            position[node] = g;
            for &p in &groups[g] {
                node_of_point[p] = node;
            }
            node_coords.extend_from_slice(cloud.point(groups[g][0]));
            members.push(groups[g].clone());
        }
        let mut node_at = vec![0; n];
        for (node, &pos) in position.iter().enumerate() {
            node_at[pos] = node;
        }

        let coord = |pos: usize| {
            let node = node_at[pos];
            &node_coords[node * dim..(node + 1) * dim]
        };

        let mut strictly_below = Vec::with_capacity(n);
        let mut edges = Vec::new();
        for p in 0..n {
            let cp = coord(p);
            let mut below = BitSet::new(n);
            for q in 0..p {
                if dominated(coord(q), cp) {
                    below.insert(q);
                }
            }
            // greedy cover extraction in reverse linear-extension order
            let mut covered = BitSet::new(n);
            for q in below.iter_desc() {
                if !covered.contains(q) {
                    edges.push((node_at[q], node_at[p]));
                    covered.union_prefix(&strictly_below[q], q);
                }
            }
            strictly_below.push(below);
        }
        edges.sort_unstable();

        let mut lower_covers = vec![Vec::new(); n];
        let mut upper_covers = vec![Vec::new(); n];
        for &(lo, hi) in &edges {
            lower_covers[hi].push(lo);
            upper_covers[lo].push(hi);
        }

        Self {
            dim,
            node_coords,
            members,
            node_of_point,
            edges,
            lower_covers,
            upper_covers,
            position,
            strictly_below,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn node_count(&self) -> usize {
        self.members.len()
    }

    pub fn point_count(&self) -> usize {
        self.node_of_point.len()
    }

    /// Cover relations `(lower, upper)`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn lower_covers(&self, node: usize) -> &[usize] {
        &self.lower_covers[node]
    }

    pub fn upper_covers(&self, node: usize) -> &[usize] {
        &self.upper_covers[node]
    }

    pub fn node_coords(&self, node: usize) -> &[f64] {
        &self.node_coords[node * self.dim..(node + 1) * self.dim]
    }

    /// Original point indices merged into `node`, ascending.
    pub fn members(&self, node: usize) -> &[usize] {
        &self.members[node]
    }

    pub fn multiplicity(&self, node: usize) -> usize {
        self.members[node].len()
    }

    pub fn node_of_point(&self, point: usize) -> usize {
        self.node_of_point[point]
    }

    /// `true` iff node `i` lies below (or equals) node `j` componentwise.
    pub fn reaches(&self, i: usize, j: usize) -> bool {
        i == j || self.strictly_below[self.position[j]].contains(self.position[i])
    }

    /// Sums per-point values into per-node values.
    pub fn aggregate(&self, per_point: &[f64]) -> Vec<f64> {
        assert_eq!(per_point.len(), self.point_count());
        self.members
            .iter()
            .map(|m| m.iter().map(|&p| per_point[p]).sum())
            .collect()
    }

    /// Expands node indices into sorted original point indices.
    pub fn expand(&self, nodes: &[usize]) -> Vec<usize> {
        let mut out: Vec<usize> = nodes
            .iter()
            .flat_map(|&v| self.members[v].iter().copied())
            .collect();
        out.sort_unstable();
        out
    }

    /// If the poset is a total order, the nodes from bottom to top.
    pub fn chain_order(&self) -> Option<Vec<usize>> {
        let n = self.node_count();
        if self.edges.len() + 1 != n {
            return None;
        }
        let start = (0..n).find(|&v| self.lower_covers[v].is_empty())?;
        let mut order = vec![start];
        let mut cur = start;
        while let Some(&next) = self.upper_covers[cur].first() {
            if self.upper_covers[cur].len() != 1 {
                return None;
            }
            order.push(next);
            cur = next;
        }
        (order.len() == n).then_some(order)
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    std::cmp::Ordering::Equal
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassKind {
    LowerSets,
    UpperSets,
    ConvexBodies2D,
}

impl ClassKind {
    pub fn name(self) -> &'static str {
        match self {
            ClassKind::LowerSets => "lower",
            ClassKind::UpperSets => "upper",
            ClassKind::ConvexBodies2D => "convex",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lower" | "lower_sets" | "lowersets" => Ok(ClassKind::LowerSets),
            "upper" | "upper_sets" | "uppersets" => Ok(ClassKind::UpperSets),
            "convex" | "convex_bodies" | "convex2d" => Ok(ClassKind::ConvexBodies2D),
            other => Err(Error::Spec(format!("unknown set class `{other}`"))),
        }
    }
}

/// A set class together with its entropy exponent `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SetClassDescriptor {
    pub kind: ClassKind,
    pub dim: usize,
    pub alpha: f64,
}

impl SetClassDescriptor {
    pub fn new(kind: ClassKind, dim: usize) -> Result<Self> {
        let alpha = match kind {
            ClassKind::LowerSets | ClassKind::UpperSets => dim as f64 - 1.0,
            ClassKind::ConvexBodies2D => {
                if dim != 2 {
                    return Err(Error::Unsupported(format!(
                        "convex bodies are only supported in d = 2 (got d = {dim})"
                    )));
                }
                0.5
            }
        };
        if alpha <= 0.0 {
            return Err(Error::Unsupported(format!(
                "{} in d = {dim} has entropy exponent {alpha}, must be positive",
                kind.name()
            )));
        }
        Ok(Self { kind, dim, alpha })
    }

    pub fn lower(dim: usize) -> Result<Self> {
        Self::new(ClassKind::LowerSets, dim)
    }

    pub fn upper(dim: usize) -> Result<Self> {
        Self::new(ClassKind::UpperSets, dim)
    }

    pub fn convex2d() -> Self {
        Self {
            kind: ClassKind::ConvexBodies2D,
            dim: 2,
            alpha: 0.5,
        }
    }
}

/// Counter-based seed derivation: every `(replicate, purpose)` pair maps to
/// its own child seed, independent of evaluation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedPolicy {
    pub master_seed: u64,
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

impl SeedPolicy {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed }
    }

    pub fn derive_stream(&self, replicate: u64, purpose: &str) -> u64 {
        let h = splitmix(self.master_seed);
        let h = splitmix(h ^ splitmix(replicate.wrapping_mul(GOLDEN)));
        splitmix(h ^ fnv1a(purpose.as_bytes()).rotate_left(17))
    }

    pub fn rng(&self, replicate: u64, purpose: &str) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.derive_stream(replicate, purpose))
    }
}
