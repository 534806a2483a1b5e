//! Integer max-flow / min-cut (Dinic) used by every closure computation.

use std::collections::VecDeque;
use std::fmt::Write as _;

use crate::error::{Error, Result};

pub type Cap = i64;

/// Capacity used for arcs that must never be cut.
pub const INFINITE: Cap = Cap::MAX / 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Capacity {
    Finite(Cap),
    Infinite,
}

#[derive(Debug, Clone)]
struct Arc {
    to: usize,
    rev: usize,
    cap: Cap,
    original: Cap,
}

/// Accumulates arcs; `build` validates the network.
#[derive(Debug, Clone)]
pub struct NetworkBuilder {
    n: usize,
    source: usize,
    sink: usize,
    arcs: Vec<(usize, usize, Capacity)>,
}

impl NetworkBuilder {
    pub fn new(n: usize, source: usize, sink: usize) -> Self {
        assert!(source < n && sink < n && source != sink);
        Self {
            n,
            source,
            sink,
            arcs: Vec::new(),
        }
    }

    pub fn add_arc(&mut self, from: usize, to: usize, cap: Capacity) {
        assert!(from < self.n && to < self.n);
        if let Capacity::Finite(c) = cap {
            assert!(c >= 0, "negative capacity {c}");
        }
        self.arcs.push((from, to, cap));
    }

    /// Rejects networks whose maximum flow would be unbounded or overflow.
    pub fn build(self) -> Result<FlowNetwork> {
        let mut finite_total: Cap = 0;
        let mut inf_adj = vec![Vec::new(); self.n];
        for &(u, v, c) in &self.arcs {
            match c {
                Capacity::Finite(c) => {
                    finite_total = finite_total
                        .checked_add(c)
                        .filter(|&t| t < INFINITE)
                        .ok_or(Error::CapacityOverflow)?;
                }
                Capacity::Infinite => inf_adj[u].push(v),
            }
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![self.source];
        seen[self.source] = true;
        while let Some(u) = stack.pop() {
            if u == self.sink {
                return Err(Error::UnboundedFlow);
            }
            for &v in &inf_adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }

        let mut graph: Vec<Vec<Arc>> = vec![Vec::new(); self.n];
        for &(u, v, c) in &self.arcs {
            let cap = match c {
                Capacity::Finite(c) => c,
                Capacity::Infinite => INFINITE,
            };
            let ru = graph[v].len() + usize::from(u == v);
            let rv = graph[u].len();
            graph[u].push(Arc {
                to: v,
                rev: ru,
                cap,
                original: cap,
            });
            graph[v].push(Arc {
                to: u,
                rev: rv,
                cap: 0,
                original: 0,
            });
        }
        Ok(FlowNetwork {
            source: self.source,
            sink: self.sink,
            graph,
            arcs: self.arcs,
        })
    }
}

#[derive(Debug, Clone)]
pub struct FlowNetwork {
    source: usize,
    sink: usize,
    graph: Vec<Vec<Arc>>,
    arcs: Vec<(usize, usize, Capacity)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaxFlow {
    pub value: Cap,
    /// Nodes reachable from the source in the final residual graph: the
    /// source side of the unique source-minimal minimum cut.
    pub source_side: Vec<bool>,
    pub cut_capacity: Cap,
}

impl FlowNetwork {
    pub fn node_count(&self) -> usize {
        self.graph.len()
    }

    /// DIMACS max-flow text format (1-based node ids). Infinite arcs are
    /// written with the engine's sentinel capacity.
    pub fn to_dimacs(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "c setrate closure network");
        let _ = writeln!(s, "p max {} {}", self.graph.len(), self.arcs.len());
        let _ = writeln!(s, "n {} s", self.source + 1);
        let _ = writeln!(s, "n {} t", self.sink + 1);
        for &(u, v, c) in &self.arcs {
            let cap = match c {
                Capacity::Finite(c) => c,
                Capacity::Infinite => INFINITE,
            };
            let _ = writeln!(s, "a {} {} {}", u + 1, v + 1, cap);
        }
        s
    }

    pub fn max_flow(mut self) -> MaxFlow {
        let n = self.graph.len();
        let (s, t) = (self.source, self.sink);
        let mut level = vec![-1i32; n];
        let mut iter = vec![0usize; n];
        let mut value: Cap = 0;
        let mut queue = VecDeque::with_capacity(n);
        loop {
            level.fill(-1);
            level[s] = 0;
            queue.clear();
            queue.push_back(s);
            while let Some(u) = queue.pop_front() {
                for a in &self.graph[u] {
                    if a.cap > 0 && level[a.to] < 0 {
                        level[a.to] = level[u] + 1;
                        queue.push_back(a.to);
                    }
                }
            }
            if level[t] < 0 {
                break;
            }
            iter.fill(0);
            loop {
                let f = self.augment(s, t, INFINITE, &level, &mut iter);
                if f == 0 {
                    break;
                }
                value += f;
            }
        }

        let mut source_side = vec![false; n];
        source_side[s] = true;
        queue.clear();
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            for a in &self.graph[u] {
                if a.cap > 0 && !source_side[a.to] {
                    source_side[a.to] = true;
                    queue.push_back(a.to);
                }
            }
        }
        let mut cut_capacity: Cap = 0;
        for (u, arcs) in self.graph.iter().enumerate() {
            if source_side[u] {
                for a in arcs {
                    if !source_side[a.to] {
                        cut_capacity = cut_capacity.saturating_add(a.original);
                    }
                }
            }
        }
        debug_assert_eq!(value, cut_capacity);
        MaxFlow {
            value,
            source_side,
            cut_capacity,
        }
    }

    // iterative blocking-flow DFS
    fn augment(&mut self, s: usize, t: usize, limit: Cap, level: &[i32], iter: &mut [usize]) -> Cap {
        let mut path: Vec<(usize, usize)> = Vec::new();
        let mut u = s;
        loop {
            if u == t {
                let mut f = limit;
                for &(v, i) in &path {
                    f = f.min(self.graph[v][i].cap);
                }
                for &(v, i) in &path {
                    let Arc { to, rev, .. } = self.graph[v][i];
                    self.graph[v][i].cap -= f;
                    self.graph[to][rev].cap += f;
                }
                return f;
            }
            let mut advanced = false;
            while iter[u] < self.graph[u].len() {
                let a = &self.graph[u][iter[u]];
                if a.cap > 0 && level[a.to] == level[u] + 1 {
                    path.push((u, iter[u]));
                    u = a.to;
                    advanced = true;
                    break;
                }
                iter[u] += 1;
            }
            if !advanced {
                // dead end: retreat and skip the arc that led here
                match path.pop() {
                    Some((v, _)) => {
                        iter[v] += 1;
                        u = v;
                    }
                    None => return 0,
                }
            }
        }
    }
}
