//! Exploration graphs and the combinatorics of Eulerian multigraphs:
//! preprocessing, good cycles, bypasses and Kirchhoff current spaces.

mod currents;
mod cycles;
mod checks;
mod explore;

pub use currents::{
    cycle_basis, enumerate_admissible_currents, for_each_admissible_current, CurrentCount,
    CurrentMode, CycleBasis,
};
pub use cycles::{
    bypass, even_bypass, find_good_cycle, loop_erase, simple_cycles, verify_good_cycle, CycleWalk,
    GoodCycle,
};
pub use checks::{bypass_trials, good_cycle_sweep, random_exploration, GoodCycleRecord, TrialReport};
pub use explore::{canonicalize, enumerate_explorations, Exploration, ExplorationGraph, BELL, MAX_ENUM_K};

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Undirected multigraph; edges are identified by their position, loops are
/// `(v, v)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Multigraph {
    pub vertices: Vec<usize>,
    pub edges: Vec<(usize, usize)>,
}

impl Multigraph {
    pub fn new(mut vertices: Vec<usize>, edges: Vec<(usize, usize)>) -> Self {
        vertices.sort_unstable();
        vertices.dedup();
        Multigraph { vertices, edges }
    }

    pub fn point() -> Self {
        Multigraph::new(vec![0], Vec::new())
    }

    pub fn is_point(&self) -> bool {
        self.vertices.len() == 1 && self.edges.is_empty()
    }

    /// Degree with loops counted twice.
    pub fn degree(&self, v: usize) -> usize {
        self.edges
            .iter()
            .map(|&(a, b)| usize::from(a == v) + usize::from(b == v))
            .sum()
    }

    pub fn check_even(&self) -> Result<()> {
        for &v in &self.vertices {
            let d = self.degree(v);
            if d % 2 == 1 {
                return Err(Error::Invariant(format!("vertex {v} has odd degree {d}")));
            }
        }
        Ok(())
    }

    pub fn other_end(&self, e: usize, v: usize) -> usize {
        let (a, b) = self.edges[e];
        if a == v {
            b
        } else {
            a
        }
    }

    /// Incident `(edge, neighbour)` pairs; loops appear once.
    pub fn incident(&self, v: usize) -> Vec<(usize, usize)> {
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, &(a, b))| a == v || b == v)
            .map(|(e, &(a, b))| (e, if a == v { b } else { a }))
            .collect()
    }

    pub fn is_connected(&self) -> bool {
        match self.vertices.first() {
            None => true,
            Some(&s) => self.reachable(s, |_| true).len() == self.vertices.len(),
        }
    }

    fn reachable(&self, s: usize, allow: impl Fn(usize) -> bool) -> Vec<usize> {
        let mut seen = vec![s];
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for (e, w) in self.incident(v) {
                if allow(e) && !seen.contains(&w) {
                    seen.push(w);
                    queue.push_back(w);
                }
            }
        }
        seen
    }

    /// Canonical form under vertex relabeling, by brute force over
    /// permutations (fine for the handful of vertices left after
    /// preprocessing).
    pub fn canonical_form(&self) -> (usize, Vec<(usize, usize)>) {
        let n = self.vertices.len();
        assert!(n <= 9, "canonical form by permutation is limited to 9 vertices");
        let index: BTreeMap<usize, usize> =
            self.vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut best: Option<Vec<(usize, usize)>> = None;
        loop {
            let mut es: Vec<(usize, usize)> = self
                .edges
                .iter()
                .map(|&(a, b)| {
                    let (x, y) = (perm[index[&a]], perm[index[&b]]);
                    (x.min(y), x.max(y))
                })
                .collect();
            es.sort_unstable();
            if best.as_ref().is_none_or(|b| es < *b) {
                best = Some(es);
            }
            if !next_permutation(&mut perm) {
                break;
            }
        }
        (n, best.unwrap_or_default())
    }

    pub fn is_isomorphic(&self, other: &Multigraph) -> bool {
        self.edges.len() == other.edges.len()
            && self.vertices.len() == other.vertices.len()
            && self.canonical_form() == other.canonical_form()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "vertices": self.vertices,
            "edges": self.edges.iter().map(|&(a, b)| [a, b]).collect::<Vec<_>>(),
        })
    }
}

fn next_permutation(p: &mut [usize]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let mut i = p.len() - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = p.len() - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// One preprocessing move.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "snake_case")]
pub enum PreprocessStep {
    RemoveLoop { vertex: usize },
    DeleteIsolated { vertex: usize },
    /// `a - v - b` replaced by `a - b`.
    ShortCircuit { vertex: usize, a: usize, b: usize },
}

/// Moves currently applicable to `g`, in the fixed preference order: loops,
/// then isolated vertices, then degree-2 vertices, each by increasing index.
pub fn applicable_steps(g: &Multigraph) -> Vec<PreprocessStep> {
    let mut out = Vec::new();
    for &(a, b) in &g.edges {
        if a == b {
            out.push(PreprocessStep::RemoveLoop { vertex: a });
        }
    }
    if g.vertices.len() > 1 {
        let isolated: Vec<usize> = g.vertices.iter().copied().filter(|&v| g.degree(v) == 0).collect();
        let keep_one = isolated.len() == g.vertices.len();
        for &v in isolated.iter().skip(usize::from(keep_one)) {
            out.push(PreprocessStep::DeleteIsolated { vertex: v });
        }
    }
    for &v in &g.vertices {
        let inc = g.incident(v);
        if inc.len() == 2 && g.degree(v) == 2 {
            out.push(PreprocessStep::ShortCircuit {
                vertex: v,
                a: inc[0].1,
                b: inc[1].1,
            });
        }
    }
    out
}

/// Applies a step returned by [`applicable_steps`].
pub fn apply_step(g: &mut Multigraph, step: &PreprocessStep) {
    match *step {
        PreprocessStep::RemoveLoop { vertex } => {
            let pos = g
                .edges
                .iter()
                .position(|&(a, b)| a == vertex && b == vertex)
                .expect("loop present");
            g.edges.remove(pos);
        }
        PreprocessStep::DeleteIsolated { vertex } => {
            g.vertices.retain(|&v| v != vertex);
        }
        PreprocessStep::ShortCircuit { vertex, a, b } => {
            let inc = g.incident(vertex);
            let (e1, e2) = (inc[0].0.min(inc[1].0), inc[0].0.max(inc[1].0));
            g.edges.remove(e2);
            g.edges.remove(e1);
            g.edges.push((a, b));
            g.vertices.retain(|&v| v != vertex);
        }
    }
}

/// Preprocesses with a caller-chosen move at every stage; `choose` receives
/// the applicable moves and returns an index into them.
pub fn preprocess_with(
    g: &Multigraph,
    mut choose: impl FnMut(&[PreprocessStep]) -> usize,
) -> Result<(Multigraph, Vec<PreprocessStep>)> {
    g.check_even()?;
    let mut g = g.clone();
    let mut log = Vec::new();
    loop {
        let steps = applicable_steps(&g);
        if steps.is_empty() {
            return Ok((g, log));
        }
        let step = steps[choose(&steps).min(steps.len() - 1)].clone();
        apply_step(&mut g, &step);
        log.push(step);
    }
}

/// Fixed-order preprocessing with the step log.
pub fn preprocess(g: &Multigraph) -> Result<(Multigraph, Vec<PreprocessStep>)> {
    preprocess_with(g, |_| 0)
}

pub fn is_fully_reducible(g: &Multigraph) -> Result<bool> {
    Ok(preprocess(g)?.0.is_point())
}

/// Maximum number of edge-disjoint paths between `s` and `t`, capped at
/// `cap` (unit-capacity augmenting paths; undirected edges carry flow in
/// either direction).
pub fn edge_disjoint_paths(g: &Multigraph, s: usize, t: usize, cap: usize) -> usize {
    // flow[e] in {-1, 0, 1}: +1 means a -> b
    let mut flow = vec![0i8; g.edges.len()];
    let mut total = 0;
    while total < cap {
        let mut prev: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
        let mut queue = VecDeque::from([s]);
        let mut found = false;
        while let Some(v) = queue.pop_front() {
            if v == t {
                found = true;
                break;
            }
            for (e, w) in g.incident(v) {
                let (a, b) = g.edges[e];
                if a == b || w == s || prev.contains_key(&w) {
                    continue;
                }
                let forward = a == v;
                let residual = if forward { flow[e] < 1 } else { flow[e] > -1 };
                if residual {
                    prev.insert(w, (v, e));
                    queue.push_back(w);
                }
            }
        }
        if !found {
            break;
        }
        let mut v = t;
        while v != s {
            let (u, e) = prev[&v];
            if g.edges[e].0 == u {
                flow[e] += 1;
            } else {
                flow[e] -= 1;
            }
            v = u;
        }
        total += 1;
    }
    total
}

pub fn has_four_edge_disjoint_paths(g: &Multigraph, v1: usize, v2: usize) -> Result<bool> {
    if v1 == v2 {
        return Err(Error::Contract("endpoints must differ".into()));
    }
    if !g.vertices.contains(&v1) || !g.vertices.contains(&v2) {
        return Err(Error::Contract(format!("{v1} or {v2} not in graph")));
    }
    Ok(edge_disjoint_paths(g, v1, v2, 4) >= 4)
}
