//! Closed walks, simple cycles, good cycles, loop erasure and the two bypass
//! constructions.

use std::collections::{BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::Multigraph;

/// A walk given by its start vertex and `(edge, forward)` steps, where
/// `forward` traverses `edges[e].0 -> edges[e].1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleWalk {
    pub start: usize,
    pub steps: Vec<(usize, bool)>,
}

fn tail(g: &Multigraph, (e, fwd): (usize, bool)) -> usize {
    if fwd {
        g.edges[e].0
    } else {
        g.edges[e].1
    }
}

fn head(g: &Multigraph, (e, fwd): (usize, bool)) -> usize {
    if fwd {
        g.edges[e].1
    } else {
        g.edges[e].0
    }
}

/// Step that leaves `from` along edge `e`.
fn step_from(g: &Multigraph, e: usize, from: usize) -> (usize, bool) {
    (e, g.edges[e].0 == from)
}

impl CycleWalk {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Vertex sequence `v_0, ..., v_m`.
    pub fn vertices(&self, g: &Multigraph) -> Vec<usize> {
        let mut out = vec![self.start];
        for &s in &self.steps {
            out.push(head(g, s));
        }
        out
    }

    /// Consecutive steps share their walk vertex.
    pub fn is_walk(&self, g: &Multigraph) -> bool {
        let mut v = self.start;
        for &s in &self.steps {
            if s.0 >= g.edges.len() || tail(g, s) != v {
                return false;
            }
            v = head(g, s);
        }
        true
    }

    pub fn is_closed(&self, g: &Multigraph) -> bool {
        self.is_walk(g) && self.vertices(g).last() == Some(&self.start)
    }

    pub fn count(&self, e: usize) -> usize {
        self.steps.iter().filter(|s| s.0 == e).count()
    }

    pub fn edge_set(&self) -> BTreeSet<usize> {
        self.steps.iter().map(|s| s.0).collect()
    }

    /// Closed, non-empty, no repeated edge and no repeated vertex.
    pub fn is_simple_cycle(&self, g: &Multigraph) -> bool {
        if self.steps.is_empty() || !self.is_closed(g) {
            return false;
        }
        let vs = self.vertices(g);
        let inner: BTreeSet<usize> = vs[..vs.len() - 1].iter().copied().collect();
        inner.len() == self.steps.len() && self.edge_set().len() == self.steps.len()
    }

    /// Same closed walk starting at step `p`.
    pub fn rotate(&self, g: &Multigraph, p: usize) -> CycleWalk {
        let mut steps = self.steps[p..].to_vec();
        steps.extend_from_slice(&self.steps[..p]);
        CycleWalk {
            start: tail(g, steps[0]),
            steps,
        }
    }

    fn from_steps(g: &Multigraph, steps: Vec<(usize, bool)>) -> CycleWalk {
        CycleWalk {
            start: tail(g, steps[0]),
            steps,
        }
    }
}

fn reversed(steps: &[(usize, bool)]) -> Vec<(usize, bool)> {
    steps.iter().rev().map(|&(e, f)| (e, !f)).collect()
}

/// All simple cycles, shortest first. Each cycle starts at its lowest
/// vertex; of the two directions the one whose first edge index is smaller
/// than its last is kept.
pub fn simple_cycles(g: &Multigraph) -> Vec<CycleWalk> {
    let mut found = Vec::new();
    for &s in &g.vertices {
        let mut path: Vec<(usize, bool)> = Vec::new();
        let mut on_path = vec![s];
        dfs(g, s, s, &mut path, &mut on_path, &mut found);
    }
    found.sort_by_key(|c: &CycleWalk| c.len());
    found
}

fn dfs(
    g: &Multigraph,
    s: usize,
    v: usize,
    path: &mut Vec<(usize, bool)>,
    on_path: &mut Vec<usize>,
    found: &mut Vec<CycleWalk>,
) {
    for (e, w) in g.incident(v) {
        if path.iter().any(|p| p.0 == e) {
            continue;
        }
        let step = step_from(g, e, v);
        if w == s {
            let keep = path.is_empty() || path[0].0 < e;
            if keep {
                let mut steps = path.clone();
                steps.push(step);
                found.push(CycleWalk { start: s, steps });
            }
        } else if w > s && !on_path.contains(&w) {
            path.push(step);
            on_path.push(w);
            dfs(g, s, w, path, on_path, found);
            path.pop();
            on_path.pop();
        }
    }
}

/// Shortest path from `from` to `to` using only allowed edges.
fn bfs_path(g: &Multigraph, from: usize, to: usize, allow: impl Fn(usize) -> bool) -> Option<Vec<(usize, bool)>> {
    let mut prev: HashMap<usize, (usize, bool)> = HashMap::new();
    let mut queue = VecDeque::from([from]);
    let mut seen = BTreeSet::from([from]);
    while let Some(v) = queue.pop_front() {
        if v == to {
            let mut steps = Vec::new();
            let mut x = to;
            while x != from {
                let s = prev[&x];
                steps.push(s);
                x = tail(g, s);
            }
            steps.reverse();
            return Some(steps);
        }
        for (e, w) in g.incident(v) {
            if allow(e) && seen.insert(w) {
                prev.insert(w, step_from(g, e, v));
                queue.push_back(w);
            }
        }
    }
    None
}

/// A simple cycle with, for every edge `e` on it, a simple cycle meeting it
/// exactly in `e`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GoodCycle {
    pub cycle: CycleWalk,
    pub witnesses: Vec<(usize, CycleWalk)>,
}

/// Witnesses for `c`, or `None` when some edge of `c` has none.
fn witnesses(g: &Multigraph, c: &CycleWalk) -> Option<Vec<(usize, CycleWalk)>> {
    let used = c.edge_set();
    let mut out = Vec::new();
    for &step in &c.steps {
        let (u, v) = (tail(g, step), head(g, step));
        let path = bfs_path(g, v, u, |e| !used.contains(&e))?;
        let mut steps = vec![step];
        steps.extend(path);
        out.push((step.0, CycleWalk { start: u, steps }));
    }
    Some(out)
}

/// First good cycle in order of increasing length; `None` for a point or a
/// graph without one.
pub fn find_good_cycle(g: &Multigraph) -> Option<GoodCycle> {
    if g.edges.is_empty() {
        return None;
    }
    simple_cycles(g).into_iter().find_map(|c| {
        witnesses(g, &c).map(|w| GoodCycle {
            cycle: c,
            witnesses: w,
        })
    })
}

/// Checks every defining property of a good cycle.
pub fn verify_good_cycle(g: &Multigraph, gc: &GoodCycle) -> Result<()> {
    if !gc.cycle.is_simple_cycle(g) {
        return Err(Error::Invariant("good cycle is not a simple cycle".into()));
    }
    let edges = gc.cycle.edge_set();
    let covered: BTreeSet<usize> = gc.witnesses.iter().map(|w| w.0).collect();
    if covered != edges {
        return Err(Error::Invariant("witness missing for some edge".into()));
    }
    for (e, w) in &gc.witnesses {
        if !w.is_simple_cycle(g) {
            return Err(Error::Invariant(format!("witness for edge {e} is not a simple cycle")));
        }
        let meet: BTreeSet<usize> = w.edge_set().intersection(&edges).copied().collect();
        if meet != BTreeSet::from([*e]) {
            return Err(Error::Invariant(format!("witness for edge {e} meets the cycle in {meet:?}")));
        }
    }
    Ok(())
}

/// Chronological loop erasure of a closed walk, anchored on an edge used
/// exactly once; returns a simple cycle through the anchor whose edges are
/// edges of the walk. Without an explicit anchor the first once-used edge is
/// taken.
pub fn loop_erase(g: &Multigraph, walk: &CycleWalk, anchor: Option<usize>) -> Result<CycleWalk> {
    if walk.is_empty() || !walk.is_closed(g) {
        return Err(Error::Contract("loop erasure needs a non-empty closed walk".into()));
    }
    let anchor = match anchor {
        Some(a) if walk.count(a) == 1 => a,
        Some(a) => {
            return Err(Error::Contract(format!(
                "anchor {a} used {} times",
                walk.count(a)
            )))
        }
        None => walk
            .steps
            .iter()
            .map(|s| s.0)
            .find(|&e| walk.count(e) == 1)
            .ok_or_else(|| Error::Degenerate("every edge is traversed more than once".into()))?,
    };
    let p = walk.steps.iter().position(|s| s.0 == anchor).expect("anchor present");
    let w = walk.rotate(g, p);
    let first = w.steps[0];
    let (x, y) = (tail(g, first), head(g, first));
    if x == y {
        return Ok(CycleWalk::from_steps(g, vec![first]));
    }
    // stack of (vertex, step that entered it)
    let mut stack: Vec<(usize, Option<(usize, bool)>)> = vec![(y, None)];
    for &s in &w.steps[1..] {
        let v = head(g, s);
        if let Some(pos) = stack.iter().position(|(u, _)| *u == v) {
            stack.truncate(pos + 1);
        } else {
            stack.push((v, Some(s)));
        }
    }
    let mut steps = vec![first];
    steps.extend(stack.iter().filter_map(|(_, s)| *s));
    let out = CycleWalk::from_steps(g, steps);
    if !out.is_simple_cycle(g) {
        return Err(Error::Degenerate("loop erasure did not close up".into()));
    }
    Ok(out)
}

/// A simple cycle through `e` that avoids `e_prime`, built from `c`
/// (containing both) and `c_prime` (containing `e_prime` but not `e`).
pub fn bypass(g: &Multigraph, c: &CycleWalk, c_prime: &CycleWalk, e: usize, e_prime: usize) -> Result<CycleWalk> {
    if e == e_prime {
        return Err(Error::Contract("e and e' must differ".into()));
    }
    if !c.is_simple_cycle(g) || !c_prime.is_simple_cycle(g) {
        return Err(Error::Contract("bypass needs two simple cycles".into()));
    }
    if c.count(e) != 1 || c.count(e_prime) != 1 {
        return Err(Error::Contract("C must contain e and e'".into()));
    }
    if c_prime.count(e_prime) != 1 || c_prime.count(e) != 0 {
        return Err(Error::Contract("C' must contain e' and not e".into()));
    }
    let ce = c.rotate(g, c.steps.iter().position(|s| s.0 == e).expect("e in C"));
    let p = ce.steps.iter().position(|s| s.0 == e_prime).expect("e' in C");
    let (x, y) = (tail(g, ce.steps[p]), head(g, ce.steps[p]));
    let cp = c_prime.rotate(g, c_prime.steps.iter().position(|s| s.0 == e_prime).expect("e' in C'"));
    let rest = &cp.steps[1..];
    // detour from x to y along C' without e'
    let detour = if tail(g, cp.steps[0]) == x && head(g, cp.steps[0]) == y && x != y {
        reversed(rest)
    } else {
        rest.to_vec()
    };
    let mut steps = ce.steps[..p].to_vec();
    steps.extend(detour);
    steps.extend_from_slice(&ce.steps[p + 1..]);
    let walk = CycleWalk::from_steps(g, steps);
    if !walk.is_closed(g) {
        return Err(Error::Invariant("bypass walk is not closed".into()));
    }
    loop_erase(g, &walk, Some(e))
}

/// Removes every traversal of `e2` from a closed walk that uses `e1` once and
/// `e2` an even number of times. Opposite traversals enclose a closed
/// sub-walk that is cut out; equal traversals are removed by reversing the
/// segment between them.
pub fn even_bypass(g: &Multigraph, walk: &CycleWalk, e1: usize, e2: usize) -> Result<CycleWalk> {
    if e1 == e2 {
        return Err(Error::Contract("e1 and e2 must differ".into()));
    }
    if walk.is_empty() || !walk.is_closed(g) {
        return Err(Error::Contract("even bypass needs a closed walk".into()));
    }
    if walk.count(e1) != 1 {
        return Err(Error::Contract(format!("e1 used {} times", walk.count(e1))));
    }
    if walk.count(e2) % 2 == 1 {
        return Err(Error::Contract(format!("e2 used {} times", walk.count(e2))));
    }
    let mut w = walk.rotate(g, walk.steps.iter().position(|s| s.0 == e1).expect("e1 present"));
    loop {
        let occ: Vec<usize> = w.steps.iter().enumerate().filter(|(_, s)| s.0 == e2).map(|(i, _)| i).collect();
        if occ.is_empty() {
            return Ok(w);
        }
        let (p, q) = (occ[0], occ[1]);
        let loop_edge = g.edges[e2].0 == g.edges[e2].1;
        let mut steps = w.steps[..p].to_vec();
        if loop_edge || w.steps[p].1 != w.steps[q].1 {
            steps.extend_from_slice(&w.steps[q + 1..]);
        } else {
            steps.extend(reversed(&w.steps[p + 1..q]));
            steps.extend_from_slice(&w.steps[q + 1..]);
        }
        w = CycleWalk::from_steps(g, steps);
        if !w.is_closed(g) {
            return Err(Error::Invariant("even bypass broke the walk".into()));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphcore::Exploration;

    fn exp(nu: &[usize]) -> Multigraph {
        Exploration::new(nu.to_vec()).unwrap().graph().multigraph()
    }

    fn walk(g: &Multigraph, start: usize, edges: &[usize]) -> CycleWalk {
        let mut v = start;
        let mut steps = Vec::new();
        for &e in edges {
            let s = step_from(g, e, v);
            v = head(g, s);
            steps.push(s);
        }
        CycleWalk { start, steps }
    }

    #[test]
    fn melon_good_cycle() {
        let g = exp(&[1, 2, 1, 2]);
        let gc = find_good_cycle(&g).unwrap();
        assert_eq!(gc.cycle.len(), 2);
        verify_good_cycle(&g, &gc).unwrap();
        let used = gc.cycle.edge_set();
        for (_, w) in &gc.witnesses {
            assert_eq!(w.len(), 2);
            assert_eq!(w.edge_set().difference(&used).count(), 1);
        }
        assert!(find_good_cycle(&Multigraph::point()).is_none());
    }

    #[test]
    fn cycle_listing_counts() {
        // four parallel edges: C(4,2) two-cycles
        assert_eq!(simple_cycles(&exp(&[1, 2, 1, 2])).len(), 6);
        // doubled triangle: 3 two-cycles and 8 triangles
        let c = simple_cycles(&exp(&[1, 2, 3, 1, 2, 3]));
        assert_eq!(c.iter().filter(|w| w.len() == 2).count(), 3);
        assert_eq!(c.iter().filter(|w| w.len() == 3).count(), 8);
        let g = exp(&[1, 2, 3, 1, 2, 3]);
        assert!(c.iter().all(|w| w.is_simple_cycle(&g)));
    }

    #[test]
    fn loop_erasure_cases() {
        let g = exp(&[1, 2, 3]);
        let tri = walk(&g, 0, &[0, 1, 2]);
        assert_eq!(loop_erase(&g, &tri, Some(0)).unwrap(), tri);
        // figure eight: triangle 0-1-2 and two-cycle 0-3 sharing vertex 0
        let g8 = Multigraph::new(vec![0, 1, 2, 3], vec![(0, 1), (1, 2), (2, 0), (0, 3), (3, 0)]);
        let fig = walk(&g8, 0, &[0, 1, 2, 3, 4]);
        let lobe = loop_erase(&g8, &fig, Some(0)).unwrap();
        assert_eq!(lobe.edge_set(), BTreeSet::from([0, 1, 2]));
        let lobe = loop_erase(&g8, &fig, Some(3)).unwrap();
        assert_eq!(lobe.edge_set(), BTreeSet::from([3, 4]));
        // doubled triangle walked once around each copy
        let d = exp(&[1, 2, 3, 1, 2, 3]);
        let twice = walk(&d, 0, &[0, 1, 2, 3, 4, 5]);
        let out = loop_erase(&d, &twice, Some(0)).unwrap();
        assert_eq!(out.len(), 3);
        assert!(out.edge_set().contains(&0));
        // back and forth over one edge
        let bf = walk(&g8, 0, &[3, 3]);
        assert!(matches!(loop_erase(&g8, &bf, None), Err(Error::Degenerate(_))));
    }

    #[test]
    fn bypass_around_detour() {
        // square A B C D with detour C -> G -> D
        let (a, b, c, d, gg) = (0, 1, 2, 3, 4);
        let g = Multigraph::new(vec![a, b, c, d, gg], vec![(a, b), (b, c), (c, d), (d, a), (c, gg), (gg, d)]);
        let cyc = walk(&g, a, &[0, 1, 2, 3]);
        let det = walk(&g, c, &[2, 5, 4]);
        let out = bypass(&g, &cyc, &det, 0, 2).unwrap();
        assert!(out.is_simple_cycle(&g));
        assert!(out.edge_set().contains(&0) && !out.edge_set().contains(&2));
        assert_eq!(out.edge_set(), BTreeSet::from([0, 1, 3, 4, 5]));
        // parallel edge swap
        let m = exp(&[1, 2, 1, 2]);
        let c1 = walk(&m, 0, &[0, 1]);
        let c2 = walk(&m, 0, &[2, 1]);
        let out = bypass(&m, &c1, &c2, 0, 1).unwrap();
        assert_eq!(out.edge_set(), BTreeSet::from([0, 2]));
        assert!(bypass(&m, &c1, &c1, 0, 1).is_err());
    }

    #[test]
    fn even_bypass_cases() {
        let g8 = Multigraph::new(vec![0, 1, 2, 3], vec![(0, 1), (1, 2), (2, 0), (0, 3), (3, 0)]);
        let tri = walk(&g8, 0, &[0, 1, 2]);
        assert_eq!(even_bypass(&g8, &tri, 0, 3).unwrap(), tri);
        // out and back along edge 3
        let w = walk(&g8, 0, &[0, 1, 2, 3, 3]);
        let out = even_bypass(&g8, &w, 0, 3).unwrap();
        assert_eq!(out.edge_set(), BTreeSet::from([0, 1, 2]));
        // same direction twice: 0->3 via edge 3 twice, returning via edge 4
        let w = walk(&g8, 0, &[0, 1, 2, 3, 4, 3, 4]);
        assert_eq!(w.count(3), 2);
        let out = even_bypass(&g8, &w, 0, 3).unwrap();
        assert!(out.is_closed(&g8));
        assert_eq!(out.count(3), 0);
        assert_eq!(out.count(0), 1);
        assert!(even_bypass(&g8, &walk(&g8, 0, &[0, 1, 2, 3, 4]), 0, 3).is_err());
    }
}
