//! Exhaustive and randomized checks over exploration graphs, shared by the
//! test suites and the command line.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::matrixmodel::stream_rng;

use super::{
    bypass, even_bypass, enumerate_explorations, find_good_cycle, loop_erase, preprocess,
    simple_cycles, verify_good_cycle, CycleWalk, Exploration, Multigraph,
};

const TRIAL_STREAM: u64 = 3;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GoodCycleRecord {
    pub id: String,
    pub k: usize,
    pub l: usize,
    pub reduced_vertices: usize,
    pub reduced_edges: usize,
    pub cycle_len: Option<usize>,
    /// `None` when the reduced graph is a point.
    pub verified: Option<bool>,
}

impl GoodCycleRecord {
    pub fn is_violation(&self) -> bool {
        self.verified == Some(false)
    }
}

/// Preprocesses every exploration graph on `k` edges and searches the
/// reduced graph for a good cycle.
pub fn good_cycle_sweep(k: usize) -> Result<Vec<GoodCycleRecord>> {
    enumerate_explorations(k)?
        .into_iter()
        .map(|e| {
            let (reduced, _) = preprocess(&e.graph().multigraph())?;
            let (cycle_len, verified) = if reduced.is_point() {
                (None, None)
            } else {
                match find_good_cycle(&reduced) {
                    Some(gc) => (
                        Some(gc.cycle.len()),
                        Some(verify_good_cycle(&reduced, &gc).is_ok()),
                    ),
                    None => (None, Some(false)),
                }
            };
            Ok(GoodCycleRecord {
                id: e.id(),
                k,
                l: e.l(),
                reduced_vertices: reduced.vertices.len(),
                reduced_edges: reduced.edges.len(),
                cycle_len,
                verified,
            })
        })
        .collect()
}

/// A random restricted-growth sequence; not uniform over set partitions.
pub fn random_exploration(rng: &mut impl Rng, k: usize) -> Exploration {
    let mut nu = vec![1usize];
    let mut max = 1;
    while nu.len() < k {
        let v = rng.random_range(1..=max + 1);
        max = max.max(v);
        nu.push(v);
    }
    Exploration { nu }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct TrialReport {
    pub trials: usize,
    pub loop_erase: usize,
    pub even_bypass: usize,
    pub bypass: usize,
    pub failures: Vec<String>,
}

impl TrialReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.loop_erase == self.trials && self.even_bypass == self.trials && self.bypass == self.trials
    }
}

/// `c` rotated to start at `v`, if it passes through `v`.
fn closed_at(g: &Multigraph, c: &CycleWalk, v: usize) -> Option<Vec<(usize, bool)>> {
    let i = c.vertices(g)[..c.len()].iter().position(|&u| u == v)?;
    Some(c.rotate(g, i).steps)
}

fn reversed(steps: &[(usize, bool)]) -> Vec<(usize, bool)> {
    steps.iter().rev().map(|&(e, f)| (e, !f)).collect()
}

/// A closed walk through `c` that keeps `e1` used once: detours are spliced
/// in at random vertices (back-and-forth steps and whole cycles, possibly
/// repeated or reversed).
fn random_walk(g: &Multigraph, cycles: &[CycleWalk], c: &CycleWalk, e1: usize, rng: &mut impl Rng) -> CycleWalk {
    let mut w = c.clone();
    for _ in 0..rng.random_range(1..=4) {
        let p = rng.random_range(0..=w.len());
        let v = w.vertices(g)[p];
        let detour: Vec<(usize, bool)> = if rng.random_bool(0.5) {
            let inc: Vec<(usize, usize)> = g.incident(v).into_iter().filter(|&(e, _)| e != e1).collect();
            if inc.is_empty() {
                continue;
            }
            let (e, _) = inc[rng.random_range(0..inc.len())];
            let out = (e, g.edges[e].0 == v);
            vec![out, (e, !out.1)]
        } else {
            let through: Vec<Vec<(usize, bool)>> = cycles
                .iter()
                .filter(|cy| cy.count(e1) == 0)
                .filter_map(|cy| closed_at(g, cy, v))
                .collect();
            if through.is_empty() {
                continue;
            }
            let mut d = through[rng.random_range(0..through.len())].clone();
            if rng.random_bool(0.5) {
                d = reversed(&d);
            }
            let times = rng.random_range(1..=2);
            d.repeat(times)
        };
        let mut steps = w.steps[..p].to_vec();
        steps.extend(detour);
        steps.extend_from_slice(&w.steps[p..]);
        w = CycleWalk { start: w.start, steps };
    }
    w
}

fn subset(a: &CycleWalk, b: &BTreeSet<usize>) -> bool {
    a.edge_set().is_subset(b)
}

/// Randomized postcondition checks of loop erasure, the even bypass and the
/// bypass on small exploration multigraphs. Every trial exercises all three
/// operations; graphs without a usable configuration are redrawn.
pub fn bypass_trials(trials: usize, seed: u64) -> TrialReport {
    let mut rng = stream_rng(seed, TRIAL_STREAM);
    let mut rep = TrialReport {
        trials,
        ..Default::default()
    };
    let mut done = 0;
    while done < trials {
        let k = rng.random_range(3..=9);
        let g = random_exploration(&mut rng, k).graph().multigraph();
        let cycles = simple_cycles(&g);
        // bypass configurations: (C, e, e', C')
        let mut configs = Vec::new();
        for (a, c) in cycles.iter().enumerate() {
            for &(e, _) in &c.steps {
                for &(ep, _) in &c.steps {
                    if e == ep {
                        continue;
                    }
                    for (b, cp) in cycles.iter().enumerate() {
                        if a != b && cp.count(ep) == 1 && cp.count(e) == 0 {
                            configs.push((a, e, ep, b));
                        }
                    }
                }
            }
        }
        if configs.is_empty() {
            continue;
        }
        let c = &cycles[rng.random_range(0..cycles.len())];
        let e1 = c.steps[rng.random_range(0..c.len())].0;
        let walk = random_walk(&g, &cycles, c, e1, &mut rng);
        let used = walk.edge_set();
        let mut evens: Vec<usize> = used.iter().copied().filter(|&x| x != e1 && walk.count(x) % 2 == 0).collect();
        if evens.is_empty() {
            // only the trivial case of an unused edge remains
            evens = (0..g.edges.len()).filter(|&x| walk.count(x) == 0).collect();
        }
        if evens.is_empty() {
            continue;
        }
        let e2 = evens[rng.random_range(0..evens.len())];
        done += 1;
        let tag = format!("trial {done} graph {:?}", g.edges);

        let (a, e, ep, b) = configs[rng.random_range(0..configs.len())];
        match bypass(&g, &cycles[a], &cycles[b], e, ep) {
            Ok(out) => {
                let allowed: BTreeSet<usize> = cycles[a].edge_set().union(&cycles[b].edge_set()).copied().collect();
                if out.is_simple_cycle(&g) && out.count(e) == 1 && out.count(ep) == 0 && subset(&out, &allowed) {
                    rep.bypass += 1;
                } else {
                    rep.failures.push(format!("{tag}: bypass postcondition"));
                }
            }
            Err(err) => rep.failures.push(format!("{tag}: bypass {err}")),
        }

        match loop_erase(&g, &walk, Some(e1)) {
            Ok(out) if out.is_simple_cycle(&g) && out.count(e1) == 1 && subset(&out, &used) => rep.loop_erase += 1,
            Ok(_) => rep.failures.push(format!("{tag}: loop erasure postcondition")),
            Err(err) => rep.failures.push(format!("{tag}: loop erasure {err}")),
        }

        match even_bypass(&g, &walk, e1, e2) {
            Ok(out) if out.is_closed(&g) && out.count(e1) == 1 && out.count(e2) == 0 && subset(&out, &used) => {
                rep.even_bypass += 1
            }
            Ok(_) => rep.failures.push(format!("{tag}: even bypass postcondition")),
            Err(err) => rep.failures.push(format!("{tag}: even bypass {err}")),
        }
    }
    rep
}
