//! Kirchhoff current spaces of exploration graphs.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::ExplorationGraph;

pub const BRUTE_CAP: f64 = 1e7;
pub const BASIS_CAP: f64 = 1e8;

/// Fundamental cycle basis of a spanning tree. `vectors[c]` is the signed
/// edge-incidence vector of the cycle closed by chord `chords[c]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleBasis {
    pub dim: usize,
    pub chords: Vec<usize>,
    pub vectors: Vec<Vec<i64>>,
}

impl CycleBasis {
    /// Whether `v` conserves current at every vertex.
    pub fn is_circulation(g: &ExplorationGraph, v: &[i64]) -> bool {
        let mut net = vec![0i64; g.l];
        for (r, &(t, h)) in g.edges.iter().enumerate() {
            net[t] -= v[r];
            net[h] += v[r];
        }
        net.iter().all(|&x| x == 0)
    }
}

pub fn cycle_basis(g: &ExplorationGraph) -> Result<CycleBasis> {
    if g.l == 0 || !g.is_connected() {
        return Err(Error::Domain("cycle basis needs a connected graph".into()));
    }
    let k = g.k();
    // parent[v] = (tree edge, parent vertex)
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; g.l];
    let mut depth = vec![usize::MAX; g.l];
    let mut tree = vec![false; k];
    depth[0] = 0;
    let mut queue = VecDeque::from([0]);
    while let Some(v) = queue.pop_front() {
        for (r, &(t, h)) in g.edges.iter().enumerate() {
            let w = if t == v {
                h
            } else if h == v {
                t
            } else {
                continue;
            };
            if depth[w] == usize::MAX {
                depth[w] = depth[v] + 1;
                parent[w] = Some((r, v));
                tree[r] = true;
                queue.push_back(w);
            }
        }
    }
    let chords: Vec<usize> = (0..k).filter(|&r| !tree[r]).collect();
    let vectors = chords
        .iter()
        .map(|&c| {
            let mut vec = vec![0i64; k];
            vec[c] = 1;
            // close the chord u -> v by the tree path v -> u
            let (u, v) = g.edges[c];
            let (mut a, mut b) = (v, u);
            let mut down = Vec::new();
            while a != b {
                if depth[a] >= depth[b] {
                    let (r, p) = parent[a].expect("non-root");
                    vec[r] += if g.edges[r] == (a, p) { 1 } else { -1 };
                    a = p;
                } else {
                    let (r, p) = parent[b].expect("non-root");
                    down.push((r, p, b));
                    b = p;
                }
            }
            for (r, p, child) in down {
                vec[r] += if g.edges[r] == (p, child) { 1 } else { -1 };
            }
            vec
        })
        .collect();
    Ok(CycleBasis {
        dim: chords.len(),
        chords,
        vectors,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurrentMode {
    BruteForce,
    Basis,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CurrentCount {
    pub count: u64,
    pub currents: Option<Vec<Vec<u64>>>,
}

fn kirchhoff(g: &ExplorationGraph, j: &[u64], net: &mut [i64]) -> bool {
    net.iter_mut().for_each(|x| *x = 0);
    for (r, &(t, h)) in g.edges.iter().enumerate() {
        net[t] -= j[r] as i64;
        net[h] += j[r] as i64;
    }
    net.iter().all(|&x| x == 0)
}

/// Advances `x` through `{1..n}^len`; false after the last tuple.
fn odometer(x: &mut [u64], n: u64) -> bool {
    for v in x.iter_mut() {
        if *v < n {
            *v += 1;
            return true;
        }
        *v = 1;
    }
    false
}

/// Calls `f` on every admissible `j in {1..N}^k` and returns the count.
pub fn for_each_admissible_current(
    g: &ExplorationGraph,
    n: u64,
    mode: CurrentMode,
    mut f: impl FnMut(&[u64]),
) -> Result<u64> {
    let k = g.k();
    if n == 0 {
        return Ok(0);
    }
    let mut count = 0;
    match mode {
        CurrentMode::BruteForce => {
            if (n as f64).powi(k as i32) > BRUTE_CAP {
                return Err(Error::Size(format!("N^k = {n}^{k} exceeds {BRUTE_CAP:e}")));
            }
            let mut j = vec![1u64; k];
            let mut net = vec![0i64; g.l];
            loop {
                if kirchhoff(g, &j, &mut net) {
                    count += 1;
                    f(&j);
                }
                if !odometer(&mut j, n) {
                    break;
                }
            }
        }
        CurrentMode::Basis => {
            let basis = cycle_basis(g)?;
            let d = basis.dim;
            if (n as f64).powi(d as i32) * k as f64 > BASIS_CAP {
                return Err(Error::Size(format!("N^d k = {n}^{d} * {k} exceeds {BASIS_CAP:e}")));
            }
            let tree: Vec<usize> = (0..k).filter(|r| !basis.chords.contains(r)).collect();
            let mut x = vec![1u64; d];
            let mut j = vec![0u64; k];
            'outer: loop {
                for (c, &r) in basis.chords.iter().enumerate() {
                    j[r] = x[c];
                }
                let mut ok = true;
                for &r in &tree {
                    let v: i64 = basis
                        .vectors
                        .iter()
                        .zip(&x)
                        .map(|(b, &xc)| b[r] * xc as i64)
                        .sum();
                    if v < 1 || v > n as i64 {
                        ok = false;
                        break;
                    }
                    j[r] = v as u64;
                }
                if ok {
                    count += 1;
                    f(&j);
                }
                if !odometer(&mut x, n) {
                    break 'outer;
                }
            }
        }
    }
    Ok(count)
}

pub fn enumerate_admissible_currents(
    g: &ExplorationGraph,
    n: u64,
    mode: CurrentMode,
    collect: bool,
) -> Result<CurrentCount> {
    let mut list = Vec::new();
    let count = for_each_admissible_current(g, n, mode, |j| {
        if collect {
            list.push(j.to_vec());
        }
    })?;
    Ok(CurrentCount {
        count,
        currents: collect.then_some(list),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphcore::{enumerate_explorations, Exploration};

    fn g(nu: &[usize]) -> ExplorationGraph {
        Exploration::new(nu.to_vec()).unwrap().graph()
    }

    #[test]
    fn dimensions() {
        assert_eq!(cycle_basis(&g(&[1, 2, 1, 2])).unwrap().dim, 3);
        assert_eq!(cycle_basis(&g(&[1, 1])).unwrap().dim, 2);
        assert_eq!(cycle_basis(&g(&[1, 2])).unwrap().dim, 1);
        for k in 1..=6 {
            for e in enumerate_explorations(k).unwrap() {
                let gr = e.graph();
                let b = cycle_basis(&gr).unwrap();
                assert_eq!(b.dim, k - e.l() + 1);
                for v in &b.vectors {
                    assert!(CycleBasis::is_circulation(&gr, v));
                    assert!(v.iter().all(|x| x.abs() <= 1));
                }
            }
        }
    }

    #[test]
    fn melon_counts() {
        let m = g(&[1, 2, 1, 2]);
        for (n, want) in [(2u64, 6u64), (5, 85), (10, 670)] {
            for mode in [CurrentMode::BruteForce, CurrentMode::Basis] {
                let c = enumerate_admissible_currents(&m, n, mode, false).unwrap();
                assert_eq!(c.count, want);
                assert_eq!(want, (2 * n * n * n + n) / 3);
            }
        }
    }

    #[test]
    fn two_cycle_counts() {
        let c = enumerate_admissible_currents(&g(&[1, 2]), 7, CurrentMode::Basis, true).unwrap();
        assert_eq!(c.count, 7);
        assert!(c.currents.unwrap().iter().all(|j| j[0] == j[1]));
    }

    #[test]
    fn modes_agree_exactly() {
        for k in 1..=5 {
            for e in enumerate_explorations(k).unwrap() {
                let gr = e.graph();
                let mut a = enumerate_admissible_currents(&gr, 4, CurrentMode::BruteForce, true).unwrap().currents.unwrap();
                let mut b = enumerate_admissible_currents(&gr, 4, CurrentMode::Basis, true).unwrap().currents.unwrap();
                a.sort();
                b.sort();
                assert_eq!(a, b, "{}", e.id());
            }
        }
    }

    #[test]
    fn size_caps() {
        let m = g(&[1, 2, 1, 2, 1, 2]);
        assert!(matches!(
            enumerate_admissible_currents(&m, 20, CurrentMode::BruteForce, false),
            Err(Error::Size(_))
        ));
    }
}
