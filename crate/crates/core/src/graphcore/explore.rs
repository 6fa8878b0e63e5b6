//! Explorations: canonical index patterns `nu_1..nu_k` and the directed
//! multigraphs they trace.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::Multigraph;

pub const MAX_ENUM_K: usize = 8;

/// A restricted-growth sequence over `1..=l` with `nu_1 = 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Exploration {
    pub nu: Vec<usize>,
}

impl Exploration {
    /// Checks the restricted-growth condition.
    pub fn new(nu: Vec<usize>) -> Result<Self> {
        if nu.is_empty() {
            return Err(Error::Domain("empty exploration".into()));
        }
        let mut max = 0;
        for &v in &nu {
            if v == 0 || v > max + 1 {
                return Err(Error::Invariant(format!("{nu:?} is not a canonical exploration")));
            }
            max = max.max(v);
        }
        Ok(Exploration { nu })
    }

    pub fn k(&self) -> usize {
        self.nu.len()
    }

    pub fn l(&self) -> usize {
        self.nu.iter().copied().max().unwrap_or(0)
    }

    /// `((nu_1, nu_2), ..., (nu_k, nu_1))`, 1-based.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let k = self.k();
        (0..k).map(|r| (self.nu[r], self.nu[(r + 1) % k])).collect()
    }

    /// Compact identifier such as `1-2-1-2`.
    pub fn id(&self) -> String {
        self.nu
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join("-")
    }

    pub fn graph(&self) -> ExplorationGraph {
        ExplorationGraph {
            l: self.l(),
            edges: self.edges().into_iter().map(|(a, b)| (a - 1, b - 1)).collect(),
            nu: self.nu.clone(),
        }
    }
}

/// Bell numbers `B_0..B_8`.
pub const BELL: [u64; 9] = [1, 1, 2, 5, 15, 52, 203, 877, 4140];

/// All explorations on `k` edges in lexicographic order of `nu`.
pub fn enumerate_explorations(k: usize) -> Result<Vec<Exploration>> {
    if k == 0 || k > MAX_ENUM_K {
        return Err(Error::Size(format!("k must be in 1..={MAX_ENUM_K}, got {k}")));
    }
    let mut out = Vec::with_capacity(BELL[k] as usize);
    let mut nu = vec![1usize; k];
    fn rec(pos: usize, max: usize, nu: &mut Vec<usize>, out: &mut Vec<Exploration>) {
        if pos == nu.len() {
            out.push(Exploration { nu: nu.clone() });
            return;
        }
        for v in 1..=max + 1 {
            nu[pos] = v;
            rec(pos + 1, max.max(v), nu, out);
        }
    }
    rec(1, 1, &mut nu, &mut out);
    Ok(out)
}

/// First-occurrence relabeling of an index list.
pub fn canonicalize<T: Eq + std::hash::Hash + Copy>(idx: &[T]) -> Result<Exploration> {
    if idx.is_empty() {
        return Err(Error::Domain("empty index list".into()));
    }
    let mut labels = HashMap::new();
    let nu = idx
        .iter()
        .map(|i| {
            let next = labels.len() + 1;
            *labels.entry(*i).or_insert(next)
        })
        .collect();
    Ok(Exploration { nu })
}

/// Directed multigraph of an exploration; vertices `0..l`, edge `r` runs
/// from `nu_r - 1` to `nu_{r+1} - 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplorationGraph {
    pub l: usize,
    pub edges: Vec<(usize, usize)>,
    pub nu: Vec<usize>,
}

impl ExplorationGraph {
    pub fn k(&self) -> usize {
        self.edges.len()
    }

    pub fn in_degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|e| e.1 == v).count()
    }

    pub fn out_degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|e| e.0 == v).count()
    }

    /// Whether the edge list, read in order, is a closed walk.
    pub fn is_eulerian_circuit(&self) -> bool {
        let k = self.k();
        k > 0 && (0..k).all(|r| self.edges[r].1 == self.edges[(r + 1) % k].0)
    }

    pub fn is_connected(&self) -> bool {
        self.multigraph().is_connected()
    }

    pub fn multigraph(&self) -> Multigraph {
        Multigraph::new((0..self.l).collect(), self.edges.clone())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "vertices": self.l,
            "edges": self.edges.iter().map(|&(t, h)| serde_json::json!({"tail": t + 1, "head": h + 1})).collect::<Vec<_>>(),
            "nu": self.nu,
        })
    }
}
