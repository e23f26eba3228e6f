//! Reduced-graph enumeration.
//!
//! An m-dimensional reduced graph is obtained from the base network by
//! deleting a candidate faulty set F (any size up to the fault budget,
//! since agents know the budget but not the realized count) together with
//! all its incident links, then deleting up to m·f further incoming links
//! at each surviving node. Reduced graphs are labeled objects; two are the
//! same exactly when they share (F, effective edge set).
//!
//! The total count is exponential: Σ_F Π_i Σ_k C(deg_i, k). It is computed
//! exactly up front so enumeration can refuse to start when it would exceed
//! the caller's cap.

use super::nodeset::{NodeSet, MAX_NODES};
use super::Digraph;
use crate::error::{Error, Result};

/// Default enumeration cap. Anything above this takes long enough that
/// sampled refutation is the better tool.
pub const DEFAULT_ENUMERATION_CAP: u64 = 10_000_000;

/// A labeled reduced graph: the removed faulty set plus the per-node
/// effective incoming sets over the surviving nodes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ReducedGraph {
    n: usize,
    faulty: NodeSet,
    incoming: Vec<NodeSet>,
}

impl ReducedGraph {
    /// The reduced graph with nothing removed; the only one when f = 0.
    pub fn whole(g: &Digraph) -> Result<ReducedGraph> {
        if g.n() > MAX_NODES {
            return Err(Error::GraphTooLarge {
                n: g.n(),
                max: MAX_NODES,
            });
        }
        Ok(ReducedGraph {
            n: g.n(),
            faulty: NodeSet::EMPTY,
            incoming: (0..g.n())
                .map(|i| NodeSet::from_iter(g.incoming(i).iter().copied()))
                .collect(),
        })
    }

    pub(crate) fn from_parts(n: usize, faulty: NodeSet, incoming: Vec<NodeSet>) -> ReducedGraph {
        ReducedGraph {
            n,
            faulty,
            incoming,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn faulty(&self) -> NodeSet {
        self.faulty
    }

    /// Surviving (non-faulty) nodes.
    pub fn members(&self) -> NodeSet {
        NodeSet::full(self.n).difference(self.faulty)
    }

    /// Effective incoming neighbors of `i`; empty for faulty `i`.
    pub fn incoming(&self, i: usize) -> NodeSet {
        self.incoming[i]
    }

    pub(crate) fn incoming_masks(&self) -> &[NodeSet] {
        &self.incoming
    }

    /// Effective edges as (from, to) pairs, ascending.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut edges = Vec::new();
        for to in self.members().iter() {
            for from in self.incoming[to].iter() {
                edges.push((from, to));
            }
        }
        edges.sort_unstable();
        edges
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Removal choices at one node: Σ_k C(deg, k) for k = 0..=budget.
fn per_node_choices(deg: usize, budget: usize) -> u128 {
    (0..=budget.min(deg)).map(|k| binomial(deg, k)).sum()
}

/// Exact number of distinct reduced graphs for fault budget `f` and
/// dimension `m`. `None` when the running product overflows u128 (which is
/// far beyond any usable cap anyway).
pub fn count_reduced_graphs(g: &Digraph, f: usize, m: usize) -> Option<u128> {
    let n = g.n();
    let budget = m.checked_mul(f)?;
    let mut total: u128 = 0;
    for size in 0..=f.min(n) {
        let mut combo = FaultSets::of_size(n, size);
        while let Some(faulty) = combo.next() {
            let members = NodeSet::full(n).difference(faulty);
            let mut product: u128 = 1;
            for i in members.iter() {
                let deg = g
                    .incoming(i)
                    .iter()
                    .filter(|j| members.contains(**j))
                    .count();
                product = product.checked_mul(per_node_choices(deg, budget))?;
            }
            total = total.checked_add(product)?;
        }
    }
    Some(total)
}

/// Streaming enumerator over all distinct reduced graphs, in a fixed
/// canonical order: faulty sets by size then lexicographically, removal
/// subsets per node by size then lexicographically.
pub struct ReducedGraphIter {
    n: usize,
    incoming_masks: Vec<NodeSet>,
    budget: usize,
    fault_sets: AllFaultSets,
    current: Option<PerFaultState>,
}

struct PerFaultState {
    faulty: NodeSet,
    members: Vec<usize>,
    /// Per member node, every admissible kept incoming set, canonical order.
    kept_options: Vec<Vec<NodeSet>>,
    odometer: Vec<usize>,
    exhausted: bool,
}

impl ReducedGraphIter {
    pub fn new(g: &Digraph, f: usize, m: usize, cap: u64) -> Result<ReducedGraphIter> {
        if g.n() > MAX_NODES {
            return Err(Error::GraphTooLarge {
                n: g.n(),
                max: MAX_NODES,
            });
        }
        if m < 1 {
            return Err(Error::InvalidConfig("dimension m must be >= 1".into()));
        }
        match count_reduced_graphs(g, f, m) {
            Some(count) if count <= cap as u128 => {}
            Some(count) => {
                return Err(Error::EnumerationCap {
                    count: count.to_string(),
                    cap: cap as u128,
                })
            }
            None => {
                return Err(Error::EnumerationCap {
                    count: format!("more than {}", u128::MAX),
                    cap: cap as u128,
                })
            }
        }
        let incoming_masks = (0..g.n())
            .map(|i| NodeSet::from_iter(g.incoming(i).iter().copied()))
            .collect();
        Ok(ReducedGraphIter {
            n: g.n(),
            incoming_masks,
            budget: m * f,
            fault_sets: AllFaultSets::new(g.n(), f),
            current: None,
        })
    }

    fn build_state(&self, faulty: NodeSet) -> PerFaultState {
        let members_mask = NodeSet::full(self.n).difference(faulty);
        let members: Vec<usize> = members_mask.iter().collect();
        let kept_options = members
            .iter()
            .map(|&i| {
                let base = self.incoming_masks[i].intersection(members_mask);
                removal_survivors(base, self.budget)
            })
            .collect();
        PerFaultState {
            faulty,
            odometer: vec![0; members.len()],
            members,
            kept_options,
            exhausted: false,
        }
    }
}

/// All subsets of `base` obtained by deleting at most `budget` elements,
/// ordered by (deletion count, lexicographic combination).
fn removal_survivors(base: NodeSet, budget: usize) -> Vec<NodeSet> {
    let elements: Vec<usize> = base.iter().collect();
    let deg = elements.len();
    let mut out = Vec::new();
    for k in 0..=budget.min(deg) {
        let mut combo = FaultSets::of_size(deg, k);
        while let Some(removal_positions) = combo.next() {
            let mut kept = base;
            for pos in removal_positions.iter() {
                kept.remove(elements[pos]);
            }
            out.push(kept);
        }
    }
    out
}

impl Iterator for ReducedGraphIter {
    type Item = ReducedGraph;

    fn next(&mut self) -> Option<ReducedGraph> {
        loop {
            if self.current.is_none() {
                let faulty = self.fault_sets.next()?;
                self.current = Some(self.build_state(faulty));
            }
            let state = self.current.as_mut().unwrap();
            if state.exhausted {
                self.current = None;
                continue;
            }

            let mut incoming = vec![NodeSet::EMPTY; self.n];
            for (slot, &i) in state.members.iter().enumerate() {
                incoming[i] = state.kept_options[slot][state.odometer[slot]];
            }
            let item = ReducedGraph::from_parts(self.n, state.faulty, incoming);

            // advance odometer, rightmost slot fastest
            let mut pos = state.members.len();
            loop {
                if pos == 0 {
                    state.exhausted = true;
                    break;
                }
                pos -= 1;
                state.odometer[pos] += 1;
                if state.odometer[pos] < state.kept_options[pos].len() {
                    break;
                }
                state.odometer[pos] = 0;
            }
            // a graph with zero members has one (empty) configuration
            if state.members.is_empty() {
                state.exhausted = true;
            }
            return Some(item);
        }
    }
}

/// Candidate faulty sets: sizes 0..=f, lexicographic within a size.
struct AllFaultSets {
    n: usize,
    max_size: usize,
    size: usize,
    inner: FaultSets,
}

impl AllFaultSets {
    fn new(n: usize, max_size: usize) -> AllFaultSets {
        AllFaultSets {
            n,
            max_size: max_size.min(n),
            size: 0,
            inner: FaultSets::of_size(n, 0),
        }
    }

    fn next(&mut self) -> Option<NodeSet> {
        loop {
            if let Some(s) = self.inner.next() {
                return Some(s);
            }
            if self.size >= self.max_size {
                return None;
            }
            self.size += 1;
            self.inner = FaultSets::of_size(self.n, self.size);
        }
    }
}

/// Lexicographic k-combinations of {0..n}.
struct FaultSets {
    n: usize,
    indices: Vec<usize>,
    started: bool,
    done: bool,
}

impl FaultSets {
    fn of_size(n: usize, k: usize) -> FaultSets {
        FaultSets {
            n,
            indices: (0..k).collect(),
            started: false,
            done: k > n,
        }
    }

    fn next(&mut self) -> Option<NodeSet> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(NodeSet::from_iter(self.indices.iter().copied()));
        }
        let k = self.indices.len();
        if k == 0 {
            self.done = true;
            return None;
        }
        // standard next-combination
        let mut i = k;
        loop {
            if i == 0 {
                self.done = true;
                return None;
            }
            i -= 1;
            if self.indices[i] != i + self.n - k {
                break;
            }
        }
        self.indices[i] += 1;
        for j in i + 1..k {
            self.indices[j] = self.indices[j - 1] + 1;
        }
        Some(NodeSet::from_iter(self.indices.iter().copied()))
    }
}
