//! Directed-network representation and the topological decision procedures:
//! reduced-graph enumeration, source-component analysis, and exact checks
//! of the unique-source and identifiability conditions that gate the
//! learning rules.

mod nodeset;
mod reduced;
mod scc;

pub use nodeset::{NodeSet, MAX_NODES};
pub use reduced::{count_reduced_graphs, ReducedGraph, ReducedGraphIter, DEFAULT_ENUMERATION_CAP};

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signals::SignalModel;
use scc::SccWorkspace;

/// Sums of strictly positive KL terms are declared nonzero above this.
pub const KL_ZERO_TOLERANCE: f64 = 1e-12;

/// A directed network on nodes `0..n`, stored as per-node incoming-neighbor
/// sets. Self-loops are rejected: an agent's own value enters every
/// algorithm explicitly, never through an edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Digraph {
    n: usize,
    incoming: Vec<BTreeSet<usize>>,
    outgoing: Vec<Vec<usize>>,
}

impl Digraph {
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Digraph> {
        if n == 0 {
            return Err(Error::InvalidGraph(
                "graph must have at least one node".into(),
            ));
        }
        let mut incoming = vec![BTreeSet::new(); n];
        let mut outgoing = vec![BTreeSet::new(); n];
        for &(from, to) in edges {
            if from >= n || to >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({from}, {to}) out of range for n = {n}"
                )));
            }
            if from == to {
                return Err(Error::InvalidGraph(format!("self-loop at node {from}")));
            }
            incoming[to].insert(from);
            outgoing[from].insert(to);
        }
        Ok(Digraph {
            n,
            incoming,
            outgoing: outgoing
                .into_iter()
                .map(|s| s.into_iter().collect())
                .collect(),
        })
    }

    /// Complete digraph: every ordered pair is an edge.
    pub fn complete(n: usize) -> Digraph {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    edges.push((i, j));
                }
            }
        }
        Digraph::new(n, &edges).expect("complete digraph is well-formed")
    }

    /// Directed ring 0 -> 1 -> ... -> n-1 -> 0.
    pub fn ring(n: usize) -> Digraph {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Digraph::new(n, &edges).expect("ring digraph is well-formed")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn incoming(&self, i: usize) -> &BTreeSet<usize> {
        &self.incoming[i]
    }

    pub fn outgoing(&self, i: usize) -> &[usize] {
        &self.outgoing[i]
    }

    pub fn edge_count(&self) -> usize {
        self.incoming.iter().map(|s| s.len()).sum()
    }

    pub fn is_strongly_connected(&self) -> bool {
        // node 0 reaches everyone and everyone reaches node 0
        self.reaches_all(|i| self.outgoing[i].to_vec())
            && self.reaches_all(|i| self.incoming[i].iter().copied().collect())
    }

    fn reaches_all(&self, neighbors: impl Fn(usize) -> Vec<usize>) -> bool {
        let mut seen = vec![false; self.n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for w in neighbors(v) {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.n
    }
}

/// On-disk graph format: node count and 1-based `[from, to]` edge pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphFile {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
}

impl GraphFile {
    pub fn to_digraph(&self) -> Result<Digraph> {
        let mut edges = Vec::with_capacity(self.edges.len());
        for &[from, to] in &self.edges {
            if from == 0 || to == 0 {
                return Err(Error::InvalidGraph(format!(
                    "edge [{from}, {to}]: node labels are 1-based"
                )));
            }
            edges.push((from - 1, to - 1));
        }
        Digraph::new(self.n, &edges)
    }
}

impl From<&Digraph> for GraphFile {
    fn from(g: &Digraph) -> GraphFile {
        let mut edges = Vec::new();
        for to in 0..g.n() {
            for &from in g.incoming(to) {
                edges.push([from + 1, to + 1]);
            }
        }
        edges.sort_unstable();
        GraphFile { n: g.n(), edges }
    }
}

/// SCC partition of a reduced graph plus which components are sources
/// (no incoming links from outside the component).
#[derive(Debug, Clone)]
pub struct SourceAnalysis {
    sccs: Vec<NodeSet>,
    sources: Vec<usize>,
}

impl SourceAnalysis {
    pub fn sccs(&self) -> &[NodeSet] {
        &self.sccs
    }

    pub fn source_components(&self) -> impl Iterator<Item = NodeSet> + '_ {
        self.sources.iter().map(|&i| self.sccs[i])
    }

    pub fn source_count(&self) -> usize {
        self.sources.len()
    }

    /// The source component when it is unique.
    pub fn unique_source(&self) -> Option<NodeSet> {
        match self.sources.as_slice() {
            [only] => Some(self.sccs[*only]),
            _ => None,
        }
    }
}

/// SCCs and source components of a reduced graph.
pub fn source_components(h: &ReducedGraph) -> SourceAnalysis {
    let mut ws = SccWorkspace::new();
    let mut sccs = Vec::new();
    ws.run(h.members(), h.incoming_masks(), &mut sccs);
    let sources = find_sources(h, &sccs);
    SourceAnalysis { sccs, sources }
}

fn find_sources(h: &ReducedGraph, sccs: &[NodeSet]) -> Vec<usize> {
    let mut sources = Vec::new();
    for (idx, &comp) in sccs.iter().enumerate() {
        let mut external_in = NodeSet::EMPTY;
        for i in comp.iter() {
            external_in = external_in.union(h.incoming(i));
        }
        if external_in.difference(comp).is_empty() {
            sources.push(idx);
        }
    }
    sources
}

/// A reduced graph violating the unique-source condition, with its
/// offending source components.
#[derive(Debug, Clone)]
pub struct TopologyWitness {
    pub reduced: ReducedGraph,
    pub sources: Vec<NodeSet>,
}

impl TopologyWitness {
    /// 1-based JSON rendering for reports.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "faulty": one_based(self.reduced.faulty()),
            "edges": self.reduced.edges().iter()
                .map(|&(a, b)| vec![a + 1, b + 1]).collect::<Vec<_>>(),
            "source_components": self.sources.iter()
                .map(|&s| one_based(s)).collect::<Vec<_>>(),
        })
    }
}

fn one_based(s: NodeSet) -> Vec<usize> {
    s.iter().map(|i| i + 1).collect()
}

/// Outcome of the exact unique-source check over every reduced graph.
#[derive(Debug, Clone)]
pub struct TopologyReport {
    /// True iff every reduced graph has exactly one source component.
    pub assumption_holds: bool,
    /// Number of distinct reduced graphs.
    pub chi: u64,
    /// Minimum source-component size seen. Only meaningful as the paper's
    /// γ_m when the assumption holds; on failure the walk stops at the
    /// witness and this is the minimum over the graphs examined.
    pub gamma: usize,
    pub witness: Option<TopologyWitness>,
}

impl TopologyReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "assumption_holds": self.assumption_holds,
            "chi": self.chi,
            "gamma": self.gamma,
            "witness": self.witness.as_ref().map(|w| w.to_json()),
        })
    }
}

/// Exact check of the unique-source condition for fault budget `f` and
/// dimension `m`, with the default enumeration cap.
pub fn check_topology(g: &Digraph, f: usize, m: usize) -> Result<TopologyReport> {
    check_topology_with(g, f, m, DEFAULT_ENUMERATION_CAP)
}

pub fn check_topology_with(g: &Digraph, f: usize, m: usize, cap: u64) -> Result<TopologyReport> {
    let chi = match count_reduced_graphs(g, f, m) {
        Some(c) if c <= cap as u128 => c as u64,
        _ => {
            // delegate to the iterator constructor for the uniform error
            ReducedGraphIter::new(g, f, m, cap)?;
            unreachable!("count above cap must error");
        }
    };
    let mut gamma = usize::MAX;
    let mut ws = SccWorkspace::new();
    let mut sccs: Vec<NodeSet> = Vec::new();
    for h in ReducedGraphIter::new(g, f, m, cap)? {
        ws.run(h.members(), h.incoming_masks(), &mut sccs);
        let sources = find_sources(&h, &sccs);
        let min_source = sources.iter().map(|&i| sccs[i].len()).min().unwrap_or(0);
        gamma = gamma.min(min_source);
        if sources.len() != 1 {
            return Ok(TopologyReport {
                assumption_holds: false,
                chi,
                gamma,
                witness: Some(TopologyWitness {
                    sources: sources.iter().map(|&i| sccs[i]).collect(),
                    reduced: h,
                }),
            });
        }
    }
    Ok(TopologyReport {
        assumption_holds: true,
        chi,
        gamma,
        witness: None,
    })
}

/// One-sided randomized check for graphs whose enumeration exceeds the cap:
/// examines `samples` random reduced graphs. Finding a violation refutes the
/// assumption; finding none certifies nothing.
#[derive(Debug, Clone)]
pub struct SampleReport {
    pub samples: u64,
    pub violation: Option<TopologyWitness>,
}

pub fn sample_topology(
    g: &Digraph,
    f: usize,
    m: usize,
    samples: u64,
    seed: u64,
) -> Result<SampleReport> {
    if g.n() > MAX_NODES {
        return Err(Error::GraphTooLarge {
            n: g.n(),
            max: MAX_NODES,
        });
    }
    let n = g.n();
    let budget = m * f;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ws = SccWorkspace::new();
    let mut sccs: Vec<NodeSet> = Vec::new();
    let all: Vec<usize> = (0..n).collect();
    for _ in 0..samples {
        let phi = rng.gen_range(0..=f.min(n));
        let mut pool = all.clone();
        pool.shuffle(&mut rng);
        let faulty = NodeSet::from_iter(pool[..phi].iter().copied());
        let members = NodeSet::full(n).difference(faulty);
        let mut incoming = vec![NodeSet::EMPTY; n];
        for i in members.iter() {
            let base: Vec<usize> = g
                .incoming(i)
                .iter()
                .copied()
                .filter(|j| members.contains(*j))
                .collect();
            let k = rng.gen_range(0..=budget.min(base.len()));
            let mut base = base;
            base.shuffle(&mut rng);
            incoming[i] = NodeSet::from_iter(base[k..].iter().copied());
        }
        let h = ReducedGraph::from_parts(n, faulty, incoming);
        ws.run(h.members(), h.incoming_masks(), &mut sccs);
        let sources = find_sources(&h, &sccs);
        if sources.len() != 1 {
            return Ok(SampleReport {
                samples,
                violation: Some(TopologyWitness {
                    sources: sources.iter().map(|&i| sccs[i]).collect(),
                    reduced: h,
                }),
            });
        }
    }
    Ok(SampleReport {
        samples,
        violation: None,
    })
}

/// Worst case found by the identifiability scan: the reduced graph, wrong
/// hypothesis, and source-component KL sum attaining the minimum.
#[derive(Debug, Clone)]
pub struct IdentifiabilityWitness {
    pub reduced: ReducedGraph,
    pub source: NodeSet,
    pub theta: usize,
    pub kl_sum: f64,
}

#[derive(Debug, Clone)]
pub struct IdentifiabilityReport {
    /// True iff within every reduced graph's unique source component, every
    /// wrong hypothesis is separated from the true one by a strictly
    /// positive KL sum.
    pub holds: bool,
    pub tolerance: f64,
    pub worst: Option<IdentifiabilityWitness>,
}

impl IdentifiabilityReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "holds": self.holds,
            "tolerance": self.tolerance,
            "worst": self.worst.as_ref().map(|w| serde_json::json!({
                "faulty": one_based(w.reduced.faulty()),
                "source_component": one_based(w.source),
                "theta_index": w.theta + 1,
                "kl_sum": w.kl_sum,
            })),
        })
    }
}

/// Exact identifiability check: requires every reduced graph to have a
/// unique source component (errors otherwise), and reports whether the
/// source's summed detection capability is positive for every wrong
/// hypothesis.
pub fn check_identifiability(
    g: &Digraph,
    f: usize,
    m: usize,
    model: &SignalModel,
    theta_star: usize,
) -> Result<IdentifiabilityReport> {
    check_identifiability_with(
        g,
        f,
        m,
        model,
        theta_star,
        DEFAULT_ENUMERATION_CAP,
        KL_ZERO_TOLERANCE,
    )
}

#[allow(clippy::needless_range_loop)]
pub fn check_identifiability_with(
    g: &Digraph,
    f: usize,
    m: usize,
    model: &SignalModel,
    theta_star: usize,
    cap: u64,
    tolerance: f64,
) -> Result<IdentifiabilityReport> {
    if model.agent_count() != g.n() {
        return Err(Error::InvalidConfig(format!(
            "model has {} agents but graph has {} nodes",
            model.agent_count(),
            g.n()
        )));
    }
    let m_hyp = model.hypothesis_count();
    if theta_star >= m_hyp {
        return Err(Error::InvalidConfig(format!(
            "theta_star index {theta_star} out of range for {m_hyp} hypotheses"
        )));
    }
    let kl = model.kl_table();
    let mut worst: Option<IdentifiabilityWitness> = None;
    for h in ReducedGraphIter::new(g, f, m, cap)? {
        let analysis = source_components(&h);
        let source = analysis
            .unique_source()
            .ok_or_else(|| Error::NonUniqueSource {
                faulty: one_based(h.faulty()),
                sources: analysis.source_count(),
            })?;
        for theta in 0..m_hyp {
            if theta == theta_star {
                continue;
            }
            let sum: f64 = source.iter().map(|j| kl[j][theta_star][theta]).sum();
            if worst.as_ref().is_none_or(|w| sum < w.kl_sum) {
                worst = Some(IdentifiabilityWitness {
                    reduced: h.clone(),
                    source,
                    theta,
                    kl_sum: sum,
                });
            }
        }
    }
    let holds = worst.as_ref().is_some_and(|w| w.kl_sum > tolerance);
    Ok(IdentifiabilityReport {
        holds,
        tolerance,
        worst,
    })
}

/// Minimum, over every reduced graph and every ordered hypothesis pair, of
/// the source component's KL sum. Used by the C1 constant.
#[allow(clippy::needless_range_loop)]
pub(crate) fn min_source_kl_all_pairs(
    g: &Digraph,
    f: usize,
    m: usize,
    kl: &[Vec<Vec<f64>>],
    cap: u64,
) -> Result<f64> {
    let m_hyp = kl[0].len();
    let mut min = f64::INFINITY;
    for h in ReducedGraphIter::new(g, f, m, cap)? {
        let analysis = source_components(&h);
        let source = analysis
            .unique_source()
            .ok_or_else(|| Error::NonUniqueSource {
                faulty: one_based(h.faulty()),
                sources: analysis.source_count(),
            })?;
        for a in 0..m_hyp {
            for b in 0..m_hyp {
                if a == b {
                    continue;
                }
                let sum: f64 = source.iter().map(|j| kl[j][a][b]).sum();
                min = min.min(sum);
            }
        }
    }
    Ok(min)
}
