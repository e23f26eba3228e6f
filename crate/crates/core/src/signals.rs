//! Hypothesis sets, per-agent finite-support likelihood models, signal
//! sampling, KL divergence, cumulative log-likelihoods, and the constants
//! C0 / C1.
//!
//! Likelihood tables are kept in both linear and log form; everything
//! downstream works in nats and log space.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{self, Digraph};

/// Likelihood entries below this are rejected at load: the full-support
/// assumption must hold with enough room that C0 stays bounded.
pub const MIN_LIKELIHOOD: f64 = 1e-9;

/// Per-column normalization slack accepted at load.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

/// Ordered hypothesis labels plus the designated true state of a scenario.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HypothesisSet {
    labels: Vec<String>,
    true_index: usize,
}

impl HypothesisSet {
    pub fn new(labels: Vec<String>, true_index: usize) -> Result<HypothesisSet> {
        if labels.len() < 2 {
            return Err(Error::InvalidModel("need at least two hypotheses".into()));
        }
        for (i, a) in labels.iter().enumerate() {
            if labels[..i].contains(a) {
                return Err(Error::InvalidModel(format!(
                    "duplicate hypothesis label {a:?}"
                )));
            }
            // labels become trace CSV keys (pairs joined with '>')
            if a.is_empty() || a.contains([',', '>', '\n', '\r']) {
                return Err(Error::InvalidModel(format!(
                    "hypothesis label {a:?} must be nonempty and free of ',', '>', and newlines"
                )));
            }
        }
        if true_index >= labels.len() {
            return Err(Error::InvalidModel(format!(
                "true hypothesis index {true_index} out of range"
            )));
        }
        Ok(HypothesisSet { labels, true_index })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction requires >= 2 labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn true_index(&self) -> usize {
        self.true_index
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

#[derive(Debug, Clone)]
struct AgentTable {
    /// lik[w][theta], rows per signal, columns per hypothesis.
    lik: Vec<Vec<f64>>,
    log_lik: Vec<Vec<f64>>,
}

/// Per-agent finite likelihood tables over signals × hypotheses.
#[derive(Debug, Clone)]
pub struct SignalModel {
    labels: Vec<String>,
    agents: Vec<AgentTable>,
}

/// On-disk model format.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub hypotheses: Vec<String>,
    pub agents: Vec<AgentModelFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AgentModelFile {
    pub signals: usize,
    /// Row per signal, column per hypothesis.
    pub likelihoods: Vec<Vec<f64>>,
}

impl SignalModel {
    pub fn from_file(file: &ModelFile) -> Result<SignalModel> {
        let tables = file
            .agents
            .iter()
            .enumerate()
            .map(|(i, a)| {
                if a.likelihoods.len() != a.signals {
                    return Err(Error::InvalidModel(format!(
                        "agent {}: {} likelihood rows for {} signals",
                        i + 1,
                        a.likelihoods.len(),
                        a.signals
                    )));
                }
                Ok(a.likelihoods.clone())
            })
            .collect::<Result<Vec<_>>>()?;
        SignalModel::from_tables(file.hypotheses.clone(), tables)
    }

    /// Build and validate a model from per-agent `lik[w][theta]` tables.
    pub fn from_tables(labels: Vec<String>, tables: Vec<Vec<Vec<f64>>>) -> Result<SignalModel> {
        // label constraints shared with HypothesisSet
        HypothesisSet::new(labels.clone(), 0)?;
        let m = labels.len();
        if tables.is_empty() {
            return Err(Error::InvalidModel("model has no agents".into()));
        }
        let mut agents = Vec::with_capacity(tables.len());
        for (i, lik) in tables.into_iter().enumerate() {
            if lik.is_empty() {
                return Err(Error::InvalidModel(format!(
                    "agent {}: empty signal space",
                    i + 1
                )));
            }
            for (w, row) in lik.iter().enumerate() {
                if row.len() != m {
                    return Err(Error::InvalidModel(format!(
                        "agent {}: signal {} has {} entries for {} hypotheses",
                        i + 1,
                        w + 1,
                        row.len(),
                        m
                    )));
                }
                for &p in row {
                    if !p.is_finite() || p < MIN_LIKELIHOOD {
                        return Err(Error::InvalidModel(format!(
                            "agent {}: likelihood {p} below the minimum {MIN_LIKELIHOOD}",
                            i + 1
                        )));
                    }
                }
            }
            for theta in 0..m {
                let col: f64 = lik.iter().map(|row| row[theta]).sum();
                if (col - 1.0).abs() > NORMALIZATION_TOLERANCE {
                    return Err(Error::InvalidModel(format!(
                        "agent {}: column {} sums to {col}, not 1",
                        i + 1,
                        theta + 1
                    )));
                }
            }
            let log_lik = lik
                .iter()
                .map(|row| row.iter().map(|p| p.ln()).collect())
                .collect();
            agents.push(AgentTable { lik, log_lik });
        }
        Ok(SignalModel { labels, agents })
    }

    pub fn to_file(&self) -> ModelFile {
        ModelFile {
            hypotheses: self.labels.clone(),
            agents: self
                .agents
                .iter()
                .map(|a| AgentModelFile {
                    signals: a.lik.len(),
                    likelihoods: a.lik.clone(),
                })
                .collect(),
        }
    }

    pub fn agent_count(&self) -> usize {
        self.agents.len()
    }

    pub fn hypothesis_count(&self) -> usize {
        self.labels.len()
    }

    pub fn hypothesis_labels(&self) -> &[String] {
        &self.labels
    }

    pub fn hypothesis_set(&self, true_label: &str) -> Result<HypothesisSet> {
        let idx = self
            .labels
            .iter()
            .position(|l| l == true_label)
            .ok_or_else(|| Error::InvalidModel(format!("unknown hypothesis {true_label:?}")))?;
        HypothesisSet::new(self.labels.clone(), idx)
    }

    pub fn signal_space(&self, agent: usize) -> usize {
        self.agents[agent].lik.len()
    }

    pub fn likelihood(&self, agent: usize, signal: usize, theta: usize) -> f64 {
        self.agents[agent].lik[signal][theta]
    }

    pub fn log_likelihood(&self, agent: usize, signal: usize, theta: usize) -> f64 {
        self.agents[agent].log_lik[signal][theta]
    }

    /// KL divergence D(l_i(.|theta1) || l_i(.|theta2)) in nats. Nonnegative;
    /// zero iff the two columns are identical.
    pub fn kl_divergence(&self, agent: usize, theta1: usize, theta2: usize) -> f64 {
        let a = &self.agents[agent];
        let mut sum = 0.0;
        for w in 0..a.lik.len() {
            sum += a.lik[w][theta1] * (a.log_lik[w][theta1] - a.log_lik[w][theta2]);
        }
        sum.max(0.0)
    }

    /// `kl[agent][theta_star][theta]`.
    pub fn kl_table(&self) -> Vec<Vec<Vec<f64>>> {
        let m = self.hypothesis_count();
        (0..self.agent_count())
            .map(|i| {
                (0..m)
                    .map(|a| (0..m).map(|b| self.kl_divergence(i, a, b)).collect())
                    .collect()
            })
            .collect()
    }

    /// Draw one signal for `agent` under hypothesis `theta`.
    pub fn sample_signal<R: Rng>(&self, agent: usize, theta: usize, rng: &mut R) -> usize {
        let a = &self.agents[agent];
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (w, row) in a.lik.iter().enumerate() {
            acc += row[theta];
            if u < acc {
                return w;
            }
        }
        a.lik.len() - 1
    }

    /// Swap two hypothesis columns in every agent's table; used by the
    /// mimic-flipped adversary strategy.
    pub fn with_swapped_columns(&self, theta_a: usize, theta_b: usize) -> SignalModel {
        let mut out = self.clone();
        for agent in &mut out.agents {
            for row in agent.lik.iter_mut() {
                row.swap(theta_a, theta_b);
            }
            for row in agent.log_lik.iter_mut() {
                row.swap(theta_a, theta_b);
            }
        }
        out
    }
}

/// C0: a universal bound on the magnitude of any single-round
/// log-likelihood ratio, max over agents, ordered hypothesis pairs, and
/// signals of |log(l(w|theta1) / l(w|theta2))|.
pub fn c0(model: &SignalModel) -> f64 {
    let m = model.hypothesis_count();
    let mut max = 0.0f64;
    for i in 0..model.agent_count() {
        for w in 0..model.signal_space(i) {
            for a in 0..m {
                for b in 0..m {
                    if a != b {
                        let ratio =
                            (model.log_likelihood(i, w, a) - model.log_likelihood(i, w, b)).abs();
                        max = max.max(ratio);
                    }
                }
            }
        }
    }
    max
}

/// C1: the minimal detection capability of a source component — the
/// minimum, over every reduced graph and every ordered hypothesis pair, of
/// the summed KL divergence inside the unique source component.
pub fn c1(model: &SignalModel, g: &Digraph, f: usize, m: usize) -> Result<f64> {
    c1_with(model, g, f, m, graph::DEFAULT_ENUMERATION_CAP)
}

pub fn c1_with(model: &SignalModel, g: &Digraph, f: usize, m: usize, cap: u64) -> Result<f64> {
    if model.agent_count() != g.n() {
        return Err(Error::InvalidConfig(format!(
            "model has {} agents but graph has {} nodes",
            model.agent_count(),
            g.n()
        )));
    }
    let kl = model.kl_table();
    graph::min_source_kl_all_pairs(g, f, m, &kl, cap)
}

/// Running per-agent log-likelihood of the whole signal history, one entry
/// per hypothesis.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulativeLogLikelihood {
    values: Vec<f64>,
    rounds: usize,
}

impl CumulativeLogLikelihood {
    pub fn new(hypothesis_count: usize) -> CumulativeLogLikelihood {
        CumulativeLogLikelihood {
            values: vec![0.0; hypothesis_count],
            rounds: 0,
        }
    }

    /// Fold one observed signal into the history.
    pub fn observe(&mut self, model: &SignalModel, agent: usize, signal: usize) {
        for (theta, v) in self.values.iter_mut().enumerate() {
            *v += model.log_likelihood(agent, signal, theta);
        }
        self.rounds += 1;
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, theta: usize) -> f64 {
        self.values[theta]
    }

    /// log l(s_{1,t} | theta1) - log l(s_{1,t} | theta2).
    pub fn ratio(&self, theta1: usize, theta2: usize) -> f64 {
        self.values[theta1] - self.values[theta2]
    }
}
