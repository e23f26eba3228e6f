//! The three learning rules and the pairwise decision rule.
//!
//! Every rule is a pure state transition: (state at t-1, messages, fresh
//! signal) -> state at t. Beliefs live in log space throughout and are
//! log-sum-exp normalized after every step; pairwise ratio tables are
//! already log quantities. Honest agents transmit exactly the quantity the
//! consensus primitive consumes (log-beliefs, or per-pair ratio scalars)
//! and never exponentiate received data.

use crate::consensus::{
    one_iter_with_limit, trimmed_scalar_round, ReceivedMultiset, DEFAULT_MAX_POINTS,
};
use crate::error::{Error, Result};
use crate::numeric::{log_sum_exp, normalize_log};
use crate::signals::{CumulativeLogLikelihood, SignalModel};

/// Pairwise ratios are clamped to this magnitude; they grow quadratically
/// by design, and clamping preserves ordering and decisions on long runs.
pub const RATIO_CLAMP: f64 = 1e8;

/// Per-agent log-belief vector over the hypothesis set.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefState {
    log_beliefs: Vec<f64>,
    round: usize,
}

impl BeliefState {
    /// The uniform prior: every entry -log m at round 0.
    pub fn uniform(hypothesis_count: usize) -> BeliefState {
        let log_m = (hypothesis_count as f64).ln();
        BeliefState {
            log_beliefs: vec![-log_m; hypothesis_count],
            round: 0,
        }
    }

    pub fn log_beliefs(&self) -> &[f64] {
        &self.log_beliefs
    }

    pub fn belief(&self, theta: usize) -> f64 {
        self.log_beliefs[theta].exp()
    }

    pub fn round(&self) -> usize {
        self.round
    }

    /// psi(theta1, theta2) = log mu(theta1) - log mu(theta2).
    pub fn log_ratio(&self, theta1: usize, theta2: usize) -> f64 {
        self.log_beliefs[theta1] - self.log_beliefs[theta2]
    }

    /// |log-sum-exp| of the entries; zero for a normalized state.
    pub fn normalization_defect(&self) -> f64 {
        log_sum_exp(&self.log_beliefs).abs()
    }
}

/// One BFL iteration: trim the received log-beliefs through One-Iter, fold
/// the fresh signal into the cumulative likelihood, and renormalize
/// cumulative + consensus in log space.
pub fn bfl_step(
    agent: usize,
    model: &SignalModel,
    belief: &BeliefState,
    received: &ReceivedMultiset<Vec<f64>>,
    cumulative: &mut CumulativeLogLikelihood,
    signal: usize,
    f: usize,
) -> Result<BeliefState> {
    bfl_step_with_limit(
        agent,
        model,
        belief,
        received,
        cumulative,
        signal,
        f,
        DEFAULT_MAX_POINTS,
    )
}

#[allow(clippy::too_many_arguments)]
pub fn bfl_step_with_limit(
    agent: usize,
    model: &SignalModel,
    belief: &BeliefState,
    received: &ReceivedMultiset<Vec<f64>>,
    cumulative: &mut CumulativeLogLikelihood,
    signal: usize,
    f: usize,
    max_points: usize,
) -> Result<BeliefState> {
    let eta = one_iter_with_limit(belief.log_beliefs(), received, f, max_points)?;
    cumulative.observe(model, agent, signal);
    let mut log_beliefs: Vec<f64> = cumulative
        .values()
        .iter()
        .zip(&eta)
        .map(|(c, e)| c + e)
        .collect();
    normalize_log(&mut log_beliefs);
    debug_assert!(log_sum_exp(&log_beliefs).abs() < 1e-9);
    Ok(BeliefState {
        log_beliefs,
        round: belief.round + 1,
    })
}

/// One failure-free BFL iteration: equal-weight geometric average of the
/// own and all incoming log-beliefs, plus the cumulative likelihood.
/// Requires a message from every incoming neighbor.
pub fn ff_bfl_step(
    agent: usize,
    model: &SignalModel,
    belief: &BeliefState,
    incoming: &std::collections::BTreeSet<usize>,
    messages: &std::collections::BTreeMap<usize, Vec<f64>>,
    cumulative: &mut CumulativeLogLikelihood,
    signal: usize,
) -> Result<BeliefState> {
    let m = belief.log_beliefs.len();
    let weight = 1.0 / (incoming.len() + 1) as f64;
    let mut eta: Vec<f64> = belief.log_beliefs.iter().map(|&x| weight * x).collect();
    for &j in incoming {
        let msg = messages
            .get(&j)
            .ok_or(Error::MissingNeighbor { agent, neighbor: j })?;
        if msg.len() != m {
            return Err(Error::InvalidConfig(format!(
                "belief vector from {j} has dimension {} (expected {m})",
                msg.len()
            )));
        }
        for (e, v) in eta.iter_mut().zip(msg) {
            *e += weight * v;
        }
    }
    cumulative.observe(model, agent, signal);
    let mut log_beliefs: Vec<f64> = cumulative
        .values()
        .iter()
        .zip(&eta)
        .map(|(c, e)| c + e)
        .collect();
    normalize_log(&mut log_beliefs);
    debug_assert!(log_sum_exp(&log_beliefs).abs() < 1e-9);
    Ok(BeliefState {
        log_beliefs,
        round: belief.round + 1,
    })
}

/// Per-agent table of pairwise log-likelihood-ratio states r(theta1,
/// theta2) over ordered hypothesis pairs; the diagonal is unused and kept
/// at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseRatios {
    m: usize,
    table: Vec<f64>,
    round: usize,
}

impl PairwiseRatios {
    /// All-zero table at round 0.
    pub fn zero(hypothesis_count: usize) -> PairwiseRatios {
        PairwiseRatios {
            m: hypothesis_count,
            table: vec![0.0; hypothesis_count * hypothesis_count],
            round: 0,
        }
    }

    pub fn hypothesis_count(&self) -> usize {
        self.m
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn get(&self, theta1: usize, theta2: usize) -> f64 {
        self.table[theta1 * self.m + theta2]
    }

    fn set(&mut self, theta1: usize, theta2: usize, value: f64) {
        self.table[theta1 * self.m + theta2] = value;
    }

    /// Row-major flattened table, the transport form of a pairwise message.
    pub fn flattened(&self) -> &[f64] {
        &self.table
    }

    pub fn from_flat(m: usize, table: Vec<f64>, round: usize) -> Result<PairwiseRatios> {
        if table.len() != m * m {
            return Err(Error::InvalidConfig(format!(
                "pairwise table of length {} for {m} hypotheses",
                table.len()
            )));
        }
        Ok(PairwiseRatios { m, table, round })
    }
}

/// Outcome of one pairwise step: the new table plus how many entries hit
/// the overflow clamp.
#[derive(Debug, Clone)]
pub struct PairwiseStep {
    pub ratios: PairwiseRatios,
    pub clamped: usize,
}

/// One pairwise-learning iteration: every ordered pair is an independent
/// scalar trimmed-consensus round on the received tables, with the agent's
/// cumulative log-likelihood ratio added on top. Received tables are
/// treated as arbitrary data; no antisymmetry is assumed.
pub fn pairwise_step(
    agent: usize,
    model: &SignalModel,
    ratios: &PairwiseRatios,
    received: &ReceivedMultiset<Vec<f64>>,
    cumulative: &mut CumulativeLogLikelihood,
    signal: usize,
    f: usize,
) -> Result<PairwiseStep> {
    let m = ratios.m;
    for (sender, table) in received.iter() {
        if table.len() != m * m {
            return Err(Error::InvalidConfig(format!(
                "pairwise table from {sender} has length {} (expected {})",
                table.len(),
                m * m
            )));
        }
    }
    cumulative.observe(model, agent, signal);
    let mut next = PairwiseRatios {
        m,
        table: vec![0.0; m * m],
        round: ratios.round + 1,
    };
    let mut clamped = 0;
    for theta1 in 0..m {
        for theta2 in 0..m {
            if theta1 == theta2 {
                continue;
            }
            let slot = theta1 * m + theta2;
            let scalars = ReceivedMultiset::new(
                received
                    .iter()
                    .map(|(sender, table)| (*sender, table[slot]))
                    .collect(),
            );
            let consensus = trimmed_scalar_round(ratios.get(theta1, theta2), &scalars, f)?;
            let mut value = consensus + cumulative.ratio(theta1, theta2);
            if value.abs() > RATIO_CLAMP {
                value = value.clamp(-RATIO_CLAMP, RATIO_CLAMP);
                clamped += 1;
            }
            next.set(theta1, theta2, value);
        }
    }
    Ok(PairwiseStep {
        ratios: next,
        clamped,
    })
}

/// The decision rule on a ratio table: theta wins iff its ratio against
/// every other hypothesis clears the threshold. At most one hypothesis can
/// win under honest dynamics; anything else (including corrupted tables
/// where several qualify) is undecided.
pub fn pairwise_decide(ratios: &PairwiseRatios, threshold: f64) -> Option<usize> {
    let m = ratios.m;
    let mut winner = None;
    for cand in 0..m {
        let qualifies = (0..m)
            .filter(|&other| other != cand)
            .all(|other| ratios.get(cand, other) >= threshold);
        if qualifies {
            if winner.is_some() {
                return None;
            }
            winner = Some(cand);
        }
    }
    winner
}
