//! The synchronous round loop.
//!
//! Round structure is fixed: (1) every agent's outgoing messages are
//! computed from end-of-previous-round state — honest agents broadcast
//! their carried state, faulty agents run their strategy against a
//! start-of-round system view; (2) every learning agent observes a fresh
//! private signal; (3) honest agents (and mimic-flipped faulty agents,
//! against their column-swapped model) apply the rule's step. No round-t
//! update can see a round-t honest message being formed, because all of
//! step (1) completes before step (3) begins.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::adversary::{craft_messages, StrategySpec, SystemView};
use crate::consensus::ReceivedMultiset;
use crate::error::{Error, Result};
use crate::learning::{
    bfl_step_with_limit, ff_bfl_step, pairwise_decide, pairwise_step, BeliefState, PairwiseRatios,
};
use crate::rng::{substream, Purpose};
use crate::signals::{CumulativeLogLikelihood, SignalModel};
use crate::sim::trace::{diameter_of, RoundRecord, RoundTrace, TraceFlag, TraceKind};
use crate::sim::{fit, ResolvedFaulty, Rule, Scenario};

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Also record every delivered message; used by the synchrony tests.
    pub record_messages: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MessageRecord {
    pub round: usize,
    pub from: usize,
    pub to: usize,
    pub payload: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trace: RoundTrace,
    pub summary: RunSummary,
    /// Per honest agent, the observed signal index per round.
    pub signals: BTreeMap<usize, Vec<usize>>,
    /// Realized faulty set, 0-based.
    pub faulty: Vec<usize>,
    /// Empty unless `RunOptions::record_messages` was set.
    pub message_log: Vec<MessageRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub rule: Rule,
    pub n: usize,
    pub f: usize,
    pub rounds: usize,
    pub seed: u64,
    pub theta_star: String,
    /// 1-based ids.
    pub faulty: Vec<usize>,
    pub strategy: Option<StrategySpec>,
    pub final_diameter: f64,
    pub flags: BTreeMap<String, u64>,
    pub agents: BTreeMap<String, AgentSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assumption_checks: Option<serde_json::Value>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AgentSummary {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_log_beliefs: Option<BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub belief_true: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_ratios: Option<BTreeMap<String, f64>>,
    pub decision: Option<String>,
    pub decision_round: Option<usize>,
    pub fits: BTreeMap<String, FitEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitEntry {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub r_squared: f64,
}

enum AgentState {
    Belief {
        belief: BeliefState,
        cum: CumulativeLogLikelihood,
    },
    Ratio {
        ratios: PairwiseRatios,
        cum: CumulativeLogLikelihood,
    },
}

impl AgentState {
    fn fresh(rule: Rule, m: usize) -> AgentState {
        match rule {
            Rule::Bfl | Rule::FfBfl => AgentState::Belief {
                belief: BeliefState::uniform(m),
                cum: CumulativeLogLikelihood::new(m),
            },
            Rule::Pairwise => AgentState::Ratio {
                ratios: PairwiseRatios::zero(m),
                cum: CumulativeLogLikelihood::new(m),
            },
        }
    }

    /// What the agent transmits: log-beliefs, or the flattened ratio table.
    fn carried(&self) -> Vec<f64> {
        match self {
            AgentState::Belief { belief, .. } => belief.log_beliefs().to_vec(),
            AgentState::Ratio { ratios, .. } => ratios.flattened().to_vec(),
        }
    }

    /// The consensus-carried quantity for diameter purposes: the ratio
    /// table with the locally-added cumulative likelihood term removed
    /// (pre-innovation state), or the log-beliefs as-is.
    fn consensus_quantity(&self, m: usize) -> Vec<f64> {
        match self {
            AgentState::Belief { belief, .. } => belief.log_beliefs().to_vec(),
            AgentState::Ratio { ratios, cum } => {
                let mut out = ratios.flattened().to_vec();
                for a in 0..m {
                    for b in 0..m {
                        if a != b {
                            out[a * m + b] -= cum.ratio(a, b);
                        }
                    }
                }
                out
            }
        }
    }
}

pub(crate) fn run(scenario: &Scenario, seed: u64, options: &RunOptions) -> Result<RunOutput> {
    let g = &scenario.graph;
    let n = g.n();
    let m = scenario.hypotheses.len();
    let theta_star = scenario.hypotheses.true_index();

    let faulty: BTreeSet<usize> = match &scenario.faulty_selection {
        ResolvedFaulty::None => BTreeSet::new(),
        ResolvedFaulty::Explicit(set) => set.clone(),
        ResolvedFaulty::RandomCount(k) => {
            let mut rng = substream(seed, 0, 0, Purpose::FaultSelection);
            let mut pool: Vec<usize> = (0..n).collect();
            pool.shuffle(&mut rng);
            pool[..*k].iter().copied().collect()
        }
    };
    let honest: Vec<usize> = (0..n).filter(|i| !faulty.contains(i)).collect();
    if honest.is_empty() {
        return Err(Error::InvalidConfig("every agent is faulty".into()));
    }

    let mimic_model = scenario
        .mimic_target
        .map(|target| scenario.model.with_swapped_columns(theta_star, target));
    let mimic_agents: Vec<usize> = if mimic_model.is_some() {
        faulty.iter().copied().collect()
    } else {
        Vec::new()
    };

    let mut states: BTreeMap<usize, AgentState> = honest
        .iter()
        .map(|&i| (i, AgentState::fresh(scenario.rule, m)))
        .collect();
    let mut mimic_states: BTreeMap<usize, AgentState> = mimic_agents
        .iter()
        .map(|&j| (j, AgentState::fresh(scenario.rule, m)))
        .collect();
    let mut histories: BTreeMap<usize, Vec<usize>> =
        honest.iter().map(|&i| (i, Vec::new())).collect();

    let payload_len = match scenario.rule {
        Rule::Bfl | Rule::FfBfl => m,
        Rule::Pairwise => m * m,
    };

    let mut records = Vec::with_capacity(scenario.rounds + 1);
    records.push(snapshot_record(0, &states, m, Vec::new()));
    let mut message_log = Vec::new();

    for t in 1..=scenario.rounds {
        // (1) emission from end-of-(t-1) state
        let honest_payloads: BTreeMap<usize, Vec<f64>> =
            states.iter().map(|(&i, s)| (i, s.carried())).collect();
        let mimic_payloads: BTreeMap<usize, Vec<f64>> = mimic_states
            .iter()
            .map(|(&j, s)| (j, s.carried()))
            .collect();

        let mut inboxes: BTreeMap<usize, BTreeMap<usize, Vec<f64>>> = BTreeMap::new();
        for (&j, payload) in &honest_payloads {
            for &to in g.outgoing(j) {
                if options.record_messages {
                    message_log.push(MessageRecord {
                        round: t,
                        from: j,
                        to,
                        payload: payload.clone(),
                    });
                }
                inboxes.entry(to).or_default().insert(j, payload.clone());
            }
        }
        if !faulty.is_empty() {
            let strategy = scenario
                .strategy
                .as_ref()
                .expect("faulty agents imply a strategy (checked at load)");
            let view = SystemView {
                round: t,
                graph: g,
                faulty: &faulty,
                honest_states: &honest_payloads,
                mimic_states: &mimic_payloads,
                model: Some(&scenario.model),
                signal_histories: Some(&histories),
            };
            for &j in &faulty {
                let mut rng = substream(seed, j, t, Purpose::Adversary);
                for (to, payload) in craft_messages(strategy, j, &view, &mut rng) {
                    if options.record_messages {
                        message_log.push(MessageRecord {
                            round: t,
                            from: j,
                            to,
                            payload: payload.clone(),
                        });
                    }
                    inboxes.entry(to).or_default().insert(j, payload);
                }
            }
        }

        // (2) fresh private signals
        let mut signals_t: BTreeMap<usize, usize> = BTreeMap::new();
        for &i in honest.iter().chain(&mimic_agents) {
            let mut rng = substream(seed, i, t, Purpose::Signal);
            signals_t.insert(i, scenario.model.sample_signal(i, theta_star, &mut rng));
        }

        // (3) updates
        let mut flags: Vec<TraceFlag> = Vec::new();
        for &i in &honest {
            let inbox = sanitize_inbox(inboxes.remove(&i).unwrap_or_default(), payload_len);
            let state = states.get_mut(&i).expect("honest state exists");
            let (substituted, clamped) =
                step_agent(scenario, &scenario.model, i, state, &inbox, signals_t[&i]).map_err(
                    |e| Error::EngineStep {
                        round: t,
                        agent: i + 1,
                        source: Box::new(e),
                    },
                )?;
            if substituted > 0 {
                flags.push(TraceFlag {
                    agent: i,
                    name: "defaults_substituted".into(),
                    count: substituted as u64,
                });
            }
            if clamped > 0 {
                flags.push(TraceFlag {
                    agent: i,
                    name: "clamped".into(),
                    count: clamped as u64,
                });
            }
            histories
                .get_mut(&i)
                .expect("history exists")
                .push(signals_t[&i]);
        }
        for &j in &mimic_agents {
            let inbox = sanitize_inbox(inboxes.remove(&j).unwrap_or_default(), payload_len);
            let state = mimic_states.get_mut(&j).expect("mimic state exists");
            let model = mimic_model.as_ref().expect("mimic model exists");
            step_agent(scenario, model, j, state, &inbox, signals_t[&j]).map_err(|e| {
                Error::EngineStep {
                    round: t,
                    agent: j + 1,
                    source: Box::new(e),
                }
            })?;
        }

        records.push(snapshot_record(t, &states, m, flags));
    }

    let trace = RoundTrace {
        kind: match scenario.rule {
            Rule::Bfl | Rule::FfBfl => TraceKind::Beliefs,
            Rule::Pairwise => TraceKind::Ratios,
        },
        hypotheses: scenario.hypotheses.labels().to_vec(),
        records,
    };
    let summary = build_summary(scenario, seed, &faulty, &trace);
    Ok(RunOutput {
        trace,
        summary,
        signals: histories,
        faulty: faulty.into_iter().collect(),
        message_log,
    })
}

fn sanitize_inbox(raw: BTreeMap<usize, Vec<f64>>, payload_len: usize) -> BTreeMap<usize, Vec<f64>> {
    raw.into_iter()
        .filter(|(_, payload)| {
            payload.len() == payload_len && payload.iter().all(|v| v.is_finite())
        })
        .collect()
}

fn step_agent(
    scenario: &Scenario,
    model: &SignalModel,
    agent: usize,
    state: &mut AgentState,
    inbox: &BTreeMap<usize, Vec<f64>>,
    signal: usize,
) -> Result<(usize, usize)> {
    let incoming = scenario.graph.incoming(agent);
    match state {
        AgentState::Belief { belief, cum } => match scenario.rule {
            Rule::Bfl => {
                let own = belief.log_beliefs().to_vec();
                let (received, substituted) =
                    ReceivedMultiset::from_messages(incoming.iter(), inbox, &own);
                *belief = bfl_step_with_limit(
                    agent,
                    model,
                    belief,
                    &received,
                    cum,
                    signal,
                    scenario.f,
                    scenario.max_one_iter_points,
                )?;
                Ok((substituted, 0))
            }
            Rule::FfBfl => {
                *belief = ff_bfl_step(agent, model, belief, incoming, inbox, cum, signal)?;
                Ok((0, 0))
            }
            Rule::Pairwise => unreachable!("pairwise rule uses ratio state"),
        },
        AgentState::Ratio { ratios, cum } => {
            let own = ratios.flattened().to_vec();
            let (received, substituted) =
                ReceivedMultiset::from_messages(incoming.iter(), inbox, &own);
            let step = pairwise_step(agent, model, ratios, &received, cum, signal, scenario.f)?;
            *ratios = step.ratios;
            Ok((substituted, step.clamped))
        }
    }
}

fn snapshot_record(
    round: usize,
    states: &BTreeMap<usize, AgentState>,
    m: usize,
    flags: Vec<TraceFlag>,
) -> RoundRecord {
    let snapshots: BTreeMap<usize, Vec<f64>> =
        states.iter().map(|(&i, s)| (i, s.carried())).collect();
    let consensus: Vec<Vec<f64>> = states.values().map(|s| s.consensus_quantity(m)).collect();
    RoundRecord {
        round,
        states: snapshots,
        diameter: diameter_of(consensus.iter()),
        flags,
    }
}

fn build_summary(
    scenario: &Scenario,
    seed: u64,
    faulty: &BTreeSet<usize>,
    trace: &RoundTrace,
) -> RunSummary {
    let labels = scenario.hypotheses.labels();
    let m = labels.len();
    let theta_star = scenario.hypotheses.true_index();
    let final_record = trace.records.last().expect("at least the initial record");
    let rounds = trace.rounds();

    let mut agents = BTreeMap::new();
    for (&agent, final_state) in &final_record.states {
        let mut summary = AgentSummary {
            final_log_beliefs: None,
            belief_true: None,
            final_ratios: None,
            decision: None,
            decision_round: None,
            fits: BTreeMap::new(),
        };
        match trace.kind {
            TraceKind::Beliefs => {
                summary.final_log_beliefs = Some(
                    labels
                        .iter()
                        .zip(final_state)
                        .map(|(l, &v)| (l.clone(), v))
                        .collect(),
                );
                summary.belief_true = Some(final_state[theta_star].exp());
                let best = (0..m)
                    .max_by(|&a, &b| final_state[a].total_cmp(&final_state[b]))
                    .expect("nonempty hypothesis set");
                if final_state[best].exp() >= scenario.success_belief {
                    summary.decision = Some(labels[best].clone());
                    summary.decision_round = trace.records.iter().find_map(|rec| {
                        let s = rec.states.get(&agent)?;
                        (s[best].exp() >= scenario.success_belief).then_some(rec.round)
                    });
                }
                for theta in (0..m).filter(|&x| x != theta_star) {
                    if let Ok(q) = fit::fit_quadratic_decay(trace, agent, theta) {
                        summary.fits.insert(
                            labels[theta].clone(),
                            FitEntry {
                                a: q.a,
                                b: q.b,
                                c: q.c,
                                r_squared: q.r_squared,
                            },
                        );
                    }
                }
            }
            TraceKind::Ratios => {
                let table = PairwiseRatios::from_flat(m, final_state.clone(), rounds)
                    .expect("snapshot has m*m entries");
                summary.final_ratios = Some(
                    (0..m)
                        .flat_map(|a| (0..m).map(move |b| (a, b)))
                        .filter(|&(a, b)| a != b)
                        .map(|(a, b)| (format!("{}>{}", labels[a], labels[b]), table.get(a, b)))
                        .collect(),
                );
                if let Some(theta) = pairwise_decide(&table, scenario.decide_threshold) {
                    summary.decision = Some(labels[theta].clone());
                    summary.decision_round = trace.records.iter().find_map(|rec| {
                        let s = rec.states.get(&agent)?;
                        let tab = PairwiseRatios::from_flat(m, s.clone(), rec.round).ok()?;
                        (pairwise_decide(&tab, scenario.decide_threshold) == Some(theta))
                            .then_some(rec.round)
                    });
                }
                if rounds >= 20 {
                    for theta in (0..m).filter(|&x| x != theta_star) {
                        let series = trace.series(agent, theta_star * m + theta);
                        let negated: Vec<(usize, f64)> =
                            series.iter().map(|&(t, v)| (t, -v)).collect();
                        let (ts, ys) = fit::trailing_half(&negated[1..]);
                        if let Ok(q) = fit::fit_quadratic(&ts, &ys) {
                            summary.fits.insert(
                                labels[theta].clone(),
                                FitEntry {
                                    a: q.a,
                                    b: q.b,
                                    c: q.c,
                                    r_squared: q.r_squared,
                                },
                            );
                        }
                    }
                }
            }
        }
        agents.insert((agent + 1).to_string(), summary);
    }

    let mut flag_totals: BTreeMap<String, u64> = BTreeMap::new();
    for rec in &trace.records {
        for flag in &rec.flags {
            *flag_totals.entry(flag.name.clone()).or_insert(0) += flag.count;
        }
    }

    RunSummary {
        rule: scenario.rule,
        n: scenario.graph.n(),
        f: scenario.f,
        rounds,
        seed,
        theta_star: labels[theta_star].clone(),
        faulty: faulty.iter().map(|&j| j + 1).collect(),
        strategy: scenario.strategy.clone(),
        final_diameter: final_record.diameter,
        flags: flag_totals,
        agents,
        assumption_checks: None,
    }
}
