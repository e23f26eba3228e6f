//! Deterministic synchronous round engine: scenario configuration and
//! validation gates, the round loop, trace recording, convergence-rate
//! fits, and failure-free matrix replay diagnostics.

mod engine;
mod fit;
mod replay;
mod trace;

pub use engine::{AgentSummary, FitEntry, MessageRecord, RunOptions, RunOutput, RunSummary};
pub use fit::{fit_quadratic, fit_quadratic_decay, trailing_half, QuadFit};
pub use replay::MatrixReplay;
pub use trace::{diameter_of, RoundRecord, RoundTrace, TraceFlag, TraceKind, TRACE_HEADER};

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::adversary::StrategySpec;
use crate::error::{Error, Result};
use crate::graph::{
    check_identifiability_with, check_topology_with, Digraph, GraphFile, IdentifiabilityReport,
    TopologyReport, DEFAULT_ENUMERATION_CAP, KL_ZERO_TOLERANCE,
};
use crate::signals::{HypothesisSet, ModelFile, SignalModel};

/// Which learning rule a scenario runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    Bfl,
    FfBfl,
    Pairwise,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::Bfl => "bfl",
            Rule::FfBfl => "ff_bfl",
            Rule::Pairwise => "pairwise",
        }
    }
}

/// A value given inline or as a path to a JSON file, resolved relative to
/// the scenario file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InlineOr<T> {
    Path(String),
    Inline(T),
}

impl<T: serde::de::DeserializeOwned + Clone> InlineOr<T> {
    fn resolve(&self, base: &Path) -> Result<T> {
        match self {
            InlineOr::Inline(v) => Ok(v.clone()),
            InlineOr::Path(p) => {
                let full = base.join(p);
                let text = std::fs::read_to_string(&full).map_err(|e| {
                    Error::InvalidConfig(format!("cannot read {}: {e}", full.display()))
                })?;
                Ok(serde_json::from_str(&text)?)
            }
        }
    }
}

/// Faulty-set choice: explicit 1-based agent ids, or `"random:k"` to draw
/// k agents from the run seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FaultySelection {
    Explicit(Vec<usize>),
    Spec(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdversaryConfig {
    pub faulty: FaultySelection,
    pub strategy: StrategySpec,
}

fn default_decide_threshold() -> f64 {
    10.0
}

fn default_success_belief() -> f64 {
    0.99
}

/// On-disk scenario format.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub graph: InlineOr<GraphFile>,
    pub model: InlineOr<ModelFile>,
    pub rule: Rule,
    #[serde(default)]
    pub f: usize,
    pub theta_star: String,
    pub rounds: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub adversary: Option<AdversaryConfig>,
    /// Pairwise decision threshold in nats.
    #[serde(default = "default_decide_threshold")]
    pub decide_threshold: f64,
    /// Belief level counted as a success for belief-based rules.
    #[serde(default = "default_success_belief")]
    pub success_belief: f64,
    #[serde(default)]
    pub enumeration_cap: Option<u64>,
    #[serde(default)]
    pub max_one_iter_points: Option<usize>,
}

#[derive(Debug, Clone)]
pub(crate) enum ResolvedFaulty {
    None,
    Explicit(BTreeSet<usize>),
    RandomCount(usize),
}

/// A loaded, cross-checked scenario ready to validate and run.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub graph: Digraph,
    pub model: SignalModel,
    pub hypotheses: HypothesisSet,
    pub rule: Rule,
    pub f: usize,
    pub rounds: usize,
    pub default_seed: u64,
    pub decide_threshold: f64,
    pub success_belief: f64,
    pub enumeration_cap: u64,
    pub max_one_iter_points: usize,
    pub strategy: Option<StrategySpec>,
    pub(crate) faulty_selection: ResolvedFaulty,
    pub(crate) mimic_target: Option<usize>,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Scenario> {
        let text = std::fs::read_to_string(path)?;
        let config: ScenarioConfig = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Scenario::from_config(&config, base)
    }

    pub fn from_config(config: &ScenarioConfig, base: &Path) -> Result<Scenario> {
        let graph = config.graph.resolve(base)?.to_digraph()?;
        let model = SignalModel::from_file(&config.model.resolve(base)?)?;
        if model.agent_count() != graph.n() {
            return Err(Error::InvalidConfig(format!(
                "model has {} agents but graph has {} nodes",
                model.agent_count(),
                graph.n()
            )));
        }
        let hypotheses = model.hypothesis_set(&config.theta_star)?;

        let (faulty_selection, strategy) = match &config.adversary {
            None => (ResolvedFaulty::None, None),
            Some(adv) => {
                let selection = match &adv.faulty {
                    FaultySelection::Explicit(ids) => {
                        let mut set = BTreeSet::new();
                        for &id in ids {
                            if id == 0 || id > graph.n() {
                                return Err(Error::InvalidConfig(format!(
                                    "faulty agent id {id} out of range (ids are 1-based)"
                                )));
                            }
                            if !set.insert(id - 1) {
                                return Err(Error::InvalidConfig(format!(
                                    "duplicate faulty agent id {id}"
                                )));
                            }
                        }
                        if set.len() > config.f {
                            return Err(Error::InvalidConfig(format!(
                                "{} faulty agents exceed the fault budget f = {}",
                                set.len(),
                                config.f
                            )));
                        }
                        ResolvedFaulty::Explicit(set)
                    }
                    FaultySelection::Spec(s) => {
                        let count = s
                            .strip_prefix("random:")
                            .and_then(|k| k.parse::<usize>().ok())
                            .ok_or_else(|| {
                                Error::InvalidConfig(format!(
                                    "faulty spec {s:?} is not \"random:k\""
                                ))
                            })?;
                        if count > config.f {
                            return Err(Error::InvalidConfig(format!(
                                "random faulty count {count} exceeds the fault budget f = {}",
                                config.f
                            )));
                        }
                        ResolvedFaulty::RandomCount(count)
                    }
                };
                (selection, Some(adv.strategy.clone()))
            }
        };

        let mimic_target = match &strategy {
            Some(StrategySpec::MimicFlipped { target }) => {
                Some(hypotheses.index_of(target).ok_or_else(|| {
                    Error::InvalidConfig(format!(
                        "mimic_flipped target {target:?} is not a hypothesis"
                    ))
                })?)
            }
            _ => None,
        };

        if config.rule == Rule::FfBfl {
            if config.f != 0 {
                return Err(Error::InvalidConfig("rule ff_bfl requires f = 0".into()));
            }
            if !matches!(faulty_selection, ResolvedFaulty::None) {
                return Err(Error::InvalidConfig(
                    "rule ff_bfl does not admit an adversary".into(),
                ));
            }
        }

        Ok(Scenario {
            graph,
            model,
            hypotheses,
            rule: config.rule,
            f: config.f,
            rounds: config.rounds,
            default_seed: config.seed,
            decide_threshold: config.decide_threshold,
            success_belief: config.success_belief,
            enumeration_cap: config.enumeration_cap.unwrap_or(DEFAULT_ENUMERATION_CAP),
            max_one_iter_points: config
                .max_one_iter_points
                .unwrap_or(crate::consensus::DEFAULT_MAX_POINTS),
            strategy,
            faulty_selection,
            mimic_target,
        })
    }

    /// Reduced-graph dimension the rule's assumptions quantify over.
    pub fn consensus_dimension(&self) -> usize {
        match self.rule {
            Rule::Bfl => self.hypotheses.len(),
            Rule::FfBfl => 1,
            Rule::Pairwise => 1,
        }
    }

    /// Run the rule's assumption gates. An `Err(AssumptionFailed)` means
    /// the scenario is not covered by the convergence theory; callers may
    /// run anyway only via an explicit override.
    pub fn validate(&self) -> Result<ValidationReport> {
        let (g, f) = (&self.graph, self.f);
        let m_dim = self.consensus_dimension();

        match self.rule {
            Rule::Bfl => {
                let need = (self.hypotheses.len() + 1) * f + 1;
                for i in 0..g.n() {
                    let pool = g.incoming(i).len() + 1;
                    if pool < need {
                        return Err(Error::AssumptionFailed {
                            check: "consensus degree".into(),
                            detail: format!(
                                "agent {} has a pool of {pool} values; One-Iter needs {need}",
                                i + 1
                            ),
                        });
                    }
                    if pool > self.max_one_iter_points {
                        return Err(Error::AssumptionFailed {
                            check: "subset-loop guard".into(),
                            detail: format!(
                                "agent {} has a pool of {pool} values, above the guard {}",
                                i + 1,
                                self.max_one_iter_points
                            ),
                        });
                    }
                }
            }
            Rule::FfBfl => {
                if !g.is_strongly_connected() {
                    return Err(Error::AssumptionFailed {
                        check: "strong connectivity".into(),
                        detail: "the failure-free rule requires a strongly connected network"
                            .into(),
                    });
                }
            }
            Rule::Pairwise => {
                for i in 0..g.n() {
                    let deg = g.incoming(i).len();
                    if deg < 2 * f + 1 {
                        return Err(Error::AssumptionFailed {
                            check: "trimming degree".into(),
                            detail: format!(
                                "agent {} has {deg} incoming neighbors; trimming needs {}",
                                i + 1,
                                2 * f + 1
                            ),
                        });
                    }
                }
            }
        }

        let topology = check_topology_with(g, f, m_dim, self.enumeration_cap)?;
        if !topology.assumption_holds {
            let detail = topology
                .witness
                .as_ref()
                .map(|w| w.to_json().to_string())
                .unwrap_or_default();
            return Err(Error::AssumptionFailed {
                check: format!("unique source component (dimension {m_dim})"),
                detail,
            });
        }
        let identifiability = check_identifiability_with(
            g,
            f,
            m_dim,
            &self.model,
            self.hypotheses.true_index(),
            self.enumeration_cap,
            KL_ZERO_TOLERANCE,
        )?;
        if !identifiability.holds {
            let detail = identifiability
                .worst
                .as_ref()
                .map(|w| {
                    format!(
                        "in the reduced graph with faulty set {:?} and {} kept edges, \
                         source component {:?} cannot separate {} from {} (KL sum {})",
                        w.reduced.faulty().iter().map(|i| i + 1).collect::<Vec<_>>(),
                        w.reduced.edges().len(),
                        w.source.iter().map(|i| i + 1).collect::<Vec<_>>(),
                        self.hypotheses.label(self.hypotheses.true_index()),
                        self.hypotheses.label(w.theta),
                        w.kl_sum
                    )
                })
                .unwrap_or_default();
            return Err(Error::AssumptionFailed {
                check: "identifiability".into(),
                detail,
            });
        }
        Ok(ValidationReport {
            topology,
            identifiability,
        })
    }

    /// Run with the scenario's own seed.
    pub fn run(&self) -> Result<RunOutput> {
        self.run_seeded(self.default_seed)
    }

    pub fn run_seeded(&self, seed: u64) -> Result<RunOutput> {
        engine::run(self, seed, &RunOptions::default())
    }

    pub fn run_with(&self, seed: u64, options: &RunOptions) -> Result<RunOutput> {
        engine::run(self, seed, options)
    }
}

/// The assumption-check evidence produced at scenario load.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub topology: TopologyReport,
    pub identifiability: IdentifiabilityReport,
}

impl ValidationReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "topology": self.topology.to_json(),
            "identifiability": self.identifiability.to_json(),
        })
    }
}

#[cfg(test)]
mod tests;
