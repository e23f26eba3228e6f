//! Full-knowledge Byzantine strategies.
//!
//! A faulty agent sees the whole system — topology, every honest agent's
//! start-of-round state, signal histories, likelihood models — and emits
//! one arbitrary message per outgoing edge, possibly a different one per
//! receiver. Strategies are pure functions of (spec, view, rng); the
//! mimic-flipped strategy's evolving internal state is maintained by the
//! engine and exposed through the view.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::Digraph;
use crate::signals::SignalModel;

fn default_factor() -> f64 {
    10.0
}

fn default_scale() -> f64 {
    1.0
}

/// Which lies a faulty agent tells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StrategySpec {
    /// Send nothing; receivers substitute their default value.
    Silent,
    /// The same constant on every edge, every round.
    Fixed { value: f64 },
    /// Independent per-edge, per-coordinate noise spanning `scale` times
    /// the honest value range around its midpoint.
    Random {
        #[serde(default = "default_scale")]
        scale: f64,
    },
    /// Values pushed outside the honest range by `factor` times its width,
    /// alternating sides by round parity.
    Extreme {
        #[serde(default = "default_factor")]
        factor: f64,
    },
    /// Opposite extremes to different receivers in the same round.
    SplitBrain {
        #[serde(default = "default_factor")]
        factor: f64,
    },
    /// Run the honest protocol but with the likelihood columns of the true
    /// hypothesis and `target` swapped.
    MimicFlipped { target: String },
}

/// Read-only snapshot of the system at the start of a round, before any
/// honest update.
#[derive(Debug, Clone, Copy)]
pub struct SystemView<'a> {
    pub round: usize,
    pub graph: &'a Digraph,
    pub faulty: &'a BTreeSet<usize>,
    /// Honest agents' consensus-carried states from the end of round t-1.
    pub honest_states: &'a BTreeMap<usize, Vec<f64>>,
    /// Engine-maintained states of mimic-flipped faulty agents.
    pub mimic_states: &'a BTreeMap<usize, Vec<f64>>,
    pub model: Option<&'a SignalModel>,
    pub signal_histories: Option<&'a BTreeMap<usize, Vec<usize>>>,
}

impl<'a> SystemView<'a> {
    /// Per-coordinate (low, high) over honest states; empty when no honest
    /// state exists.
    fn honest_range(&self) -> (Vec<f64>, Vec<f64>) {
        let mut iter = self.honest_states.values();
        let Some(first) = iter.next() else {
            return (Vec::new(), Vec::new());
        };
        let mut lo = first.clone();
        let mut hi = first.clone();
        for v in iter {
            for c in 0..lo.len() {
                lo[c] = lo[c].min(v[c]);
                hi[c] = hi[c].max(v[c]);
            }
        }
        (lo, hi)
    }
}

/// Messages for every outgoing edge of faulty agent `agent`: receiver id to
/// payload. Absent receivers model silence.
pub fn craft_messages(
    strategy: &StrategySpec,
    agent: usize,
    view: &SystemView,
    rng: &mut ChaCha8Rng,
) -> BTreeMap<usize, Vec<f64>> {
    let receivers: Vec<usize> = view.graph.outgoing(agent).to_vec();
    let (lo, hi) = view.honest_range();
    let dim = lo.len();
    let mut out = BTreeMap::new();
    match strategy {
        StrategySpec::Silent => {}
        StrategySpec::Fixed { value } => {
            for r in receivers {
                out.insert(r, vec![*value; dim.max(1)]);
            }
        }
        StrategySpec::Random { scale } => {
            for r in receivers {
                let payload: Vec<f64> = lo
                    .iter()
                    .zip(&hi)
                    .map(|(&lo_c, &hi_c)| {
                        let mid = (lo_c + hi_c) / 2.0;
                        let half = ((hi_c - lo_c) / 2.0).max(0.5);
                        rng.gen_range(mid - scale * half..=mid + scale * half)
                    })
                    .collect();
                out.insert(r, payload);
            }
        }
        StrategySpec::Extreme { factor } => {
            let payload: Vec<f64> = lo
                .iter()
                .zip(&hi)
                .map(|(&lo_c, &hi_c)| {
                    let width = (hi_c - lo_c).max(1.0);
                    if view.round.is_multiple_of(2) {
                        hi_c + factor * width
                    } else {
                        lo_c - factor * width
                    }
                })
                .collect();
            for r in receivers {
                out.insert(r, payload.clone());
            }
        }
        StrategySpec::SplitBrain { factor } => {
            for (pos, r) in receivers.into_iter().enumerate() {
                let payload: Vec<f64> = (0..dim)
                    .map(|c| {
                        let k = factor * (hi[c] - lo[c]).max(1.0);
                        if pos % 2 == 0 {
                            -k
                        } else {
                            k
                        }
                    })
                    .collect();
                out.insert(r, payload);
            }
        }
        StrategySpec::MimicFlipped { .. } => {
            // broadcast the engine-maintained flipped-protocol state; an
            // absent state degenerates to silence
            if let Some(state) = view.mimic_states.get(&agent) {
                for r in receivers {
                    out.insert(r, state.clone());
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Purpose};

    fn small_view<'a>(
        graph: &'a Digraph,
        faulty: &'a BTreeSet<usize>,
        honest: &'a BTreeMap<usize, Vec<f64>>,
        mimic: &'a BTreeMap<usize, Vec<f64>>,
        round: usize,
    ) -> SystemView<'a> {
        SystemView {
            round,
            graph,
            faulty,
            honest_states: honest,
            mimic_states: mimic,
            model: None,
            signal_histories: None,
        }
    }

    #[test]
    fn silent_sends_nothing() {
        let g = Digraph::complete(3);
        let faulty: BTreeSet<usize> = [2].into();
        let honest: BTreeMap<usize, Vec<f64>> = [(0, vec![1.0]), (1, vec![2.0])].into();
        let mimic = BTreeMap::new();
        let view = small_view(&g, &faulty, &honest, &mimic, 1);
        let mut rng = substream(1, 2, 1, Purpose::Adversary);
        assert!(craft_messages(&StrategySpec::Silent, 2, &view, &mut rng).is_empty());
    }

    #[test]
    fn fixed_sends_the_constant_everywhere() {
        let g = Digraph::complete(3);
        let faulty: BTreeSet<usize> = [2].into();
        let honest: BTreeMap<usize, Vec<f64>> = [(0, vec![1.0, 0.0]), (1, vec![2.0, 1.0])].into();
        let mimic = BTreeMap::new();
        let view = small_view(&g, &faulty, &honest, &mimic, 1);
        let mut rng = substream(1, 2, 1, Purpose::Adversary);
        let msgs = craft_messages(&StrategySpec::Fixed { value: 42.0 }, 2, &view, &mut rng);
        assert_eq!(msgs.len(), 2);
        for (_, payload) in msgs {
            assert_eq!(payload, vec![42.0, 42.0]);
        }
    }

    #[test]
    fn split_brain_differs_per_receiver() {
        let g = Digraph::complete(3);
        let faulty: BTreeSet<usize> = [2].into();
        let honest: BTreeMap<usize, Vec<f64>> = [(0, vec![0.0]), (1, vec![1.0])].into();
        let mimic = BTreeMap::new();
        let view = small_view(&g, &faulty, &honest, &mimic, 1);
        let mut rng = substream(1, 2, 1, Purpose::Adversary);
        let msgs = craft_messages(
            &StrategySpec::SplitBrain { factor: 10.0 },
            2,
            &view,
            &mut rng,
        );
        assert_eq!(msgs[&0], vec![-10.0]);
        assert_eq!(msgs[&1], vec![10.0]);
    }

    #[test]
    fn extreme_leaves_the_honest_range() {
        let g = Digraph::complete(3);
        let faulty: BTreeSet<usize> = [2].into();
        let honest: BTreeMap<usize, Vec<f64>> = [(0, vec![-1.0]), (1, vec![3.0])].into();
        let mimic = BTreeMap::new();
        for round in 1..=2 {
            let view = small_view(&g, &faulty, &honest, &mimic, round);
            let mut rng = substream(1, 2, round, Purpose::Adversary);
            let msgs = craft_messages(&StrategySpec::Extreme { factor: 2.0 }, 2, &view, &mut rng);
            for (_, payload) in msgs {
                assert!(payload[0] < -1.0 || payload[0] > 3.0);
            }
        }
    }

    #[test]
    fn strategies_are_deterministic_and_do_not_mutate_the_view() {
        let g = Digraph::complete(4);
        let faulty: BTreeSet<usize> = [3].into();
        let honest: BTreeMap<usize, Vec<f64>> = [
            (0, vec![0.5, -2.0]),
            (1, vec![1.5, 0.0]),
            (2, vec![-0.5, 4.0]),
        ]
        .into();
        let mimic = BTreeMap::new();
        let view = small_view(&g, &faulty, &honest, &mimic, 5);
        let before = serde_json::to_string(&honest).unwrap();
        let run = || {
            let mut rng = substream(11, 3, 5, Purpose::Adversary);
            craft_messages(&StrategySpec::Random { scale: 2.0 }, 3, &view, &mut rng)
        };
        let a = run();
        let b = run();
        assert_eq!(a, b);
        assert_eq!(serde_json::to_string(&honest).unwrap(), before);
    }

    #[test]
    fn strategy_specs_parse_from_config_json() {
        let spec: StrategySpec =
            serde_json::from_str(r#"{"kind": "split_brain", "factor": 3.0}"#).unwrap();
        assert_eq!(spec, StrategySpec::SplitBrain { factor: 3.0 });
        let spec: StrategySpec = serde_json::from_str(r#"{"kind": "extreme"}"#).unwrap();
        assert_eq!(spec, StrategySpec::Extreme { factor: 10.0 });
        let spec: StrategySpec =
            serde_json::from_str(r#"{"kind": "mimic_flipped", "target": "h2"}"#).unwrap();
        assert_eq!(
            spec,
            StrategySpec::MimicFlipped {
                target: "h2".into()
            }
        );
        assert!(serde_json::from_str::<StrategySpec>(r#"{"kind": "nope"}"#).is_err());
    }
}
