use super::*;
use crate::signals::{c0, AgentModelFile};
use std::path::PathBuf;

fn informative_model_file(n: usize, m: usize) -> ModelFile {
    // binary signals; agent i's signal-0 probability under hypothesis k is
    // spread so every agent separates every pair
    let agents = (0..n)
        .map(|i| {
            let rows: Vec<Vec<f64>> = (0..2)
                .map(|w| {
                    (0..m)
                        .map(|k| {
                            let p =
                                0.25 + 0.5 * (k as f64 + 1.0) / (m as f64 + 1.0) + 0.01 * i as f64;
                            if w == 0 {
                                p
                            } else {
                                1.0 - p
                            }
                        })
                        .collect()
                })
                .collect();
            AgentModelFile {
                signals: 2,
                likelihoods: rows,
            }
        })
        .collect();
    ModelFile {
        hypotheses: (0..m).map(|k| format!("h{}", k + 1)).collect(),
        agents,
    }
}

fn ring_ff_scenario(n: usize, rounds: usize) -> Scenario {
    let config = ScenarioConfig {
        graph: InlineOr::Inline(GraphFile::from(&Digraph::ring(n))),
        model: InlineOr::Inline(informative_model_file(n, 2)),
        rule: Rule::FfBfl,
        f: 0,
        theta_star: "h1".into(),
        rounds,
        seed: 5,
        adversary: None,
        decide_threshold: 10.0,
        success_belief: 0.99,
        enumeration_cap: None,
        max_one_iter_points: None,
    };
    Scenario::from_config(&config, std::path::Path::new(".")).unwrap()
}

fn k4_bfl_scenario(strategy: StrategySpec, rounds: usize) -> Scenario {
    let config = ScenarioConfig {
        graph: InlineOr::Inline(GraphFile::from(&Digraph::complete(4))),
        model: InlineOr::Inline(informative_model_file(4, 2)),
        rule: Rule::Bfl,
        f: 1,
        theta_star: "h1".into(),
        rounds,
        seed: 5,
        adversary: Some(AdversaryConfig {
            faulty: FaultySelection::Explicit(vec![4]),
            strategy,
        }),
        decide_threshold: 10.0,
        success_belief: 0.99,
        enumeration_cap: None,
        max_one_iter_points: None,
    };
    Scenario::from_config(&config, std::path::Path::new(".")).unwrap()
}

#[test]
fn zero_rounds_records_only_the_uniform_initial_state() {
    let scenario = ring_ff_scenario(3, 0);
    let out = scenario.run().unwrap();
    assert_eq!(out.trace.records.len(), 1);
    assert_eq!(out.trace.rounds(), 0);
    let rec = &out.trace.records[0];
    assert_eq!(rec.diameter, 0.0);
    for state in rec.states.values() {
        for &v in state {
            assert!((v - 0.5f64.ln()).abs() < 1e-12);
        }
    }
    let agent = &out.summary.agents["1"];
    assert_eq!(agent.decision, None);
}

#[test]
fn identical_seeds_give_identical_bytes() {
    // K4 in dimension 2 fails the unique-source gate (two 2-cycles appear
    // after removals), but determinism is a property of the engine alone,
    // so this runs ungated.
    let scenario = k4_bfl_scenario(StrategySpec::SplitBrain { factor: 10.0 }, 15);
    let a = scenario.run_seeded(7).unwrap();
    let b = scenario.run_seeded(7).unwrap();
    assert_eq!(a.trace.to_csv(), b.trace.to_csv());
    assert_eq!(
        serde_json::to_string(&a.summary).unwrap(),
        serde_json::to_string(&b.summary).unwrap()
    );
    let c = scenario.run_seeded(8).unwrap();
    assert_ne!(a.trace.to_csv(), c.trace.to_csv());
}

#[test]
fn ff_trajectories_match_the_matrix_replay() {
    let scenario = ring_ff_scenario(4, 80);
    scenario.validate().unwrap();
    let out = scenario.run().unwrap();
    let replay = MatrixReplay::build(&scenario.graph).unwrap();
    assert!(replay.row_stochastic_defect() < 1e-12);

    // L_t^i = log l_i(s_t|h2) - log l_i(s_t|h1), the wrong-over-true ratio
    let increments: Vec<Vec<f64>> = (1..=80)
        .map(|t| {
            (0..4)
                .map(|i| {
                    let s = out.signals[&i][t - 1];
                    scenario.model.log_likelihood(i, s, 1) - scenario.model.log_likelihood(i, s, 0)
                })
                .collect()
        })
        .collect();
    let psi = replay.replay(&increments);
    #[allow(clippy::needless_range_loop)]
    for t in 1..=80 {
        let rec = &out.trace.records[t];
        for i in 0..4 {
            let state = &rec.states[&i];
            let simulated = state[1] - state[0];
            assert!(
                (simulated - psi[t - 1][i]).abs() < 1e-9,
                "round {t} agent {i}: {simulated} vs {}",
                psi[t - 1][i]
            );
        }
    }
}

#[test]
fn messages_carry_previous_round_state() {
    // synchrony: what an agent sends in round t is exactly its recorded
    // state at round t-1, even though it also updates during round t
    let scenario = k4_bfl_scenario(StrategySpec::Silent, 10);
    let out = scenario
        .run_with(
            5,
            &RunOptions {
                record_messages: true,
            },
        )
        .unwrap();
    assert!(!out.message_log.is_empty());
    for msg in &out.message_log {
        if msg.from == 3 {
            continue; // the faulty agent
        }
        let prev = &out.trace.records[msg.round - 1].states[&msg.from];
        assert_eq!(&msg.payload, prev, "round {} from {}", msg.round, msg.from);
    }
}

#[test]
fn per_round_likelihood_increments_respect_c0() {
    let scenario = k4_bfl_scenario(StrategySpec::Extreme { factor: 10.0 }, 40);
    let out = scenario.run().unwrap();
    let bound = c0(&scenario.model) + 1e-12;
    for (&agent, signals) in &out.signals {
        for &s in signals {
            for a in 0..2 {
                for b in 0..2 {
                    let inc = scenario.model.log_likelihood(agent, s, a)
                        - scenario.model.log_likelihood(agent, s, b);
                    assert!(inc.abs() <= bound);
                }
            }
        }
    }
}

#[test]
fn silent_adversary_raises_default_substitution_flags() {
    let scenario = k4_bfl_scenario(StrategySpec::Silent, 5);
    let out = scenario.run().unwrap();
    let total = out
        .summary
        .flags
        .get("defaults_substituted")
        .copied()
        .unwrap_or(0);
    // three honest receivers substitute one default each round
    assert_eq!(total, 3 * 5);
}

#[test]
fn split_brain_receivers_see_different_values() {
    let scenario = k4_bfl_scenario(StrategySpec::SplitBrain { factor: 10.0 }, 3);
    let out = scenario
        .run_with(
            5,
            &RunOptions {
                record_messages: true,
            },
        )
        .unwrap();
    let round1: Vec<&MessageRecord> = out
        .message_log
        .iter()
        .filter(|m| m.round == 1 && m.from == 3)
        .collect();
    assert!(round1.len() >= 2);
    assert!(
        round1.windows(2).any(|w| w[0].payload != w[1].payload),
        "split-brain sent identical payloads to every receiver"
    );
}

#[test]
fn ff_gate_rejects_disconnected_graphs() {
    let config = ScenarioConfig {
        graph: InlineOr::Inline(GraphFile {
            n: 4,
            edges: vec![[1, 2], [2, 1], [3, 4], [4, 3]],
        }),
        model: InlineOr::Inline(informative_model_file(4, 2)),
        rule: Rule::FfBfl,
        f: 0,
        theta_star: "h1".into(),
        rounds: 10,
        seed: 1,
        adversary: None,
        decide_threshold: 10.0,
        success_belief: 0.99,
        enumeration_cap: None,
        max_one_iter_points: None,
    };
    let scenario = Scenario::from_config(&config, std::path::Path::new(".")).unwrap();
    match scenario.validate() {
        Err(Error::AssumptionFailed { check, .. }) => {
            assert_eq!(check, "strong connectivity");
        }
        other => panic!("expected gate failure, got {other:?}"),
    }
}

#[test]
fn pairwise_gate_rejects_thin_graphs() {
    let config = ScenarioConfig {
        graph: InlineOr::Inline(GraphFile::from(&Digraph::ring(4))),
        model: InlineOr::Inline(informative_model_file(4, 2)),
        rule: Rule::Pairwise,
        f: 1,
        theta_star: "h1".into(),
        rounds: 10,
        seed: 1,
        adversary: Some(AdversaryConfig {
            faulty: FaultySelection::Explicit(vec![2]),
            strategy: StrategySpec::Silent,
        }),
        decide_threshold: 10.0,
        success_belief: 0.99,
        enumeration_cap: None,
        max_one_iter_points: None,
    };
    let scenario = Scenario::from_config(&config, std::path::Path::new(".")).unwrap();
    match scenario.validate() {
        Err(Error::AssumptionFailed { check, .. }) => assert_eq!(check, "trimming degree"),
        other => panic!("expected gate failure, got {other:?}"),
    }
}

#[test]
fn bfl_gate_rejects_topology_violations() {
    // K5 with f = 1 in dimension m = 2 has a two-source reduced graph
    let config = ScenarioConfig {
        graph: InlineOr::Inline(GraphFile::from(&Digraph::complete(5))),
        model: InlineOr::Inline(informative_model_file(5, 2)),
        rule: Rule::Bfl,
        f: 1,
        theta_star: "h1".into(),
        rounds: 10,
        seed: 1,
        adversary: Some(AdversaryConfig {
            faulty: FaultySelection::Spec("random:1".into()),
            strategy: StrategySpec::Fixed { value: 0.0 },
        }),
        decide_threshold: 10.0,
        success_belief: 0.99,
        enumeration_cap: None,
        max_one_iter_points: None,
    };
    let scenario = Scenario::from_config(&config, std::path::Path::new(".")).unwrap();
    match scenario.validate() {
        Err(Error::AssumptionFailed { check, detail }) => {
            assert!(check.contains("unique source"));
            assert!(detail.contains("source_components"));
        }
        other => panic!("expected gate failure, got {other:?}"),
    }
}

#[test]
fn config_rejects_inconsistent_adversaries() {
    let base = std::path::Path::new(".");
    let mut config = ScenarioConfig {
        graph: InlineOr::Inline(GraphFile::from(&Digraph::complete(4))),
        model: InlineOr::Inline(informative_model_file(4, 2)),
        rule: Rule::Bfl,
        f: 1,
        theta_star: "h1".into(),
        rounds: 10,
        seed: 1,
        adversary: Some(AdversaryConfig {
            faulty: FaultySelection::Explicit(vec![1, 2]),
            strategy: StrategySpec::Silent,
        }),
        decide_threshold: 10.0,
        success_belief: 0.99,
        enumeration_cap: None,
        max_one_iter_points: None,
    };
    // two faulty agents exceed f = 1
    assert!(Scenario::from_config(&config, base).is_err());

    config.adversary = Some(AdversaryConfig {
        faulty: FaultySelection::Explicit(vec![9]),
        strategy: StrategySpec::Silent,
    });
    assert!(Scenario::from_config(&config, base).is_err());

    config.adversary = None;
    config.rule = Rule::FfBfl;
    // ff_bfl demands f = 0
    assert!(Scenario::from_config(&config, base).is_err());

    config.f = 0;
    config.theta_star = "nope".into();
    assert!(Scenario::from_config(&config, base).is_err());
}

#[test]
fn scenario_files_resolve_relative_paths() {
    let dir = std::env::temp_dir().join(format!("byzlearn-sim-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let graph_path = dir.join("graph.json");
    std::fs::write(
        &graph_path,
        serde_json::to_string(&GraphFile::from(&Digraph::ring(3))).unwrap(),
    )
    .unwrap();
    let model_path = dir.join("model.json");
    std::fs::write(
        &model_path,
        serde_json::to_string(&informative_model_file(3, 2)).unwrap(),
    )
    .unwrap();
    let scenario_path: PathBuf = dir.join("scenario.json");
    std::fs::write(
        &scenario_path,
        r#"{
            "graph": "graph.json",
            "model": "model.json",
            "rule": "ff_bfl",
            "theta_star": "h2",
            "rounds": 4,
            "seed": 3
        }"#,
    )
    .unwrap();
    let scenario = Scenario::load(&scenario_path).unwrap();
    assert_eq!(scenario.graph.n(), 3);
    assert_eq!(scenario.hypotheses.true_index(), 1);
    assert_eq!(scenario.rounds, 4);
    scenario.validate().unwrap();
    scenario.run().unwrap();
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn honest_only_pairwise_tables_stay_antisymmetric() {
    // trimming removes mirrored entries when every sender is honest and
    // antisymmetric, so r(a, b) = -r(b, a) survives the whole run; this
    // breaks as soon as any sender lies per-pair-inconsistently
    let config = ScenarioConfig {
        graph: InlineOr::Inline(GraphFile::from(&Digraph::complete(4))),
        model: InlineOr::Inline(informative_model_file(4, 3)),
        rule: Rule::Pairwise,
        f: 1, // trimming active, but the faulty set is empty
        theta_star: "h1".into(),
        rounds: 30,
        seed: 9,
        adversary: None,
        decide_threshold: 10.0,
        success_belief: 0.99,
        enumeration_cap: None,
        max_one_iter_points: None,
    };
    let scenario = Scenario::from_config(&config, std::path::Path::new(".")).unwrap();
    let out = scenario.run().unwrap();
    let m = 3;
    for rec in &out.trace.records {
        for state in rec.states.values() {
            for a in 0..m {
                for b in 0..m {
                    assert!(
                        (state[a * m + b] + state[b * m + a]).abs() < 1e-12,
                        "round {}: r({a},{b}) = {}, r({b},{a}) = {}",
                        rec.round,
                        state[a * m + b],
                        state[b * m + a]
                    );
                }
            }
        }
    }
}

#[test]
fn ff_run_concentrates_on_the_true_state() {
    let scenario = ring_ff_scenario(4, 60);
    scenario.validate().unwrap();
    let out = scenario.run().unwrap();
    for (id, agent) in &out.summary.agents {
        let belief = agent.belief_true.unwrap();
        assert!(belief > 0.99, "agent {id} ended at {belief}");
        assert_eq!(agent.decision.as_deref(), Some("h1"));
        assert!(agent.decision_round.is_some());
        for fit in agent.fits.values() {
            assert!(fit.a < 0.0, "agent {id} t^2 coefficient {}", fit.a);
        }
    }
}
