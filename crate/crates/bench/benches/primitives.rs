//! Benchmarks for the hot paths: Tverberg points and the One-Iter subset
//! loop (they dominate BFL rounds), scalar trimming, reduced-graph
//! checking, and a whole failure-free scenario.

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use byzlearn::consensus::{one_iter, trimmed_scalar_round, tverberg_point, ReceivedMultiset};
use byzlearn::graph::{check_topology_with, Digraph, GraphFile};
use byzlearn::signals::{c0, AgentModelFile, ModelFile};
use byzlearn::sim::{InlineOr, Rule, Scenario, ScenarioConfig};

fn random_points(m: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..m).map(|_| rng.gen_range(-10.0..10.0)).collect())
        .collect()
}

fn bench_tverberg(c: &mut Criterion) {
    let mut group = c.benchmark_group("tverberg_point");
    for &(m, f) in &[(1usize, 1usize), (1, 2), (2, 1)] {
        let points = random_points(m, (m + 1) * f + 1, 11);
        group.bench_function(format!("m{m}_f{f}"), |b| {
            b.iter(|| tverberg_point(black_box(&points), f).unwrap())
        });
    }
    group.finish();
}

fn bench_one_iter(c: &mut Criterion) {
    // a K6 BFL round at one agent: pool of 6 two-dimensional log-beliefs
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let own: Vec<f64> = (0..2).map(|_| rng.gen_range(-3.0..0.0)).collect();
    let entries: Vec<(usize, Vec<f64>)> = (1..=5)
        .map(|s| (s, (0..2).map(|_| rng.gen_range(-3.0..0.0)).collect()))
        .collect();
    let received = ReceivedMultiset::new(entries);
    c.bench_function("one_iter_k6_m2_f1", |b| {
        b.iter(|| one_iter(black_box(&own), black_box(&received), 1).unwrap())
    });
}

fn bench_trimmed(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let entries: Vec<(usize, f64)> = (1..=9).map(|s| (s, rng.gen_range(-5.0..5.0))).collect();
    let received = ReceivedMultiset::new(entries);
    c.bench_function("trimmed_scalar_round_9_f2", |b| {
        b.iter(|| trimmed_scalar_round(black_box(0.3), black_box(&received), 2).unwrap())
    });
}

fn bench_check_topology(c: &mut Criterion) {
    let mut group = c.benchmark_group("check_topology");
    group.bench_function("k4_f1_m1", |b| {
        let g = Digraph::complete(4);
        b.iter(|| check_topology_with(black_box(&g), 1, 1, 1_000_000).unwrap())
    });
    group.bench_function("k5_f1_m1", |b| {
        let g = Digraph::complete(5);
        b.iter(|| check_topology_with(black_box(&g), 1, 1, 1_000_000).unwrap())
    });
    group.sample_size(10);
    group.bench_function("k5_f1_m2", |b| {
        let g = Digraph::complete(5);
        b.iter(|| check_topology_with(black_box(&g), 1, 2, 1_000_000).unwrap())
    });
    group.finish();
}

fn informative_model_file(n: usize, m: usize) -> ModelFile {
    let agents = (0..n)
        .map(|i| {
            let col: Vec<f64> = (0..m)
                .map(|k| 0.15 + 0.7 * k as f64 / (m as f64 - 1.0) + 0.01 * i as f64)
                .collect();
            AgentModelFile {
                signals: 2,
                likelihoods: vec![col.clone(), col.iter().map(|p| 1.0 - p).collect()],
            }
        })
        .collect();
    ModelFile {
        hypotheses: (0..m).map(|k| format!("h{}", k + 1)).collect(),
        agents,
    }
}

fn bench_signals(c: &mut Criterion) {
    let model = byzlearn::signals::SignalModel::from_file(&informative_model_file(6, 3)).unwrap();
    c.bench_function("c0_6_agents_m3", |b| b.iter(|| c0(black_box(&model))));
}

fn bench_ff_scenario(c: &mut Criterion) {
    let mut edges = Vec::new();
    for i in 0..6usize {
        edges.push((i, (i + 1) % 6));
        edges.push((i, (i + 2) % 6));
    }
    let graph = Digraph::new(6, &edges).unwrap();
    let config = ScenarioConfig {
        graph: InlineOr::Inline(GraphFile::from(&graph)),
        model: InlineOr::Inline(informative_model_file(6, 3)),
        rule: Rule::FfBfl,
        f: 0,
        theta_star: "h1".into(),
        rounds: 50,
        seed: 0,
        adversary: None,
        decide_threshold: 10.0,
        success_belief: 0.99,
        enumeration_cap: None,
        max_one_iter_points: None,
    };
    let scenario = Scenario::from_config(&config, std::path::Path::new(".")).unwrap();
    c.bench_function("ff_bfl_run_n6_m3_t50", |b| {
        b.iter(|| scenario.run_seeded(black_box(1)).unwrap())
    });
}

criterion_group!(
    benches,
    bench_tverberg,
    bench_one_iter,
    bench_trimmed,
    bench_check_topology,
    bench_signals,
    bench_ff_scenario
);
criterion_main!(benches);
