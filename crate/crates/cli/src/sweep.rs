use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{bail, Context, Result};
use byzlearn::sim::{RunSummary, Scenario};
use byzlearn::Error;
use clap::Args;
use log::info;

use crate::Outcome;

#[derive(Args)]
pub struct SweepArgs {
    /// Scenario file (JSON).
    #[arg(long)]
    pub scenario: PathBuf,
    /// Comma-separated seed list, e.g. 1,2,3.
    #[arg(long)]
    pub seeds: String,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Output directory (per-seed subdirectories plus aggregate.json).
    #[arg(long)]
    pub out: PathBuf,
}

struct SeedResult {
    seed: u64,
    summary: Option<RunSummary>,
    error: Option<String>,
}

pub fn execute(args: SweepArgs) -> Result<Outcome> {
    let seeds: Vec<u64> = args
        .seeds
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<u64>()
                .context("seed list must be integers")
        })
        .collect::<Result<_>>()?;
    if seeds.is_empty() {
        bail!("usage: --seeds requires at least one seed (e.g. --seeds 1,2,3)");
    }
    let jobs = args.jobs.max(1);

    let scenario = Scenario::load(&args.scenario)
        .with_context(|| format!("loading scenario {}", args.scenario.display()))?;
    let validation = match scenario.validate() {
        Ok(v) => v,
        Err(Error::AssumptionFailed { check, detail }) => {
            eprintln!("assumption check failed ({check}): {detail}");
            return Ok(Outcome::CheckFailed);
        }
        Err(other) => return Err(other.into()),
    };
    info!(
        "gates hold; sweeping {} seeds with {jobs} jobs",
        seeds.len()
    );
    std::fs::create_dir_all(&args.out)?;

    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<SeedResult>> = Mutex::new(Vec::new());
    let validation_json = validation.to_json();
    std::thread::scope(|scope| {
        for _ in 0..jobs.min(seeds.len()) {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::SeqCst);
                let Some(&seed) = seeds.get(idx) else {
                    break;
                };
                let result = match scenario.run_seeded(seed) {
                    Ok(mut output) => {
                        output.summary.assumption_checks = Some(validation_json.clone());
                        let dir = args.out.join(format!("seed-{seed}"));
                        let io = std::fs::create_dir_all(&dir)
                            .and_then(|_| {
                                std::fs::write(dir.join("trace.csv"), output.trace.to_csv())
                            })
                            .and_then(|_| {
                                std::fs::write(
                                    dir.join("summary.json"),
                                    serde_json::to_string_pretty(&output.summary)
                                        .expect("summary serializes"),
                                )
                            });
                        match io {
                            Ok(()) => SeedResult {
                                seed,
                                summary: Some(output.summary),
                                error: None,
                            },
                            Err(e) => SeedResult {
                                seed,
                                summary: None,
                                error: Some(format!("writing outputs: {e}")),
                            },
                        }
                    }
                    Err(e) => SeedResult {
                        seed,
                        summary: None,
                        error: Some(e.to_string()),
                    },
                };
                results.lock().expect("no poisoned lock").push(result);
            });
        }
    });

    let mut results = results.into_inner().expect("no poisoned lock");
    results.sort_by_key(|r| seeds.iter().position(|&s| s == r.seed));

    let theta_star = &results
        .iter()
        .find_map(|r| r.summary.as_ref())
        .map(|s| s.theta_star.clone())
        .unwrap_or_default();
    let mut successes = 0usize;
    let mut failures = 0usize;
    let mut decision_rounds: Vec<usize> = Vec::new();
    let mut fit_as: Vec<f64> = Vec::new();
    let mut per_seed = BTreeMap::new();
    for r in &results {
        match (&r.summary, &r.error) {
            (Some(summary), _) => {
                let all_decided = summary
                    .agents
                    .values()
                    .all(|a| a.decision.as_deref() == Some(theta_star));
                if all_decided {
                    successes += 1;
                    if let Some(worst) = summary
                        .agents
                        .values()
                        .map(|a| a.decision_round.unwrap_or(summary.rounds))
                        .max()
                    {
                        decision_rounds.push(worst);
                    }
                }
                fit_as.extend(
                    summary
                        .agents
                        .values()
                        .flat_map(|a| a.fits.values().map(|f| f.a)),
                );
                per_seed.insert(
                    r.seed.to_string(),
                    serde_json::json!({
                        "status": "ok",
                        "success": all_decided,
                        "decision_round": summary
                            .agents
                            .values()
                            .map(|a| a.decision_round)
                            .collect::<Vec<_>>(),
                    }),
                );
            }
            (None, Some(err)) => {
                failures += 1;
                per_seed.insert(
                    r.seed.to_string(),
                    serde_json::json!({ "status": "error", "error": err }),
                );
            }
            (None, None) => unreachable!("a result has a summary or an error"),
        }
    }

    decision_rounds.sort_unstable();
    fit_as.sort_by(f64::total_cmp);
    let aggregate = serde_json::json!({
        "scenario": args.scenario.display().to_string(),
        "seeds": seeds,
        "success_fraction": successes as f64 / seeds.len() as f64,
        "median_decision_round": median_usize(&decision_rounds),
        "fit_t2_coefficient": distribution(&fit_as),
        "errors": failures,
        "per_seed": per_seed,
        "assumption_checks": validation_json,
    });
    let aggregate_path = args.out.join("aggregate.json");
    std::fs::write(&aggregate_path, serde_json::to_string_pretty(&aggregate)?)?;
    println!(
        "swept {} seeds: {} succeeded, {} errored; success fraction {:.3}; wrote {}",
        seeds.len(),
        successes,
        failures,
        successes as f64 / seeds.len() as f64,
        aggregate_path.display()
    );
    Ok(if failures == 0 {
        Outcome::Success
    } else {
        Outcome::CheckFailed
    })
}

fn median_usize(sorted: &[usize]) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let mid = sorted.len() / 2;
    Some(if sorted.len() % 2 == 1 {
        sorted[mid] as f64
    } else {
        (sorted[mid - 1] + sorted[mid]) as f64 / 2.0
    })
}

fn distribution(sorted: &[f64]) -> serde_json::Value {
    if sorted.is_empty() {
        return serde_json::Value::Null;
    }
    let mid = sorted.len() / 2;
    let median = if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    };
    serde_json::json!({
        "min": sorted[0],
        "median": median,
        "max": sorted[sorted.len() - 1],
        "count": sorted.len(),
    })
}
