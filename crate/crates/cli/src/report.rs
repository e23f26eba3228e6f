use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use byzlearn::learning::{pairwise_decide, PairwiseRatios};
use byzlearn::sim::{fit_quadratic, trailing_half, RoundTrace, TraceKind};
use clap::Args;

use crate::Outcome;

#[derive(Args)]
pub struct ReportArgs {
    /// Trace CSV produced by `run` or `sweep`.
    #[arg(long)]
    pub trace: PathBuf,
    /// Write gnuplot-compatible per-agent trajectory files here.
    #[arg(long)]
    pub plots: Option<PathBuf>,
    /// Decision threshold (nats) used to name the winner on ratio traces.
    #[arg(long, default_value_t = 10.0)]
    pub threshold: f64,
}

pub fn execute(args: ReportArgs) -> Result<Outcome> {
    let text = std::fs::read_to_string(&args.trace)
        .with_context(|| format!("reading {}", args.trace.display()))?;
    if text.trim().is_empty() {
        bail!("{} is empty", args.trace.display());
    }
    let trace = RoundTrace::from_csv(&text)?;
    let rounds = trace.rounds();
    let agents = trace.agents();
    let m = trace.hypotheses.len();

    println!("trace: {}", args.trace.display());
    println!(
        "  kind: {}",
        match trace.kind {
            TraceKind::Beliefs => "log-beliefs",
            TraceKind::Ratios => "pairwise ratios",
        }
    );
    println!("  hypotheses: {}", trace.hypotheses.join(", "));
    println!(
        "  agents: {}",
        agents
            .iter()
            .map(|a| (a + 1).to_string())
            .collect::<Vec<_>>()
            .join(", ")
    );
    println!("  rounds: {rounds}");
    if let Some(d) = trace.diameter(rounds) {
        println!("  final consensus diameter: {d:e}");
    }
    let mut flag_totals = std::collections::BTreeMap::new();
    for rec in &trace.records {
        for flag in &rec.flags {
            *flag_totals.entry(flag.name.clone()).or_insert(0u64) += flag.count;
        }
    }
    if !flag_totals.is_empty() {
        println!("  flags: {flag_totals:?}");
    }

    // final state and the apparent winner per agent
    println!("\nfinal state:");
    for &agent in &agents {
        let state = &trace.records[rounds].states[&agent];
        match trace.kind {
            TraceKind::Beliefs => {
                let best = (0..m)
                    .max_by(|&a, &b| state[a].total_cmp(&state[b]))
                    .expect("nonempty");
                println!(
                    "  agent {}: believes {} with probability {:.6}",
                    agent + 1,
                    trace.hypotheses[best],
                    state[best].exp()
                );
            }
            TraceKind::Ratios => {
                let table = PairwiseRatios::from_flat(m, state.clone(), rounds)?;
                match pairwise_decide(&table, args.threshold) {
                    Some(theta) => println!(
                        "  agent {}: decides {} (threshold {} nats)",
                        agent + 1,
                        trace.hypotheses[theta],
                        args.threshold
                    ),
                    None => println!("  agent {}: undecided", agent + 1),
                }
            }
        }
    }

    if rounds < 20 {
        println!("\ninsufficient data for decay fits (need at least 20 rounds, have {rounds})");
    } else {
        println!("\ndecay fits over the trailing half (winner's rivals):");
        println!(
            "  {:>5} {:>10} {:>12} {:>12} {:>8}",
            "agent", "theta", "t^2 coeff", "t coeff", "R^2"
        );
        for &agent in &agents {
            let state = &trace.records[rounds].states[&agent];
            let winner = match trace.kind {
                TraceKind::Beliefs => (0..m)
                    .max_by(|&a, &b| state[a].total_cmp(&state[b]))
                    .expect("nonempty"),
                TraceKind::Ratios => {
                    let table = PairwiseRatios::from_flat(m, state.clone(), rounds)?;
                    match pairwise_decide(&table, args.threshold) {
                        Some(theta) => theta,
                        None => {
                            println!("  agent {:>3}: undecided, no fit", agent + 1);
                            continue;
                        }
                    }
                }
            };
            for theta in (0..m).filter(|&t| t != winner) {
                let series: Vec<(usize, f64)> = match trace.kind {
                    TraceKind::Beliefs => trace.series(agent, theta),
                    // fit the negated winner-over-rival ratio, which decays
                    // like a log-belief
                    TraceKind::Ratios => trace
                        .series(agent, winner * m + theta)
                        .into_iter()
                        .map(|(t, v)| (t, -v))
                        .collect(),
                };
                let (ts, ys) = trailing_half(&series[1..]);
                match fit_quadratic(&ts, &ys) {
                    Ok(fit) => println!(
                        "  {:>5} {:>10} {:>12.5e} {:>12.5e} {:>8.4}",
                        agent + 1,
                        trace.hypotheses[theta],
                        fit.a,
                        fit.b,
                        fit.r_squared
                    ),
                    Err(e) => println!("  agent {}: fit failed: {e}", agent + 1),
                }
            }
        }
    }

    if let Some(dir) = &args.plots {
        std::fs::create_dir_all(dir)?;
        for &agent in &agents {
            let mut out = String::new();
            let keys: Vec<String> = match trace.kind {
                TraceKind::Beliefs => trace.hypotheses.clone(),
                TraceKind::Ratios => (0..m)
                    .flat_map(|a| (0..m).map(move |b| (a, b)))
                    .filter(|&(a, b)| a != b)
                    .map(|(a, b)| format!("{}>{}", trace.hypotheses[a], trace.hypotheses[b]))
                    .collect(),
            };
            let _ = writeln!(out, "# round {}", keys.join(" "));
            for rec in &trace.records {
                let state = &rec.states[&agent];
                let values: Vec<String> = match trace.kind {
                    TraceKind::Beliefs => state.iter().map(|v| v.to_string()).collect(),
                    TraceKind::Ratios => (0..m)
                        .flat_map(|a| (0..m).map(move |b| (a, b)))
                        .filter(|&(a, b)| a != b)
                        .map(|(a, b)| state[a * m + b].to_string())
                        .collect(),
                };
                let _ = writeln!(out, "{} {}", rec.round, values.join(" "));
            }
            let path = dir.join(format!("agent_{}.dat", agent + 1));
            std::fs::write(&path, out)?;
        }
        println!("\nwrote per-agent trajectory files to {}", dir.display());
    }

    Ok(Outcome::Success)
}
