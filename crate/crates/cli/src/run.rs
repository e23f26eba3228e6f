use std::path::PathBuf;

use anyhow::{Context, Result};
use byzlearn::sim::Scenario;
use byzlearn::Error;
use clap::Args;
use log::{info, warn};

use crate::Outcome;

#[derive(Args)]
pub struct RunArgs {
    /// Scenario file (JSON).
    #[arg(long)]
    pub scenario: PathBuf,
    /// Override the scenario's master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the scenario's round horizon.
    #[arg(long)]
    pub rounds: Option<usize>,
    /// Output directory for trace.csv and summary.json.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Run even when an assumption gate fails.
    #[arg(long)]
    pub force: bool,
}

pub fn execute(args: RunArgs) -> Result<Outcome> {
    let mut scenario = Scenario::load(&args.scenario)
        .with_context(|| format!("loading scenario {}", args.scenario.display()))?;
    if let Some(rounds) = args.rounds {
        scenario.rounds = rounds;
    }
    let seed = args.seed.unwrap_or(scenario.default_seed);
    info!(
        "scenario: rule {}, n = {}, f = {}, {} rounds, seed {seed}",
        scenario.rule.name(),
        scenario.graph.n(),
        scenario.f,
        scenario.rounds
    );

    let validation = match scenario.validate() {
        Ok(v) => {
            info!(
                "assumption gates hold: chi = {}, gamma = {}",
                v.topology.chi, v.topology.gamma
            );
            Some(v)
        }
        Err(Error::AssumptionFailed { check, detail }) if args.force => {
            warn!("assumption check failed ({check}): {detail}; continuing under --force");
            None
        }
        Err(Error::AssumptionFailed { check, detail }) => {
            eprintln!("assumption check failed ({check}): {detail}");
            eprintln!("re-run with --force to simulate anyway");
            return Ok(Outcome::CheckFailed);
        }
        Err(other) => return Err(other.into()),
    };

    let mut output = scenario.run_seeded(seed)?;
    output.summary.assumption_checks = validation.as_ref().map(|v| v.to_json());

    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    let trace_path = args.out.join("trace.csv");
    let summary_path = args.out.join("summary.json");
    std::fs::write(&trace_path, output.trace.to_csv())?;
    std::fs::write(
        &summary_path,
        serde_json::to_string_pretty(&output.summary)?,
    )?;

    let decided: Vec<&str> = output
        .summary
        .agents
        .values()
        .map(|a| a.decision.as_deref().unwrap_or("undecided"))
        .collect();
    println!(
        "ran {} rounds; honest decisions: [{}]; wrote {} and {}",
        scenario.rounds,
        decided.join(", "),
        trace_path.display(),
        summary_path.display()
    );
    Ok(Outcome::Success)
}
