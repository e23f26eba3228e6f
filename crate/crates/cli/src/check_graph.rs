use std::path::PathBuf;

use anyhow::{Context, Result};
use byzlearn::graph::{
    check_identifiability_with, check_topology_with, sample_topology, GraphFile,
    DEFAULT_ENUMERATION_CAP, KL_ZERO_TOLERANCE,
};
use byzlearn::signals::{ModelFile, SignalModel};
use byzlearn::Error;
use clap::Args;
use log::info;

use crate::Outcome;

#[derive(Args)]
pub struct CheckGraphArgs {
    /// Graph file (JSON with `n` and 1-based `edges`).
    #[arg(long)]
    pub graph: PathBuf,
    /// Fault budget.
    #[arg(long)]
    pub f: usize,
    /// Reduced-graph dimension m (the hypothesis count for BFL, 1 for
    /// pairwise learning).
    #[arg(long)]
    pub dim: usize,
    /// Signal model file; adds the identifiability check over every
    /// choice of true hypothesis.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Check K random reduced graphs instead of enumerating (one-sided:
    /// can refute the condition, never certify it).
    #[arg(long)]
    pub sample: Option<u64>,
    /// Seed for --sample.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Enumeration cap for the exact check.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    pub cap: u64,
    /// Also write the report JSON to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn execute(args: CheckGraphArgs) -> Result<Outcome> {
    let text = std::fs::read_to_string(&args.graph)
        .with_context(|| format!("reading {}", args.graph.display()))?;
    let file: GraphFile = serde_json::from_str(&text)?;
    let graph = file.to_digraph()?;
    info!(
        "graph: {} nodes, {} edges; f = {}, dim = {}",
        graph.n(),
        graph.edge_count(),
        args.f,
        args.dim
    );

    if let Some(samples) = args.sample {
        let report = sample_topology(&graph, args.f, args.dim, samples, args.seed)?;
        let json = serde_json::json!({
            "mode": "sampled",
            "samples": report.samples,
            "violation": report.violation.as_ref().map(|w| w.to_json()),
        });
        println!("{}", serde_json::to_string_pretty(&json)?);
        if let Some(out) = &args.out {
            std::fs::write(out, serde_json::to_string_pretty(&json)?)?;
        }
        return Ok(match report.violation {
            Some(_) => Outcome::CheckFailed,
            None => Outcome::Success,
        });
    }

    let topology = match check_topology_with(&graph, args.f, args.dim, args.cap) {
        Ok(t) => t,
        Err(Error::EnumerationCap { count, cap }) => {
            eprintln!(
                "enumeration would visit {count} reduced graphs (cap {cap}); \
                 raise --cap or use --sample K for a one-sided check"
            );
            return Ok(Outcome::CheckFailed);
        }
        Err(e) => return Err(e.into()),
    };
    let mut pass = topology.assumption_holds;
    let mut json = topology.to_json();

    if let Some(model_path) = &args.model {
        let text = std::fs::read_to_string(model_path)
            .with_context(|| format!("reading {}", model_path.display()))?;
        let model_file: ModelFile = serde_json::from_str(&text)?;
        let model = SignalModel::from_file(&model_file)?;
        let mut per_star = Vec::new();
        let mut ident_pass = topology.assumption_holds;
        if topology.assumption_holds {
            for star in 0..model.hypothesis_count() {
                let report = check_identifiability_with(
                    &graph,
                    args.f,
                    args.dim,
                    &model,
                    star,
                    args.cap,
                    KL_ZERO_TOLERANCE,
                )?;
                ident_pass &= report.holds;
                per_star.push(serde_json::json!({
                    "theta_star": model.hypothesis_labels()[star],
                    "report": report.to_json(),
                }));
            }
        }
        json["identifiability"] = serde_json::json!({
            "holds_for_every_theta_star": ident_pass,
            "per_theta_star": per_star,
        });
        pass &= ident_pass;
    }

    println!("{}", serde_json::to_string_pretty(&json)?);
    if let Some(out) = &args.out {
        std::fs::write(out, serde_json::to_string_pretty(&json)?)?;
    }
    Ok(if pass {
        Outcome::Success
    } else {
        Outcome::CheckFailed
    })
}
