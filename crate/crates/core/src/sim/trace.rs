//! Per-round recorded state and its CSV form.
//!
//! The trace CSV has a fixed header `round,agent,kind,key,value` with
//! kind in {log_belief, ratio, diameter, flag}. Agent ids are 1-based on
//! disk; network-level rows (diameter) use agent `*`. Ratio keys name the
//! ordered pair as `theta1>theta2`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};

pub const TRACE_HEADER: &str = "round,agent,kind,key,value";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKind {
    /// Snapshots are log-belief vectors over the hypotheses.
    Beliefs,
    /// Snapshots are flattened m x m pairwise ratio tables.
    Ratios,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceFlag {
    pub agent: usize,
    pub name: String,
    pub count: u64,
}

#[derive(Debug, Clone)]
pub struct RoundRecord {
    pub round: usize,
    /// agent -> carried-state snapshot (log-beliefs or flattened ratios).
    pub states: BTreeMap<usize, Vec<f64>>,
    pub diameter: f64,
    pub flags: Vec<TraceFlag>,
}

/// Full per-round, per-honest-agent record of a run, including the round-0
/// initial state.
#[derive(Debug, Clone)]
pub struct RoundTrace {
    pub kind: TraceKind,
    pub hypotheses: Vec<String>,
    pub records: Vec<RoundRecord>,
}

impl RoundTrace {
    /// Number of simulated rounds (excluding the initial record).
    pub fn rounds(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn record(&self, round: usize) -> Option<&RoundRecord> {
        self.records.get(round)
    }

    /// Recorded consensus diameter at a round.
    pub fn diameter(&self, round: usize) -> Option<f64> {
        self.records.get(round).map(|r| r.diameter)
    }

    /// One component of an agent's carried state across rounds, as
    /// (round, value) points.
    pub fn series(&self, agent: usize, component: usize) -> Vec<(usize, f64)> {
        self.records
            .iter()
            .filter_map(|rec| rec.states.get(&agent).map(|s| (rec.round, s[component])))
            .collect()
    }

    pub fn agents(&self) -> Vec<usize> {
        self.records
            .first()
            .map(|r| r.states.keys().copied().collect())
            .unwrap_or_default()
    }

    fn keys(&self) -> Vec<String> {
        let m = self.hypotheses.len();
        match self.kind {
            TraceKind::Beliefs => self.hypotheses.clone(),
            TraceKind::Ratios => {
                let mut keys = Vec::with_capacity(m * m);
                for a in 0..m {
                    for b in 0..m {
                        keys.push(format!("{}>{}", self.hypotheses[a], self.hypotheses[b]));
                    }
                }
                keys
            }
        }
    }

    /// Components actually written to (and read from) CSV: every
    /// hypothesis for belief traces, off-diagonal pairs for ratio traces.
    fn written_components(&self) -> Vec<usize> {
        let m = self.hypotheses.len();
        match self.kind {
            TraceKind::Beliefs => (0..m).collect(),
            TraceKind::Ratios => (0..m * m).filter(|i| i / m != i % m).collect(),
        }
    }

    pub fn to_csv(&self) -> String {
        let kind_name = match self.kind {
            TraceKind::Beliefs => "log_belief",
            TraceKind::Ratios => "ratio",
        };
        let keys = self.keys();
        let components = self.written_components();
        let mut out = String::new();
        out.push_str(TRACE_HEADER);
        out.push('\n');
        for rec in &self.records {
            for (agent, state) in &rec.states {
                for &c in &components {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{}",
                        rec.round,
                        agent + 1,
                        kind_name,
                        keys[c],
                        state[c]
                    );
                }
            }
            let _ = writeln!(out, "{},*,diameter,,{}", rec.round, rec.diameter);
            for flag in &rec.flags {
                let _ = writeln!(
                    out,
                    "{},{},flag,{},{}",
                    rec.round,
                    flag.agent + 1,
                    flag.name,
                    flag.count
                );
            }
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<RoundTrace> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == TRACE_HEADER => {}
            Some(h) => return Err(Error::MalformedTrace(format!("unexpected header {h:?}"))),
            None => return Err(Error::MalformedTrace("empty file".into())),
        }

        struct Row {
            round: usize,
            agent: Option<usize>,
            kind: String,
            key: String,
            value: f64,
        }
        let mut rows = Vec::new();
        for (lineno, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.splitn(5, ',').collect();
            if fields.len() != 5 {
                return Err(Error::MalformedTrace(format!(
                    "line {}: expected 5 fields",
                    lineno + 2
                )));
            }
            let round = fields[0]
                .parse::<usize>()
                .map_err(|_| Error::MalformedTrace(format!("line {}: bad round", lineno + 2)))?;
            let agent = match fields[1] {
                "*" => None,
                s => Some(s.parse::<usize>().map_err(|_| {
                    Error::MalformedTrace(format!("line {}: bad agent", lineno + 2))
                })?),
            };
            let value = fields[4]
                .parse::<f64>()
                .map_err(|_| Error::MalformedTrace(format!("line {}: bad value", lineno + 2)))?;
            rows.push(Row {
                round,
                agent,
                kind: fields[2].to_string(),
                key: fields[3].to_string(),
                value,
            });
        }
        if rows.is_empty() {
            return Err(Error::MalformedTrace("no data rows".into()));
        }

        let kind = if rows.iter().any(|r| r.kind == "ratio") {
            TraceKind::Ratios
        } else {
            TraceKind::Beliefs
        };
        // reconstruct hypothesis labels from keys, preserving first-seen order
        let mut hypotheses: Vec<String> = Vec::new();
        for row in rows
            .iter()
            .filter(|r| r.kind == "log_belief" || r.kind == "ratio")
        {
            let names: Vec<&str> = match kind {
                TraceKind::Beliefs => vec![row.key.as_str()],
                TraceKind::Ratios => row.key.splitn(2, '>').collect(),
            };
            for name in names {
                if !hypotheses.iter().any(|h| h == name) {
                    hypotheses.push(name.to_string());
                }
            }
        }
        if hypotheses.is_empty() {
            return Err(Error::MalformedTrace("no state rows".into()));
        }
        let m = hypotheses.len();
        let state_len = match kind {
            TraceKind::Beliefs => m,
            TraceKind::Ratios => m * m,
        };
        let index_of = |key: &str| -> Result<usize> {
            match kind {
                TraceKind::Beliefs => hypotheses
                    .iter()
                    .position(|h| h == key)
                    .ok_or_else(|| Error::MalformedTrace(format!("unknown key {key:?}"))),
                TraceKind::Ratios => {
                    let (a, b) = key
                        .split_once('>')
                        .ok_or_else(|| Error::MalformedTrace(format!("bad pair key {key:?}")))?;
                    let ia = hypotheses.iter().position(|h| h == a);
                    let ib = hypotheses.iter().position(|h| h == b);
                    match (ia, ib) {
                        (Some(ia), Some(ib)) => Ok(ia * m + ib),
                        _ => Err(Error::MalformedTrace(format!("unknown pair {key:?}"))),
                    }
                }
            }
        };

        let mut records: BTreeMap<usize, RoundRecord> = BTreeMap::new();
        for row in &rows {
            let rec = records.entry(row.round).or_insert_with(|| RoundRecord {
                round: row.round,
                states: BTreeMap::new(),
                diameter: 0.0,
                flags: Vec::new(),
            });
            match row.kind.as_str() {
                "log_belief" | "ratio" => {
                    let agent = row
                        .agent
                        .ok_or_else(|| Error::MalformedTrace("state row without agent".into()))?;
                    if agent == 0 {
                        return Err(Error::MalformedTrace("agent ids are 1-based".into()));
                    }
                    let state = rec
                        .states
                        .entry(agent - 1)
                        .or_insert_with(|| vec![0.0; state_len]);
                    state[index_of(&row.key)?] = row.value;
                }
                "diameter" => rec.diameter = row.value,
                "flag" => {
                    let agent = row
                        .agent
                        .ok_or_else(|| Error::MalformedTrace("flag row without agent".into()))?;
                    rec.flags.push(TraceFlag {
                        agent: agent - 1,
                        name: row.key.clone(),
                        count: row.value as u64,
                    });
                }
                other => {
                    return Err(Error::MalformedTrace(format!("unknown kind {other:?}")));
                }
            }
        }
        let records: Vec<RoundRecord> = records.into_values().collect();
        for (idx, rec) in records.iter().enumerate() {
            if rec.round != idx {
                return Err(Error::MalformedTrace(format!(
                    "rounds are not contiguous at {}",
                    rec.round
                )));
            }
        }
        Ok(RoundTrace {
            kind,
            hypotheses,
            records,
        })
    }
}

/// Max pairwise L-infinity distance between state vectors.
pub fn diameter_of<'a, I>(states: I) -> f64
where
    I: IntoIterator<Item = &'a Vec<f64>> + Clone,
{
    let mut max = 0.0f64;
    for a in states.clone() {
        for b in states.clone() {
            max = max.max(crate::numeric::linf_distance(a, b));
        }
    }
    max
}
