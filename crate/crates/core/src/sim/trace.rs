use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::assign::{AssignmentMatrix, BanEvent, IterationRecord};
use crate::error::{Error, Result};
use crate::percept::LocalView;
use crate::world::{AgentId, GoalId};

/// One agent at one tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: f64,
    pub agent_id: AgentId,
    pub px: f64,
    pub py: f64,
    pub vx: f64,
    pub vy: f64,
    pub ux: f64,
    pub uy: f64,
    pub goal_id: GoalId,
    pub n_neighbors: usize,
    pub n_banned: usize,
}

pub const TRACE_HEADER: [&str; 11] = [
    "t", "agent_id", "px", "py", "vx", "vy", "ux", "uy", "goal_id", "n_neighbors", "n_banned",
];

/// Everything recorded during a run.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
    pub bans: Vec<BanEvent>,
    /// Assignment-round iteration records.
    pub assignments: Vec<IterationRecord>,
    /// Iterations used by each assignment round, in order.
    pub round_iterations: Vec<usize>,
    /// `(t, agent, goal)` each time an agent's prescribed goal changes,
    /// starting with the initial assignment.
    pub goal_changes: Vec<(f64, AgentId, GoalId)>,
    pub arrivals: BTreeMap<AgentId, f64>,
    /// Ticks where a planned trajectory moved away from its goal.
    pub approach_violations: usize,
    /// Minimum pairwise center distance over all ticks.
    pub min_separation: f64,
    /// Solved assignment matrices with their views, kept only when
    /// [`super::SimConfig::keep_matrices`] is set.
    pub matrices: Vec<(AssignmentMatrix, LocalView)>,
}

impl Trace {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row).map_err(io_err)?;
        }
        if self.rows.is_empty() {
            w.write_record(TRACE_HEADER).map_err(io_err)?;
        }
        w.flush().map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    /// One JSON object per assignment-round iteration record.
    pub fn write_assignment_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for r in &self.assignments {
            let line = serde_json::to_string(r).expect("records serialize");
            writeln!(out, "{line}").map_err(|e| Error::Parse(e.to_string()))?;
        }
        Ok(())
    }

    /// Per-agent sequence of distinct prescribed goals.
    pub fn goal_sequences(&self) -> BTreeMap<AgentId, Vec<GoalId>> {
        let mut out: BTreeMap<AgentId, Vec<GoalId>> = BTreeMap::new();
        for &(_, a, g) in &self.goal_changes {
            let seq = out.entry(a).or_default();
            if seq.last() != Some(&g) {
                seq.push(g);
            }
        }
        out
    }
}

fn io_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

/// Run summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    #[serde(with = "crate::world::radius")]
    pub h: f64,
    pub min_separation_m: f64,
    #[serde(rename = "total_energy_kJ_per_kg")]
    pub total_energy_kj_per_kg: f64,
    /// Time the last agent arrived.
    pub t_f_s: f64,
    pub n_replans: usize,
    pub n_bans: usize,
}

impl Metrics {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialize")
    }
}
