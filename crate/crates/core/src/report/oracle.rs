use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{random_scenario, GeneratorParams};
use crate::assign::{assignment_round, AssignmentState, RoundContext};
use crate::error::{Error, Result};
use crate::world::{AgentId, AgentState, GoalId, GoalSpec};

/// Largest instance the exhaustive search accepts.
pub const MAX_ORACLE_SIZE: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    pub decentralized_cost: f64,
    pub optimal_cost: f64,
    pub equal: bool,
    pub decentralized: Vec<(AgentId, GoalId)>,
    pub optimal: Vec<(AgentId, GoalId)>,
}

/// Total distance from each agent to its goal's position at `t`.
pub fn assignment_cost(agents: &[AgentState], goals: &[GoalSpec], pairs: &[(AgentId, GoalId)], t: f64) -> f64 {
    pairs
        .iter()
        .map(|(a, g)| {
            let p = agents.iter().find(|s| s.id == *a).expect("known agent").position;
            let q = goals.iter().find(|s| s.id == *g).expect("known goal").position(t);
            (p - q).norm()
        })
        .sum()
}

/// Cheapest injective matching of agents to goals, found by exhaustive
/// search; goal positions are taken at `t`.
pub fn brute_force_assignment(agents: &[AgentState], goals: &[GoalSpec], t: f64) -> (f64, Vec<(AgentId, GoalId)>) {
    let cost: Vec<Vec<f64>> = agents
        .iter()
        .map(|a| goals.iter().map(|g| (a.position - g.position(t)).norm()).collect())
        .collect();
    let mut best = (f64::INFINITY, Vec::new());
    let mut used = vec![false; goals.len()];
    let mut pick = Vec::with_capacity(agents.len());
    search(&cost, 0, 0.0, &mut used, &mut pick, &mut best);
    let pairs = best
        .1
        .iter()
        .enumerate()
        .map(|(i, &j)| (agents[i].id, goals[j].id))
        .collect();
    (best.0, pairs)
}

fn search(
    cost: &[Vec<f64>],
    row: usize,
    acc: f64,
    used: &mut [bool],
    pick: &mut Vec<usize>,
    best: &mut (f64, Vec<usize>),
) {
    if row == cost.len() {
        if acc < best.0 {
            *best = (acc, pick.clone());
        }
        return;
    }
    for j in 0..used.len() {
        if !used[j] {
            used[j] = true;
            pick.push(j);
            search(cost, row + 1, acc + cost[row][j], used, pick, best);
            pick.pop();
            used[j] = false;
        }
    }
}

/// Compares the all-seeing decentralized assignment on a random instance
/// with the exhaustive optimum.
pub fn oracle_check(n: usize, m: usize, seed: u64) -> Result<OracleReport> {
    if n == 0 || n > m || m > MAX_ORACLE_SIZE {
        return Err(Error::Contract(format!(
            "oracle check needs 1 ≤ n ≤ m ≤ {MAX_ORACLE_SIZE}, got n = {n}, m = {m}"
        )));
    }
    let s = random_scenario(n, m, seed, &GeneratorParams::default());
    let ids: Vec<AgentId> = s.agents.iter().map(|a| a.id).collect();
    let mut state = AssignmentState::new(ids.iter().copied(), s.deadline);
    let settled = BTreeMap::new();
    let ctx = RoundContext {
        states: &s.agents,
        goals: &s.goals,
        settled: &settled,
        h: f64::INFINITY,
        now: 0.0,
        extension: s.deadline,
    };
    let active: BTreeSet<AgentId> = ids.iter().copied().collect();
    assignment_round(&mut state, &active, &ctx)?;
    let decentralized: Vec<(AgentId, GoalId)> = state.prescribed.iter().map(|(a, g)| (*a, *g)).collect();
    let decentralized_cost = assignment_cost(&s.agents, &s.goals, &decentralized, s.deadline);
    let (optimal_cost, optimal) = brute_force_assignment(&s.agents, &s.goals, s.deadline);
    Ok(OracleReport {
        seed,
        n,
        m,
        decentralized_cost,
        optimal_cost,
        equal: (decentralized_cost - optimal_cost).abs() <= 1e-9 * (1.0 + optimal_cost),
        decentralized,
        optimal,
    })
}
