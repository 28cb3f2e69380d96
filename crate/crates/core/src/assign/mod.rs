//! Decentralized goal assignment.
//!
//! Every agent solves a minimum-distance assignment over its own
//! neighborhood and keeps the row that concerns itself. Neighbors working from
//! different information can end up on the same goal; such conflicts are
//! settled by a tiebreaker hierarchy every contestant evaluates identically
//! (larger neighborhood, then farther from the goal, then lower index), and
//! each loser permanently bans itself from the contested goal. The
//! solve/detect/resolve cycle repeats until no two neighbors share a goal.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::world::{AgentId, GoalId};

mod conflict;
pub mod lap;
mod local;
mod round;

pub use conflict::{detect_conflict, resolve_conflict};
pub use local::{available_goals, check_feasibility, solve_local_assignment};
pub use round::{assignment_round, update_deadline, BanEvent, IterationRecord, RoundContext, RoundReport};

/// Which tiebreaker decided a ban.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum BanLevel {
    NeighborhoodSize = 1,
    Distance = 2,
    Index = 3,
}

impl BanLevel {
    pub const ALL: [BanLevel; 3] = [BanLevel::NeighborhoodSize, BanLevel::Distance, BanLevel::Index];

    fn slot(self) -> usize {
        self as usize - 1
    }
}

/// Goals an agent may never select again, split by the tiebreaker that
/// caused each ban. Sets only grow.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BannedGoalSet {
    partitions: [BTreeSet<GoalId>; 3],
}

impl BannedGoalSet {
    pub const fn new() -> Self {
        BannedGoalSet {
            partitions: [BTreeSet::new(), BTreeSet::new(), BTreeSet::new()],
        }
    }

    /// Returns `true` when `goal` was not banned before.
    pub fn insert(&mut self, level: BanLevel, goal: GoalId) -> bool {
        if self.contains(goal) {
            return false;
        }
        self.partitions[level.slot()].insert(goal)
    }

    pub fn contains(&self, goal: GoalId) -> bool {
        self.partitions.iter().any(|p| p.contains(&goal))
    }

    pub fn partition(&self, level: BanLevel) -> &BTreeSet<GoalId> {
        &self.partitions[level.slot()]
    }

    pub fn level_of(&self, goal: GoalId) -> Option<BanLevel> {
        BanLevel::ALL
            .into_iter()
            .find(|l| self.partitions[l.slot()].contains(&goal))
    }

    pub fn len(&self) -> usize {
        self.partitions.iter().map(BTreeSet::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The union of all partitions, ascending.
    pub fn goals(&self) -> BTreeSet<GoalId> {
        self.partitions.iter().flatten().copied().collect()
    }

    pub fn is_subset(&self, other: &BannedGoalSet) -> bool {
        self.partitions
            .iter()
            .zip(&other.partitions)
            .all(|(a, b)| a.is_subset(b))
    }
}

/// Binary assignment of the owner's neighborhood to goals, stored sparsely
/// as the single goal of each row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssignmentMatrix {
    pub owner: AgentId,
    pub entries: BTreeMap<AgentId, GoalId>,
}

impl AssignmentMatrix {
    pub fn entry(&self, agent: AgentId, goal: GoalId) -> u8 {
        u8::from(self.entries.get(&agent) == Some(&goal))
    }

    pub fn goal_of(&self, agent: AgentId) -> Option<GoalId> {
        self.entries.get(&agent).copied()
    }

    /// Checks row sums, column sums and bans against `view`.
    pub fn satisfies_constraints(&self, view: &crate::percept::LocalView) -> bool {
        let rows_ok = view.members().all(|k| {
            view.goals.iter().map(|g| u32::from(self.entry(k, g.id))).sum::<u32>() == 1
        }) && self.entries.keys().all(|k| view.contains(*k));
        let cols_ok = view.goals.iter().all(|g| {
            view.members().map(|k| u32::from(self.entry(k, g.id))).sum::<u32>() <= 1
        });
        let bans_ok = self
            .entries
            .iter()
            .all(|(k, g)| !view.banned(*k).contains(*g));
        rows_ok && cols_ok && bans_ok
    }
}

/// Per-agent protocol state: prescribed goal, deadline and bans.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AssignmentState {
    pub prescribed: BTreeMap<AgentId, GoalId>,
    pub deadlines: BTreeMap<AgentId, f64>,
    pub banned: BTreeMap<AgentId, BannedGoalSet>,
}

impl AssignmentState {
    /// Fresh state: no goals, no bans, every deadline at `deadline`.
    pub fn new(agents: impl IntoIterator<Item = AgentId>, deadline: f64) -> Self {
        let mut s = AssignmentState::default();
        for a in agents {
            s.deadlines.insert(a, deadline);
            s.banned.insert(a, BannedGoalSet::new());
        }
        s
    }

    pub fn total_bans(&self) -> usize {
        self.banned.values().map(BannedGoalSet::len).sum()
    }
}

/// Neighbors of some agent that share its prescribed goal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConflictSet {
    pub conflict_goal: GoalId,
    pub competing: BTreeSet<AgentId>,
}

/// Outcome of running the tiebreakers over a conflict.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Resolution {
    pub conflict_goal: GoalId,
    pub winner: AgentId,
    /// Every competitor except the winner, with the level it lost at.
    pub bans: BTreeMap<AgentId, BanLevel>,
    /// Nested competitor sets, outermost first.
    pub levels: [BTreeSet<AgentId>; 3],
}
