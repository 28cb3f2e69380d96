use thiserror::Error;

use crate::world::{AgentId, GoalId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown agent {0}")]
    UnknownAgent(AgentId),

    #[error("unknown goal {0}")]
    UnknownGoal(GoalId),

    #[error(
        "assignment infeasible for agent {owner}: {available} goals open to the whole neighborhood, {members} members"
    )]
    InfeasibleAssignment {
        owner: AgentId,
        available: usize,
        members: usize,
    },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("degenerate horizon for agent {agent}: t0 = {t0}, tf = {tf}")]
    DegenerateHorizon { agent: AgentId, t0: f64, tf: f64 },

    #[error("no feasible trajectory for agent {agent} against agent {blocking:?}: {reason}")]
    InfeasibleTrajectory {
        agent: AgentId,
        blocking: Option<AgentId>,
        reason: String,
    },

    #[error("time {t} outside trajectory interval [{t0}, {tf}]")]
    OutOfInterval { t: f64, t0: f64, tf: f64 },

    #[error("collision between agents {a} and {b} at t = {t}: separation {separation} <= {limit}")]
    Collision {
        a: AgentId,
        b: AgentId,
        t: f64,
        separation: f64,
        limit: f64,
    },

    #[error("simulation did not terminate by t = {0}")]
    NonTermination(f64),

    #[error("invalid scenario: {}", .0.join("; "))]
    InvalidScenario(Vec<String>),

    #[error("scenario parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Stable snake_case name of the variant, for machine-readable reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::UnknownAgent(_) => "unknown_agent",
            Error::UnknownGoal(_) => "unknown_goal",
            Error::InfeasibleAssignment { .. } => "infeasible_assignment",
            Error::Contract(_) => "contract",
            Error::DegenerateHorizon { .. } => "degenerate_horizon",
            Error::InfeasibleTrajectory { .. } => "infeasible_trajectory",
            Error::OutOfInterval { .. } => "out_of_interval",
            Error::Collision { .. } => "collision",
            Error::NonTermination(_) => "non_termination",
            Error::InvalidScenario(_) => "invalid_scenario",
            Error::Parse(_) => "parse",
        }
    }

    /// Whether the error comes from bad input rather than from running it.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::InvalidScenario(_) | Error::Parse(_))
    }
}
