//! Decentralized formation control for swarms of double-integrator agents.
//!
//! Each agent sees only the agents within its sensing radius `h`. From that
//! local view it solves a minimum-distance goal assignment, settles goal
//! conflicts through a deterministic three-level tiebreaker that permanently
//! bans losers from the contested goal, and then plans a minimum-energy
//! trajectory that avoids the trajectories its higher-priority neighbors have
//! already fixed.
//!
//! The crate is organized bottom-up:
//!
//! * [`world`]: agents, moving goals, scenarios and their validation.
//! * [`percept`]: neighborhoods and the per-agent [`LocalView`].
//! * [`assign`]: local assignment, conflict resolution and the assignment round.
//! * [`traj`]: closed-form and constrained minimum-energy trajectories.
//! * [`sim`]: the fixed-step simulator, traces and metrics.
//! * [`report`]: sensing-radius sweeps, the centralized oracle check, scenario
//!   generation and SVG plots.

pub mod assign;
pub mod error;
pub mod percept;
pub mod report;
pub mod sim;
pub mod traj;
pub mod world;

pub use assign::{
    AssignmentMatrix, AssignmentState, BanLevel, BannedGoalSet, ConflictSet, Resolution,
};
pub use error::{Error, Result};
pub use percept::{LocalView, Neighborhood, Snapshot};
pub use sim::{Metrics, SimConfig, SimState, Simulator, Trace};
pub use traj::{Motion, Trajectory, TrajectoryBundle};
pub use world::{AgentId, AgentState, EnergyAccumulator, GoalId, GoalSpec, Scenario, Vec2};
