use std::cmp::Ordering;
use std::collections::BTreeMap;

use log::debug;

use super::{min_energy_unconstrained, plan, Limits, Motion, Obstacle, PlanRequest, TrajectoryBundle};
use crate::assign::AssignmentState;
use crate::error::{Error, Result};
use crate::percept::LocalView;
use crate::world::AgentId;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanParams {
    pub limits: Limits,
    /// Disk radius `R`.
    pub radius: f64,
    /// Extra grid-point margin on top of `2R`.
    pub buffer: f64,
    pub step_hint: f64,
}

impl PlanParams {
    pub fn clearance(&self) -> f64 {
        2.0 * self.radius + self.buffer
    }
}

/// Orders agents by neighborhood size (larger first), then distance to
/// their goal (farther first), then index.
pub(crate) fn rank(mut entries: Vec<(AgentId, usize, f64)>) -> Vec<AgentId> {
    entries.sort_by(|a, b| {
        b.1.cmp(&a.1)
            .then(b.2.partial_cmp(&a.2).unwrap_or(Ordering::Equal))
            .then(a.0.cmp(&b.0))
    });
    entries.into_iter().map(|e| e.0).collect()
}

/// Planning order for the members of `view`, using the same hierarchy as
/// goal conflicts.
pub fn priority_order(view: &LocalView, assignment: &AssignmentState) -> Vec<AgentId> {
    rank(
        view.neighbor_states
            .values()
            .map(|s| {
                let dist = assignment
                    .prescribed
                    .get(&s.id)
                    .and_then(|g| view.goal(*g).ok())
                    .map_or(0.0, |g| (s.position - g.position(view.now)).norm());
                (s.id, view.neighborhood_size(s.id), dist)
            })
            .collect(),
    )
}

/// Plans motions for every member of `view` in `priorities` order.
///
/// Members with an entry in `committed` (other than the owner) keep that
/// motion. Every other member is planned against the full motions of those
/// already fixed, and against the goal each not-yet-planned member will
/// hold after its deadline. Failure to plan the owner is an error; a failed
/// prediction for another member falls back to its unconstrained motion.
pub fn solve_constrained(
    view: &LocalView,
    assignment: &AssignmentState,
    priorities: &[AgentId],
    committed: &BTreeMap<AgentId, Motion>,
    params: &PlanParams,
) -> Result<TrajectoryBundle> {
    let owner = view.owner;
    let mut order: Vec<AgentId> = priorities.iter().copied().filter(|a| view.contains(*a)).collect();
    for m in view.members() {
        if !order.contains(&m) {
            order.push(m);
        }
    }

    let mut fixed: BTreeMap<AgentId, Motion> = BTreeMap::new();
    for m in view.members() {
        if m == owner {
            continue;
        }
        if let Some(&g) = view.settled.get(&m) {
            fixed.insert(m, Motion::holding(*view.goal(g)?));
        } else if let Some(motion) = committed.get(&m) {
            fixed.insert(m, motion.clone());
        }
    }

    // where each member ends up once its deadline passes
    let mut holds: BTreeMap<AgentId, (Motion, f64)> = BTreeMap::new();
    for m in view.members() {
        if let Some(g) = assignment.prescribed.get(&m) {
            let deadline = view.deadline(m)?;
            holds.insert(m, (Motion::holding(*view.goal(*g)?), deadline));
        }
    }

    for m in order {
        if fixed.contains_key(&m) {
            continue;
        }
        let goal_id = *assignment
            .prescribed
            .get(&m)
            .ok_or_else(|| Error::Contract(format!("agent {m} has no prescribed goal")))?;
        let goal = *view.goal(goal_id)?;
        let deadline = view.deadline(m)?;
        let state = view.state(m)?;
        if deadline <= view.now {
            return Err(Error::DegenerateHorizon {
                agent: m,
                t0: view.now,
                tf: deadline,
            });
        }

        let mut obstacles = Vec::new();
        for other in view.members().filter(|o| *o != m) {
            if let Some(motion) = fixed.get(&other) {
                obstacles.push(Obstacle {
                    agent: other,
                    motion,
                    from: view.now,
                });
            } else if let Some((motion, from)) = holds.get(&other) {
                obstacles.push(Obstacle {
                    agent: other,
                    motion,
                    from: *from,
                });
            }
        }

        let req = PlanRequest {
            agent: m,
            t0: view.now,
            tf: deadline,
            p0: state.position,
            v0: state.velocity,
            pf: goal.position(deadline),
            vf: goal.velocity(deadline),
            limits: params.limits,
            clearance: params.clearance(),
            min_separation: 2.0 * params.radius,
            step_hint: params.step_hint,
            obstacles,
        };
        let traj = match plan(&req) {
            Ok(t) => t,
            Err(e) if m == owner => return Err(e),
            Err(e) => {
                debug!("agent {owner}: prediction for {m} falls back to free motion: {e}");
                min_energy_unconstrained(m, req.p0, req.v0, req.pf, req.vf, req.t0, req.tf)?
            }
        };
        fixed.insert(m, Motion::planned(traj, goal));
    }

    Ok(TrajectoryBundle {
        owner,
        trajectories: fixed,
    })
}

/// Minimum separation between two motions sampled every `step` over
/// `[from, to]`.
pub(crate) fn min_separation(a: &Motion, b: &Motion, from: f64, to: f64, step: f64) -> f64 {
    let n = ((to - from) / step).ceil().max(0.0) as usize;
    (0..=n)
        .map(|k| {
            let t = (from + k as f64 * step).min(to);
            (a.position(t) - b.position(t)).norm()
        })
        .fold(f64::INFINITY, f64::min)
}
