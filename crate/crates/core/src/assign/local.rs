use std::collections::{BTreeMap, BTreeSet};

use super::lap;
use super::AssignmentMatrix;
use crate::error::{Error, Result};
use crate::percept::LocalView;
use crate::world::{AgentId, GoalId};

/// Goals banned by no member of the view.
pub fn available_goals(view: &LocalView) -> BTreeSet<GoalId> {
    view.goals
        .iter()
        .map(|g| g.id)
        .filter(|g| view.members().all(|k| !view.banned(k).contains(*g)))
        .collect()
}

/// Sufficient condition for the local assignment to have a solution: at
/// least as many goals open to the whole neighborhood as there are members.
pub fn check_feasibility(view: &LocalView) -> bool {
    available_goals(view).len() >= view.len()
}

/// Minimum total-distance assignment of the view's members to goals.
///
/// Member `k` is charged the distance from its current position to where the
/// goal will be at `k`'s own deadline. Members that already hold a goal keep
/// it. Ties go to the lexicographically first (agent, goal) assignment.
pub fn solve_local_assignment(view: &LocalView) -> Result<AssignmentMatrix> {
    let mut entries: BTreeMap<AgentId, GoalId> = view.settled.clone();
    let held: BTreeSet<GoalId> = view.settled.values().copied().collect();

    let rows: Vec<AgentId> = view.members().filter(|k| !view.settled.contains_key(k)).collect();
    let mut cols: Vec<_> = view.goals.iter().filter(|g| !held.contains(&g.id)).collect();
    cols.sort_by_key(|g| g.id);

    let infeasible = || Error::InfeasibleAssignment {
        owner: view.owner,
        available: available_goals(view).len(),
        members: view.len(),
    };

    let mut costs = Vec::with_capacity(rows.len());
    for &k in &rows {
        let p = view.state(k)?.position;
        let deadline = view.deadline(k)?;
        let banned = view.banned(k);
        costs.push(
            cols.iter()
                .map(|g| (!banned.contains(g.id)).then(|| (p - g.position(deadline)).norm()))
                .collect::<Vec<_>>(),
        );
    }

    let picked = lap::solve_lexicographic(&costs).ok_or_else(infeasible)?;
    for (k, c) in rows.iter().zip(picked) {
        entries.insert(*k, cols[c].id);
    }
    Ok(AssignmentMatrix {
        owner: view.owner,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assign::{BanLevel, BannedGoalSet};
    use crate::world::{AgentState, GoalSpec};

    pub(crate) fn view(agents: &[(f64, f64)], goals: &[(f64, f64)]) -> LocalView {
        let states: Vec<AgentState> = agents
            .iter()
            .enumerate()
            .map(|(k, &(x, y))| AgentState::at_rest(k as u32 + 1, x, y))
            .collect();
        LocalView {
            owner: AgentId(1),
            now: 0.0,
            neighbor_states: states.iter().map(|s| (s.id, *s)).collect(),
            neighbor_banned: states.iter().map(|s| (s.id, BannedGoalSet::new())).collect(),
            neighbor_deadlines: states.iter().map(|s| (s.id, 10.0)).collect(),
            neighborhood_sizes: states.iter().map(|s| (s.id, states.len())).collect(),
            settled: BTreeMap::new(),
            goals: goals
                .iter()
                .enumerate()
                .map(|(k, &(x, y))| GoalSpec::fixed(k as u32 + 1, x, y))
                .collect(),
        }
    }

    fn ban(v: &mut LocalView, agent: u32, goal: u32) {
        v.neighbor_banned
            .get_mut(&AgentId(agent))
            .unwrap()
            .insert(BanLevel::Index, GoalId(goal));
    }

    #[test]
    fn single_agent_single_goal() {
        let v = view(&[(0.0, 0.0)], &[(3.0, 3.0)]);
        let m = solve_local_assignment(&v).unwrap();
        assert_eq!(m.goal_of(AgentId(1)), Some(GoalId(1)));
    }

    #[test]
    fn uncrossed_matching_wins() {
        // identity costs 1 + 1 = 2, crossed √2 + √2
        let v = view(&[(0.0, 0.0), (1.0, 0.0)], &[(0.0, 1.0), (1.0, 1.0)]);
        let m = solve_local_assignment(&v).unwrap();
        assert_eq!(m.goal_of(AgentId(1)), Some(GoalId(1)));
        assert_eq!(m.goal_of(AgentId(2)), Some(GoalId(2)));
        assert!(m.satisfies_constraints(&v));
    }

    #[test]
    fn ban_forces_crossed_matching() {
        let mut v = view(&[(0.0, 0.0), (1.0, 0.0)], &[(0.0, 1.0), (1.0, 1.0)]);
        ban(&mut v, 1, 1);
        let m = solve_local_assignment(&v).unwrap();
        assert_eq!(m.goal_of(AgentId(1)), Some(GoalId(2)));
        assert_eq!(m.goal_of(AgentId(2)), Some(GoalId(1)));
        assert!(m.satisfies_constraints(&v));
    }

    #[test]
    fn goal_cost_uses_member_deadline() {
        let mut v = view(&[(0.0, 0.0)], &[(5.0, 0.0), (0.0, 3.0)]);
        // goal 1 drifts to the origin by the agent's deadline
        v.goals[0].drift_velocity = crate::world::Vec2::new(-0.5, 0.0);
        let m = solve_local_assignment(&v).unwrap();
        assert_eq!(m.goal_of(AgentId(1)), Some(GoalId(1)));
    }

    #[test]
    fn settled_members_keep_their_goal() {
        let mut v = view(&[(0.0, 0.0), (5.0, 5.0)], &[(0.0, 1.0), (5.0, 6.0)]);
        v.settled.insert(AgentId(2), GoalId(1));
        let m = solve_local_assignment(&v).unwrap();
        assert_eq!(m.goal_of(AgentId(2)), Some(GoalId(1)));
        assert_eq!(m.goal_of(AgentId(1)), Some(GoalId(2)));
        assert!(m.satisfies_constraints(&v));
    }

    #[test]
    fn infeasible_reports_sizes() {
        let mut v = view(&[(0.0, 0.0), (1.0, 0.0)], &[(0.0, 1.0), (1.0, 1.0)]);
        ban(&mut v, 1, 1);
        ban(&mut v, 2, 1);
        let err = solve_local_assignment(&v).unwrap_err();
        assert_eq!(
            err,
            Error::InfeasibleAssignment {
                owner: AgentId(1),
                available: 1,
                members: 2
            }
        );
    }

    #[test]
    fn feasibility_counts_commonly_open_goals() {
        let v = view(&[(0.0, 0.0), (1.0, 0.0)], &[(0.0, 1.0), (1.0, 1.0)]);
        assert!(check_feasibility(&v));

        let mut v2 = v.clone();
        ban(&mut v2, 2, 1);
        assert_eq!(available_goals(&v2).len(), 1);
        assert!(!check_feasibility(&v2));

        let mut v3 = view(
            &[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)],
            &[(0.0, 1.0), (1.0, 1.0), (2.0, 1.0), (3.0, 1.0), (4.0, 1.0)],
        );
        ban(&mut v3, 1, 4);
        ban(&mut v3, 3, 5);
        assert_eq!(available_goals(&v3).len(), 3);
        assert!(check_feasibility(&v3));
    }
}
