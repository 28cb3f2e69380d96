use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{detect_conflict, resolve_conflict, solve_local_assignment, AssignmentMatrix, AssignmentState, BanLevel};
use crate::error::{Error, Result};
use crate::percept::{build_local_view, LocalView, Snapshot};
use crate::world::{AgentId, AgentState, GoalId, GoalSpec};

/// New deadline after a round: `now + extension` if the ban set grew,
/// otherwise `current`.
pub fn update_deadline(current: f64, now: f64, extension: f64, banned_grew: bool) -> f64 {
    if banned_grew {
        now + extension
    } else {
        current
    }
}

/// World data a round reads but never changes.
#[derive(Debug, Clone, Copy)]
pub struct RoundContext<'a> {
    pub states: &'a [AgentState],
    pub goals: &'a [GoalSpec],
    pub settled: &'a BTreeMap<AgentId, GoalId>,
    pub h: f64,
    pub now: f64,
    /// The deadline extension `T`.
    pub extension: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BanEvent {
    pub t: f64,
    pub agent: AgentId,
    pub goal: GoalId,
    pub level: BanLevel,
}

/// One line of the assignment trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub t: f64,
    pub iteration: usize,
    pub agent: AgentId,
    pub prescribed_goal: GoalId,
    pub banned: Vec<GoalId>,
    pub deadline: f64,
}

#[derive(Debug, Clone, Default)]
pub struct RoundReport {
    pub iterations: usize,
    pub bans: Vec<BanEvent>,
    pub records: Vec<IterationRecord>,
    /// Every matrix solved during the round, with the view it was solved on.
    pub matrices: Vec<(AssignmentMatrix, LocalView)>,
    /// Agents whose prescribed goal or deadline differs from before the round.
    pub changed: BTreeSet<AgentId>,
}

/// Repeats solve, detect and resolve until no two neighbors share a goal.
///
/// Agents in `active` solve first; afterwards only agents that were just
/// banned re-solve. Settled agents never re-solve and never lose their
/// goal: an agent that meets a settled neighbor on its goal is banned from
/// it at the index level. Otherwise each agent applies only the ban its own
/// tiebreaker evaluation assigns to itself. Every iteration that finds a conflict bans at least
/// one new (agent, goal) pair, so the loop ends within `N·M` iterations.
pub fn assignment_round(
    state: &mut AssignmentState,
    active: &BTreeSet<AgentId>,
    ctx: &RoundContext<'_>,
) -> Result<RoundReport> {
    let before = state.clone();
    let agents: Vec<AgentId> = ctx.states.iter().map(|s| s.id).collect();
    let limit = agents.len() * ctx.goals.len() + 1;
    let mut active: BTreeSet<AgentId> = active
        .iter()
        .copied()
        .filter(|a| !ctx.settled.contains_key(a))
        .collect();
    for (a, g) in ctx.settled {
        state.prescribed.insert(*a, *g);
    }

    let mut report = RoundReport::default();
    loop {
        report.iterations += 1;
        if report.iterations > limit {
            return Err(Error::Contract(format!(
                "assignment round exceeded {limit} iterations"
            )));
        }
        let snap = Snapshot {
            states: ctx.states,
            banned: &state.banned,
            deadlines: &state.deadlines,
            settled: ctx.settled,
            goals: ctx.goals,
            h: ctx.h,
            now: ctx.now,
        };
        let views: BTreeMap<AgentId, LocalView> = agents
            .iter()
            .map(|&a| build_local_view(a, &snap).map(|v| (a, v)))
            .collect::<Result<_>>()?;

        for &i in &active {
            let matrix = solve_local_assignment(&views[&i])?;
            let goal = matrix.goal_of(i).expect("owner has a row");
            state.prescribed.insert(i, goal);
            report.matrices.push((matrix, views[&i].clone()));
        }

        let mut conflicts: Vec<_> = agents
            .iter()
            .filter(|a| !ctx.settled.contains_key(a))
            .filter_map(|&i| detect_conflict(i, &state.prescribed, &views[&i]).map(|c| (i, c)))
            .collect();
        conflicts.sort_by_key(|(i, c)| (c.conflict_goal, *i));

        let mut grew = BTreeSet::new();
        for (i, c) in &conflicts {
            // an arrived holder never yields, so the newcomer is banned
            let occupied = c.competing.iter().any(|a| a != i && ctx.settled.contains_key(a));
            let mine = if occupied {
                Some(BanLevel::Index)
            } else {
                resolve_conflict(c, &views[i])?.bans.get(i).copied()
            };
            if let Some(level) = mine {
                let set = state.banned.entry(*i).or_default();
                if set.insert(level, c.conflict_goal) {
                    grew.insert(*i);
                    report.bans.push(BanEvent {
                        t: ctx.now,
                        agent: *i,
                        goal: c.conflict_goal,
                        level,
                    });
                }
            }
        }
        for &i in &grew {
            let current = state.deadlines.get(&i).copied().unwrap_or(ctx.extension);
            state
                .deadlines
                .insert(i, update_deadline(current, ctx.now, ctx.extension, true));
        }

        for &i in active.union(&grew) {
            report.records.push(IterationRecord {
                t: ctx.now,
                iteration: report.iterations,
                agent: i,
                prescribed_goal: state.prescribed[&i],
                banned: state.banned.get(&i).map(|b| b.goals().into_iter().collect()).unwrap_or_default(),
                deadline: state.deadlines[&i],
            });
        }

        if conflicts.is_empty() {
            break;
        }
        if grew.is_empty() {
            return Err(Error::Contract(
                "conflicts remain but no agent was banned".to_string(),
            ));
        }
        active = grew;
    }

    report.changed = agents
        .iter()
        .copied()
        .filter(|a| {
            before.prescribed.get(a) != state.prescribed.get(a)
                || before.deadlines.get(a) != state.deadlines.get(a)
        })
        .collect();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx<'a>(
        states: &'a [AgentState],
        goals: &'a [GoalSpec],
        settled: &'a BTreeMap<AgentId, GoalId>,
        h: f64,
    ) -> RoundContext<'a> {
        RoundContext {
            states,
            goals,
            settled,
            h,
            now: 0.0,
            extension: 10.0,
        }
    }

    #[test]
    fn deadline_updates() {
        assert_eq!(update_deadline(10.0, 5.0, 10.0, false), 10.0);
        assert_eq!(update_deadline(10.0, 3.0, 10.0, true), 13.0);
    }

    #[test]
    fn centralized_round_is_single_iteration() {
        let states = vec![
            AgentState::at_rest(1, 0.0, 0.0),
            AgentState::at_rest(2, 1.0, 0.0),
            AgentState::at_rest(3, 2.0, 0.0),
        ];
        let goals = vec![
            GoalSpec::fixed(1, 2.0, 3.0),
            GoalSpec::fixed(2, 0.0, 3.0),
            GoalSpec::fixed(3, 1.0, 3.0),
        ];
        let settled = BTreeMap::new();
        let mut st = AssignmentState::new(states.iter().map(|s| s.id), 10.0);
        let all = states.iter().map(|s| s.id).collect();
        let rep = assignment_round(&mut st, &all, &ctx(&states, &goals, &settled, f64::INFINITY)).unwrap();
        assert_eq!(rep.iterations, 1);
        assert!(rep.bans.is_empty());
        assert_eq!(st.prescribed[&AgentId(1)], GoalId(2));
        assert_eq!(st.prescribed[&AgentId(2)], GoalId(3));
        assert_eq!(st.prescribed[&AgentId(3)], GoalId(1));
    }

    #[test]
    fn symmetric_pair_conflict_settles_with_one_ban() {
        // agents 1 and 2 each see a third agent that pulls the joint solve
        // toward goal 1 for both of them
        let states = vec![
            AgentState::at_rest(1, -1.0, 0.0),
            AgentState::at_rest(2, 1.0, 0.0),
        ];
        let goals = vec![GoalSpec::fixed(1, 0.0, 1.0), GoalSpec::fixed(2, 0.0, 9.0)];
        let settled = BTreeMap::new();
        let mut st = AssignmentState::new(states.iter().map(|s| s.id), 10.0);
        // pretend both already hold goal 1 from earlier disjoint views
        st.prescribed.insert(AgentId(1), GoalId(1));
        st.prescribed.insert(AgentId(2), GoalId(1));
        let rep = assignment_round(&mut st, &BTreeSet::new(), &ctx(&states, &goals, &settled, 3.0)).unwrap();
        assert!(rep.iterations <= 2, "{}", rep.iterations);
        assert_eq!(rep.bans.len(), 1);
        assert_eq!(rep.bans[0].agent, AgentId(2));
        assert_eq!(rep.bans[0].level, BanLevel::Index);
        assert_eq!(st.prescribed[&AgentId(1)], GoalId(1));
        assert_eq!(st.prescribed[&AgentId(2)], GoalId(2));
        assert_eq!(st.deadlines[&AgentId(2)], 10.0);
        assert!(rep.changed.contains(&AgentId(2)));
    }

    #[test]
    fn settled_holder_keeps_its_goal() {
        let states = vec![AgentState::at_rest(1, 0.0, 1.0), AgentState::at_rest(2, 0.5, 0.0)];
        let goals = vec![GoalSpec::fixed(1, 0.0, 1.0), GoalSpec::fixed(2, 3.0, 0.0)];
        let settled = BTreeMap::from([(AgentId(1), GoalId(1))]);
        let mut st = AssignmentState::new(states.iter().map(|s| s.id), 10.0);
        st.prescribed.insert(AgentId(2), GoalId(1));
        let rep = assignment_round(&mut st, &BTreeSet::new(), &ctx(&states, &goals, &settled, 3.0)).unwrap();
        assert_eq!(rep.bans.len(), 1);
        assert_eq!(rep.bans[0].agent, AgentId(2));
        assert_eq!(rep.bans[0].level, BanLevel::Index);
        assert_eq!(st.prescribed[&AgentId(1)], GoalId(1));
        assert_eq!(st.prescribed[&AgentId(2)], GoalId(2));
    }

    #[test]
    fn clusters_are_independent() {
        let left = vec![AgentState::at_rest(1, 0.0, 0.0), AgentState::at_rest(2, 0.5, 0.0)];
        let right = vec![AgentState::at_rest(3, 50.0, 0.0), AgentState::at_rest(4, 50.5, 0.0)];
        let goals = vec![
            GoalSpec::fixed(1, 0.0, 2.0),
            GoalSpec::fixed(2, 0.6, 2.0),
            GoalSpec::fixed(3, 50.0, 2.0),
            GoalSpec::fixed(4, 50.6, 2.0),
        ];
        let settled = BTreeMap::new();
        let all: Vec<_> = left.iter().chain(&right).copied().collect();

        let run = |states: &[AgentState]| {
            let mut st = AssignmentState::new(states.iter().map(|s| s.id), 10.0);
            let act = states.iter().map(|s| s.id).collect();
            assignment_round(&mut st, &act, &ctx(states, &goals, &settled, 2.0)).unwrap();
            st.prescribed
        };
        let joint = run(&all);
        let mut separate = run(&left);
        separate.extend(run(&right));
        assert_eq!(joint, separate);
    }
}
