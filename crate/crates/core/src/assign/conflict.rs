use std::collections::{BTreeMap, BTreeSet};

use super::{BanLevel, ConflictSet, Resolution};
use crate::error::{Error, Result};
use crate::percept::LocalView;
use crate::world::{AgentId, GoalId};

/// Members of `i`'s view prescribed the same goal as `i`, if there is more
/// than one of them.
pub fn detect_conflict(
    i: AgentId,
    prescribed: &BTreeMap<AgentId, GoalId>,
    view: &LocalView,
) -> Option<ConflictSet> {
    let goal = *prescribed.get(&i)?;
    let competing: BTreeSet<AgentId> = view
        .members()
        .filter(|k| prescribed.get(k) == Some(&goal))
        .collect();
    (competing.len() > 1).then_some(ConflictSet {
        conflict_goal: goal,
        competing,
    })
}

/// Keeps the agents of `set` that maximize `key`.
fn argmax_set<K: PartialOrd + Copy>(set: &BTreeSet<AgentId>, key: impl Fn(AgentId) -> K) -> BTreeSet<AgentId> {
    let best = set
        .iter()
        .map(|&a| key(a))
        .fold(None, |acc: Option<K>, k| match acc {
            Some(b) if b >= k => Some(b),
            _ => Some(k),
        });
    set.iter().copied().filter(|&a| Some(key(a)) == best).collect()
}

/// Runs the tiebreakers over a conflict: larger neighborhood first, then the
/// agent farther from the conflict goal, then the lowest index.
///
/// Every quantity is read from `view`, so all contestants holding the same
/// information name the same winner.
pub fn resolve_conflict(c: &ConflictSet, view: &LocalView) -> Result<Resolution> {
    if c.competing.len() < 2 {
        return Err(Error::Contract(format!(
            "conflict over goal {} needs at least two competitors, got {}",
            c.conflict_goal,
            c.competing.len()
        )));
    }
    let goal_pos = view.goal(c.conflict_goal)?.position(view.now);
    for &a in &c.competing {
        view.state(a)?;
    }

    let mut bans = BTreeMap::new();
    let level1 = c.competing.clone();

    let level2 = argmax_set(&level1, |a| view.neighborhood_size(a));
    for &a in level1.difference(&level2) {
        bans.insert(a, BanLevel::NeighborhoodSize);
    }

    let distance = |a: AgentId| (view.neighbor_states[&a].position - goal_pos).norm();
    let level3 = if level2.len() == 1 {
        level2.clone()
    } else {
        let eligible = argmax_set(&level2, distance);
        for &a in level2.difference(&eligible) {
            bans.insert(a, BanLevel::Distance);
        }
        eligible
    };

    let winner = *level3.iter().next().expect("non-empty");
    for &a in level3.iter().skip(1) {
        bans.insert(a, BanLevel::Index);
    }

    Ok(Resolution {
        conflict_goal: c.conflict_goal,
        winner,
        bans,
        levels: [level1, level2, level3],
    })
}
