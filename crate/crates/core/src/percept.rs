//! Neighborhoods and the local view each agent plans from.
//!
//! Observation is perfect and delay-free: a view is a consistent snapshot of
//! every neighbor's state, ban set, deadline and neighborhood size at `now`.

use std::collections::{BTreeMap, BTreeSet};

use crate::assign::BannedGoalSet;
use crate::error::{Error, Result};
use crate::world::{AgentId, AgentState, GoalId, GoalSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct Neighborhood {
    pub owner: AgentId,
    /// Always contains `owner`.
    pub members: BTreeSet<AgentId>,
    pub computed_at: f64,
}

impl Neighborhood {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

fn find(states: &[AgentState], id: AgentId) -> Result<&AgentState> {
    states
        .iter()
        .find(|s| s.id == id)
        .ok_or(Error::UnknownAgent(id))
}

/// Agents within distance `h` of agent `i`, boundary included.
pub fn neighborhood(i: AgentId, states: &[AgentState], h: f64, now: f64) -> Result<Neighborhood> {
    let me = find(states, i)?;
    let members = states
        .iter()
        .filter(|s| (s.position - me.position).norm() <= h)
        .map(|s| s.id)
        .collect();
    Ok(Neighborhood {
        owner: i,
        members,
        computed_at: now,
    })
}

pub fn separating_distance(i: AgentId, j: AgentId, states: &[AgentState]) -> Result<f64> {
    let a = find(states, i)?;
    let b = find(states, j)?;
    Ok((a.position - b.position).norm())
}

/// Everything shared between agents at one instant.
#[derive(Debug, Clone, Copy)]
pub struct Snapshot<'a> {
    pub states: &'a [AgentState],
    pub banned: &'a BTreeMap<AgentId, BannedGoalSet>,
    pub deadlines: &'a BTreeMap<AgentId, f64>,
    /// Agents that reached their goal and now hold it.
    pub settled: &'a BTreeMap<AgentId, GoalId>,
    pub goals: &'a [GoalSpec],
    pub h: f64,
    pub now: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalView {
    pub owner: AgentId,
    pub now: f64,
    pub neighbor_states: BTreeMap<AgentId, AgentState>,
    pub neighbor_banned: BTreeMap<AgentId, BannedGoalSet>,
    pub neighbor_deadlines: BTreeMap<AgentId, f64>,
    /// `|N_j|` as broadcast by each member `j`.
    pub neighborhood_sizes: BTreeMap<AgentId, usize>,
    /// Members holding a goal they already reached.
    pub settled: BTreeMap<AgentId, GoalId>,
    pub goals: Vec<GoalSpec>,
}

impl LocalView {
    pub fn members(&self) -> impl Iterator<Item = AgentId> + '_ {
        self.neighbor_states.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.neighbor_states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbor_states.is_empty()
    }

    pub fn contains(&self, id: AgentId) -> bool {
        self.neighbor_states.contains_key(&id)
    }

    pub fn state(&self, id: AgentId) -> Result<&AgentState> {
        self.neighbor_states.get(&id).ok_or(Error::UnknownAgent(id))
    }

    pub fn banned(&self, id: AgentId) -> &BannedGoalSet {
        static EMPTY: BannedGoalSet = BannedGoalSet::new();
        self.neighbor_banned.get(&id).unwrap_or(&EMPTY)
    }

    pub fn deadline(&self, id: AgentId) -> Result<f64> {
        self.neighbor_deadlines
            .get(&id)
            .copied()
            .ok_or(Error::UnknownAgent(id))
    }

    pub fn neighborhood_size(&self, id: AgentId) -> usize {
        self.neighborhood_sizes.get(&id).copied().unwrap_or(0)
    }

    pub fn goal(&self, id: GoalId) -> Result<&GoalSpec> {
        self.goals
            .iter()
            .find(|g| g.id == id)
            .ok_or(Error::UnknownGoal(id))
    }
}

/// Snapshot of agent `i`'s neighborhood at `snap.now`.
pub fn build_local_view(i: AgentId, snap: &Snapshot<'_>) -> Result<LocalView> {
    let hood = neighborhood(i, snap.states, snap.h, snap.now)?;
    let mut view = LocalView {
        owner: i,
        now: snap.now,
        neighbor_states: BTreeMap::new(),
        neighbor_banned: BTreeMap::new(),
        neighbor_deadlines: BTreeMap::new(),
        neighborhood_sizes: BTreeMap::new(),
        settled: BTreeMap::new(),
        goals: snap.goals.to_vec(),
    };
    for &j in &hood.members {
        let state = *find(snap.states, j)?;
        view.neighbor_states.insert(j, state);
        view.neighbor_banned
            .insert(j, snap.banned.get(&j).cloned().unwrap_or_default());
        let deadline = snap
            .deadlines
            .get(&j)
            .copied()
            .ok_or(Error::UnknownAgent(j))?;
        view.neighbor_deadlines.insert(j, deadline);
        let size = neighborhood(j, snap.states, snap.h, snap.now)?.len();
        view.neighborhood_sizes.insert(j, size);
        if let Some(&g) = snap.settled.get(&j) {
            view.settled.insert(j, g);
        }
    }
    Ok(view)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::Vec2;
    use proptest::prelude::*;

    fn line(xs: &[f64]) -> Vec<AgentState> {
        xs.iter()
            .enumerate()
            .map(|(k, &x)| AgentState::at_rest(k as u32 + 1, x, 0.0))
            .collect()
    }

    fn ids(v: &[u32]) -> BTreeSet<AgentId> {
        v.iter().map(|&k| AgentId(k)).collect()
    }

    struct Registry {
        banned: BTreeMap<AgentId, BannedGoalSet>,
        deadlines: BTreeMap<AgentId, f64>,
        settled: BTreeMap<AgentId, GoalId>,
        goals: Vec<GoalSpec>,
    }

    impl Registry {
        fn new(states: &[AgentState]) -> Self {
            Registry {
                banned: BTreeMap::new(),
                deadlines: states.iter().map(|s| (s.id, 10.0)).collect(),
                settled: BTreeMap::new(),
                goals: (1..=states.len() as u32)
                    .map(|k| GoalSpec::fixed(k, k as f64, 5.0))
                    .collect(),
            }
        }

        fn snapshot<'a>(&'a self, states: &'a [AgentState], h: f64) -> Snapshot<'a> {
            Snapshot {
                states,
                banned: &self.banned,
                deadlines: &self.deadlines,
                settled: &self.settled,
                goals: &self.goals,
                h,
                now: 0.0,
            }
        }
    }

    #[test]
    fn infinite_radius_sees_everyone() {
        let s = line(&[0.0, 10.0, 1e6]);
        let n = neighborhood(AgentId(2), &s, f64::INFINITY, 0.0).unwrap();
        assert_eq!(n.members, ids(&[1, 2, 3]));
    }

    #[test]
    fn boundary_distance_is_inside() {
        let s = line(&[0.0, 1.5]);
        for i in [1, 2] {
            let n = neighborhood(AgentId(i), &s, 1.5, 0.0).unwrap();
            assert_eq!(n.members, ids(&[1, 2]));
        }
    }

    #[test]
    fn middle_agent_misses_far_neighbor() {
        let h = 1.0;
        let s = line(&[0.0, h, 2.5 * h]);
        let n = neighborhood(AgentId(2), &s, h, 0.0).unwrap();
        assert_eq!(n.members, ids(&[1, 2]));
        assert_eq!(n.owner, AgentId(2));
    }

    #[test]
    fn unknown_agent_is_an_error() {
        let s = line(&[0.0]);
        assert_eq!(
            neighborhood(AgentId(9), &s, 1.0, 0.0).unwrap_err(),
            Error::UnknownAgent(AgentId(9))
        );
        assert!(separating_distance(AgentId(1), AgentId(4), &s).is_err());
    }

    #[test]
    fn separating_distance_basics() {
        let mut s = line(&[0.0, 0.0]);
        s[1].position = Vec2::new(3.0, 4.0);
        assert_eq!(separating_distance(AgentId(1), AgentId(1), &s).unwrap(), 0.0);
        assert_eq!(separating_distance(AgentId(1), AgentId(2), &s).unwrap(), 5.0);
    }

    #[test]
    fn isolated_agent_sees_only_itself() {
        let s = line(&[0.0, 5.0]);
        let reg = Registry::new(&s);
        let v = build_local_view(AgentId(1), &reg.snapshot(&s, 1.0)).unwrap();
        assert_eq!(v.members().collect::<Vec<_>>(), vec![AgentId(1)]);
        assert_eq!(v.neighborhood_size(AgentId(1)), 1);
    }

    #[test]
    fn centralized_view_contains_all_ban_sets() {
        let s = line(&[0.0, 5.0, 9.0]);
        let mut reg = Registry::new(&s);
        let mut b = BannedGoalSet::default();
        b.insert(crate::assign::BanLevel::Distance, GoalId(2));
        reg.banned.insert(AgentId(3), b.clone());
        let v = build_local_view(AgentId(1), &reg.snapshot(&s, f64::INFINITY)).unwrap();
        assert_eq!(v.len(), 3);
        assert_eq!(v.banned(AgentId(3)), &b);
        assert_eq!(v.neighbor_banned.len(), 3);
        assert_eq!(v.neighbor_deadlines.len(), 3);
    }

    #[test]
    fn disjoint_clusters_never_mix() {
        let s = line(&[0.0, 0.5, 1.0, 10.0, 10.5]);
        let reg = Registry::new(&s);
        let snap = reg.snapshot(&s, 1.2);
        let left = ids(&[1, 2, 3]);
        let right = ids(&[4, 5]);
        for a in &s {
            let v = build_local_view(a.id, &snap).unwrap();
            let m: BTreeSet<_> = v.members().collect();
            let cluster = if left.contains(&a.id) { &left } else { &right };
            assert!(m.is_subset(cluster), "{m:?}");
            assert!(m.contains(&a.id));
        }
    }

    fn arb_states() -> impl Strategy<Value = Vec<AgentState>> {
        prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64), 1..12).prop_map(|pts| {
            pts.into_iter()
                .enumerate()
                .map(|(k, (x, y))| AgentState::at_rest(k as u32 + 1, x, y))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn membership_is_symmetric(s in arb_states(), h in 0.1..6.0f64) {
            for a in &s {
                let na = neighborhood(a.id, &s, h, 0.0).unwrap();
                prop_assert!(na.members.contains(&a.id));
                for b in &s {
                    let nb = neighborhood(b.id, &s, h, 0.0).unwrap();
                    prop_assert_eq!(na.members.contains(&b.id), nb.members.contains(&a.id));
                }
            }
        }

        #[test]
        fn membership_grows_with_radius(s in arb_states(), h1 in 0.1..6.0f64, extra in 0.0..6.0f64) {
            for a in &s {
                let small = neighborhood(a.id, &s, h1, 0.0).unwrap();
                let large = neighborhood(a.id, &s, h1 + extra, 0.0).unwrap();
                prop_assert!(small.members.is_subset(&large.members));
                let all = neighborhood(a.id, &s, f64::INFINITY, 0.0).unwrap();
                prop_assert_eq!(all.len(), s.len());
            }
        }

        #[test]
        fn distance_is_symmetric(s in arb_states()) {
            for a in &s {
                for b in &s {
                    let d = separating_distance(a.id, b.id, &s).unwrap();
                    let oracle = ((a.position.x - b.position.x).powi(2)
                        + (a.position.y - b.position.y).powi(2)).sqrt();
                    prop_assert!((d - oracle).abs() < 1e-12);
                    prop_assert_eq!(d, separating_distance(b.id, a.id, &s).unwrap());
                }
            }
        }
    }
}
