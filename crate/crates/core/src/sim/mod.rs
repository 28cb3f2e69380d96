//! Fixed-step simulation.
//!
//! Every tick advances each agent along its committed motion by exactly
//! `dt`, charges the control energy, checks separation and arrival, and
//! recomputes neighborhoods. Agents whose neighborhood size changed, or
//! whose committed motion would bring them too close to a neighbor's, run
//! an assignment round and replan in priority order.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use log::{debug, info};

use crate::assign::{assignment_round, AssignmentState, RoundContext};
use crate::error::{Error, Result};
use crate::percept::{build_local_view, neighborhood, Snapshot};
use crate::traj::{bundle, solve_constrained, Limits, Motion, PlanParams, TrajectoryBundle};
use crate::world::{validate_scenario, AgentId, AgentState, EnergyAccumulator, GoalId, Scenario};

mod trace;

pub use trace::{Metrics, Trace, TraceRow, TRACE_HEADER};

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Position tolerance for arrival, m.
    pub arrival_tol: f64,
    /// Velocity tolerance for arrival, m/s.
    pub arrival_vel_tol: f64,
    /// Grid-point margin beyond `2R`, as a fraction of `R`.
    pub buffer_factor: f64,
    /// Replan on any change of neighbor set, not only of its size.
    pub membership_trigger: bool,
    /// Replan when two neighbors' committed motions come too close.
    pub conflict_trigger: bool,
    /// Re-solve the local assignment for every triggered agent. When off,
    /// a triggered agent keeps its goal unless a conflict bans it from
    /// that goal, and still replans its trajectory.
    pub resolve_on_trigger: bool,
    /// Give up once simulated time exceeds this multiple of the duration.
    pub guard_factor: f64,
    /// Keep every solved assignment matrix in the trace.
    pub keep_matrices: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            arrival_tol: 0.01,
            arrival_vel_tol: 0.01,
            buffer_factor: 0.1,
            membership_trigger: false,
            conflict_trigger: true,
            resolve_on_trigger: false,
            guard_factor: 10.0,
            keep_matrices: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimState {
    pub t: f64,
    pub agents: Vec<AgentState>,
    pub assignment: AssignmentState,
    pub bundles: BTreeMap<AgentId, TrajectoryBundle>,
    /// Agents that reached their goal, with the goal they hold.
    pub arrived: BTreeMap<AgentId, GoalId>,
    pub energy: EnergyAccumulator,
    pub prev_neighborhood_sizes: BTreeMap<AgentId, usize>,
    pub prev_neighbors: BTreeMap<AgentId, BTreeSet<AgentId>>,
    pub ticks: u64,
}

impl SimState {
    /// The motion agent `id` is currently following.
    pub fn motion(&self, id: AgentId) -> Option<&Motion> {
        self.bundles.get(&id).map(|b| b.prescribed())
    }
}

pub struct Simulator {
    scenario: Scenario,
    config: SimConfig,
    params: PlanParams,
    state: SimState,
    trace: Trace,
    n_replans: usize,
}

impl Simulator {
    /// Validates the scenario and computes the initial assignment and
    /// motions of every agent at `t = 0`.
    pub fn new(scenario: Scenario, config: SimConfig) -> Result<Self> {
        let violations = validate_scenario(&scenario);
        if !violations.is_empty() {
            return Err(Error::InvalidScenario(
                violations.iter().map(|v| v.to_string()).collect(),
            ));
        }
        let ids: Vec<AgentId> = scenario.agents.iter().map(|a| a.id).collect();
        let params = PlanParams {
            limits: Limits {
                u_max: scenario.u_max,
                v_max: scenario.v_max,
            },
            radius: scenario.radius,
            buffer: config.buffer_factor * scenario.radius,
            step_hint: scenario.dt / 2.0,
        };
        let state = SimState {
            t: 0.0,
            agents: scenario.agents.clone(),
            assignment: AssignmentState::new(ids.iter().copied(), scenario.deadline),
            bundles: BTreeMap::new(),
            arrived: BTreeMap::new(),
            energy: EnergyAccumulator::new(ids.iter().copied()),
            prev_neighborhood_sizes: BTreeMap::new(),
            prev_neighbors: BTreeMap::new(),
            ticks: 0,
        };
        let mut sim = Simulator {
            scenario,
            config,
            params,
            state,
            trace: Trace {
                min_separation: f64::INFINITY,
                ..Trace::default()
            },
            n_replans: 0,
        };
        let neighbors = sim.neighbor_sets()?;
        sim.replan(ids.iter().copied().collect(), &neighbors)?;
        sim.remember(neighbors.clone());
        sim.check_safety()?;
        sim.record_rows(&neighbors)?;
        Ok(sim)
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn all_arrived(&self) -> bool {
        self.state.arrived.len() == self.state.agents.len()
    }

    /// Advances one tick.
    pub fn step(&mut self) -> Result<()> {
        let t0 = self.state.t;
        let ticks = self.state.ticks + 1;
        let t1 = ticks as f64 * self.scenario.dt;
        for a in self.state.agents.iter_mut() {
            let motion = self.state.bundles[&a.id].prescribed();
            let s = motion.state(t1);
            a.position = s.position;
            a.velocity = s.velocity;
            self.state.energy.add(a.id, motion.energy_between(t0, t1));
        }
        self.state.t = t1;
        self.state.ticks = ticks;
        self.check_safety()?;
        self.detect_arrivals();

        let neighbors = self.neighbor_sets()?;
        let mut trigger: BTreeSet<AgentId> = BTreeSet::new();
        for (id, set) in &neighbors {
            let changed = if self.config.membership_trigger {
                self.state.prev_neighbors.get(id) != Some(set)
            } else {
                self.state.prev_neighborhood_sizes.get(id) != Some(&set.len())
            };
            if changed {
                trigger.insert(*id);
            }
        }
        if self.config.conflict_trigger {
            trigger.extend(self.motion_conflicts(&neighbors));
        }
        trigger.retain(|a| !self.state.arrived.contains_key(a));
        if !trigger.is_empty() {
            debug!("t = {t1:.3}: replanning {trigger:?}");
            self.replan(trigger, &neighbors)?;
        }
        self.remember(neighbors.clone());
        self.record_rows(&neighbors)?;
        Ok(())
    }

    /// Steps until the duration has passed and every agent has arrived.
    pub fn run(&mut self) -> Result<Metrics> {
        let guard = self.config.guard_factor * self.scenario.duration;
        while self.state.t < self.scenario.duration - 1e-9 || !self.all_arrived() {
            if self.state.t > guard {
                return Err(Error::NonTermination(self.state.t));
            }
            self.step()?;
        }
        info!(
            "finished at t = {:.2} s with {} bans and {} replans",
            self.state.t,
            self.trace.bans.len(),
            self.n_replans
        );
        Ok(self.metrics())
    }

    pub fn metrics(&self) -> Metrics {
        Metrics {
            h: self.scenario.h,
            min_separation_m: self.trace.min_separation,
            total_energy_kj_per_kg: self.state.energy.total() / 1000.0,
            t_f_s: self.trace.arrivals.values().copied().fold(0.0, f64::max),
            n_replans: self.n_replans,
            n_bans: self.trace.bans.len(),
        }
    }

    pub fn into_trace(self) -> Trace {
        self.trace
    }

    fn neighbor_sets(&self) -> Result<BTreeMap<AgentId, BTreeSet<AgentId>>> {
        self.state
            .agents
            .iter()
            .map(|a| {
                neighborhood(a.id, &self.state.agents, self.scenario.h, self.state.t)
                    .map(|n| (a.id, n.members))
            })
            .collect()
    }

    fn remember(&mut self, neighbors: BTreeMap<AgentId, BTreeSet<AgentId>>) {
        self.state.prev_neighborhood_sizes = neighbors.iter().map(|(k, v)| (*k, v.len())).collect();
        self.state.prev_neighbors = neighbors;
    }

    fn check_safety(&mut self) -> Result<()> {
        let limit = 2.0 * self.scenario.radius;
        let agents = &self.state.agents;
        for (i, a) in agents.iter().enumerate() {
            for b in &agents[i + 1..] {
                let d = (a.position - b.position).norm();
                self.trace.min_separation = self.trace.min_separation.min(d);
                if d <= limit {
                    return Err(Error::Collision {
                        a: a.id,
                        b: b.id,
                        t: self.state.t,
                        separation: d,
                        limit,
                    });
                }
            }
        }
        Ok(())
    }

    fn detect_arrivals(&mut self) {
        let t = self.state.t;
        for a in &self.state.agents {
            if self.state.arrived.contains_key(&a.id) {
                continue;
            }
            let Some(&g) = self.state.assignment.prescribed.get(&a.id) else {
                continue;
            };
            let goal = self.scenario.goal(g).expect("prescribed goals exist");
            if (a.position - goal.position(t)).norm() < self.config.arrival_tol
                && (a.velocity - goal.velocity(t)).norm() < self.config.arrival_vel_tol
            {
                debug!("agent {} arrived at goal {g} at t = {t:.3}", a.id);
                self.state.arrived.insert(a.id, g);
                self.trace.arrivals.insert(a.id, t);
                let bundle = self.state.bundles.get_mut(&a.id).expect("every agent has a bundle");
                bundle.trajectories.insert(a.id, Motion::holding(*goal));
            }
        }
    }

    /// Unarrived agents whose committed motion comes within clearance of a
    /// current neighbor's before both have arrived.
    fn motion_conflicts(&self, neighbors: &BTreeMap<AgentId, BTreeSet<AgentId>>) -> BTreeSet<AgentId> {
        let limit = 2.0 * self.scenario.radius + 0.5 * self.params.buffer;
        let step = self.params.step_hint;
        let t = self.state.t;
        let mut out = BTreeSet::new();
        for (&i, set) in neighbors {
            for &j in set.range((std::ops::Bound::Excluded(i), std::ops::Bound::Unbounded)) {
                let (ai, aj) = (self.state.arrived.contains_key(&i), self.state.arrived.contains_key(&j));
                if ai && aj {
                    continue;
                }
                let (mi, mj) = (self.state.motion(i).unwrap(), self.state.motion(j).unwrap());
                let end = mi.arrival().max(mj.arrival()).max(t) + step;
                if bundle::min_separation(mi, mj, t + step, end, step) < limit {
                    debug!("t = {t:.3}: committed motions of {i} and {j} conflict");
                    if !ai {
                        out.insert(i);
                    }
                    if !aj {
                        out.insert(j);
                    }
                }
            }
        }
        out
    }

    /// Runs an assignment round for `trigger` and replans every agent whose
    /// goal or deadline moved, in priority order.
    fn replan(&mut self, trigger: BTreeSet<AgentId>, neighbors: &BTreeMap<AgentId, BTreeSet<AgentId>>) -> Result<()> {
        let now = self.state.t;
        let before = self.state.assignment.prescribed.clone();
        let banned_before = self.state.assignment.banned.clone();
        let ctx = RoundContext {
            states: &self.state.agents,
            goals: &self.scenario.goals,
            settled: &self.state.arrived,
            h: self.scenario.h,
            now,
            extension: self.scenario.deadline,
        };
        let solvers: BTreeSet<AgentId> = if self.config.resolve_on_trigger || self.state.ticks == 0 {
            trigger.clone()
        } else {
            trigger
                .iter()
                .copied()
                .filter(|a| match self.state.assignment.prescribed.get(a) {
                    Some(g) => self.state.assignment.banned.get(a).is_some_and(|b| b.contains(*g)),
                    None => true,
                })
                .collect()
        };
        let report = assignment_round(&mut self.state.assignment, &solvers, &ctx)?;
        for (a, old) in &banned_before {
            if !old.is_subset(&self.state.assignment.banned[a]) {
                return Err(Error::Contract(format!("ban set of agent {a} shrank")));
            }
        }
        self.trace.round_iterations.push(report.iterations);
        self.trace.bans.extend(report.bans.iter().cloned());
        self.trace.assignments.extend(report.records.iter().cloned());
        if self.config.keep_matrices {
            self.trace.matrices.extend(report.matrices.iter().cloned());
        }
        for (a, g) in &self.state.assignment.prescribed {
            if before.get(a) != Some(g) {
                self.trace.goal_changes.push((now, *a, *g));
            }
        }

        let mut pending: BTreeSet<AgentId> = trigger.union(&report.changed).copied().collect();
        pending.retain(|a| !self.state.arrived.contains_key(a));
        self.n_replans += pending.len();

        let mut queue: VecDeque<AgentId> = self.global_order(&pending, neighbors).into();
        let mut reopened: BTreeSet<AgentId> = BTreeSet::new();
        while let Some(i) = queue.pop_front() {
            let motion = match self.plan_agent(i, &pending) {
                Ok(m) => m,
                // a neighbor's committed motion leaves no room: plan it again
                // after this agent instead of keeping it fixed
                Err(Error::InfeasibleTrajectory { blocking: Some(j), .. })
                    if !pending.contains(&j)
                        && !self.state.arrived.contains_key(&j)
                        && reopened.insert(j) =>
                {
                    debug!("t = {now:.3}: agent {i} reopens the plan of {j}");
                    pending.insert(j);
                    self.n_replans += 1;
                    queue.push_front(j);
                    queue.push_front(i);
                    continue;
                }
                Err(e) => return Err(e),
            };
            if let Some(tr) = &motion.trajectory {
                self.trace.approach_violations += tr.approach_violations(tr.pf, self.params.step_hint, 1e-6);
            }
            let bundle = TrajectoryBundle {
                owner: i,
                trajectories: BTreeMap::from([(i, motion)]),
            };
            self.state.bundles.insert(i, bundle);
            pending.remove(&i);
        }
        Ok(())
    }

    fn global_order(&self, agents: &BTreeSet<AgentId>, neighbors: &BTreeMap<AgentId, BTreeSet<AgentId>>) -> Vec<AgentId> {
        let t = self.state.t;
        bundle::rank(
            self.state
                .agents
                .iter()
                .filter(|a| agents.contains(&a.id))
                .map(|a| {
                    let g = self.state.assignment.prescribed[&a.id];
                    let goal = self.scenario.goal(g).expect("prescribed goals exist");
                    (a.id, neighbors[&a.id].len(), (a.position - goal.position(t)).norm())
                })
                .collect(),
        )
    }

    /// Plans agent `i` against the committed motions of its neighbors. When
    /// no plan meets the deadline, the deadline moves to `now + T` and the
    /// plan is retried once.
    fn plan_agent(&mut self, i: AgentId, pending: &BTreeSet<AgentId>) -> Result<Motion> {
        let now = self.state.t;
        let committed: BTreeMap<AgentId, Motion> = self
            .state
            .bundles
            .iter()
            .filter(|(a, _)| **a != i && !pending.contains(a))
            .map(|(a, b)| (*a, b.prescribed().clone()))
            .collect();
        let mut attempt = 0;
        loop {
            let snap = Snapshot {
                states: &self.state.agents,
                banned: &self.state.assignment.banned,
                deadlines: &self.state.assignment.deadlines,
                settled: &self.state.arrived,
                goals: &self.scenario.goals,
                h: self.scenario.h,
                now,
            };
            let view = build_local_view(i, &snap)?;
            let mut order = vec![i];
            order.extend(bundle::priority_order(&view, &self.state.assignment).into_iter().filter(|a| *a != i));
            match solve_constrained(&view, &self.state.assignment, &order, &committed, &self.params) {
                Ok(b) => return Ok(b.prescribed().clone()),
                Err(e @ (Error::InfeasibleTrajectory { .. } | Error::DegenerateHorizon { .. })) if attempt == 0 => {
                    let extended = now + self.scenario.deadline;
                    debug!("agent {i}: {e}; deadline moves to {extended:.3}");
                    self.state.assignment.deadlines.insert(i, extended);
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }

    fn record_rows(&mut self, neighbors: &BTreeMap<AgentId, BTreeSet<AgentId>>) -> Result<()> {
        let t = self.state.t;
        for a in &self.state.agents {
            let u = self.state.bundles[&a.id].prescribed().state(t).control;
            let goal = self.state.assignment.prescribed[&a.id];
            self.trace.rows.push(TraceRow {
                t,
                agent_id: a.id,
                px: a.position.x,
                py: a.position.y,
                vx: a.velocity.x,
                vy: a.velocity.y,
                ux: u.x,
                uy: u.y,
                goal_id: goal,
                n_neighbors: neighbors[&a.id].len(),
                n_banned: self.state.assignment.banned.get(&a.id).map_or(0, |b| b.len()),
            });
        }
        Ok(())
    }
}

/// Runs a scenario to completion.
pub fn run(scenario: &Scenario, config: &SimConfig) -> Result<(Trace, Metrics)> {
    let mut sim = Simulator::new(scenario.clone(), config.clone())?;
    let metrics = sim.run()?;
    Ok((sim.into_trace(), metrics))
}
