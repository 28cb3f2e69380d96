//! Minimum-energy trajectories for double-integrator agents.
//!
//! Without active constraints the optimal control on each axis is affine in
//! time and the position a cubic ([`min_energy_unconstrained`]). When speed,
//! acceleration or separation limits bind, the control is solved on a time
//! grid as a convex program with zero-order-hold control ([`plan`]), and
//! [`solve_constrained`] sequences those solves over a neighborhood in
//! priority order.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::world::{AgentId, GoalSpec, Vec2};

mod analytic;
pub(crate) mod bundle;
mod qp;

pub use analytic::min_energy_unconstrained;
pub use bundle::{priority_order, solve_constrained, PlanParams};
pub use qp::{grid_steps, plan, Limits, Obstacle, PlanRequest};

/// Slack for evaluating a trajectory at its own endpoints.
const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub position: Vec2,
    pub velocity: Vec2,
    pub control: Vec2,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    /// `u(t) = alpha + beta (t − t0)` per axis.
    Affine { alpha: Vec2, beta: Vec2 },
    /// Piecewise-constant control on a uniform grid, with the state at each
    /// grid point (`knots.len() == controls.len() + 1`).
    Sampled {
        step: f64,
        controls: Vec<Vec2>,
        knots: Vec<(Vec2, Vec2)>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub agent: AgentId,
    pub t0: f64,
    pub tf: f64,
    pub p0: Vec2,
    pub v0: Vec2,
    pub pf: Vec2,
    pub vf: Vec2,
    pub profile: Profile,
}

fn affine_energy(alpha: f64, beta: f64, s: f64) -> f64 {
    // ∫₀ˢ (α + βx)² dx
    alpha * alpha * s + alpha * beta * s * s + beta * beta * s * s * s / 3.0
}

impl Trajectory {
    pub fn is_analytic(&self) -> bool {
        matches!(self.profile, Profile::Affine { .. })
    }

    pub fn duration(&self) -> f64 {
        self.tf - self.t0
    }

    /// State and control at `t`, which must lie in `[t0, tf]`.
    pub fn sample(&self, t: f64) -> Result<Sample> {
        if t < self.t0 - TIME_EPS || t > self.tf + TIME_EPS {
            return Err(Error::OutOfInterval {
                t,
                t0: self.t0,
                tf: self.tf,
            });
        }
        Ok(self.eval(t))
    }

    /// Like [`Trajectory::sample`] with `t` clamped into the interval.
    pub(crate) fn eval(&self, t: f64) -> Sample {
        let t = t.clamp(self.t0, self.tf);
        match &self.profile {
            Profile::Affine { alpha, beta } => {
                let s = t - self.t0;
                Sample {
                    position: self.p0 + self.v0 * s + alpha * (s * s / 2.0) + beta * (s * s * s / 6.0),
                    velocity: self.v0 + alpha * s + beta * (s * s / 2.0),
                    control: alpha + beta * s,
                }
            }
            Profile::Sampled { step, controls, knots } => {
                let k = (((t - self.t0) / step).floor() as usize).min(controls.len() - 1);
                let s = t - (self.t0 + k as f64 * step);
                let (p, v) = knots[k];
                let u = controls[k];
                Sample {
                    position: p + v * s + u * (s * s / 2.0),
                    velocity: v + u * s,
                    control: u,
                }
            }
        }
    }

    /// `½∫‖u‖² dt` over the whole interval.
    pub fn energy(&self) -> f64 {
        self.energy_between(self.t0, self.tf)
    }

    /// `½∫‖u‖² dt` over `[a, b] ∩ [t0, tf]`.
    pub fn energy_between(&self, a: f64, b: f64) -> f64 {
        let a = a.max(self.t0);
        let b = b.min(self.tf);
        if b <= a {
            return 0.0;
        }
        match &self.profile {
            Profile::Affine { alpha, beta } => {
                let (sa, sb) = (a - self.t0, b - self.t0);
                let axis = |al: f64, be: f64| affine_energy(al, be, sb) - affine_energy(al, be, sa);
                0.5 * (axis(alpha.x, beta.x) + axis(alpha.y, beta.y))
            }
            Profile::Sampled { step, controls, .. } => controls
                .iter()
                .enumerate()
                .map(|(k, u)| {
                    let lo = (self.t0 + k as f64 * step).max(a);
                    let hi = (self.t0 + (k + 1) as f64 * step).min(b);
                    if hi > lo {
                        0.5 * u.norm_squared() * (hi - lo)
                    } else {
                        0.0
                    }
                })
                .sum(),
        }
    }

    /// Position and velocity mismatch at both ends: `(start, end)`, each the
    /// larger of the position and velocity error norms.
    pub fn boundary_residuals(&self) -> (f64, f64) {
        let s = self.eval(self.t0);
        let e = self.eval(self.tf);
        (
            (s.position - self.p0).norm().max((s.velocity - self.v0).norm()),
            (e.position - self.pf).norm().max((e.velocity - self.vf).norm()),
        )
    }

    /// Sample times where distance to `target` grows by more than `eps`
    /// over one step of `step`. Used to watch the assumption that planned
    /// motion always closes on the assigned goal.
    pub fn approach_violations(&self, target: Vec2, step: f64, eps: f64) -> usize {
        let n = (self.duration() / step).ceil().max(1.0) as usize;
        let mut prev = (self.eval(self.t0).position - target).norm();
        let mut count = 0;
        for k in 1..=n {
            let t = (self.t0 + k as f64 * step).min(self.tf);
            let d = (self.eval(t).position - target).norm();
            if d > prev + eps {
                count += 1;
            }
            prev = d;
        }
        count
    }
}

/// An agent's committed motion: a trajectory to its goal, then tracking the
/// goal exactly from the trajectory's end onward.
#[derive(Debug, Clone, PartialEq)]
pub struct Motion {
    pub trajectory: Option<Trajectory>,
    pub goal: GoalSpec,
}

impl Motion {
    pub fn planned(trajectory: Trajectory, goal: GoalSpec) -> Self {
        Motion {
            trajectory: Some(trajectory),
            goal,
        }
    }

    pub fn holding(goal: GoalSpec) -> Self {
        Motion {
            trajectory: None,
            goal,
        }
    }

    /// Time from which the motion simply tracks its goal.
    pub fn arrival(&self) -> f64 {
        self.trajectory.as_ref().map_or(f64::NEG_INFINITY, |t| t.tf)
    }

    pub fn state(&self, t: f64) -> Sample {
        match &self.trajectory {
            Some(tr) if t <= tr.tf => tr.eval(t),
            _ => Sample {
                position: self.goal.position(t),
                velocity: self.goal.velocity(t),
                control: self.goal.acceleration(t),
            },
        }
    }

    pub fn position(&self, t: f64) -> Vec2 {
        self.state(t).position
    }

    pub fn energy_between(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let split = self.arrival();
        let planned = self
            .trajectory
            .as_ref()
            .map_or(0.0, |tr| tr.energy_between(a, b.min(split)));
        planned + self.goal.tracking_energy(a.max(split), b)
    }
}

/// `½∫‖u‖² dt` of a trajectory.
pub fn trajectory_energy(traj: &Trajectory) -> f64 {
    traj.energy()
}

/// The motions an agent computed for its whole neighborhood; the owner
/// follows its own entry.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryBundle {
    pub owner: AgentId,
    pub trajectories: BTreeMap<AgentId, Motion>,
}

impl TrajectoryBundle {
    pub fn prescribed(&self) -> &Motion {
        &self.trajectories[&self.owner]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_move() -> Trajectory {
        min_energy_unconstrained(
            AgentId(1),
            Vec2::zeros(),
            Vec2::zeros(),
            Vec2::new(1.0, 0.0),
            Vec2::zeros(),
            0.0,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn endpoints_and_midpoint() {
        let tr = unit_move();
        let s0 = tr.sample(0.0).unwrap();
        assert_eq!(s0.position, Vec2::zeros());
        assert_eq!(s0.velocity, Vec2::zeros());
        let s1 = tr.sample(1.0).unwrap();
        assert!((s1.position - Vec2::new(1.0, 0.0)).norm() < 1e-12);
        assert!(s1.velocity.norm() < 1e-12);
        let mid = tr.sample(0.5).unwrap();
        assert!((mid.position.x - 0.5).abs() < 1e-12);
        assert!(mid.control.norm() < 1e-12);
    }

    #[test]
    fn sampling_outside_interval_fails() {
        let tr = unit_move();
        assert!(matches!(tr.sample(1.5), Err(Error::OutOfInterval { .. })));
        assert!(tr.sample(-0.1).is_err());
    }

    #[test]
    fn energy_is_additive_over_pieces() {
        let tr = unit_move();
        let parts: f64 = (0..10)
            .map(|k| tr.energy_between(k as f64 * 0.1, (k + 1) as f64 * 0.1))
            .sum();
        assert!((parts - tr.energy()).abs() < 1e-12);
        assert!((trajectory_energy(&tr) - 6.0).abs() < 1e-12);
    }

    #[test]
    fn sampled_profile_zero_order_hold() {
        let controls = vec![Vec2::new(1.0, 0.0), Vec2::new(-1.0, 0.0)];
        let knots = vec![
            (Vec2::zeros(), Vec2::zeros()),
            (Vec2::new(0.5, 0.0), Vec2::new(1.0, 0.0)),
            (Vec2::new(1.0, 0.0), Vec2::zeros()),
        ];
        let tr = Trajectory {
            agent: AgentId(1),
            t0: 0.0,
            tf: 2.0,
            p0: Vec2::zeros(),
            v0: Vec2::zeros(),
            pf: Vec2::new(1.0, 0.0),
            vf: Vec2::zeros(),
            profile: Profile::Sampled {
                step: 1.0,
                controls,
                knots,
            },
        };
        assert_eq!(tr.sample(0.5).unwrap().control, Vec2::new(1.0, 0.0));
        assert_eq!(tr.sample(1.5).unwrap().control, Vec2::new(-1.0, 0.0));
        assert!((tr.sample(2.0).unwrap().position.x - 1.0).abs() < 1e-15);
        assert!((tr.energy() - 1.0).abs() < 1e-15);
        assert!((tr.energy_between(0.5, 1.5) - 0.5).abs() < 1e-15);
        let (a, b) = tr.boundary_residuals();
        assert!(a < 1e-15 && b < 1e-15);
    }

    #[test]
    fn motion_tracks_goal_after_arrival() {
        let mut goal = GoalSpec::fixed(1, 1.0, 0.0);
        goal.osc_amplitude = Vec2::new(0.0, 0.2);
        goal.osc_angular_frequency = 1.0;
        let m = Motion::planned(unit_move(), goal);
        assert_eq!(m.position(3.0), goal.position(3.0));
        assert!((m.energy_between(0.0, 1.0) - 6.0).abs() < 1e-12);
        let tail = m.energy_between(0.0, 4.0) - 6.0;
        assert!((tail - goal.tracking_energy(1.0, 4.0)).abs() < 1e-12);
        assert_eq!(Motion::holding(goal).position(2.0), goal.position(2.0));
    }

    #[test]
    fn straight_approach_has_no_violations() {
        let tr = unit_move();
        assert_eq!(tr.approach_violations(Vec2::new(1.0, 0.0), 0.01, 1e-9), 0);
        // overshooting target behind the start is moved away from
        assert!(tr.approach_violations(Vec2::new(-1.0, 0.0), 0.01, 1e-9) > 0);
    }
}
