//! Grid-based constrained minimum-energy planning.
//!
//! The control is held constant over `K` equal substeps of length `δ`, which
//! makes the discrete double-integrator update exact:
//!
//! ```text
//! v[k+1] = v[k] + δ u[k]
//! p[k+1] = p[k] + δ v[k] + δ²/2 u[k]
//! ```
//!
//! Each solve minimizes `½ δ Σ ‖u[k]‖²` subject to those dynamics, both
//! boundary states, `‖u[k]‖ ≤ u_max` and `‖v[k]‖ ≤ v_max` as second-order
//! cones, and a half-plane per (grid point, obstacle) pair that asks for
//! `clearance` from the obstacle's fixed motion. Half-planes carry a slack
//! with a steep linear penalty, so a target that cannot be met right away
//! (two agents already close at `t0`) does not make the program
//! infeasible. The half-planes are re-linearized around the latest path for
//! a bounded number of passes, and a path is accepted only if it keeps
//! `min_separation` at every grid point.

use std::collections::BTreeSet;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};

use super::{min_energy_unconstrained, Motion, Profile, Trajectory};
use crate::error::{Error, Result};
use crate::world::{AgentId, Vec2};

/// Fewest grid intervals over any horizon.
pub const MIN_GRID_STEPS: usize = 40;
/// Re-linearization passes before giving up.
pub const MAX_PASSES: usize = 5;

const BOUND_TOL: f64 = 1e-6;
const SEPARATION_TOL: f64 = 1e-7;
/// Objective weight per metre of half-plane slack.
const SLACK_WEIGHT: f64 = 1e4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Limits {
    pub u_max: f64,
    pub v_max: f64,
}

/// A fixed motion to keep clear of, from time `from` onward.
#[derive(Debug, Clone, Copy)]
pub struct Obstacle<'a> {
    pub agent: AgentId,
    pub motion: &'a Motion,
    pub from: f64,
}

#[derive(Debug, Clone)]
pub struct PlanRequest<'a> {
    pub agent: AgentId,
    pub t0: f64,
    pub tf: f64,
    pub p0: Vec2,
    pub v0: Vec2,
    pub pf: Vec2,
    pub vf: Vec2,
    pub limits: Limits,
    /// Center distance asked of the program at grid points.
    pub clearance: f64,
    /// Center distance an accepted path must keep at grid points.
    pub min_separation: f64,
    /// Preferred substep. Short horizons split it evenly until the horizon
    /// holds at least [`MIN_GRID_STEPS`] intervals, so grid points stay on
    /// multiples of the hint.
    pub step_hint: f64,
    pub obstacles: Vec<Obstacle<'a>>,
}

/// Number of equal grid intervals used for a horizon `tau`.
pub fn grid_steps(tau: f64, step_hint: f64) -> usize {
    let n = tau / step_hint;
    let n = if (n - n.round()).abs() < 1e-6 { n.round() } else { n.ceil() };
    let n = (n as usize).max(1);
    n * MIN_GRID_STEPS.div_ceil(n)
}

struct Grid {
    t0: f64,
    step: f64,
    steps: usize,
}

impl Grid {
    fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.step
    }
}

/// Smallest (separation − clearance) over grid points, with the obstacle
/// index and grid point where it occurs.
fn worst_gap(path: &[Vec2], grid: &Grid, req: &PlanRequest<'_>) -> Option<(f64, usize, usize)> {
    let mut worst: Option<(f64, usize, usize)> = None;
    for k in 1..=grid.steps {
        let t = grid.time(k);
        for (o, ob) in req.obstacles.iter().enumerate() {
            if t < ob.from {
                continue;
            }
            let gap = (path[k] - ob.motion.position(t)).norm() - req.clearance;
            if worst.is_none_or(|(w, _, _)| gap < w) {
                worst = Some((gap, o, k));
            }
        }
    }
    worst
}

fn within_limits(tr: &Trajectory, grid: &Grid, limits: &Limits) -> bool {
    (0..=grid.steps).all(|k| {
        let s = tr.eval(grid.time(k));
        s.velocity.norm() <= limits.v_max * (1.0 + BOUND_TOL)
            && s.control.norm() <= limits.u_max * (1.0 + BOUND_TOL)
    }) && tr.eval(tr.tf).control.norm() <= limits.u_max * (1.0 + BOUND_TOL)
}

/// Plans one agent's motion between two states around fixed obstacles.
///
/// Returns the closed-form trajectory when it already satisfies every
/// limit and clearance at the grid points; otherwise solves the gridded
/// program.
pub fn plan(req: &PlanRequest<'_>) -> Result<Trajectory> {
    let tau = req.tf - req.t0;
    if !(tau > 0.0) {
        return Err(Error::DegenerateHorizon {
            agent: req.agent,
            t0: req.t0,
            tf: req.tf,
        });
    }
    let steps = grid_steps(tau, req.step_hint);
    let grid = Grid {
        t0: req.t0,
        step: tau / steps as f64,
        steps,
    };

    let free = min_energy_unconstrained(req.agent, req.p0, req.v0, req.pf, req.vf, req.t0, req.tf)?;
    let free_path: Vec<Vec2> = (0..=steps).map(|k| free.eval(grid.time(k)).position).collect();
    let clear = worst_gap(&free_path, &grid, req).is_none_or(|(g, _, _)| g >= 0.0);
    if clear && within_limits(&free, &grid, &req.limits) {
        return Ok(free);
    }

    let activation = req.clearance.max(req.limits.v_max * grid.step * 2.0);
    let mut reference = free_path;
    let mut reference_vel: Vec<Vec2> = (0..=steps).map(|k| free.eval(grid.time(k)).velocity).collect();
    let mut active: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut blocking = None;
    let mut last_reason = String::from("no pass produced a separated path");
    let mut fallback: Option<(f64, Trajectory)> = None;

    for _pass in 0..MAX_PASSES {
        for k in 1..=steps {
            let t = grid.time(k);
            for (o, ob) in req.obstacles.iter().enumerate() {
                if t >= ob.from
                    && (reference[k] - ob.motion.position(t)).norm() < req.clearance + activation
                {
                    active.insert((k, o));
                }
            }
        }
        let cuts = half_planes(&active, &reference, &reference_vel, &grid, req);
        let controls = match solve_program(&grid, req, &cuts) {
            Ok(u) => u,
            Err(reason) => {
                last_reason = reason;
                blocking = active.iter().next().map(|&(_, o)| req.obstacles[o].agent);
                break;
            }
        };
        let tr = build_sampled(req, &grid, controls);
        let path: Vec<Vec2> = knots_of(&tr).iter().map(|(p, _)| *p).collect();
        let limits_ok = within_limits(&tr, &grid, &req.limits);
        match worst_gap(&path, &grid, req) {
            Some((gap, o, _)) if gap < -SEPARATION_TOL => {
                blocking = Some(req.obstacles[o].agent);
                let hard = gap + req.clearance - req.min_separation;
                last_reason = format!("separation short by {:.3e} m", -hard.min(gap));
                if limits_ok && hard > SEPARATION_TOL && fallback.as_ref().is_none_or(|(g, _)| gap > *g) {
                    fallback = Some((gap, tr.clone()));
                }
            }
            _ => {
                if limits_ok {
                    return Ok(tr);
                }
                last_reason = "limits violated after endpoint correction".into();
            }
        }
        reference_vel = knots_of(&tr).iter().map(|(_, v)| *v).collect();
        reference = path;
    }

    if let Some((_, tr)) = fallback {
        return Ok(tr);
    }
    Err(Error::InfeasibleTrajectory {
        agent: req.agent,
        blocking,
        reason: last_reason,
    })
}

fn knots_of(tr: &Trajectory) -> &[(Vec2, Vec2)] {
    match &tr.profile {
        Profile::Sampled { knots, .. } => knots,
        Profile::Affine { .. } => unreachable!("sampled trajectory expected"),
    }
}

struct Cut {
    k: usize,
    normal: Vec2,
    offset: f64,
}

/// Linearized separation constraints `normal · p[k] ≥ offset`.
///
/// Where the reference already clears the obstacle the normal points from
/// the obstacle to the reference. Where it cuts through, the normal is
/// perpendicular to the relative velocity, on one side per obstacle, so the
/// agent is pushed around rather than asked to jump through.
fn half_planes(
    active: &BTreeSet<(usize, usize)>,
    reference: &[Vec2],
    reference_vel: &[Vec2],
    grid: &Grid,
    req: &PlanRequest<'_>,
) -> Vec<Cut> {
    let mut sides = vec![0.0f64; req.obstacles.len()];
    let mut closest = vec![f64::INFINITY; req.obstacles.len()];
    for &(k, o) in active {
        let t = grid.time(k);
        let obs = req.obstacles[o].motion.state(t);
        let r = reference[k] - obs.position;
        if r.norm() < closest[o] {
            closest[o] = r.norm();
            let w = reference_vel[k] - obs.velocity;
            let cross = w.x * r.y - w.y * r.x;
            sides[o] = if cross < 0.0 { -1.0 } else { 1.0 };
        }
    }

    active
        .iter()
        .map(|&(k, o)| {
            let t = grid.time(k);
            let obs = req.obstacles[o].motion.state(t);
            let r = reference[k] - obs.position;
            let normal = if r.norm() >= req.clearance {
                r / r.norm()
            } else {
                let w = reference_vel[k] - obs.velocity;
                let w = if w.norm() > 1e-9 { w } else if r.norm() > 1e-9 { Vec2::new(-r.y, r.x) } else { Vec2::new(1.0, 0.0) };
                // left-hand perpendicular of the relative velocity
                Vec2::new(-w.y, w.x) * (sides[o] / w.norm())
            };
            Cut {
                k,
                normal,
                offset: normal.dot(&obs.position) + req.clearance,
            }
        })
        .collect()
}

/// Variable layout: `u[0..K]`, then `p[1..=K]`, then `v[1..=K]`, two
/// entries each, then one slack per half-plane.
struct Layout {
    steps: usize,
}

impl Layout {
    fn u(&self, k: usize, a: usize) -> usize {
        2 * k + a
    }
    fn p(&self, k: usize, a: usize) -> usize {
        2 * self.steps + 2 * (k - 1) + a
    }
    fn v(&self, k: usize, a: usize) -> usize {
        4 * self.steps + 2 * (k - 1) + a
    }
    fn slack(&self, c: usize) -> usize {
        6 * self.steps + c
    }
    fn len(&self, cuts: usize) -> usize {
        6 * self.steps + cuts
    }
}

#[derive(Default)]
struct Rows {
    i: Vec<usize>,
    j: Vec<usize>,
    v: Vec<f64>,
    b: Vec<f64>,
}

impl Rows {
    fn push(&mut self, coeffs: &[(usize, f64)], rhs: f64) {
        let row = self.b.len();
        for &(col, val) in coeffs {
            self.i.push(row);
            self.j.push(col);
            self.v.push(val);
        }
        self.b.push(rhs);
    }
}

fn solve_program(grid: &Grid, req: &PlanRequest<'_>, cuts: &[Cut]) -> std::result::Result<Vec<Vec2>, String> {
    let n = grid.steps;
    let d = grid.step;
    let lay = Layout { steps: n };
    let mut rows = Rows::default();

    // dynamics and boundary states
    for k in 0..n {
        for a in 0..2 {
            let mut vel = vec![(lay.v(k + 1, a), 1.0), (lay.u(k, a), -d)];
            let mut pos = vec![(lay.p(k + 1, a), 1.0), (lay.u(k, a), -0.5 * d * d)];
            let (vb, pb) = if k == 0 {
                (req.v0[a], req.p0[a] + d * req.v0[a])
            } else {
                vel.push((lay.v(k, a), -1.0));
                pos.push((lay.p(k, a), -1.0));
                pos.push((lay.v(k, a), -d));
                (0.0, 0.0)
            };
            rows.push(&vel, vb);
            rows.push(&pos, pb);
        }
    }
    for a in 0..2 {
        rows.push(&[(lay.p(n, a), 1.0)], req.pf[a]);
        rows.push(&[(lay.v(n, a), 1.0)], req.vf[a]);
    }
    let n_eq = rows.b.len();

    for (c, cut) in cuts.iter().enumerate() {
        rows.push(
            &[
                (lay.p(cut.k, 0), -cut.normal.x),
                (lay.p(cut.k, 1), -cut.normal.y),
                (lay.slack(c), -1.0),
            ],
            -cut.offset,
        );
    }
    for c in 0..cuts.len() {
        rows.push(&[(lay.slack(c), -1.0)], 0.0);
    }

    let mut cones = vec![
        SupportedConeT::ZeroConeT(n_eq),
        SupportedConeT::NonnegativeConeT(2 * cuts.len()),
    ];
    for k in 0..n {
        rows.push(&[], req.limits.u_max);
        rows.push(&[(lay.u(k, 0), -1.0)], 0.0);
        rows.push(&[(lay.u(k, 1), -1.0)], 0.0);
        cones.push(SupportedConeT::SecondOrderConeT(3));
    }
    for k in 1..=n {
        rows.push(&[], req.limits.v_max);
        rows.push(&[(lay.v(k, 0), -1.0)], 0.0);
        rows.push(&[(lay.v(k, 1), -1.0)], 0.0);
        cones.push(SupportedConeT::SecondOrderConeT(3));
    }
    if cuts.is_empty() {
        cones.remove(1);
    }

    let nx = lay.len(cuts.len());
    let p_mat = CscMatrix::new_from_triplets(nx, nx, (0..2 * n).collect(), (0..2 * n).collect(), vec![d; 2 * n]);
    let a_mat = CscMatrix::new_from_triplets(rows.b.len(), nx, rows.i, rows.j, rows.v);
    let mut q = vec![0.0; nx];
    for c in 0..cuts.len() {
        q[lay.slack(c)] = SLACK_WEIGHT;
    }

    let settings = DefaultSettings {
        verbose: false,
        max_iter: 200,
        ..DefaultSettings::default()
    };
    let mut solver = DefaultSolver::new(&p_mat, &q, &a_mat, &rows.b, &cones, settings)
        .map_err(|e| format!("solver setup failed: {e:?}"))?;
    solver.solve();
    match solver.solution.status {
        SolverStatus::Solved | SolverStatus::AlmostSolved => Ok((0..n)
            .map(|k| Vec2::new(solver.solution.x[lay.u(k, 0)], solver.solution.x[lay.u(k, 1)]))
            .collect()),
        status => Err(format!("convex program returned {status:?}")),
    }
}

/// Integrates `controls` exactly after a minimum-norm correction that puts
/// the final state on `(pf, vf)` to rounding precision.
fn build_sampled(req: &PlanRequest<'_>, grid: &Grid, mut controls: Vec<Vec2>) -> Trajectory {
    let n = grid.steps;
    let d = grid.step;
    let integrate = |u: &[Vec2]| {
        let mut knots = Vec::with_capacity(n + 1);
        let (mut p, mut v) = (req.p0, req.v0);
        knots.push((p, v));
        for uk in u {
            p += v * d + uk * (0.5 * d * d);
            v += uk * d;
            knots.push((p, v));
        }
        knots
    };

    let end = *integrate(&controls).last().expect("non-empty");
    let rp = req.pf - end.0;
    let rv = req.vf - end.1;
    // v_K depends on d·Σu, p_K on d²·Σ c_k u with c_k = K − k − ½
    let c: Vec<f64> = (0..n).map(|k| n as f64 - k as f64 - 0.5).collect();
    let s1 = n as f64 * d * d;
    let s2: f64 = c.iter().map(|ck| ck * d * d * d).sum();
    let s3: f64 = c.iter().map(|ck| ck * ck * d.powi(4)).sum();
    let det = s1 * s3 - s2 * s2;
    for a in 0..2 {
        let l1 = (s3 * rv[a] - s2 * rp[a]) / det;
        let l2 = (s1 * rp[a] - s2 * rv[a]) / det;
        for (k, uk) in controls.iter_mut().enumerate() {
            uk[a] += l1 * d + l2 * d * d * c[k];
        }
    }

    let knots = integrate(&controls);
    Trajectory {
        agent: req.agent,
        t0: req.t0,
        tf: req.tf,
        p0: req.p0,
        v0: req.v0,
        pf: req.pf,
        vf: req.vf,
        profile: Profile::Sampled {
            step: d,
            controls,
            knots,
        },
    }
}
