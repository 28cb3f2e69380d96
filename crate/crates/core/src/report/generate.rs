use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::world::{AgentId, AgentState, GoalId, GoalSpec, Scenario, Vec2};

/// Shape of generated scenarios.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorParams {
    pub radius: f64,
    pub h: f64,
    pub deadline: f64,
    pub duration: f64,
    pub dt: f64,
    pub u_max: f64,
    pub v_max: f64,
    /// Start grid pitch, m.
    pub grid_pitch: f64,
    /// Spacing of goals along the formation line, m.
    pub goal_spacing: f64,
    /// Distance from the start grid to the formation line, m.
    pub standoff: f64,
    /// Common formation velocity, m/s.
    pub drift: Vec2,
    /// Goals at each end of the line that also oscillate.
    pub oscillating_per_side: usize,
    pub amplitude: f64,
    pub omega: f64,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        GeneratorParams {
            radius: 0.05,
            h: f64::INFINITY,
            deadline: 10.0,
            duration: 20.0,
            dt: 0.2,
            u_max: 5.0,
            v_max: 2.0,
            grid_pitch: 0.5,
            goal_spacing: 0.6,
            standoff: 2.0,
            drift: Vec2::new(0.1, 0.0),
            oscillating_per_side: 3,
            amplitude: 0.3,
            omega: 0.6,
        }
    }
}

/// `n` agents at rest on a jittered grid and `m` goals on a drifting line
/// whose outer goals also oscillate across the line. The seed fixes the
/// instance.
///
/// Grid jitter is bounded so neighboring agents stay at least `3R` apart.
/// Oscillation is perpendicular to the line, so goals never close on one
/// another.
pub fn random_scenario(n: usize, m: usize, seed: u64, p: &GeneratorParams) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cols = (n as f64).sqrt().ceil().max(1.0) as usize;
    let jitter = ((p.grid_pitch - 3.0 * p.radius) / 2.0).max(0.0);
    let width = (cols - 1) as f64 * p.grid_pitch;
    let agents = (0..n)
        .map(|k| {
            let (r, c) = (k / cols, k % cols);
            let base = Vec2::new(c as f64 * p.grid_pitch - width / 2.0, -(r as f64) * p.grid_pitch);
            let offset = Vec2::new(rng.gen_range(-jitter..=jitter), rng.gen_range(-jitter..=jitter)) / 2.0;
            AgentState {
                id: AgentId(k as u32 + 1),
                position: base + offset,
                velocity: Vec2::zeros(),
            }
        })
        .collect();

    let line = (m.saturating_sub(1)) as f64 * p.goal_spacing;
    let goals = (0..m)
        .map(|k| {
            let outer = k < p.oscillating_per_side || k + p.oscillating_per_side >= m;
            let along = rng.gen_range(-0.1..=0.1) * p.goal_spacing;
            GoalSpec {
                id: GoalId(k as u32 + 1),
                base_position: Vec2::new(k as f64 * p.goal_spacing - line / 2.0 + along, p.standoff),
                drift_velocity: p.drift,
                osc_amplitude: if outer { Vec2::new(0.0, p.amplitude) } else { Vec2::zeros() },
                osc_angular_frequency: if outer { p.omega } else { 0.0 },
                osc_phase: if outer { rng.gen_range(0.0..std::f64::consts::TAU) } else { 0.0 },
            }
        })
        .collect();

    Scenario {
        agents,
        goals,
        h: p.h,
        radius: p.radius,
        deadline: p.deadline,
        v_min: 0.0,
        v_max: p.v_max,
        u_min: 0.0,
        u_max: p.u_max,
        duration: p.duration,
        dt: p.dt,
    }
}
