use super::{Profile, Trajectory};
use crate::error::{Error, Result};
use crate::world::{AgentId, Vec2};

/// Closed-form minimum-energy transfer between two states.
///
/// On each axis the optimal control is `u(s) = α + βs` with `s = t − t0`:
///
/// ```text
/// β = (6 Δv τ − 12 Δp) / τ³,   α = Δv / τ − β τ / 2
/// Δp = pf − p0 − v0 τ,   Δv = vf − v0,   τ = tf − t0
/// ```
pub fn min_energy_unconstrained(
    agent: AgentId,
    p0: Vec2,
    v0: Vec2,
    pf: Vec2,
    vf: Vec2,
    t0: f64,
    tf: f64,
) -> Result<Trajectory> {
    let tau = tf - t0;
    if !(tau > 0.0) {
        return Err(Error::DegenerateHorizon { agent, t0, tf });
    }
    let dp = pf - p0 - v0 * tau;
    let dv = vf - v0;
    let beta = (dv * (6.0 * tau) - dp * 12.0) / tau.powi(3);
    let alpha = dv / tau - beta * (tau / 2.0);
    Ok(Trajectory {
        agent,
        t0,
        tf,
        p0,
        v0,
        pf,
        vf,
        profile: Profile::Affine { alpha, beta },
    })
}
