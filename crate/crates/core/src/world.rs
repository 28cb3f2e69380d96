//! Agents, moving goals and scenario definitions.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec2 = Vector2<f64>;

/// 1-based agent index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(pub u32);

/// 1-based formation index. Goals are identified by index, never by position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GoalId(pub u32);

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for GoalId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub id: AgentId,
    #[serde(with = "pair")]
    pub position: Vec2,
    #[serde(with = "pair")]
    pub velocity: Vec2,
}

impl AgentState {
    pub fn at_rest(id: u32, x: f64, y: f64) -> Self {
        AgentState {
            id: AgentId(id),
            position: Vec2::new(x, y),
            velocity: Vec2::zeros(),
        }
    }
}

/// A goal that drifts at constant velocity with a sinusoid superimposed on
/// each axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoalSpec {
    pub id: GoalId,
    #[serde(rename = "base", with = "pair")]
    pub base_position: Vec2,
    #[serde(rename = "drift", with = "pair", default = "zero")]
    pub drift_velocity: Vec2,
    #[serde(rename = "amplitude", with = "pair", default = "zero")]
    pub osc_amplitude: Vec2,
    #[serde(rename = "omega", default)]
    pub osc_angular_frequency: f64,
    #[serde(rename = "phase", default)]
    pub osc_phase: f64,
}

fn zero() -> Vec2 {
    Vec2::zeros()
}

impl GoalSpec {
    pub fn fixed(id: u32, x: f64, y: f64) -> Self {
        GoalSpec {
            id: GoalId(id),
            base_position: Vec2::new(x, y),
            drift_velocity: Vec2::zeros(),
            osc_amplitude: Vec2::zeros(),
            osc_angular_frequency: 0.0,
            osc_phase: 0.0,
        }
    }

    fn arg(&self, t: f64) -> f64 {
        self.osc_angular_frequency * t + self.osc_phase
    }

    pub fn position(&self, t: f64) -> Vec2 {
        self.base_position + self.drift_velocity * t + self.osc_amplitude * self.arg(t).sin()
    }

    pub fn velocity(&self, t: f64) -> Vec2 {
        self.drift_velocity + self.osc_amplitude * (self.osc_angular_frequency * self.arg(t).cos())
    }

    pub fn acceleration(&self, t: f64) -> Vec2 {
        let w = self.osc_angular_frequency;
        -self.osc_amplitude * (w * w * self.arg(t).sin())
    }

    /// Exact `½∫‖a(t)‖² dt` over `[a, b]` for the goal's own acceleration.
    pub fn tracking_energy(&self, a: f64, b: f64) -> f64 {
        let w = self.osc_angular_frequency;
        let amp2 = self.osc_amplitude.norm_squared();
        if w == 0.0 || amp2 == 0.0 || b <= a {
            return 0.0;
        }
        // ∫ sin²(wt + φ) dt = t/2 − sin(2(wt + φ)) / (4w)
        let prim = |t: f64| t / 2.0 - (2.0 * self.arg(t)).sin() / (4.0 * w);
        0.5 * amp2 * w.powi(4) * (prim(b) - prim(a))
    }
}

/// Position of goal `g` at time `t`.
pub fn goal_position(g: &GoalSpec, t: f64) -> Vec2 {
    g.position(t)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub agents: Vec<AgentState>,
    pub goals: Vec<GoalSpec>,
    /// Sensing and communication radius, m. `f64::INFINITY` for the
    /// centralized case.
    #[serde(with = "radius")]
    pub h: f64,
    /// Agent disk radius, m.
    #[serde(rename = "R")]
    pub radius: f64,
    /// Deadline extension applied whenever an agent's ban set grows, s.
    #[serde(rename = "T")]
    pub deadline: f64,
    #[serde(default)]
    pub v_min: f64,
    pub v_max: f64,
    #[serde(default)]
    pub u_min: f64,
    pub u_max: f64,
    pub duration: f64,
    pub dt: f64,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn goal(&self, id: GoalId) -> Result<&GoalSpec> {
        self.goals
            .iter()
            .find(|g| g.id == id)
            .ok_or(Error::UnknownGoal(id))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    AgentOverlap { a: AgentId, b: AgentId, distance: f64 },
    GoalOverlap { a: GoalId, b: GoalId, t: f64, distance: f64 },
    TooManyAgents { agents: usize, goals: usize },
    SensingRadiusTooSmall { h: f64, min: f64 },
    NonPositive(&'static str),
    DuplicateAgentId(AgentId),
    DuplicateGoalId(GoalId),
    NoAgents,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::AgentOverlap { a, b, distance } => {
                write!(f, "agent overlap: agents {a} and {b} are {distance} m apart")
            }
            Violation::GoalOverlap { a, b, t, distance } => {
                write!(f, "goal overlap: goals {a} and {b} are {distance} m apart at t = {t}")
            }
            Violation::TooManyAgents { agents, goals } => {
                write!(f, "N ≤ M required: {agents} agents for {goals} goals")
            }
            Violation::SensingRadiusTooSmall { h, min } => {
                write!(f, "h too small: {h} m < {min} m")
            }
            Violation::NonPositive(field) => write!(f, "non-positive {field}"),
            Violation::DuplicateAgentId(id) => write!(f, "duplicate agent id {id}"),
            Violation::DuplicateGoalId(id) => write!(f, "duplicate goal id {id}"),
            Violation::NoAgents => write!(f, "no agents"),
        }
    }
}

/// Minimum ratio `h / R` accepted by validation.
pub const MIN_SENSING_FACTOR: f64 = 4.0;
/// Below this ratio validation passes but a warning is issued.
pub const WARN_SENSING_FACTOR: f64 = 10.0;

/// Every violated scenario invariant, in a fixed order. Empty means valid.
pub fn validate_scenario(s: &Scenario) -> Vec<Violation> {
    let mut out = Vec::new();

    for (name, value) in [
        ("dt", s.dt),
        ("duration", s.duration),
        ("R", s.radius),
        ("T", s.deadline),
        ("v_max", s.v_max),
        ("u_max", s.u_max),
    ] {
        // NaN fails too
        if !(value > 0.0) {
            out.push(Violation::NonPositive(name));
        }
    }
    if !(s.h > 0.0) {
        out.push(Violation::NonPositive("h"));
    }
    if s.agents.is_empty() {
        out.push(Violation::NoAgents);
    }
    if s.agents.len() > s.goals.len() {
        out.push(Violation::TooManyAgents {
            agents: s.agents.len(),
            goals: s.goals.len(),
        });
    }
    if s.h > 0.0 && s.radius > 0.0 && s.h < MIN_SENSING_FACTOR * s.radius {
        out.push(Violation::SensingRadiusTooSmall {
            h: s.h,
            min: MIN_SENSING_FACTOR * s.radius,
        });
    }

    let mut seen = std::collections::BTreeSet::new();
    for a in &s.agents {
        if !seen.insert(a.id) {
            out.push(Violation::DuplicateAgentId(a.id));
        }
    }
    let mut seen = std::collections::BTreeSet::new();
    for g in &s.goals {
        if !seen.insert(g.id) {
            out.push(Violation::DuplicateGoalId(g.id));
        }
    }

    let min_gap = 2.0 * s.radius;
    for (i, a) in s.agents.iter().enumerate() {
        for b in &s.agents[i + 1..] {
            let d = (a.position - b.position).norm();
            if d <= min_gap {
                out.push(Violation::AgentOverlap {
                    a: a.id,
                    b: b.id,
                    distance: d,
                });
            }
        }
    }

    if s.dt > 0.0 && s.duration > 0.0 {
        let steps = (s.duration / s.dt).ceil() as usize;
        for (i, a) in s.goals.iter().enumerate() {
            for b in &s.goals[i + 1..] {
                let hit = (0..=steps).find_map(|k| {
                    let t = (k as f64 * s.dt).min(s.duration);
                    let d = (a.position(t) - b.position(t)).norm();
                    (d <= min_gap).then_some((t, d))
                });
                if let Some((t, distance)) = hit {
                    out.push(Violation::GoalOverlap {
                        a: a.id,
                        b: b.id,
                        t,
                        distance,
                    });
                }
            }
        }
    }
    out
}

/// Non-fatal observations about a scenario.
pub fn scenario_warnings(s: &Scenario) -> Vec<String> {
    let mut out = Vec::new();
    if s.h.is_finite() && s.h < WARN_SENSING_FACTOR * s.radius {
        out.push(format!(
            "h = {} m is below {}R = {} m; collision avoidance may have little room",
            s.h,
            WARN_SENSING_FACTOR,
            WARN_SENSING_FACTOR * s.radius
        ));
    }
    if s.v_min != 0.0 {
        out.push(format!("v_min = {} is not enforced", s.v_min));
    }
    if s.u_min != 0.0 {
        out.push(format!("u_min = {} is not enforced", s.u_min));
    }
    out
}

/// Per-agent `½∫‖u‖² dt`, J/kg.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EnergyAccumulator {
    per_agent: BTreeMap<AgentId, f64>,
}

impl EnergyAccumulator {
    pub fn new(agents: impl IntoIterator<Item = AgentId>) -> Self {
        EnergyAccumulator {
            per_agent: agents.into_iter().map(|id| (id, 0.0)).collect(),
        }
    }

    pub fn add(&mut self, id: AgentId, energy: f64) {
        debug_assert!(energy >= 0.0, "negative energy increment {energy}");
        *self.per_agent.entry(id).or_insert(0.0) += energy.max(0.0);
    }

    pub fn get(&self, id: AgentId) -> f64 {
        self.per_agent.get(&id).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.per_agent.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (AgentId, f64)> + '_ {
        self.per_agent.iter().map(|(k, v)| (*k, *v))
    }
}

mod pair {
    use super::Vec2;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &Vec2, s: S) -> Result<S::Ok, S::Error> {
        [v.x, v.y].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec2, D::Error> {
        let [x, y] = <[f64; 2]>::deserialize(d)?;
        Ok(Vec2::new(x, y))
    }
}

/// `h` is either a number or the string `"inf"`.
pub(crate) mod radius {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(h: &f64, s: S) -> Result<S::Ok, S::Error> {
        if h.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*h)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => super::parse_radius(&t).map_err(D::Error::custom),
        }
    }
}

/// Parses a sensing radius: a decimal number or `inf`.
pub fn parse_radius(text: &str) -> std::result::Result<f64, String> {
    match text.trim().to_ascii_lowercase().as_str() {
        "inf" | "infinity" | "∞" => Ok(f64::INFINITY),
        other => other
            .parse::<f64>()
            .map_err(|e| format!("bad radius {text:?}: {e}")),
    }
}
