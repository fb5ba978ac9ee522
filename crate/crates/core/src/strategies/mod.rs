//! Reaching strategies: the straight-line baseline, the burrow and excavate
//! primitives, and the clock- and event-driven hybrids that combine them.
//!
//! Angles follow the effector convention: headings are measured from the
//! +y axis (into the scene) and grow towards +x.

mod policy;
mod primitives;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::Vec2;

pub use policy::{check_jam_trigger, check_push_trigger, policy_step, ControlClock, Mode, StrategyMode};
pub use primitives::{burrow_command, excavate_command, straight_line_command};

#[derive(Debug, Error, PartialEq)]
pub enum StrategyError {
    #[error("unknown strategy kind '{0}' (expected straight, burrow, excavate, hybrid_clock or hybrid_event)")]
    UnknownKind(String),
    #[error("invalid strategy parameters: {0}")]
    InvalidParams(String),
}

/// Commanded tip velocity and heading rate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VelocityCmd {
    pub linear: Vec2,
    /// Heading rate, rad/s, positive turning the link towards +x.
    pub angular: f64,
}

impl VelocityCmd {
    pub const ZERO: VelocityCmd = VelocityCmd { linear: Vec2::ZERO, angular: 0.0 };

    pub fn new(vx: f64, vy: f64, angular: f64) -> Self {
        Self { linear: Vec2::new(vx, vy), angular }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    StraightLine,
    Burrow,
    Excavate,
    HybridClock,
    HybridEvent,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 5] = [
        StrategyKind::StraightLine,
        StrategyKind::Burrow,
        StrategyKind::Excavate,
        StrategyKind::HybridClock,
        StrategyKind::HybridEvent,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::StraightLine => "straight",
            StrategyKind::Burrow => "burrow",
            StrategyKind::Excavate => "excavate",
            StrategyKind::HybridClock => "hybrid_clock",
            StrategyKind::HybridEvent => "hybrid_event",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = StrategyError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "straight" | "straight_line" => Ok(StrategyKind::StraightLine),
            "burrow" => Ok(StrategyKind::Burrow),
            "excavate" => Ok(StrategyKind::Excavate),
            "hybrid_clock" => Ok(StrategyKind::HybridClock),
            "hybrid_event" => Ok(StrategyKind::HybridEvent),
            other => Err(StrategyError::UnknownKind(other.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExcavateDir {
    Ccw,
    Cw,
}

impl ExcavateDir {
    pub fn random(rng: &mut impl rand::Rng) -> Self {
        if rng.gen_bool(0.5) {
            ExcavateDir::Ccw
        } else {
            ExcavateDir::Cw
        }
    }
}

/// How the burrow sinusoid's argument is formed from `f_bur` and `t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BurrowPhase {
    /// `sin(2π f_bur t)`, `f_bur` in cycles per second.
    Hertz,
    /// `sin(f_bur t)`, `f_bur` in radians per second.
    RadiansPerSecond,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StrategyParams {
    pub v_max: f64,
    pub omega_max: f64,
    pub a_bur: f64,
    pub f_bur: f64,
    pub t_excv: f64,
    pub t_trig: f64,
    pub s_excv: f64,
    pub burrow_phase: BurrowPhase,
    /// Heading error below which no turn is commanded, rad.
    pub heading_deadband: f64,
}

impl Default for StrategyParams {
    fn default() -> Self {
        Self {
            v_max: 0.045,
            omega_max: 0.1,
            a_bur: 0.83,
            f_bur: 1.0,
            t_excv: 5.0,
            t_trig: 5.0,
            s_excv: 2.0,
            burrow_phase: BurrowPhase::Hertz,
            heading_deadband: 0.02,
        }
    }
}

impl StrategyParams {
    pub fn validate(&self) -> Result<(), StrategyError> {
        let bad = |m: &str| Err(StrategyError::InvalidParams(m.to_string()));
        if !(self.v_max > 0.0 && self.omega_max > 0.0) {
            return bad("v_max and omega_max must be positive");
        }
        if !(0.0..1.0).contains(&self.a_bur) {
            return bad("a_bur must lie in [0, 1)");
        }
        if !(self.f_bur > 0.0 && self.t_excv > 0.0 && self.t_trig > 0.0) {
            return bad("f_bur, t_excv and t_trig must be positive");
        }
        if !(self.s_excv >= 1.0) {
            return bad("s_excv must be at least 1");
        }
        if !(self.heading_deadband >= 0.0) {
            return bad("heading_deadband must be non-negative");
        }
        Ok(())
    }
}

/// Tactile and progress thresholds for the event-driven hybrid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EventThresholds {
    pub f_bur: f64,
    pub f_excv: f64,
    pub f_push_min: f64,
    pub f_push_max: f64,
    pub t_push: f64,
    pub t_prog: f64,
    /// Decrease in best distance-to-goal that counts as progress, m.
    pub progress_quantum: f64,
}

impl Default for EventThresholds {
    fn default() -> Self {
        Self { f_bur: 5.0, f_excv: 10.0, f_push_min: 0.5, f_push_max: 7.5, t_push: 2.0, t_prog: 3.0, progress_quantum: 0.005 }
    }
}

impl EventThresholds {
    /// Thresholds that never fire; hybrid event then behaves as straight line.
    pub fn never() -> Self {
        Self {
            f_bur: f64::INFINITY,
            f_excv: f64::INFINITY,
            f_push_min: f64::INFINITY,
            f_push_max: f64::INFINITY,
            t_push: f64::INFINITY,
            t_prog: f64::INFINITY,
            progress_quantum: 0.005,
        }
    }

    pub fn validate(&self) -> Result<(), StrategyError> {
        let all = [self.f_bur, self.f_excv, self.f_push_min, self.f_push_max, self.t_push, self.t_prog, self.progress_quantum];
        if all.iter().any(|v| !(*v > 0.0)) {
            return Err(StrategyError::InvalidParams("event thresholds must be positive".into()));
        }
        if !(self.f_push_min < self.f_push_max) {
            return Err(StrategyError::InvalidParams("f_push_min must be below f_push_max".into()));
        }
        Ok(())
    }
}
