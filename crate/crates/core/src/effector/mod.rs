//! The sensorized finger: command shaping under wrench limits and goal
//! tapering, synthetic taxel readings, bulk-field compensation and the
//! contact summary the event-driven policy consumes.

mod ransac;
mod summary;
mod taxels;

use serde::{Deserialize, Serialize};

use crate::math::Vec2;
use crate::physics2d::{World, Wrench};
use crate::strategies::VelocityCmd;

pub use ransac::{fit_plane_ransac, ransac_plane_compensate, BulkCompensator, Compensation, Plane, RansacConfig};
pub use summary::{summarize_contacts, ContactSummary, PeakRegion, SummaryConfig};
pub use taxels::{sample_taxels, Side, TaxelGrid, TaxelLayout, TaxelNoise, FOOTPRINT_RADIUS};

/// Kinematic snapshot of the effector. `heading` is measured from the +y
/// axis and grows towards +x; `angular_velocity` is its rate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EffectorState {
    pub tip: Vec2,
    pub heading: f64,
    pub length: f64,
    pub linear_velocity: Vec2,
    pub angular_velocity: f64,
    /// Wrench exerted on the surroundings, moment about the tip.
    pub net_wrench: Wrench,
}

impl EffectorState {
    pub fn from_world(world: &World) -> Self {
        Self {
            tip: world.effector_tip(),
            heading: world.effector_heading(),
            length: world.effector_length(),
            linear_velocity: world.effector_tip_velocity(),
            angular_velocity: world.effector_heading_rate(),
            net_wrench: world.effector_wrench(),
        }
    }

    /// Unit vector along the link, pointing out of the tip.
    pub fn axis(&self) -> Vec2 {
        Vec2::new(self.heading.sin(), self.heading.cos())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WrenchLimits {
    pub f_max: f64,
    pub m_max: f64,
}

impl Default for WrenchLimits {
    fn default() -> Self {
        Self { f_max: 15.0, m_max: 4.5 }
    }
}

/// Speed caps near the goal: full speed outside `radius`, falling linearly
/// to `floor × v_max` (and `floor × ω_max`) at the goal itself.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoalTaper {
    pub radius: f64,
    pub floor: f64,
    pub v_max: f64,
    pub omega_max: f64,
}

impl GoalTaper {
    pub fn scale(&self, distance: f64) -> f64 {
        if distance >= self.radius || self.radius <= 0.0 {
            1.0
        } else {
            self.floor + (1.0 - self.floor) * (distance / self.radius)
        }
    }
}

/// Clamps a command to the tapered speed caps, then backs off any axis
/// whose last measured wrench component exceeds its limit, in proportion to
/// the excess. Never increases a velocity component's magnitude.
pub fn apply_command(
    state: &EffectorState,
    cmd: VelocityCmd,
    limits: &WrenchLimits,
    goal: Vec2,
    taper: &GoalTaper,
) -> VelocityCmd {
    let scale = taper.scale(state.tip.distance(goal));
    let v_cap = taper.v_max * scale;
    let w_cap = taper.omega_max * scale;

    let mut linear = cmd.linear;
    let speed = linear.length();
    if speed > v_cap {
        linear = linear * (v_cap / speed);
    }
    let mut angular = cmd.angular.clamp(-w_cap, w_cap);

    let f = state.net_wrench.force;
    if f.x.abs() > limits.f_max {
        linear.x *= limits.f_max / f.x.abs();
    }
    if f.y.abs() > limits.f_max {
        linear.y *= limits.f_max / f.y.abs();
    }
    let m = state.net_wrench.moment;
    if m.abs() > limits.m_max {
        angular *= limits.m_max / m.abs();
    }
    VelocityCmd { linear, angular }
}
