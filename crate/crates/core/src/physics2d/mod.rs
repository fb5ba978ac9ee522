//! Fixed-timestep planar rigid-body world seen from above.
//!
//! Gravity acts out of plane, so its only effect is Coulomb friction between
//! each object and the floor. Contacts between bodies are resolved with a
//! sequential-impulse solver (warm started, Baumgarte position correction).
//! The effector link is a dynamic body driven by a velocity servo whose
//! force and torque are bounded, so it stalls when the clutter jams.

mod body;
mod collide;
mod world;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use body::{Body, BodyId, BodyKind, Collider, Shape};
pub use world::{create_world, Contact, PushedOut, World, Wrench};

#[derive(Debug, Error, PartialEq)]
pub enum PhysicsError {
    #[error("bodies {a:?} and {b:?} overlap")]
    Overlap { a: BodyId, b: BodyId },
    #[error("body {body:?} lies outside the scene bounds")]
    OutOfBounds { body: BodyId },
    #[error("scene object {index} has non-positive mass or size")]
    InvalidObject { index: usize },
    #[error("unknown body {0:?}")]
    UnknownBody(BodyId),
    #[error("body {0:?} is a wall and cannot be moved")]
    ImmovableBody(BodyId),
    #[error("invalid physics config: {0}")]
    InvalidConfig(String),
}

/// The solver failed to keep the state physical; the trial is faulted.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhysicsFault {
    #[error("solver did not converge at t = {time:.4} s: penetration {penetration:.4} m")]
    NotConverged { penetration: f64, time: f64 },
    #[error("non-finite state on body {body:?} at t = {time:.4} s")]
    NonFinite { body: BodyId, time: f64 },
}

/// The finger link: a rectangle capped by a half-disc at the tip.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EffectorBodySpec {
    /// Link length L, base to tip, m.
    pub length: f64,
    pub width: f64,
    pub mass: f64,
    pub body_friction: f64,
    /// Servo force bound per world axis, N.
    pub max_force: f64,
    /// Servo torque bound, N·m.
    pub max_torque: f64,
    /// Distance of the start tip in front of the scene's open edge, m.
    pub start_gap: f64,
}

impl Default for EffectorBodySpec {
    fn default() -> Self {
        Self {
            length: 0.40,
            width: 0.024,
            mass: 1.0,
            body_friction: 0.5,
            max_force: 15.0,
            max_torque: 4.5,
            start_gap: 0.002,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicsConfig {
    pub dt: f64,
    pub gravity: f64,
    pub floor_friction: f64,
    pub body_friction: f64,
    pub restitution: f64,
    pub solver_iterations: usize,
    pub baumgarte: f64,
    pub penetration_slop: f64,
    /// Penetration budget the solver is expected to respect, m.
    pub penetration_tolerance: f64,
    /// Penetration beyond which a step is reported as a fault, m.
    pub fault_penetration: f64,
    #[serde(default)]
    pub effector: EffectorBodySpec,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        Self {
            dt: 1.0 / 240.0,
            gravity: 9.81,
            floor_friction: 0.3,
            body_friction: 0.5,
            restitution: 0.0,
            solver_iterations: 20,
            baumgarte: 0.2,
            penetration_slop: 0.0005,
            penetration_tolerance: 0.001,
            fault_penetration: 0.01,
            effector: EffectorBodySpec::default(),
        }
    }
}

impl PhysicsConfig {
    pub fn validate(&self) -> Result<(), PhysicsError> {
        let bad = |m: &str| Err(PhysicsError::InvalidConfig(m.to_string()));
        if !(self.dt > 0.0) {
            return bad("dt must be positive");
        }
        if self.solver_iterations == 0 {
            return bad("solver_iterations must be at least 1");
        }
        if self.floor_friction < 0.0 || self.body_friction < 0.0 {
            return bad("friction coefficients must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.restitution) {
            return bad("restitution must lie in [0, 1]");
        }
        let e = &self.effector;
        if !(e.length > e.width && e.width > 0.0 && e.mass > 0.0) {
            return bad("effector needs positive mass and length > width > 0");
        }
        if !(e.max_force > 0.0 && e.max_torque > 0.0) {
            return bad("effector force/torque limits must be positive");
        }
        Ok(())
    }
}
