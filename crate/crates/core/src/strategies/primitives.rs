use std::f64::consts::PI;

use crate::effector::EffectorState;
use crate::math::{wrap_angle, Vec2};

use super::{BurrowPhase, ExcavateDir, StrategyParams, VelocityCmd};

/// Bang-bang heading law towards the goal direction, with a deadband.
fn heading_rate(state: &EffectorState, to_goal: Vec2, params: &StrategyParams) -> f64 {
    // angle of the goal direction from +y, positive towards +x
    let phi = to_goal.x.atan2(to_goal.y);
    let err = wrap_angle(phi - state.heading);
    if err.abs() < params.heading_deadband || err == 0.0 {
        0.0
    } else {
        err.signum() * params.omega_max
    }
}

/// Full speed along the tip-to-goal direction while turning the link
/// towards it. Zero when the tip is exactly at the goal.
pub fn straight_line_command(state: &EffectorState, goal: Vec2, params: &StrategyParams) -> VelocityCmd {
    let to_goal = goal - state.tip;
    if to_goal.length_squared() == 0.0 {
        return VelocityCmd::ZERO;
    }
    VelocityCmd { linear: to_goal.normalized() * params.v_max, angular: heading_rate(state, to_goal, params) }
}

/// Straight-line direction plus a perpendicular sinusoid of relative
/// amplitude `a_bur / (1 − a_bur)`, renormalized to `v_max`.
pub fn burrow_command(state: &EffectorState, goal: Vec2, t: f64, params: &StrategyParams) -> VelocityCmd {
    let to_goal = goal - state.tip;
    if to_goal.length_squared() == 0.0 {
        return VelocityCmd::ZERO;
    }
    let dir = to_goal.normalized();
    let phase = match params.burrow_phase {
        BurrowPhase::Hertz => 2.0 * PI * params.f_bur * t,
        BurrowPhase::RadiansPerSecond => params.f_bur * t,
    };
    let gain = params.a_bur / (1.0 - params.a_bur) * phase.sin();
    // renormalizing d̂ itself would perturb the last bit; keep it exact
    let linear = if gain == 0.0 { dir } else { (dir + dir.cross_z() * gain).normalized() };
    VelocityCmd { linear: linear * params.v_max, angular: heading_rate(state, to_goal, params) }
}

/// One sample of the excavate spiral at fractional time `t_frac ∈ [0, 1]`.
///
/// The tip velocity sweeps through 3π/2 of a growing spiral in the link
/// frame while the heading rate follows a growing sinusoid. A clockwise
/// excavate mirrors the counter-clockwise one: the link-frame x velocity and
/// the heading rate change sign.
pub fn excavate_command(state: &EffectorState, t_frac: f64, dir: ExcavateDir, params: &StrategyParams) -> VelocityCmd {
    let t_frac = t_frac.clamp(0.0, 1.0);
    let k = (1.0 + (params.s_excv - 1.0) * t_frac) / params.s_excv;
    let omega_ccw = -k * params.omega_max * (2.0 * PI * t_frac).sin();
    let arc = 1.5 * PI * t_frac;
    let mut local = Vec2::new(arc.sin() - state.length * omega_ccw, -arc.cos());
    let mut omega = omega_ccw;
    if dir == ExcavateDir::Cw {
        local.x = -local.x;
        omega = -omega;
    }
    let (s, c) = state.heading.sin_cos();
    // link frame (x across, y along the link) to world
    let world = Vec2::new(c * local.x + s * local.y, -s * local.x + c * local.y);
    VelocityCmd { linear: world * (k * params.v_max), angular: omega }
}
