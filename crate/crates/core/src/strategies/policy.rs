use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::effector::{ContactSummary, EffectorState, PeakRegion};
use crate::math::Vec2;

use super::primitives::{burrow_command, excavate_command, straight_line_command};
use super::{EventThresholds, ExcavateDir, StrategyKind, StrategyParams, VelocityCmd};

/// Fixed control tick. Durations are converted to whole ticks so that mode
/// timing is exact.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControlClock {
    pub dt: f64,
}

impl ControlClock {
    pub fn new(dt: f64) -> Self {
        Self { dt }
    }

    pub fn time(&self, tick: u64) -> f64 {
        tick as f64 * self.dt
    }

    /// Number of ticks `k ≥ 0` with `k · dt < duration`.
    pub fn ticks_for(&self, duration: f64) -> u64 {
        ((duration / self.dt) - 1e-9).ceil().max(1.0) as u64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Straight,
    Burrow,
    Excavate { dir: ExcavateDir, start_tick: u64 },
}

/// Per-trial controller memory.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StrategyMode {
    pub mode: Mode,
    pub best_distance: f64,
    pub last_progress_time: f64,
    pub push_contact_start: Option<f64>,
    /// Tick at which the clock-driven strategies next start an excavate.
    pub next_trigger_tick: u64,
}

impl StrategyMode {
    pub fn new(initial_distance: f64, params: &StrategyParams, clock: &ControlClock) -> Self {
        Self {
            mode: Mode::Straight,
            best_distance: initial_distance,
            last_progress_time: 0.0,
            push_contact_start: None,
            next_trigger_tick: clock.ticks_for(params.t_trig),
        }
    }

    pub fn is_excavating(&self) -> bool {
        matches!(self.mode, Mode::Excavate { .. })
    }

    fn reset_progress(&mut self, distance: f64, t: f64) {
        self.best_distance = distance;
        self.last_progress_time = t;
        self.push_contact_start = None;
    }
}

/// Light, sustained tip contact: fires once `tip_force` has stayed inside
/// `[f_push_min, f_push_max]` for `t_push`. The tip has no lateral side, so
/// the excavate direction is drawn at random.
pub fn check_push_trigger(
    mode: &mut StrategyMode,
    summary: &ContactSummary,
    t: f64,
    thresholds: &EventThresholds,
    rng: &mut impl Rng,
) -> Option<ExcavateDir> {
    let in_band = summary.tip_force >= thresholds.f_push_min && summary.tip_force <= thresholds.f_push_max;
    if !in_band {
        mode.push_contact_start = None;
        return None;
    }
    let start = *mode.push_contact_start.get_or_insert(t);
    if t - start >= thresholds.t_push {
        mode.push_contact_start = None;
        Some(ExcavateDir::random(rng))
    } else {
        None
    }
}

/// Stalled progress under a large contact force. Progress is the best
/// distance-to-goal dropping by at least `progress_quantum`; the trigger
/// needs `t_prog` without progress and `peak_force ≥ f_excv`. A left-side
/// peak selects a counter-clockwise excavate, a right-side peak clockwise.
pub fn check_jam_trigger(
    mode: &mut StrategyMode,
    summary: &ContactSummary,
    state: &EffectorState,
    goal: Vec2,
    t: f64,
    thresholds: &EventThresholds,
    rng: &mut impl Rng,
) -> Option<ExcavateDir> {
    let distance = state.tip.distance(goal);
    if distance <= mode.best_distance - thresholds.progress_quantum {
        mode.best_distance = distance;
        mode.last_progress_time = t;
    }
    let stalled = t - mode.last_progress_time >= thresholds.t_prog;
    if !(stalled && summary.peak_force >= thresholds.f_excv) {
        return None;
    }
    Some(match summary.peak_region {
        PeakRegion::Left => ExcavateDir::Ccw,
        PeakRegion::Right => ExcavateDir::Cw,
        PeakRegion::Tip => ExcavateDir::random(rng),
    })
}

/// One control tick: returns the command and the updated controller memory.
#[allow(clippy::too_many_arguments)]
pub fn policy_step(
    kind: StrategyKind,
    mode: StrategyMode,
    state: &EffectorState,
    summary: &ContactSummary,
    goal: Vec2,
    tick: u64,
    clock: &ControlClock,
    params: &StrategyParams,
    thresholds: &EventThresholds,
    rng: &mut impl Rng,
) -> (VelocityCmd, StrategyMode) {
    let mut mode = mode;
    let t = clock.time(tick);
    let excavate_ticks = clock.ticks_for(params.t_excv);

    // an excavate in progress runs to completion
    if let Mode::Excavate { dir, start_tick } = mode.mode {
        let elapsed = tick.saturating_sub(start_tick);
        if elapsed < excavate_ticks {
            let t_frac = clock.time(elapsed) / params.t_excv;
            return (excavate_command(state, t_frac, dir, params), mode);
        }
        mode.mode = Mode::Straight;
        mode.next_trigger_tick = tick + clock.ticks_for(params.t_trig);
        mode.reset_progress(state.tip.distance(goal), t);
    }

    let start_excavate = |mode: &mut StrategyMode, dir: ExcavateDir| {
        mode.mode = Mode::Excavate { dir, start_tick: tick };
        excavate_command(state, 0.0, dir, params)
    };

    let cmd = match kind {
        StrategyKind::StraightLine => {
            mode.mode = Mode::Straight;
            straight_line_command(state, goal, params)
        }
        StrategyKind::Burrow => {
            mode.mode = Mode::Burrow;
            burrow_command(state, goal, t, params)
        }
        StrategyKind::Excavate | StrategyKind::HybridClock => {
            if tick >= mode.next_trigger_tick {
                let dir = ExcavateDir::random(rng);
                start_excavate(&mut mode, dir)
            } else if kind == StrategyKind::Excavate {
                mode.mode = Mode::Straight;
                straight_line_command(state, goal, params)
            } else {
                mode.mode = Mode::Burrow;
                burrow_command(state, goal, t, params)
            }
        }
        StrategyKind::HybridEvent => {
            let jam = check_jam_trigger(&mut mode, summary, state, goal, t, thresholds, rng);
            let push = check_push_trigger(&mut mode, summary, t, thresholds, rng);
            if let Some(dir) = jam.or(push) {
                start_excavate(&mut mode, dir)
            } else if summary.peak_force >= thresholds.f_bur {
                mode.mode = Mode::Burrow;
                burrow_command(state, goal, t, params)
            } else {
                mode.mode = Mode::Straight;
                straight_line_command(state, goal, params)
            }
        }
    };
    (cmd, mode)
}
