use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::TrialResult;
use crate::effector::{
    apply_command, sample_taxels, summarize_contacts, BulkCompensator, ContactSummary, EffectorState, GoalTaper,
};
use crate::physics2d::{create_world, World};
use crate::scene::SceneSpec;
use crate::strategies::{policy_step, ControlClock, ExcavateDir, Mode, StrategyKind, StrategyMode};

use super::config::ExperimentConfig;
use super::HarnessError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TrialEventKind {
    ExcavateStart { dir: ExcavateDir },
    BurrowStart,
    PushedOut { body: usize },
    GoalReached,
    Timeout,
    Fault { message: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialEvent {
    pub time: f64,
    #[serde(flatten)]
    pub kind: TrialEventKind,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialOutcome {
    pub result: TrialResult,
    pub events: Vec<TrialEvent>,
    /// Sensed summaries, only when tactile recording is on.
    pub tactile: Vec<ContactSummary>,
    pub final_state_hash: u64,
}

/// Mixes the master seed, scene and strategy into one stream seed.
pub fn trial_seed(master: u64, scene_seed: u64, kind: StrategyKind, stream: u64) -> u64 {
    let mut z = master
        ^ scene_seed.wrapping_mul(0x9e37_79b9_7f4a_7c15)
        ^ (kind as u64 + 1).wrapping_mul(0xbf58_476d_1ce4_e5b9)
        ^ stream.wrapping_mul(0x94d0_49bb_1331_11eb);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn needs_tactile(kind: StrategyKind, config: &ExperimentConfig) -> bool {
    kind == StrategyKind::HybridEvent || config.record_tactile
}

/// Runs one strategy on one scene until the tip enters the goal circle or
/// `t_tot` elapses. A physics fault ends the trial and marks it faulted.
pub fn run_trial(scene: &SceneSpec, kind: StrategyKind, config: &ExperimentConfig) -> Result<TrialOutcome, HarnessError> {
    let world = create_world(scene, &config.physics)?;
    Ok(run_trial_in_world(world, scene, kind, config))
}

/// As [`run_trial`] on a world built by the caller, for fixtures that need
/// bodies a generated scene cannot describe.
pub fn run_trial_in_world(mut world: World, scene: &SceneSpec, kind: StrategyKind, config: &ExperimentConfig) -> TrialOutcome {
    let goal = scene.goal;
    let d_scene = scene.bounds.depth;
    let clock = ControlClock::new(config.control_dt());
    let substeps = config.substeps();
    let max_ticks = clock.ticks_for(config.t_tot);
    let taper = GoalTaper {
        radius: config.taper.radius,
        floor: config.taper.floor,
        v_max: config.strategy.v_max,
        omega_max: config.strategy.omega_max,
    };
    let mut policy_rng = ChaCha8Rng::seed_from_u64(trial_seed(config.seed, scene.seed, kind, 1));
    let mut sensor_rng = ChaCha8Rng::seed_from_u64(trial_seed(config.seed, scene.seed, kind, 2));
    let mut compensator = BulkCompensator::new(config.sensor.ransac);
    let sensing = needs_tactile(kind, config);
    let effector_id = world.effector_id();

    let mut events = Vec::new();
    let mut tactile = Vec::new();
    let mut state = EffectorState::from_world(&world);
    let mut mode = StrategyMode::new(state.tip.distance(goal), &config.strategy, &clock);
    let mut summary = ContactSummary::quiet(0.0);
    let mut excavates = 0u32;
    let mut burrows = 0u32;
    let mut pushed_seen = 0usize;
    let mut outcome: Option<(bool, f64)> = None;
    let mut faulted = false;

    if state.tip.distance(goal) <= config.goal_radius {
        outcome = Some((true, 0.0));
    }

    let mut tick = 0u64;
    'control: while outcome.is_none() && tick < max_ticks {
        state = EffectorState::from_world(&world);
        if sensing && tick.is_multiple_of(config.sensor.decimation as u64) {
            let t = world.time();
            let (l, r) = sample_taxels(
                &state,
                effector_id,
                world.contacts(),
                &config.sensor.layout,
                &config.sensor.noise,
                t,
                &mut sensor_rng,
            );
            let (l, r) = compensator.apply(&l, &r, t, &mut sensor_rng);
            summary = summarize_contacts(&l, &r, state.length, &config.sensor.summary);
            if config.record_tactile {
                tactile.push(summary);
            }
        }

        let before = mode.mode;
        let (cmd, next) = policy_step(
            kind,
            mode,
            &state,
            &summary,
            goal,
            tick,
            &clock,
            &config.strategy,
            &config.events,
            &mut policy_rng,
        );
        mode = next;
        match (before, mode.mode) {
            (Mode::Excavate { start_tick: a, .. }, Mode::Excavate { start_tick: b, .. }) if a == b => {}
            (_, Mode::Excavate { dir, .. }) => {
                excavates += 1;
                events.push(TrialEvent { time: clock.time(tick), kind: TrialEventKind::ExcavateStart { dir } });
            }
            (Mode::Burrow, Mode::Burrow) => {}
            (_, Mode::Burrow) => {
                burrows += 1;
                events.push(TrialEvent { time: clock.time(tick), kind: TrialEventKind::BurrowStart });
            }
            _ => {}
        }

        let shaped = apply_command(&state, cmd, &config.limits, goal, &taper);
        for _ in 0..substeps {
            if let Err(fault) = world.step(&shaped) {
                warn!("scene {} {}: physics fault: {fault}", scene.seed, kind);
                events.push(TrialEvent { time: world.time(), kind: TrialEventKind::Fault { message: fault.to_string() } });
                faulted = true;
                break 'control;
            }
            for p in &world.pushed_out()[pushed_seen..] {
                events.push(TrialEvent { time: p.time, kind: TrialEventKind::PushedOut { body: p.body.0 } });
            }
            pushed_seen = world.pushed_out().len();
            if world.effector_tip().distance(goal) <= config.goal_radius {
                outcome = Some((true, world.time()));
                break;
            }
        }
        tick += 1;
    }

    let d_goal = world.effector_tip().distance(goal);
    let (success, t_comp) = match outcome {
        Some((true, t)) if !faulted => (true, t.min(config.t_tot)),
        _ => (false, config.t_tot),
    };
    if !faulted {
        let kind = if success { TrialEventKind::GoalReached } else { TrialEventKind::Timeout };
        events.push(TrialEvent { time: t_comp, kind });
    }
    let result = TrialResult {
        scene_seed: scene.seed,
        strategy: kind,
        success,
        d_goal,
        t_comp,
        norm_distance: d_goal / d_scene,
        norm_time: if success { t_comp / config.t_tot } else { 1.0 },
        excavates,
        burrow_episodes: burrows,
        pushed_out: world.pushed_out().len() as u32,
        faulted,
    };
    TrialOutcome { result, events, tactile, final_state_hash: world.state_hash() }
}
