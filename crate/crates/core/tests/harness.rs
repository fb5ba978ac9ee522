use std::collections::BTreeSet;

use clutter_core::analysis::Metric;
use clutter_core::harness::{
    generate_scene_set, read_trials_csv, run_batch, run_sweep, run_trial, write_batch_outputs, write_sweep_outputs,
    ExperimentConfig, SweepGrid, TrialEventKind,
};
use clutter_core::math::Vec2;
use clutter_core::scene::{Bounds, SceneObject, SceneSpec};
use clutter_core::strategies::StrategyKind;

fn short(t_tot: f64) -> ExperimentConfig {
    ExperimentConfig { t_tot, ..ExperimentConfig::default() }
}

#[test]
fn straight_run_across_an_empty_scene_takes_the_taper_integral() {
    let cfg = ExperimentConfig::default();
    let scene = SceneSpec::empty(Bounds::default(), 0.265, Vec2::new(0.265, 0.336));
    let out = run_trial(&scene, StrategyKind::StraightLine, &cfg).unwrap();
    assert!(out.result.success);
    assert!(out.result.d_goal <= cfg.goal_radius);

    // full speed until the taper radius, then v(d) = v_max (f + (1 − f) d / r)
    // down to the goal radius: t = ∫ dd / v(d)
    let (v, r, f, rg) = (cfg.strategy.v_max, cfg.taper.radius, cfg.taper.floor, cfg.goal_radius);
    let start = 0.336 + cfg.physics.effector.start_gap;
    let cruise = (start - r) / v;
    let taper = r / ((1.0 - f) * v) * ((f + (1.0 - f)) / (f + (1.0 - f) * rg / r)).ln();
    let expected = cruise + taper;
    // the cap is refreshed once per control tick, so allow a tick of slack
    assert!((out.result.t_comp - expected).abs() <= cfg.control_dt(), "took {} s, expected {expected} s", out.result.t_comp);
    assert!((out.result.norm_time - out.result.t_comp / cfg.t_tot).abs() < 1e-15);
    assert!(matches!(out.events.last().unwrap().kind, TrialEventKind::GoalReached));
}

fn obj(x: f64, y: f64, side: f64, mass: f64) -> SceneObject {
    SceneObject { catalog_id: 0, width: side, depth: side, mass, x, y, yaw: 0.0, darkness: 1.0 }
}

#[test]
fn a_wall_to_wall_row_over_the_goal_cannot_be_cleared() {
    // six heavy boxes packed between the side walls and against the back
    // wall; nothing can move, so straight line stalls at the row's face
    let b = Bounds::default();
    let side = 0.088;
    let gap = (b.width - 6.0 * side) / 6.0;
    let mut scene = SceneSpec::empty(b, 0.265, Vec2::new(0.265, 0.336));
    scene.objects = (0..6).map(|i| obj(gap / 2.0 + side / 2.0 + i as f64 * (side + gap), b.depth - side / 2.0, side, 0.57)).collect();
    let cfg = short(15.0);
    let out = run_trial(&scene, StrategyKind::StraightLine, &cfg).unwrap();
    let face = b.depth - side;
    assert!(!out.result.success);
    assert_eq!(out.result.t_comp, cfg.t_tot);
    assert_eq!(out.result.norm_time, 1.0);
    assert!((out.result.d_goal - (0.336 - face)).abs() < 0.003, "d_goal {}", out.result.d_goal);
    assert!((out.result.norm_distance - out.result.d_goal / b.depth).abs() < 1e-15);
    assert!(matches!(out.events.last().unwrap().kind, TrialEventKind::Timeout));
}

#[test]
fn scene_sets_follow_the_master_seed() {
    let cfg = ExperimentConfig { seed: 4, scenes: 6, ..ExperimentConfig::default() };
    let a = generate_scene_set(&cfg).unwrap();
    assert_eq!(a.len(), 6);
    assert!(a.iter().all(|s| s.seed >= 4_000_000 && s.seed < 4_000_100));
    assert_eq!(a, generate_scene_set(&cfg).unwrap());
    let other = generate_scene_set(&ExperimentConfig { seed: 5, ..cfg }).unwrap();
    assert_ne!(a[0].objects, other[0].objects);
}

#[test]
fn batch_is_paired_and_reproducible() {
    let cfg = ExperimentConfig { scenes: 3, t_tot: 20.0, workers: 2, ..ExperimentConfig::default() };
    let kinds = [StrategyKind::StraightLine, StrategyKind::Burrow, StrategyKind::HybridEvent];
    let a = run_batch(&cfg, &kinds).unwrap();
    let b = run_batch(&cfg, &kinds).unwrap();
    assert_eq!(a.trials, b.trials);
    assert_eq!(a.trials.len(), 9);
    let seeds: BTreeSet<u64> = a.scenes.iter().map(|s| s.seed).collect();
    for k in kinds {
        let mine: BTreeSet<u64> = a.results().iter().filter(|r| r.strategy == k).map(|r| r.scene_seed).collect();
        assert_eq!(mine, seeds, "{k} ran on a different scene set");
    }
    // scene-major order regardless of the worker count
    let order: Vec<(u64, StrategyKind)> = a.results().iter().map(|r| (r.scene_seed, r.strategy)).collect();
    let expected: Vec<(u64, StrategyKind)> = a.scenes.iter().flat_map(|s| kinds.iter().map(move |&k| (s.seed, k))).collect();
    assert_eq!(order, expected);
    let t = a.comparison.test(StrategyKind::StraightLine, StrategyKind::Burrow, Metric::Distance).unwrap();
    assert_eq!(t.pairs, 3);
}

#[test]
fn batch_outputs_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig { scenes: 2, t_tot: 10.0, record_tactile: true, ..ExperimentConfig::default() };
    let kinds = [StrategyKind::StraightLine, StrategyKind::HybridEvent];
    let out = run_batch(&cfg, &kinds).unwrap();
    write_batch_outputs(dir.path(), &out, &cfg).unwrap();

    assert_eq!(read_trials_csv(&dir.path().join("trials.csv")).unwrap(), out.results());
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["trials"], 4);
    let events = std::fs::read_to_string(dir.path().join("events.ndjson")).unwrap();
    let total: usize = out.trials.iter().map(|t| t.events.len()).sum();
    assert_eq!(events.lines().count(), total);
    for line in events.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["scene_seed"].is_u64() && v["event"].is_string() && v["time"].is_f64());
    }
    let report = std::fs::read_to_string(dir.path().join("report.md")).unwrap();
    assert!(report.contains("hybrid_event"));
    for t in &out.trials {
        let path = dir.path().join("tactile").join(format!("{}_{}.ndjson", t.result.scene_seed, t.result.strategy));
        let lines = std::fs::read_to_string(path).unwrap().lines().count();
        assert_eq!(lines, t.tactile.len());
        assert!(lines > 0);
    }
}

#[test]
fn sweep_cells_are_ordinary_trials_with_swept_parameters() {
    let cfg = ExperimentConfig { scenes: 2, t_tot: 15.0, ..ExperimentConfig::default() };
    let grid = SweepGrid { x_name: "a_bur".into(), x_values: vec![0.5, 0.8], y_name: "f_bur".into(), y_values: vec![1.0] };
    let out = run_sweep(&cfg, StrategyKind::Burrow, &grid, 1.0).unwrap();
    assert_eq!(out.distance.shape(), (2, 1));
    assert_eq!(out.time_smoothed.smoothing_sigma, Some(1.0));

    let cell = out.cells.iter().find(|c| c.x == 0.8).unwrap();
    let mut direct = cfg.clone();
    direct.strategy.a_bur = 0.8;
    direct.strategy.f_bur = 1.0;
    for (scene, r) in out.scenes.iter().zip(&cell.results) {
        assert_eq!(&run_trial(scene, StrategyKind::Burrow, &direct).unwrap().result, r);
    }
    for (scene, r) in out.scenes.iter().zip(&out.baseline) {
        assert_eq!(&run_trial(scene, StrategyKind::StraightLine, &cfg).unwrap().result, r);
    }

    let dir = tempfile::tempdir().unwrap();
    write_sweep_outputs(dir.path(), &out).unwrap();
    for name in [
        "burrow_distance_raw.csv",
        "burrow_distance_smoothed.json",
        "burrow_time_raw.json",
        "burrow_time_smoothed.csv",
        "burrow_baseline_trials.csv",
        "burrow_cell_trials.csv",
    ] {
        assert!(dir.path().join(name).is_file(), "missing {name}");
    }
    let cells = std::fs::read_to_string(dir.path().join("burrow_cell_trials.csv")).unwrap();
    assert_eq!(cells.lines().count(), 1 + 2 * 2);
}

#[test]
fn invalid_sweep_axes_and_configs_are_config_errors() {
    let grid = SweepGrid { x_name: "a_bur".into(), x_values: vec![1.2], y_name: "f_bur".into(), y_values: vec![1.0] };
    let cfg = ExperimentConfig { scenes: 1, ..ExperimentConfig::default() };
    assert!(matches!(
        run_sweep(&cfg, StrategyKind::Burrow, &grid, 1.0),
        Err(clutter_core::harness::HarnessError::Config(_))
    ));
    let bad = ExperimentConfig { control_rate: 7.0, ..ExperimentConfig::default() };
    assert!(matches!(run_batch(&bad, &[StrategyKind::Burrow]), Err(clutter_core::harness::HarnessError::Config(_))));
}
