use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{build_sweep_surface, gaussian_smooth, Metric, SweepCell, SweepSurface, TrialResult};
use crate::scene::SceneSpec;
use crate::strategies::{StrategyKind, StrategyParams};

use super::batch::{generate_scene_set, write_trials_csv};
use super::config::ExperimentConfig;
use super::trial::run_trial;
use super::{thread_pool, HarnessError};

/// Two parameter axes. Burrow sweeps `a_bur × f_bur`, excavate sweeps
/// `t_excv × t_trig`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub x_name: String,
    pub x_values: Vec<f64>,
    pub y_name: String,
    pub y_values: Vec<f64>,
}

/// `start, start + step, ...` up to `stop` inclusive, rounded to 1e-9 so
/// that grid values print cleanly.
pub(crate) fn stepped(start: f64, step: f64, stop: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    (0..n).map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9).collect()
}

impl SweepGrid {
    /// The published sweep ranges for a primitive.
    pub fn paper_default(kind: StrategyKind) -> Result<Self, HarnessError> {
        match kind {
            StrategyKind::Burrow => Ok(Self {
                x_name: "a_bur".into(),
                x_values: stepped(0.45, 0.05, 0.90),
                y_name: "f_bur".into(),
                y_values: stepped(0.5, 0.125, 1.625),
            }),
            StrategyKind::Excavate => Ok(Self {
                x_name: "t_excv".into(),
                x_values: stepped(1.875, 0.625, 7.5),
                y_name: "t_trig".into(),
                y_values: stepped(1.875, 0.625, 7.5),
            }),
            other => Err(HarnessError::Config(format!("no sweep is defined for {other}; use burrow or excavate"))),
        }
    }

    /// `nx × ny` evenly spread values of each axis, ends included.
    pub fn subsample(&self, nx: usize, ny: usize) -> Self {
        fn pick(v: &[f64], n: usize) -> Vec<f64> {
            if n >= v.len() || n == 0 {
                return v.to_vec();
            }
            if n == 1 {
                return vec![v[0]];
            }
            (0..n).map(|i| v[(i * (v.len() - 1) + (n - 1) / 2) / (n - 1)]).collect()
        }
        Self {
            x_name: self.x_name.clone(),
            x_values: pick(&self.x_values, nx),
            y_name: self.y_name.clone(),
            y_values: pick(&self.y_values, ny),
        }
    }

    pub fn cells(&self) -> usize {
        self.x_values.len() * self.y_values.len()
    }

    fn apply(&self, base: &StrategyParams, x: f64, y: f64) -> Result<StrategyParams, HarnessError> {
        let mut p = base.clone();
        for (name, v) in [(&self.x_name, x), (&self.y_name, y)] {
            match name.as_str() {
                "a_bur" => p.a_bur = v,
                "f_bur" => p.f_bur = v,
                "t_excv" => p.t_excv = v,
                "t_trig" => p.t_trig = v,
                "s_excv" => p.s_excv = v,
                other => return Err(HarnessError::Config(format!("unknown sweep parameter '{other}'"))),
            }
        }
        p.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(p)
    }
}

#[derive(Clone, Debug)]
pub struct SweepOutput {
    pub strategy: StrategyKind,
    pub grid: SweepGrid,
    pub scenes: Vec<SceneSpec>,
    pub baseline: Vec<TrialResult>,
    pub cells: Vec<SweepCell>,
    pub distance: SweepSurface,
    pub time: SweepSurface,
    pub distance_smoothed: SweepSurface,
    pub time_smoothed: SweepSurface,
}

/// Runs the straight-line baseline and every grid cell of `strategy` on the
/// same scene set and returns raw and smoothed ratio surfaces.
pub fn run_sweep(config: &ExperimentConfig, strategy: StrategyKind, grid: &SweepGrid, sigma: f64) -> Result<SweepOutput, HarnessError> {
    config.validate()?;
    let scenes = generate_scene_set(config)?;
    run_sweep_on(config, strategy, grid, sigma, scenes)
}

pub(crate) fn run_sweep_on(
    config: &ExperimentConfig,
    strategy: StrategyKind,
    grid: &SweepGrid,
    sigma: f64,
    scenes: Vec<SceneSpec>,
) -> Result<SweepOutput, HarnessError> {
    let mut cell_configs = Vec::with_capacity(grid.cells());
    for &x in &grid.x_values {
        for &y in &grid.y_values {
            let mut c = config.clone();
            c.strategy = grid.apply(&config.strategy, x, y)?;
            cell_configs.push((x, y, c));
        }
    }
    // job 0 is the baseline, then one job per cell, each over every scene
    let jobs: Vec<(usize, usize)> =
        (0..=cell_configs.len()).flat_map(|c| (0..scenes.len()).map(move |s| (c, s))).collect();
    info!("sweep {strategy}: {} cells x {} scenes + baseline", cell_configs.len(), scenes.len());
    let pool = thread_pool(config.workers)?;
    let results = pool.install(|| {
        jobs.par_iter()
            .map(|&(c, s)| {
                if c == 0 {
                    run_trial(&scenes[s], StrategyKind::StraightLine, config).map(|o| o.result)
                } else {
                    run_trial(&scenes[s], strategy, &cell_configs[c - 1].2).map(|o| o.result)
                }
            })
            .collect::<Result<Vec<_>, _>>()
    })?;

    let n = scenes.len();
    let baseline = results[..n].to_vec();
    let cells: Vec<SweepCell> = cell_configs
        .iter()
        .enumerate()
        .map(|(i, (x, y, _))| SweepCell { x: *x, y: *y, results: results[(i + 1) * n..(i + 2) * n].to_vec() })
        .collect();
    let surface = |m: Metric| {
        build_sweep_surface(&cells, &baseline, m, (&grid.x_name, &grid.x_values), (&grid.y_name, &grid.y_values))
    };
    let distance = surface(Metric::Distance)?;
    let time = surface(Metric::Time)?;
    Ok(SweepOutput {
        strategy,
        grid: grid.clone(),
        scenes,
        baseline,
        distance_smoothed: gaussian_smooth(&distance, sigma),
        time_smoothed: gaussian_smooth(&time, sigma),
        distance,
        time,
        cells,
    })
}

/// One trial of a sweep cell; csv cannot flatten nested structs.
#[derive(Serialize)]
struct CellRow {
    x: f64,
    y: f64,
    scene_seed: u64,
    strategy: StrategyKind,
    success: bool,
    d_goal: f64,
    t_comp: f64,
    norm_distance: f64,
    norm_time: f64,
    excavates: u32,
    burrow_episodes: u32,
    pushed_out: u32,
    faulted: bool,
}

impl CellRow {
    fn new(x: f64, y: f64, r: &TrialResult) -> Self {
        Self {
            x,
            y,
            scene_seed: r.scene_seed,
            strategy: r.strategy,
            success: r.success,
            d_goal: r.d_goal,
            t_comp: r.t_comp,
            norm_distance: r.norm_distance,
            norm_time: r.norm_time,
            excavates: r.excavates,
            burrow_episodes: r.burrow_episodes,
            pushed_out: r.pushed_out,
            faulted: r.faulted,
        }
    }
}

/// Raw and smoothed surfaces as CSV and JSON, plus every trial row.
pub fn write_sweep_outputs(dir: &Path, out: &SweepOutput) -> Result<(), HarnessError> {
    fs::create_dir_all(dir)?;
    let k = out.strategy.name();
    for (label, s) in [
        ("distance_raw", &out.distance),
        ("distance_smoothed", &out.distance_smoothed),
        ("time_raw", &out.time),
        ("time_smoothed", &out.time_smoothed),
    ] {
        s.write_csv(BufWriter::new(File::create(dir.join(format!("{k}_{label}.csv")))?))?;
        fs::write(dir.join(format!("{k}_{label}.json")), s.to_json())?;
    }
    write_trials_csv(&out.baseline, BufWriter::new(File::create(dir.join(format!("{k}_baseline_trials.csv")))?))?;

    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(dir.join(format!("{k}_cell_trials.csv")))?));
    for c in &out.cells {
        for r in &c.results {
            w.serialize(CellRow::new(c.x, c.y, r))?;
        }
    }
    w.flush()?;
    Ok(())
}
