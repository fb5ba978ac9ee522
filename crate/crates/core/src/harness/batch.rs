use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{compare, Comparison, TrialResult};
use crate::scene::{generate_scene, SceneError, SceneSpec};
use crate::strategies::StrategyKind;

use super::config::ExperimentConfig;
use super::trial::{run_trial, TrialOutcome};
use super::{thread_pool, HarnessError};

/// Scene seeds are `seed · 1_000_000 + i`; a seed whose layout cannot be
/// placed is skipped so that exactly `config.scenes` scenes come back.
pub fn generate_scene_set(config: &ExperimentConfig) -> Result<Vec<SceneSpec>, HarnessError> {
    let base = config.seed.wrapping_mul(1_000_000);
    let limit = config.scenes * 4 + 16;
    let mut scenes = Vec::with_capacity(config.scenes);
    for i in 0..limit as u64 {
        if scenes.len() == config.scenes {
            break;
        }
        match generate_scene(config.scene_style, base.wrapping_add(i), &config.scene) {
            Ok(s) => scenes.push(s),
            Err(e @ SceneError::BudgetExhausted { .. }) => warn!("skipping scene seed {}: {e}", base.wrapping_add(i)),
            Err(e) => return Err(e.into()),
        }
    }
    if scenes.len() < config.scenes {
        return Err(HarnessError::Config(format!(
            "only {} of {} scenes could be generated; lower the object count",
            scenes.len(),
            config.scenes
        )));
    }
    Ok(scenes)
}

#[derive(Clone, Debug)]
pub struct BatchOutput {
    pub scenes: Vec<SceneSpec>,
    pub strategies: Vec<StrategyKind>,
    /// Scene-major, then in the order strategies were given.
    pub trials: Vec<TrialOutcome>,
    pub comparison: Comparison,
}

impl BatchOutput {
    pub fn results(&self) -> Vec<TrialResult> {
        self.trials.iter().map(|t| t.result.clone()).collect()
    }

    pub fn faulted(&self) -> usize {
        self.trials.iter().filter(|t| t.result.faulted).count()
    }

    pub fn fault_rate(&self) -> f64 {
        if self.trials.is_empty() {
            0.0
        } else {
            self.faulted() as f64 / self.trials.len() as f64
        }
    }

    pub fn check_fault_rate(&self, limit: f64) -> Result<(), HarnessError> {
        if self.fault_rate() > limit {
            return Err(HarnessError::FaultRateExceeded { faulted: self.faulted(), total: self.trials.len(), limit });
        }
        Ok(())
    }
}

/// Runs every strategy on every scene of the configured set. Output order
/// does not depend on the worker count.
pub fn run_batch(config: &ExperimentConfig, strategies: &[StrategyKind]) -> Result<BatchOutput, HarnessError> {
    config.validate()?;
    let scenes = generate_scene_set(config)?;
    run_batch_on(config, scenes, strategies)
}

pub(crate) fn run_batch_on(
    config: &ExperimentConfig,
    scenes: Vec<SceneSpec>,
    strategies: &[StrategyKind],
) -> Result<BatchOutput, HarnessError> {
    let jobs: Vec<(usize, StrategyKind)> =
        (0..scenes.len()).flat_map(|i| strategies.iter().map(move |&k| (i, k))).collect();
    info!("batch: {} scenes x {} strategies on {} workers", scenes.len(), strategies.len(), config.workers);
    let pool = thread_pool(config.workers)?;
    let trials = pool.install(|| {
        jobs.par_iter()
            .map(|&(i, k)| run_trial(&scenes[i], k, config))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let results: Vec<TrialResult> = trials.iter().map(|t| t.result.clone()).collect();
    let faulted = results.iter().filter(|r| r.faulted).count();
    if faulted > 0 {
        warn!("{faulted} faulted trials excluded from statistics");
    }
    let comparison = compare(&results, config.alternative);
    Ok(BatchOutput { scenes, strategies: strategies.to_vec(), trials, comparison })
}

pub fn write_trials_csv<W: Write>(results: &[TrialResult], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    for r in results {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trials_csv(path: &Path) -> Result<Vec<TrialResult>, HarnessError> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

#[derive(Serialize)]
struct Summary<'a> {
    seed: u64,
    scenes: usize,
    scene_seeds: Vec<u64>,
    trials: usize,
    faulted: usize,
    comparison: &'a Comparison,
}

#[derive(Serialize)]
struct EventLine<'a> {
    scene_seed: u64,
    strategy: StrategyKind,
    #[serde(flatten)]
    event: &'a super::trial::TrialEvent,
}

/// Writes `trials.csv`, `summary.json`, `report.md`, `events.ndjson`, and
/// `tactile/*.ndjson` when tactile recording is on.
pub fn write_batch_outputs(dir: &Path, output: &BatchOutput, config: &ExperimentConfig) -> Result<(), HarnessError> {
    fs::create_dir_all(dir)?;
    let results = output.results();
    write_trials_csv(&results, BufWriter::new(File::create(dir.join("trials.csv"))?))?;

    let summary = Summary {
        seed: config.seed,
        scenes: output.scenes.len(),
        scene_seeds: output.scenes.iter().map(|s| s.seed).collect(),
        trials: results.len(),
        faulted: output.faulted(),
        comparison: &output.comparison,
    };
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary).expect("summary serializes"))?;

    let mut md = format!(
        "# Batch report\n\nSeed {}, {} scenes, {} trials, {} faulted.\n\n",
        config.seed,
        output.scenes.len(),
        results.len(),
        output.faulted()
    );
    md.push_str(&output.comparison.to_markdown());
    fs::write(dir.join("report.md"), md)?;

    let mut ev = BufWriter::new(File::create(dir.join("events.ndjson"))?);
    for t in &output.trials {
        for e in &t.events {
            let line = EventLine { scene_seed: t.result.scene_seed, strategy: t.result.strategy, event: e };
            writeln!(ev, "{}", serde_json::to_string(&line).expect("event serializes"))?;
        }
    }
    ev.flush()?;

    if config.record_tactile {
        let tdir = dir.join("tactile");
        fs::create_dir_all(&tdir)?;
        for t in &output.trials {
            let path = tdir.join(format!("{}_{}.ndjson", t.result.scene_seed, t.result.strategy));
            let mut w = BufWriter::new(File::create(path)?);
            for s in &t.tactile {
                writeln!(w, "{}", serde_json::to_string(s).expect("summary serializes"))?;
            }
            w.flush()?;
        }
    }
    Ok(())
}
