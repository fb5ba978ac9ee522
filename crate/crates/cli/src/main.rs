// `!(x >= 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use clutter_core::analysis::compare;
use clutter_core::harness::{
    generate_scene_set, read_trials_csv, run_batch, run_sweep, run_trial, write_batch_outputs, write_sweep_outputs,
    ExperimentConfig, HarnessError, SweepGrid,
};
use clutter_core::scene::{generate_scene, SceneSpec, SceneStyle};
use clutter_core::strategies::StrategyKind;
use log::info;

const EXIT_CONFIG: u8 = 2;
const EXIT_FAULTS: u8 = 3;

#[derive(Parser)]
#[command(name = "clutter", version, about = "Reach through planar clutter with burrow and excavate primitives")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML experiment config; defaults are used for missing keys.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (1 runs trials serially).
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory; beats CLUTTER_OUTPUT_DIR and the config file.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Use the 3 cm goal radius preset instead of 0.75 cm.
    #[arg(long)]
    relaxed: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Generate scenes and write them as JSON.
    GenScenes {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        style: Option<SceneStyle>,
    },
    /// Run one strategy on one scene and print the result.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, conflicts_with = "scene_file")]
        scene_seed: Option<u64>,
        /// A scene JSON written by gen-scenes.
        #[arg(long)]
        scene_file: Option<PathBuf>,
        #[arg(long, default_value = "straight")]
        strategy: StrategyKind,
    },
    /// Run strategies on a common scene set and compare them.
    Batch {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scenes: Option<usize>,
        /// Comma separated, e.g. straight,burrow,excavate.
        #[arg(long, value_delimiter = ',', default_value = "straight,burrow,excavate,hybrid_clock,hybrid_event")]
        strategies: Vec<StrategyKind>,
    },
    /// Sweep a primitive's two parameters against the straight-line baseline.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        strategy: StrategyKind,
        #[arg(long)]
        scenes: Option<usize>,
        /// First axis as start:step:stop.
        #[arg(long)]
        grid_x: Option<String>,
        /// Second axis as start:step:stop.
        #[arg(long)]
        grid_y: Option<String>,
        /// Keep an evenly spread NxM subset of the grid, e.g. 4x4.
        #[arg(long)]
        subsample: Option<String>,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
    },
    /// Re-analyse a trials CSV written by batch.
    Compare {
        trials: PathBuf,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Print the default configuration as TOML.
    PrintConfig,
}

fn load_config(common: &Common) -> Result<ExperimentConfig, HarnessError> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None if common.relaxed => ExperimentConfig::relaxed(),
        None => ExperimentConfig::default(),
    };
    if common.relaxed {
        cfg.goal_radius = ExperimentConfig::relaxed().goal_radius;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(w) = common.workers {
        cfg.workers = w;
    }
    if let Some(o) = &common.out {
        cfg.output_dir = Some(o.clone());
    } else {
        cfg.output_dir = cfg.resolved_output_dir();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn parse_range(text: &str) -> Result<Vec<f64>, HarnessError> {
    let parts: Vec<f64> = text
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| HarnessError::Config(format!("bad grid '{text}': {e}")))?;
    let [start, step, stop] = parts[..] else {
        return Err(HarnessError::Config(format!("grid '{text}' must be start:step:stop")));
    };
    if !(step > 0.0 && stop >= start) {
        return Err(HarnessError::Config(format!("grid '{text}' needs a positive step and stop >= start")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9).collect())
}

fn parse_subsample(text: &str) -> Result<(usize, usize), HarnessError> {
    let bad = || HarnessError::Config(format!("subsample '{text}' must look like 4x4"));
    let (a, b) = text.split_once('x').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

fn write_json(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::PrintConfig => {
            print!("{}", ExperimentConfig::default().to_toml_string());
        }
        Command::GenScenes { common, count, style } => {
            let mut cfg = load_config(&common)?;
            if let Some(n) = count {
                cfg.scenes = n;
            }
            if let Some(s) = style {
                cfg.scene_style = s;
            }
            cfg.validate()?;
            let scenes = generate_scene_set(&cfg)?;
            let dir = cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from("scenes"));
            for s in &scenes {
                write_json(&dir.join(format!("scene_{}.json", s.seed)), &s.to_json())?;
            }
            println!("wrote {} scenes to {}", scenes.len(), dir.display());
        }
        Command::Run { common, scene_seed, scene_file, strategy } => {
            let cfg = load_config(&common)?;
            let scene: SceneSpec = match (scene_file, scene_seed) {
                (Some(p), _) => {
                    let text = std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
                    SceneSpec::from_json(&text)?
                }
                (None, Some(seed)) => generate_scene(cfg.scene_style, seed, &cfg.scene)?,
                (None, None) => generate_scene_set(&ExperimentConfig { scenes: 1, ..cfg.clone() })?.remove(0),
            };
            let outcome = run_trial(&scene, strategy, &cfg)?;
            println!("{}", serde_json::to_string_pretty(&outcome.result)?);
            if let Some(dir) = &cfg.output_dir {
                let lines: Vec<String> = outcome.events.iter().map(|e| serde_json::to_string(e).expect("event")).collect();
                write_json(&dir.join(format!("events_{}_{}.ndjson", scene.seed, strategy)), &(lines.join("\n") + "\n"))?;
            }
            if outcome.result.faulted {
                return Err(HarnessError::FaultRateExceeded { faulted: 1, total: 1, limit: cfg.max_fault_rate }.into());
            }
        }
        Command::Batch { common, scenes, strategies } => {
            let mut cfg = load_config(&common)?;
            if let Some(n) = scenes {
                cfg.scenes = n;
            }
            cfg.validate()?;
            if strategies.is_empty() {
                bail!(HarnessError::Config("no strategies given".into()));
            }
            let out = run_batch(&cfg, &strategies)?;
            if let Some(dir) = &cfg.output_dir {
                write_batch_outputs(dir, &out, &cfg)?;
                info!("results written to {}", dir.display());
            }
            println!("{}", out.comparison.to_markdown());
            out.check_fault_rate(cfg.max_fault_rate)?;
        }
        Command::Sweep { common, strategy, scenes, grid_x, grid_y, subsample, sigma } => {
            let mut cfg = load_config(&common)?;
            cfg.scenes = scenes.unwrap_or(50);
            cfg.validate()?;
            let mut grid = SweepGrid::paper_default(strategy)?;
            if let Some(x) = grid_x {
                grid.x_values = parse_range(&x)?;
            }
            if let Some(y) = grid_y {
                grid.y_values = parse_range(&y)?;
            }
            if let Some(s) = subsample {
                let (nx, ny) = parse_subsample(&s)?;
                grid = grid.subsample(nx, ny);
            }
            if !(sigma >= 0.0) {
                bail!(HarnessError::Config("sigma must be non-negative".into()));
            }
            let out = run_sweep(&cfg, strategy, &grid, sigma)?;
            let dir = cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from("sweep"));
            write_sweep_outputs(&dir, &out)?;
            println!(
                "{strategy} sweep over {} cells x {} scenes: distance ratio min {:.3} mean {:.3}, time ratio min {:.3} mean {:.3}",
                grid.cells(),
                out.scenes.len(),
                out.distance.min(),
                out.distance.mean(),
                out.time.min(),
                out.time.mean()
            );
            println!("surfaces written to {}", dir.display());
        }
        Command::Compare { trials, out } => {
            let results = read_trials_csv(&trials)?;
            let cmp = compare(&results, Default::default());
            let md = cmp.to_markdown();
            if let Some(dir) = out {
                write_json(&dir.join("report.md"), &md)?;
                write_json(&dir.join("comparison.json"), &serde_json::to_string_pretty(&cmp)?)?;
            }
            println!("{md}");
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<HarnessError>() {
        Some(HarnessError::Config(_)) | Some(HarnessError::Scene(_)) => EXIT_CONFIG,
        Some(HarnessError::FaultRateExceeded { .. }) => EXIT_FAULTS,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
