use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::Alternative;
use crate::effector::{RansacConfig, SummaryConfig, TaxelLayout, TaxelNoise, WrenchLimits};
use crate::physics2d::PhysicsConfig;
use crate::scene::{SceneGenParams, SceneStyle};
use crate::strategies::{EventThresholds, StrategyParams};

use super::HarnessError;

/// Environment variable that overrides `output_dir`.
pub const OUTPUT_DIR_ENV: &str = "CLUTTER_OUTPUT_DIR";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorConfig {
    pub layout: TaxelLayout,
    pub noise: TaxelNoise,
    pub ransac: RansacConfig,
    pub summary: SummaryConfig,
    /// Sense every n-th control tick.
    pub decimation: u32,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            layout: TaxelLayout::default(),
            noise: TaxelNoise::default(),
            ransac: RansacConfig::default(),
            summary: SummaryConfig::default(),
            decimation: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaperConfig {
    pub radius: f64,
    /// Fraction of the speed limits kept at the goal itself.
    pub floor: f64,
}

impl Default for TaperConfig {
    fn default() -> Self {
        Self { radius: 0.05, floor: 0.2 }
    }
}

/// Everything one experiment needs. Loaded from TOML; every key is
/// optional and defaults to the values below.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed: scene seeds and per-trial streams derive from it.
    pub seed: u64,
    pub scenes: usize,
    pub scene_style: SceneStyle,
    /// Time limit per trial, s.
    pub t_tot: f64,
    /// Goal circle radius, m.
    pub goal_radius: f64,
    /// Control loop rate, Hz. Must divide the physics rate.
    pub control_rate: f64,
    pub workers: usize,
    pub output_dir: Option<PathBuf>,
    /// Fraction of faulted trials above which a batch is reported as failed.
    pub max_fault_rate: f64,
    /// Write per-trial tactile summaries as NDJSON.
    pub record_tactile: bool,
    pub alternative: Alternative,
    pub physics: PhysicsConfig,
    pub scene: SceneGenParams,
    pub strategy: StrategyParams,
    pub events: EventThresholds,
    pub limits: WrenchLimits,
    pub taper: TaperConfig,
    pub sensor: SensorConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            scenes: 300,
            scene_style: SceneStyle::Continuous,
            t_tot: 120.0,
            goal_radius: 0.0075,
            control_rate: 20.0,
            workers: 1,
            output_dir: None,
            max_fault_rate: 0.05,
            record_tactile: false,
            alternative: Alternative::TwoSided,
            physics: PhysicsConfig::default(),
            scene: SceneGenParams::default(),
            strategy: StrategyParams::default(),
            events: EventThresholds::default(),
            limits: WrenchLimits::default(),
            taper: TaperConfig::default(),
            sensor: SensorConfig::default(),
        }
    }
}

impl ExperimentConfig {
    /// Goal radius enlarged to 3 cm for quick demonstrations.
    pub fn relaxed() -> Self {
        Self { goal_radius: 0.03, ..Self::default() }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn control_dt(&self) -> f64 {
        1.0 / self.control_rate
    }

    /// Physics steps per control tick.
    pub fn substeps(&self) -> u32 {
        (self.control_dt() / self.physics.dt).round() as u32
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if !(self.t_tot > 0.0) {
            return bad("t_tot must be positive".into());
        }
        if !(self.goal_radius > 0.0) {
            return bad("goal_radius must be positive".into());
        }
        if self.scenes == 0 {
            return bad("scenes must be at least 1".into());
        }
        if self.workers == 0 {
            return bad("workers must be at least 1".into());
        }
        if !(self.control_rate > 0.0) {
            return bad("control_rate must be positive".into());
        }
        self.physics.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        let ratio = self.control_dt() / self.physics.dt;
        if (ratio - ratio.round()).abs() > 1e-9 || ratio.round() < 1.0 {
            return bad(format!("control period {} s is not a whole number of physics steps", self.control_dt()));
        }
        if self.sensor.decimation == 0 {
            return bad("sensor.decimation must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.max_fault_rate) {
            return bad("max_fault_rate must lie in [0, 1]".into());
        }
        if !(self.taper.radius >= 0.0 && (0.0..=1.0).contains(&self.taper.floor)) {
            return bad("taper radius must be non-negative and floor in [0, 1]".into());
        }
        self.strategy.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        self.events.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(())
    }

    /// `output_dir`, overridden by the environment when set.
    pub fn resolved_output_dir(&self) -> Option<PathBuf> {
        match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(v) if !v.is_empty() => Some(PathBuf::from(v)),
            _ => self.output_dir.clone(),
        }
    }
}
