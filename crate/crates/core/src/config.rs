//! Scenario configuration: strict TOML with one section per subsystem.
//!
//! Every section except `[mission]` is optional and falls back to the
//! defaults of the corresponding type. Unknown keys anywhere are errors.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::actuation::VehicleParams;
use crate::dynamics::SimConfig;
use crate::error::ConfigError;
use crate::geom::{euler_zxy_to_rotation, EulerZxy, Vec3, VehicleState};
use crate::ground::{CrawlGains, CrawlParams};
use crate::mission::{ControllerKind, MissionPlan, MissionSetup, ModeThresholds};
use crate::pid::PidStackGains;
use crate::se3::{GainSet, Se3Options};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Se3Config {
    pub gains: GainSet,
    pub options: Se3Options,
}

/// Initial pose. A start above the ground begins in flight.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialConfig {
    /// m
    pub position: [f64; 3],
    /// m/s
    pub velocity: [f64; 3],
    /// roll, pitch, yaw in degrees (Z-X-Y convention).
    pub euler_deg: [f64; 3],
}

impl Default for InitialConfig {
    fn default() -> Self {
        Self {
            position: [0.0; 3],
            velocity: [0.0; 3],
            euler_deg: [0.0; 3],
        }
    }
}

impl InitialConfig {
    pub fn state(&self) -> VehicleState {
        let [r, p, y] = self.euler_deg.map(f64::to_radians);
        VehicleState {
            position: Vec3::from(self.position),
            velocity: Vec3::from(self.velocity),
            attitude: euler_zxy_to_rotation(&EulerZxy::new(r, p, y)),
            omega: Vec3::zeros(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Directory receiving telemetry.csv, metrics.json and summary.json.
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
        }
    }
}

/// Environment variable that overrides `[output] dir`.
pub const OUT_DIR_ENV: &str = "TRIFLAP_OUT_DIR";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub seed: u64,
    /// Cap on simulated time (s).
    #[serde(default)]
    pub duration: Option<f64>,
    #[serde(default)]
    pub controller: ControllerKind,
    /// Log every n-th control tick.
    #[serde(default = "one")]
    pub log_every: usize,
    /// Self-righting slew duration (s).
    #[serde(default = "half")]
    pub self_right_duration: f64,
    #[serde(default)]
    pub vehicle: VehicleParams,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default)]
    pub se3: Se3Config,
    #[serde(default)]
    pub pid: PidStackGains,
    /// Defaults to the calibration derived from `[vehicle]`.
    #[serde(default)]
    pub crawl: Option<CrawlParams>,
    #[serde(default)]
    pub crawl_gains: CrawlGains,
    #[serde(default)]
    pub thresholds: ModeThresholds,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub output: OutputConfig,
    pub mission: MissionPlan,
}

fn one() -> usize {
    1
}

fn half() -> f64 {
    0.5
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario config serializes")
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    /// Loads a file path, or a preset when no such file exists.
    pub fn load_or_preset(spec: &str) -> Result<Self, ConfigError> {
        let path = Path::new(spec);
        if path.exists() {
            Self::load(path)
        } else {
            preset(spec)
        }
    }

    /// Checks every invariant; the error names the first violation.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = ConfigError::Invalid;
        if self.name.trim().is_empty() {
            return Err(invalid("name must not be empty".into()));
        }
        if let Some(d) = self.duration {
            if !(d > 0.0) {
                return Err(invalid(format!("duration must be > 0 (got {d})")));
            }
        }
        if self.log_every == 0 {
            return Err(invalid("log_every must be >= 1".into()));
        }
        if !(self.self_right_duration > 0.0 && self.self_right_duration.is_finite()) {
            return Err(invalid("self_right_duration must be > 0".into()));
        }
        self.vehicle.validate().map_err(invalid)?;
        self.sim.validate().map_err(invalid)?;
        self.se3.gains.validate().map_err(invalid)?;
        self.pid.validate().map_err(invalid)?;
        self.crawl_params().validate().map_err(invalid)?;
        self.crawl_gains.validate().map_err(invalid)?;
        self.thresholds.validate().map_err(invalid)?;
        let init = &self.initial;
        if !init
            .position
            .iter()
            .chain(&init.velocity)
            .chain(&init.euler_deg)
            .all(|v| v.is_finite())
        {
            return Err(invalid("initial state must be finite".into()));
        }
        if init.position[2] < 0.0 {
            return Err(invalid("initial.position z must be >= 0".into()));
        }
        self.mission.validate().map_err(invalid)?;
        Ok(())
    }

    pub fn crawl_params(&self) -> CrawlParams {
        self.crawl
            .unwrap_or_else(|| CrawlParams::calibrated(&self.vehicle, self.sim.gravity))
    }

    pub fn setup(&self) -> MissionSetup {
        MissionSetup {
            params: self.vehicle.clone(),
            sim: self.sim.clone(),
            controller: self.controller,
            se3_gains: self.se3.gains,
            se3_options: self.se3.options,
            pid_gains: self.pid,
            crawl: self.crawl_params(),
            crawl_gains: self.crawl_gains,
            thresholds: self.thresholds,
            initial: self.initial.state(),
            seed: self.seed,
            max_duration: self.duration,
            log_every: self.log_every,
            self_right_duration: self.self_right_duration,
        }
    }

    /// CLI override > environment override > config file.
    pub fn output_dir(&self, cli: Option<&Path>) -> PathBuf {
        if let Some(p) = cli {
            return p.to_path_buf();
        }
        match std::env::var_os(OUT_DIR_ENV) {
            Some(v) if !v.is_empty() => PathBuf::from(v),
            _ => self.output.dir.clone(),
        }
    }
}

/// Built-in scenarios: (name, TOML source).
pub const PRESETS: [(&str, &str); 11] = [
    ("hover", include_str!("../presets/hover.toml")),
    ("hover-noisy", include_str!("../presets/hover-noisy.toml")),
    ("hover-yaw-drift", include_str!("../presets/hover-yaw-drift.toml")),
    ("hover-published-kf", include_str!("../presets/hover-published-kf.toml")),
    (
        "figure-eight-ground",
        include_str!("../presets/figure-eight-ground.toml"),
    ),
    ("obstacle-cross", include_str!("../presets/obstacle-cross.toml")),
    ("multi-mode-mission", include_str!("../presets/multi-mode-mission.toml")),
    ("selfright", include_str!("../presets/selfright.toml")),
    ("endurance-hover", include_str!("../presets/endurance-hover.toml")),
    ("endurance-crawl", include_str!("../presets/endurance-crawl.toml")),
    ("speed-sweep", include_str!("../presets/speed-sweep.toml")),
];

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}

pub fn preset(name: &str) -> Result<ScenarioConfig, ConfigError> {
    let (_, text) = PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| ConfigError::UnknownPreset(name.to_string()))?;
    ScenarioConfig::from_toml(text)
}
