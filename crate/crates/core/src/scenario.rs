//! One scenario end to end: config in, telemetry and metrics out.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ScenarioConfig;
use crate::error::Error;
use crate::ground::FigureEightTracker;
use crate::metrics::{compute_metrics, MetricsReference, MetricsReport};
use crate::mission::{run_mission, MissionEvent, MissionOutcome, MissionPlan, Mode, Phase};
use crate::trajectory::TrajectorySpec;

pub const TELEMETRY_FILE: &str = "telemetry.csv";
pub const METRICS_FILE: &str = "metrics.json";
pub const SUMMARY_FILE: &str = "summary.json";

/// Samples per figure-eight lap in the ground reference.
const FIGURE_EIGHT_SAMPLES: usize = 2000;

fn trajectory_end(spec: &TrajectorySpec) -> Option<(f64, f64)> {
    let traj = spec.build().ok()?;
    let p = traj.sample_clamped(traj.duration()).position;
    Some((p.x, p.y))
}

/// Planned planar path of the plan's crawl phases, chained from `start`.
///
/// Crawl targets are straight segments; a figure-eight is laid out around
/// the point where its phase begins. Airborne phases only move the chain
/// point. Empty when the plan has no crawl phase.
pub fn ground_reference(plan: &MissionPlan, start: (f64, f64)) -> Vec<(f64, f64)> {
    let mut here = start;
    let mut path = Vec::new();
    let mut any_crawl = false;
    for phase in &plan.phases {
        match phase {
            Phase::CrawlTo { target, .. } => {
                if path.is_empty() {
                    path.push(here);
                }
                here = (target[0], target[1]);
                path.push(here);
                any_crawl = true;
            }
            Phase::CrawlFigureEight {
                amplitude,
                period,
                laps,
                ..
            } => {
                let end = period * laps;
                let tracker = FigureEightTracker::new(here, *amplitude, *period, end, 0.0);
                let n = ((FIGURE_EIGHT_SAMPLES as f64) * laps).ceil() as usize;
                path.extend((0..=n).map(|i| tracker.point(end * i as f64 / n as f64)));
                here = tracker.point(end);
                any_crawl = true;
            }
            Phase::Hover { position: Some(p), .. } => {
                here = (p[0], p[1]);
                path.push(here);
            }
            Phase::Track { trajectory, .. } => {
                if let Some(end) = trajectory_end(trajectory) {
                    here = end;
                    path.push(here);
                }
            }
            _ => {}
        }
    }
    if any_crawl {
        path
    } else {
        Vec::new()
    }
}

pub fn metrics_reference(cfg: &ScenarioConfig) -> MetricsReference {
    MetricsReference {
        ground_path: ground_reference(&cfg.mission, (cfg.initial.position[0], cfg.initial.position[1])),
        ..MetricsReference::default()
    }
}

#[derive(Debug)]
pub struct ScenarioResult {
    pub outcome: MissionOutcome,
    pub metrics: MetricsReport,
}

impl ScenarioResult {
    /// True when the mission ran every phase to completion.
    pub fn completed(&self) -> bool {
        matches!(self.outcome.termination, crate::mission::Termination::Completed)
    }
}

/// Run summary written next to the telemetry.
#[derive(Debug, Serialize)]
pub struct Summary<'a> {
    pub name: &'a str,
    pub controller: String,
    pub seed: u64,
    pub termination: &'static str,
    pub failure: Option<String>,
    pub final_time_s: f64,
    pub final_mode: Mode,
    pub phases_completed: usize,
    pub phases_total: usize,
    pub control_faults: u64,
    pub battery_remaining_mah: f64,
    pub mode_sequence: Vec<Mode>,
    pub events: &'a [MissionEvent],
}

pub fn summary<'a>(cfg: &'a ScenarioConfig, result: &'a ScenarioResult) -> Summary<'a> {
    let o = &result.outcome;
    Summary {
        name: &cfg.name,
        controller: cfg.controller.to_string(),
        seed: cfg.seed,
        termination: o.termination.label(),
        failure: match &o.termination {
            crate::mission::Termination::Failed(e) => Some(e.to_string()),
            _ => None,
        },
        final_time_s: o.final_time,
        final_mode: o.final_mode,
        phases_completed: o.phases_completed,
        phases_total: cfg.mission.phases.len(),
        control_faults: o.control_faults,
        battery_remaining_mah: o.battery.charge_mah,
        mode_sequence: o.mode_sequence(),
        events: &o.events,
    }
}

/// Validates, simulates and scores a scenario. Writes nothing.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioResult, Error> {
    cfg.validate()?;
    let outcome = run_mission(&cfg.mission, &cfg.setup())?;
    let metrics = compute_metrics(&outcome.log, &metrics_reference(cfg))?;
    Ok(ScenarioResult { outcome, metrics })
}

/// Writes telemetry, metrics and summary into `dir`, creating it.
pub fn write_outputs(dir: &Path, cfg: &ScenarioConfig, result: &ScenarioResult) -> Result<Vec<PathBuf>, Error> {
    std::fs::create_dir_all(dir)?;
    let telemetry = dir.join(TELEMETRY_FILE);
    result.outcome.log.save(&telemetry)?;
    let metrics = dir.join(METRICS_FILE);
    std::fs::write(&metrics, to_json(&result.metrics))?;
    let summary_path = dir.join(SUMMARY_FILE);
    std::fs::write(&summary_path, to_json(&summary(cfg, result)))?;
    Ok(vec![telemetry, metrics, summary_path])
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::preset;

    #[test]
    fn ground_reference_chains_segments() {
        let plan = MissionPlan::new(vec![
            Phase::CrawlTo {
                target: [0.5, 0.0],
                tolerance: 0.02,
                timeout: None,
            },
            Phase::Takeoff {
                altitude: 1.0,
                duration: 2.0,
                timeout: None,
            },
        ]);
        assert_eq!(ground_reference(&plan, (0.0, 0.0)), vec![(0.0, 0.0), (0.5, 0.0)]);
    }

    #[test]
    fn flight_only_plan_has_no_ground_path() {
        let cfg = preset("hover").unwrap();
        assert!(metrics_reference(&cfg).ground_path.is_empty());
    }

    #[test]
    fn figure_eight_reference_is_closed() {
        let cfg = preset("figure-eight-ground").unwrap();
        let path = metrics_reference(&cfg).ground_path;
        let (a, b) = (path[0], *path.last().unwrap());
        assert!((a.0 - b.0).hypot(a.1 - b.1) < 1e-9);
        let max_x = path.iter().map(|p| p.0).fold(f64::MIN, f64::max);
        assert!((max_x - 0.3).abs() < 1e-4);
    }

    #[test]
    fn hover_scenario_settles_below_a_millimetre() {
        let mut cfg = preset("hover").unwrap();
        cfg.duration = Some(6.0);
        let r = run_scenario(&cfg).unwrap();
        assert!(r.metrics.steady_state_rmse_m.unwrap() < 1e-3);
        assert!(r.metrics.settle_time_s.unwrap() < 3.0);
    }
}
