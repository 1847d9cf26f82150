//! Ground locomotion: an empirical crawl model and the differential-steering
//! controller.
//!
//! The vibration-driven crawl is represented by a calibrated unicycle. The
//! mean of the left and right module frequencies sets forward speed (never
//! negative, capped at the measured top speed) and their difference sets
//! yaw rate, with the right module turning the body counterclockwise.
//!
//! The back module does not take part in crawling; crawl commands map to
//! `ActuatorCommand::freq = [0, f_left, f_right]`.

use serde::{Deserialize, Serialize};

use crate::actuation::{ActuatorCommand, VehicleParams};
use crate::error::GroundError;
use crate::geom::wrap_angle;
use crate::pid::{Pid, PidGains};

/// Measured top crawl speed (m/s).
pub const TOP_CRAWL_SPEED: f64 = 0.054;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrawlParams {
    /// Forward speed per Hz of mean frequency (m/s/Hz).
    pub speed_coeff: f64,
    /// Yaw rate per Hz of right-minus-left frequency (rad/s/Hz).
    pub yaw_rate_coeff: f64,
    /// Per-module frequency cap while crawling (Hz).
    pub frequency_cap: f64,
    /// m/s
    pub max_speed: f64,
}

impl CrawlParams {
    /// Calibrated so that both modules at the cap give the top speed.
    pub fn calibrated(params: &VehicleParams, gravity: f64) -> Self {
        let cap = params.crawl_frequency_cap(gravity);
        Self {
            speed_coeff: TOP_CRAWL_SPEED / cap,
            yaw_rate_coeff: 0.05,
            frequency_cap: cap,
            max_speed: TOP_CRAWL_SPEED,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.speed_coeff > 0.0 && self.yaw_rate_coeff > 0.0) {
            return Err("crawl.speed_coeff and crawl.yaw_rate_coeff must be > 0".into());
        }
        if !(self.frequency_cap > 0.0 && self.max_speed > 0.0) {
            return Err("crawl.frequency_cap and crawl.max_speed must be > 0".into());
        }
        Ok(())
    }
}

impl Default for CrawlParams {
    fn default() -> Self {
        Self::calibrated(&VehicleParams::default(), crate::actuation::STANDARD_GRAVITY)
    }
}

/// Planar pose on the ground.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CrawlState {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
    pub grounded: bool,
}

impl CrawlState {
    pub fn new(x: f64, y: f64, yaw: f64) -> Self {
        Self {
            x,
            y,
            yaw,
            grounded: true,
        }
    }
}

/// Forward speed and yaw rate for a pair of module frequencies.
pub fn crawl_twist(f_left: f64, f_right: f64, params: &CrawlParams) -> (f64, f64) {
    let fl = f_left.clamp(0.0, params.frequency_cap);
    let fr = f_right.clamp(0.0, params.frequency_cap);
    let v = (params.speed_coeff * 0.5 * (fl + fr)).min(params.max_speed);
    let w = params.yaw_rate_coeff * (fr - fl);
    (v, w)
}

/// Advances the unicycle by `dt` along the exact arc.
pub fn crawl_kinematics(f_left: f64, f_right: f64, params: &CrawlParams, state: &CrawlState, dt: f64) -> CrawlState {
    let (v, w) = crawl_twist(f_left, f_right, params);
    let yaw_next = state.yaw + w * dt;
    let (dx, dy) = if (w * dt).abs() < 1e-9 {
        let mid = state.yaw + 0.5 * w * dt;
        (v * dt * mid.cos(), v * dt * mid.sin())
    } else {
        let r = v / w;
        (
            r * (yaw_next.sin() - state.yaw.sin()),
            -r * (yaw_next.cos() - state.yaw.cos()),
        )
    };
    CrawlState {
        x: state.x + dx,
        y: state.y + dy,
        yaw: wrap_angle(yaw_next),
        grounded: true,
    }
}

/// Distances below this are treated as "at the target".
pub const COINCIDENT_TOL: f64 = 1e-9;

/// Heading from `pos` toward `target`, four-quadrant.
pub fn target_yaw(pos: (f64, f64), target: (f64, f64)) -> Result<f64, GroundError> {
    let dx = target.0 - pos.0;
    let dy = target.1 - pos.1;
    if dx.hypot(dy) < COINCIDENT_TOL {
        return Err(GroundError::CoincidentTarget);
    }
    Ok(dy.atan2(dx))
}

/// Gerono lemniscate `x = A sin(2 pi t / T)`, `y = A/2 sin(4 pi t / T)`.
pub fn figure_eight_reference(t: f64, amplitude: f64, period: f64) -> (f64, f64) {
    let phase = 2.0 * std::f64::consts::PI * t / period;
    (amplitude * phase.sin(), 0.5 * amplitude * (2.0 * phase).sin())
}

/// Peak speed along the lemniscate (reached at the crossover).
pub fn figure_eight_peak_speed(amplitude: f64, period: f64) -> f64 {
    let w = 2.0 * std::f64::consts::PI / period;
    amplitude * w * 2f64.sqrt()
}

/// Carrot generator for the lemniscate.
///
/// Tracks the robot's progress along the curve (in curve time) and places
/// the target between `min_lead` and `max_lead` seconds ahead of it, aiming
/// for `lead` seconds ahead of the schedule. The carrot never falls behind
/// the robot, so the forward-only crawl never has to reverse.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FigureEightTracker {
    pub origin: (f64, f64),
    pub amplitude: f64,
    pub period: f64,
    pub end: f64,
    pub lead: f64,
    pub min_lead: f64,
    pub max_lead: f64,
    progress: f64,
}

impl FigureEightTracker {
    pub fn new(origin: (f64, f64), amplitude: f64, period: f64, end: f64, lead: f64) -> Self {
        Self {
            origin,
            amplitude,
            period,
            end,
            lead,
            min_lead: 0.5 * lead,
            max_lead: 2.0 * lead,
            progress: 0.0,
        }
    }

    pub fn point(&self, s: f64) -> (f64, f64) {
        let (x, y) = figure_eight_reference(s, self.amplitude, self.period);
        (self.origin.0 + x, self.origin.1 + y)
    }

    /// Curve time of the closest point, searched just around the last one.
    pub fn progress(&self) -> f64 {
        self.progress
    }

    /// Target point for schedule time `t` with the robot at `pos`.
    pub fn target(&mut self, t: f64, pos: (f64, f64)) -> (f64, f64) {
        let window = 0.05 * self.period;
        let steps = 200;
        let lo = self.progress;
        let mut best = (f64::INFINITY, lo);
        for i in 0..=steps {
            let s = (lo + window * i as f64 / steps as f64).min(self.end);
            let (x, y) = self.point(s);
            let d = (x - pos.0).hypot(y - pos.1);
            if d < best.0 {
                best = (d, s);
            }
        }
        self.progress = best.1;
        let ahead = (t + self.lead - self.progress).clamp(self.min_lead, self.max_lead);
        self.point((self.progress + ahead).min(self.end))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CrawlGains {
    /// Distance loop; output is common-mode frequency (Hz).
    pub distance: PidGains,
    /// Heading loop; output is differential frequency (Hz).
    pub yaw: PidGains,
}

impl Default for CrawlGains {
    fn default() -> Self {
        Self {
            distance: PidGains::new(30.0, 0.0, 0.0, 10.0, 1.0),
            yaw: PidGains::new(25.0, 0.0, 0.0, 10.0, 1.0),
        }
    }
}

impl CrawlGains {
    pub fn validate(&self) -> Result<(), String> {
        self.distance.validate("crawl_gains.distance")?;
        self.yaw.validate("crawl_gains.yaw")
    }
}

/// Dual-layer PID: distance loop plus heading loop, mixed differentially.
#[derive(Clone, Debug)]
pub struct CrawlController {
    pub gains: CrawlGains,
    distance: Pid,
    heading: Pid,
    last_heading: Option<f64>,
}

/// One crawl command.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrawlCommand {
    pub f_left: f64,
    pub f_right: f64,
    pub distance_output: f64,
    pub yaw_output: f64,
}

impl CrawlCommand {
    pub fn to_actuators(&self) -> ActuatorCommand {
        ActuatorCommand::new([0.0, self.f_left, self.f_right])
    }
}

impl CrawlController {
    pub fn new(gains: CrawlGains) -> Self {
        Self {
            distance: Pid::new(gains.distance),
            heading: Pid::new(gains.yaw),
            gains,
            last_heading: None,
        }
    }

    pub fn reset(&mut self) {
        self.distance.reset();
        self.heading.reset();
        self.last_heading = None;
    }

    pub fn step(&mut self, state: &CrawlState, target: (f64, f64), params: &CrawlParams, dt: f64) -> CrawlCommand {
        let dist = (target.0 - state.x).hypot(target.1 - state.y);
        let o_d = self.distance.update_error(dist, -dist, dt);
        let heading = match target_yaw((state.x, state.y), target) {
            Ok(h) => {
                self.last_heading = Some(h);
                h
            }
            Err(GroundError::CoincidentTarget) => self.last_heading.unwrap_or(state.yaw),
        };
        let err = wrap_angle(heading - state.yaw);
        let o_psi = self.heading.update_error(err, state.yaw, dt);
        // No forward push toward a target abeam or behind.
        let o_d = o_d * err.cos().max(0.0);
        let cap = params.frequency_cap;
        CrawlCommand {
            f_left: (o_d - o_psi).clamp(0.0, cap),
            f_right: (o_d + o_psi).clamp(0.0, cap),
            distance_output: o_d,
            yaw_output: o_psi,
        }
    }
}

/// Mean distance from each point of `path` to the polyline `reference`.
pub fn mean_cross_track(path: &[(f64, f64)], reference: &[(f64, f64)]) -> f64 {
    if path.is_empty() {
        return 0.0;
    }
    path.iter().map(|p| distance_to_polyline(*p, reference)).sum::<f64>() / path.len() as f64
}

pub fn distance_to_polyline(p: (f64, f64), poly: &[(f64, f64)]) -> f64 {
    match poly {
        [] => f64::INFINITY,
        [only] => (p.0 - only.0).hypot(p.1 - only.1),
        _ => poly
            .windows(2)
            .map(|w| distance_to_segment(p, w[0], w[1]))
            .fold(f64::INFINITY, f64::min),
    }
}

fn distance_to_segment(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (abx, aby) = (b.0 - a.0, b.1 - a.1);
    let len2 = abx * abx + aby * aby;
    let t = if len2 > 0.0 {
        (((p.0 - a.0) * abx + (p.1 - a.1) * aby) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p.0 - (a.0 + t * abx)).hypot(p.1 - (a.1 + t * aby))
}
