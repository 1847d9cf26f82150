//! Mode manager, self-righting maneuver and the mission executor.
//!
//! The executor owns every piece of mutable state of a run: the rigid
//! body, sensors, disturbances, battery and all controllers. It steps the
//! physics at `dt_physics`, runs controllers and mode logic every control
//! period, and emits one telemetry row per logged control tick.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::actuation::{
    forward_mix, inverse_mix, module_positions, ActuatorCommand, Battery, ControlWrench, VehicleParams,
};
use crate::dynamics::{ground_contact, Disturbance, Observation, RigidBody, Sensors, SimConfig};
use crate::error::{ActuationError, ControlError, MissionError};
use crate::geom::{Rotation, Vec3, VehicleState};
use crate::ground::{CrawlController, CrawlGains, CrawlParams, CrawlState, FigureEightTracker};
use crate::pid::{PidStack, PidStackGains};
use crate::se3::{FlatTarget, GainSet, Se3Controller, Se3Options};
use crate::telemetry::{TelemetryLog, TelemetryRecord};
use crate::trajectory::{Trajectory, TrajectorySpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    Crawl,
    Takeoff,
    Flight,
    Landing,
    SelfRight,
    Grounded,
    Depleted,
}

impl Mode {
    pub const ALL: [Mode; 7] = [
        Mode::Crawl,
        Mode::Takeoff,
        Mode::Flight,
        Mode::Landing,
        Mode::SelfRight,
        Mode::Grounded,
        Mode::Depleted,
    ];

    /// Modes in which the vehicle rests on the ground.
    pub fn is_ground(self) -> bool {
        matches!(self, Mode::Crawl | Mode::Grounded | Mode::SelfRight)
    }

    pub fn is_airborne(self) -> bool {
        matches!(self, Mode::Takeoff | Mode::Flight | Mode::Landing)
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Crawl => "Crawl",
            Mode::Takeoff => "Takeoff",
            Mode::Flight => "Flight",
            Mode::Landing => "Landing",
            Mode::SelfRight => "SelfRight",
            Mode::Grounded => "Grounded",
            Mode::Depleted => "Depleted",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown mode {s:?}"))
    }
}

/// The transition graph. Self-loops are allowed; `Depleted` is absorbing.
pub fn transition_allowed(from: Mode, to: Mode) -> bool {
    use Mode::*;
    if from == Depleted {
        return to == Depleted;
    }
    from == to
        || to == Depleted
        || matches!(
            (from, to),
            (Crawl, Takeoff)
                | (Crawl, Grounded)
                | (Crawl, SelfRight)
                | (Takeoff, Flight)
                | (Flight, Landing)
                | (Landing, Grounded)
                | (Grounded, Crawl)
                | (Grounded, Takeoff)
                | (Grounded, SelfRight)
                | (SelfRight, Grounded)
        )
}

/// Thresholds of the automatic transitions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModeThresholds {
    /// Takeoff becomes Flight above this altitude (m).
    pub takeoff_altitude: f64,
    /// Landing becomes Grounded below this descent rate (m/s).
    pub landing_descent_rate: f64,
    /// Ground modes switch to SelfRight above this tilt (deg).
    pub tipped_deg: f64,
    /// SelfRight ends below this tilt (deg).
    pub upright_deg: f64,
}

impl Default for ModeThresholds {
    fn default() -> Self {
        Self {
            takeoff_altitude: 0.2,
            landing_descent_rate: 0.05,
            tipped_deg: 60.0,
            upright_deg: 5.0,
        }
    }
}

impl ModeThresholds {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.takeoff_altitude > 0.0 && self.landing_descent_rate > 0.0) {
            return Err("thresholds.takeoff_altitude and thresholds.landing_descent_rate must be > 0".into());
        }
        if !(self.upright_deg > 0.0 && self.upright_deg < self.tipped_deg && self.tipped_deg < 180.0) {
            return Err("thresholds must satisfy 0 < upright_deg < tipped_deg < 180".into());
        }
        Ok(())
    }
}

/// What the mode logic looks at.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeInputs {
    pub altitude: f64,
    pub vertical_speed: f64,
    pub on_ground: bool,
    /// Angle between body z and world z (rad).
    pub tilt: f64,
    pub battery_empty: bool,
}

impl ModeInputs {
    pub fn from_state(state: &VehicleState, on_ground: bool, battery_empty: bool) -> Self {
        Self {
            altitude: state.position.z,
            vertical_speed: state.velocity.z,
            on_ground,
            tilt: state.attitude.tilt(),
            battery_empty,
        }
    }
}

/// One evaluation of the mode logic.
///
/// Automatic rules fire first (depletion, altitude, touchdown, tip-over,
/// upright); a plan command is then checked against the graph.
pub fn mode_transition(
    mode: Mode,
    inputs: &ModeInputs,
    command: Option<Mode>,
    th: &ModeThresholds,
) -> Result<Mode, MissionError> {
    if mode == Mode::Depleted || inputs.battery_empty {
        return Ok(Mode::Depleted);
    }
    let tipped = inputs.tilt > th.tipped_deg.to_radians();
    let upright = inputs.tilt < th.upright_deg.to_radians();
    let auto = match mode {
        Mode::Takeoff if inputs.altitude > th.takeoff_altitude => Mode::Flight,
        Mode::Landing if inputs.on_ground && inputs.vertical_speed.abs() < th.landing_descent_rate => Mode::Grounded,
        Mode::Crawl | Mode::Grounded if tipped => Mode::SelfRight,
        Mode::SelfRight if upright => Mode::Grounded,
        m => m,
    };
    if auto != mode {
        return Ok(auto);
    }
    match command {
        Some(to) if !transition_allowed(mode, to) => Err(MissionError::InvalidTransition { from: mode, to }),
        Some(to) => Ok(to),
        None => Ok(mode),
    }
}

/// Scripted self-righting: a geodesic slew from the tipped attitude to the
/// nearest upright attitude with a minimum-jerk time profile.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SelfRightManeuver {
    pub start: Rotation,
    pub target: Rotation,
    /// World-frame unit axis of the slew.
    pub axis: Vec3,
    /// Total slew angle (rad), equal to the initial tilt.
    pub angle: f64,
    pub duration: f64,
    /// The two modules nearest the ground (indices into back, left, right).
    pub modules: [usize; 2],
}

/// Self-righting must finish by this time (s).
pub const SELF_RIGHT_TIMEOUT: f64 = 0.75;

/// Indices of the two modules whose thrust points sit lowest.
pub fn lowest_modules(attitude: &Rotation, params: &VehicleParams) -> [usize; 2] {
    let z = module_positions(params).map(|p| (*attitude * p).z);
    let highest = (0..3).fold(0, |best, i| if z[i] > z[best] { i } else { best });
    match highest {
        0 => [1, 2],
        1 => [0, 2],
        _ => [0, 1],
    }
}

impl SelfRightManeuver {
    pub fn plan(state: &VehicleState, params: &VehicleParams, duration: f64) -> Self {
        let r0 = state.attitude;
        let zb = r0.z_axis();
        let e3 = Vec3::z();
        let cross = zb.cross(&e3);
        let angle = cross.norm().atan2(zb.dot(&e3));
        let axis = if cross.norm() > 1e-9 {
            cross.normalize()
        } else {
            // Upright or exactly inverted; any horizontal axis works.
            let x = r0.x_axis();
            Vec3::new(x.x, x.y, 0.0).try_normalize(1e-12).unwrap_or_else(Vec3::x)
        };
        let target = if angle > 0.0 {
            Rotation::exp(&(axis * angle)) * r0
        } else {
            r0
        };
        Self {
            start: r0,
            target,
            axis,
            angle,
            duration,
            modules: lowest_modules(&r0, params),
        }
    }

    /// Attitude and body rates `t` seconds into the maneuver.
    pub fn attitude_at(&self, t: f64) -> (Rotation, Vec3) {
        if self.angle == 0.0 || t >= self.duration {
            return (self.target, Vec3::zeros());
        }
        let [s, ds, _, _] = crate::trajectory::min_jerk_profile((t / self.duration).max(0.0));
        let r = Rotation::exp(&(self.axis * (self.angle * s))) * self.start;
        let w_world = self.axis * (self.angle * ds / self.duration);
        (r, r.transpose() * w_world)
    }

    /// Actuator command while the maneuver runs.
    pub fn command(&self, params: &VehicleParams) -> ActuatorCommand {
        let mut f = [0.0; 3];
        if self.angle > 0.0 {
            for i in self.modules {
                f[i] = params.max_frequency;
            }
        }
        ActuatorCommand::new(f)
    }
}

/// Ground state `t_elapsed` seconds into a maneuver.
pub fn self_right_step(
    state: &VehicleState,
    maneuver: &SelfRightManeuver,
    t_elapsed: f64,
    upright_deg: f64,
) -> Result<VehicleState, MissionError> {
    let (attitude, omega) = maneuver.attitude_at(t_elapsed);
    if t_elapsed > SELF_RIGHT_TIMEOUT && attitude.tilt() >= upright_deg.to_radians() {
        return Err(MissionError::SelfRightTimeout(t_elapsed));
    }
    Ok(VehicleState {
        position: Vec3::new(state.position.x, state.position.y, 0.0),
        velocity: Vec3::zeros(),
        attitude,
        omega,
    })
}

fn default_tolerance() -> f64 {
    0.02
}
fn default_laps() -> f64 {
    1.0
}
fn default_lookahead() -> f64 {
    6.0
}
fn default_takeoff_duration() -> f64 {
    2.0
}
fn default_land_duration() -> f64 {
    3.0
}

/// One step of a mission plan. Every phase has a completion condition and
/// a timeout (explicit or derived from its duration).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Phase {
    /// Crawl to a planar point; done within `tolerance` (m).
    CrawlTo {
        target: [f64; 2],
        #[serde(default = "default_tolerance")]
        tolerance: f64,
        #[serde(default)]
        timeout: Option<f64>,
    },
    /// Crawl along a lemniscate starting at the current position.
    CrawlFigureEight {
        amplitude: f64,
        period: f64,
        #[serde(default = "default_laps")]
        laps: f64,
        /// The crawl controller aims at the reference this far ahead (s).
        #[serde(default = "default_lookahead")]
        lookahead: f64,
        #[serde(default)]
        timeout: Option<f64>,
    },
    /// Vertical climb to `altitude` over `duration` seconds.
    Takeoff {
        altitude: f64,
        #[serde(default = "default_takeoff_duration")]
        duration: f64,
        #[serde(default)]
        timeout: Option<f64>,
    },
    /// Hold a point; defaults to the last reference.
    Hover {
        duration: f64,
        #[serde(default)]
        position: Option<[f64; 3]>,
        #[serde(default)]
        timeout: Option<f64>,
    },
    /// Follow an absolute trajectory.
    Track {
        trajectory: TrajectorySpec,
        #[serde(default)]
        timeout: Option<f64>,
    },
    /// Descend and touch down.
    Land {
        #[serde(default = "default_land_duration")]
        duration: f64,
        #[serde(default)]
        timeout: Option<f64>,
    },
    /// Wait for the vehicle to be upright on the ground.
    SelfRight {
        #[serde(default)]
        timeout: Option<f64>,
    },
    /// Motors off on the ground.
    Idle {
        duration: f64,
        #[serde(default)]
        timeout: Option<f64>,
    },
}

impl Phase {
    pub fn name(&self) -> &'static str {
        match self {
            Phase::CrawlTo { .. } => "crawl_to",
            Phase::CrawlFigureEight { .. } => "crawl_figure_eight",
            Phase::Takeoff { .. } => "takeoff",
            Phase::Hover { .. } => "hover",
            Phase::Track { .. } => "track",
            Phase::Land { .. } => "land",
            Phase::SelfRight { .. } => "self_right",
            Phase::Idle { .. } => "idle",
        }
    }

    fn explicit_timeout(&self) -> Option<f64> {
        match self {
            Phase::CrawlTo { timeout, .. }
            | Phase::CrawlFigureEight { timeout, .. }
            | Phase::Takeoff { timeout, .. }
            | Phase::Hover { timeout, .. }
            | Phase::Track { timeout, .. }
            | Phase::Land { timeout, .. }
            | Phase::SelfRight { timeout }
            | Phase::Idle { timeout, .. } => *timeout,
        }
    }

    pub fn validate(&self, index: usize) -> Result<(), String> {
        let bad = |what: &str| Err(format!("mission.phases[{index}] ({}): {what}", self.name()));
        let pos = |x: f64| x > 0.0 && !x.is_nan();
        if let Some(t) = self.explicit_timeout() {
            if !pos(t) {
                return bad("timeout must be > 0");
            }
        }
        match self {
            Phase::CrawlTo { target, tolerance, .. } => {
                if !target.iter().all(|v| v.is_finite()) {
                    return bad("target must be finite");
                }
                if !(pos(*tolerance) && tolerance.is_finite()) {
                    return bad("tolerance must be > 0");
                }
            }
            Phase::CrawlFigureEight {
                amplitude,
                period,
                laps,
                lookahead,
                ..
            } => {
                if !(pos(*amplitude) && amplitude.is_finite() && pos(*period) && period.is_finite() && pos(*laps)) {
                    return bad("amplitude, period and laps must be > 0");
                }
                if !(*lookahead >= 0.0 && lookahead.is_finite()) {
                    return bad("lookahead must be >= 0");
                }
            }
            Phase::Takeoff { altitude, duration, .. } => {
                if !(pos(*altitude) && altitude.is_finite()) {
                    return bad("altitude must be > 0");
                }
                if !(pos(*duration) && duration.is_finite()) {
                    return bad("duration must be > 0");
                }
            }
            Phase::Hover { duration, position, .. } => {
                if !pos(*duration) {
                    return bad("duration must be > 0");
                }
                if position.is_some_and(|p| !p.iter().all(|v| v.is_finite())) {
                    return bad("position must be finite");
                }
            }
            Phase::Track { trajectory, .. } => {
                trajectory
                    .build()
                    .map_err(|e| format!("mission.phases[{index}] (track): {e}"))?;
            }
            Phase::Land { duration, .. } => {
                if !(pos(*duration) && duration.is_finite()) {
                    return bad("duration must be > 0");
                }
            }
            Phase::SelfRight { .. } => {}
            Phase::Idle { duration, .. } => {
                if !pos(*duration) {
                    return bad("duration must be > 0");
                }
            }
        }
        Ok(())
    }
}

/// Ordered phases.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MissionPlan {
    pub phases: Vec<Phase>,
}

impl MissionPlan {
    pub fn new(phases: Vec<Phase>) -> Self {
        Self { phases }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.phases.is_empty() {
            return Err("mission.phases must not be empty".into());
        }
        self.phases.iter().enumerate().try_for_each(|(i, p)| p.validate(i))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControllerKind {
    #[default]
    Se3,
    Pid,
}

impl FromStr for ControllerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "se3" => Ok(Self::Se3),
            "pid" => Ok(Self::Pid),
            other => Err(format!("unknown controller {other:?} (expected se3 or pid)")),
        }
    }
}

impl fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Se3 => "se3",
            Self::Pid => "pid",
        })
    }
}

/// Everything a run needs besides the plan.
#[derive(Clone, Debug, PartialEq)]
pub struct MissionSetup {
    pub params: VehicleParams,
    pub sim: SimConfig,
    pub controller: ControllerKind,
    pub se3_gains: GainSet,
    pub se3_options: Se3Options,
    pub pid_gains: PidStackGains,
    pub crawl: CrawlParams,
    pub crawl_gains: CrawlGains,
    pub thresholds: ModeThresholds,
    pub initial: VehicleState,
    pub seed: u64,
    /// Stop after this much simulated time.
    pub max_duration: Option<f64>,
    /// Log every n-th control tick.
    pub log_every: usize,
    pub self_right_duration: f64,
}

impl Default for MissionSetup {
    fn default() -> Self {
        let params = VehicleParams::default();
        let sim = SimConfig::default();
        let crawl = CrawlParams::calibrated(&params, sim.gravity);
        Self {
            params,
            sim,
            controller: ControllerKind::Se3,
            se3_gains: GainSet::default(),
            se3_options: Se3Options::default(),
            pid_gains: PidStackGains::default(),
            crawl,
            crawl_gains: CrawlGains::default(),
            thresholds: ModeThresholds::default(),
            initial: VehicleState::at_rest(Vec3::zeros(), Rotation::identity()),
            seed: 0,
            max_duration: None,
            log_every: 1,
            self_right_duration: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum EventKind {
    ModeChange {
        from: Mode,
        to: Mode,
    },
    PhaseStart {
        index: usize,
        phase: String,
    },
    PhaseComplete {
        index: usize,
    },
    PhaseTimeout {
        index: usize,
        elapsed: f64,
    },
    /// Actuator saturation persisted longer than one second.
    SaturationWarning {
        module_flags: [bool; 3],
    },
    /// Flight controller re-initialized at liftoff; `yaw` is the latched
    /// observed yaw.
    Handoff {
        yaw: f64,
    },
    ControlFault {
        message: String,
    },
    InvalidTransition {
        from: Mode,
        to: Mode,
    },
    SelfRightTimeout {
        elapsed: f64,
    },
    Depleted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MissionEvent {
    pub t: f64,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug)]
pub enum Termination {
    Completed,
    Depleted,
    DurationLimit,
    Failed(MissionError),
}

impl Termination {
    pub fn label(&self) -> &'static str {
        match self {
            Termination::Completed => "completed",
            Termination::Depleted => "depleted",
            Termination::DurationLimit => "duration_limit",
            Termination::Failed(_) => "failed",
        }
    }
}

#[derive(Debug)]
pub struct MissionOutcome {
    pub log: TelemetryLog,
    pub events: Vec<MissionEvent>,
    pub termination: Termination,
    pub final_state: VehicleState,
    pub final_mode: Mode,
    pub final_time: f64,
    pub battery: Battery,
    pub phases_completed: usize,
    pub control_faults: u64,
}

impl MissionOutcome {
    /// Mode sequence with consecutive duplicates removed.
    pub fn mode_sequence(&self) -> Vec<Mode> {
        let mut seq: Vec<Mode> = Vec::new();
        for r in &self.log.records {
            if seq.last() != Some(&r.mode) {
                seq.push(r.mode);
            }
        }
        seq
    }

    pub fn saturation_warnings(&self) -> usize {
        self.events
            .iter()
            .filter(|e| matches!(e.kind, EventKind::SaturationWarning { .. }))
            .count()
    }
}

// One instance per run; boxing would buy nothing.
#[allow(clippy::large_enum_variant)]
enum FlightController {
    Se3(Se3Controller),
    Pid(PidStack),
}

impl FlightController {
    fn reset(&mut self) {
        match self {
            FlightController::Se3(c) => c.reset(),
            FlightController::Pid(c) => c.reset(),
        }
    }
}

enum Active {
    Crawl {
        target: (f64, f64),
        tolerance: f64,
    },
    Figure8 {
        tracker: FigureEightTracker,
        end: f64,
    },
    Fly {
        traj: Trajectory,
        done_at: f64,
        needs_flight: bool,
    },
    Land {
        traj: Trajectory,
    },
    SelfRight,
    Idle {
        end: f64,
    },
}

struct PhaseRun {
    index: usize,
    start: f64,
    timeout: f64,
    active: Active,
}

fn crawl_yaw(r: &Rotation) -> f64 {
    let x = r.x_axis();
    x.y.atan2(x.x)
}

fn line(from: Vec3, to: Vec3, duration: f64) -> Result<Trajectory, MissionError> {
    Ok(TrajectorySpec::Line {
        start: from.into(),
        end: to.into(),
        duration,
    }
    .build()?)
}

fn hold(at: Vec3, duration: f64) -> Result<Trajectory, MissionError> {
    let d = if duration.is_finite() { duration } else { 1.0 };
    Ok(TrajectorySpec::Hover {
        position: at.into(),
        duration: d,
    }
    .build()?)
}

/// Mutable state of a run.
struct Runner<'a> {
    plan: &'a MissionPlan,
    s: &'a MissionSetup,
    body: RigidBody,
    sensors: Sensors,
    disturbance: Disturbance,
    flight: FlightController,
    crawl: CrawlController,
    battery: Battery,
    power: crate::actuation::PowerModel,

    state: VehicleState,
    mode: Mode,
    on_ground: bool,
    obs: Observation,
    cmd: ActuatorCommand,
    wrench: ControlWrench,
    mz_cmd: f64,
    reference: [f64; 3],
    last_reference: Vec3,
    maneuver: Option<(SelfRightManeuver, f64)>,
    saturated_for: f64,
    warned: bool,

    next_phase: usize,
    run: Option<PhaseRun>,
    log: TelemetryLog,
    events: Vec<MissionEvent>,
    control_faults: u64,
}

impl<'a> Runner<'a> {
    fn new(plan: &'a MissionPlan, s: &'a MissionSetup) -> Self {
        let state = s.initial;
        let on_ground = state.position.z <= 0.0;
        let mode = if on_ground { Mode::Grounded } else { Mode::Flight };
        let mut sensors = Sensors::new(s.sim.noise.clone(), s.seed);
        let obs = sensors.observe(&state, 0.0);
        let flight = match s.controller {
            ControllerKind::Se3 => FlightController::Se3(Se3Controller::new(s.se3_gains, s.se3_options)),
            ControllerKind::Pid => FlightController::Pid(PidStack::new(s.pid_gains)),
        };
        Self {
            plan,
            s,
            body: RigidBody::new(&s.params, &s.sim),
            sensors,
            disturbance: Disturbance::new(&s.sim, s.seed),
            flight,
            crawl: CrawlController::new(s.crawl_gains),
            battery: Battery::full(s.params.battery_capacity_mah),
            power: s.params.power,
            state,
            mode,
            on_ground,
            obs,
            cmd: ActuatorCommand::off(),
            wrench: ControlWrench::default(),
            mz_cmd: 0.0,
            reference: [f64::NAN; 3],
            last_reference: state.position,
            maneuver: None,
            saturated_for: 0.0,
            warned: false,
            next_phase: 0,
            run: None,
            log: TelemetryLog::new(),
            events: Vec::new(),
            control_faults: 0,
        }
    }

    fn event(&mut self, t: f64, kind: EventKind) {
        self.events.push(MissionEvent { t, kind });
    }

    fn set_mode(&mut self, t: f64, to: Mode) {
        if to == self.mode {
            return;
        }
        let from = self.mode;
        self.event(t, EventKind::ModeChange { from, to });
        self.mode = to;
        match to {
            Mode::Takeoff => {
                self.flight.reset();
                self.crawl.reset();
                let yaw = self.obs.euler.yaw;
                self.event(t, EventKind::Handoff { yaw });
            }
            Mode::Crawl => self.crawl.reset(),
            Mode::SelfRight => {
                self.maneuver = Some((
                    SelfRightManeuver::plan(&self.state, &self.s.params, self.s.self_right_duration),
                    0.0,
                ));
            }
            Mode::Grounded => {
                self.maneuver = None;
                if from == Mode::Landing {
                    let yaw = crawl_yaw(&self.state.attitude);
                    self.state = VehicleState::at_rest(
                        Vec3::new(self.state.position.x, self.state.position.y, 0.0),
                        Rotation::yaw(yaw),
                    );
                }
            }
            _ => {}
        }
        if !to.is_airborne() {
            self.cmd = ActuatorCommand::off();
            self.wrench = ControlWrench::default();
            self.mz_cmd = 0.0;
        }
    }

    fn inputs(&self) -> ModeInputs {
        ModeInputs::from_state(&self.state, self.on_ground, self.battery.is_empty())
    }

    /// Applies automatic transitions and, if given, a plan command.
    fn transition(&mut self, t: f64, command: Option<Mode>) -> Result<(), MissionError> {
        let next = mode_transition(self.mode, &self.inputs(), command, &self.s.thresholds)?;
        self.set_mode(t, next);
        // A command may be preempted by an automatic rule; apply it after.
        if let Some(to) = command {
            if self.mode != to && self.mode != Mode::SelfRight && self.mode != Mode::Depleted {
                let next = mode_transition(self.mode, &self.inputs(), Some(to), &self.s.thresholds)?;
                self.set_mode(t, next);
            }
        }
        Ok(())
    }

    fn position(&self) -> Vec3 {
        self.state.position
    }

    fn start_phase(&mut self, t: f64) -> Result<bool, MissionError> {
        let Some(phase) = self.plan.phases.get(self.next_phase) else {
            return Ok(false);
        };
        if self.mode == Mode::SelfRight {
            return Ok(true);
        }
        let index = self.next_phase;
        let here = self.position();
        let (active, nominal) = match phase {
            Phase::CrawlTo { target, tolerance, .. } => {
                self.transition(t, Some(Mode::Crawl))?;
                let dist = (target[0] - here.x).hypot(target[1] - here.y);
                (
                    Active::Crawl {
                        target: (target[0], target[1]),
                        tolerance: *tolerance,
                    },
                    dist / (0.5 * self.s.crawl.max_speed) + 10.0,
                )
            }
            Phase::CrawlFigureEight {
                amplitude,
                period,
                laps,
                lookahead,
                ..
            } => {
                self.transition(t, Some(Mode::Crawl))?;
                (
                    Active::Figure8 {
                        tracker: FigureEightTracker::new(
                            (here.x, here.y),
                            *amplitude,
                            *period,
                            period * laps,
                            *lookahead,
                        ),
                        end: period * laps,
                    },
                    period * laps + 10.0,
                )
            }
            Phase::Takeoff { altitude, duration, .. } => {
                self.transition(t, Some(Mode::Takeoff))?;
                let from = Vec3::new(here.x, here.y, here.z.max(0.0));
                let to = Vec3::new(here.x, here.y, *altitude);
                (
                    Active::Fly {
                        traj: line(from, to, *duration)?,
                        done_at: *duration,
                        needs_flight: true,
                    },
                    duration + 5.0,
                )
            }
            Phase::Hover { duration, position, .. } => {
                self.require_flight()?;
                let at = position.map(Vec3::from).unwrap_or(self.last_reference);
                (
                    Active::Fly {
                        traj: hold(at, *duration)?,
                        done_at: *duration,
                        needs_flight: false,
                    },
                    duration + 1.0,
                )
            }
            Phase::Track { trajectory, .. } => {
                self.require_flight()?;
                let traj = trajectory.build()?;
                let d = traj.duration();
                (
                    Active::Fly {
                        traj,
                        done_at: d,
                        needs_flight: false,
                    },
                    d + 1.0,
                )
            }
            Phase::Land { duration, .. } => {
                self.transition(t, Some(Mode::Landing))?;
                let from = self.last_reference;
                let to = Vec3::new(from.x, from.y, -0.03);
                (
                    Active::Land {
                        traj: line(from, to, *duration)?,
                    },
                    duration + 5.0,
                )
            }
            Phase::SelfRight { .. } => (Active::SelfRight, SELF_RIGHT_TIMEOUT + 0.25),
            Phase::Idle { duration, .. } => {
                if self.mode == Mode::Crawl {
                    self.transition(t, Some(Mode::Grounded))?;
                } else if self.mode.is_airborne() {
                    return Err(MissionError::InvalidTransition {
                        from: self.mode,
                        to: Mode::Grounded,
                    });
                }
                (Active::Idle { end: *duration }, duration + 1.0)
            }
        };
        let timeout = phase.explicit_timeout().unwrap_or(nominal);
        self.event(
            t,
            EventKind::PhaseStart {
                index,
                phase: phase.name().to_string(),
            },
        );
        self.run = Some(PhaseRun {
            index,
            start: t,
            timeout,
            active,
        });
        self.next_phase += 1;
        Ok(true)
    }

    fn require_flight(&self) -> Result<(), MissionError> {
        match self.mode {
            Mode::Flight => Ok(()),
            m => Err(MissionError::InvalidTransition {
                from: m,
                to: Mode::Flight,
            }),
        }
    }

    fn phase_done(&self, t: f64) -> bool {
        let Some(run) = &self.run else { return false };
        let el = t - run.start;
        let p = self.obs.position;
        match &run.active {
            Active::Crawl { target, tolerance } => (target.0 - p.x).hypot(target.1 - p.y) < *tolerance,
            Active::Figure8 { end, .. } => el >= *end - 1e-9,
            Active::Fly {
                done_at, needs_flight, ..
            } => el >= *done_at - 1e-9 && (!needs_flight || self.mode == Mode::Flight),
            Active::Land { .. } => self.mode == Mode::Grounded,
            Active::SelfRight => {
                self.mode == Mode::Grounded && self.state.attitude.tilt() < self.s.thresholds.upright_deg.to_radians()
            }
            Active::Idle { end } => el >= *end - 1e-9,
        }
    }

    /// Control-period update: mode logic, phase sequencing, controllers.
    fn control_tick(&mut self, t: f64, dt_ctrl: f64) -> Result<Option<Termination>, MissionError> {
        self.transition(t, None)?;
        if self.mode == Mode::Depleted {
            return Ok(Some(Termination::Depleted));
        }
        loop {
            if self.run.is_none() {
                if !self.start_phase(t)? {
                    return Ok(Some(Termination::Completed));
                }
                if self.run.is_none() {
                    break;
                }
            }
            if self.phase_done(t) {
                let index = self.run.take().map_or(0, |r| r.index);
                self.event(t, EventKind::PhaseComplete { index });
                continue;
            }
            break;
        }
        if let Some(run) = &self.run {
            let elapsed = t - run.start;
            if elapsed > run.timeout {
                let index = run.index;
                self.event(t, EventKind::PhaseTimeout { index, elapsed });
                return Ok(Some(Termination::Failed(MissionError::PhaseTimeout { index, elapsed })));
            }
        }
        self.command(t, dt_ctrl)?;
        Ok(None)
    }

    fn command(&mut self, t: f64, dt_ctrl: f64) -> Result<(), MissionError> {
        self.reference = [f64::NAN; 3];
        let Some(run) = &self.run else {
            if self.mode.is_airborne() {
                let target = FlatTarget::hover(self.last_reference);
                self.fly(&target, dt_ctrl)?;
            }
            return Ok(());
        };
        let el = t - run.start;
        match &run.active {
            Active::Crawl { target, .. } => {
                let target = *target;
                self.crawl_toward(t, target, dt_ctrl)?;
            }
            Active::Figure8 { tracker, .. } => {
                let mut tracker = *tracker;
                let target = tracker.target(el, (self.obs.position.x, self.obs.position.y));
                if let Some(PhaseRun {
                    active: Active::Figure8 { tracker: stored, .. },
                    ..
                }) = &mut self.run
                {
                    *stored = tracker;
                }
                self.crawl_toward(t, target, dt_ctrl)?;
            }
            Active::Fly { traj, .. } | Active::Land { traj } => {
                let target = traj.sample_clamped(el);
                if self.mode.is_airborne() {
                    self.last_reference = target.position;
                    self.fly(&target, dt_ctrl)?;
                }
            }
            Active::SelfRight | Active::Idle { .. } => {}
        }
        if self.mode == Mode::SelfRight {
            if let Some((m, _)) = &self.maneuver {
                self.cmd = m.command(&self.s.params);
            }
        }
        Ok(())
    }

    fn crawl_toward(&mut self, t: f64, target: (f64, f64), dt_ctrl: f64) -> Result<(), MissionError> {
        self.reference = [target.0, target.1, 0.0];
        if self.mode == Mode::Grounded {
            self.transition(t, Some(Mode::Crawl))?;
        }
        if self.mode != Mode::Crawl {
            return Ok(());
        }
        let cs = CrawlState::new(self.obs.position.x, self.obs.position.y, self.obs.euler.yaw);
        let c = self.crawl.step(&cs, target, &self.s.crawl, dt_ctrl);
        self.cmd = c.to_actuators();
        self.wrench = forward_mix(&self.cmd, &self.s.params);
        self.last_reference = Vec3::new(target.0, target.1, 0.0);
        Ok(())
    }

    fn fly(&mut self, target: &FlatTarget, dt_ctrl: f64) -> Result<(), MissionError> {
        let p = target.position;
        self.reference = [p.x, p.y, p.z];
        let target = target.with_yaw(self.obs.euler.yaw, self.obs.yaw_rate());
        let est = self.obs.as_state();
        let g = self.s.sim.gravity;
        let wrench = match &mut self.flight {
            FlightController::Se3(c) => match c.step(&est, &target, &self.s.params, g) {
                Ok(out) => {
                    self.mz_cmd = out.yaw_torque_discarded;
                    Ok(out.wrench)
                }
                Err(e) => Err(e),
            },
            FlightController::Pid(c) => {
                self.mz_cmd = 0.0;
                Ok(c.step(&est, &self.obs.euler, &target, &self.s.params, g, dt_ctrl))
            }
        };
        match wrench {
            Ok(w) => self.wrench = w,
            Err(e) => {
                self.control_faults += 1;
                if self.control_faults == 1 {
                    let t = self.obs.timestamp;
                    self.event(t, EventKind::ControlFault { message: e.to_string() });
                }
            }
        }
        self.cmd = inverse_mix(&self.wrench, &self.s.params).map_err(ControlError::from)?;
        Ok(())
    }

    fn record(&mut self, t: f64) {
        if self.log.last().is_some_and(|r| r.t >= t) {
            return;
        }
        let e = self.state.euler();
        let s = &self.state;
        self.log.push(TelemetryRecord {
            t,
            position: s.position.into(),
            velocity: s.velocity.into(),
            euler: [e.roll, e.pitch, e.yaw],
            omega: s.omega.into(),
            wrench: [self.wrench.thrust, self.wrench.roll_torque, self.wrench.pitch_torque],
            mz_cmd: self.mz_cmd,
            freq: self.cmd.freq,
            throttle: self.cmd.throttles(),
            mode: self.mode,
            battery_mah: self.battery.charge_mah,
            saturated: self.cmd.saturated,
            reference: self.reference,
        });
    }

    fn physics(&mut self, dt: f64) -> Result<(), MissionError> {
        match self.mode {
            Mode::Crawl => {
                let cs = CrawlState::new(
                    self.state.position.x,
                    self.state.position.y,
                    crawl_yaw(&self.state.attitude),
                );
                let prev = self.state.position;
                let next = crate::ground::crawl_kinematics(self.cmd.freq[1], self.cmd.freq[2], &self.s.crawl, &cs, dt);
                let pos = Vec3::new(next.x, next.y, 0.0);
                let w = crate::geom::wrap_angle(next.yaw - cs.yaw) / dt;
                self.state = VehicleState {
                    position: pos,
                    velocity: (pos - prev) / dt,
                    attitude: Rotation::yaw(next.yaw),
                    omega: Vec3::new(0.0, 0.0, w),
                };
                self.on_ground = true;
            }
            Mode::SelfRight => {
                if let Some((m, el)) = &mut self.maneuver {
                    *el += dt;
                    self.state = self_right_step(&self.state, m, *el, self.s.thresholds.upright_deg)?;
                }
                self.on_ground = true;
            }
            Mode::Grounded => {
                self.state.velocity = Vec3::zeros();
                self.state.omega = Vec3::zeros();
                self.on_ground = true;
            }
            Mode::Takeoff | Mode::Flight | Mode::Landing | Mode::Depleted => {
                let mut u = forward_mix(&self.cmd, &self.s.params);
                let d = self.disturbance.current();
                u.roll_torque += d.x;
                u.pitch_torque += d.y;
                u.yaw_torque += d.z;
                let next = self.body.step(&self.state, &u, dt)?;
                let (next, grounded) = ground_contact(&next, self.s.sim.ground_friction);
                self.state = next;
                self.on_ground = grounded;
            }
        }
        Ok(())
    }

    fn execute(mut self) -> Result<MissionOutcome, MissionError> {
        let dt = self.s.sim.dt_physics;
        let ctrl_div = self.s.sim.control_divider();
        let sensor_div = self.s.sim.sensor_divider();
        let dt_ctrl = dt * ctrl_div as f64;
        let log_every = self.s.log_every.max(1);
        let max_steps = self
            .s
            .max_duration
            .map(|d| (d / dt).round().max(0.0) as u64)
            .unwrap_or(u64::MAX);
        let mut k: u64 = 0;
        let mut tick: u64 = 0;
        let termination = loop {
            let t = k as f64 * dt;
            if k.is_multiple_of(sensor_div as u64) && k > 0 {
                self.obs = self.sensors.observe(&self.state, t);
            }
            if k.is_multiple_of(ctrl_div as u64) {
                let airborne = self.mode.is_airborne();
                if airborne {
                    self.disturbance.advance(dt_ctrl);
                }
                match self.control_tick(t, dt_ctrl) {
                    Ok(Some(term)) => {
                        self.record(t);
                        break term;
                    }
                    Ok(None) => {}
                    Err(e) => {
                        if let MissionError::InvalidTransition { from, to } = &e {
                            let (from, to) = (*from, *to);
                            self.event(t, EventKind::InvalidTransition { from, to });
                        }
                        self.record(t);
                        break Termination::Failed(e);
                    }
                }
                if self.cmd.any_saturated() && self.mode.is_airborne() {
                    self.saturated_for += dt_ctrl;
                    if self.saturated_for > 1.0 && !self.warned {
                        self.warned = true;
                        let module_flags = self.cmd.saturated;
                        self.event(t, EventKind::SaturationWarning { module_flags });
                    }
                } else {
                    self.saturated_for = 0.0;
                    self.warned = false;
                }
                if tick.is_multiple_of(log_every as u64) {
                    self.record(t);
                }
                tick += 1;
            }
            if k >= max_steps {
                self.record(t);
                break Termination::DurationLimit;
            }
            match self.battery.drain(&self.cmd, dt, &self.power) {
                Ok(()) => {}
                Err(ActuationError::BatteryEmpty) => {
                    let t_end = (k + 1) as f64 * dt;
                    self.set_mode(t_end, Mode::Depleted);
                    self.event(t_end, EventKind::Depleted);
                    self.record(t_end);
                    k += 1;
                    break Termination::Depleted;
                }
                Err(e) => return Err(MissionError::Control(ControlError::from(e))),
            }
            if let Err(e) = self.physics(dt) {
                return match e {
                    MissionError::Dynamics(crate::error::DynamicsError::NonFiniteState(_)) => Err(
                        MissionError::Dynamics(crate::error::DynamicsError::NonFiniteState((k + 1) as f64 * dt)),
                    ),
                    MissionError::SelfRightTimeout(el) => {
                        let t = (k + 1) as f64 * dt;
                        self.event(t, EventKind::SelfRightTimeout { elapsed: el });
                        self.record(t);
                        Ok(self.finish(Termination::Failed(e), t))
                    }
                    other => Err(other),
                };
            }
            k += 1;
        };
        let t_end = self.log.last().map_or(k as f64 * dt, |r| r.t);
        Ok(self.finish(termination, t_end))
    }

    fn finish(self, termination: Termination, t: f64) -> MissionOutcome {
        let phases_completed = self
            .events
            .iter()
            .filter(|e| matches!(e.kind, EventKind::PhaseComplete { .. }))
            .count();
        MissionOutcome {
            log: self.log,
            events: self.events,
            termination,
            final_state: self.state,
            final_mode: self.mode,
            final_time: t,
            battery: self.battery,
            phases_completed,
            control_faults: self.control_faults,
        }
    }
}

/// Executes a plan. Phase timeouts, invalid transitions and depletion end
/// the run but still return the log; only numerical divergence is an error.
pub fn run_mission(plan: &MissionPlan, setup: &MissionSetup) -> Result<MissionOutcome, MissionError> {
    Runner::new(plan, setup).execute()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{rot_x, rot_y, Rotation};
    use std::f64::consts::PI;

    fn inputs(tilt_deg: f64) -> ModeInputs {
        ModeInputs {
            altitude: 0.0,
            vertical_speed: 0.0,
            on_ground: true,
            tilt: tilt_deg.to_radians(),
            battery_empty: false,
        }
    }

    #[test]
    fn mode_names_round_trip() {
        for m in Mode::ALL {
            assert_eq!(m.to_string().parse::<Mode>().unwrap(), m);
        }
        assert!("Hovering".parse::<Mode>().is_err());
    }

    #[test]
    fn flight_land_sequence() {
        let th = ModeThresholds::default();
        let air = ModeInputs {
            altitude: 0.5,
            vertical_speed: -0.3,
            on_ground: false,
            tilt: 0.0,
            battery_empty: false,
        };
        let m = mode_transition(Mode::Flight, &air, Some(Mode::Landing), &th).unwrap();
        assert_eq!(m, Mode::Landing);
        assert_eq!(mode_transition(m, &air, None, &th).unwrap(), Mode::Landing);
        let touchdown = ModeInputs {
            altitude: 0.0,
            vertical_speed: 0.0,
            on_ground: true,
            ..air
        };
        assert_eq!(mode_transition(m, &touchdown, None, &th).unwrap(), Mode::Grounded);
    }

    #[test]
    fn tipped_goes_to_self_right() {
        let th = ModeThresholds::default();
        assert_eq!(
            mode_transition(Mode::Grounded, &inputs(120.0), None, &th).unwrap(),
            Mode::SelfRight
        );
        assert_eq!(
            mode_transition(Mode::Crawl, &inputs(61.0), None, &th).unwrap(),
            Mode::SelfRight
        );
        assert_eq!(
            mode_transition(Mode::Crawl, &inputs(59.0), None, &th).unwrap(),
            Mode::Crawl
        );
        assert_eq!(
            mode_transition(Mode::SelfRight, &inputs(4.0), None, &th).unwrap(),
            Mode::Grounded
        );
        assert_eq!(
            mode_transition(Mode::SelfRight, &inputs(6.0), None, &th).unwrap(),
            Mode::SelfRight
        );
    }

    #[test]
    fn depletion_from_any_mode_is_absorbing() {
        let th = ModeThresholds::default();
        let empty = ModeInputs {
            battery_empty: true,
            ..inputs(0.0)
        };
        for m in Mode::ALL {
            assert_eq!(mode_transition(m, &empty, None, &th).unwrap(), Mode::Depleted);
        }
        assert_eq!(
            mode_transition(Mode::Depleted, &inputs(0.0), Some(Mode::Crawl), &th).unwrap(),
            Mode::Depleted
        );
    }

    #[test]
    fn illegal_command_is_rejected() {
        let th = ModeThresholds::default();
        let err = mode_transition(Mode::Crawl, &inputs(0.0), Some(Mode::Landing), &th).unwrap_err();
        assert!(matches!(
            err,
            MissionError::InvalidTransition {
                from: Mode::Crawl,
                to: Mode::Landing
            }
        ));
        assert!(mode_transition(Mode::Flight, &inputs(0.0), Some(Mode::Crawl), &th).is_err());
    }

    #[test]
    fn self_right_from_inverted() {
        let p = VehicleParams::default();
        let s = VehicleState::at_rest(Vec3::zeros(), Rotation::from_matrix_unchecked(rot_x(PI)));
        let m = SelfRightManeuver::plan(&s, &p, 0.5);
        assert!((m.angle - PI).abs() < 1e-12);
        let mid = self_right_step(&s, &m, 0.25, 5.0).unwrap();
        assert!((mid.attitude.tilt() - PI / 2.0).abs() < 1e-9);
        let end = self_right_step(&s, &m, 0.5, 5.0).unwrap();
        assert!(end.attitude.tilt() < 1e-9);
        assert!(end.omega.norm() < 1e-12);
    }

    #[test]
    fn self_right_upright_is_noop() {
        let p = VehicleParams::default();
        let s = VehicleState::at_rest(Vec3::new(1.0, 2.0, 0.0), Rotation::yaw(0.7));
        let m = SelfRightManeuver::plan(&s, &p, 0.5);
        assert_eq!(m.angle, 0.0);
        let now = self_right_step(&s, &m, 0.0, 5.0).unwrap();
        assert_eq!(now.attitude, s.attitude);
        assert_eq!(m.command(&p).freq, [0.0; 3]);
    }

    #[test]
    fn self_right_timeout_when_too_slow() {
        let p = VehicleParams::default();
        let s = VehicleState::at_rest(Vec3::zeros(), Rotation::from_matrix_unchecked(rot_x(PI)));
        let m = SelfRightManeuver::plan(&s, &p, 2.0);
        assert!(matches!(
            self_right_step(&s, &m, 0.8, 5.0),
            Err(MissionError::SelfRightTimeout(_))
        ));
    }

    #[test]
    fn pitched_nose_down_excludes_back_module() {
        // Back module sits on +x; a -120 deg pitch lifts it highest.
        let p = VehicleParams::default();
        let r = Rotation::from_matrix_unchecked(rot_y((-120f64).to_radians()));
        assert_eq!(lowest_modules(&r, &p), [1, 2]);
        let r = Rotation::from_matrix_unchecked(rot_y(120f64.to_radians()));
        assert!(lowest_modules(&r, &p).contains(&0));
    }

    #[test]
    fn positive_roll_excludes_right_module() {
        let p = VehicleParams::default();
        // Positive roll raises the right module (y > 0).
        let r = Rotation::from_matrix_unchecked(rot_x(120f64.to_radians()));
        assert_eq!(lowest_modules(&r, &p), [0, 1]);
    }

    #[test]
    fn plan_validation() {
        assert!(MissionPlan::new(vec![]).validate().is_err());
        let bad = MissionPlan::new(vec![Phase::Takeoff {
            altitude: -1.0,
            duration: 2.0,
            timeout: None,
        }]);
        assert!(bad.validate().unwrap_err().contains("altitude"));
    }

    #[test]
    fn plan_parses_from_toml() {
        let text = r#"
            [[phases]]
            kind = "crawl_to"
            target = [0.5, 0.0]

            [[phases]]
            kind = "takeoff"
            altitude = 1.0

            [[phases]]
            kind = "track"
            trajectory = { kind = "circle", center = [0.0, 0.0, 1.0], radius = 0.5, angular_rate = 1.0, duration = 6.0 }
        "#;
        let plan: MissionPlan = toml::from_str(text).unwrap();
        assert_eq!(plan.phases.len(), 3);
        plan.validate().unwrap();
        let unknown = "[[phases]]\nkind = \"idle\"\nduration = 1.0\nspeed = 2.0\n";
        assert!(toml::from_str::<MissionPlan>(unknown).is_err());
    }

    #[test]
    fn hover_only_plan_from_ground_is_invalid() {
        let plan = MissionPlan::new(vec![Phase::Hover {
            duration: 1.0,
            position: None,
            timeout: None,
        }]);
        let out = run_mission(&plan, &MissionSetup::default()).unwrap();
        assert!(matches!(
            out.termination,
            Termination::Failed(MissionError::InvalidTransition {
                from: Mode::Grounded,
                to: Mode::Flight
            })
        ));
        assert_eq!(out.log.len(), 1);
    }

    #[test]
    fn short_crawl_reaches_target() {
        let plan = MissionPlan::new(vec![Phase::CrawlTo {
            target: [0.1, 0.0],
            tolerance: 0.01,
            timeout: None,
        }]);
        let out = run_mission(&plan, &MissionSetup::default()).unwrap();
        assert!(
            matches!(out.termination, Termination::Completed),
            "{:?}",
            out.termination
        );
        assert!((out.final_state.position.x - 0.1).abs() < 0.011);
        assert_eq!(out.mode_sequence(), vec![Mode::Crawl]);
    }

    #[test]
    fn inverted_start_self_rights() {
        let setup = MissionSetup {
            initial: VehicleState::at_rest(Vec3::zeros(), Rotation::from_matrix_unchecked(rot_y(2.5))),
            ..MissionSetup::default()
        };
        let plan = MissionPlan::new(vec![Phase::SelfRight { timeout: None }]);
        let out = run_mission(&plan, &setup).unwrap();
        assert!(
            matches!(out.termination, Termination::Completed),
            "{:?}",
            out.termination
        );
        assert!(out.final_state.attitude.tilt() < 5f64.to_radians());
        assert!(out.final_time <= 0.52);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn mode() -> impl Strategy<Value = Mode> {
            (0..7usize).prop_map(|i| Mode::ALL[i])
        }

        proptest! {
            #[test]
            fn transitions_stay_on_graph(
                start in mode(),
                steps in proptest::collection::vec(
                    (proptest::option::of(mode()), -1.0..2.0f64, -1.0..1.0f64, any::<bool>(), 0.0..3.2f64, proptest::bool::weighted(0.05)),
                    1..40,
                ),
            ) {
                let th = ModeThresholds::default();
                let mut m = start;
                for (cmd, alt, vz, on_ground, tilt, empty) in steps {
                    let inp = ModeInputs { altitude: alt, vertical_speed: vz, on_ground, tilt, battery_empty: empty };
                    if let Ok(next) = mode_transition(m, &inp, cmd, &th) {
                        prop_assert!(transition_allowed(m, next), "{m} -> {next}");
                        m = next;
                    }
                }
            }

            #[test]
            fn self_right_within_half_second(
                roll in prop_oneof![90.0..180.0f64, -180.0..-90.0f64],
                pitch in -180.0..180.0f64,
                yaw in -180.0..180.0f64,
            ) {
                let p = VehicleParams::default();
                let r = Rotation::yaw(yaw.to_radians())
                    * Rotation::from_matrix_unchecked(rot_x(roll.to_radians()) * rot_y(pitch.to_radians()));
                let s = VehicleState::at_rest(Vec3::zeros(), r);
                let m = SelfRightManeuver::plan(&s, &p, 0.5);
                let end = self_right_step(&s, &m, 0.5, 5.0).unwrap();
                prop_assert!(end.attitude.tilt() < 1e-6);
                prop_assert!(end.attitude.orthonormality_error() < 1e-9);
            }
        }
    }
}
