//! Rigid-body flight dynamics, sensor models and the ground plane.
//!
//! Translational motion follows `m p'' = -m g Z_W + u1 Z_B`, rotational
//! motion `I w' = tau - w x (I w)` with `tau = (u2, u3, M_Z)`. Both are
//! integrated with a fixed-step classical Runge-Kutta scheme; the rotation
//! matrix is integrated directly (`R' = R hat(w)`) and re-orthonormalized
//! after every step.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::actuation::{ControlWrench, VehicleParams};
use crate::error::DynamicsError;
use crate::geom::{hat, EulerZxy, Mat3, Rotation, Vec3, VehicleState};

/// Sensor noise and drift, all standard deviations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    /// Roll/pitch/yaw measurement noise (rad).
    pub attitude_std: f64,
    /// Gyro white noise (rad/s).
    pub gyro_std: f64,
    /// Constant gyro bias (rad/s).
    pub gyro_bias: [f64; 3],
    /// External position fix noise (m).
    pub position_std: f64,
    /// External velocity noise (m/s).
    pub velocity_std: f64,
    /// Barometer noise (m).
    pub altitude_std: f64,
    /// Optical-flow velocity noise (m/s).
    pub flow_std: f64,
    /// Optical flow is only reported below this altitude (m).
    pub flow_max_altitude: f64,
    /// Constant yaw measurement drift (rad/s).
    pub yaw_drift_rate: f64,
    /// Yaw measurement random walk (rad/sqrt(s)).
    pub yaw_drift_walk: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            attitude_std: 0.0,
            gyro_std: 0.0,
            gyro_bias: [0.0; 3],
            position_std: 0.0,
            velocity_std: 0.0,
            altitude_std: 0.0,
            flow_std: 0.0,
            flow_max_altitude: 2.0,
            yaw_drift_rate: 0.0,
            yaw_drift_walk: 0.0,
        }
    }
}

impl NoiseConfig {
    /// Noise levels typical of a small IMU plus an external position fix.
    pub fn realistic() -> Self {
        Self {
            attitude_std: 0.5f64.to_radians(),
            gyro_std: 0.02,
            gyro_bias: [0.002, -0.002, 0.001],
            position_std: 0.002,
            velocity_std: 0.01,
            altitude_std: 0.05,
            flow_std: 0.02,
            flow_max_altitude: 2.0,
            yaw_drift_rate: 0.0,
            yaw_drift_walk: 0.2f64.to_radians(),
        }
    }
}

/// Yaw disturbance torque: constant plus random walk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct YawImbalance {
    /// N m
    pub constant: f64,
    /// N m / sqrt(s)
    pub random_walk: f64,
}

impl Default for YawImbalance {
    fn default() -> Self {
        Self {
            constant: 2e-9,
            random_walk: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    /// Physics step (s).
    pub dt_physics: f64,
    /// Controller rate (Hz).
    pub control_rate: f64,
    /// Sensor sampling rate (Hz).
    pub sensor_rate: f64,
    /// m/s^2
    pub gravity: f64,
    pub yaw_imbalance: YawImbalance,
    /// White torque disturbance on roll/pitch, resampled every control
    /// period (N m).
    pub torque_disturbance_std: f64,
    pub noise: NoiseConfig,
    /// Linear translational drag (1/s). Off by default.
    pub linear_drag: f64,
    /// Linear rotational damping (N m s/rad). Off by default.
    pub angular_damping: f64,
    /// Fraction of planar velocity kept on touchdown.
    pub ground_friction: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt_physics: 1e-3,
            control_rate: 100.0,
            sensor_rate: 200.0,
            gravity: 9.81,
            yaw_imbalance: YawImbalance::default(),
            torque_disturbance_std: 0.0,
            noise: NoiseConfig::default(),
            linear_drag: 0.0,
            angular_damping: 0.0,
            ground_friction: 0.5,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.dt_physics > 0.0) {
            return Err("sim.dt_physics must be > 0".into());
        }
        if !(self.control_rate > 0.0 && self.control_rate <= self.sensor_rate) {
            return Err("sim rates must satisfy 0 < control_rate <= sensor_rate".into());
        }
        if self.sensor_rate * self.dt_physics > 1.0 + 1e-9 {
            return Err("sim rates must satisfy sensor_rate <= 1/dt_physics".into());
        }
        for (name, rate) in [("control_rate", self.control_rate), ("sensor_rate", self.sensor_rate)] {
            let ratio = 1.0 / (rate * self.dt_physics);
            if (ratio - ratio.round()).abs() > 1e-6 {
                return Err(format!("sim.{name} must divide the physics rate evenly"));
            }
        }
        if !(self.gravity > 0.0) {
            return Err("sim.gravity must be > 0".into());
        }
        if !(0.0..=1.0).contains(&self.ground_friction) {
            return Err("sim.ground_friction must be in [0, 1]".into());
        }
        if self.linear_drag < 0.0 || self.angular_damping < 0.0 || self.torque_disturbance_std < 0.0 {
            return Err("sim damping and disturbance terms must be >= 0".into());
        }
        Ok(())
    }

    /// Physics steps per controller period.
    pub fn control_divider(&self) -> usize {
        (1.0 / (self.control_rate * self.dt_physics)).round() as usize
    }

    pub fn sensor_divider(&self) -> usize {
        (1.0 / (self.sensor_rate * self.dt_physics)).round() as usize
    }
}

#[derive(Clone, Copy)]
struct Deriv {
    dp: Vec3,
    dv: Vec3,
    dr: Mat3,
    dw: Vec3,
}

struct Model {
    mass: f64,
    inertia: Mat3,
    inertia_inv: Mat3,
    gravity: f64,
    drag: f64,
    damping: f64,
}

impl Model {
    fn new(params: &VehicleParams, cfg: &SimConfig) -> Self {
        let inertia = params.inertia_matrix();
        Self {
            mass: params.mass,
            inertia,
            inertia_inv: inertia.try_inverse().unwrap_or_else(Mat3::identity),
            gravity: cfg.gravity,
            drag: cfg.linear_drag,
            damping: cfg.angular_damping,
        }
    }

    fn deriv(&self, v: &Vec3, r: &Mat3, w: &Vec3, u: &ControlWrench) -> Deriv {
        let z_b = r.column(2).into_owned();
        let dv = Vec3::new(0.0, 0.0, -self.gravity) + z_b * (u.thrust / self.mass) - v * self.drag;
        let iw = self.inertia * w;
        let dw = self.inertia_inv * (u.torque() - w.cross(&iw) - w * self.damping);
        Deriv {
            dp: *v,
            dv,
            dr: r * hat(w),
            dw,
        }
    }
}

/// Advances the rigid body by `dt` under a constant wrench.
pub fn step_dynamics(
    state: &VehicleState,
    u: &ControlWrench,
    params: &VehicleParams,
    cfg: &SimConfig,
    dt: f64,
) -> Result<VehicleState, DynamicsError> {
    let model = Model::new(params, cfg);
    step_with_model(&model, state, u, dt)
}

fn step_with_model(model: &Model, s: &VehicleState, u: &ControlWrench, dt: f64) -> Result<VehicleState, DynamicsError> {
    let r0 = *s.attitude.matrix();
    let k1 = model.deriv(&s.velocity, &r0, &s.omega, u);
    let half = 0.5 * dt;
    let k2 = model.deriv(
        &(s.velocity + k1.dv * half),
        &(r0 + k1.dr * half),
        &(s.omega + k1.dw * half),
        u,
    );
    let k3 = model.deriv(
        &(s.velocity + k2.dv * half),
        &(r0 + k2.dr * half),
        &(s.omega + k2.dw * half),
        u,
    );
    let k4 = model.deriv(
        &(s.velocity + k3.dv * dt),
        &(r0 + k3.dr * dt),
        &(s.omega + k3.dw * dt),
        u,
    );
    let sixth = dt / 6.0;
    let next = VehicleState {
        position: s.position + (k1.dp + (k2.dp + k3.dp) * 2.0 + k4.dp) * sixth,
        velocity: s.velocity + (k1.dv + (k2.dv + k3.dv) * 2.0 + k4.dv) * sixth,
        attitude: Rotation::orthonormalized(&(r0 + (k1.dr + (k2.dr + k3.dr) * 2.0 + k4.dr) * sixth)),
        omega: s.omega + (k1.dw + (k2.dw + k3.dw) * 2.0 + k4.dw) * sixth,
    };
    if next.is_finite() {
        Ok(next)
    } else {
        Err(DynamicsError::NonFiniteState(f64::NAN))
    }
}

/// Reusable integrator that caches the inertia inverse.
pub struct RigidBody {
    model: Model,
}

impl RigidBody {
    pub fn new(params: &VehicleParams, cfg: &SimConfig) -> Self {
        Self {
            model: Model::new(params, cfg),
        }
    }

    pub fn step(&self, state: &VehicleState, u: &ControlWrench, dt: f64) -> Result<VehicleState, DynamicsError> {
        step_with_model(&self.model, state, u, dt)
    }
}

/// Kinematic ground plane at `z = 0`.
///
/// Returns the corrected state and whether the vehicle is resting on the
/// ground.
pub fn ground_contact(state: &VehicleState, friction: f64) -> (VehicleState, bool) {
    let mut s = *state;
    if s.position.z <= 0.0 && s.velocity.z <= 0.0 {
        s.position.z = 0.0;
        s.velocity.z = 0.0;
        s.velocity.x *= friction;
        s.velocity.y *= friction;
        (s, true)
    } else {
        (s, false)
    }
}

/// One sensor sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Observation {
    pub timestamp: f64,
    pub euler: EulerZxy,
    /// Body rates (rad/s).
    pub omega: Vec3,
    /// External position fix (m, world).
    pub position: Vec3,
    /// External velocity (m/s, world).
    pub velocity: Vec3,
    /// Planar velocity from optical flow, when low enough.
    pub flow_velocity: Option<[f64; 2]>,
    pub altitude: f64,
}

impl Observation {
    /// State estimate assembled from the measurements.
    pub fn as_state(&self) -> VehicleState {
        VehicleState {
            position: self.position,
            velocity: self.velocity,
            attitude: self.euler.to_rotation(),
            omega: self.omega,
        }
    }

    pub fn yaw_rate(&self) -> f64 {
        crate::geom::yaw_rate_from_body_rates(&self.euler, &self.omega)
    }
}

/// Ground truth plus seeded noise. Owns the RNG and the yaw drift state.
pub struct Sensors {
    noise: NoiseConfig,
    rng: ChaCha8Rng,
    yaw_drift: f64,
    last_t: Option<f64>,
}

impl Sensors {
    pub fn new(noise: NoiseConfig, seed: u64) -> Self {
        Self {
            noise,
            rng: ChaCha8Rng::seed_from_u64(seed),
            yaw_drift: 0.0,
            last_t: None,
        }
    }

    fn gauss(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    fn gauss3(&mut self, std: f64) -> Vec3 {
        Vec3::new(self.gauss(), self.gauss(), self.gauss()) * std
    }

    /// Accumulated yaw measurement drift (rad).
    pub fn yaw_drift(&self) -> f64 {
        self.yaw_drift
    }

    pub fn observe(&mut self, state: &VehicleState, t: f64) -> Observation {
        let dt = self.last_t.map_or(0.0, |last| (t - last).max(0.0));
        self.last_t = Some(t);
        let walk = self.gauss();
        self.yaw_drift += self.noise.yaw_drift_rate * dt + self.noise.yaw_drift_walk * dt.sqrt() * walk;

        let truth = state.euler();
        let a = self.gauss3(self.noise.attitude_std);
        let euler = EulerZxy {
            roll: truth.roll + a.x,
            pitch: truth.pitch + a.y,
            yaw: crate::geom::wrap_angle(truth.yaw + a.z + self.yaw_drift),
        };
        let bias = Vec3::from(self.noise.gyro_bias);
        let omega = state.omega + bias + self.gauss3(self.noise.gyro_std);
        let position = state.position + self.gauss3(self.noise.position_std);
        let velocity = state.velocity + self.gauss3(self.noise.velocity_std);
        let altitude = state.position.z + self.noise.altitude_std * self.gauss();
        let f = self.gauss3(self.noise.flow_std);
        let flow_velocity = (state.position.z <= self.noise.flow_max_altitude)
            .then(|| [state.velocity.x + f.x, state.velocity.y + f.y]);
        Observation {
            timestamp: t,
            euler,
            omega,
            position,
            velocity,
            flow_velocity,
            altitude,
        }
    }
}

/// Yaw torque disturbance process.
pub struct Disturbance {
    cfg: YawImbalance,
    torque_std: f64,
    rng: ChaCha8Rng,
    walk: f64,
    held: Vec3,
}

impl Disturbance {
    pub fn new(cfg: &SimConfig, seed: u64) -> Self {
        Self {
            cfg: cfg.yaw_imbalance.clone(),
            torque_std: cfg.torque_disturbance_std,
            rng: ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15),
            walk: 0.0,
            held: Vec3::zeros(),
        }
    }

    /// Advances the processes by `dt` and returns the disturbance torque.
    pub fn advance(&mut self, dt: f64) -> Vec3 {
        let n: f64 = self.rng.sample(StandardNormal);
        self.walk += self.cfg.random_walk * dt.sqrt() * n;
        let roll: f64 = self.rng.sample(StandardNormal);
        let pitch: f64 = self.rng.sample(StandardNormal);
        self.held = Vec3::new(
            roll * self.torque_std,
            pitch * self.torque_std,
            self.cfg.constant + self.walk,
        );
        self.held
    }

    pub fn current(&self) -> Vec3 {
        self.held
    }
}
