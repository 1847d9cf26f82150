//! Geometric tracking controller on SE(3) without active yaw.
//!
//! Position is the flat output. Yaw is not commanded: the controller samples
//! the observed yaw and builds the desired attitude around it, so the thrust
//! direction never depends on heading. The yaw component of the attitude
//! feedback is computed and then discarded before allocation.

use serde::{Deserialize, Serialize};

use crate::actuation::{ControlWrench, VehicleParams};
use crate::error::ControlError;
use crate::geom::{vee_unchecked, yaw_frame_x, Mat3, Rotation, Vec3, VehicleState};

/// Reference for one control step.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FlatTarget {
    pub position: Vec3,
    pub velocity: Vec3,
    pub acceleration: Vec3,
    pub jerk: Vec3,
    /// Observed yaw sample (rad).
    pub yaw_sample: f64,
    /// Observed yaw rate (rad/s).
    pub yaw_rate_sample: f64,
}

impl FlatTarget {
    pub fn hover(position: Vec3) -> Self {
        Self {
            position,
            ..Self::default()
        }
    }

    pub fn with_yaw(mut self, yaw: f64, yaw_rate: f64) -> Self {
        self.yaw_sample = yaw;
        self.yaw_rate_sample = yaw_rate;
        self
    }
}

/// Diagonal gains.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GainSet {
    pub kp: [f64; 3],
    pub kv: [f64; 3],
    pub kr: [f64; 3],
    pub kw: [f64; 3],
}

impl Default for GainSet {
    fn default() -> Self {
        Self {
            kp: [2.0; 3],
            kv: [1.2; 3],
            kr: [0.02; 3],
            kw: [0.004; 3],
        }
    }
}

impl GainSet {
    pub fn validate(&self) -> Result<(), String> {
        for (name, g) in [("kp", self.kp), ("kv", self.kv), ("kr", self.kr), ("kw", self.kw)] {
            if g.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
                return Err(format!("se3.gains.{name} entries must be > 0"));
            }
        }
        Ok(())
    }
}

fn diag(g: &[f64; 3]) -> Mat3 {
    Mat3::from_diagonal(&Vec3::from(*g))
}

/// How the desired yaw rate is formed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum YawRateSource {
    /// `r_des = psi_dot_s (Z_W . Z_B)`
    #[default]
    Observed,
    Zero,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Se3Options {
    /// Use flatness feedforward for the desired body rates.
    pub feedforward_rates: bool,
    pub yaw_rate: YawRateSource,
    /// Thrust floor for the flatness feedforward (N).
    pub min_thrust: f64,
}

impl Default for Se3Options {
    fn default() -> Self {
        Self {
            feedforward_rates: true,
            yaw_rate: YawRateSource::Observed,
            min_thrust: 1e-6,
        }
    }
}

/// Output of [`desired_force`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ForceCommand {
    pub force: Vec3,
    pub thrust: f64,
    pub z_axis: Vec3,
}

pub fn desired_force(
    state: &VehicleState,
    target: &FlatTarget,
    gains: &GainSet,
    params: &VehicleParams,
    gravity: f64,
) -> Result<ForceCommand, ControlError> {
    let e_p = state.position - target.position;
    let e_v = state.velocity - target.velocity;
    let force = -(diag(&gains.kp) * e_p) - diag(&gains.kv) * e_v
        + Vec3::z() * (params.mass * gravity)
        + target.acceleration * params.mass;
    let norm = force.norm();
    if !(norm >= 1e-9) {
        return Err(ControlError::DegenerateForce(norm));
    }
    Ok(ForceCommand {
        force,
        thrust: force.dot(&state.attitude.z_axis()),
        z_axis: force / norm,
    })
}

/// Guard on `|Z_B,des x X_C|`.
pub const ATTITUDE_SINGULAR_TOL: f64 = 1e-6;

pub fn desired_attitude(z_des: &Vec3, yaw_sample: f64) -> Result<Rotation, ControlError> {
    let x_c = yaw_frame_x(yaw_sample);
    let y_raw = z_des.cross(&x_c);
    let n = y_raw.norm();
    if !(n > ATTITUDE_SINGULAR_TOL) {
        return Err(ControlError::AttitudeSingular);
    }
    let y = y_raw / n;
    let x = y.cross(z_des);
    Ok(Rotation::from_columns(&x, &y, z_des))
}

/// Desired body rates from differential flatness.
///
/// `h_w = m/u1 (j - (Z_B . j) Z_B)`, `p = -h_w . Y_B`, `q = h_w . X_B`,
/// `r = psi_dot_s (Z_W . Z_B)`.
pub fn flatness_rates(
    jerk: &Vec3,
    yaw_rate: f64,
    thrust: f64,
    axes: &Rotation,
    mass: f64,
    min_thrust: f64,
) -> Result<Vec3, ControlError> {
    if !(thrust > min_thrust) {
        return Err(ControlError::ThrustTooLow(thrust));
    }
    let (x_b, y_b, z_b) = (axes.x_axis(), axes.y_axis(), axes.z_axis());
    let h_w = (jerk - z_b * z_b.dot(jerk)) * (mass / thrust);
    Ok(Vec3::new(-h_w.dot(&y_b), h_w.dot(&x_b), yaw_rate * z_b.z))
}

/// Desired attitude and body rates along a perfectly tracked reference.
pub fn reference_attitude(target: &FlatTarget, mass: f64, gravity: f64) -> Result<(Rotation, Vec3), ControlError> {
    let force = (target.acceleration + Vec3::z() * gravity) * mass;
    let thrust = force.norm();
    if !(thrust >= 1e-9) {
        return Err(ControlError::DegenerateForce(thrust));
    }
    let r_des = desired_attitude(&(force / thrust), target.yaw_sample)?;
    let rates = flatness_rates(&target.jerk, target.yaw_rate_sample, thrust, &r_des, mass, 0.0)?;
    Ok((r_des, rates))
}

/// `e_R = 1/2 vee(R_des^T R - R^T R_des)`, `e_w = w - w_des`.
pub fn attitude_errors(r: &Rotation, r_des: &Rotation, omega: &Vec3, omega_des: &Vec3) -> (Vec3, Vec3) {
    let m = r_des.matrix().transpose() * r.matrix() - r.matrix().transpose() * r_des.matrix();
    // The difference is antisymmetric up to round-off; vee of its
    // antisymmetric part.
    (vee_unchecked(&m) * 0.5, omega - omega_des)
}

/// Torques before the yaw channel is dropped.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TorqueCommand {
    pub roll: f64,
    pub pitch: f64,
    /// Computed but never allocated.
    pub yaw_discarded: f64,
}

pub fn control_torques(e_r: &Vec3, e_w: &Vec3, gains: &GainSet) -> TorqueCommand {
    let t = -(diag(&gains.kr) * e_r) - diag(&gains.kw) * e_w;
    TorqueCommand {
        roll: t.x,
        pitch: t.y,
        yaw_discarded: t.z,
    }
}

/// Everything one controller step produced, for telemetry.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Se3Output {
    pub wrench: ControlWrench,
    pub desired_attitude: Rotation,
    pub desired_rates: Vec3,
    pub attitude_error: Vec3,
    pub rate_error: Vec3,
    pub yaw_torque_discarded: f64,
}

/// One full controller evaluation. Pure in its inputs.
pub fn se3_step(
    state: &VehicleState,
    target: &FlatTarget,
    gains: &GainSet,
    params: &VehicleParams,
    gravity: f64,
    opts: &Se3Options,
) -> Result<Se3Output, ControlError> {
    let f = desired_force(state, target, gains, params, gravity)?;
    let r_des = desired_attitude(&f.z_axis, target.yaw_sample)?;
    let yaw_rate = match opts.yaw_rate {
        YawRateSource::Observed => target.yaw_rate_sample,
        YawRateSource::Zero => 0.0,
    };
    let omega_des = if opts.feedforward_rates {
        flatness_rates(&target.jerk, yaw_rate, f.thrust, &r_des, params.mass, opts.min_thrust)?
    } else {
        Vec3::new(0.0, 0.0, yaw_rate * r_des.z_axis().z)
    };
    let (e_r, e_w) = attitude_errors(&state.attitude, &r_des, &state.omega, &omega_des);
    let torques = control_torques(&e_r, &e_w, gains);
    Ok(Se3Output {
        wrench: ControlWrench::new(f.thrust.max(0.0), torques.roll, torques.pitch),
        desired_attitude: r_des,
        desired_rates: omega_des,
        attitude_error: e_r,
        rate_error: e_w,
        yaw_torque_discarded: torques.yaw_discarded,
    })
}

/// Stateful wrapper: holds the last valid desired attitude across a
/// singular sample and counts discarded yaw commands.
#[derive(Clone, Debug)]
pub struct Se3Controller {
    pub gains: GainSet,
    pub opts: Se3Options,
    last_r_des: Option<Rotation>,
    /// Number of steps whose yaw torque was dropped.
    pub yaw_discards: u64,
    pub singular_holds: u64,
    /// Steps where thrust was too low for the rate feedforward and the
    /// desired rates fell back to zero roll/pitch rate.
    pub feedforward_drops: u64,
}

impl Se3Controller {
    pub fn new(gains: GainSet, opts: Se3Options) -> Self {
        Self {
            gains,
            opts,
            last_r_des: None,
            yaw_discards: 0,
            singular_holds: 0,
            feedforward_drops: 0,
        }
    }

    pub fn reset(&mut self) {
        self.last_r_des = None;
    }

    pub fn step(
        &mut self,
        state: &VehicleState,
        target: &FlatTarget,
        params: &VehicleParams,
        gravity: f64,
    ) -> Result<Se3Output, ControlError> {
        let mut result = se3_step(state, target, &self.gains, params, gravity, &self.opts);
        if matches!(result, Err(ControlError::ThrustTooLow(_))) && self.opts.feedforward_rates {
            self.feedforward_drops += 1;
            let opts = Se3Options {
                feedforward_rates: false,
                ..self.opts
            };
            result = se3_step(state, target, &self.gains, params, gravity, &opts);
        }
        match result {
            Ok(out) => {
                self.last_r_des = Some(out.desired_attitude);
                if out.yaw_torque_discarded != 0.0 {
                    self.yaw_discards += 1;
                }
                Ok(out)
            }
            Err(ControlError::AttitudeSingular) => {
                let r_des = self.last_r_des.take().ok_or(ControlError::AttitudeSingular)?;
                self.singular_holds += 1;
                let f = desired_force(state, target, &self.gains, params, gravity)?;
                let (e_r, e_w) = attitude_errors(&state.attitude, &r_des, &state.omega, &Vec3::zeros());
                let t = control_torques(&e_r, &e_w, &self.gains);
                self.yaw_discards += 1;
                Ok(Se3Output {
                    wrench: ControlWrench::new(f.thrust.max(0.0), t.roll, t.pitch),
                    desired_attitude: r_des,
                    desired_rates: Vec3::zeros(),
                    attitude_error: e_r,
                    rate_error: e_w,
                    yaw_torque_discarded: t.yaw_discarded,
                })
            }
            Err(e) => Err(e),
        }
    }
}
