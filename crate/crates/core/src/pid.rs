//! Cascaded PID flight controller used as a benchmark.
//!
//! Two cascades: angle PID feeding an angular-rate PID for roll and pitch,
//! and position PID feeding a velocity PID for translation. Because yaw is
//! not controlled, the horizontal velocity-loop output is rotated into the
//! yaw-only frame using the observed yaw before it becomes a roll/pitch
//! setpoint.

use serde::{Deserialize, Serialize};

use crate::actuation::{ControlWrench, VehicleParams};
use crate::geom::{EulerZxy, Vec3, VehicleState};
use crate::se3::FlatTarget;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    /// Symmetric output clamp.
    pub output_limit: f64,
    /// Symmetric clamp on the integral contribution.
    pub integrator_limit: f64,
}

impl PidGains {
    pub const fn new(kp: f64, ki: f64, kd: f64, output_limit: f64, integrator_limit: f64) -> Self {
        Self {
            kp,
            ki,
            kd,
            output_limit,
            integrator_limit,
        }
    }

    pub fn validate(&self, name: &str) -> Result<(), String> {
        if !(self.output_limit > 0.0 && self.integrator_limit > 0.0) {
            return Err(format!("{name}: limits must be > 0"));
        }
        if !(self.ki >= 0.0) {
            return Err(format!("{name}: ki must be >= 0"));
        }
        if ![self.kp, self.ki, self.kd].iter().all(|x| x.is_finite()) {
            return Err(format!("{name}: gains must be finite"));
        }
        Ok(())
    }
}

/// Single PID loop with clamped integrator and derivative on measurement.
#[derive(Clone, Debug, PartialEq)]
pub struct Pid {
    pub gains: PidGains,
    integral: f64,
    prev_measurement: Option<f64>,
}

impl Pid {
    pub fn new(gains: PidGains) -> Self {
        Self {
            gains,
            integral: 0.0,
            prev_measurement: None,
        }
    }

    pub fn reset(&mut self) {
        self.integral = 0.0;
        self.prev_measurement = None;
    }

    /// Integral contribution currently held.
    pub fn integral(&self) -> f64 {
        self.integral
    }

    pub fn update(&mut self, setpoint: f64, measurement: f64, dt: f64) -> f64 {
        self.update_error(setpoint - measurement, measurement, dt)
    }

    /// Update with a precomputed error (e.g. wrapped angles); the
    /// derivative still acts on `measurement`.
    pub fn update_error(&mut self, error: f64, measurement: f64, dt: f64) -> f64 {
        let g = self.gains;
        let lim = g.integrator_limit;
        self.integral = (self.integral + g.ki * error * dt).clamp(-lim, lim);
        let derivative = match self.prev_measurement {
            Some(prev) if dt > 0.0 => -(measurement - prev) / dt,
            _ => 0.0,
        };
        self.prev_measurement = Some(measurement);
        (g.kp * error + self.integral + g.kd * derivative).clamp(-g.output_limit, g.output_limit)
    }
}

/// Gains for the full stack.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PidStackGains {
    /// Body rate loop, output N m.
    pub rate: PidGains,
    /// Angle loop, output rad/s.
    pub angle: PidGains,
    /// Horizontal velocity loop, output m/s^2.
    pub velocity_xy: PidGains,
    /// Horizontal position loop, output m/s.
    pub position_xy: PidGains,
    /// Vertical velocity loop, output m/s^2.
    pub velocity_z: PidGains,
    /// Vertical position loop, output m/s.
    pub position_z: PidGains,
    /// Tilt setpoint limit (rad).
    pub max_tilt: f64,
    /// Position loop runs every `position_divider` attitude steps.
    pub position_divider: u32,
}

impl Default for PidStackGains {
    fn default() -> Self {
        Self {
            rate: PidGains::new(1.0e-3, 0.0, 0.0, 5e-3, 1e-3),
            angle: PidGains::new(8.0, 0.0, 0.0, 6.0, 1.0),
            velocity_xy: PidGains::new(3.0, 0.5, 0.0, 4.0, 1.0),
            position_xy: PidGains::new(1.2, 0.0, 0.0, 1.0, 0.5),
            velocity_z: PidGains::new(4.0, 1.0, 0.0, 5.0, 2.0),
            position_z: PidGains::new(1.5, 0.0, 0.0, 1.0, 0.5),
            max_tilt: 0.5,
            position_divider: 2,
        }
    }
}

impl PidStackGains {
    pub fn validate(&self) -> Result<(), String> {
        self.rate.validate("pid.rate")?;
        self.angle.validate("pid.angle")?;
        self.velocity_xy.validate("pid.velocity_xy")?;
        self.position_xy.validate("pid.position_xy")?;
        self.velocity_z.validate("pid.velocity_z")?;
        self.position_z.validate("pid.position_z")?;
        if !(self.max_tilt > 0.0 && self.max_tilt < std::f64::consts::FRAC_PI_2) {
            return Err("pid.max_tilt must be in (0, pi/2)".into());
        }
        if self.position_divider == 0 {
            return Err("pid.position_divider must be >= 1".into());
        }
        Ok(())
    }
}

/// Output of the position cascade.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AttitudeSetpoint {
    pub roll: f64,
    pub pitch: f64,
    pub thrust: f64,
}

/// All loop states of the cascade.
#[derive(Clone, Debug, PartialEq)]
pub struct PidState {
    pub roll_rate: Pid,
    pub pitch_rate: Pid,
    pub roll: Pid,
    pub pitch: Pid,
    pub vel_x: Pid,
    pub vel_y: Pid,
    pub vel_z: Pid,
    pub pos_x: Pid,
    pub pos_y: Pid,
    pub pos_z: Pid,
}

impl PidState {
    pub fn new(g: &PidStackGains) -> Self {
        Self {
            roll_rate: Pid::new(g.rate),
            pitch_rate: Pid::new(g.rate),
            roll: Pid::new(g.angle),
            pitch: Pid::new(g.angle),
            vel_x: Pid::new(g.velocity_xy),
            vel_y: Pid::new(g.velocity_xy),
            vel_z: Pid::new(g.velocity_z),
            pos_x: Pid::new(g.position_xy),
            pos_y: Pid::new(g.position_xy),
            pos_z: Pid::new(g.position_z),
        }
    }

    pub fn reset(&mut self) {
        for pid in self.loops_mut() {
            pid.reset();
        }
    }

    pub fn loops_mut(&mut self) -> [&mut Pid; 10] {
        [
            &mut self.roll_rate,
            &mut self.pitch_rate,
            &mut self.roll,
            &mut self.pitch,
            &mut self.vel_x,
            &mut self.vel_y,
            &mut self.vel_z,
            &mut self.pos_x,
            &mut self.pos_y,
            &mut self.pos_z,
        ]
    }

    pub fn loops(&self) -> [&Pid; 10] {
        [
            &self.roll_rate,
            &self.pitch_rate,
            &self.roll,
            &self.pitch,
            &self.vel_x,
            &self.vel_y,
            &self.vel_z,
            &self.pos_x,
            &self.pos_y,
            &self.pos_z,
        ]
    }
}

/// Position and velocity loops.
///
/// `yaw` is the observed yaw sample; the world-frame acceleration demand is
/// rotated by `-yaw` into the yaw-only frame, where small-angle kinematics
/// give `a_x = g tan(pitch)` and `a_y = -g tan(roll)`.
#[allow(clippy::too_many_arguments)]
pub fn pid_position_step(
    est: &VehicleState,
    yaw: f64,
    target: &FlatTarget,
    gains: &PidStackGains,
    st: &mut PidState,
    params: &VehicleParams,
    gravity: f64,
    dt: f64,
) -> AttitudeSetpoint {
    let p = est.position;
    let v = est.velocity;
    let tp = target.position;
    let vx_sp = st.pos_x.update(tp.x, p.x, dt) + target.velocity.x;
    let vy_sp = st.pos_y.update(tp.y, p.y, dt) + target.velocity.y;
    let vz_sp = st.pos_z.update(tp.z, p.z, dt) + target.velocity.z;
    let ax = st.vel_x.update(vx_sp, v.x, dt) + target.acceleration.x;
    let ay = st.vel_y.update(vy_sp, v.y, dt) + target.acceleration.y;
    let az = st.vel_z.update(vz_sp, v.z, dt) + target.acceleration.z;

    let (s, c) = yaw.sin_cos();
    let a_cx = c * ax + s * ay;
    let a_cy = -s * ax + c * ay;
    let lift = (gravity + az).max(0.1 * gravity);
    let pitch = (a_cx / lift).atan().clamp(-gains.max_tilt, gains.max_tilt);
    let roll = (-a_cy / lift).atan().clamp(-gains.max_tilt, gains.max_tilt);
    let thrust = params.mass * lift / (roll.cos() * pitch.cos());
    AttitudeSetpoint { roll, pitch, thrust }
}

/// Angle and rate loops for roll and pitch. No yaw torque is produced.
pub fn pid_attitude_step(
    euler: &EulerZxy,
    omega: &Vec3,
    sp: &AttitudeSetpoint,
    st: &mut PidState,
    dt: f64,
) -> ControlWrench {
    let p_sp = st.roll.update(sp.roll, euler.roll, dt);
    let q_sp = st.pitch.update(sp.pitch, euler.pitch, dt);
    let u2 = st.roll_rate.update(p_sp, omega.x, dt);
    let u3 = st.pitch_rate.update(q_sp, omega.y, dt);
    ControlWrench::new(sp.thrust.max(0.0), u2, u3)
}

/// The full cascade with its rate divider.
#[derive(Clone, Debug)]
pub struct PidStack {
    pub gains: PidStackGains,
    pub state: PidState,
    ticks: u64,
    setpoint: Option<AttitudeSetpoint>,
}

impl PidStack {
    pub fn new(gains: PidStackGains) -> Self {
        Self {
            state: PidState::new(&gains),
            gains,
            ticks: 0,
            setpoint: None,
        }
    }

    pub fn reset(&mut self) {
        self.state.reset();
        self.ticks = 0;
        self.setpoint = None;
    }

    /// One attitude-rate tick; the position cascade runs on every
    /// `position_divider`-th tick.
    pub fn step(
        &mut self,
        est: &VehicleState,
        euler: &EulerZxy,
        target: &FlatTarget,
        params: &VehicleParams,
        gravity: f64,
        dt: f64,
    ) -> ControlWrench {
        let div = self.gains.position_divider.max(1) as u64;
        if self.setpoint.is_none() || self.ticks.is_multiple_of(div) {
            self.setpoint = Some(pid_position_step(
                est,
                target.yaw_sample,
                target,
                &self.gains,
                &mut self.state,
                params,
                gravity,
                dt * div as f64,
            ));
        }
        self.ticks += 1;
        let sp = self.setpoint.expect("set above");
        pid_attitude_step(euler, &est.omega, &sp, &mut self.state, dt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    const G: f64 = 9.81;

    fn hover_target() -> FlatTarget {
        FlatTarget::hover(Vec3::new(0.0, 0.0, 1.0))
    }

    #[test]
    fn zero_error_gives_trim() {
        let p = VehicleParams::default();
        let g = PidStackGains::default();
        let mut st = PidState::new(&g);
        let est = VehicleState::hovering_at(Vec3::new(0.0, 0.0, 1.0));
        let sp = pid_position_step(&est, 0.3, &hover_target(), &g, &mut st, &p, G, 0.02);
        assert_eq!(sp.roll, 0.0);
        assert_eq!(sp.pitch, 0.0);
        assert!((sp.thrust - p.mass * G).abs() < 1e-15);
    }

    #[test]
    fn world_x_demand_with_yaw_ninety_maps_to_roll() {
        let p = VehicleParams::default();
        let mut g = PidStackGains::default();
        g.velocity_xy.ki = 0.0;
        let mut st = PidState::new(&g);
        let est = VehicleState::hovering_at(Vec3::new(0.0, 0.0, 1.0));
        let mut t = hover_target();
        t.velocity = Vec3::new(0.2, 0.0, 0.0);
        let sp = pid_position_step(&est, FRAC_PI_2, &t, &g, &mut st, &p, G, 0.02);
        // Body -Y points along world +x after a 90 deg yaw; positive roll
        // tilts thrust toward -Y_B.
        assert!(sp.roll > 0.0);
        assert!(sp.pitch.abs() < 1e-12);
        let mut st = PidState::new(&g);
        let sp0 = pid_position_step(&est, 0.0, &t, &g, &mut st, &p, G, 0.02);
        assert!(sp0.pitch > 0.0 && sp0.roll.abs() < 1e-12);
        assert!((sp0.pitch - sp.roll).abs() < 1e-12);
    }

    #[test]
    fn integrator_clamped_under_persistent_error() {
        let gains = PidGains::new(0.0, 10.0, 0.0, 100.0, 0.3);
        let mut pid = Pid::new(gains);
        let mut out = 0.0;
        for _ in 0..1000 {
            out = pid.update(1.0, 0.0, 0.01);
        }
        assert_eq!(pid.integral(), 0.3);
        assert_eq!(out, 0.3);
        let gains = PidGains::new(50.0, 0.0, 0.0, 2.0, 0.3);
        let mut pid = Pid::new(gains);
        assert_eq!(pid.update(1.0, 0.0, 0.01), 2.0);
        assert_eq!(pid.update(-1.0, 0.0, 0.01), -2.0);
    }

    #[test]
    fn level_attitude_gives_no_torque() {
        let g = PidStackGains::default();
        let mut st = PidState::new(&g);
        let sp = AttitudeSetpoint {
            roll: 0.0,
            pitch: 0.0,
            thrust: 0.3,
        };
        let u = pid_attitude_step(&EulerZxy::default(), &Vec3::zeros(), &sp, &mut st, 0.01);
        assert_eq!(u, ControlWrench::new(0.3, 0.0, 0.0));
    }

    #[test]
    fn roll_error_is_restored() {
        let g = PidStackGains {
            rate: PidGains::new(1e-3, 0.0, 0.0, 1.0, 1.0),
            angle: PidGains::new(5.0, 0.0, 0.0, 10.0, 1.0),
            ..Default::default()
        };
        let mut st = PidState::new(&g);
        let sp = AttitudeSetpoint {
            roll: 0.0,
            pitch: 0.0,
            thrust: 0.3,
        };
        let u = pid_attitude_step(&EulerZxy::new(0.1, 0.0, 0.0), &Vec3::zeros(), &sp, &mut st, 0.01);
        assert!(u.roll_torque < 0.0);
        assert!((u.roll_torque + 5.0 * 0.1 * 1e-3).abs() < 1e-15);
        assert_eq!(u.yaw_torque, 0.0);
    }

    #[test]
    fn derivative_of_constant_measurement_is_zero() {
        let mut pid = Pid::new(PidGains::new(0.0, 0.0, 3.0, 10.0, 1.0));
        pid.update(1.0, 0.2, 0.01);
        assert_eq!(pid.update(1.0, 0.2, 0.01), 0.0);
        assert_eq!(pid.update(5.0, 0.2, 0.01), 0.0);
    }

    #[test]
    fn identical_inputs_and_state_identical_outputs() {
        let p = VehicleParams::default();
        let mut a = PidStack::new(PidStackGains::default());
        let est = VehicleState::hovering_at(Vec3::new(0.03, -0.02, 0.95));
        let e = EulerZxy::new(0.01, -0.02, 0.4);
        a.step(&est, &e, &hover_target(), &p, G, 0.01);
        let mut b = a.clone();
        let ua = a.step(&est, &e, &hover_target(), &p, G, 0.01);
        let ub = b.step(&est, &e, &hover_target(), &p, G, 0.01);
        assert_eq!(ua, ub);
        assert_eq!(a.state, b.state);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn integrator_never_exceeds_bound(
                errors in proptest::collection::vec(-100.0..100.0f64, 1..200),
                ki in 0.0..50.0f64,
                lim in 0.01..5.0f64,
            ) {
                let mut pid = Pid::new(PidGains::new(1.0, ki, 0.5, 10.0, lim));
                for e in errors {
                    let out = pid.update(e, 0.0, 0.01);
                    prop_assert!(pid.integral().abs() <= lim);
                    prop_assert!(out.abs() <= 10.0);
                }
            }
        }
    }
}
