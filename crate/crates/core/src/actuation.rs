//! Flapping-module actuator models and control allocation.
//!
//! Module layout in the body frame (positions of the thrust lines):
//!
//! ```text
//! back  (f1): ( L,            0,           0)
//! left  (f2): (-L cos(alpha), -L sin(alpha), 0)
//! right (f3): (-L cos(alpha),  L sin(alpha), 0)
//! ```
//!
//! Each module produces a cycle-averaged thrust `k_F * f` along `Z_B`, which
//! gives the allocation
//!
//! ```text
//! [u1]   [ k_F        k_F               k_F            ] [f1]
//! [u2] = [ 0         -sin(a) k_F L      sin(a) k_F L   ] [f2]
//! [u3]   [-k_F L      cos(a) k_F L      cos(a) k_F L   ] [f3]
//! ```
//!
//! There is no yaw row: flapping modules do not produce a sustained reaction
//! torque, so yaw is unactuated.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::ActuationError;
use crate::geom::{Mat3, Vec3};

/// Standard gravity used for default calibration.
pub const STANDARD_GRAVITY: f64 = 9.81;

/// Vehicle mass of the prototype (kg).
pub const DEFAULT_MASS: f64 = 0.0374;
/// Thrust per unit flapping frequency (N/Hz), calibrated so that one module
/// at 25.1 Hz lifts 18.1 g.
pub const DEFAULT_THRUST_COEFF: f64 = 0.0070741;
/// Alternate thrust coefficient as published with the lift-frequency fit.
/// Its units cannot be reconciled with the lift data; kept as a preset only.
pub const PUBLISHED_THRUST_COEFF: f64 = 0.0195;
pub const DEFAULT_MAX_FREQUENCY: f64 = 25.1;
pub const DEFAULT_BATTERY_MAH: f64 = 380.0;
pub const HOVER_ENDURANCE_S: f64 = 6.5 * 60.0;
pub const CRAWL_ENDURANCE_S: f64 = 28.0 * 60.0;
pub const DEFAULT_AVIONICS_MA: f64 = 60.0;

/// Quadratic throttle-to-frequency fit, `f = a thr^2 + b thr + c`.
pub mod throttle_fit {
    pub const A: f64 = -41.56;
    pub const B: f64 = 80.69;
    pub const C: f64 = -14.64;

    /// Throttle at the vertex of the fit; above it the fit decreases.
    pub fn vertex_throttle() -> f64 {
        -B / (2.0 * A)
    }

    /// Largest frequency the fit can produce.
    pub fn max_frequency() -> f64 {
        C - B * B / (4.0 * A)
    }

    /// Lower root of the fit: throttles below it produce no flapping.
    pub fn deadband_throttle() -> f64 {
        (-B + (B * B - 4.0 * A * C).sqrt()) / (2.0 * A)
    }

    pub(crate) fn raw(thr: f64) -> f64 {
        (A * thr + B) * thr + C
    }
}

/// Flapping frequency (Hz) for a throttle in `[0, 1]`.
///
/// Below the deadband root the result is 0; above the fit's vertex the
/// result is held at the vertex value so the map stays monotone.
pub fn throttle_to_frequency(thr: f64) -> f64 {
    let t = thr.clamp(0.0, 1.0).min(throttle_fit::vertex_throttle());
    throttle_fit::raw(t).max(0.0)
}

/// Inverse of [`throttle_to_frequency`] on the monotone branch.
///
/// `f = 0` maps to the deadband root.
pub fn frequency_to_throttle(f: f64) -> Result<f64, ActuationError> {
    use throttle_fit::*;
    let f_top = max_frequency();
    if !(0.0..=f_top).contains(&f) {
        return Err(ActuationError::OutOfEnvelope(f, f_top));
    }
    // Written around the vertex to avoid cancellation:
    // thr = thr* - sqrt((f* - f) / |a|)
    let depth = ((f_top - f) / -A).max(0.0);
    Ok(vertex_throttle() - depth.sqrt())
}

/// Affine per-module current model plus an avionics baseline, in mA.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerModel {
    /// Always-on draw of the flight controller and sensors.
    pub avionics_ma: f64,
    /// Per active module: constant part.
    pub module_c0_ma: f64,
    /// Per active module: slope in mA per Hz.
    pub module_c1_ma_per_hz: f64,
}

impl PowerModel {
    /// Two-point calibration: `hover_modules` modules at `hover_freq` empty
    /// `capacity_mah` in `hover_s`, and `crawl_modules` modules at
    /// `crawl_freq` empty it in `crawl_s`.
    pub fn calibrate(
        capacity_mah: f64,
        avionics_ma: f64,
        (hover_modules, hover_freq, hover_s): (u32, f64, f64),
        (crawl_modules, crawl_freq, crawl_s): (u32, f64, f64),
    ) -> Self {
        let per_module = |n: u32, secs: f64| (capacity_mah * 3600.0 / secs - avionics_ma) / n as f64;
        let i_hover = per_module(hover_modules, hover_s);
        let i_crawl = per_module(crawl_modules, crawl_s);
        let c1 = (i_hover - i_crawl) / (hover_freq - crawl_freq);
        let c0 = i_hover - c1 * hover_freq;
        Self {
            avionics_ma,
            module_c0_ma: c0,
            module_c1_ma_per_hz: c1,
        }
    }

    /// Total current for a command (mA). Modules at zero frequency are off.
    pub fn current_ma(&self, cmd: &ActuatorCommand) -> f64 {
        self.avionics_ma
            + cmd
                .freq
                .iter()
                .filter(|f| **f > 0.0)
                .map(|f| self.module_c0_ma + self.module_c1_ma_per_hz * f)
                .sum::<f64>()
    }
}

/// Physical vehicle parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VehicleParams {
    /// kg
    pub mass: f64,
    /// kg m^2, body frame
    pub inertia: [[f64; 3]; 3],
    /// m
    pub arm_length: f64,
    /// Angle of the side arms from the body x axis (rad).
    pub arm_angle: f64,
    /// k_F, N per Hz
    pub thrust_coeff: f64,
    /// Hz
    pub max_frequency: f64,
    /// Usable throttle interval `[lo, hi]`.
    pub throttle_range: [f64; 2],
    pub battery_capacity_mah: f64,
    pub power: PowerModel,
    /// Yaw torque produced per Hz of total flapping frequency by assembly
    /// imbalance (N m / Hz). Zero in the nominal model.
    #[serde(default)]
    pub yaw_imbalance_per_hz: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        let mut p = Self {
            mass: DEFAULT_MASS,
            inertia: [[2.6e-5, 0.0, 0.0], [0.0, 2.6e-5, 0.0], [0.0, 0.0, 4.3e-5]],
            arm_length: 0.06,
            arm_angle: PI / 3.0,
            thrust_coeff: DEFAULT_THRUST_COEFF,
            max_frequency: DEFAULT_MAX_FREQUENCY,
            throttle_range: [0.0, 1.0],
            battery_capacity_mah: DEFAULT_BATTERY_MAH,
            power: PowerModel {
                avionics_ma: DEFAULT_AVIONICS_MA,
                module_c0_ma: 0.0,
                module_c1_ma_per_hz: 0.0,
            },
            yaw_imbalance_per_hz: 0.0,
        };
        p.power = p.calibrated_power(STANDARD_GRAVITY, DEFAULT_AVIONICS_MA);
        p
    }
}

impl VehicleParams {
    /// Same vehicle with the published (unit-ambiguous) thrust coefficient.
    pub fn published_thrust_coeff() -> Self {
        let mut p = Self::default();
        p.thrust_coeff = PUBLISHED_THRUST_COEFF;
        p.power = p.calibrated_power(STANDARD_GRAVITY, DEFAULT_AVIONICS_MA);
        p
    }

    pub fn inertia_matrix(&self) -> Mat3 {
        Mat3::from_fn(|i, j| self.inertia[i][j])
    }

    pub fn weight(&self, gravity: f64) -> f64 {
        self.mass * gravity
    }

    /// Per-module frequency that balances gravity with all three modules.
    pub fn hover_frequency(&self, gravity: f64) -> f64 {
        self.weight(gravity) / (3.0 * self.thrust_coeff)
    }

    /// Crawl frequency cap: the frequency at half the hover throttle.
    pub fn crawl_frequency_cap(&self, gravity: f64) -> f64 {
        let f_hover = self.hover_frequency(gravity).min(throttle_fit::max_frequency());
        let thr = frequency_to_throttle(f_hover).unwrap_or(throttle_fit::vertex_throttle());
        throttle_to_frequency(0.5 * thr)
    }

    /// Power model calibrated against the hover and crawl endurance figures
    /// (three modules at hover frequency, two modules at the crawl cap).
    pub fn calibrated_power(&self, gravity: f64, avionics_ma: f64) -> PowerModel {
        PowerModel::calibrate(
            self.battery_capacity_mah,
            avionics_ma,
            (3, self.hover_frequency(gravity), HOVER_ENDURANCE_S),
            (2, self.crawl_frequency_cap(gravity), CRAWL_ENDURANCE_S),
        )
    }

    /// Checks the parameter invariants; returns the first violation.
    pub fn validate(&self) -> Result<(), String> {
        let finite = [
            self.mass,
            self.arm_length,
            self.arm_angle,
            self.thrust_coeff,
            self.max_frequency,
            self.battery_capacity_mah,
        ];
        if finite.iter().any(|x| !x.is_finite()) {
            return Err("vehicle parameters must be finite".into());
        }
        if self.mass <= 0.0 {
            return Err(format!("vehicle.mass must be > 0 (got {})", self.mass));
        }
        let i = self.inertia_matrix();
        if (i - i.transpose()).amax() > 1e-15 {
            return Err("vehicle.inertia must be symmetric".into());
        }
        if i.cholesky().is_none() {
            return Err("vehicle.inertia must be positive definite".into());
        }
        if self.arm_length <= 0.0 {
            return Err(format!("vehicle.arm_length must be > 0 (got {})", self.arm_length));
        }
        if self.arm_angle.sin().abs() < 1e-9 {
            return Err("vehicle.arm_angle must satisfy sin(alpha) != 0".into());
        }
        if self.thrust_coeff <= 0.0 {
            return Err("vehicle.thrust_coeff must be > 0".into());
        }
        if self.max_frequency <= 0.0 {
            return Err("vehicle.max_frequency must be > 0".into());
        }
        let [lo, hi] = self.throttle_range;
        if !(0.0 <= lo && lo < hi && hi <= 1.0) {
            return Err(format!(
                "vehicle.throttle_range must satisfy 0 <= thr_lo < thr_hi <= 1 (got [{lo}, {hi}])"
            ));
        }
        if self.battery_capacity_mah <= 0.0 {
            return Err("vehicle.battery_capacity_mah must be > 0".into());
        }
        Ok(())
    }
}

/// Per-module flapping frequencies (back, left, right) in Hz.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ActuatorCommand {
    pub freq: [f64; 3],
    pub saturated: [bool; 3],
}

impl ActuatorCommand {
    pub fn new(freq: [f64; 3]) -> Self {
        Self {
            freq,
            saturated: [false; 3],
        }
    }

    pub fn off() -> Self {
        Self::default()
    }

    pub fn any_saturated(&self) -> bool {
        self.saturated.iter().any(|s| *s)
    }

    pub fn throttles(&self) -> [f64; 3] {
        self.freq.map(|f| {
            if f <= 0.0 {
                0.0
            } else {
                frequency_to_throttle(f.min(throttle_fit::max_frequency())).unwrap_or(1.0)
            }
        })
    }
}

/// Collective thrust and body torques.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ControlWrench {
    /// u1, N along `Z_B`
    pub thrust: f64,
    /// u2, N m about `X_B`
    pub roll_torque: f64,
    /// u3, N m about `Y_B`
    pub pitch_torque: f64,
    /// Yaw torque. Not actuated; carried for diagnostics and disturbances.
    pub yaw_torque: f64,
}

impl ControlWrench {
    pub fn new(thrust: f64, roll_torque: f64, pitch_torque: f64) -> Self {
        Self {
            thrust,
            roll_torque,
            pitch_torque,
            yaw_torque: 0.0,
        }
    }

    pub fn actuated(&self) -> Vec3 {
        Vec3::new(self.thrust, self.roll_torque, self.pitch_torque)
    }

    pub fn torque(&self) -> Vec3 {
        Vec3::new(self.roll_torque, self.pitch_torque, self.yaw_torque)
    }
}

/// Determinant of the allocation matrix in closed form.
pub fn allocation_determinant(params: &VehicleParams) -> f64 {
    let (k, l, a) = (params.thrust_coeff, params.arm_length, params.arm_angle);
    -2.0 * k.powi(3) * l * l * a.sin() * (a.cos() + 1.0)
}

const SINGULAR_TOL: f64 = 1e-12;

fn check_singular(params: &VehicleParams) -> Result<(), ActuationError> {
    let det = allocation_determinant(params);
    // Scale-free test: compare against the same expression with the trig
    // factor at its maximum.
    let scale = 2.0 * params.thrust_coeff.powi(3) * params.arm_length.powi(2);
    if !(det.abs() >= SINGULAR_TOL * scale) || det == 0.0 {
        return Err(ActuationError::SingularAllocation(det));
    }
    Ok(())
}

/// The 3x3 input matrix mapping frequencies to `(u1, u2, u3)`.
pub fn allocation_matrix(params: &VehicleParams) -> Result<Mat3, ActuationError> {
    check_singular(params)?;
    let (k, l, a) = (params.thrust_coeff, params.arm_length, params.arm_angle);
    let (s, c) = a.sin_cos();
    Ok(Mat3::new(
        k,
        k,
        k,
        0.0,
        -s * k * l,
        s * k * l,
        -k * l,
        c * k * l,
        c * k * l,
    ))
}

/// Frequencies to wrench.
pub fn forward_mix(cmd: &ActuatorCommand, params: &VehicleParams) -> ControlWrench {
    let (k, l, a) = (params.thrust_coeff, params.arm_length, params.arm_angle);
    let (s, c) = a.sin_cos();
    let [f1, f2, f3] = cmd.freq;
    ControlWrench {
        thrust: k * (f1 + f2 + f3),
        roll_torque: s * k * l * (f3 - f2),
        pitch_torque: k * l * (-f1 + c * (f2 + f3)),
        yaw_torque: params.yaw_imbalance_per_hz * (f1 + f2 + f3),
    }
}

/// Module thrust points in the body frame: back, left, right.
pub fn module_positions(params: &VehicleParams) -> [Vec3; 3] {
    let (l, (s, c)) = (params.arm_length, params.arm_angle.sin_cos());
    [
        Vec3::new(l, 0.0, 0.0),
        Vec3::new(-l * c, -l * s, 0.0),
        Vec3::new(-l * c, l * s, 0.0),
    ]
}

/// Unclamped solution of `B f = (u1, u2, u3)`.
///
/// With `S = f2 + f3` and `D = f3 - f2` the system decouples:
/// `S (1 + cos a) = u1/k + u3/(k L)`, `f1 = u1/k - S`,
/// `D = u2 / (sin a k L)`.
pub fn solve_allocation(u: &ControlWrench, params: &VehicleParams) -> Result<[f64; 3], ActuationError> {
    check_singular(params)?;
    let (k, l, a) = (params.thrust_coeff, params.arm_length, params.arm_angle);
    let (s, c) = a.sin_cos();
    let sum_lr = (u.thrust / k + u.pitch_torque / (k * l)) / (1.0 + c);
    let f1 = u.thrust / k - sum_lr;
    let diff = u.roll_torque / (s * k * l);
    Ok([f1, 0.5 * (sum_lr - diff), 0.5 * (sum_lr + diff)])
}

/// Wrench to frequencies, clamped to `[0, f_max]` per module.
pub fn inverse_mix(u: &ControlWrench, params: &VehicleParams) -> Result<ActuatorCommand, ActuationError> {
    let raw = solve_allocation(u, params)?;
    let mut cmd = ActuatorCommand::default();
    for (i, r) in raw.into_iter().enumerate() {
        let f = r.clamp(0.0, params.max_frequency);
        cmd.saturated[i] = f != r;
        cmd.freq[i] = f;
    }
    Ok(cmd)
}

/// Removes the charge drawn by `cmd` over `dt` seconds.
///
/// Returns the remaining charge, or `BatteryEmpty` once it reaches zero.
pub fn battery_drain(
    cmd: &ActuatorCommand,
    dt: f64,
    charge_mah: f64,
    power: &PowerModel,
) -> Result<f64, ActuationError> {
    let used = power.current_ma(cmd) * dt / 3600.0;
    let left = charge_mah - used;
    if left <= 0.0 {
        Err(ActuationError::BatteryEmpty)
    } else {
        Ok(left)
    }
}

/// Battery with charge bookkeeping.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Battery {
    pub capacity_mah: f64,
    pub charge_mah: f64,
    /// Total charge removed so far.
    pub drawn_mah: f64,
}

impl Battery {
    pub fn full(capacity_mah: f64) -> Self {
        Self {
            capacity_mah,
            charge_mah: capacity_mah,
            drawn_mah: 0.0,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.charge_mah <= 0.0
    }

    pub fn drain(&mut self, cmd: &ActuatorCommand, dt: f64, power: &PowerModel) -> Result<(), ActuationError> {
        if self.is_empty() {
            return Err(ActuationError::BatteryEmpty);
        }
        match battery_drain(cmd, dt, self.charge_mah, power) {
            Ok(left) => {
                self.drawn_mah += self.charge_mah - left;
                self.charge_mah = left;
                Ok(())
            }
            Err(e) => {
                self.drawn_mah += self.charge_mah;
                self.charge_mah = 0.0;
                Err(e)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> VehicleParams {
        VehicleParams::default()
    }

    #[test]
    fn allocation_row_two_at_sixty_degrees() {
        let b = allocation_matrix(&params()).unwrap();
        let expected = (PI / 3.0).sin() * 0.0070741 * 0.06;
        assert!((b[(1, 1)] + expected).abs() < 1e-18);
        assert!((b[(1, 2)] - expected).abs() < 1e-18);
        assert!((b[(1, 2)] - 3.676e-4).abs() < 1e-7);
        assert_eq!(b[(1, 0)], 0.0);
    }

    #[test]
    fn determinant_closed_form_matches_cofactor_expansion() {
        let p = params();
        let b = allocation_matrix(&p).unwrap();
        // Cofactor expansion along the first row, written out by hand.
        let cof = b[(0, 0)] * (b[(1, 1)] * b[(2, 2)] - b[(1, 2)] * b[(2, 1)])
            - b[(0, 1)] * (b[(1, 0)] * b[(2, 2)] - b[(1, 2)] * b[(2, 0)])
            + b[(0, 2)] * (b[(1, 0)] * b[(2, 1)] - b[(1, 1)] * b[(2, 0)]);
        let k = p.thrust_coeff;
        let l = p.arm_length;
        let by_hand = -2.0 * k.powi(3) * l * l * (3f64.sqrt() / 2.0) * 1.5;
        assert!((cof - by_hand).abs() < 1e-12 * by_hand.abs());
        assert!((allocation_determinant(&p) - by_hand).abs() < 1e-12 * by_hand.abs());
    }

    #[test]
    fn zero_arm_angle_is_singular() {
        let mut p = params();
        p.arm_angle = 0.0;
        assert!(matches!(
            allocation_matrix(&p),
            Err(ActuationError::SingularAllocation(_))
        ));
        p.arm_angle = PI;
        assert!(matches!(
            inverse_mix(&ControlWrench::new(0.3, 0.0, 0.0), &p),
            Err(ActuationError::SingularAllocation(_))
        ));
    }

    #[test]
    fn forward_mix_examples() {
        let p = params();
        assert_eq!(forward_mix(&ActuatorCommand::off(), &p), ControlWrench::default());
        let u = forward_mix(&ActuatorCommand::new([10.0; 3]), &p);
        assert!(u.roll_torque == 0.0);
        assert!(u.pitch_torque.abs() < 1e-18);
        let u = forward_mix(&ActuatorCommand::new([17.288; 3]), &p);
        assert!((u.thrust - 0.36689).abs() < 1e-4);
        assert!((u.thrust - 0.0374 * 9.81).abs() < 1e-4);
    }

    #[test]
    fn inverse_mix_hover_and_roll() {
        let p = params();
        let mg = p.weight(9.81);
        let cmd = inverse_mix(&ControlWrench::new(mg, 0.0, 0.0), &p).unwrap();
        for f in cmd.freq {
            assert!((f - mg / (3.0 * p.thrust_coeff)).abs() < 1e-9);
            assert!((f - 17.29).abs() < 0.01);
        }
        let tau = 1e-4;
        let cmd = inverse_mix(&ControlWrench::new(mg, tau, 0.0), &p).unwrap();
        let expect = tau / ((PI / 3.0).sin() * p.thrust_coeff * p.arm_length);
        assert!((cmd.freq[2] - cmd.freq[1] - expect).abs() < 1e-9);
        let back = forward_mix(&cmd, &p);
        assert!(back.pitch_torque.abs() < 1e-15);
    }

    #[test]
    fn inverse_mix_clamps_with_flags() {
        let p = params();
        let cmd = inverse_mix(&ControlWrench::new(0.36, -0.02, 0.0), &p).unwrap();
        assert_eq!(cmd.freq[1], p.max_frequency);
        assert!(cmd.saturated[1]);
        assert_eq!(cmd.freq[2], 0.0);
        assert!(cmd.saturated[2]);
        assert!(!cmd.saturated[0]);
    }

    #[test]
    fn throttle_fit_examples() {
        assert!((throttle_to_frequency(0.5) - 15.315).abs() < 1e-9);
        assert_eq!(throttle_to_frequency(0.15), 0.0);
        assert!((throttle_to_frequency(1.0) - 24.525).abs() < 1e-3);
        // Raw polynomial at full throttle is lower than the vertex.
        assert!((throttle_fit::raw(1.0) - 24.49).abs() < 1e-9);
        assert!((throttle_fit::deadband_throttle() - 0.2026).abs() < 1e-4);
        assert!((throttle_fit::vertex_throttle() - 0.9708).abs() < 1e-4);
    }

    #[test]
    fn frequency_to_throttle_examples() {
        let t0 = frequency_to_throttle(0.0).unwrap();
        assert!((t0 - throttle_fit::deadband_throttle()).abs() < 1e-12);
        assert!((frequency_to_throttle(15.315).unwrap() - 0.5).abs() < 1e-9);
        assert!(matches!(
            frequency_to_throttle(25.0),
            Err(ActuationError::OutOfEnvelope(..))
        ));
        assert!(matches!(
            frequency_to_throttle(-1.0),
            Err(ActuationError::OutOfEnvelope(..))
        ));
    }

    #[test]
    fn crawl_cap_is_half_hover_throttle() {
        let p = params();
        let thr_hover = frequency_to_throttle(p.hover_frequency(9.81)).unwrap();
        let cap = p.crawl_frequency_cap(9.81);
        assert!((cap - throttle_to_frequency(thr_hover / 2.0)).abs() < 1e-12);
        assert!(cap > 4.0 && cap < 5.0, "cap = {cap}");
    }

    #[test]
    fn endurance_calibration_draws() {
        let p = params();
        let hover = ActuatorCommand::new([p.hover_frequency(9.81); 3]);
        let i_h = p.power.current_ma(&hover);
        assert!((i_h - 380.0 / (6.5 / 60.0)).abs() < 1e-6);
        assert!((i_h - 3508.0).abs() < 1.0);
        let fc = p.crawl_frequency_cap(9.81);
        let crawl = ActuatorCommand::new([0.0, fc, fc]);
        let i_c = p.power.current_ma(&crawl);
        assert!((i_c - 380.0 / (28.0 / 60.0)).abs() < 1e-6);
        assert!((i_c - 814.0).abs() < 1.0);
        assert_eq!(p.power.current_ma(&ActuatorCommand::off()), p.power.avionics_ma);
    }

    #[test]
    fn battery_empties_and_stays_empty() {
        let p = params();
        let mut b = Battery::full(1e-3);
        let on = ActuatorCommand::new([20.0; 3]);
        let mut hit = false;
        for _ in 0..10_000 {
            if b.drain(&on, 1e-3, &p.power).is_err() {
                hit = true;
                break;
            }
        }
        assert!(hit);
        assert_eq!(b.charge_mah, 0.0);
        assert!((b.drawn_mah - 1e-3).abs() < 1e-18);
        assert!(b.drain(&ActuatorCommand::off(), 1.0, &p.power).is_err());
    }

    #[test]
    fn validate_names_violation() {
        let mut p = params();
        p.throttle_range = [0.8, 0.2];
        assert!(p.validate().unwrap_err().contains("throttle_range"));
        let mut p = params();
        p.mass = 0.0;
        assert!(p.validate().unwrap_err().contains("mass"));
        assert!(params().validate().is_ok());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn forward_mix_is_linear(
                a in proptest::array::uniform3(0.0..25.0f64),
                b in proptest::array::uniform3(0.0..25.0f64),
                s in 0.0..3.0f64,
            ) {
                let p = VehicleParams::default();
                let sum = [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]];
                let lhs = forward_mix(&ActuatorCommand::new(sum), &p).actuated();
                let rhs = forward_mix(&ActuatorCommand::new(a), &p).actuated()
                    + forward_mix(&ActuatorCommand::new(b), &p).actuated() * s;
                prop_assert!((lhs - rhs).amax() < 1e-12);
            }

            #[test]
            fn throttle_map_monotone(t1 in 0.0..1.0f64, t2 in 0.0..1.0f64) {
                let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
                prop_assert!(throttle_to_frequency(lo) <= throttle_to_frequency(hi));
            }

            #[test]
            fn throttle_round_trip(
                t in throttle_fit::deadband_throttle()..(throttle_fit::vertex_throttle() - 1e-6)
            ) {
                let f = throttle_to_frequency(t);
                prop_assert!((frequency_to_throttle(f).unwrap() - t).abs() < 1e-9);
            }

            #[test]
            fn battery_drain_conserves_charge(
                steps in proptest::collection::vec((proptest::array::uniform3(0.0..25.0f64), 1e-4..0.1f64), 1..50)
            ) {
                let p = VehicleParams::default();
                let mut b = Battery::full(380.0);
                let mut integral = 0.0;
                for (f, dt) in &steps {
                    let cmd = ActuatorCommand::new(*f);
                    integral += p.power.current_ma(&cmd) * dt / 3600.0;
                    b.drain(&cmd, *dt, &p.power).unwrap();
                }
                prop_assert!((b.drawn_mah - integral).abs() < 1e-9);
                prop_assert!((b.capacity_mah - b.charge_mah - integral).abs() < 1e-9);
            }
        }
    }
}
