//! Frames, rotations and SO(3) helpers.
//!
//! Three frames are used throughout the crate: the world frame `W` (z up),
//! the body frame `B`, and the intermediate frame `C` obtained from `W` by a
//! yaw rotation only.
//!
//! Euler angles follow the Z-X-Y convention
//!
//! ```text
//! R = Rz(yaw) * Rx(roll) * Ry(pitch)
//! ```
//!
//! i.e. yaw is applied first, then roll about the rotated X axis, then pitch
//! about the resulting Y axis. `R` maps body coordinates to world
//! coordinates, so its columns are `X_B`, `Y_B`, `Z_B` expressed in `W`.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::GeomError;

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Tolerance used to accept a matrix as antisymmetric in [`vee`].
pub const ANTISYMMETRY_TOL: f64 = 1e-9;
/// `|cos(roll)|` below this is treated as gimbal lock.
pub const GIMBAL_LOCK_TOL: f64 = 1e-6;

/// Skew-symmetric matrix such that `hat(v) * w == v.cross(&w)`.
pub fn hat(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Inverse of [`hat`]. Rejects matrices that are not antisymmetric.
pub fn vee(a: &Mat3) -> Result<Vec3, GeomError> {
    let asym = (a + a.transpose()).norm();
    if !(asym < ANTISYMMETRY_TOL) {
        return Err(GeomError::NonAntisymmetric(asym));
    }
    Ok(vee_unchecked(a))
}

/// Extracts the axial vector of the antisymmetric part of `a`.
pub(crate) fn vee_unchecked(a: &Mat3) -> Vec3 {
    Vec3::new(
        0.5 * (a[(2, 1)] - a[(1, 2)]),
        0.5 * (a[(0, 2)] - a[(2, 0)]),
        0.5 * (a[(1, 0)] - a[(0, 1)]),
    )
}

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

/// `X_C`, the x axis of the yaw-only frame.
pub fn yaw_frame_x(yaw: f64) -> Vec3 {
    Vec3::new(yaw.cos(), yaw.sin(), 0.0)
}

pub fn rot_x(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    Mat3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

pub fn rot_y(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    Mat3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

pub fn rot_z(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Roll, pitch and yaw in radians, Z-X-Y order.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EulerZxy {
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

impl EulerZxy {
    pub fn new(roll: f64, pitch: f64, yaw: f64) -> Self {
        Self { roll, pitch, yaw }
    }

    pub fn to_rotation(&self) -> Rotation {
        euler_zxy_to_rotation(self)
    }
}

/// A proper rotation matrix, body to world.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation(Mat3);

impl Rotation {
    pub fn identity() -> Self {
        Rotation(Mat3::identity())
    }

    /// Wraps a matrix without checking it. Callers must guarantee
    /// orthonormality (see [`Rotation::orthonormalized`] otherwise).
    pub fn from_matrix_unchecked(m: Mat3) -> Self {
        Rotation(m)
    }

    /// Accepts `m` only if it is orthonormal with determinant +1.
    pub fn try_from_matrix(m: Mat3) -> Result<Self, GeomError> {
        let r = Rotation(m);
        let err = r.orthonormality_error();
        if err < 1e-9 && (m.determinant() - 1.0).abs() < 1e-9 {
            Ok(r)
        } else {
            Err(GeomError::NotOrthonormal(err))
        }
    }

    pub fn from_columns(x: &Vec3, y: &Vec3, z: &Vec3) -> Self {
        Rotation(Mat3::from_columns(&[*x, *y, *z]))
    }

    pub fn yaw(yaw: f64) -> Self {
        Rotation(rot_z(yaw))
    }

    /// Projects an almost-orthonormal matrix back onto SO(3) by
    /// Gram-Schmidt on the columns, keeping the z column direction.
    pub fn orthonormalized(m: &Mat3) -> Self {
        let z = m.column(2).normalize();
        let x_raw = m.column(0).into_owned();
        let x = (x_raw - z * z.dot(&x_raw)).normalize();
        let y = z.cross(&x);
        Rotation::from_columns(&x, &y, &z)
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn transpose(&self) -> Rotation {
        Rotation(self.0.transpose())
    }

    pub fn x_axis(&self) -> Vec3 {
        self.0.column(0).into_owned()
    }

    pub fn y_axis(&self) -> Vec3 {
        self.0.column(1).into_owned()
    }

    pub fn z_axis(&self) -> Vec3 {
        self.0.column(2).into_owned()
    }

    /// `max |R^T R - I|` over all entries.
    pub fn orthonormality_error(&self) -> f64 {
        (self.0.transpose() * self.0 - Mat3::identity()).amax()
    }

    pub fn to_euler(&self) -> Result<EulerZxy, GeomError> {
        rotation_to_euler_zxy(self)
    }

    /// Tilt of the body z axis away from world z, in radians.
    pub fn tilt(&self) -> f64 {
        self.0[(2, 2)].clamp(-1.0, 1.0).acos()
    }

    /// Rotation angle of `self` (in `[0, pi]`).
    pub fn angle(&self) -> f64 {
        ((self.0.trace() - 1.0) * 0.5).clamp(-1.0, 1.0).acos()
    }

    /// Logarithm map: the rotation vector `w` with `exp(hat(w)) == self`.
    pub fn log(&self) -> Vec3 {
        let angle = self.angle();
        if angle < 1e-9 {
            return vee_unchecked(&self.0);
        }
        if PI - angle < 1e-6 {
            // Near pi the antisymmetric part vanishes; recover the axis from
            // the symmetric part, R = 2 n n^T - I.
            let b = (self.0 + Mat3::identity()) * 0.5;
            let (i, _) = (0..3)
                .map(|i| (i, b[(i, i)]))
                .fold((0, f64::MIN), |acc, x| if x.1 > acc.1 { x } else { acc });
            let mut n = b.column(i).into_owned() / b[(i, i)].max(0.0).sqrt();
            n /= n.norm();
            // Pick the sign consistent with the residual antisymmetric part.
            let w = vee_unchecked(&self.0);
            if w.dot(&n) < 0.0 {
                n = -n;
            }
            return n * angle;
        }
        vee_unchecked(&self.0) * (angle / angle.sin())
    }

    /// Exponential map (Rodrigues).
    pub fn exp(w: &Vec3) -> Rotation {
        let angle = w.norm();
        let k = hat(w);
        if angle < 1e-12 {
            return Rotation::orthonormalized(&(Mat3::identity() + k));
        }
        let a = angle.sin() / angle;
        let b = (1.0 - angle.cos()) / (angle * angle);
        Rotation(Mat3::identity() + k * a + k * k * b)
    }
}

impl std::ops::Mul for Rotation {
    type Output = Rotation;
    fn mul(self, rhs: Rotation) -> Rotation {
        Rotation(self.0 * rhs.0)
    }
}

impl std::ops::Mul<Vec3> for Rotation {
    type Output = Vec3;
    fn mul(self, rhs: Vec3) -> Vec3 {
        self.0 * rhs
    }
}

impl fmt::Display for Rotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// `R = Rz(yaw) * Rx(roll) * Ry(pitch)`.
pub fn euler_zxy_to_rotation(e: &EulerZxy) -> Rotation {
    Rotation(rot_z(e.yaw) * rot_x(e.roll) * rot_y(e.pitch))
}

/// Inverse of [`euler_zxy_to_rotation`]; roll is returned in `[-pi/2, pi/2]`.
pub fn rotation_to_euler_zxy(r: &Rotation) -> Result<EulerZxy, GeomError> {
    let m = &r.0;
    let roll = m[(2, 1)].clamp(-1.0, 1.0).asin();
    if roll.cos().abs() < GIMBAL_LOCK_TOL {
        return Err(GeomError::GimbalLock);
    }
    let pitch = (-m[(2, 0)]).atan2(m[(2, 2)]);
    let yaw = (-m[(0, 1)]).atan2(m[(1, 1)]);
    Ok(EulerZxy { roll, pitch, yaw })
}

/// Yaw rate implied by body rates for the Z-X-Y convention.
pub fn yaw_rate_from_body_rates(e: &EulerZxy, omega: &Vec3) -> f64 {
    let (sp, cp) = e.pitch.sin_cos();
    let cr = e.roll.cos();
    if cr.abs() < GIMBAL_LOCK_TOL {
        return 0.0;
    }
    (-sp * omega.x + cp * omega.z) / cr
}

/// Ground-truth rigid-body state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VehicleState {
    /// Position in `W` (m).
    pub position: Vec3,
    /// Velocity in `W` (m/s).
    pub velocity: Vec3,
    pub attitude: Rotation,
    /// Angular rate in `B` (rad/s).
    pub omega: Vec3,
}

impl VehicleState {
    pub fn at_rest(position: Vec3, attitude: Rotation) -> Self {
        Self {
            position,
            velocity: Vec3::zeros(),
            attitude,
            omega: Vec3::zeros(),
        }
    }

    pub fn hovering_at(position: Vec3) -> Self {
        Self::at_rest(position, Rotation::identity())
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().all(|x| x.is_finite())
            && self.velocity.iter().all(|x| x.is_finite())
            && self.omega.iter().all(|x| x.is_finite())
            && self.attitude.0.iter().all(|x| x.is_finite())
    }

    /// Z-X-Y angles of the attitude. Close to gimbal lock, roll is pinned to
    /// +-pi/2 and the remaining angle is folded into yaw.
    pub fn euler(&self) -> EulerZxy {
        match self.attitude.to_euler() {
            Ok(e) => e,
            Err(_) => {
                let m = &self.attitude.0;
                EulerZxy {
                    roll: m[(2, 1)].signum() * PI / 2.0,
                    pitch: 0.0,
                    yaw: m[(1, 0)].atan2(m[(0, 0)]),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &Vec3, b: &Vec3, tol: f64) -> bool {
        (a - b).amax() < tol
    }

    #[test]
    fn hat_examples() {
        assert_eq!(hat(&Vec3::zeros()), Mat3::zeros());
        let h = hat(&Vec3::new(1.0, 2.0, 3.0));
        assert_eq!(h, Mat3::new(0.0, -3.0, 2.0, 3.0, 0.0, -1.0, -2.0, 1.0, 0.0));
        let v = Vec3::new(0.3, -1.1, 2.0);
        assert!(close(&(hat(&v) * v), &Vec3::zeros(), 1e-15));
    }

    #[test]
    fn vee_examples() {
        let v = Vec3::new(1.0, 2.0, 3.0);
        assert_eq!(vee(&hat(&v)).unwrap(), v);
        assert_eq!(vee(&Mat3::zeros()).unwrap(), Vec3::zeros());
        let rz = rot_z(0.2);
        let a = (rz.transpose() - rz) * 0.5;
        let out = vee(&a).unwrap();
        assert!(close(&out, &Vec3::new(0.0, 0.0, -0.2f64.sin()), 1e-15));
        assert!((out.z + 0.19867).abs() < 1e-5);
    }

    #[test]
    fn vee_rejects_symmetric_part() {
        let mut a = hat(&Vec3::new(1.0, 0.0, 0.0));
        a[(0, 1)] += 1e-6;
        assert!(matches!(vee(&a), Err(GeomError::NonAntisymmetric(_))));
    }

    #[test]
    fn euler_examples() {
        let r = euler_zxy_to_rotation(&EulerZxy::default());
        assert_eq!(*r.matrix(), Mat3::identity());
        let r = euler_zxy_to_rotation(&EulerZxy::new(0.0, 0.0, PI / 2.0));
        assert!(close(&(r * Vec3::x()), &Vec3::y(), 1e-15));
    }

    #[test]
    fn euler_composition_order() {
        let e = EulerZxy::new(0.3, -0.4, 1.2);
        let expected = rot_z(1.2) * rot_x(0.3) * rot_y(-0.4);
        assert!((euler_zxy_to_rotation(&e).matrix() - expected).amax() < 1e-15);
    }

    #[test]
    fn gimbal_lock_detected() {
        let r = euler_zxy_to_rotation(&EulerZxy::new(PI / 2.0, 0.3, 0.1));
        assert!(matches!(r.to_euler(), Err(GeomError::GimbalLock)));
    }

    #[test]
    fn yaw_frame_examples() {
        assert_eq!(yaw_frame_x(0.0), Vec3::new(1.0, 0.0, 0.0));
        assert!(close(&yaw_frame_x(PI / 2.0), &Vec3::y(), 1e-15));
        let v = yaw_frame_x(0.3);
        assert!((v.x - 0.95534).abs() < 1e-5 && (v.y - 0.29552).abs() < 1e-5);
        assert!((v.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn wrap_angle_half_open() {
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert_eq!(wrap_angle(0.25), 0.25);
    }

    #[test]
    fn log_exp_inverse_including_half_turn() {
        for w in [
            Vec3::new(0.1, -0.2, 0.3),
            Vec3::new(PI, 0.0, 0.0),
            Vec3::new(0.0, -PI, 0.0),
            Vec3::new(1.0, 1.0, 0.0).normalize() * (PI - 1e-8),
        ] {
            let r = Rotation::exp(&w);
            let back = Rotation::exp(&r.log());
            assert!((back.matrix() - r.matrix()).amax() < 1e-7, "w = {w}");
        }
    }

    #[test]
    fn yaw_rate_matches_finite_difference() {
        let e0 = EulerZxy::new(0.2, -0.3, 0.5);
        let rates = Vec3::new(0.4, -0.7, 0.9); // roll, pitch, yaw rates
        let h = 1e-6;
        let at = |t: f64| {
            euler_zxy_to_rotation(&EulerZxy::new(
                e0.roll + rates.x * t,
                e0.pitch + rates.y * t,
                e0.yaw + rates.z * t,
            ))
        };
        let rd = (at(h).matrix() - at(-h).matrix()) / (2.0 * h);
        let omega = vee_unchecked(&(at(0.0).matrix().transpose() * rd));
        assert!((yaw_rate_from_body_rates(&e0, &omega) - rates.z).abs() < 1e-6);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(10_000))]

            #[test]
            fn euler_round_trip(
                roll in -(PI / 2.0 - 0.01)..(PI / 2.0 - 0.01),
                pitch in -PI..PI,
                yaw in -PI..PI,
            ) {
                let e = EulerZxy::new(roll, pitch, yaw);
                let r = e.to_rotation();
                prop_assert!(r.orthonormality_error() < 1e-9);
                let back = r.to_euler().unwrap();
                prop_assert!(wrap_angle(back.roll - roll).abs() < 1e-9);
                prop_assert!(wrap_angle(back.pitch - pitch).abs() < 1e-9);
                prop_assert!(wrap_angle(back.yaw - yaw).abs() < 1e-9);
            }
        }

        proptest! {
            #[test]
            fn vee_hat_identity(x in -10.0..10.0f64, y in -10.0..10.0f64, z in -10.0..10.0f64) {
                let v = Vec3::new(x, y, z);
                prop_assert_eq!(vee(&hat(&v)).unwrap(), v);
                let a = hat(&v);
                prop_assert_eq!(hat(&vee(&a).unwrap()), a);
                let w = Vec3::new(z, x, -y);
                prop_assert!((hat(&v) * w - v.cross(&w)).amax() < 1e-12);
            }
        }
    }
}
