//! Analytic reference trajectories with derivatives up to jerk.

use serde::{Deserialize, Serialize};

use crate::error::TrajectoryError;
use crate::geom::Vec3;
use crate::se3::FlatTarget;

/// Declarative trajectory description, as found in scenario files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TrajectorySpec {
    Hover {
        position: [f64; 3],
        duration: f64,
    },
    /// Rest-to-rest minimum-jerk line.
    Line {
        start: [f64; 3],
        end: [f64; 3],
        duration: f64,
    },
    /// Horizontal circle starting at angle 0.
    Circle {
        center: [f64; 3],
        radius: f64,
        angular_rate: f64,
        duration: f64,
    },
    /// Minimum-jerk blends between consecutive points, resting at each.
    Waypoints {
        points: Vec<[f64; 3]>,
        durations: Vec<f64>,
    },
    /// Approach at cruise altitude, climb over an obstacle, descend back,
    /// continue.
    ObstacleCross {
        start: [f64; 3],
        length: f64,
        cruise_altitude: f64,
        obstacle_height: f64,
        clearance: f64,
        /// Obstacle position as a fraction of `length`, in (0, 1).
        obstacle_at: f64,
        /// Duration of each of the four legs (s).
        segment_duration: f64,
    },
}

impl TrajectorySpec {
    pub fn build(&self) -> Result<Trajectory, TrajectoryError> {
        Trajectory::new(self)
    }

    pub fn duration(&self) -> f64 {
        match self {
            TrajectorySpec::Hover { duration, .. }
            | TrajectorySpec::Line { duration, .. }
            | TrajectorySpec::Circle { duration, .. } => *duration,
            TrajectorySpec::Waypoints { durations, .. } => durations.iter().sum(),
            TrajectorySpec::ObstacleCross { segment_duration, .. } => 4.0 * segment_duration,
        }
    }
}

/// Minimum-jerk blend `s(tau) = 10 tau^3 - 15 tau^4 + 6 tau^5` and its
/// first three derivatives with respect to tau.
pub fn min_jerk_profile(tau: f64) -> [f64; 4] {
    let t = tau.clamp(0.0, 1.0);
    let t2 = t * t;
    let t3 = t2 * t;
    [
        t3 * (10.0 - 15.0 * t + 6.0 * t2),
        30.0 * t2 * (1.0 - 2.0 * t + t2),
        60.0 * t * (1.0 - 3.0 * t + 2.0 * t2),
        60.0 - 360.0 * t + 360.0 * t2,
    ]
}

#[derive(Clone, Debug, PartialEq)]
enum Piece {
    Hold(Vec3),
    MinJerk { from: Vec3, to: Vec3, duration: f64 },
    Circle { center: Vec3, radius: f64, rate: f64 },
}

impl Piece {
    fn eval(&self, t: f64) -> [Vec3; 4] {
        match self {
            Piece::Hold(p) => [*p, Vec3::zeros(), Vec3::zeros(), Vec3::zeros()],
            Piece::MinJerk { from, to, duration } => {
                let d = to - from;
                let [s, ds, dds, ddds] = min_jerk_profile(t / duration);
                [
                    from + d * s,
                    d * (ds / duration),
                    d * (dds / duration.powi(2)),
                    d * (ddds / duration.powi(3)),
                ]
            }
            Piece::Circle { center, radius, rate } => {
                let (s, c) = (rate * t).sin_cos();
                let r = *radius;
                let w = *rate;
                [
                    center + Vec3::new(r * c, r * s, 0.0),
                    Vec3::new(-r * w * s, r * w * c, 0.0),
                    Vec3::new(-r * w * w * c, -r * w * w * s, 0.0),
                    Vec3::new(r * w.powi(3) * s, -r * w.powi(3) * c, 0.0),
                ]
            }
        }
    }
}

/// A compiled, piecewise-analytic reference.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    /// (start time, duration, piece)
    pieces: Vec<(f64, f64, Piece)>,
    duration: f64,
}

fn positive(name: &str, x: f64) -> Result<(), TrajectoryError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(TrajectoryError::Invalid(format!("{name} must be > 0 (got {x})")))
    }
}

impl Trajectory {
    pub fn new(spec: &TrajectorySpec) -> Result<Self, TrajectoryError> {
        let mut pieces = Vec::new();
        match spec {
            TrajectorySpec::Hover { position, duration } => {
                positive("duration", *duration)?;
                pieces.push((*duration, Piece::Hold(Vec3::from(*position))));
            }
            TrajectorySpec::Line { start, end, duration } => {
                positive("duration", *duration)?;
                pieces.push((
                    *duration,
                    Piece::MinJerk {
                        from: Vec3::from(*start),
                        to: Vec3::from(*end),
                        duration: *duration,
                    },
                ));
            }
            TrajectorySpec::Circle {
                center,
                radius,
                angular_rate,
                duration,
            } => {
                positive("duration", *duration)?;
                positive("radius", *radius)?;
                pieces.push((
                    *duration,
                    Piece::Circle {
                        center: Vec3::from(*center),
                        radius: *radius,
                        rate: *angular_rate,
                    },
                ));
            }
            TrajectorySpec::Waypoints { points, durations } => {
                if points.len() < 2 || durations.len() != points.len() - 1 {
                    return Err(TrajectoryError::Invalid(
                        "waypoints need >= 2 points and one duration per segment".into(),
                    ));
                }
                for (w, d) in points.windows(2).zip(durations) {
                    positive("segment duration", *d)?;
                    pieces.push((
                        *d,
                        Piece::MinJerk {
                            from: Vec3::from(w[0]),
                            to: Vec3::from(w[1]),
                            duration: *d,
                        },
                    ));
                }
            }
            TrajectorySpec::ObstacleCross { .. } => {
                let wp = obstacle_cross_waypoints(spec)?;
                return Trajectory::new(&wp);
            }
        }
        let mut t0 = 0.0;
        let pieces: Vec<_> = pieces
            .into_iter()
            .map(|(d, p)| {
                let out = (t0, d, p);
                t0 += d;
                out
            })
            .collect();
        Ok(Self { pieces, duration: t0 })
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    /// Reference at `t`. The yaw fields are left at zero for the caller.
    pub fn sample(&self, t: f64) -> Result<FlatTarget, TrajectoryError> {
        if !(0.0..=self.duration).contains(&t) {
            return Err(TrajectoryError::OutOfDomain {
                t,
                duration: self.duration,
            });
        }
        let idx = self.pieces.iter().rposition(|(start, _, _)| *start <= t).unwrap_or(0);
        let (start, dur, piece) = &self.pieces[idx];
        let [p, v, a, j] = piece.eval((t - start).min(*dur));
        Ok(FlatTarget {
            position: p,
            velocity: v,
            acceleration: a,
            jerk: j,
            yaw_sample: 0.0,
            yaw_rate_sample: 0.0,
        })
    }

    /// Like [`Trajectory::sample`] but holds the end point past the end.
    pub fn sample_clamped(&self, t: f64) -> FlatTarget {
        match self.sample(t.clamp(0.0, self.duration)) {
            Ok(mut s) if t > self.duration => {
                s.velocity = Vec3::zeros();
                s.acceleration = Vec3::zeros();
                s.jerk = Vec3::zeros();
                s
            }
            Ok(s) => s,
            Err(_) => unreachable!("clamped time is inside the domain"),
        }
    }
}

/// Expands the obstacle-crossing profile into waypoints.
pub fn obstacle_cross_waypoints(spec: &TrajectorySpec) -> Result<TrajectorySpec, TrajectoryError> {
    let TrajectorySpec::ObstacleCross {
        start,
        length,
        cruise_altitude,
        obstacle_height,
        clearance,
        obstacle_at,
        segment_duration,
    } = spec
    else {
        return Err(TrajectoryError::Invalid("not an obstacle-cross spec".into()));
    };
    positive("length", *length)?;
    positive("cruise_altitude", *cruise_altitude)?;
    positive("segment_duration", *segment_duration)?;
    if !(0.0 < *obstacle_at && *obstacle_at < 1.0) {
        return Err(TrajectoryError::Invalid("obstacle_at must be in (0, 1)".into()));
    }
    let s = Vec3::from(*start);
    let top = (obstacle_height + clearance).max(*cruise_altitude);
    let x_obs = s.x + length * obstacle_at;
    let half_width = 0.5 * length * obstacle_at.min(1.0 - obstacle_at);
    let points = vec![
        [s.x, s.y, *cruise_altitude],
        [x_obs - half_width, s.y, *cruise_altitude],
        [x_obs, s.y, top],
        [x_obs + half_width, s.y, *cruise_altitude],
        [s.x + length, s.y, *cruise_altitude],
    ];
    Ok(TrajectorySpec::Waypoints {
        points,
        durations: vec![*segment_duration; 4],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle() -> Trajectory {
        TrajectorySpec::Circle {
            center: [0.0, 0.0, 1.0],
            radius: 0.5,
            angular_rate: 1.0,
            duration: 20.0,
        }
        .build()
        .unwrap()
    }

    #[test]
    fn hover_has_zero_derivatives() {
        let tr = TrajectorySpec::Hover {
            position: [1.0, 2.0, 3.0],
            duration: 5.0,
        }
        .build()
        .unwrap();
        for t in [0.0, 1.3, 5.0] {
            let s = tr.sample(t).unwrap();
            assert_eq!(s.position, Vec3::new(1.0, 2.0, 3.0));
            assert_eq!(s.velocity + s.acceleration + s.jerk, Vec3::zeros());
        }
    }

    #[test]
    fn circle_centripetal() {
        let tr = circle();
        for t in [0.0, 0.7, 3.3, 11.0] {
            let s = tr.sample(t).unwrap();
            assert!((s.acceleration.norm() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn min_jerk_peak_speed() {
        let tr = TrajectorySpec::Line {
            start: [0.0, 0.0, 1.0],
            end: [2.0, 0.0, 1.0],
            duration: 4.0,
        }
        .build()
        .unwrap();
        assert_eq!(tr.sample(0.0).unwrap().velocity, Vec3::zeros());
        assert_eq!(tr.sample(4.0).unwrap().velocity, Vec3::zeros());
        let mid = tr.sample(2.0).unwrap();
        assert!((mid.velocity.x - 1.875 * 2.0 / 4.0).abs() < 1e-12);
        assert_eq!(tr.sample(4.0).unwrap().position, Vec3::new(2.0, 0.0, 1.0));
    }

    #[test]
    fn out_of_domain() {
        let tr = circle();
        assert!(matches!(tr.sample(-0.1), Err(TrajectoryError::OutOfDomain { .. })));
        assert!(matches!(tr.sample(20.1), Err(TrajectoryError::OutOfDomain { .. })));
        let held = tr.sample_clamped(25.0);
        assert_eq!(held.velocity, Vec3::zeros());
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(TrajectorySpec::Waypoints {
            points: vec![[0.0; 3]],
            durations: vec![],
        }
        .build()
        .is_err());
        assert!(TrajectorySpec::Hover {
            position: [0.0; 3],
            duration: 0.0
        }
        .build()
        .is_err());
    }

    fn finite_difference_check(tr: &Trajectory, times: &[f64]) {
        let h = 1e-4;
        for &t in times {
            let s = tr.sample(t).unwrap();
            let sp = tr.sample(t + h).unwrap();
            let sm = tr.sample(t - h).unwrap();
            let v_fd = (sp.position - sm.position) / (2.0 * h);
            let a_fd = (sp.position - 2.0 * s.position + sm.position) / (h * h);
            let j_fd = (sp.acceleration - sm.acceleration) / (2.0 * h);
            assert!((v_fd - s.velocity).amax() < 1e-6, "velocity at t = {t}");
            assert!((a_fd - s.acceleration).amax() < 1e-4, "acceleration at t = {t}");
            assert!((j_fd - s.jerk).amax() < 1e-5, "jerk at t = {t}");
        }
    }

    #[test]
    fn derivatives_consistent_with_finite_differences() {
        finite_difference_check(&circle(), &[0.5, 1.0, 7.7, 19.0]);
        let wp = TrajectorySpec::Waypoints {
            points: vec![[0.0, 0.0, 0.5], [1.0, 0.5, 1.0], [2.0, -0.5, 0.8]],
            durations: vec![3.0, 2.5],
        }
        .build()
        .unwrap();
        finite_difference_check(&wp, &[0.3, 1.5, 2.9, 3.2, 4.0, 5.3]);
    }

    #[test]
    fn waypoint_joins_are_c2() {
        let wp = TrajectorySpec::Waypoints {
            points: vec![[0.0, 0.0, 0.5], [1.0, 0.5, 1.0], [2.0, -0.5, 0.8]],
            durations: vec![3.0, 2.5],
        }
        .build()
        .unwrap();
        let e = 1e-9;
        let before = wp.sample(3.0 - e).unwrap();
        let after = wp.sample(3.0 + e).unwrap();
        assert!((before.position - after.position).amax() < 1e-8);
        assert!((before.velocity - after.velocity).amax() < 1e-7);
        assert!((before.acceleration - after.acceleration).amax() < 1e-6);
    }

    #[test]
    fn obstacle_profile_clears_obstacle() {
        let spec = TrajectorySpec::ObstacleCross {
            start: [0.0, 0.0, 0.0],
            length: 3.0,
            cruise_altitude: 0.5,
            obstacle_height: 0.8,
            clearance: 0.2,
            obstacle_at: 0.5,
            segment_duration: 3.0,
        };
        let tr = spec.build().unwrap();
        assert_eq!(tr.duration(), spec.duration());
        let peak = (0..=1200)
            .map(|i| tr.sample(i as f64 * 0.01).unwrap().position.z)
            .fold(f64::MIN, f64::max);
        assert!((peak - 1.0).abs() < 1e-12);
        assert!((tr.sample(12.0).unwrap().position.x - 3.0).abs() < 1e-12);
    }
}
