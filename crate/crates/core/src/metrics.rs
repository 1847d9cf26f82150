//! Scalar summaries of a telemetry log.
//!
//! Every metric is a pure function of the log and the reference, so a report
//! recomputed from a saved CSV is identical to the one produced in-run.

use serde::{Deserialize, Serialize};

use crate::error::MetricsError;
use crate::ground::distance_to_polyline;
use crate::mission::Mode;
use crate::telemetry::{TelemetryLog, TelemetryRecord};

/// Extra inputs that are not part of the log.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReference {
    /// Planar reference path for ground runs; empty disables cross-track.
    pub ground_path: Vec<(f64, f64)>,
    /// Position error band for the settling time (m).
    pub settle_tolerance: f64,
}

impl Default for MetricsReference {
    fn default() -> Self {
        Self {
            ground_path: Vec::new(),
            settle_tolerance: 0.01,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeSpan {
    pub mode: Mode,
    pub start: f64,
    pub end: f64,
}

/// Fields are `None` when the log holds no rows they apply to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub samples: usize,
    pub start_time_s: f64,
    pub end_time_s: f64,
    /// Attitude statistics use airborne rows, or all rows if none are airborne.
    pub attitude_samples: usize,
    pub roll_rmse_deg: f64,
    pub pitch_rmse_deg: f64,
    pub roll_max_dev_deg: f64,
    pub pitch_max_dev_deg: f64,
    /// Over airborne rows with a finite 3-D reference.
    pub position_rmse_m: Option<f64>,
    pub position_max_error_m: Option<f64>,
    pub final_position_error_m: Option<f64>,
    /// First time after which the error stays inside the tolerance.
    pub settle_time_s: Option<f64>,
    /// RMSE and worst error over the second half of the referenced span.
    pub steady_state_rmse_m: Option<f64>,
    pub steady_state_max_error_m: Option<f64>,
    /// Over Crawl rows, against the ground path.
    pub cross_track_mean_m: Option<f64>,
    pub cross_track_max_m: Option<f64>,
    pub max_crawl_speed_mps: Option<f64>,
    /// Time of the first Depleted row.
    pub endurance_s: Option<f64>,
    pub battery_used_mah: f64,
    /// Fraction of rows with any module saturated.
    pub saturation_fraction: f64,
    pub mode_timeline: Vec<ModeSpan>,
}

fn rms(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v * v, n + 1));
    (n > 0).then(|| (sum / n as f64).sqrt())
}

fn max_abs(values: impl Iterator<Item = f64>) -> Option<f64> {
    values.map(f64::abs).reduce(f64::max)
}

fn position_error(r: &TelemetryRecord) -> Option<f64> {
    if !r.reference.iter().all(|v| v.is_finite()) {
        return None;
    }
    let d: f64 = (0..3).map(|i| (r.position[i] - r.reference[i]).powi(2)).sum();
    Some(d.sqrt())
}

fn timeline(records: &[TelemetryRecord]) -> Vec<ModeSpan> {
    let mut spans: Vec<ModeSpan> = Vec::new();
    for r in records {
        match spans.last_mut() {
            Some(s) if s.mode == r.mode => s.end = r.t,
            _ => spans.push(ModeSpan {
                mode: r.mode,
                start: r.t,
                end: r.t,
            }),
        }
    }
    spans
}

pub fn compute_metrics(log: &TelemetryLog, reference: &MetricsReference) -> Result<MetricsReport, MetricsError> {
    let rows = &log.records;
    let (first, last) = match (rows.first(), rows.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(MetricsError::EmptyLog),
    };

    let airborne: Vec<&TelemetryRecord> = rows.iter().filter(|r| r.mode.is_airborne()).collect();
    let attitude_rows: Vec<&TelemetryRecord> = if airborne.is_empty() {
        rows.iter().collect()
    } else {
        airborne
    };
    let angle = |i: usize| attitude_rows.iter().map(move |r| r.euler[i].to_degrees());

    let errors: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.mode.is_airborne())
        .filter_map(|r| position_error(r).map(|e| (r.t, e)))
        .collect();
    let settle_time = match errors.iter().rposition(|(_, e)| *e >= reference.settle_tolerance) {
        None => errors.first().map(|(t, _)| *t),
        Some(i) => errors.get(i + 1).map(|(t, _)| *t),
    };
    let tail: Vec<f64> = match (errors.first(), errors.last()) {
        (Some((t0, _)), Some((t1, _))) => {
            let mid = 0.5 * (t0 + t1);
            errors.iter().filter(|(t, _)| *t >= mid).map(|(_, e)| *e).collect()
        }
        _ => Vec::new(),
    };

    let crawl: Vec<&TelemetryRecord> = rows.iter().filter(|r| r.mode == Mode::Crawl).collect();
    let cross: Vec<f64> = if reference.ground_path.len() >= 2 {
        crawl
            .iter()
            .map(|r| distance_to_polyline((r.position[0], r.position[1]), &reference.ground_path))
            .collect()
    } else {
        Vec::new()
    };
    let cross_mean = (!cross.is_empty()).then(|| cross.iter().sum::<f64>() / cross.len() as f64);

    Ok(MetricsReport {
        samples: rows.len(),
        start_time_s: first.t,
        end_time_s: last.t,
        attitude_samples: attitude_rows.len(),
        roll_rmse_deg: rms(angle(0)).unwrap_or(0.0),
        pitch_rmse_deg: rms(angle(1)).unwrap_or(0.0),
        roll_max_dev_deg: max_abs(angle(0)).unwrap_or(0.0),
        pitch_max_dev_deg: max_abs(angle(1)).unwrap_or(0.0),
        position_rmse_m: rms(errors.iter().map(|(_, e)| *e)),
        position_max_error_m: max_abs(errors.iter().map(|(_, e)| *e)),
        final_position_error_m: errors.last().map(|(_, e)| *e),
        settle_time_s: settle_time,
        steady_state_rmse_m: rms(tail.iter().copied()),
        steady_state_max_error_m: max_abs(tail.iter().copied()),
        cross_track_mean_m: cross_mean,
        cross_track_max_m: max_abs(cross.iter().copied()),
        max_crawl_speed_mps: max_abs(crawl.iter().map(|r| r.velocity[0].hypot(r.velocity[1]))),
        endurance_s: rows.iter().find(|r| r.mode == Mode::Depleted).map(|r| r.t),
        battery_used_mah: first.battery_mah - last.battery_mah,
        saturation_fraction: rows.iter().filter(|r| r.saturated.iter().any(|s| *s)).count() as f64 / rows.len() as f64,
        mode_timeline: timeline(rows),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(t: f64, roll_deg: f64, pitch_deg: f64) -> TelemetryRecord {
        TelemetryRecord {
            t,
            position: [0.0, 0.0, 1.0],
            velocity: [0.0; 3],
            euler: [roll_deg.to_radians(), pitch_deg.to_radians(), 0.0],
            omega: [0.0; 3],
            wrench: [0.0; 3],
            mz_cmd: 0.0,
            freq: [0.0; 3],
            throttle: [0.0; 3],
            mode: Mode::Flight,
            battery_mah: 380.0 - t,
            saturated: [false; 3],
            reference: [0.0, 0.0, 1.0],
        }
    }

    fn log_of(recs: Vec<TelemetryRecord>) -> TelemetryLog {
        TelemetryLog { records: recs }
    }

    #[test]
    fn roll_rmse_example() {
        let log = log_of(vec![rec(0.0, 3.0, 0.0), rec(0.1, 4.0, 0.0)]);
        let m = compute_metrics(&log, &MetricsReference::default()).unwrap();
        assert!((m.roll_rmse_deg - 3.5355339).abs() < 1e-6);
        assert!((m.roll_max_dev_deg - 4.0).abs() < 1e-12);
    }

    #[test]
    fn empty_log_is_an_error() {
        assert_eq!(
            compute_metrics(&TelemetryLog::new(), &MetricsReference::default()),
            Err(MetricsError::EmptyLog)
        );
    }

    #[test]
    fn settle_time_and_timeline() {
        let mut recs: Vec<_> = (0..10).map(|i| rec(i as f64, 0.0, 0.0)).collect();
        recs[0].position[0] = 0.05;
        recs[1].position[0] = 0.02;
        recs[2].position[0] = 0.005;
        recs[9].mode = Mode::Depleted;
        let m = compute_metrics(&log_of(recs), &MetricsReference::default()).unwrap();
        assert_eq!(m.settle_time_s, Some(2.0));
        assert_eq!(m.endurance_s, Some(9.0));
        assert_eq!(m.battery_used_mah, 9.0);
        assert_eq!(m.mode_timeline.len(), 2);
        assert_eq!(m.mode_timeline[0].end, 8.0);
        assert_eq!(m.steady_state_max_error_m, Some(0.0));
    }

    #[test]
    fn cross_track_on_crawl_rows() {
        let recs: Vec<_> = (0..5)
            .map(|i| {
                let mut r = rec(i as f64, 0.0, 0.0);
                r.mode = Mode::Crawl;
                r.position = [i as f64 * 0.1, 0.02, 0.0];
                r.velocity = [0.03, 0.04, 0.0];
                r
            })
            .collect();
        let reference = MetricsReference {
            ground_path: vec![(0.0, 0.0), (1.0, 0.0)],
            ..Default::default()
        };
        let m = compute_metrics(&log_of(recs), &reference).unwrap();
        assert!((m.cross_track_mean_m.unwrap() - 0.02).abs() < 1e-12);
        assert!((m.max_crawl_speed_mps.unwrap() - 0.05).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn constant_offset_gives_equal_rmse_and_max(offset in -30.0f64..30.0, n in 1usize..200) {
            let recs = (0..n).map(|i| rec(i as f64 * 0.01, offset, -offset)).collect();
            let m = compute_metrics(&log_of(recs), &MetricsReference::default()).unwrap();
            prop_assert!((m.roll_rmse_deg - offset.abs()).abs() < 1e-9);
            prop_assert!((m.pitch_max_dev_deg - offset.abs()).abs() < 1e-9);
        }
    }
}
