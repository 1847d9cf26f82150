//! Fixed-schema telemetry log with a lossless CSV encoding.
//!
//! Floats are written in Rust's shortest round-trip form (`{:?}`), so a parsed log
//! is bit-identical to the one that was written.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::MetricsError;
use crate::mission::Mode;

/// Column names, in order.
pub const COLUMNS: [&str; 31] = [
    "t",
    "x",
    "y",
    "z",
    "vx",
    "vy",
    "vz",
    "roll",
    "pitch",
    "yaw",
    "p",
    "q",
    "r",
    "u1",
    "u2",
    "u3",
    "mz_cmd",
    "f1",
    "f2",
    "f3",
    "thr1",
    "thr2",
    "thr3",
    "mode",
    "battery_mah",
    "sat1",
    "sat2",
    "sat3",
    "xr",
    "yr",
    "zr",
];

/// One row. Angles in rad, rates in rad/s, forces in N, torques in N m,
/// frequencies in Hz. `reference` is NaN when no reference is active.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TelemetryRecord {
    pub t: f64,
    pub position: [f64; 3],
    pub velocity: [f64; 3],
    /// roll, pitch, yaw
    pub euler: [f64; 3],
    pub omega: [f64; 3],
    /// Collective thrust, roll torque, pitch torque.
    pub wrench: [f64; 3],
    /// Yaw torque requested by the controller and dropped.
    pub mz_cmd: f64,
    pub freq: [f64; 3],
    pub throttle: [f64; 3],
    pub mode: Mode,
    /// Remaining charge.
    pub battery_mah: f64,
    pub saturated: [bool; 3],
    pub reference: [f64; 3],
}

impl TelemetryRecord {
    fn write_row(&self, out: &mut String) {
        let mut w = |v: f64| {
            let _ = write!(out, "{v:?},");
        };
        w(self.t);
        self.position.iter().for_each(|v| w(*v));
        self.velocity.iter().for_each(|v| w(*v));
        self.euler.iter().for_each(|v| w(*v));
        self.omega.iter().for_each(|v| w(*v));
        self.wrench.iter().for_each(|v| w(*v));
        w(self.mz_cmd);
        self.freq.iter().for_each(|v| w(*v));
        self.throttle.iter().for_each(|v| w(*v));
        let _ = write!(out, "{},{:?},", self.mode, self.battery_mah);
        for s in self.saturated {
            out.push_str(if s { "1," } else { "0," });
        }
        let [x, y, z] = self.reference;
        let _ = writeln!(out, "{x:?},{y:?},{z:?}");
    }

    fn parse_row(line: &str, lineno: usize) -> Result<Self, MetricsError> {
        let err = |msg: String| MetricsError::Parse { line: lineno, msg };
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != COLUMNS.len() {
            return Err(err(format!(
                "expected {} columns, found {}",
                COLUMNS.len(),
                cells.len()
            )));
        }
        let num = |i: usize| -> Result<f64, MetricsError> {
            cells[i]
                .parse::<f64>()
                .map_err(|e| err(format!("column {}: {e}", COLUMNS[i])))
        };
        let tri = |i: usize| -> Result<[f64; 3], MetricsError> { Ok([num(i)?, num(i + 1)?, num(i + 2)?]) };
        let flag = |i: usize| -> Result<bool, MetricsError> {
            match cells[i] {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(err(format!("column {}: bad flag {other:?}", COLUMNS[i]))),
            }
        };
        Ok(Self {
            t: num(0)?,
            position: tri(1)?,
            velocity: tri(4)?,
            euler: tri(7)?,
            omega: tri(10)?,
            wrench: tri(13)?,
            mz_cmd: num(16)?,
            freq: tri(17)?,
            throttle: tri(20)?,
            mode: cells[23].parse().map_err(err)?,
            battery_mah: num(24)?,
            saturated: [flag(25)?, flag(26)?, flag(27)?],
            reference: tri(28)?,
        })
    }
}

/// Time-ordered records.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TelemetryLog {
    pub records: Vec<TelemetryRecord>,
}

impl TelemetryLog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a record. Time must be strictly increasing.
    pub fn push(&mut self, rec: TelemetryRecord) {
        debug_assert!(self.records.last().is_none_or(|last| rec.t > last.t));
        self.records.push(rec);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TelemetryRecord> {
        self.records.last()
    }

    pub fn header() -> String {
        COLUMNS.join(",")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 + self.records.len() * 300);
        out.push_str(&Self::header());
        out.push('\n');
        for r in &self.records {
            r.write_row(&mut out);
        }
        out
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(self.to_csv().as_bytes())
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_csv())
    }

    pub fn read_csv<R: BufRead>(reader: R) -> Result<Self, MetricsError> {
        let mut lines = reader.lines();
        let header = match lines.next() {
            Some(Ok(h)) => h,
            Some(Err(e)) => {
                return Err(MetricsError::Parse {
                    line: 1,
                    msg: e.to_string(),
                })
            }
            None => return Err(MetricsError::EmptyLog),
        };
        if header.trim_end() != Self::header() {
            return Err(MetricsError::Parse {
                line: 1,
                msg: "header does not match the telemetry schema".into(),
            });
        }
        let mut log = Self::new();
        for (i, line) in lines.enumerate() {
            let line = line.map_err(|e| MetricsError::Parse {
                line: i + 2,
                msg: e.to_string(),
            })?;
            if line.is_empty() {
                continue;
            }
            let rec = TelemetryRecord::parse_row(&line, i + 2)?;
            if log.last().is_some_and(|last| rec.t <= last.t) {
                return Err(MetricsError::Parse {
                    line: i + 2,
                    msg: "time is not strictly increasing".into(),
                });
            }
            log.records.push(rec);
        }
        Ok(log)
    }

    pub fn load(path: &Path) -> Result<Self, MetricsError> {
        let file = std::fs::File::open(path).map_err(|e| MetricsError::Parse {
            line: 0,
            msg: e.to_string(),
        })?;
        Self::read_csv(std::io::BufReader::new(file))
    }
}
