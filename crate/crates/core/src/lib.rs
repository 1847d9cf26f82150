//! Simulation and control for a tailless vehicle with three flapping-wing
//! modules: allocation, rigid-body dynamics, an SE(3) geometric tracker, a
//! cascaded PID baseline, ground crawling, mission modes and a scenario
//! harness.

// `!(x > 0.0)` is used on purpose: it rejects NaN as well as non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod actuation;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod geom;
pub mod ground;
pub mod metrics;
pub mod mission;
pub mod pid;
pub mod scenario;
pub mod se3;
pub mod telemetry;
pub mod trajectory;
