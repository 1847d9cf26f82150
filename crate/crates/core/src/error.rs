use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("matrix is not antisymmetric (|A + A^T| = {0:e})")]
    NonAntisymmetric(f64),
    #[error("Euler extraction at gimbal lock (|cos roll| < 1e-6)")]
    GimbalLock,
    #[error("matrix is not a proper rotation (orthonormality error {0:e})")]
    NotOrthonormal(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ActuationError {
    #[error("allocation matrix is singular (|det| = {0:e})")]
    SingularAllocation(f64),
    #[error("frequency {0} Hz is outside the throttle fit envelope (max {1:.3} Hz)")]
    OutOfEnvelope(f64, f64),
    #[error("battery empty")]
    BatteryEmpty,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("non-finite state after integration at t = {0} s")]
    NonFiniteState(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControlError {
    #[error("desired force is degenerate (|F_des| = {0:e})")]
    DegenerateForce(f64),
    #[error("desired thrust axis is parallel to the sampled yaw axis")]
    AttitudeSingular,
    #[error("thrust {0:e} N is too low for flatness feedforward")]
    ThrustTooLow(f64),
    #[error("allocation failed: {0}")]
    Allocation(#[from] ActuationError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GroundError {
    #[error("target coincides with current position")]
    CoincidentTarget,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrajectoryError {
    #[error("t = {t} s is outside [0, {duration}]")]
    OutOfDomain { t: f64, duration: f64 },
    #[error("invalid trajectory: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MissionError {
    #[error("invalid mode transition {from} -> {to}")]
    InvalidTransition {
        from: crate::mission::Mode,
        to: crate::mission::Mode,
    },
    #[error("self-righting did not finish within {0} s")]
    SelfRightTimeout(f64),
    #[error("phase {index} timed out after {elapsed:.2} s")]
    PhaseTimeout { index: usize, elapsed: f64 },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error(transparent)]
    Control(#[from] ControlError),
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to read config {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("failed to parse config: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("unknown preset '{0}'")]
    UnknownPreset(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("telemetry log is empty")]
    EmptyLog,
    #[error("telemetry parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Errors surfaced by scenario runs.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("simulation diverged: {0}")]
    SimDiverged(#[from] DynamicsError),
    #[error(transparent)]
    Mission(MissionError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<MissionError> for Error {
    fn from(e: MissionError) -> Self {
        match e {
            MissionError::Dynamics(d) => Error::SimDiverged(d),
            other => Error::Mission(other),
        }
    }
}

impl Error {
    /// Process exit code for the scenario runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::SimDiverged(_) => 3,
            _ => 1,
        }
    }
}
