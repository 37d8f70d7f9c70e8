use std::fmt;

/// Errors raised by mesh construction, the field solvers and the optimizer.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("mesh resolution: {0}")]
    MeshResolution(String),

    #[error(
        "interface spacing {spacing_deg:.6} deg does not divide the rotation step {step_deg:.6} deg; \
         spacing must be {step_deg:.6}/k deg for an integer k"
    )]
    RotationStep { spacing_deg: f64, step_deg: f64 },

    #[error("unknown region id {0}")]
    UnknownRegion(u8),

    #[error("unknown material id {0}")]
    UnknownMaterial(u8),

    #[error("invalid material data: {0}")]
    Material(String),

    #[error("newton iteration did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NewtonDivergence { iterations: usize, residual: f64 },

    #[error("linear solver failed: {0}")]
    LinearSolver(String),

    #[error("torque unreachable at sampled currents: target {target:.4} N·m, table maximum {max:.4} N·m")]
    TorqueUnreachable { target: f64, max: f64 },

    #[error("current angle search did not converge; best angle {best_angle:.6} rad with torque {best_torque:.6} N·m")]
    AngleSearch { best_angle: f64, best_torque: f64 },

    #[error("MTPA table is not monotone: torque {torque:.6} N·m at {current:.4} A does not exceed the previous sample")]
    NonMonotoneTable { current: f64, torque: f64 },

    #[error("drive cycle contains no motoring samples")]
    NoMotoringSamples,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// Wraps an error with the operating point or iteration it came from.
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn context(self, context: impl fmt::Display) -> Self {
        Error::Context {
            context: context.to_string(),
            source: Box::new(self),
        }
    }
}

/// Adds lazily-built context to results.
pub trait ResultExt<T> {
    fn with_context<C: fmt::Display>(self, f: impl FnOnce() -> C) -> Result<T>;
}

impl<T> ResultExt<T> for Result<T> {
    fn with_context<C: fmt::Display>(self, f: impl FnOnce() -> C) -> Result<T> {
        self.map_err(|e| e.context(f()))
    }
}
