use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("level-set gradient vanishes at ({x}, {y}, {z})")]
    SingularPoint { x: f64, y: f64, z: f64 },

    #[error("projection onto the surface did not converge after {iterations} iterations (|phi| = {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("point is off the surface at t = {time}: |phi| = {residual:e}")]
    OffSurface { time: f64, residual: f64 },

    #[error("operation requires a {expected} surface, got {found}")]
    WrongSurfaceKind {
        expected: &'static str,
        found: &'static str,
    },

    #[error("triangle {triangle} is degenerate (area {area:e})")]
    DegenerateTriangle { triangle: usize, area: f64 },

    #[error("mesh is not a closed admissible triangulation: {0}")]
    InvalidMesh(String),

    #[error("hierarchy level {level} out of range (levels: {levels})")]
    LevelOutOfRange { level: usize, levels: usize },

    #[error("length mismatch: expected {expected}, got {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("no quadrature rule of degree {0}")]
    UnsupportedDegree(usize),

    #[error("matrix is singular")]
    SingularMatrix,

    #[error("iterative solver broke down after {iterations} iterations (residual {residual:e})")]
    IterativeBreakdown { iterations: usize, residual: f64 },

    #[error("right-hand side is incompatible with the constant kernel (1^T b = {sum:e})")]
    IncompatibleRhs { sum: f64 },

    #[error("Newton iteration did not converge in {iterations} iterations (residual {residual:e})")]
    NewtonDivergence { iterations: usize, residual: f64 },

    #[error("step {step} (t = {time}) failed: {source}")]
    Step {
        step: usize,
        time: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("EOC level {level} failed: {source}")]
    Level {
        level: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("error of exactly zero at row {0} makes the EOC undefined")]
    ZeroError(usize),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid value for `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn validation(field: &str, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.to_string(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for configuration problems (parse or validation), as opposed to
    /// numerical failures.
    pub fn is_config_error(&self) -> bool {
        match self {
            Error::Parse { .. } | Error::Validation { .. } => true,
            Error::Level { source, .. } => source.is_config_error(),
            _ => false,
        }
    }
}
