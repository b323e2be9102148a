use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the surface pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("non-finite coordinate")]
    NonFinite,

    #[error("empty mesh")]
    EmptyMesh,

    #[error("invalid triangle {triangle}: {reason}")]
    InvalidTriangle { triangle: usize, reason: String },

    #[error("non-manifold input: {0}")]
    NonManifold(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("patch has no boundary loop")]
    NoBoundary,

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("patch with {0} triangle(s) cannot be split further")]
    PatchTooSmall(usize),

    #[error("linear solver did not converge (residual {residual:e})")]
    SolverFailed { residual: f64 },

    #[error("point ({u}, {v}) lies outside the parametric domain")]
    LocateFailed { u: f64, v: f64 },

    #[error("boundary loops intersect in the parameter plane")]
    BoundaryIntersection,

    #[error("inconsistent patch boundaries: {0}")]
    InconsistentBoundary(String),

    #[error("output check failed: {0}")]
    OutputCheck(String),

    #[error("patch {patch}: {source}")]
    Patch {
        patch: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_patch(self, patch: usize) -> Self {
        match self {
            e @ Error::Patch { .. } => e,
            e => Error::Patch {
                patch,
                source: Box::new(e),
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
