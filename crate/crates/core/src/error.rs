use std::path::PathBuf;

use crate::srvf::Srvf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("degenerate frame {frame}: all landmarks coincide")]
    DegenerateFrame { frame: usize },

    #[error("sequence too short: need at least {min} frames, got {got}")]
    SequenceTooShort { min: usize, got: usize },

    #[error("zero motion: every inter-frame velocity vanishes")]
    ZeroMotion,

    #[error("antipodal point: geodesic distance {theta} is within tolerance of pi")]
    Antipodal { theta: f64 },

    #[error("not on the unit sphere: squared norm {norm_sq}")]
    NotOnSphere { norm_sq: f64 },

    #[error("karcher mean did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        last: Box<Srvf>,
    },

    #[error("no interior peak: detected peak at frame {index}")]
    NoInteriorPeak { index: usize },

    #[error("incoherent initial configuration: init frames differ by {max_diff}")]
    IncoherentInit { max_diff: f64 },

    #[error("discontinuous transition chain at motion {index}: {end} does not lead into {start}")]
    BrokenChain {
        index: usize,
        end: String,
        start: String,
    },

    #[error("unknown expression label '{0}'")]
    UnknownLabel(String),

    #[error("singular least-squares system (rank {rank} < {modes}); use ridge > 0")]
    SingularSystem { rank: usize, modes: usize },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::ShapeMismatch(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures that come from the filesystem rather than from the data.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}
