use std::path::PathBuf;

/// Errors produced by the simulator, codec and experiment harness.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("core index {core} out of range for {cores} cores")]
    CoreOutOfRange { core: usize, cores: usize },

    #[error(
        "symbol window of {window_s:e} s cannot hold the delay spread {spread_s:e} s plus one pulse width {pulse_s:e} s"
    )]
    WindowOverlap {
        window_s: f64,
        spread_s: f64,
        pulse_s: f64,
    },

    #[error("degenerate variance: correlation undefined for a constant sequence")]
    DegenerateVariance,

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("index {index} out of range for size {size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("zero vector: cosine similarity undefined")]
    ZeroVector,

    #[error("byte 0x{0:02x} is not 7-bit ASCII")]
    NonAscii(u8),

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("unsupported file version {0}")]
    UnsupportedVersion(String),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn parse(line: usize, reason: impl Into<String>) -> Self {
        Error::Parse {
            line,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by user-supplied configuration or input files
    /// rather than by a failure while running.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. }
                | Error::Config(_)
                | Error::Parse { .. }
                | Error::UnsupportedVersion(_)
        )
    }
}
