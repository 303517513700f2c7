use std::path::PathBuf;

/// Error type shared by every module of the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("length mismatch: {what} ({left} vs {right})")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("zero variance: {0}")]
    ZeroVariance(String),

    #[error("optimizer did not converge after {iterations} iterations (best css {best_css})")]
    NonConvergence {
        iterations: usize,
        best_css: f64,
        best_params: Vec<f64>,
    },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("all fits in the order scan failed")]
    ScanFailed,

    #[error("parse error in {path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("frame {index}: {message}")]
    Frame { index: usize, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("image error: {0}")]
    Image(#[from] image::ImageError),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable category, used by the command line front end.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::InvalidModel(_) => "invalid_model",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::InsufficientData(_) => "insufficient_data",
            Error::ZeroVariance(_) => "zero_variance",
            Error::NonConvergence { .. } => "non_convergence",
            Error::Singular(_) => "singular",
            Error::ScanFailed => "scan_failed",
            Error::Parse { .. } => "parse",
            Error::Frame { .. } => "frame",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
            Error::Image(_) => "image",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
