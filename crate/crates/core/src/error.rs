use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("{what} needs at least {min} elements, got {got}")]
    TooShort {
        what: &'static str,
        min: usize,
        got: usize,
    },

    #[error("sample size {0} outside the supported range [3, 5000]")]
    SampleSize(usize),

    #[error("zero variance in {0}")]
    ZeroVariance(String),

    #[error("zero-norm segment vector at k = {0}")]
    ZeroNorm(usize),

    #[error("degenerate scale constant c = {c:e} at k = {index}")]
    DegenerateScale { index: usize, c: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("rule list is empty")]
    EmptyRules,

    #[error("least-squares system could not be solved")]
    Singular,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for failures of the filesystem rather than of the data.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}
