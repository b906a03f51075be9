use std::path::PathBuf;

/// Every failure the simulator can report.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("invalid vortex spec: {0}")]
    Spec(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value after {substep} in step {step}")]
    NonFinite { step: usize, substep: &'static str },

    #[error("invalid evolution config: {0}")]
    Evolution(String),

    #[error("oracle regime rejected: {0}")]
    Regime(String),

    #[error("zero-norm field")]
    ZeroNorm,

    #[error("no fringes: profile is flat")]
    NoFringes,

    #[error("{}", match line { Some(l) => format!("config error (line {l}): {msg}"), None => format!("config error: {msg}") })]
    Config { line: Option<usize>, msg: String },

    #[error("snapshot format error: {0}")]
    Format(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config {
            line: None,
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
