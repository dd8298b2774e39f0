use thiserror::Error;

/// Errors raised anywhere in the simulation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("outside model validity: {0}")]
    OutOfModel(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("drop {index}: {source}")]
    Drop {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("empty sample set")]
    EmptySamples,
}

impl Error {
    /// Short stable identifier, used for machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Geometry(_) => "geometry",
            Error::OutOfModel(_) => "out_of_model",
            Error::Numerical(_) => "numerical",
            Error::Drop { source, .. } => source.kind(),
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Parse(_) => "parse",
            Error::EmptySamples => "empty_samples",
        }
    }

    pub(crate) fn in_drop(self, index: usize) -> Self {
        Error::Drop {
            index,
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
