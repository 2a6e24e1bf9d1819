use std::path::PathBuf;

/// Errors raised across the simulator.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("unknown {side} action label `{label}`")]
    Taxonomy { side: &'static str, label: String },

    #[error("{location}: {message}")]
    Parse { location: String, message: String },

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("estimation failed: {0}")]
    Estimation(String),

    #[error("rating {rating} for ({user}, {item}) outside [0.5, 5.0]")]
    RatingRange { user: String, item: String, rating: f64 },

    #[error("item `{item}` is not present in the catalog")]
    Referential { item: String },

    #[error("sampling failed: {0}")]
    Sampling(String),

    #[error("no template for action `{0}`")]
    Coverage(String),

    #[error("template for `{action}` needs slot {slot} which the action does not carry")]
    Slot { action: String, slot: String },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("{location}: {source}")]
    At {
        location: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }

    pub(crate) fn at(self, location: impl Into<String>) -> Self {
        Error::At {
            location: location.into(),
            source: Box::new(self),
        }
    }

    /// Innermost error once location wrappers are stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::At { source, .. } => source.root(),
            other => other,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
