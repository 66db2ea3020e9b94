use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("validation: {0}")]
    Validation(String),

    #[error("requirement `{requirement}` references unknown client `{client}`")]
    UnknownClient { requirement: String, client: String },

    #[error("unknown requirement `{0}`")]
    UnknownRequirement(String),

    #[error("contradictory interactions: {0}")]
    Contradiction(String),

    /// One cycle of the implication graph, listed in traversal order.
    #[error("implication cycle: {}", .0.join(" -> "))]
    Cycle(Vec<String>),

    #[error("{what} has {size} decision variables, above the exact-search limit of {limit}; supply a partition and use split-and-combine")]
    SizeGuard {
        what: String,
        size: usize,
        limit: usize,
    },

    #[error("partition: {0}")]
    Partition(String),

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("domain: {0}")]
    Domain(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable, machine-readable category used on the CLI and across the C ABI.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Validation(_) | Error::UnknownClient { .. } | Error::UnknownRequirement(_) => {
                "validation"
            }
            Error::Contradiction(_) => "contradiction",
            Error::Cycle(_) => "cycle",
            Error::SizeGuard { .. } => "size_guard",
            Error::Partition(_) => "partition",
            Error::Resource(_) => "resource",
            Error::Domain(_) => "domain",
            Error::Parse { .. } => "parse",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }

    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }
}
