use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed or inconsistent observations.
    #[error("data error: {0}")]
    Data(String),

    /// Some cause/stress cell has no failures, so the likelihood has no finite maximum.
    #[error("likelihood not identifiable: {0}")]
    NonIdentifiable(String),

    #[error("solver failed: {0}")]
    Solver(String),

    #[error("sampler initialisation failed: {0}")]
    Initialisation(String),

    /// Every Monte Carlo replicate at a design point was discarded.
    #[error("criterion unavailable at {0}")]
    Criterion(String),

    #[error("invalid configuration ({module}): {message}")]
    Config { module: &'static str, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub(crate) fn config(module: &'static str, msg: impl Into<String>) -> Self {
        Error::Config {
            module,
            message: msg.into(),
        }
    }
}
