use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid group: {0}")]
    Group(String),

    #[error("subgroup {inner:?} is not contained in {outer:?}")]
    NotSubgroup {
        inner: Vec<usize>,
        outer: Vec<usize>,
    },

    #[error("invalid joint distribution: {0}")]
    Joint(String),

    #[error("invalid channel: {0}")]
    Channel(String),

    #[error("Markov condition {condition} violated (max deviation {gap:.3e})")]
    Markov { condition: String, gap: f64 },

    #[error("degradation check failed for {tag} (max deviation {deviation:.3e})")]
    NotDegraded { tag: String, deviation: f64 },

    #[error("infeasible request: {0}")]
    Infeasible(String),

    #[error("impossible observation at index {index}: all likelihoods vanish")]
    DecodeFailure { index: usize },

    #[error("invalid code input: {0}")]
    Codec(String),

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}
