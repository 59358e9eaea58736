use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error(transparent)]
    Core(#[from] coexist_core::Error),

    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),

    #[error("config parse: {0}")]
    Parse(#[from] toml::de::Error),

    #[error("config write: {0}")]
    Write(#[from] toml::ser::Error),

    #[error("CSV: {0}")]
    Csv(#[from] csv::Error),

    #[error("duplicate result row {0}")]
    DuplicateRow(String),

    #[error("no result rows to write")]
    EmptyRows,

    #[error("thread pool: {0}")]
    Pool(String),
}

impl SimError {
    pub fn config(field: &str, reason: impl Into<String>) -> Self {
        SimError::Config {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}

pub type SimResult<T> = Result<T, SimError>;
