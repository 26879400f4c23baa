//! Error types shared across the pipeline.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input is not valid JSON.
    #[error("parse error: {0}")]
    Parse(String),

    /// Input is valid JSON but violates the expected user-object or file schema.
    #[error("schema error: {0}")]
    Schema(String),

    /// Joining records with labels produced no rows.
    #[error("empty dataset: {0}")]
    EmptyDataset(String),

    /// The labels file assigns more than one label to a user id.
    #[error("duplicate label for user id {0}")]
    DuplicateLabel(String),

    /// Account creation date lies after the collection date.
    #[error("invalid account age: {0}")]
    InvalidAge(String),

    /// A class is too small to stratify at the requested granularity.
    #[error("stratification error: {0}")]
    Stratification(String),

    /// An operation that needs both classes saw only one.
    #[error("class absent: {0}")]
    ClassAbsent(String),

    /// Feature selection could not produce a usable result.
    #[error("selection error: {0}")]
    Selection(String),

    /// Model fitting failed.
    #[error("training error: {0}")]
    Training(String),

    /// Configuration search produced no usable evaluation.
    #[error("tuning error: {0}")]
    Tuning(String),

    /// The requested explanation mode is not applicable.
    #[error("mode error: {0}")]
    Mode(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }

    pub fn schema(msg: impl Into<String>) -> Self {
        Error::Schema(msg.into())
    }
}
