//! Failures carrying the process exit code. The convention: 2 for anything
//! the user can fix (bad files, bad flags, bad config), 3 for artifacts and
//! inputs that disagree about their schema, 4 for errors inside the pipeline
//! itself.

use samlp_core::Error;

#[derive(Debug)]
pub enum Failure {
    /// Unusable input or configuration — exit 2.
    Input(String),
    /// Schema or artifact-format incompatibility — exit 3.
    Schema(String),
    /// The pipeline failed on inputs that looked valid — exit 4.
    Internal(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Input(_) => 2,
            Failure::Schema(_) => 3,
            Failure::Internal(_) => 4,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Schema(m) | Failure::Internal(m) => m,
        }
    }
}

/// Errors escaping a validated-input stage: a schema complaint keeps its
/// meaning, everything else is the pipeline's fault.
impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        match e {
            Error::Schema(m) => Failure::Schema(format!("schema error: {m}")),
            other => Failure::Internal(other.to_string()),
        }
    }
}

/// Same split for errors raised while reading user-supplied files, where a
/// non-schema error means the input is bad rather than the pipeline.
pub fn schema_or_input(e: Error) -> Failure {
    match e {
        Error::Schema(m) => Failure::Schema(format!("schema error: {m}")),
        other => Failure::Input(other.to_string()),
    }
}

/// Shorthand for mapping a core error to [`Failure::Input`].
pub trait OrInput<T> {
    fn or_input(self) -> Result<T, Failure>;
}

impl<T> OrInput<T> for Result<T, Error> {
    fn or_input(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Input(e.to_string()))
    }
}
