use std::path::PathBuf;

/// Every failure the library can report.
///
/// Variants are grouped into three classes that map onto process exit codes
/// (see [`Error::exit_code`]): input/validation problems, degenerate
/// statistics, and numerical failures.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("format error: {0}")]
    Format(String),
    #[error("truncated file: {0}")]
    Truncation(String),
    #[error("invalid data: {0}")]
    Data(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("value out of range: {0}")]
    Range(String),
    #[error("dimension mismatch: {0}")]
    Dim(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("degenerate statistic: {0}")]
    Degenerate(String),
    #[error("matrix is not symmetric (max |a_ij - a_ji| = {max_asymmetry:e})")]
    NotSymmetric { max_asymmetry: f64 },
    #[error("matrix is not positive semidefinite (min eigenvalue {min:e}, max eigenvalue {max:e})")]
    NotPsd { min: f64, max: f64 },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Exit code for bad input or failed validation.
pub const EXIT_INPUT: i32 = 2;
/// Exit code for degenerate statistics (constant ratings, too few frames).
pub const EXIT_DEGENERATE: i32 = 3;
/// Exit code for numerical failures in the linear algebra.
pub const EXIT_NUMERICAL: i32 = 4;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Wraps the error with a human-readable location, e.g. `system "sys3", layer 7`.
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// The innermost error, skipping any context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::InsufficientData(_) | Error::Degenerate(_) => EXIT_DEGENERATE,
            Error::NotSymmetric { .. } | Error::NotPsd { .. } | Error::Numerical(_) => {
                EXIT_NUMERICAL
            }
            _ => EXIT_INPUT,
        }
    }
}

pub(crate) trait ResultExt<T> {
    fn context_with<F: FnOnce() -> String>(self, f: F) -> Result<T>;
}

impl<T> ResultExt<T> for Result<T> {
    fn context_with<F: FnOnce() -> String>(self, f: F) -> Result<T> {
        self.map_err(|e| e.context(f()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_root_cause() {
        let e = Error::Degenerate("constant".into()).context("layer 3");
        assert_eq!(e.exit_code(), EXIT_DEGENERATE);
        assert_eq!(Error::Numerical("x".into()).exit_code(), EXIT_NUMERICAL);
        assert_eq!(Error::Schema("x".into()).exit_code(), EXIT_INPUT);
        assert!(e.to_string().starts_with("layer 3: "));
    }
}
