use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}:{line}:{column}: {msg}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        msg: String,
    },

    #[error("field `{field}`: {what}")]
    Schema { field: String, what: String },

    #[error("field `{field}`: {source}")]
    Invalid {
        field: &'static str,
        #[source]
        source: distmatch::Error,
    },

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] distmatch::Error),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{failed} check(s) failed; see {report}")]
    CheckFailed { failed: usize, report: String },
}

impl CliError {
    pub fn schema(field: &str, what: String) -> Self {
        CliError::Schema {
            field: field.to_string(),
            what,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// 2 for bad input, 3 for numeric failures, 4 for failed checks.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. }
            | CliError::Schema { .. }
            | CliError::Invalid { .. }
            | CliError::Usage(_) => 2,
            CliError::Core(e) if e.is_validation() => 2,
            CliError::Core(_) => 3,
            CliError::CheckFailed { .. } => 4,
            CliError::Io { .. } => 1,
        }
    }
}
