use thiserror::Error;

use crate::netfile::NetfileError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Netfile { path: String, source: NetfileError },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Library(#[from] coherelab::Error),
}

impl CliError {
    /// 2 for numerical failures, 1 for everything the user can fix.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Library(e) if e.is_numerical() => 2,
            _ => 1,
        }
    }

    pub(crate) fn at(self, path: &str) -> Self {
        match self {
            CliError::Netfile { source, .. } => CliError::Netfile {
                path: path.to_string(),
                source,
            },
            other => other,
        }
    }
}

impl From<NetfileError> for CliError {
    fn from(source: NetfileError) -> Self {
        CliError::Netfile {
            path: String::new(),
            source,
        }
    }
}

macro_rules! via_library {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Library(e.into())
            }
        }
    )*};
}

via_library!(
    coherelab::RationalError,
    coherelab::NetworkError,
    coherelab::CoherenceError,
    coherelab::ConcentrationError,
    coherelab::TimeDomainError,
    coherelab::AggregateError
);
