//! Command failures and their process exit codes.

use std::fmt;
use std::process::ExitCode;

/// Failure class, which fixes the exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Config,
    Data,
    Numeric,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self { kind: Kind::Config, message: message.into() }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self { kind: Kind::Data, message: message.into() }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self.kind {
            Kind::Config => 2,
            Kind::Data => 3,
            Kind::Numeric => 4,
        })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let label = match self.kind {
            Kind::Config => "configuration error",
            Kind::Data => "data error",
            Kind::Numeric => "numeric failure",
        };
        write!(f, "{label}: {}", self.message)
    }
}

impl From<ggm_core::Error> for CliError {
    fn from(e: ggm_core::Error) -> Self {
        use ggm_core::Error as E;
        let kind = match &e {
            E::Config(_) | E::Parameter(_) | E::Io(_) => Kind::Config,
            E::Input(_) | E::Shape(_) | E::Domain(_) => Kind::Data,
            E::Numeric(_) | E::State(_) | E::TimeLimit { .. } => Kind::Numeric,
        };
        Self { kind, message: e.to_string() }
    }
}

pub type CliResult<T> = Result<T, CliError>;
